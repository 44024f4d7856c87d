#include "mfmo/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfmo::evo {

// ---------------------------------------------------------------------------
// Design of experiments

namespace {

double min_pairwise_sq(const std::vector<Point>& unit_points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < unit_points.size(); ++i) {
    for (std::size_t j = i + 1; j < unit_points.size(); ++j) {
      best = std::min(best, squared_distance(unit_points[i], unit_points[j]));
    }
  }
  return best;
}

}  // namespace

std::vector<Point> maximin_lhd(std::size_t n, const Bounds& bounds, std::uint64_t seed, std::size_t restarts) {
  if (n == 0) return {};
  const std::size_t dim = bounds.size();
  Rng rng(seed);
  std::vector<Point> best_design;
  double best_score = -1.0;
  std::vector<std::size_t> perm(n);
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    std::vector<Point> unit(n, Point(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      shuffle(perm, rng);
      for (std::size_t i = 0; i < n; ++i) {
        unit[i][k] = (static_cast<double>(perm[i]) + 0.5) / static_cast<double>(n);
      }
    }
    const double score = n > 1 ? min_pairwise_sq(unit) : 0.0;
    if (score > best_score) {
      best_score = score;
      best_design = std::move(unit);
    }
  }
  std::vector<Point> design;
  design.reserve(n);
  for (const auto& u : best_design) design.push_back(bounds.denormalize(u));
  return design;
}

std::vector<std::size_t> maximin_subset(std::span<const Point> points, std::size_t m, const Bounds& bounds) {
  const std::size_t n = points.size();
  m = std::min(m, n);
  if (m == 0) return {};
  std::vector<Point> unit;
  unit.reserve(n);
  for (const auto& p : points) unit.push_back(bounds.normalize(p));

  Point centroid(bounds.size(), 0.0);
  for (const auto& u : unit) {
    for (std::size_t k = 0; k < u.size(); ++k) centroid[k] += u[k] / static_cast<double>(n);
  }
  std::size_t first = 0;
  double first_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = squared_distance(unit[i], centroid);
    if (d < first_d) {
      first_d = d;
      first = i;
    }
  }

  std::vector<std::size_t> chosen{first};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  taken[first] = true;
  while (chosen.size() < m) {
    const std::size_t last = chosen.back();
    std::size_t next = n;
    double next_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      nearest[i] = std::min(nearest[i], squared_distance(unit[i], unit[last]));
      if (nearest[i] > next_d) {
        next_d = nearest[i];
        next = i;
      }
    }
    taken[next] = true;
    chosen.push_back(next);
  }
  return chosen;
}

double min_pairwise_distance(std::span<const Point> points, const Bounds& bounds) {
  std::vector<Point> unit;
  unit.reserve(points.size());
  for (const auto& p : points) unit.push_back(bounds.normalize(p));
  return std::sqrt(min_pairwise_sq(unit));
}

// ---------------------------------------------------------------------------
// Differential evolution

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Rand1: return "DE/rand/1";
    case Strategy::Best1: return "DE/best/1";
    case Strategy::Rand2: return "DE/rand/2";
    case Strategy::Best2: return "DE/best/2";
    case Strategy::CurrentToRand1: return "DE/current-to-rand/1";
    case Strategy::CurrentToBest1: return "DE/current-to-best/1";
  }
  return "?";
}

RepairMode repair_mode_from_string(std::string_view s) {
  if (s == "reflect") return RepairMode::ReflectClamp;
  if (s == "clamp") return RepairMode::Clamp;
  throw Error("unknown bounds repair mode '" + std::string(s) + "' (expected reflect or clamp)");
}

std::string_view to_string(RepairMode m) { return m == RepairMode::ReflectClamp ? "reflect" : "clamp"; }

void repair(Point& v, const Bounds& bounds, RepairMode mode) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double lo = bounds.lower(k);
    const double hi = bounds.upper(k);
    if (mode == RepairMode::ReflectClamp) {
      if (v[k] < lo) v[k] = 2.0 * lo - v[k];
      else if (v[k] > hi) v[k] = 2.0 * hi - v[k];
    }
    v[k] = std::clamp(v[k], lo, hi);
  }
}

namespace {

// Draws `count` distinct indices in [0, n) excluding `exclude`.
std::array<std::size_t, 5> draw_donors(std::size_t n, std::size_t exclude, std::size_t count, Rng& rng) {
  std::array<std::size_t, 5> out{};
  for (std::size_t c = 0; c < count; ++c) {
    for (;;) {
      const std::size_t r = uniform_index(rng, n);
      if (r == exclude) continue;
      if (std::find(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(c), r) !=
          out.begin() + static_cast<std::ptrdiff_t>(c)) {
        continue;
      }
      out[c] = r;
      break;
    }
  }
  return out;
}

}  // namespace

Point de_mutant(Strategy strategy, std::span<const Point> parents, std::size_t i,
                std::span<const std::size_t> best_pool, double F, Rng& rng) {
  const std::size_t n = parents.size();
  if (n < 6) throw Error("DE mutation needs at least 6 parents, got " + std::to_string(n));
  const std::size_t dim = parents[i].size();
  auto pick_best = [&]() -> const Point& {
    if (best_pool.empty()) return parents[uniform_index(rng, n)];
    return parents[best_pool[uniform_index(rng, best_pool.size())]];
  };
  const auto r = draw_donors(n, i, 5, rng);
  const Point& xi = parents[i];
  const Point& x1 = parents[r[0]];
  const Point& x2 = parents[r[1]];
  const Point& x3 = parents[r[2]];
  const Point& x4 = parents[r[3]];
  const Point& x5 = parents[r[4]];
  Point v(dim);
  switch (strategy) {
    case Strategy::Rand1:
      for (std::size_t k = 0; k < dim; ++k) v[k] = x1[k] + F * (x2[k] - x3[k]);
      break;
    case Strategy::Best1: {
      const Point& b = pick_best();
      for (std::size_t k = 0; k < dim; ++k) v[k] = b[k] + F * (x1[k] - x2[k]);
      break;
    }
    case Strategy::Rand2:
      for (std::size_t k = 0; k < dim; ++k) v[k] = x1[k] + F * (x2[k] - x3[k]) + F * (x4[k] - x5[k]);
      break;
    case Strategy::Best2: {
      const Point& b = pick_best();
      for (std::size_t k = 0; k < dim; ++k) v[k] = b[k] + F * (x1[k] - x2[k]) + F * (x3[k] - x4[k]);
      break;
    }
    case Strategy::CurrentToRand1:
      for (std::size_t k = 0; k < dim; ++k) v[k] = xi[k] + F * (x1[k] - xi[k]) + F * (x2[k] - x3[k]);
      break;
    case Strategy::CurrentToBest1: {
      const Point& b = pick_best();
      for (std::size_t k = 0; k < dim; ++k) v[k] = xi[k] + F * (b[k] - xi[k]) + F * (x1[k] - x2[k]);
      break;
    }
  }
  return v;
}

Point binomial_crossover(const Point& parent, const Point& mutant, double crossover_rate, Rng& rng) {
  const std::size_t dim = parent.size();
  std::vector<std::size_t> differing;
  for (std::size_t k = 0; k < dim; ++k) {
    if (mutant[k] != parent[k]) differing.push_back(k);
  }
  const std::size_t j_rand = differing.empty() ? uniform_index(rng, dim) : differing[uniform_index(rng, differing.size())];
  Point child(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const bool take = uniform01(rng) < crossover_rate || k == j_rand;
    child[k] = take ? mutant[k] : parent[k];
  }
  return child;
}

std::vector<Point> de_offspring(std::span<const Point> parents, std::span<const std::size_t> best_pool,
                                const DeParams& params, const Bounds& bounds, std::uint64_t seed) {
  if (parents.size() < 6) {
    throw Error("de_offspring needs at least 6 parents, got " + std::to_string(parents.size()));
  }
  Rng rng(seed);
  std::vector<Point> children;
  children.reserve(parents.size() * kAllStrategies.size());
  for (Strategy s : kAllStrategies) {
    for (std::size_t i = 0; i < parents.size(); ++i) {
      Point v = de_mutant(s, parents, i, best_pool, params.F, rng);
      repair(v, bounds, params.repair);
      children.push_back(binomial_crossover(parents[i], v, params.crossover_rate, rng));
    }
  }
  return children;
}

ScalarDeResult de_minimize(const std::function<double(std::span<const double>)>& f, const Bounds& bounds,
                           const ScalarDeOptions& options, std::uint64_t seed, std::span<const Point> initial) {
  const std::size_t dim = bounds.size();
  const std::size_t np = std::max<std::size_t>(options.pop_size, 4);
  Rng rng(seed);
  auto eval = [&](const Point& x) {
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<Point> pop(np, Point(dim));
  for (auto& x : pop) {
    for (std::size_t k = 0; k < dim; ++k) x[k] = uniform(rng, bounds.lower(k), bounds.upper(k));
  }
  for (std::size_t i = 0; i < std::min(initial.size(), np); ++i) {
    pop[i] = initial[i];
    repair(pop[i], bounds, RepairMode::Clamp);
  }

  ScalarDeResult result;
  std::vector<double> fit(np);
  for (std::size_t i = 0; i < np; ++i) {
    fit[i] = eval(pop[i]);
    ++result.evaluations;
    if (fit[i] < result.value || result.best.empty()) {
      result.value = fit[i];
      result.best = pop[i];
    }
  }

  Point trial(dim);
  for (std::size_t g = 0; g < options.generations; ++g) {
    for (std::size_t i = 0; i < np; ++i) {
      const auto r = draw_donors(np, i, 3, rng);
      const std::size_t j_rand = uniform_index(rng, dim);
      for (std::size_t k = 0; k < dim; ++k) {
        if (k == j_rand || uniform01(rng) < options.crossover_rate) {
          trial[k] = pop[r[0]][k] + options.F * (pop[r[1]][k] - pop[r[2]][k]);
        } else {
          trial[k] = pop[i][k];
        }
      }
      repair(trial, bounds, RepairMode::ReflectClamp);
      const double ft = eval(trial);
      ++result.evaluations;
      if (ft <= fit[i]) {
        pop[i] = trial;
        fit[i] = ft;
        if (ft < result.value) {
          result.value = ft;
          result.best = trial;
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Pareto machinery

FrontIndexing nondominated_sort(std::span<const Objectives> objectives) {
  const std::size_t n = objectives.size();
  FrontIndexing out;
  out.rank.assign(n, 0);
  out.crowding.assign(n, 0.0);
  if (n == 0) return out;

  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(objectives[p], objectives[q])) {
        dominated_by_me[p].push_back(q);
        ++domination_count[q];
      } else if (dominates(objectives[q], objectives[p])) {
        dominated_by_me[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (domination_count[p] == 0) current.push_back(p);
  }
  std::size_t r = 0;
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      out.rank[p] = r;
      for (std::size_t q : dominated_by_me[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    out.fronts.push_back(std::move(current));
    current = std::move(next);
    ++r;
  }

  std::vector<Objectives> members;
  for (const auto& front : out.fronts) {
    members.clear();
    for (std::size_t i : front) members.push_back(objectives[i]);
    const auto cd = crowding_distance(members);
    for (std::size_t j = 0; j < front.size(); ++j) out.crowding[front[j]] = cd[j];
  }
  return out;
}

std::vector<double> crowding_distance(std::span<const Objectives> front) {
  const std::size_t n = front.size();
  std::vector<double> cd(n, 0.0);
  if (n <= 2) {
    std::fill(cd.begin(), cd.end(), kInfiniteCrowding);
    return cd;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < 2; ++m) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return front[a][m] < front[b][m]; });
    const double lo = front[order.front()][m];
    const double hi = front[order.back()][m];
    cd[order.front()] = kInfiniteCrowding;
    cd[order.back()] = kInfiniteCrowding;
    const double range = hi - lo;
    if (!(range > 0.0)) continue;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      if (std::isinf(cd[order[j]])) continue;
      cd[order[j]] += (front[order[j + 1]][m] - front[order[j - 1]][m]) / range;
    }
  }
  return cd;
}

std::vector<std::size_t> nondominated_indices(std::span<const Objectives> objectives) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < objectives.size() && !dominated; ++j) {
      dominated = j != i && dominates(objectives[j], objectives[i]);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// NSGA-II

namespace {

void sbx(Point& c1, Point& c2, const Bounds& bounds, double eta, Rng& rng) {
  for (std::size_t k = 0; k < c1.size(); ++k) {
    if (uniform01(rng) > 0.5) continue;
    const double yl = bounds.lower(k);
    const double yu = bounds.upper(k);
    if (std::abs(c1[k] - c2[k]) <= 1e-14 || !(yu > yl)) continue;
    const double y1 = std::min(c1[k], c2[k]);
    const double y2 = std::max(c1[k], c2[k]);
    const double rand = uniform01(rng);
    auto betaq_for = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
      if (rand <= 1.0 / alpha) return std::pow(rand * alpha, 1.0 / (eta + 1.0));
      return std::pow(1.0 / (2.0 - rand * alpha), 1.0 / (eta + 1.0));
    };
    const double bq1 = betaq_for(1.0 + 2.0 * (y1 - yl) / (y2 - y1));
    double v1 = std::clamp(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), yl, yu);
    const double bq2 = betaq_for(1.0 + 2.0 * (yu - y2) / (y2 - y1));
    double v2 = std::clamp(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), yl, yu);
    if (uniform01(rng) <= 0.5) std::swap(v1, v2);
    c1[k] = v1;
    c2[k] = v2;
  }
}

void polynomial_mutation(Point& y, const Bounds& bounds, double eta, double prob, Rng& rng) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (uniform01(rng) >= prob) continue;
    const double yl = bounds.lower(k);
    const double yu = bounds.upper(k);
    if (!(yu > yl)) continue;
    const double d1 = (y[k] - yl) / (yu - yl);
    const double d2 = (yu - y[k]) / (yu - yl);
    const double r = uniform01(rng);
    const double mut_pow = 1.0 / (eta + 1.0);
    double deltaq;
    if (r < 0.5) {
      const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
      deltaq = std::pow(val, mut_pow) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
      deltaq = 1.0 - std::pow(val, mut_pow);
    }
    y[k] = std::clamp(y[k] + deltaq * (yu - yl), yl, yu);
  }
}

}  // namespace

Nsga2Result nsga2_minimize(const BiObjective& f, const Bounds& bounds, const Nsga2Options& options,
                           std::uint64_t seed) {
  const std::size_t dim = bounds.size();
  const std::size_t np = std::max<std::size_t>(options.pop_size + options.pop_size % 2, 4);
  const double pm = options.mutation_prob > 0.0 ? options.mutation_prob : 1.0 / static_cast<double>(dim);
  Rng rng(seed);

  std::vector<Point> pop(np, Point(dim));
  for (auto& x : pop) {
    for (std::size_t k = 0; k < dim; ++k) x[k] = uniform(rng, bounds.lower(k), bounds.upper(k));
  }
  std::vector<Objectives> fit(np);
  for (std::size_t i = 0; i < np; ++i) fit[i] = f(pop[i]);
  FrontIndexing idx = nondominated_sort(fit);

  auto tournament = [&]() {
    const std::size_t a = uniform_index(rng, np);
    const std::size_t b = uniform_index(rng, np);
    if (idx.rank[a] != idx.rank[b]) return idx.rank[a] < idx.rank[b] ? a : b;
    if (idx.crowding[a] != idx.crowding[b]) return idx.crowding[a] > idx.crowding[b] ? a : b;
    return a;
  };

  for (std::size_t g = 0; g < options.generations; ++g) {
    std::vector<Point> offspring;
    offspring.reserve(np);
    while (offspring.size() < np) {
      Point c1 = pop[tournament()];
      Point c2 = pop[tournament()];
      if (uniform01(rng) <= options.crossover_prob) sbx(c1, c2, bounds, options.eta_c, rng);
      polynomial_mutation(c1, bounds, options.eta_m, pm, rng);
      polynomial_mutation(c2, bounds, options.eta_m, pm, rng);
      offspring.push_back(std::move(c1));
      offspring.push_back(std::move(c2));
    }
    std::vector<Point> merged = pop;
    std::vector<Objectives> merged_fit = fit;
    for (auto& c : offspring) {
      merged_fit.push_back(f(c));
      merged.push_back(std::move(c));
    }
    const FrontIndexing mi = nondominated_sort(merged_fit);
    std::vector<std::size_t> survivors;
    survivors.reserve(np);
    for (const auto& front : mi.fronts) {
      if (survivors.size() + front.size() <= np) {
        survivors.insert(survivors.end(), front.begin(), front.end());
        continue;
      }
      std::vector<std::size_t> last = front;
      std::stable_sort(last.begin(), last.end(),
                       [&](std::size_t a, std::size_t b) { return mi.crowding[a] > mi.crowding[b]; });
      survivors.insert(survivors.end(), last.begin(),
                       last.begin() + static_cast<std::ptrdiff_t>(np - survivors.size()));
      break;
    }
    std::vector<Point> next_pop;
    std::vector<Objectives> next_fit;
    next_pop.reserve(np);
    next_fit.reserve(np);
    for (std::size_t s : survivors) {
      next_pop.push_back(std::move(merged[s]));
      next_fit.push_back(merged_fit[s]);
    }
    pop = std::move(next_pop);
    fit = std::move(next_fit);
    idx = nondominated_sort(fit);
  }

  Nsga2Result result;
  for (std::size_t i : idx.fronts.front()) {
    const bool dup = std::any_of(result.set.begin(), result.set.end(), [&](const Point& p) { return p == pop[i]; });
    if (dup) continue;
    result.set.push_back(pop[i]);
    result.front.push_back(fit[i]);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Clustering

KMeansResult kmeans(std::span<const Point> points, std::size_t k, std::uint64_t seed, std::size_t max_iterations) {
  KMeansResult out;
  const std::size_t n = points.size();
  if (n == 0 || k == 0) return out;
  k = std::min(k, n);
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<std::size_t> seeds{uniform_index(rng, n)};
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (seeds.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], points[seeds.back()]));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        target -= d2[i];
        pick = i;
        if (target < 0.0) break;
      }
    } else {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(seeds.begin(), seeds.end(), i) == seeds.end()) free.push_back(i);
      }
      pick = free[uniform_index(rng, free.size())];
    }
    seeds.push_back(pick);
  }
  for (std::size_t s : seeds) out.centroids.push_back(points[s]);

  const std::size_t dim = points.front().size();
  out.assignment.assign(n, k);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iterations, 1); ++it) {
    bool changed = false;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], out.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist[i] = best_d;
      if (out.assignment[i] != best) {
        out.assignment[i] = best;
        changed = true;
      }
    }
    // Empty clusters steal the point farthest from its own centroid.
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : out.assignment) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[out.assignment[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      if (far == n) continue;
      --counts[out.assignment[far]];
      out.assignment[far] = c;
      ++counts[c];
      dist[far] = 0.0;
      out.centroids[c] = points[far];
      changed = true;
    }

    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      Point mean(dim, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (out.assignment[i] != c) continue;
        for (std::size_t j = 0; j < dim; ++j) mean[j] += points[i][j];
      }
      for (double& v : mean) v /= static_cast<double>(counts[c]);
      out.centroids[c] = std::move(mean);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += squared_distance(points[i], out.centroids[out.assignment[i]]);
    out.inertia_trace.push_back(inertia);
    out.iterations = it + 1;
    if (!changed && it > 0) break;
  }

  out.members.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) out.members[out.assignment[i]].push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Hypervolume

HypervolumeResult hypervolume_2d(std::span<const Objectives> front, const Objectives& reference) {
  std::vector<Objectives> pts;
  pts.reserve(front.size());
  for (const auto& p : front) {
    if (p[0] < reference[0] && p[1] < reference[1]) pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double ceiling = reference[1];
  for (const auto& p : pts) {
    if (p[1] < ceiling) {
      area += (reference[0] - p[0]) * (ceiling - p[1]);
      ceiling = p[1];
    }
  }
  return {area, reference};
}

Normalization Normalization::from_points(std::span<const Objectives> points) {
  Normalization n;
  n.min = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  n.max = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  n.extend(points);
  return n;
}

void Normalization::extend(std::span<const Objectives> points) {
  for (const auto& p : points) {
    for (std::size_t m = 0; m < 2; ++m) {
      min[m] = std::min(min[m], p[m]);
      max[m] = std::max(max[m], p[m]);
    }
  }
}

Objectives Normalization::apply(const Objectives& f) const {
  Objectives out;
  for (std::size_t m = 0; m < 2; ++m) {
    const double range = max[m] - min[m];
    out[m] = range > 0.0 ? (f[m] - min[m]) / range : 0.0;
  }
  return out;
}

double normalized_hypervolume(std::span<const Objectives> front, const Normalization& norm,
                              const Objectives& reference) {
  std::vector<Objectives> scaled;
  scaled.reserve(front.size());
  for (const auto& p : front) scaled.push_back(norm.apply(p));
  return hypervolume_2d(scaled, reference).value;
}

}  // namespace mfmo::evo
