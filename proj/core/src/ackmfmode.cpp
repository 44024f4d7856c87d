#include "mfmo/ackmfmode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfmo::opt {

using store::EvaluationRecord;
using store::Origin;
using store::SampleDatabase;

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Full: return "full";
    case Mode::HfOnly: return "hf-only";
    case Mode::LfOnly: return "lf-only";
  }
  return "?";
}

Mode mode_from_string(std::string_view s) {
  if (s == "full") return Mode::Full;
  if (s == "hf-only") return Mode::HfOnly;
  if (s == "lf-only") return Mode::LfOnly;
  throw Error("unknown mode '" + std::string(s) + "' (expected full, hf-only or lf-only)");
}

void OptimizerConfig::validate() const {
  if (n_s_hf < 1) throw Error("n_s_hf must be >= 1");
  if (n_s_lf < n_s_hf) throw Error("n_s_lf must be >= n_s_hf");
  if (nfe_max_hf < n_s_hf) throw Error("nfe_max_hf must be >= n_s_hf");
  if (mode == Mode::LfOnly && lf_only_budget < n_s_lf) throw Error("lf_only_budget must be >= n_s_lf");
  if (n_p < 6) throw Error("n_p must be >= 6 (six DE strategies need distinct donors)");
  if (!(F > 0.0) || F > 2.0) throw Error("F must be in (0, 2]");
  if (p_c < 0.0 || p_c > 1.0) throw Error("p_c must be in [0, 1]");
  if (K < 1) throw Error("K must be >= 1");
  if (n_near < 3) throw Error("n_near must be >= 3");
  if (ei_pop < 4 || ei_gens < 1) throw Error("ei_nsga2 needs pop >= 4 and gens >= 1");
  if (trust_region_inflation < 0.0) throw Error("trust_region_inflation must be >= 0");
  if (dedup_eps < 0.0) throw Error("dedup_eps must be >= 0");
  if (surrogate.likelihood_pop < 4 || surrogate.likelihood_gens < 1) {
    throw Error("likelihood search needs pop >= 4 and gens >= 1");
  }
  if (!(surrogate.nugget > 0.0) || surrogate.nugget_max < surrogate.nugget) {
    throw Error("need 0 < nugget <= nugget_max");
  }
}

Optimizer::Optimizer(OptimizerConfig config, Bounds bounds, std::shared_ptr<eval::Evaluator> evaluator)
    : config_(std::move(config)),
      bounds_(std::move(bounds)),
      evaluator_(std::move(evaluator)),
      warm_theta_(2),
      warm_theta_d_(2),
      warm_rho_(2) {
  config_.validate();
  if (!evaluator_) throw Error("optimizer needs an evaluator");
}

std::size_t Optimizer::evaluate_and_insert(SampleDatabase& db, const std::vector<Point>& xs,
                                           const std::vector<Fidelity>& fidelities, const std::vector<Origin>& origins,
                                           std::size_t iteration, std::vector<std::string>& diagnostics) {
  if (xs.empty()) return 0;
  std::vector<eval::EvaluationRequest> requests;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    requests.push_back({"r" + std::to_string(++request_counter_), fidelities[i], xs[i], std::nullopt});
  }
  const auto responses = evaluator_->evaluate_batch(requests);
  std::size_t inserted = 0;
  std::string failure;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto& r = responses[i];
    if (!r.ok) {
      if (failure.empty()) failure = r.id + " (" + std::string(to_string(fidelities[i])) + "): " + r.message;
      continue;
    }
    if (db.insert(EvaluationRecord{xs[i], fidelities[i], r.f1, r.f2, iteration, origins[i]})) {
      ++inserted;
    } else {
      diagnostics.push_back("duplicate " + std::string(to_string(fidelities[i])) + " design skipped");
    }
  }
  if (!failure.empty()) throw EvaluatorFailure("evaluation failed: " + failure);
  return inserted;
}

SampleDatabase Optimizer::initialize() {
  SampleDatabase db(bounds_, config_.dedup_eps);
  const auto lhd = evo::maximin_lhd(config_.n_s_lf, bounds_, derive_seed(config_.seed, "lhd"));
  const auto nested = evo::maximin_subset(lhd, config_.n_s_hf, bounds_);

  std::vector<Point> xs;
  std::vector<Fidelity> fid;
  if (config_.mode != Mode::HfOnly) {
    for (const auto& x : lhd) {
      xs.push_back(x);
      fid.push_back(Fidelity::LF);
    }
  }
  if (config_.mode != Mode::LfOnly) {
    for (std::size_t i : nested) {
      xs.push_back(lhd[i]);
      fid.push_back(Fidelity::HF);
    }
  }
  std::vector<std::string> diag;
  evaluate_and_insert(db, xs, fid, std::vector<Origin>(xs.size(), Origin::Initial), 0, diag);
  return db;
}

ParentSet Optimizer::select_parents(const SampleDatabase& db, std::uint64_t seed) const {
  const auto records = db.records(primary_fidelity());
  if (records.empty()) throw Error("parent selection needs at least one evaluated design");
  std::vector<Objectives> f;
  for (const auto& r : records) f.push_back(r.objectives());
  const auto idx = evo::nondominated_sort(f);

  std::vector<std::size_t> order;
  for (const auto& front : idx.fronts) {
    std::vector<std::size_t> members = front;
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return idx.crowding[a] > idx.crowding[b]; });
    order.insert(order.end(), members.begin(), members.end());
  }

  ParentSet out;
  const std::size_t take = std::min(config_.n_p, order.size());
  for (std::size_t k = 0; k < take; ++k) {
    out.x.push_back(records[order[k]].x);
    if (idx.rank[order[k]] == 0) out.best_pool.push_back(k);
  }
  if (out.x.size() < config_.n_p) {
    Rng rng(seed);
    const auto& rank0 = idx.fronts.front();
    while (out.x.size() < config_.n_p) {
      out.best_pool.push_back(out.x.size());
      out.x.push_back(records[rank0[uniform_index(rng, rank0.size())]].x);
    }
  }
  return out;
}

std::vector<std::unique_ptr<surrogate::Model>> Optimizer::fit_models(const SampleDatabase& db,
                                                                     std::span<const EvaluationRecord> primary,
                                                                     std::span<const EvaluationRecord> lf,
                                                                     std::uint64_t seed, bool global) {
  const auto& s = config_.surrogate;
  std::vector<Point> Xp;
  for (const auto& r : primary) Xp.push_back(bounds_.normalize(r.x));

  std::vector<std::unique_ptr<surrogate::Model>> models;
  for (std::size_t obj = 0; obj < 2; ++obj) {
    surrogate::FitOptions opts;
    opts.search = {s.likelihood_pop, s.likelihood_gens, 0.8, 0.9};
    opts.nugget = s.nugget;
    opts.nugget_max = s.nugget_max;
    opts.standardize = s.standardize;
    opts.seed = derive_seed(seed, "objective", obj);
    if (global && s.warm_start) {
      opts.warm_theta = warm_theta_[obj];
      opts.warm_theta_d = warm_theta_d_[obj];
      opts.warm_rho = warm_rho_[obj];
    }
    std::vector<double> yp;
    for (const auto& r : primary) yp.push_back(obj == 0 ? r.f1 : r.f2);

    if (config_.mode != Mode::Full) {
      auto m = surrogate::KrigingModel::fit(Xp, yp, opts);
      if (global) warm_theta_[obj] = m.params().theta;
      models.push_back(std::make_unique<surrogate::KrigingModel>(std::move(m)));
      continue;
    }

    std::vector<Point> Xl;
    std::vector<double> yl;
    for (const auto& r : lf) {
      Xl.push_back(bounds_.normalize(r.x));
      yl.push_back(obj == 0 ? r.f1 : r.f2);
    }
    std::optional<std::vector<double>> lf_at_hf(std::in_place);
    for (const auto& r : primary) {
      const EvaluationRecord* twin = db.find(r.x, Fidelity::LF);
      if (!twin) {
        lf_at_hf.reset();
        break;
      }
      lf_at_hf->push_back(obj == 0 ? twin->f1 : twin->f2);
    }
    auto m = surrogate::CoKrigingModel::fit(Xp, yp, Xl, yl, std::move(lf_at_hf), opts);
    if (global) {
      warm_theta_[obj] = m.lf_params().theta;
      warm_theta_d_[obj] = m.d_params().theta;
      warm_rho_[obj] = m.rho();
    }
    models.push_back(std::make_unique<surrogate::CoKrigingModel>(std::move(m)));
  }
  return models;
}

Objectives Optimizer::predict(const std::vector<std::unique_ptr<surrogate::Model>>& models, const Point& x,
                              std::array<double, 2>* mse) const {
  const Point u = bounds_.normalize(x);
  Objectives out{};
  for (std::size_t obj = 0; obj < 2; ++obj) {
    const auto p = models[obj]->predict(u);
    out[obj] = p.mean;
    if (mse) (*mse)[obj] = p.mse;
  }
  return out;
}

namespace {

bool near_any(const std::vector<Point>& chosen, const Point& x, const Bounds& b, double eps) {
  const Point u = b.normalize(x);
  for (const auto& c : chosen) {
    if (chebyshev_distance(b.normalize(c), u) < eps) return true;
  }
  return false;
}

}  // namespace

GlobalInfill Optimizer::global_infill(SampleDatabase& db, const ParentSet& parents, std::size_t iteration) {
  GlobalInfill out;
  const Fidelity pf = primary_fidelity();
  const evo::DeParams de{config_.F, config_.p_c, config_.repair};
  const auto offspring =
      evo::de_offspring(parents.x, parents.best_pool, de, bounds_, derive_seed(config_.seed, "de", iteration));

  const auto primary = db.records(pf);
  const auto lf = db.records(Fidelity::LF);
  const auto models = fit_models(db, primary, lf, derive_seed(config_.seed, "global-fit", iteration), true);

  std::vector<Objectives> pred;
  pred.reserve(offspring.size());
  for (const auto& x : offspring) pred.push_back(predict(models, x));
  const auto idx = evo::nondominated_sort(pred);

  // Candidate order: shuffled predicted rank 0, then later fronts by
  // decreasing crowding.
  Rng rng(derive_seed(config_.seed, "global-pick", iteration));
  std::vector<std::size_t> order = idx.fronts.front();
  shuffle(order, rng);
  for (std::size_t r = 1; r < idx.fronts.size(); ++r) {
    std::vector<std::size_t> members = idx.fronts[r];
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return idx.crowding[a] > idx.crowding[b]; });
    order.insert(order.end(), members.begin(), members.end());
  }

  const double eps = config_.dedup_eps;
  const std::size_t remaining = primary_budget() - std::min(primary_budget(), db.count(pf));
  std::vector<Point> chosen;
  std::size_t k = 0;
  for (; k < order.size(); ++k) {
    const Point& x = offspring[order[k]];
    if (db.is_duplicate(x, pf) || near_any(chosen, x, bounds_, eps)) continue;
    out.hf = x;
    chosen.push_back(x);
    break;
  }
  if (!out.hf) {
    out.diagnostics.push_back("every offspring duplicates an archived design; no global infill");
    return out;
  }
  if (config_.mode != Mode::HfOnly) {
    for (++k; k < order.size() && out.lf.size() < 2; ++k) {
      const Point& x = offspring[order[k]];
      if (db.is_duplicate(x, Fidelity::LF) || near_any(chosen, x, bounds_, eps)) continue;
      out.lf.push_back(x);
      chosen.push_back(x);
    }
  }

  std::vector<Point> xs;
  std::vector<Fidelity> fid;
  std::vector<Origin> origin;
  if (remaining > 0) {
    xs.push_back(*out.hf);
    fid.push_back(pf);
    origin.push_back(Origin::GlobalInfill);
    if (config_.mode == Mode::Full && !db.is_duplicate(*out.hf, Fidelity::LF)) {
      xs.push_back(*out.hf);
      fid.push_back(Fidelity::LF);
      origin.push_back(Origin::Colocated);
    }
  }
  std::size_t lf_allowed = out.lf.size();
  if (config_.mode == Mode::LfOnly) lf_allowed = std::min(lf_allowed, remaining > 0 ? remaining - 1 : 0);
  for (std::size_t i = 0; i < lf_allowed; ++i) {
    xs.push_back(out.lf[i]);
    fid.push_back(Fidelity::LF);
    origin.push_back(Origin::GlobalInfill);
  }
  out.lf.resize(lf_allowed);
  evaluate_and_insert(db, xs, fid, origin, iteration, out.diagnostics);
  return out;
}

LocalInfill Optimizer::local_infill(SampleDatabase& db, const Point& center, std::size_t iteration) {
  LocalInfill out;
  const Fidelity pf = primary_fidelity();
  const auto near_primary = db.nearest(center, pf, config_.n_near);
  if (near_primary.size() < 3) {
    out.skipped = true;
    out.diagnostics.push_back("local infill skipped: fewer than 3 designs near the centre");
    return out;
  }
  std::vector<EvaluationRecord> near_lf;
  if (config_.mode == Mode::Full) near_lf = db.nearest(center, Fidelity::LF, 2 * config_.n_near);
  const auto models = fit_models(db, near_primary, near_lf, derive_seed(config_.seed, "local-fit", iteration), false);

  const Objectives fmin = db.minima(pf);
  auto ei = [&](std::span<const double> x) -> Objectives {
    const Point u = bounds_.normalize(Point(x.begin(), x.end()));
    Objectives e{};
    for (std::size_t obj = 0; obj < 2; ++obj) {
      e[obj] = -surrogate::expected_improvement(models[obj]->predict(u), fmin[obj]);
    }
    return e;
  };

  Bounds box = bounds_;
  if (config_.trust_region) {
    std::vector<double> lo(bounds_.size()), hi(bounds_.size());
    for (std::size_t k = 0; k < bounds_.size(); ++k) {
      double a = near_primary.front().x[k], b = a;
      for (const auto& r : near_primary) {
        a = std::min(a, r.x[k]);
        b = std::max(b, r.x[k]);
      }
      const double pad = std::max(0.5 * config_.trust_region_inflation * (b - a), 1e-6 * bounds_.width(k));
      lo[k] = std::max(bounds_.lower(k), a - pad);
      hi[k] = std::min(bounds_.upper(k), b + pad);
    }
    box = Bounds(std::move(lo), std::move(hi));
  }

  evo::Nsga2Options nopts;
  nopts.pop_size = config_.ei_pop;
  nopts.generations = config_.ei_gens;
  const auto res = evo::nsga2_minimize(ei, box, nopts, derive_seed(config_.seed, "local-nsga", iteration));

  bool any_positive = false;
  for (const auto& f : res.front) any_positive = any_positive || f[0] < 0.0 || f[1] < 0.0;
  if (res.set.empty() || !any_positive) {
    out.skipped = true;
    out.diagnostics.push_back("local infill skipped: expected improvement is zero across the EI front");
    return out;
  }

  // Cluster in min-max normalized EI space.
  const auto norm = evo::Normalization::from_points(res.front);
  std::vector<Point> pts;
  for (const auto& f : res.front) {
    const auto g = norm.apply(f);
    pts.push_back({g[0], g[1]});
  }
  const auto km = evo::kmeans(pts, config_.K, derive_seed(config_.seed, "kmeans", iteration));

  Rng rng(derive_seed(config_.seed, "local-pick", iteration));
  const double eps = config_.dedup_eps;
  std::size_t remaining = primary_budget() - std::min(primary_budget(), db.count(pf));
  std::vector<Point> xs;
  std::vector<Fidelity> fid;
  std::vector<Origin> origin;
  std::vector<Point> planned_primary, planned_lf;
  auto plan = [&](const Point& x, Fidelity f, Origin o) {
    auto& planned = f == pf ? planned_primary : planned_lf;
    if (db.is_duplicate(x, f) || near_any(planned, x, bounds_, eps)) return false;
    if (f == pf && config_.mode == Mode::LfOnly) {
      if (remaining == 0) return false;
      --remaining;
    }
    planned.push_back(x);
    xs.push_back(x);
    fid.push_back(f);
    origin.push_back(o);
    return true;
  };

  for (std::size_t c = 0; c < km.members.size(); ++c) {
    const auto& members = km.members[c];
    if (members.empty()) continue;
    std::size_t centre = members.front();
    double best = squared_distance(pts[centre], km.centroids[c]);
    for (std::size_t m : members) {
      const double d = squared_distance(pts[m], km.centroids[c]);
      if (d < best) {
        best = d;
        centre = m;
      }
    }
    std::vector<std::size_t> others;
    for (std::size_t m : members) {
      if (m != centre) others.push_back(m);
    }
    shuffle(others, rng);
    while (others.size() < 2) others.push_back(centre);
    others.resize(2);

    const Point& xc = res.set[centre];
    if (config_.mode == Mode::LfOnly) {
      if (plan(xc, Fidelity::LF, Origin::LocalInfill)) out.hf.push_back(xc);
    } else if (remaining > 0 && plan(xc, Fidelity::HF, Origin::LocalInfill)) {
      --remaining;
      out.hf.push_back(xc);
      if (config_.mode == Mode::Full) plan(xc, Fidelity::LF, Origin::Colocated);
    } else if (remaining == 0) {
      out.diagnostics.push_back("HF budget exhausted; cluster " + std::to_string(c + 1) + " HF infill skipped");
    }
    if (config_.mode == Mode::HfOnly) continue;
    for (std::size_t o : others) {
      const Point& xl = res.set[o];
      if (config_.mode == Mode::LfOnly) {
        if (plan(xl, Fidelity::LF, Origin::LocalInfill)) out.lf.push_back(xl);
      } else if (plan(xl, Fidelity::LF, Origin::LocalInfill)) {
        out.lf.push_back(xl);
      }
    }
  }
  evaluate_and_insert(db, xs, fid, origin, iteration, out.diagnostics);
  return out;
}

std::vector<HvTracePoint> hv_trace(const SampleDatabase& db, const evo::Normalization& norm,
                                   std::size_t last_iteration, const Objectives& reference) {
  std::size_t last = last_iteration;
  for (const auto& r : db.records()) last = std::max(last, r.iteration);
  std::vector<HvTracePoint> trace;
  std::vector<Objectives> front;
  const auto& recs = db.records();
  std::size_t next = 0;
  std::size_t hf = 0;
  for (std::size_t t = 0; t <= last; ++t) {
    // Records are stored in non-decreasing iteration order.
    while (next < recs.size() && recs[next].iteration <= t) {
      if (recs[next].fidelity == Fidelity::HF) {
        front.push_back(recs[next].objectives());
        ++hf;
      }
      ++next;
    }
    const auto nd = evo::nondominated_indices(front);
    std::vector<Objectives> kept;
    for (std::size_t i : nd) kept.push_back(front[i]);
    front = kept;
    trace.push_back({t, hf, front.empty() ? 0.0 : evo::normalized_hypervolume(front, norm, reference)});
  }
  return trace;
}

RunResult Optimizer::run(const Progress& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result{SampleDatabase(bounds_, config_.dedup_eps), {}, {}, {}, {}, 0.0, true, {}};
  warm_theta_.assign(2, std::nullopt);
  warm_theta_d_.assign(2, std::nullopt);
  warm_rho_.assign(2, std::nullopt);
  request_counter_ = 0;

  SampleDatabase& db = result.db;
  const Fidelity pf = primary_fidelity();
  std::size_t iteration = 0;
  evo::Normalization progress_norm;

  auto hv_now = [&] {
    if (db.count(Fidelity::HF) == 0) return 0.0;
    return evo::normalized_hypervolume(db.hf_pareto().front(), progress_norm);
  };

  try {
    db = initialize();
    if (db.count(Fidelity::HF) > 0) {
      std::vector<Objectives> f;
      for (const auto& r : db.records(Fidelity::HF)) f.push_back(r.objectives());
      progress_norm = evo::Normalization::from_points(f);
    }
    IterationReport init;
    init.hf_count = db.count(Fidelity::HF);
    init.lf_count = db.count(Fidelity::LF);
    init.hv_progress = hv_now();
    result.iterations.push_back(init);
    if (progress) progress(init);

    std::size_t stall = 0;
    while (db.count(pf) < primary_budget()) {
      ++iteration;
      const std::size_t before = db.size();
      IterationReport rep;
      rep.iteration = iteration;
      const auto parents = select_parents(db, derive_seed(config_.seed, "parents", iteration));
      auto g = global_infill(db, parents, iteration);
      rep.global_infill = g.hf;
      rep.diagnostics = std::move(g.diagnostics);
      if (g.hf && db.count(pf) < primary_budget()) {
        auto l = local_infill(db, *g.hf, iteration);
        rep.local_infill = l.hf;
        rep.diagnostics.insert(rep.diagnostics.end(), l.diagnostics.begin(), l.diagnostics.end());
      }
      rep.hf_count = db.count(Fidelity::HF);
      rep.lf_count = db.count(Fidelity::LF);
      rep.hv_progress = hv_now();
      stall = db.size() == before ? stall + 1 : 0;
      if (stall >= config_.max_stall) {
        rep.diagnostics.push_back("no new designs for " + std::to_string(stall) + " iterations; stopping");
      }
      result.iterations.push_back(rep);
      if (progress) progress(rep);
      if (stall >= config_.max_stall) break;
    }

    if (config_.mode == Mode::LfOnly && db.count(Fidelity::LF) > 0) {
      // Rescore the LF Pareto set at HF.
      // Most crowded-apart members first when the set exceeds the HF budget.
      const auto lf_front = db.pareto(Fidelity::LF);
      std::vector<std::size_t> order(lf_front.members.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return lf_front.crowding[a] > lf_front.crowding[b]; });
      const std::size_t room = config_.nfe_max_hf - std::min(config_.nfe_max_hf, db.count(Fidelity::HF));
      if (order.size() > room) order.resize(room);
      std::sort(order.begin(), order.end());
      std::vector<Point> xs;
      for (std::size_t i : order) xs.push_back(lf_front.members[i].x);
      std::vector<std::string> diag;
      evaluate_and_insert(db, xs, std::vector<Fidelity>(xs.size(), Fidelity::HF),
                          std::vector<Origin>(xs.size(), Origin::Colocated), iteration, diag);
    }
  } catch (const EvaluatorFailure& e) {
    result.complete = false;
    result.failure = e.what();
  }

  if (db.count(Fidelity::HF) > 0) {
    result.pareto = db.hf_pareto().members;
    std::vector<Objectives> f;
    for (const auto& r : db.records(Fidelity::HF)) f.push_back(r.objectives());
    result.normalization = evo::Normalization::from_points(f);
  }
  result.trace = hv_trace(db, result.normalization, iteration);
  for (auto& rep : result.iterations) {
    if (rep.iteration < result.trace.size()) rep.hv = result.trace[rep.iteration].hv;
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace mfmo::opt
