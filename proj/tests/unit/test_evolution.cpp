#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/oracles.hpp"
#include "mfmo/evolution.hpp"

using namespace mfmo;
using namespace mfmo::evo;

namespace {

std::vector<Objectives> random_objectives(std::size_t n, Rng& rng, bool integer_grid) {
  std::vector<Objectives> f(n);
  for (auto& v : f) {
    v = integer_grid ? Objectives{std::floor(uniform(rng, 0, 8)), std::floor(uniform(rng, 0, 8))}
                     : Objectives{uniform01(rng), uniform01(rng)};
  }
  return f;
}

std::vector<oracle::Obj> as_oracle(const std::vector<Objectives>& f) {
  return {f.begin(), f.end()};
}

}  // namespace

TEST_SUITE("evolution") {
  TEST_CASE("maximin lhd") {
    const auto one = maximin_lhd(1, Bounds::unit(2), 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0][0] == doctest::Approx(0.5));
    CHECK(one[0][1] == doctest::Approx(0.5));

    auto ten = maximin_lhd(10, Bounds::unit(1), 3);
    std::sort(ten.begin(), ten.end());
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(ten[i][0] >= i / 10.0);
      CHECK(ten[i][0] <= (i + 1) / 10.0);
    }

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto many = maximin_lhd(20, Bounds::unit(2), seed, 50);
      const auto single = maximin_lhd(20, Bounds::unit(2), seed, 1);
      CHECK(min_pairwise_distance(many, Bounds::unit(2)) >= min_pairwise_distance(single, Bounds::unit(2)));
    }
  }

  TEST_CASE("maximin subset is nested and distinct") {
    const auto pts = maximin_lhd(100, Bounds::unit(3), 9);
    const auto idx = maximin_subset(pts, 50, Bounds::unit(3));
    CHECK(idx.size() == 50);
    auto sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }

  TEST_CASE("de offspring size and degenerate cases") {
    Rng rng(1);
    std::vector<Point> parents(50, Point(4));
    for (auto& p : parents) {
      for (auto& v : p) v = uniform01(rng);
    }
    std::vector<std::size_t> best{0, 1, 2};
    const auto kids = de_offspring(parents, best, {}, Bounds::unit(4), 3);
    CHECK(kids.size() == 300);
    for (const auto& k : kids) CHECK(Bounds::unit(4).contains(k));

    const std::vector<Point> same(8, Point{0.3, 0.7});
    const std::vector<std::size_t> all{0};
    for (const auto& k : de_offspring(same, all, {}, Bounds::unit(2), 4)) CHECK(k == Point{0.3, 0.7});
  }

  TEST_CASE("F = 0 rand/1 mutant equals a donor") {
    Rng rng(2);
    std::vector<Point> parents;
    for (int i = 0; i < 8; ++i) parents.push_back({uniform01(rng), uniform01(rng), uniform01(rng)});
    const std::vector<std::size_t> best{0};
    Rng r2(11);
    const auto m = de_mutant(Strategy::Rand1, parents, 0, best, 0.0, r2);
    const bool is_other_parent =
        std::find(parents.begin() + 1, parents.end(), m) != parents.end();
    CHECK(is_other_parent);
    // Crossover rate 1 copies the mutant wholesale.
    Rng r3(12);
    CHECK(binomial_crossover(parents[0], m, 1.0, r3) == m);
  }

  TEST_CASE("repair") {
    Point v{-0.2, 1.3, 0.5, 5.0};
    repair(v, Bounds::unit(4), RepairMode::ReflectClamp);
    CHECK(v[0] == doctest::Approx(0.2));
    CHECK(v[1] == doctest::Approx(0.7));
    CHECK(v[2] == doctest::Approx(0.5));
    CHECK(v[3] == doctest::Approx(0.0));
    Point w{-0.2, 1.3};
    repair(w, Bounds::unit(2), RepairMode::Clamp);
    CHECK(w == Point{0.0, 1.0});
  }

  TEST_CASE("nondominated sort small cases") {
    const std::vector<Objectives> pair{{1, 2}, {2, 1}};
    const auto a = nondominated_sort(pair);
    CHECK(a.rank == std::vector<std::size_t>{0, 0});
    const std::vector<Objectives> chain{{1, 1}, {2, 2}, {3, 3}};
    const auto b = nondominated_sort(chain);
    CHECK(b.rank == std::vector<std::size_t>{0, 1, 2});
    const std::vector<Objectives> dup{{1, 1}, {1, 1}, {2, 0}};
    CHECK(nondominated_sort(dup).rank == std::vector<std::size_t>{0, 0, 0});
  }

  TEST_CASE("nondominated sort matches peeling oracle") {
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
      const auto f = random_objectives(100, rng, t % 2 == 0);
      CHECK(nondominated_sort(f).rank == oracle::ranks(as_oracle(f)));
    }
  }

  TEST_CASE("crowding distance") {
    const std::vector<Objectives> two{{0, 1}, {1, 0}};
    for (double d : crowding_distance(two)) CHECK(std::isinf(d));
    const std::vector<Objectives> three{{0, 1}, {0.5, 0.5}, {1, 0}};
    const auto c = crowding_distance(three);
    CHECK(std::isinf(c[0]));
    CHECK(c[1] == doctest::Approx(2.0));
    CHECK(std::isinf(c[2]));
    const std::vector<Objectives> flat{{0, 1}, {0.5, 1}, {1, 1}};
    const auto d = crowding_distance(flat);
    CHECK(d[1] == doctest::Approx(1.0));
  }

  TEST_CASE("nsga2 on the two-parabola problem") {
    const BiObjective f = [](std::span<const double> x) {
      return Objectives{x[0] * x[0], (x[0] - 1) * (x[0] - 1)};
    };
    Nsga2Options opt;
    opt.pop_size = 40;
    opt.generations = 50;
    const Bounds box({-1.0}, {2.0});
    const auto r = nsga2_minimize(f, box, opt, 21);
    REQUIRE_FALSE(r.set.empty());
    for (std::size_t i = 0; i < r.set.size(); ++i) {
      CHECK(r.set[i][0] >= -0.05);
      CHECK(r.set[i][0] <= 1.05);
      const double f1 = r.front[i][0];
      const double analytic = std::pow(1.0 - std::sqrt(f1), 2);
      CHECK(std::abs(r.front[i][1] - analytic) <= 0.05);
    }
    const auto again = nsga2_minimize(f, box, opt, 21);
    CHECK(again.set == r.set);
    CHECK(again.front == r.front);

    const BiObjective same = [](std::span<const double> x) { return Objectives{x[0] * x[0], x[0] * x[0]}; };
    const auto s = nsga2_minimize(same, box, opt, 3);
    for (const auto& x : s.set) CHECK(std::abs(x[0]) < 0.05);
  }

  TEST_CASE("kmeans") {
    const std::vector<Point> pts{{0, 0}, {2, 0}, {0, 4}, {2, 4}};
    const auto one = kmeans(pts, 1, 1);
    CHECK(one.centroids[0][0] == doctest::Approx(1.0));
    CHECK(one.centroids[0][1] == doctest::Approx(2.0));

    Rng rng(4);
    std::vector<Point> blobs;
    std::vector<int> label;
    for (int i = 0; i < 40; ++i) {
      const int l = i % 2;
      blobs.push_back({l * 10.0 + 0.1 * standard_normal(rng), 0.1 * standard_normal(rng)});
      label.push_back(l);
    }
    const auto two = kmeans(blobs, 2, 8);
    for (std::size_t i = 0; i < blobs.size(); ++i) {
      CHECK((two.assignment[i] == two.assignment[0]) == (label[i] == label[0]));
    }
    for (std::size_t i = 1; i < two.inertia_trace.size(); ++i) {
      CHECK(two.inertia_trace[i] <= two.inertia_trace[i - 1] + 1e-12);
    }

    const std::vector<Point> pair{{0, 0}, {1, 1}};
    const auto k = kmeans(pair, 5, 2);
    CHECK(k.centroids.size() == 2);
    for (const auto& m : k.members) CHECK(m.size() == 1);
  }

  TEST_CASE("hypervolume examples") {
    const std::vector<Objectives> origin{{0, 0}};
    CHECK(hypervolume_2d(origin, {1, 1}).value == doctest::Approx(1.0));
    const std::vector<Objectives> two{{0, 0.5}, {0.5, 0}};
    CHECK(hypervolume_2d(two, {1, 1}).value == doctest::Approx(0.75));
    const double mc = oracle::hypervolume_monte_carlo({{0, 0.5}, {0.5, 0}}, {0, 0}, {1, 1}, 1'000'000, 99);
    CHECK(std::abs(mc - 0.75) <= 0.002);
    const std::vector<Objectives> outside{{1.2, 0.0}, {0.5, 1.0}};
    CHECK(hypervolume_2d(outside, {1, 1}).value == 0.0);
  }

  TEST_CASE("hypervolume matches the grid oracle exactly") {
    Rng rng(23);
    for (int t = 0; t < 30; ++t) {
      const auto f = random_objectives(1 + uniform_index(rng, 40), rng, t % 3 == 0);
      const double got = hypervolume_2d(f, {1.05, 1.05}).value;
      const double want = oracle::hypervolume_grid(as_oracle(f), {1.05, 1.05});
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }

  TEST_CASE("normalization") {
    const std::vector<Objectives> pts{{1, 10}, {3, 20}};
    const auto n = Normalization::from_points(pts);
    const auto u = n.apply({2, 15});
    CHECK(u[0] == doctest::Approx(0.5));
    CHECK(u[1] == doctest::Approx(0.5));
    CHECK(normalized_hypervolume(pts, n) == doctest::Approx(1.21));
  }

  TEST_CASE("scalar de finds a quadratic minimum") {
    const auto r = de_minimize([](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3) + x[1] * x[1]; },
                               Bounds({-1, -1}, {1, 1}), {20, 80, 0.8, 0.9}, 5);
    CHECK(r.best[0] == doctest::Approx(0.3).epsilon(1e-2));
    CHECK(std::abs(r.best[1]) < 1e-2);
  }
}
