#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mfmo/common.hpp"

/// Population machinery shared by the optimizer and the surrogate fits.
namespace mfmo::evo {

inline constexpr double kInfiniteCrowding = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Design of experiments

/// Latin hypercube with one point at the centre of each axis stratum; among
/// `restarts` random permutations the design with the largest minimum
/// pairwise distance (in bounds-normalized space) is returned.
std::vector<Point> maximin_lhd(std::size_t n, const Bounds& bounds, std::uint64_t seed,
                               std::size_t restarts = 50);

/// Greedy farthest-point selection of `m` indices out of `points`, starting
/// from the point nearest to the centroid. Used to nest the HF design in the
/// LF design.
std::vector<std::size_t> maximin_subset(std::span<const Point> points, std::size_t m, const Bounds& bounds);

double min_pairwise_distance(std::span<const Point> points, const Bounds& bounds);

// ---------------------------------------------------------------------------
// Differential evolution

enum class Strategy { Rand1, Best1, Rand2, Best2, CurrentToRand1, CurrentToBest1 };
inline constexpr std::array<Strategy, 6> kAllStrategies = {
    Strategy::Rand1, Strategy::Best1, Strategy::Rand2, Strategy::Best2, Strategy::CurrentToRand1,
    Strategy::CurrentToBest1};
std::string_view to_string(Strategy s);

enum class RepairMode { ReflectClamp, Clamp };
RepairMode repair_mode_from_string(std::string_view s);
std::string_view to_string(RepairMode m);

struct DeParams {
  double F = 0.8;
  double crossover_rate = 0.8;
  RepairMode repair = RepairMode::ReflectClamp;
};

/// Reflect once across the violated bound, then clamp.
void repair(Point& v, const Bounds& bounds, RepairMode mode);

/// Mutant vector for parent `i` under `strategy`. Donors are distinct from
/// each other and from `i`; "best" is drawn uniformly from `best_pool`.
Point de_mutant(Strategy strategy, std::span<const Point> parents, std::size_t i,
                std::span<const std::size_t> best_pool, double F, Rng& rng);

/// Binomial crossover; the forced coordinate is drawn among the coordinates
/// where mutant and parent differ (if any).
Point binomial_crossover(const Point& parent, const Point& mutant, double crossover_rate, Rng& rng);

/// For every parent and each of the six strategies one mutant and one
/// crossover child. Output is strategy-major: children [s*n, (s+1)*n) come
/// from strategy s. Requires at least 6 parents.
std::vector<Point> de_offspring(std::span<const Point> parents, std::span<const std::size_t> best_pool,
                                const DeParams& params, const Bounds& bounds, std::uint64_t seed);

struct ScalarDeOptions {
  std::size_t pop_size = 20;
  std::size_t generations = 50;
  double F = 0.8;
  double crossover_rate = 0.9;
};

struct ScalarDeResult {
  Point best;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

/// DE/rand/1/bin minimizer with greedy one-to-one replacement. `initial`
/// members (clamped into bounds) replace the first random members.
ScalarDeResult de_minimize(const std::function<double(std::span<const double>)>& f, const Bounds& bounds,
                           const ScalarDeOptions& options, std::uint64_t seed,
                           std::span<const Point> initial = {});

// ---------------------------------------------------------------------------
// Pareto machinery

struct FrontIndexing {
  std::vector<std::size_t> rank;
  /// Crowding distance within the member's own front.
  std::vector<double> crowding;
  std::vector<std::vector<std::size_t>> fronts;
};

/// Fast non-dominated sort under minimization; equal vectors share a rank.
FrontIndexing nondominated_sort(std::span<const Objectives> objectives);

/// Boundary members get +inf; interior members the range-normalized sum of
/// neighbour gaps. A zero-range objective contributes nothing.
std::vector<double> crowding_distance(std::span<const Objectives> front);

/// Indices of the rank-0 members.
std::vector<std::size_t> nondominated_indices(std::span<const Objectives> objectives);

// ---------------------------------------------------------------------------
// NSGA-II

using BiObjective = std::function<Objectives(std::span<const double>)>;

struct Nsga2Options {
  std::size_t pop_size = 50;
  std::size_t generations = 50;
  double crossover_prob = 0.9;
  double eta_c = 15.0;
  double eta_m = 20.0;
  /// Per-variable mutation probability; non-positive means 1/n.
  double mutation_prob = -1.0;
};

struct Nsga2Result {
  std::vector<Point> set;
  std::vector<Objectives> front;
};

/// SBX + polynomial mutation NSGA-II; returns the final population's
/// rank-0 members (exact duplicates removed).
Nsga2Result nsga2_minimize(const BiObjective& f, const Bounds& bounds, const Nsga2Options& options,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Clustering

struct KMeansResult {
  std::vector<Point> centroids;
  std::vector<std::size_t> assignment;
  std::vector<std::vector<std::size_t>> members;
  /// Total within-cluster squared distance after each assignment step.
  std::vector<double> inertia_trace;
  std::size_t iterations = 0;
};

/// k-means++ seeding then Lloyd iterations (assignment fixpoint or
/// `max_iterations`). K is reduced to |points| when larger; empty clusters
/// steal the point farthest from its centroid.
KMeansResult kmeans(std::span<const Point> points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

// ---------------------------------------------------------------------------
// Hypervolume

struct HypervolumeResult {
  double value = 0.0;
  Objectives reference{};
};

/// Exact dominated area in 2-D. Points with any coordinate >= reference are
/// discarded.
HypervolumeResult hypervolume_2d(std::span<const Objectives> front, const Objectives& reference);

/// Per-objective min/max used to normalize fronts before HV.
struct Normalization {
  Objectives min{0.0, 0.0};
  Objectives max{1.0, 1.0};

  static Normalization from_points(std::span<const Objectives> points);
  void extend(std::span<const Objectives> points);
  Objectives apply(const Objectives& f) const;
};

double normalized_hypervolume(std::span<const Objectives> front, const Normalization& norm,
                              const Objectives& reference = {1.1, 1.1});

}  // namespace mfmo::evo
