#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfmo/common.hpp"
#include "mfmo/evaluator.hpp"
#include "mfmo/evolution.hpp"
#include "mfmo/sample_store.hpp"
#include "mfmo/surrogate.hpp"

/// Adaptive Co-Kriging-assisted multi-fidelity multi-objective DE.
namespace mfmo::opt {

/// full: HF + LF with Co-Kriging. hf_only: HF evaluations and plain Kriging.
/// lf_only: LF evaluations and plain Kriging; the final LF Pareto set is
/// rescored at HF.
enum class Mode { Full, HfOnly, LfOnly };
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct SurrogateSettings {
  std::size_t likelihood_pop = 20;
  std::size_t likelihood_gens = 50;
  double nugget = 1e-8;
  double nugget_max = 1e-4;
  bool standardize = true;
  /// Seed each global hyperparameter search with the previous iteration's
  /// optimum.
  bool warm_start = true;
};

struct OptimizerConfig {
  std::size_t nfe_max_hf = 100;
  std::size_t n_s_hf = 50;
  std::size_t n_s_lf = 100;
  std::size_t n_p = 50;
  double F = 0.8;
  double p_c = 0.8;
  std::size_t K = 3;
  std::size_t n_near = 25;
  std::size_t ei_pop = 50;
  std::size_t ei_gens = 50;
  evo::RepairMode repair = evo::RepairMode::ReflectClamp;
  bool trust_region = false;
  double trust_region_inflation = 0.2;
  Mode mode = Mode::Full;
  /// Total LF evaluations in lf_only mode (initial design included).
  std::size_t lf_only_budget = 300;
  double dedup_eps = 1e-9;
  /// Iterations in a row without a new evaluation before giving up.
  std::size_t max_stall = 5;
  SurrogateSettings surrogate;
  std::uint64_t seed = 0;

  /// Throws Error describing the first violated constraint.
  void validate() const;
};

struct IterationReport {
  std::size_t iteration = 0;
  std::size_t hf_count = 0;
  std::size_t lf_count = 0;
  /// Normalized HV of the HF archive under the run-wide normalization
  /// (filled when the run ends).
  double hv = 0.0;
  /// Normalized HV under the initial-design normalization (available live).
  double hv_progress = 0.0;
  std::optional<Point> global_infill;
  std::vector<Point> local_infill;
  std::vector<std::string> diagnostics;
};

struct HvTracePoint {
  std::size_t iteration = 0;
  std::size_t hf_count = 0;
  double hv = 0.0;
};

struct RunResult {
  store::SampleDatabase db;
  std::vector<store::EvaluationRecord> pareto;
  std::vector<IterationReport> iterations;
  std::vector<HvTracePoint> trace;
  evo::Normalization normalization;
  double wall_seconds = 0.0;
  bool complete = true;
  std::string failure;
};

/// Thrown when the evaluator returns an error response.
class EvaluatorFailure : public Error {
 public:
  using Error::Error;
};

struct ParentSet {
  std::vector<Point> x;
  /// Indices into x of rank-0 members (the "best" donors).
  std::vector<std::size_t> best_pool;
};

struct GlobalInfill {
  std::optional<Point> hf;
  std::vector<Point> lf;
  std::vector<std::string> diagnostics;
};

struct LocalInfill {
  std::vector<Point> hf;
  std::vector<Point> lf;
  bool skipped = false;
  std::vector<std::string> diagnostics;
};

class Optimizer {
 public:
  using Progress = std::function<void(const IterationReport&)>;

  Optimizer(OptimizerConfig config, Bounds bounds, std::shared_ptr<eval::Evaluator> evaluator);

  const OptimizerConfig& config() const { return config_; }
  const Bounds& bounds() const { return bounds_; }

  /// Nested maximin design: n_s_lf LF points, n_s_hf of them also HF.
  store::SampleDatabase initialize();

  /// n_p parents from the HF archive ordered by (rank, -crowding); a deficit
  /// is filled uniformly with replacement from rank 0.
  ParentSet select_parents(const store::SampleDatabase& db, std::uint64_t seed) const;

  /// Predicts the offspring with the global surrogates and evaluates one HF
  /// point (plus its co-located LF twin) and two LF points.
  GlobalInfill global_infill(store::SampleDatabase& db, const ParentSet& parents, std::size_t iteration);

  /// EI-driven clustered infill around `center`.
  LocalInfill local_infill(store::SampleDatabase& db, const Point& center, std::size_t iteration);

  RunResult run(const Progress& progress = {});

 private:
  /// One model per objective, trained in bounds-normalized coordinates.
  std::vector<std::unique_ptr<surrogate::Model>> fit_models(const store::SampleDatabase& db,
                                                            std::span<const store::EvaluationRecord> primary,
                                                            std::span<const store::EvaluationRecord> lf,
                                                            std::uint64_t seed, bool global);
  Objectives predict(const std::vector<std::unique_ptr<surrogate::Model>>& models, const Point& x,
                     std::array<double, 2>* mse = nullptr) const;
  /// Evaluates and inserts in request order; returns the number inserted.
  std::size_t evaluate_and_insert(store::SampleDatabase& db, const std::vector<Point>& xs,
                                  const std::vector<Fidelity>& fidelities, const std::vector<store::Origin>& origins,
                                  std::size_t iteration, std::vector<std::string>& diagnostics);
  Fidelity primary_fidelity() const { return config_.mode == Mode::LfOnly ? Fidelity::LF : Fidelity::HF; }
  std::size_t primary_budget() const {
    return config_.mode == Mode::LfOnly ? config_.lf_only_budget : config_.nfe_max_hf;
  }

  OptimizerConfig config_;
  Bounds bounds_;
  std::shared_ptr<eval::Evaluator> evaluator_;
  std::uint64_t request_counter_ = 0;
  // Warm starts for the global models, one per objective.
  std::vector<std::optional<std::vector<double>>> warm_theta_;
  std::vector<std::optional<std::vector<double>>> warm_theta_d_;
  std::vector<std::optional<double>> warm_rho_;
};

/// Normalized HV of the HF archive after each iteration (iteration 0 is the
/// initial design) under a fixed normalization.
std::vector<HvTracePoint> hv_trace(const store::SampleDatabase& db, const evo::Normalization& norm,
                                   std::size_t last_iteration = 0, const Objectives& reference = {1.1, 1.1});

}  // namespace mfmo::opt
