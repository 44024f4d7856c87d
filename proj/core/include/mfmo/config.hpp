#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mfmo/ackmfmode.hpp"
#include "mfmo/evaluator.hpp"
#include "mfmo/nas_encoding.hpp"

/// JSON run configuration: parsing with JSON-pointer errors, schema, echo,
/// and problem construction.
namespace mfmo::config {

class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct EvaluatorSettings {
  /// Child command line; MFMO_EVAL_CMD takes precedence when set.
  std::optional<std::string> command;
  double timeout_lf_s = 600.0;
  double timeout_hf_s = 3600.0;
  int max_inflight = 4;
  bool cache = true;
};

struct RunConfig {
  std::string problem = "mf-zdt1";
  /// 0 keeps the problem's default dimensionality.
  std::size_t dimension = 0;
  nas::Encoding encoding = nas::Encoding::Continuous;
  /// Levels per gene of the split-integer encoding used for box problems
  /// under the discrete encoding.
  std::size_t discrete_levels = 10;
  opt::OptimizerConfig optimizer;
  EvaluatorSettings evaluator;
  nas::ArchitectureConfig nas;
};

inline constexpr const char* kNasProblem = "nas-unet";

/// Missing keys keep their defaults; unknown keys and bad values throw
/// ConfigError naming the JSON pointer.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
/// Every field, including defaults.
nlohmann::json to_json(const RunConfig& config);
/// JSON Schema (draft 2020-12) of the configuration document.
nlohmann::json config_schema();

/// Split-integer decoding: gene pair (a, b) in [0, L)^2 maps to
/// (floor(a) * L + floor(b)) / (L^2 - 1) on [0, 1], then onto `target`.
Point decode_split_genes(std::span<const double> genes, std::size_t levels, const Bounds& target);

struct BuiltProblem {
  eval::Problem problem;
  /// Present when caching is enabled.
  std::shared_ptr<eval::CachingEvaluator> cache;
  /// Human-readable description of the evaluator chain.
  std::string evaluator_description;
};

/// Resolves the problem and wraps its evaluator (external command, NAS
/// FLOPs objective, encoding decoder, cache). Throws ConfigError.
BuiltProblem build_problem(const RunConfig& config, const eval::EvaluatorRegistry& registry,
                           std::optional<std::string> env_command = std::nullopt);

}  // namespace mfmo::config
