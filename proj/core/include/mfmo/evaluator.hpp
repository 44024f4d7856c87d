#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfmo/common.hpp"
#include "mfmo/nas_encoding.hpp"

/// Objective evaluation: built-in benchmarks, a NAS wrapper that supplies the
/// FLOPs objective, and an external child process speaking newline-delimited
/// JSON.
namespace mfmo::eval {

struct EvaluationRequest {
  std::string id;
  Fidelity fidelity = Fidelity::HF;
  Point x;
  std::optional<nlohmann::json> architecture;
};

struct EvaluationResponse {
  std::string id;
  bool ok = false;
  double f1 = 0.0;
  double f2 = 0.0;
  std::string message;

  static EvaluationResponse success(std::string id, Objectives f);
  static EvaluationResponse failure(std::string id, std::string message);
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  /// Responses come back in request order, one per request.
  virtual std::vector<EvaluationResponse> evaluate_batch(const std::vector<EvaluationRequest>& requests) = 0;
};

/// Wraps a pure objective function.
class FunctionEvaluator final : public Evaluator {
 public:
  using Fn = std::function<Objectives(std::span<const double>, Fidelity)>;
  explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}
  std::vector<EvaluationResponse> evaluate_batch(const std::vector<EvaluationRequest>& requests) override;

 private:
  Fn fn_;
};

/// Fidelity plus x rounded to 12 decimals.
std::string cache_key(Fidelity fidelity, std::span<const double> x);

class CachingEvaluator final : public Evaluator {
 public:
  explicit CachingEvaluator(std::shared_ptr<Evaluator> inner) : inner_(std::move(inner)) {}
  std::vector<EvaluationResponse> evaluate_batch(const std::vector<EvaluationRequest>& requests) override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::shared_ptr<Evaluator> inner_;
  std::map<std::string, Objectives> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct SubprocessOptions {
  /// Run through /bin/sh -c.
  std::string command;
  std::chrono::milliseconds timeout_lf{600'000};
  std::chrono::milliseconds timeout_hf{3'600'000};
  std::chrono::milliseconds handshake_timeout{30'000};
  int max_inflight = 4;
  int retries = 1;
};

/// Child process evaluator. The child must first print
/// {"protocol":"mfmo-eval","version":1,"fidelities":["HF","LF"]}, then answer
/// each request line {"id","fidelity","x"[,"architecture"]} with
/// {"id","status":"ok","f1","f2"} or {"id","status":"error","message"}.
class SubprocessEvaluator final : public Evaluator {
 public:
  explicit SubprocessEvaluator(SubprocessOptions options);
  ~SubprocessEvaluator() override;
  SubprocessEvaluator(const SubprocessEvaluator&) = delete;
  SubprocessEvaluator& operator=(const SubprocessEvaluator&) = delete;

  std::vector<EvaluationResponse> evaluate_batch(const std::vector<EvaluationRequest>& requests) override;

  /// Number of child processes started so far.
  int launches() const { return launches_; }

 private:
  bool start(std::string* error);
  void stop();
  bool write_line(const std::string& line);
  /// Reads complete lines until `deadline`; false on EOF / error.
  bool read_lines(std::chrono::steady_clock::time_point deadline, std::vector<std::string>& out);

  SubprocessOptions options_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  int launches_ = 0;
  bool dead_ = false;
  std::uint64_t wire_counter_ = 0;
};

/// Attaches the exported architecture to every request, forwards to the inner
/// evaluator for f1, and replaces f2 by the FLOPs estimate.
class NasEvaluator final : public Evaluator {
 public:
  NasEvaluator(std::shared_ptr<Evaluator> inner, nas::ArchitectureConfig arch, nas::Encoding encoding);
  std::vector<EvaluationResponse> evaluate_batch(const std::vector<EvaluationRequest>& requests) override;

 private:
  std::shared_ptr<Evaluator> inner_;
  nas::ArchitectureConfig arch_;
  nas::Encoding encoding_;
};

/// A named problem: search box plus evaluator.
struct Problem {
  std::string name;
  Bounds bounds;
  std::shared_ptr<Evaluator> evaluator;
};

struct ProblemParams {
  /// 0 selects the problem's default dimensionality.
  std::size_t dimension = 0;
};

class EvaluatorRegistry {
 public:
  using Factory = std::function<Problem(const ProblemParams&)>;

  /// Registry pre-populated with mf-zdt1, mf-zdt2, mf-zdt3.
  static EvaluatorRegistry with_builtins();

  /// Throws on duplicate names.
  void register_builtin(const std::string& name, Factory factory);
  bool contains(const std::string& name) const { return factories_.contains(name); }
  /// Throws listing the known names when `name` is unknown.
  Problem resolve(const std::string& name, const ProblemParams& params = {}) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Factory> factories_;
};

nlohmann::json to_json(const EvaluationRequest& r);
EvaluationResponse response_from_json(const nlohmann::json& j);

}  // namespace mfmo::eval
