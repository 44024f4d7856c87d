#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfmo/common.hpp"

namespace mfmo::store {

enum class Origin { Initial, GlobalInfill, LocalInfill, Colocated };
std::string_view to_string(Origin o);
Origin origin_from_string(std::string_view s);

struct EvaluationRecord {
  Point x;
  Fidelity fidelity = Fidelity::HF;
  double f1 = 0.0;
  double f2 = 0.0;
  std::size_t iteration = 0;
  Origin origin = Origin::Initial;

  Objectives objectives() const { return {f1, f2}; }
  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

struct ParetoArchive {
  std::vector<EvaluationRecord> members;
  /// Crowding distance of each member within the front.
  std::vector<double> crowding;

  std::vector<Objectives> front() const;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Append-only archive of evaluated designs at both fidelities.
///
/// Distances (deduplication and nearest-neighbour queries) are measured in
/// bounds-normalized coordinates. Two records of the same fidelity closer
/// than `dedup_eps` in the max-norm are duplicates; only the first is kept.
class SampleDatabase {
 public:
  explicit SampleDatabase(Bounds bounds, double dedup_eps = 1e-9);

  const Bounds& bounds() const { return bounds_; }
  double dedup_eps() const { return dedup_eps_; }

  /// Appends unless a same-fidelity duplicate exists. Throws on
  /// out-of-bounds x or non-finite objectives.
  bool insert(EvaluationRecord record);

  bool is_duplicate(std::span<const double> x, Fidelity fidelity) const;
  /// Record of the given fidelity at x (within dedup_eps), if any.
  const EvaluationRecord* find(std::span<const double> x, Fidelity fidelity) const;

  /// The min(count, available) records of `fidelity` nearest to `center`;
  /// ties keep insertion order.
  std::vector<EvaluationRecord> nearest(std::span<const double> center, Fidelity fidelity, std::size_t count) const;

  /// Rank-0 HF records. Throws when there are no HF records.
  ParetoArchive hf_pareto() const { return pareto(Fidelity::HF); }
  ParetoArchive pareto(Fidelity fidelity) const;

  const std::vector<EvaluationRecord>& records() const { return records_; }
  std::vector<EvaluationRecord> records(Fidelity fidelity) const;
  std::size_t size() const { return records_.size(); }
  std::size_t count(Fidelity f) const { return f == Fidelity::HF ? hf_count_ : lf_count_; }
  /// Minimum of each objective over records of `fidelity`.
  Objectives minima(Fidelity fidelity) const;

  void persist(const std::filesystem::path& path) const;
  /// Without explicit bounds the bounding box of the stored designs is used.
  static SampleDatabase load(const std::filesystem::path& path, std::optional<Bounds> bounds = std::nullopt,
                             double dedup_eps = 1e-9);

  /// One JSON line per record.
  std::string to_jsonl() const;
  static SampleDatabase from_jsonl(const std::string& text, std::optional<Bounds> bounds = std::nullopt,
                                   double dedup_eps = 1e-9);

 private:
  Bounds bounds_;
  double dedup_eps_;
  std::vector<EvaluationRecord> records_;
  // Normalized coordinates, parallel to records_.
  std::vector<Point> unit_;
  std::size_t hf_count_ = 0;
  std::size_t lf_count_ = 0;
};

}  // namespace mfmo::store
