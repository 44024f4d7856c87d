#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mfmo/common.hpp"

/// Multi-fidelity bi-objective ZDT variants.
namespace mfmo::problems {

enum class ZdtVariant { ZDT1, ZDT2, ZDT3 };

std::string_view to_string(ZdtVariant v);
/// Accepts "mf-zdt1".."mf-zdt3" and "zdt1".."zdt3".
ZdtVariant zdt_variant_from_name(std::string_view name);

class MfZdtProblem {
 public:
  explicit MfZdtProblem(ZdtVariant variant, std::size_t n = 30);

  ZdtVariant variant() const { return variant_; }
  std::size_t dimension() const { return n_; }
  Bounds bounds() const { return Bounds::unit(n_); }

  /// g(x) = 1 + 9/(n-1) * sum_{i>=2} x_i.
  double g(std::span<const double> x) const;
  double h(std::span<const double> x) const;

  /// Throws when x is outside [0, 1]^n.
  Objectives evaluate(std::span<const double> x, Fidelity fidelity) const;

 private:
  ZdtVariant variant_;
  std::size_t n_;
};

/// Sampled true Pareto front of the HF problem, sorted by f1. ZDT1/ZDT2 are
/// sampled uniformly in f1 on [0, 1]; ZDT3 is the non-dominated subset of a
/// dense uniform scan (at least 10^5 points).
std::vector<Objectives> true_front(ZdtVariant variant, std::size_t m);

}  // namespace mfmo::problems
