#include "mfmo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfmo/evolution.hpp"

namespace mfmo::problems {

std::string_view to_string(ZdtVariant v) {
  switch (v) {
    case ZdtVariant::ZDT1: return "mf-zdt1";
    case ZdtVariant::ZDT2: return "mf-zdt2";
    case ZdtVariant::ZDT3: return "mf-zdt3";
  }
  return "?";
}

ZdtVariant zdt_variant_from_name(std::string_view name) {
  if (name.starts_with("mf-")) name.remove_prefix(3);
  if (name == "zdt1") return ZdtVariant::ZDT1;
  if (name == "zdt2") return ZdtVariant::ZDT2;
  if (name == "zdt3") return ZdtVariant::ZDT3;
  throw Error("unknown ZDT variant '" + std::string(name) + "'");
}

MfZdtProblem::MfZdtProblem(ZdtVariant variant, std::size_t n) : variant_(variant), n_(n) {
  if (n < 2) throw Error("MF-ZDT problems need n >= 2");
}

double MfZdtProblem::g(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += x[i];
  return 1.0 + 9.0 / static_cast<double>(n_ - 1) * s;
}

double MfZdtProblem::h(std::span<const double> x) const {
  const double ratio = x[0] / g(x);
  switch (variant_) {
    case ZdtVariant::ZDT1: return 1.0 - std::sqrt(ratio);
    case ZdtVariant::ZDT2: return 1.0 - ratio * ratio;
    case ZdtVariant::ZDT3: return 1.0 - std::sqrt(ratio) - ratio * std::sin(10.0 * std::numbers::pi * x[0]);
  }
  return 0.0;
}

Objectives MfZdtProblem::evaluate(std::span<const double> x, Fidelity fidelity) const {
  bounds().check(x);
  const double gv = g(x);
  const double hv = h(x);
  const double f1 = x[0];
  if (fidelity == Fidelity::HF) return {f1, gv * hv};
  switch (variant_) {
    case ZdtVariant::ZDT1: return {f1, (0.8 * gv - 0.2) * (1.2 * hv + 0.2)};
    case ZdtVariant::ZDT2: return {f1, (0.9 * gv + 1.1) * (1.1 * hv - 0.1)};
    case ZdtVariant::ZDT3: return {f1, (0.75 * gv - 0.25) * (1.25 * hv + 0.25)};
  }
  return {f1, 0.0};
}

std::vector<Objectives> true_front(ZdtVariant variant, std::size_t m) {
  if (m < 2) throw Error("true_front needs at least 2 points");
  std::vector<Objectives> out;
  if (variant == ZdtVariant::ZDT1 || variant == ZdtVariant::ZDT2) {
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double f1 = static_cast<double>(i) / static_cast<double>(m - 1);
      out.push_back({f1, variant == ZdtVariant::ZDT1 ? 1.0 - std::sqrt(f1) : 1.0 - f1 * f1});
    }
    return out;
  }
  // ZDT3: dense scan then non-dominated filter (a single sweep suffices after
  // sorting by f1 since the scan is already ordered).
  const std::size_t scan = std::max<std::size_t>(m, 100000);
  std::vector<Objectives> dense;
  dense.reserve(scan);
  for (std::size_t i = 0; i < scan; ++i) {
    const double f1 = static_cast<double>(i) / static_cast<double>(scan - 1);
    dense.push_back({f1, 1.0 - std::sqrt(f1) - f1 * std::sin(10.0 * std::numbers::pi * f1)});
  }
  double best_f2 = std::numeric_limits<double>::infinity();
  for (const auto& p : dense) {
    if (p[1] < best_f2) {
      out.push_back(p);
      best_f2 = p[1];
    }
  }
  if (out.size() > m) {
    std::vector<Objectives> thinned;
    thinned.reserve(m);
    for (std::size_t i = 0; i < m; ++i) thinned.push_back(out[i * (out.size() - 1) / (m - 1)]);
    out = std::move(thinned);
  }
  return out;
}

}  // namespace mfmo::problems
