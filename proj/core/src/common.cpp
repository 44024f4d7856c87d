#include "mfmo/common.hpp"

#include <algorithm>
#include <cmath>

namespace mfmo {

std::string_view to_string(Fidelity f) { return f == Fidelity::HF ? "HF" : "LF"; }

Fidelity fidelity_from_string(std::string_view s) {
  if (s == "HF") return Fidelity::HF;
  if (s == "LF") return Fidelity::LF;
  throw Error("unknown fidelity '" + std::string(s) + "' (expected HF or LF)");
}

Bounds::Bounds(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw Error("bounds: lower/upper length mismatch");
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (!(lower_[k] <= upper_[k]) || !std::isfinite(lower_[k]) || !std::isfinite(upper_[k])) {
      throw Error("bounds: invalid interval at coordinate " + std::to_string(k));
    }
  }
}

Bounds Bounds::unit(std::size_t dim) { return Bounds(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)); }

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= lower_[k] && x[k] <= upper_[k])) return false;
  }
  return true;
}

void Bounds::check(std::span<const double> x) const {
  if (x.size() != size()) {
    throw Error("design vector has " + std::to_string(x.size()) + " coordinates, bounds have " +
                std::to_string(size()));
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= lower_[k] && x[k] <= upper_[k])) {
      throw Error("coordinate " + std::to_string(k) + " = " + std::to_string(x[k]) + " outside [" +
                  std::to_string(lower_[k]) + ", " + std::to_string(upper_[k]) + "]");
    }
  }
}

Point Bounds::normalize(std::span<const double> x) const {
  Point u(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double w = width(k);
    u[k] = w > 0.0 ? (x[k] - lower_[k]) / w : 0.0;
  }
  return u;
}

Point Bounds::denormalize(std::span<const double> u) const {
  Point x(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    x[k] = std::clamp(lower_[k] + u[k] * width(k), lower_[k], upper_[k]);
  }
  return x;
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double chebyshev_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index) {
  // FNV-1a over the purpose tag, mixed with the master seed and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t state = master ^ h;
  splitmix64(state);
  state ^= index * 0xD1B54A32D192ED03ULL;
  return splitmix64(state);
}

}  // namespace mfmo
