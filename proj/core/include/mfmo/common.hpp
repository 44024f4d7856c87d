#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mfmo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Fidelity { HF, LF };

std::string_view to_string(Fidelity f);
Fidelity fidelity_from_string(std::string_view s);

using Point = std::vector<double>;
using Rng = std::mt19937_64;
using Objectives = std::array<double, 2>;

/// Closed box [lower_k, upper_k] per coordinate.
class Bounds {
 public:
  Bounds() = default;
  Bounds(std::vector<double> lower, std::vector<double> upper);
  static Bounds unit(std::size_t dim);

  std::size_t size() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double lower(std::size_t k) const { return lower_[k]; }
  double upper(std::size_t k) const { return upper_[k]; }
  double width(std::size_t k) const { return upper_[k] - lower_[k]; }

  bool contains(std::span<const double> x) const;
  /// Throws naming the first offending coordinate.
  void check(std::span<const double> x) const;

  Point normalize(std::span<const double> x) const;
  Point denormalize(std::span<const double> u) const;

  friend bool operator==(const Bounds&, const Bounds&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Squared Euclidean distance.
double squared_distance(std::span<const double> a, std::span<const double> b);
double chebyshev_distance(std::span<const double> a, std::span<const double> b);

/// a dominates b under minimization of both objectives.
inline bool dominates(const Objectives& a, const Objectives& b) {
  return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

/// Uniform draw in [0, 1) from the top 53 bits; portable across standard
/// library implementations (unlike std::uniform_real_distribution).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}
/// Fisher-Yates with uniform_index.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}
/// Standard normal via Box-Muller.
double standard_normal(Rng& rng);

/// Stateless stream derivation so that each purpose (LHD, DE, fits, ...) owns
/// an independent generator seeded from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0);

}  // namespace mfmo
