#pragma once

// Independent reference implementations used as test oracles. They favour
// the most literal formulation over speed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Obj = std::array<double, 2>;

inline bool dominates(const Obj& a, const Obj& b) {
  return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

/// Rank by repeated peeling: O(n^3) worst case.
inline std::vector<std::size_t> ranks(const std::vector<Obj>& f) {
  const std::size_t n = f.size();
  std::vector<std::size_t> rank(n, SIZE_MAX);
  std::size_t assigned = 0;
  for (std::size_t r = 0; assigned < n; ++r) {
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < n; ++i) {
      if (rank[i] != SIZE_MAX) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < n && !dominated; ++j) {
        dominated = j != i && rank[j] == SIZE_MAX && dominates(f[j], f[i]);
      }
      if (!dominated) layer.push_back(i);
    }
    for (std::size_t i : layer) rank[i] = r;
    assigned += layer.size();
  }
  return rank;
}

inline std::vector<std::size_t> nondominated(const std::vector<Obj>& f) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < f.size() && !dominated; ++j) dominated = dominates(f[j], f[i]);
    if (!dominated) out.push_back(i);
  }
  return out;
}

/// Union of rectangles [p, ref] via a grid over all distinct coordinates.
inline double hypervolume_grid(const std::vector<Obj>& front, const Obj& ref) {
  std::vector<double> xs{ref[0]}, ys{ref[1]};
  std::vector<Obj> pts;
  for (const auto& p : front) {
    if (p[0] < ref[0] && p[1] < ref[1]) {
      pts.push_back(p);
      xs.push_back(p[0]);
      ys.push_back(p[1]);
    }
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double cx = 0.5 * (xs[i] + xs[i + 1]);
      const double cy = 0.5 * (ys[j] + ys[j + 1]);
      bool covered = false;
      for (const auto& p : pts) covered = covered || (p[0] <= cx && p[1] <= cy);
      if (covered) area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    }
  }
  return area;
}

inline double hypervolume_monte_carlo(const std::vector<Obj>& front, const Obj& lo, const Obj& ref,
                                      std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo[0], ref[0]), uy(lo[1], ref[1]);
  std::size_t hit = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double x = ux(rng), y = uy(rng);
    for (const auto& p : front) {
      if (p[0] <= x && p[1] <= y) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(samples) * (ref[0] - lo[0]) * (ref[1] - lo[1]);
}

/// Dense Co-Kriging with explicit covariance blocks and a full-pivot LU.
struct CoKriging {
  Eigen::MatrixXd Xl, Xh;
  Eigen::VectorXd yl, yh, lf_at_hf;
  Eigen::VectorXd theta_lf, theta_d;
  double rho = 1.0, nugget = 0.0;
  // Derived.
  double s2_lf = 0.0, s2_d = 0.0, mu = 0.0;
  Eigen::MatrixXd C;
  Eigen::FullPivLU<Eigen::MatrixXd> lu;

  static double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& theta) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) s += theta(k) * (a(k) - b(k)) * (a(k) - b(k));
    return std::exp(-s);
  }

  static Eigen::MatrixXd psi(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd P(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < B.rows(); ++j) P(i, j) = corr(A.row(i).transpose(), B.row(j).transpose(), theta);
    }
    return P;
  }

  /// Closed-form (mu, sigma^2) of a stationary process with correlation R.
  static std::pair<double, double> closed_form(const Eigen::MatrixXd& R, const Eigen::VectorXd& y) {
    const Eigen::FullPivLU<Eigen::MatrixXd> f(R);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(y.size());
    const double m = one.dot(f.solve(y)) / one.dot(f.solve(one));
    const Eigen::VectorXd r = y - m * one;
    return {m, r.dot(f.solve(r)) / static_cast<double>(y.size())};
  }

  void build() {
    const auto nl = Xl.rows(), nh = Xh.rows();
    const Eigen::MatrixXd Il = Eigen::MatrixXd::Identity(nl, nl), Ih = Eigen::MatrixXd::Identity(nh, nh);
    s2_lf = closed_form(psi(Xl, Xl, theta_lf) + nugget * Il, yl).second;
    s2_d = closed_form(psi(Xh, Xh, theta_d) + nugget * Ih, yh - rho * lf_at_hf).second;
    C.resize(nl + nh, nl + nh);
    C.topLeftCorner(nl, nl) = s2_lf * (psi(Xl, Xl, theta_lf) + nugget * Il);
    C.topRightCorner(nl, nh) = rho * s2_lf * psi(Xl, Xh, theta_lf);
    C.bottomLeftCorner(nh, nl) = C.topRightCorner(nl, nh).transpose();
    C.bottomRightCorner(nh, nh) = rho * rho * s2_lf * (psi(Xh, Xh, theta_lf) + nugget * Ih) +
                                  s2_d * (psi(Xh, Xh, theta_d) + nugget * Ih);
    lu.compute(C);
    Eigen::VectorXd Y(nl + nh);
    Y << yl, yh;
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(nl + nh);
    mu = one.dot(lu.solve(Y)) / one.dot(lu.solve(one));
  }

  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    const auto nl = Xl.rows(), nh = Xh.rows();
    Eigen::VectorXd c(nl + nh);
    for (Eigen::Index i = 0; i < nl; ++i) c(i) = rho * s2_lf * corr(Xl.row(i).transpose(), x, theta_lf);
    for (Eigen::Index i = 0; i < nh; ++i) {
      c(nl + i) = rho * rho * s2_lf * corr(Xh.row(i).transpose(), x, theta_lf) +
                  s2_d * corr(Xh.row(i).transpose(), x, theta_d);
    }
    Eigen::VectorXd Y(nl + nh);
    Y << yl, yh;
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(nl + nh);
    const double mean = mu + c.dot(lu.solve(Y - mu * one));
    const double s2 = rho * rho * s2_lf + s2_d - c.dot(lu.solve(c));
    return {mean, std::max(s2, 0.0)};
  }
};

/// EI by Simpson quadrature of E[max(f_min - Y, 0)], Y ~ N(m, s^2).
inline double expected_improvement_quadrature(double m, double s, double fmin) {
  if (s <= 0.0) return std::max(fmin - m, 0.0);
  const double lo = m - 12.0 * s;
  if (fmin <= lo) return 0.0;
  const int n = 20000;  // even
  const double h = (fmin - lo) / n;
  auto g = [&](double y) {
    const double z = (y - m) / s;
    return (fmin - y) * std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
  };
  double acc = g(lo) + g(fmin);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(lo + i * h);
  return acc * h / 3.0;
}

}  // namespace oracle
