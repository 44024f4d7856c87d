#include "mfmo/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mfmo::surrogate {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Floor on fitted process variances (standardized units) so that the
// covariance blocks never vanish entirely.
constexpr double kSigma2Floor = 1e-12;

MatrixXd to_matrix(const std::vector<Point>& X) {
  if (X.empty()) return MatrixXd(0, 0);
  const auto n = static_cast<Eigen::Index>(X.size());
  const auto d = static_cast<Eigen::Index>(X.front().size());
  MatrixXd M(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(X[i].size()) != d) throw FitError("training inputs have inconsistent dimension");
    for (Eigen::Index k = 0; k < d; ++k) M(i, k) = X[i][k];
  }
  return M;
}

/// Squared coordinate differences for every pair i > j, row-major over the
/// strict lower triangle, so that psi_ij = exp(-(D theta)_p).
struct PairwiseDiff {
  Eigen::Index n = 0;
  MatrixXd D;

  explicit PairwiseDiff(const MatrixXd& X) : n(X.rows()) {
    D.resize(n * (n - 1) / 2, X.cols());
    Eigen::Index p = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j, ++p) D.row(p) = (X.row(i) - X.row(j)).array().square();
    }
  }

  void fill(const VectorXd& theta, double nugget, MatrixXd& psi) const {
    psi.resize(n, n);
    const VectorXd r = (-(D * theta)).array().exp();
    Eigen::Index p = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j, ++p) psi(i, j) = r(p);
    }
    psi.diagonal().setConstant(1.0 + nugget);
  }
};

MatrixXd cross_correlation(const MatrixXd& A, const MatrixXd& B, const VectorXd& theta) {
  MatrixXd out(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      out(i, j) = std::exp(-((A.row(i) - B.row(j)).array().square().matrix().dot(theta)));
    }
  }
  return out;
}

VectorXd correlation_vector(const MatrixXd& X, std::span<const double> x, const VectorXd& theta) {
  const Eigen::Map<const Eigen::RowVectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  VectorXd r(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    r(i) = std::exp(-((X.row(i) - xv).array().square().matrix().dot(theta)));
  }
  return r;
}

VectorXd theta_from_log10(std::span<const double> z) {
  VectorXd t(static_cast<Eigen::Index>(z.size()));
  for (std::size_t k = 0; k < z.size(); ++k) t(static_cast<Eigen::Index>(k)) = std::pow(10.0, z[k]);
  return t;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd standardized(std::span<const double> y, const Standardizer& s) {
  VectorXd out(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) out(static_cast<Eigen::Index>(i)) = s.forward(y[i]);
  return out;
}

std::string closest_pair(const MatrixXd& X) {
  double best = kInf;
  Eigen::Index bi = 0, bj = 0;
  for (Eigen::Index i = 1; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = (X.row(i) - X.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  std::ostringstream os;
  os << "points " << bj << " and " << bi << " (distance " << std::sqrt(best) << ")";
  return os.str();
}

double negative_log_likelihood(const PairwiseDiff& pd, const VectorXd& theta, double nugget, const VectorXd& y,
                               MatrixXd& psi) {
  pd.fill(theta, nugget, psi);
  Eigen::LLT<MatrixXd> llt(psi);
  if (llt.info() != Eigen::Success) return kInf;
  const ConcentratedLikelihood cl = concentrated_likelihood(llt, y);
  return std::isfinite(cl.log_likelihood) ? -cl.log_likelihood : kInf;
}

std::vector<Point> warm_members(const std::optional<std::vector<double>>& theta, std::optional<double> rho,
                                std::size_t dim, bool with_rho) {
  if (!theta || theta->size() != dim) return {};
  Point z;
  for (double t : *theta) z.push_back(std::log10(std::max(t, 1e-300)));
  if (with_rho) z.push_back(rho.value_or(1.0));
  return {z};
}

}  // namespace

double correlation(std::span<const double> a, std::span<const double> b, const CorrelationParams& params) {
  if (a.size() != b.size() || a.size() != params.theta.size()) {
    throw Error("correlation: dimension mismatch (" + std::to_string(a.size()) + ", " + std::to_string(b.size()) +
                ", theta " + std::to_string(params.theta.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += params.theta[k] * d * d;
  }
  return std::exp(-s);
}

Standardizer Standardizer::fit(std::span<const double> values, bool enabled) {
  Standardizer s;
  if (!enabled || values.empty()) return s;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  s.shift = mean;
  s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

ConcentratedLikelihood concentrated_likelihood(const Eigen::LLT<MatrixXd>& llt, const VectorXd& y) {
  const Eigen::Index n = y.size();
  const VectorXd ones = VectorXd::Ones(n);
  const VectorXd inv_one = llt.solve(ones);
  const VectorXd inv_y = llt.solve(y);
  ConcentratedLikelihood out;
  out.mu = ones.dot(inv_y) / ones.dot(inv_one);
  const VectorXd r = y - out.mu * ones;
  out.sigma2 = std::max(r.dot(inv_y - out.mu * inv_one) / static_cast<double>(n), 0.0);
  const MatrixXd& L = llt.matrixLLT();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  out.log_likelihood = -0.5 * static_cast<double>(n) * std::log(std::max(out.sigma2, 1e-300)) - 0.5 * log_det;
  return out;
}

// ---------------------------------------------------------------------------
// Kriging

KrigingModel KrigingModel::fit(const std::vector<Point>& X, std::span<const double> y, const FitOptions& options) {
  if (X.size() != y.size()) throw FitError("Kriging: input/output count mismatch");
  if (X.size() < 2) throw FitError("Kriging needs at least 2 training points");
  for (double v : y) {
    if (!std::isfinite(v)) throw FitError("Kriging: non-finite training output");
  }
  KrigingModel m;
  m.X_ = to_matrix(X);
  m.std_ = Standardizer::fit(y, options.standardize);
  m.y_ = standardized(y, m.std_);
  const auto dim = static_cast<std::size_t>(m.X_.cols());
  m.params_.nugget = options.nugget;

  const bool constant = (m.y_.array() == m.y_(0)).all();
  if (constant) {
    m.params_.theta.assign(dim, 1.0);
    m.finalize(true, options.nugget_max);
    return m;
  }

  const PairwiseDiff pd(m.X_);
  const Bounds box(std::vector<double>(dim, options.log10_theta_min), std::vector<double>(dim, options.log10_theta_max));
  const auto warm = warm_members(options.warm_theta, std::nullopt, dim, false);
  MatrixXd psi;
  for (double nugget = options.nugget;; nugget *= 10.0) {
    auto objective = [&](std::span<const double> z) {
      return negative_log_likelihood(pd, theta_from_log10(z), nugget, m.y_, psi);
    };
    const auto best = evo::de_minimize(objective, box, options.search, options.seed, warm);
    if (std::isfinite(best.value)) {
      m.params_.theta = to_std(theta_from_log10(best.best));
      m.params_.nugget = nugget;
      break;
    }
    if (nugget * 10.0 > options.nugget_max * (1.0 + 1e-9)) {
      throw FitError("Kriging: correlation matrix singular for every candidate theta; closest pair is " +
                     closest_pair(m.X_));
    }
  }
  m.finalize(true, options.nugget_max);
  return m;
}

KrigingModel KrigingModel::with_params(const std::vector<Point>& X, std::span<const double> y,
                                       CorrelationParams params, bool standardize, double nugget_max) {
  if (X.size() != y.size()) throw FitError("Kriging: input/output count mismatch");
  if (X.empty()) throw FitError("Kriging needs training points");
  KrigingModel m;
  m.X_ = to_matrix(X);
  if (params.theta.size() != static_cast<std::size_t>(m.X_.cols())) throw FitError("Kriging: theta dimension mismatch");
  m.std_ = Standardizer::fit(y, standardize);
  m.y_ = standardized(y, m.std_);
  m.params_ = std::move(params);
  m.finalize(true, nugget_max);
  return m;
}

void KrigingModel::finalize(bool escalate, double nugget_max) {
  const VectorXd theta = Eigen::Map<const VectorXd>(params_.theta.data(), static_cast<Eigen::Index>(params_.theta.size()));
  const PairwiseDiff pd(X_);
  MatrixXd psi;
  for (;;) {
    pd.fill(theta, params_.nugget, psi);
    Eigen::LLT<MatrixXd> llt(psi);
    if (llt.info() == Eigen::Success) {
      const ConcentratedLikelihood cl = concentrated_likelihood(llt, y_);
      mu_ = cl.mu;
      sigma2_ = cl.sigma2;
      log_likelihood_ = cl.log_likelihood;
      L_ = llt.matrixL();
      alpha_ = llt.solve(y_ - VectorXd::Constant(y_.size(), mu_));
      return;
    }
    if (!escalate || params_.nugget * 10.0 > nugget_max * (1.0 + 1e-9)) {
      throw FitError("Kriging: correlation matrix not positive definite at nugget " + std::to_string(params_.nugget) +
                     "; closest pair is " + closest_pair(X_));
    }
    params_.nugget *= 10.0;
  }
}

Prediction KrigingModel::predict(std::span<const double> x) const {
  if (x.size() != dimension()) throw Error("Kriging predict: dimension mismatch");
  const VectorXd theta = Eigen::Map<const VectorXd>(params_.theta.data(), static_cast<Eigen::Index>(params_.theta.size()));
  const VectorXd r = correlation_vector(X_, x, theta);
  const double mean = mu_ + r.dot(alpha_);
  const VectorXd v = L_.triangularView<Eigen::Lower>().solve(r);
  const double mse = std::max(sigma2_ * (1.0 - v.squaredNorm()), 0.0);
  return {std_.inverse(mean), mse * std_.scale * std_.scale};
}

json KrigingModel::to_json() const {
  return json{{"type", "kriging"},
              {"theta", params_.theta},
              {"nugget", params_.nugget},
              {"mu", mu()},
              {"sigma2", sigma2()},
              {"log_likelihood", log_likelihood_},
              {"n", X_.rows()},
              {"standardizer", {{"shift", std_.shift}, {"scale", std_.scale}}}};
}

// ---------------------------------------------------------------------------
// Co-Kriging

CoKrigingModel CoKrigingModel::fit(const std::vector<Point>& X_hf, std::span<const double> y_hf,
                                   const std::vector<Point>& X_lf, std::span<const double> y_lf,
                                   std::optional<std::vector<double>> lf_at_hf, const FitOptions& options) {
  if (X_hf.size() != y_hf.size() || X_lf.size() != y_lf.size()) throw FitError("Co-Kriging: input/output count mismatch");
  if (X_hf.size() < 2) throw FitError("Co-Kriging needs at least 2 HF points");
  if (X_lf.size() < 2) throw FitError("Co-Kriging needs at least 2 LF points");
  if (lf_at_hf && lf_at_hf->size() != X_hf.size()) throw FitError("Co-Kriging: lf_at_hf must hold one value per HF point");

  CoKrigingModel m;
  std::vector<double> pooled(y_hf.begin(), y_hf.end());
  pooled.insert(pooled.end(), y_lf.begin(), y_lf.end());
  m.std_ = Standardizer::fit(pooled, options.standardize);
  m.X_hf_ = to_matrix(X_hf);
  m.X_lf_ = to_matrix(X_lf);
  if (m.X_hf_.cols() != m.X_lf_.cols()) throw FitError("Co-Kriging: HF and LF dimensions differ");
  m.y_hf_ = standardized(y_hf, m.std_);
  m.y_lf_ = standardized(y_lf, m.std_);

  // LF process first, on standardized LF data (shared transform).
  FitOptions lf_opts = options;
  lf_opts.standardize = false;
  lf_opts.seed = derive_seed(options.seed, "cokriging-lf");
  std::vector<double> ylf_std = to_std(m.y_lf_);
  m.lf_ = KrigingModel::fit(X_lf, ylf_std, lf_opts);
  m.sigma2_lf_ = std::max(m.lf_.sigma2(), kSigma2Floor);

  if (lf_at_hf) {
    m.lf_at_hf_ = standardized(*lf_at_hf, m.std_);
    m.source_ = LfAtHfSource::Colocated;
  } else {
    m.lf_at_hf_.resize(m.y_hf_.size());
    for (std::size_t i = 0; i < X_hf.size(); ++i) m.lf_at_hf_(static_cast<Eigen::Index>(i)) = m.lf_.predict(X_hf[i]).mean;
    m.source_ = LfAtHfSource::LfModelMean;
  }

  // Difference process: (log10 theta_d, rho) jointly.
  const auto dim = static_cast<std::size_t>(m.X_hf_.cols());
  std::vector<double> lo(dim, options.log10_theta_min), hi(dim, options.log10_theta_max);
  lo.push_back(options.rho_min);
  hi.push_back(options.rho_max);
  const Bounds box(lo, hi);
  const PairwiseDiff pd(m.X_hf_);
  const auto warm = warm_members(options.warm_theta_d, options.warm_rho, dim, true);
  MatrixXd psi;
  VectorXd d(m.y_hf_.size());
  Point best;
  double nugget = options.nugget;
  for (;; nugget *= 10.0) {
    auto objective = [&](std::span<const double> z) {
      const double rho = z[dim];
      d = m.y_hf_ - rho * m.lf_at_hf_;
      return negative_log_likelihood(pd, theta_from_log10(z.first(dim)), nugget, d, psi);
    };
    const auto res = evo::de_minimize(objective, box, options.search, derive_seed(options.seed, "cokriging-d"), warm);
    if (std::isfinite(res.value)) {
      best = res.best;
      break;
    }
    if (nugget * 10.0 > options.nugget_max * (1.0 + 1e-9)) {
      throw FitError("Co-Kriging: difference correlation singular for every candidate; closest HF pair is " +
                     closest_pair(m.X_hf_));
    }
  }
  m.d_params_.theta = to_std(theta_from_log10(std::span<const double>(best).first(dim)));
  m.d_params_.nugget = nugget;
  m.rho_ = best[dim];
  const double rho_span = options.rho_max - options.rho_min;
  if (m.rho_ <= options.rho_min + 1e-6 * rho_span || m.rho_ >= options.rho_max - 1e-6 * rho_span) {
    m.diagnostics_.push_back("rho = " + std::to_string(m.rho_) + " at the search boundary; model may be degenerate");
  }

  // sigma_d^2 at the optimum by the closed form.
  {
    d = m.y_hf_ - m.rho_ * m.lf_at_hf_;
    const VectorXd theta_d = Eigen::Map<const VectorXd>(m.d_params_.theta.data(), static_cast<Eigen::Index>(dim));
    pd.fill(theta_d, m.d_params_.nugget, psi);
    Eigen::LLT<MatrixXd> llt(psi);
    m.sigma2_d_ = kSigma2Floor;
    if (llt.info() == Eigen::Success) m.sigma2_d_ = std::max(concentrated_likelihood(llt, d).sigma2, kSigma2Floor);
  }
  m.nugget_ = std::max(m.lf_.params().nugget, m.d_params_.nugget);
  m.assemble(options.nugget_max);
  return m;
}

CoKrigingModel CoKrigingModel::with_params(const std::vector<Point>& X_hf, std::span<const double> y_hf,
                                           const std::vector<Point>& X_lf, std::span<const double> y_lf,
                                           std::span<const double> lf_at_hf, CorrelationParams lf_params,
                                           CorrelationParams d_params, double rho, bool standardize,
                                           double nugget_max) {
  if (lf_at_hf.size() != X_hf.size()) throw FitError("Co-Kriging: lf_at_hf must hold one value per HF point");
  CoKrigingModel m;
  std::vector<double> pooled(y_hf.begin(), y_hf.end());
  pooled.insert(pooled.end(), y_lf.begin(), y_lf.end());
  m.std_ = Standardizer::fit(pooled, standardize);
  m.X_hf_ = to_matrix(X_hf);
  m.X_lf_ = to_matrix(X_lf);
  m.y_hf_ = standardized(y_hf, m.std_);
  m.y_lf_ = standardized(y_lf, m.std_);
  m.lf_at_hf_ = standardized(lf_at_hf, m.std_);
  const std::vector<double> ylf_std = to_std(m.y_lf_);
  m.lf_ = KrigingModel::with_params(X_lf, ylf_std, std::move(lf_params), false, nugget_max);
  m.sigma2_lf_ = std::max(m.lf_.sigma2(), kSigma2Floor);
  m.d_params_ = std::move(d_params);
  m.rho_ = rho;
  const VectorXd theta_d =
      Eigen::Map<const VectorXd>(m.d_params_.theta.data(), static_cast<Eigen::Index>(m.d_params_.theta.size()));
  const PairwiseDiff pd(m.X_hf_);
  MatrixXd psi;
  pd.fill(theta_d, m.d_params_.nugget, psi);
  Eigen::LLT<MatrixXd> llt(psi);
  if (llt.info() != Eigen::Success) throw FitError("Co-Kriging: difference correlation not positive definite");
  m.sigma2_d_ = std::max(concentrated_likelihood(llt, m.y_hf_ - rho * m.lf_at_hf_).sigma2, kSigma2Floor);
  m.nugget_ = std::max(m.lf_.params().nugget, m.d_params_.nugget);
  m.assemble(nugget_max);
  return m;
}

void CoKrigingModel::assemble(double nugget_max) {
  const Eigen::Index nl = X_lf_.rows();
  const Eigen::Index nh = X_hf_.rows();
  const auto& tl = lf_.params().theta;
  const VectorXd theta_lf = Eigen::Map<const VectorXd>(tl.data(), static_cast<Eigen::Index>(tl.size()));
  const VectorXd theta_d =
      Eigen::Map<const VectorXd>(d_params_.theta.data(), static_cast<Eigen::Index>(d_params_.theta.size()));
  const MatrixXd psi_ll = cross_correlation(X_lf_, X_lf_, theta_lf);
  const MatrixXd psi_lh = cross_correlation(X_lf_, X_hf_, theta_lf);
  const MatrixXd psi_hh = cross_correlation(X_hf_, X_hf_, theta_lf);
  const MatrixXd psi_d = cross_correlation(X_hf_, X_hf_, theta_d);
  const double s_lf = sigma2_lf_;
  const double s_d = sigma2_d_;

  for (;;) {
    MatrixXd C(nl + nh, nl + nh);
    C.topLeftCorner(nl, nl) = s_lf * (psi_ll + nugget_ * MatrixXd::Identity(nl, nl));
    C.topRightCorner(nl, nh) = rho_ * s_lf * psi_lh;
    C.bottomLeftCorner(nh, nl) = rho_ * s_lf * psi_lh.transpose();
    C.bottomRightCorner(nh, nh) = rho_ * rho_ * s_lf * (psi_hh + nugget_ * MatrixXd::Identity(nh, nh)) +
                                  s_d * (psi_d + nugget_ * MatrixXd::Identity(nh, nh));
    Eigen::LLT<MatrixXd> llt(C);
    if (llt.info() == Eigen::Success) {
      VectorXd Y(nl + nh);
      Y << y_lf_, y_hf_;
      const VectorXd ones = VectorXd::Ones(nl + nh);
      const VectorXd inv_one = llt.solve(ones);
      mu_ = inv_one.dot(Y) / inv_one.dot(ones);
      alpha_ = llt.solve(Y - mu_ * ones);
      L_ = llt.matrixL();
      return;
    }
    if (nugget_ * 10.0 > nugget_max * (1.0 + 1e-9)) {
      throw FitError("Co-Kriging: covariance matrix not positive definite at nugget " + std::to_string(nugget_) +
                     "; closest HF pair is " + closest_pair(X_hf_));
    }
    nugget_ *= 10.0;
    diagnostics_.push_back("covariance nugget escalated to " + std::to_string(nugget_));
  }
}

Prediction CoKrigingModel::predict(std::span<const double> x) const {
  if (x.size() != dimension()) throw Error("Co-Kriging predict: dimension mismatch");
  const auto& tl = lf_.params().theta;
  const VectorXd theta_lf = Eigen::Map<const VectorXd>(tl.data(), static_cast<Eigen::Index>(tl.size()));
  const VectorXd theta_d =
      Eigen::Map<const VectorXd>(d_params_.theta.data(), static_cast<Eigen::Index>(d_params_.theta.size()));
  const Eigen::Index nl = X_lf_.rows();
  const Eigen::Index nh = X_hf_.rows();
  VectorXd c(nl + nh);
  c.head(nl) = rho_ * sigma2_lf_ * correlation_vector(X_lf_, x, theta_lf);
  c.tail(nh) = rho_ * rho_ * sigma2_lf_ * correlation_vector(X_hf_, x, theta_lf) +
               sigma2_d_ * correlation_vector(X_hf_, x, theta_d);
  const double mean = mu_ + c.dot(alpha_);
  const VectorXd v = L_.triangularView<Eigen::Lower>().solve(c);
  const double mse = std::max(rho_ * rho_ * sigma2_lf_ + sigma2_d_ - v.squaredNorm(), 0.0);
  return {std_.inverse(mean), mse * std_.scale * std_.scale};
}

json CoKrigingModel::to_json() const {
  return json{{"type", "cokriging"},
              {"theta_lf", lf_.params().theta},
              {"theta_d", d_params_.theta},
              {"rho", rho_},
              {"mu", mu()},
              {"sigma2_lf", sigma2_lf()},
              {"sigma2_d", sigma2_d()},
              {"nugget", nugget_},
              {"n_hf", X_hf_.rows()},
              {"n_lf", X_lf_.rows()},
              {"lf_at_hf", source_ == LfAtHfSource::Colocated ? "colocated" : "lf_model_mean"},
              {"diagnostics", diagnostics_},
              {"standardizer", {{"shift", std_.shift}, {"scale", std_.scale}}}};
}

// ---------------------------------------------------------------------------
// Expected improvement

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double expected_improvement(const Prediction& pred, double f_min, double s_floor) {
  const double s = std::sqrt(std::max(pred.mse, 0.0));
  const double gain = f_min - pred.mean;
  if (s < s_floor) return std::max(gain, 0.0);
  const double z = gain / s;
  return std::max(gain * normal_cdf(z) + s * normal_pdf(z), 0.0);
}

}  // namespace mfmo::surrogate
