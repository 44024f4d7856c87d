#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "mfmo/common.hpp"
#include "mfmo/evolution.hpp"

/// Gaussian-process surrogates: ordinary Kriging for single-fidelity data and
/// two-level Co-Kriging (autoregressive LF scaling plus a difference process)
/// for HF/LF data, both fitted by maximizing the concentrated ln-likelihood.
namespace mfmo::surrogate {

class FitError : public Error {
 public:
  using Error::Error;
};

struct CorrelationParams {
  std::vector<double> theta;
  double nugget = 1e-8;
};

/// exp(-sum_k theta_k (a_k - b_k)^2).
double correlation(std::span<const double> a, std::span<const double> b, const CorrelationParams& params);

struct Prediction {
  double mean = 0.0;
  double mse = 0.0;
};

struct FitOptions {
  evo::ScalarDeOptions search{20, 50, 0.8, 0.9};
  double log10_theta_min = -3.0;
  double log10_theta_max = 3.0;
  double rho_min = -5.0;
  double rho_max = 5.0;
  double nugget = 1e-8;
  double nugget_max = 1e-4;
  bool standardize = true;
  std::uint64_t seed = 0;
  /// Optional starting points injected into the hyperparameter search.
  std::optional<std::vector<double>> warm_theta;
  std::optional<std::vector<double>> warm_theta_d;
  std::optional<double> warm_rho;
};

/// Affine output transform y' = (y - shift) / scale.
struct Standardizer {
  double shift = 0.0;
  double scale = 1.0;

  static Standardizer fit(std::span<const double> values, bool enabled);
  double forward(double y) const { return (y - shift) / scale; }
  double inverse(double y) const { return y * scale + shift; }
};

class Model {
 public:
  virtual ~Model() = default;
  virtual Prediction predict(std::span<const double> x) const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Ordinary Kriging with Gaussian correlation.
class KrigingModel final : public Model {
 public:
  static KrigingModel fit(const std::vector<Point>& X, std::span<const double> y, const FitOptions& options);
  /// Fixed hyperparameters; only mu, sigma^2 and the factorization are computed.
  static KrigingModel with_params(const std::vector<Point>& X, std::span<const double> y, CorrelationParams params,
                                  bool standardize = true, double nugget_max = 1e-4);

  Prediction predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  std::size_t dimension() const override { return static_cast<std::size_t>(X_.cols()); }

  const CorrelationParams& params() const { return params_; }
  /// mu-hat and sigma^2-hat in original output units.
  double mu() const { return std_.inverse(mu_); }
  double sigma2() const { return sigma2_ * std_.scale * std_.scale; }
  double log_likelihood() const { return log_likelihood_; }
  const Standardizer& standardizer() const { return std_; }
  /// Lower Cholesky factor of psi + nugget * I.
  const Eigen::MatrixXd& factor() const { return L_; }

 private:
  void finalize(bool escalate, double nugget_max);

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;  // standardized
  Standardizer std_;
  CorrelationParams params_;
  double mu_ = 0.0;
  double sigma2_ = 0.0;
  double log_likelihood_ = 0.0;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;  // psi^-1 (y - 1 mu)
};

/// Where the LF responses at the HF sites came from.
enum class LfAtHfSource { Colocated, LfModelMean };

/// Two-level Co-Kriging model of the HF response.
class CoKrigingModel final : public Model {
 public:
  /// `lf_at_hf` holds one LF value per HF point (co-located evaluations);
  /// when absent the LF Kriging mean at X_HF is used.
  static CoKrigingModel fit(const std::vector<Point>& X_hf, std::span<const double> y_hf,
                            const std::vector<Point>& X_lf, std::span<const double> y_lf,
                            std::optional<std::vector<double>> lf_at_hf, const FitOptions& options);

  /// Assembles the model from fixed hyperparameters (sigma^2 values are
  /// recomputed from the data by their closed forms).
  static CoKrigingModel with_params(const std::vector<Point>& X_hf, std::span<const double> y_hf,
                                    const std::vector<Point>& X_lf, std::span<const double> y_lf,
                                    std::span<const double> lf_at_hf, CorrelationParams lf_params,
                                    CorrelationParams d_params, double rho, bool standardize = true,
                                    double nugget_max = 1e-4);

  Prediction predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  std::size_t dimension() const override { return static_cast<std::size_t>(X_hf_.cols()); }

  const KrigingModel& lf_model() const { return lf_; }
  const CorrelationParams& lf_params() const { return lf_.params(); }
  const CorrelationParams& d_params() const { return d_params_; }
  double rho() const { return rho_; }
  /// Values in original output units.
  double sigma2_lf() const { return sigma2_lf_ * std_.scale * std_.scale; }
  double sigma2_d() const { return sigma2_d_ * std_.scale * std_.scale; }
  double mu() const { return std_.inverse(mu_); }
  /// Diagonal regularization actually used in the covariance blocks.
  double nugget() const { return nugget_; }
  LfAtHfSource lf_at_hf_source() const { return source_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  void assemble(double nugget_max);

  KrigingModel lf_;
  Standardizer std_;
  Eigen::MatrixXd X_hf_;
  Eigen::MatrixXd X_lf_;
  Eigen::VectorXd y_hf_;       // standardized
  Eigen::VectorXd y_lf_;       // standardized
  Eigen::VectorXd lf_at_hf_;   // standardized
  CorrelationParams d_params_;
  double rho_ = 1.0;
  double sigma2_lf_ = 0.0;
  double sigma2_d_ = 0.0;
  double mu_ = 0.0;
  double nugget_ = 1e-8;
  LfAtHfSource source_ = LfAtHfSource::Colocated;
  std::vector<std::string> diagnostics_;
  Eigen::MatrixXd L_;       // lower Cholesky factor of C
  Eigen::VectorXd alpha_;   // C^-1 (Y - 1 mu)
};

/// Standard normal CDF / PDF (CDF via erfc).
double normal_cdf(double z);
double normal_pdf(double z);

/// (f_min - y) Phi(z) + s phi(z), z = (f_min - y)/s, s = sqrt(mse);
/// max(f_min - y, 0) when s < s_floor.
double expected_improvement(const Prediction& pred, double f_min, double s_floor = 1e-12);

/// Concentrated ln-likelihood pieces for a correlation matrix given as a
/// lower Cholesky factor; exposed for tests and diagnostics.
struct ConcentratedLikelihood {
  double mu = 0.0;
  double sigma2 = 0.0;
  double log_likelihood = 0.0;
};
ConcentratedLikelihood concentrated_likelihood(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y);

}  // namespace mfmo::surrogate
