#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <variant>

#include "mcsa/rng.hpp"

namespace mcsa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Mean-field Gaussian q(z; lambda) parameterized by mean and log standard
/// deviation per dimension.
struct VariationalParams {
  Vector mean;
  Vector log_scale;

  VariationalParams(Vector mean, Vector log_scale);

  /// Unit isotropic Gaussian N(0, I_d).
  static VariationalParams standard(int dim);
  /// Inverse of flat(): first half mean, second half log-scale.
  static VariationalParams from_flat(const Vector& flat);

  int dim() const { return static_cast<int>(mean.size()); }
  Vector scale() const { return log_scale.array().exp(); }
  /// Concatenation (mean, log_scale), the layout used by gradients.
  Vector flat() const;
};

/// Gaussian with full covariance Sigma = L L^T.
struct FullGaussian {
  Vector mean;
  Matrix cov_factor;

  FullGaussian(Vector mean, Matrix cov_factor);
  static FullGaussian from_diag(const VariationalParams& params);

  int dim() const { return static_cast<int>(mean.size()); }
  Matrix covariance() const { return cov_factor * cov_factor.transpose(); }
  double log_density(const Vector& z) const;
  Vector grad_log_density(const Vector& z) const;
  Vector sample(Rng& rng) const;
};

/// Independent Student-t per dimension.
struct HeavyTail {
  double df;
  Vector location;
  Vector scale;

  HeavyTail(double df, Vector location, Vector scale);

  int dim() const { return static_cast<int>(location.size()); }
  double log_density(const Vector& z) const;
  Vector sample(Rng& rng) const;
};

inline constexpr double kDefaultAlpha = 0.95;
inline constexpr double kDefaultTailDf = 5.0;

/// q_def = alpha * q(.; lambda) + (1 - alpha) * tail.
struct DefensiveMixture {
  double alpha;
  VariationalParams variational;
  HeavyTail tail;

  DefensiveMixture(double alpha, VariationalParams variational, HeavyTail tail);

  /// Tail centred on the variational mean with matching per-dimension scale.
  static DefensiveMixture matched(const VariationalParams& params,
                                  double alpha = kDefaultAlpha,
                                  double tail_df = kDefaultTailDf);

  int dim() const { return variational.dim(); }
};

/// Independent proposal used by the kernels: either the variational
/// distribution itself or its defensive mixture.
class Proposal {
 public:
  explicit Proposal(VariationalParams plain) : dist_(std::move(plain)) {}
  explicit Proposal(DefensiveMixture mixture) : dist_(std::move(mixture)) {}

  int dim() const { return variational().dim(); }
  const VariationalParams& variational() const;
  bool is_defensive() const { return std::holds_alternative<DefensiveMixture>(dist_); }
  double log_density(const Vector& z) const;
  Vector sample(Rng& rng) const;

 private:
  std::variant<VariationalParams, DefensiveMixture> dist_;
};

/// Unnormalized target log-density with optional gradient and, for Gaussian
/// targets, the exact distribution.
struct TargetModel {
  int dim = 0;
  std::function<double(const Vector&)> log_density;
  std::function<Vector(const Vector&)> grad_log_density;
  std::optional<FullGaussian> exact;

  static TargetModel gaussian(FullGaussian dist);

  bool has_gradient() const { return static_cast<bool>(grad_log_density); }
};

double log_sum_exp(std::span<const double> values);

double log_density_diag(const VariationalParams& params, const Vector& z);

/// Score s(lambda; z) = grad_lambda log q(z; lambda), laid out as
/// (d/d mean, d/d log_scale).
Vector score_diag(const VariationalParams& params, const Vector& z);

Vector sample_diag(const VariationalParams& params, Rng& rng);

double mixture_log_density(const DefensiveMixture& mix, const Vector& z);
Vector sample_mixture(const DefensiveMixture& mix, Rng& rng);

/// Zero-mean Gaussian whose covariance is one draw of Wishart(nu, I/nu),
/// produced directly in Cholesky form via the Bartlett decomposition.
FullGaussian sample_wishart_target(int dim, double nu, Rng& rng);

/// KL(p || q).
double kl_gaussian(const FullGaussian& p, const FullGaussian& q);
double kl_gaussian(const FullGaussian& p, const VariationalParams& q);
double kl_gaussian(const VariationalParams& p, const VariationalParams& q);

/// chi^2(p || q) = int (p/q - 1)^2 q; +inf when the integral diverges.
double chi2_gaussian(const VariationalParams& p, const VariationalParams& q);

/// sup_z p(z) / q(z); +inf when unbounded.
double w_star_gaussian(const VariationalParams& p, const VariationalParams& q);

/// E_{z ~ target}[s(lambda; z)] in closed form.
Vector expected_score(const FullGaussian& target, const VariationalParams& params);

}  // namespace mcsa
