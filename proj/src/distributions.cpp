#include "mcsa/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcsa {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(long expected, long actual, const char* what) {
  if (expected != actual)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " +
                                std::to_string(expected) + ", got " +
                                std::to_string(actual) + ")");
}

}  // namespace

VariationalParams::VariationalParams(Vector m, Vector ls)
    : mean(std::move(m)), log_scale(std::move(ls)) {
  if (mean.size() < 1) throw std::invalid_argument("VariationalParams: empty");
  require_dim(mean.size(), log_scale.size(), "VariationalParams");
  if (!mean.allFinite() || !log_scale.allFinite())
    throw std::invalid_argument("VariationalParams: non-finite entry");
}

VariationalParams VariationalParams::standard(int dim) {
  return {Vector::Zero(dim), Vector::Zero(dim)};
}

VariationalParams VariationalParams::from_flat(const Vector& flat) {
  if (flat.size() % 2 != 0) throw std::invalid_argument("from_flat: odd length");
  const auto d = flat.size() / 2;
  return {flat.head(d), flat.tail(d)};
}

Vector VariationalParams::flat() const {
  Vector out(2 * mean.size());
  out << mean, log_scale;
  return out;
}

FullGaussian::FullGaussian(Vector m, Matrix l) : mean(std::move(m)), cov_factor(std::move(l)) {
  require_dim(mean.size(), cov_factor.rows(), "FullGaussian");
  require_dim(mean.size(), cov_factor.cols(), "FullGaussian");
  if (!cov_factor.diagonal().allFinite() || (cov_factor.diagonal().array() <= 0.0).any())
    throw std::invalid_argument("FullGaussian: factor must have positive diagonal");
  cov_factor = cov_factor.triangularView<Eigen::Lower>();
}

FullGaussian FullGaussian::from_diag(const VariationalParams& params) {
  return {params.mean, params.scale().asDiagonal().toDenseMatrix()};
}

double FullGaussian::log_density(const Vector& z) const {
  require_dim(dim(), z.size(), "FullGaussian::log_density");
  const Vector u = cov_factor.triangularView<Eigen::Lower>().solve(z - mean);
  const double log_det = cov_factor.diagonal().array().log().sum();
  return -0.5 * dim() * kLogTwoPi - log_det - 0.5 * u.squaredNorm();
}

Vector FullGaussian::grad_log_density(const Vector& z) const {
  require_dim(dim(), z.size(), "FullGaussian::grad_log_density");
  const auto lower = cov_factor.triangularView<Eigen::Lower>();
  const Vector u = lower.solve(z - mean);
  return -lower.transpose().solve(u);
}

Vector FullGaussian::sample(Rng& rng) const {
  Vector eps(dim());
  for (int i = 0; i < dim(); ++i) eps[i] = rng.normal();
  return mean + cov_factor.triangularView<Eigen::Lower>() * eps;
}

HeavyTail::HeavyTail(double nu, Vector loc, Vector s)
    : df(nu), location(std::move(loc)), scale(std::move(s)) {
  require_dim(location.size(), scale.size(), "HeavyTail");
  if (!(df > 0.0)) throw std::invalid_argument("HeavyTail: df must be positive");
  if ((scale.array() <= 0.0).any() || !scale.allFinite())
    throw std::invalid_argument("HeavyTail: scale must be positive");
}

double HeavyTail::log_density(const Vector& z) const {
  require_dim(dim(), z.size(), "HeavyTail::log_density");
  const double norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                      0.5 * std::log(df * std::numbers::pi);
  double total = dim() * norm - scale.array().log().sum();
  for (int i = 0; i < dim(); ++i) {
    const double x = (z[i] - location[i]) / scale[i];
    total -= 0.5 * (df + 1.0) * std::log1p(x * x / df);
  }
  return total;
}

Vector HeavyTail::sample(Rng& rng) const {
  Vector z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = location[i] + scale[i] * rng.student_t(df);
  return z;
}

DefensiveMixture::DefensiveMixture(double a, VariationalParams v, HeavyTail t)
    : alpha(a), variational(std::move(v)), tail(std::move(t)) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("DefensiveMixture: alpha must lie in (0, 1)");
  require_dim(variational.dim(), tail.dim(), "DefensiveMixture");
}

DefensiveMixture DefensiveMixture::matched(const VariationalParams& params, double alpha,
                                           double tail_df) {
  return {alpha, params, HeavyTail(tail_df, params.mean, params.scale())};
}

const VariationalParams& Proposal::variational() const {
  if (const auto* mix = std::get_if<DefensiveMixture>(&dist_)) return mix->variational;
  return std::get<VariationalParams>(dist_);
}

double Proposal::log_density(const Vector& z) const {
  if (const auto* mix = std::get_if<DefensiveMixture>(&dist_))
    return mixture_log_density(*mix, z);
  return log_density_diag(std::get<VariationalParams>(dist_), z);
}

Vector Proposal::sample(Rng& rng) const {
  if (const auto* mix = std::get_if<DefensiveMixture>(&dist_)) return sample_mixture(*mix, rng);
  return sample_diag(std::get<VariationalParams>(dist_), rng);
}

TargetModel TargetModel::gaussian(FullGaussian dist) {
  TargetModel model;
  model.dim = dist.dim();
  model.exact = std::move(dist);
  // Captures a copy so the model stays valid independent of `exact`'s address.
  auto copy = *model.exact;
  model.log_density = [copy](const Vector& z) { return copy.log_density(z); };
  model.grad_log_density = [copy](const Vector& z) { return copy.grad_log_density(z); };
  return model;
}

double log_sum_exp(std::span<const double> values) {
  double hi = -kInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == -kInf) return -kInf;
  if (hi == kInf) return kInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double log_density_diag(const VariationalParams& params, const Vector& z) {
  require_dim(params.dim(), z.size(), "log_density_diag");
  double total = -0.5 * params.dim() * kLogTwoPi;
  for (int i = 0; i < params.dim(); ++i) {
    const double u = (z[i] - params.mean[i]) * std::exp(-params.log_scale[i]);
    total -= params.log_scale[i] + 0.5 * u * u;
  }
  return total;
}

Vector score_diag(const VariationalParams& params, const Vector& z) {
  require_dim(params.dim(), z.size(), "score_diag");
  const int d = params.dim();
  Vector s(2 * d);
  for (int i = 0; i < d; ++i) {
    const double inv_scale = std::exp(-params.log_scale[i]);
    const double u = (z[i] - params.mean[i]) * inv_scale;
    s[i] = u * inv_scale;
    s[d + i] = u * u - 1.0;
  }
  return s;
}

Vector sample_diag(const VariationalParams& params, Rng& rng) {
  Vector z(params.dim());
  for (int i = 0; i < params.dim(); ++i)
    z[i] = params.mean[i] + std::exp(params.log_scale[i]) * rng.normal();
  return z;
}

double mixture_log_density(const DefensiveMixture& mix, const Vector& z) {
  const double terms[2] = {std::log(mix.alpha) + log_density_diag(mix.variational, z),
                           std::log1p(-mix.alpha) + mix.tail.log_density(z)};
  return log_sum_exp(terms);
}

Vector sample_mixture(const DefensiveMixture& mix, Rng& rng) {
  if (rng.uniform() < mix.alpha) return sample_diag(mix.variational, rng);
  return mix.tail.sample(rng);
}

FullGaussian sample_wishart_target(int dim, double nu, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("sample_wishart_target: dim must be >= 1");
  if (nu < dim) throw std::invalid_argument("sample_wishart_target: nu must be >= dim");
  // Bartlett: W = A A^T / nu with A lower triangular, A_ii^2 ~ chi2(nu - i),
  // A_ij ~ N(0, 1) below the diagonal. A / sqrt(nu) is already the Cholesky factor.
  Matrix factor = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    factor(i, i) = std::sqrt(rng.chi_squared(nu - i));
    for (int j = 0; j < i; ++j) factor(i, j) = rng.normal();
  }
  factor /= std::sqrt(nu);
  return {Vector::Zero(dim), std::move(factor)};
}

double kl_gaussian(const FullGaussian& p, const FullGaussian& q) {
  require_dim(p.dim(), q.dim(), "kl_gaussian");
  const auto lq = q.cov_factor.triangularView<Eigen::Lower>();
  // tr(Sigma_q^{-1} Sigma_p) = ||L_q^{-1} L_p||_F^2
  const Matrix m = lq.solve(p.cov_factor);
  const Vector u = lq.solve(q.mean - p.mean);
  const double log_det_ratio =
      2.0 * (q.cov_factor.diagonal().array().log().sum() -
             p.cov_factor.diagonal().array().log().sum());
  const double kl = 0.5 * (m.squaredNorm() + u.squaredNorm() - p.dim() + log_det_ratio);
  return std::max(kl, 0.0);
}

double kl_gaussian(const FullGaussian& p, const VariationalParams& q) {
  require_dim(p.dim(), q.dim(), "kl_gaussian");
  const Vector inv_scale = (-q.log_scale).array().exp();
  const Matrix m = inv_scale.asDiagonal() * p.cov_factor;
  const Vector u = (q.mean - p.mean).cwiseProduct(inv_scale);
  const double log_det_ratio =
      2.0 * (q.log_scale.sum() - p.cov_factor.diagonal().array().log().sum());
  const double kl = 0.5 * (m.squaredNorm() + u.squaredNorm() - p.dim() + log_det_ratio);
  return std::max(kl, 0.0);
}

double kl_gaussian(const VariationalParams& p, const VariationalParams& q) {
  return kl_gaussian(FullGaussian::from_diag(p), q);
}

double chi2_gaussian(const VariationalParams& p, const VariationalParams& q) {
  require_dim(p.dim(), q.dim(), "chi2_gaussian");
  // int p^2/q = prod_i sigma_q / (sigma_p^2 sqrt(A)) exp((B^2/A - C)/2) with
  // A = 2/sp^2 - 1/sq^2, B = 2 mp/sp^2 - mq/sq^2, C = 2 mp^2/sp^2 - mq^2/sq^2.
  double log_integral = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    const double vp = std::exp(2.0 * p.log_scale[i]);
    const double vq = std::exp(2.0 * q.log_scale[i]);
    const double a = 2.0 / vp - 1.0 / vq;
    if (a <= 0.0) return kInf;
    const double dm = p.mean[i] - q.mean[i];
    // B^2/A - C simplifies to dm^2 * 2 / (2 vq - vp) after completing the square.
    const double quad = 2.0 * dm * dm / (2.0 * vq - vp);
    log_integral += q.log_scale[i] - 2.0 * p.log_scale[i] - 0.5 * std::log(a) + 0.5 * quad;
  }
  return std::max(std::expm1(log_integral), 0.0);
}

double w_star_gaussian(const VariationalParams& p, const VariationalParams& q) {
  require_dim(p.dim(), q.dim(), "w_star_gaussian");
  double log_sup = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    const double vp = std::exp(2.0 * p.log_scale[i]);
    const double vq = std::exp(2.0 * q.log_scale[i]);
    const double dm = p.mean[i] - q.mean[i];
    if (vq < vp) return kInf;
    if (vq == vp) {
      if (dm != 0.0) return kInf;
      continue;
    }
    log_sup += q.log_scale[i] - p.log_scale[i] + 0.5 * dm * dm / (vq - vp);
  }
  return std::exp(log_sup);
}

Vector expected_score(const FullGaussian& target, const VariationalParams& params) {
  require_dim(target.dim(), params.dim(), "expected_score");
  const int d = params.dim();
  const Vector var_target = target.covariance().diagonal();
  Vector s(2 * d);
  for (int i = 0; i < d; ++i) {
    const double inv_var = std::exp(-2.0 * params.log_scale[i]);
    const double dm = target.mean[i] - params.mean[i];
    s[i] = dm * inv_var;
    s[d + i] = (var_target[i] + dm * dm) * inv_var - 1.0;
  }
  return s;
}

}  // namespace mcsa
