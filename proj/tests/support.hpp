#pragma once

#include <cmath>
#include <vector>

#include "mcsa/estimators.hpp"

namespace mcsa::test_support {

// Per-coordinate z-scores of the mean of a correlated sequence against
// `expected`, with standard errors from non-overlapping batch means.
struct MeanCheck {
  Vector mean;
  Vector std_error;
  double max_abs_z = 0.0;
};

inline MeanCheck batch_means(const std::vector<Vector>& xs, const Vector& expected,
                             int num_batches = 50) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index per = n / num_batches;
  const Eigen::Index dim = expected.size();
  Matrix batches = Matrix::Zero(dim, num_batches);
  for (int b = 0; b < num_batches; ++b) {
    for (Eigen::Index i = b * per; i < (b + 1) * per; ++i) batches.col(b) += xs[i];
    batches.col(b) /= static_cast<double>(per);
  }
  MeanCheck out;
  out.mean = batches.rowwise().mean();
  const Matrix centered = batches.colwise() - out.mean;
  out.std_error = (centered.array().square().rowwise().sum() / (num_batches - 1) / num_batches).sqrt();
  for (Eigen::Index k = 0; k < dim; ++k)
    out.max_abs_z = std::max(out.max_abs_z, std::abs(out.mean[k] - expected[k]) / out.std_error[k]);
  return out;
}

// A correlated 2-D Gaussian target and a mismatched diagonal q.
inline FullGaussian stationarity_target() {
  Matrix l(2, 2);
  l << 1.0, 0.0, 0.4, 0.8;
  return FullGaussian(Vector::Constant(2, 0.3), l);
}

inline VariationalParams stationarity_params() {
  Vector mean(2), log_scale(2);
  mean << 0.6, -0.2;
  log_scale << 0.3, 0.1;
  return VariationalParams(mean, log_scale);
}

// Mean gradient over `steps` applications of `method` at fixed lambda with
// the chain(s) initialized by exact draws from the target.
inline MeanCheck stationarity_check(Method method, int budget, int steps, std::uint64_t seed) {
  const auto dist = stationarity_target();
  const auto target = TargetModel::gaussian(dist);
  const auto params = stationarity_params();
  const Proposal proposal(DefensiveMixture::matched(params));
  Rng rng = Rng::stream(seed, {1});
  ChainState state;
  switch (method) {
    case Method::Msc: state = MscState{dist.sample(rng)}; break;
    case Method::MscRb: state = MscRbState{dist.sample(rng)}; break;
    case Method::Jsa: state = JsaState{dist.sample(rng)}; break;
    case Method::Pmcsa: {
      std::vector<Vector> chains;
      for (int n = 0; n < budget; ++n) chains.push_back(dist.sample(rng));
      state = make_pmcsa_state(std::move(chains), derive_seed(seed, {2}));
      break;
    }
    case Method::Elbo: state = ElboState{}; break;
  }
  const KernelContext ctx{target, proposal, rng};
  std::vector<Vector> grads;
  grads.reserve(steps);
  for (int i = 0; i < steps; ++i) grads.push_back(estimator_step(ctx, state, budget).grad);
  return batch_means(grads, -expected_score(dist, params));
}

}  // namespace mcsa::test_support
