#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mcsa/estimators.hpp"

namespace mcsa {

/// Spread of a vector-valued gradient estimator. "Variance" is the trace of
/// the sample covariance, E||g - E g||^2.
struct VarianceReport {
  Method kind = Method::Msc;
  int budget = 0;
  int num_samples = 0;
  double variance = 0.0;
  Vector mean_grad;
  double second_moment = 0.0;  ///< mean of ||g||^2
  double max_grad_norm = 0.0;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Trace of the unbiased sample covariance of `samples` (n >= 2). The
/// result depends only on the order of `samples`, never on threading.
double trace_covariance(std::span<const Vector> samples, Vector* mean_out = nullptr);

/// Variance of one-step gradient estimates given a fixed previous state.
///
/// MSC, MSC-RB and JSA restart every replicate from `fixed_prev_state`.
/// pMCSA replicates draw a fresh set of N chains from the exact target, so
/// the target must carry its Gaussian form. Replicate r draws from the
/// stream (base, r) where base is taken once from ctx.rng.
VarianceReport conditional_variance(Method kind, const KernelContext& ctx,
                                    const Vector& fixed_prev_state, int budget, int num_samples,
                                    int threads = 1);

using ProposalFactory = std::function<Proposal(const VariationalParams&)>;

struct ReplicationOptions {
  int num_chains = 512;
  bool duplicate_seeds = false;  ///< every chain reuses stream 0
  int threads = 1;
};

/// For each iteration listed in `record_at` (1-based, ascending), the trace
/// covariance across independent chains of the gradient estimate at that
/// iteration. Every chain starts from a proposal draw at lambda_0 and then
/// follows the same parameter trace: iteration t uses lambda_{t-1}.
std::vector<double> replicated_gradient_variance(Method method,
                                                 std::span<const VariationalParams> lambda_trace,
                                                 const TargetModel& target,
                                                 const ProposalFactory& make_proposal,
                                                 int budget, std::span<const long> record_at,
                                                 const ReplicationOptions& options,
                                                 std::uint64_t seed);

/// Symbols appearing in the gradient second-moment bounds.
struct BoundInputs {
  double L = 0.0;         ///< score bound sup ||s||
  double w_star = 1.0;    ///< sup pi / q_def
  double chi2 = 0.0;      ///< chi^2(pi || q)
  int N = 2;
  long t = 1;
  double mu_norm_sq = 0.0;  ///< ||E_pi s||^2
  double c_cov = 0.0;       ///< JSA cross-sample covariance; 0 = ignored
};

/// MSC: L^2, independent of N.
double bound_msc(const BoundInputs& b);

/// MSC-RB with the explicit constants behind its O(N^{-3/2}) term, using
/// eps^2 = (N - 1)^{-1/2}:
///   4 L^2 [ (1 + eps^2 + g^{t-1}) chi2 / (N - 1)
///         + (1 + eps^{-2}) (1 + w*)^2 / N^2
///         + g^{t-1} (1 + w*) / (N - 1) ] + ||mu||^2,
/// with g = 2 w* / (2 w* + N - 2).
double bound_mscrb(const BoundInputs& b);

/// JSA without the O(1 / (w* + r^{tN})) remainder:
/// L^2 (1/2 + 3 / (2N)) + C_cov + ||mu||^2.
double bound_jsa(const BoundInputs& b);

/// pMCSA without the O(r^t) remainder: L^2 (2 - 1/w*) / N + ||mu||^2.
double bound_pmcsa(const BoundInputs& b);

/// exp(KL(p || q)) < w*(p, q). Throws when w* is infinite.
bool wstar_kl_check(const VariationalParams& p, const VariationalParams& q);

}  // namespace mcsa
