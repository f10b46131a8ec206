#include "mcsa/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcsa/parallel.hpp"

namespace mcsa {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    compensation_ += (sum_ - t) + x;
  else
    compensation_ += (x - t) + sum_;
  sum_ = t;
}

double trace_covariance(std::span<const Vector> samples, Vector* mean_out) {
  const auto n = samples.size();
  if (n < 2) throw std::invalid_argument("trace_covariance: need at least two samples");
  const auto dim = samples.front().size();
  Vector mean(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    CompensatedSum acc;
    for (const auto& s : samples) acc.add(s[k]);
    mean[k] = acc.value() / static_cast<double>(n);
  }
  CompensatedSum total;
  for (Eigen::Index k = 0; k < dim; ++k) {
    CompensatedSum acc;
    for (const auto& s : samples) {
      const double dev = s[k] - mean[k];
      acc.add(dev * dev);
    }
    total.add(acc.value());
  }
  if (mean_out) *mean_out = std::move(mean);
  return total.value() / static_cast<double>(n - 1);
}

VarianceReport conditional_variance(Method kind, const KernelContext& ctx,
                                    const Vector& fixed_prev_state, int budget, int num_samples,
                                    int threads) {
  if (num_samples < 2) throw std::invalid_argument("conditional_variance: num_samples must be >= 2");
  if (kind == Method::Pmcsa && !ctx.target.exact)
    throw std::invalid_argument(
        "conditional_variance: pMCSA replicates need a directly sampleable target");

  const std::uint64_t base = ctx.rng.next_u64();
  std::vector<Vector> grads(num_samples);
  parallel_for(static_cast<std::size_t>(num_samples), threads, [&](std::size_t r) {
    Rng rng = Rng::stream(base, {r});
    const KernelContext local{ctx.target, ctx.proposal, rng};
    switch (kind) {
      case Method::Msc: {
        MscState s{fixed_prev_state};
        grads[r] = msc_step(local, s, budget).grad;
        break;
      }
      case Method::MscRb: {
        MscRbState s{fixed_prev_state};
        grads[r] = msc_rb_step(local, s, budget).grad;
        break;
      }
      case Method::Jsa: {
        JsaState s{fixed_prev_state};
        grads[r] = jsa_step(local, s, budget).grad;
        break;
      }
      case Method::Pmcsa: {
        std::vector<Vector> chains;
        chains.reserve(budget);
        for (int n = 0; n < budget; ++n) chains.push_back(ctx.target.exact->sample(rng));
        auto s = make_pmcsa_state(std::move(chains), derive_seed(base, {r, 1}));
        grads[r] = pmcsa_step(local, s, budget).grad;
        break;
      }
      case Method::Elbo: grads[r] = elbo_step(local, budget).grad; break;
    }
  });

  VarianceReport report;
  report.kind = kind;
  report.budget = budget;
  report.num_samples = num_samples;
  report.variance = trace_covariance(grads, &report.mean_grad);
  CompensatedSum sq;
  for (const auto& g : grads) {
    sq.add(g.squaredNorm());
    report.max_grad_norm = std::max(report.max_grad_norm, g.norm());
  }
  report.second_moment = sq.value() / num_samples;
  return report;
}

std::vector<double> replicated_gradient_variance(Method method,
                                                 std::span<const VariationalParams> lambda_trace,
                                                 const TargetModel& target,
                                                 const ProposalFactory& make_proposal,
                                                 int budget, std::span<const long> record_at,
                                                 const ReplicationOptions& options,
                                                 std::uint64_t seed) {
  if (lambda_trace.empty())
    throw std::invalid_argument("replicated_gradient_variance: empty parameter trace");
  if (options.num_chains < 2)
    throw std::invalid_argument("replicated_gradient_variance: need at least two chains");
  const long horizon = static_cast<long>(lambda_trace.size());
  for (std::size_t k = 0; k < record_at.size(); ++k) {
    if (record_at[k] < 1 || record_at[k] > horizon || (k > 0 && record_at[k] <= record_at[k - 1]))
      throw std::invalid_argument(
          "replicated_gradient_variance: record iterations must be ascending within the trace");
  }
  if (record_at.empty()) return {};

  const long last = record_at.back();
  std::vector<Proposal> proposals;
  proposals.reserve(last);
  for (long t = 0; t < last; ++t) proposals.push_back(make_proposal(lambda_trace[t]));

  const auto chains = static_cast<std::size_t>(options.num_chains);
  // grads[record][chain]
  std::vector<std::vector<Vector>> grads(record_at.size(), std::vector<Vector>(chains));
  parallel_for(chains, options.threads, [&](std::size_t c) {
    const std::uint64_t key = options.duplicate_seeds ? 0 : c;
    Rng rng = Rng::stream(seed, {key});
    ChainState state =
        init_chain_state(method, proposals.front(), budget, rng, derive_seed(seed, {key, 1}));
    std::size_t next_record = 0;
    for (long t = 1; t <= last; ++t) {
      const KernelContext ctx{target, proposals[t - 1], rng};
      auto est = estimator_step(ctx, state, budget);
      if (t == record_at[next_record]) grads[next_record++][c] = std::move(est.grad);
    }
  });

  std::vector<double> out;
  out.reserve(record_at.size());
  for (const auto& g : grads) out.push_back(trace_covariance(g));
  return out;
}

double bound_msc(const BoundInputs& b) { return b.L * b.L; }

double bound_mscrb(const BoundInputs& b) {
  if (b.N < 2) throw std::invalid_argument("bound_mscrb: N must be >= 2");
  if (b.t < 1) throw std::invalid_argument("bound_mscrb: t must be >= 1");
  const double n = b.N;
  const double eps_sq = 1.0 / std::sqrt(n - 1.0);
  const double gamma_pow = std::pow(mscrb_gamma(b.w_star, b.N), static_cast<double>(b.t - 1));
  const double bracket = (1.0 + eps_sq + gamma_pow) * b.chi2 / (n - 1.0) +
                         (1.0 + 1.0 / eps_sq) * (1.0 + b.w_star) * (1.0 + b.w_star) / (n * n) +
                         gamma_pow * (1.0 + b.w_star) / (n - 1.0);
  return 4.0 * b.L * b.L * bracket + b.mu_norm_sq;
}

double bound_jsa(const BoundInputs& b) {
  if (b.N < 1) throw std::invalid_argument("bound_jsa: N must be >= 1");
  return b.L * b.L * (0.5 + 1.5 / b.N) + b.c_cov + b.mu_norm_sq;
}

double bound_pmcsa(const BoundInputs& b) {
  if (b.N < 1) throw std::invalid_argument("bound_pmcsa: N must be >= 1");
  if (!(b.w_star >= 1.0)) throw std::invalid_argument("bound_pmcsa: w* must be >= 1");
  return b.L * b.L * (2.0 - 1.0 / b.w_star) / b.N + b.mu_norm_sq;
}

bool wstar_kl_check(const VariationalParams& p, const VariationalParams& q) {
  const double w_star = w_star_gaussian(p, q);
  if (!std::isfinite(w_star)) throw std::domain_error("wstar_kl_check: w* is infinite");
  return std::exp(kl_gaussian(p, q)) < w_star;
}

}  // namespace mcsa
