#include "mcsa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mcsa {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_weight(const KernelContext& ctx, const Vector& z) {
  const double lp = ctx.target.log_density(z);
  if (lp == kNegInf) return kNegInf;
  return lp - ctx.proposal.log_density(z);
}

void validate_pmf(std::span<const double> pmf, std::size_t size, const char* name) {
  if (pmf.size() != size) throw std::invalid_argument(std::string(name) + ": size mismatch");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p > 0.0)) throw std::invalid_argument(std::string(name) + ": entries must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(name) + ": must sum to 1");
}

}  // namespace

std::vector<double> CisOutcome::normalized_weights() const {
  const double total = log_sum_exp(log_weights);
  std::vector<double> out(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), out.begin(),
                 [total](double lw) { return std::exp(lw - total); });
  return out;
}

int sample_index(std::span<const double> log_weights, double u) {
  const double total = log_sum_exp(log_weights);
  if (total == kNegInf) throw std::domain_error("sample_index: all weights are zero");
  double cdf = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == kNegInf) continue;
    cdf += std::exp(log_weights[i] - total);
    last_positive = static_cast<int>(i);
    if (u < cdf) return last_positive;
  }
  // Rounding can leave the final cdf slightly below 1.
  return last_positive;
}

CisOutcome cis_step(const KernelContext& ctx, const Vector& z_prev, int num_proposals) {
  if (num_proposals < 1) throw std::invalid_argument("cis_step: need at least one proposal");
  if (!z_prev.allFinite()) throw std::invalid_argument("cis_step: non-finite previous state");
  if (ctx.proposal.dim() != ctx.target.dim || z_prev.size() != ctx.target.dim)
    throw std::invalid_argument("cis_step: dimension mismatch");

  CisOutcome out;
  out.candidates.reserve(num_proposals + 1);
  out.log_weights.reserve(num_proposals + 1);
  out.candidates.push_back(z_prev);
  for (int i = 0; i < num_proposals; ++i) out.candidates.push_back(ctx.proposal.sample(ctx.rng));
  for (const auto& z : out.candidates) out.log_weights.push_back(log_weight(ctx, z));

  if (log_sum_exp(out.log_weights) == kNegInf)
    throw std::domain_error("cis_step: every candidate has zero importance weight");
  out.selected_index = sample_index(out.log_weights, ctx.rng.uniform());
  out.next_state = out.candidates[out.selected_index];
  return out;
}

ImhOutcome imh_step(const KernelContext& ctx, const Vector& z_prev) {
  if (ctx.proposal.dim() != ctx.target.dim || z_prev.size() != ctx.target.dim)
    throw std::invalid_argument("imh_step: dimension mismatch");
  ImhOutcome out;
  Vector proposal = ctx.proposal.sample(ctx.rng);
  out.log_weight_prev = log_weight(ctx, z_prev);
  out.log_weight_prop = log_weight(ctx, proposal);
  const double u = ctx.rng.uniform();
  if (out.log_weight_prop != kNegInf) {
    const double log_ratio = out.log_weight_prop - out.log_weight_prev;
    out.accepted = log_ratio >= 0.0 || u < std::exp(log_ratio);
  }
  out.next_state = out.accepted ? std::move(proposal) : z_prev;
  return out;
}

Matrix discrete_transition_matrix(const DiscreteKernel& kernel, std::span<const double> grid,
                                  std::span<const double> target_pmf,
                                  std::span<const double> proposal_pmf, std::uint64_t seed,
                                  long mc_samples) {
  const auto g = grid.size();
  if (g < 1 || g > static_cast<std::size_t>(kMaxGridSize))
    throw std::invalid_argument("discrete_transition_matrix: grid size must be in [1, 64]");
  validate_pmf(target_pmf, g, "target_pmf");
  validate_pmf(proposal_pmf, g, "proposal_pmf");
  const int n = static_cast<int>(g);

  std::vector<double> w(g);
  for (std::size_t j = 0; j < g; ++j) w[j] = target_pmf[j] / proposal_pmf[j];

  Matrix t = Matrix::Zero(n, n);
  if (kernel.kind == DiscreteKernel::Kind::Imh) {
    for (int i = 0; i < n; ++i) {
      double off = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        t(i, j) = proposal_pmf[j] * std::min(1.0, w[j] / w[i]);
        off += t(i, j);
      }
      t(i, i) = 1.0 - off;
    }
    return t;
  }

  const int np = kernel.num_proposals;
  if (np < 1) throw std::invalid_argument("discrete_transition_matrix: CIS needs N >= 1");

  if (np <= kMaxExactCisProposals) {
    // Enumerate every ordered tuple of proposal indices.
    std::vector<int> tuple(np, 0);
    const long combos = static_cast<long>(std::pow(static_cast<double>(n), np));
    for (int i = 0; i < n; ++i) {
      std::fill(tuple.begin(), tuple.end(), 0);
      for (long c = 0; c < combos; ++c) {
        double prob = 1.0;
        double total = w[i];
        for (int k : tuple) {
          prob *= proposal_pmf[k];
          total += w[k];
        }
        t(i, i) += prob * w[i] / total;
        for (int k : tuple) t(i, k) += prob * w[k] / total;
        for (int pos = 0; pos < np; ++pos) {
          if (++tuple[pos] < n) break;
          tuple[pos] = 0;
        }
      }
    }
    return t;
  }

  if (mc_samples < 1) throw std::invalid_argument("discrete_transition_matrix: mc_samples < 1");
  // Monte Carlo over proposal tuples; selection probabilities are accumulated
  // exactly given each tuple, which keeps rows stochastic to rounding.
  std::vector<double> cdf(g);
  std::partial_sum(proposal_pmf.begin(), proposal_pmf.end(), cdf.begin());
  cdf.back() = 1.0;
  std::vector<int> tuple(np);
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(i)});
    std::vector<double> row(g, 0.0);
    for (long s = 0; s < mc_samples; ++s) {
      double total = w[i];
      for (auto& k : tuple) {
        k = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), rng.uniform()) - cdf.begin());
        k = std::min(k, n - 1);
        total += w[k];
      }
      row[i] += w[i] / total;
      for (int k : tuple) row[k] += w[k] / total;
    }
    for (int j = 0; j < n; ++j) t(i, j) = row[j] / static_cast<double>(mc_samples);
  }
  return t;
}

Interval wilson_interval(long successes, long trials, double z) {
  if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be positive");
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nt)) / (1.0 + z2 / nt);
  const double half = z * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)) / (1.0 + z2 / nt);
  return {centre - half, centre + half};
}

double cis_mixing_rate(double w_star, int num_proposals) {
  if (num_proposals < 2) throw std::invalid_argument("cis_mixing_rate: N must be >= 2");
  if (!(w_star >= 1.0)) throw std::invalid_argument("cis_mixing_rate: w* must be >= 1");
  const double n = num_proposals;
  return 1.0 - (n - 1.0) / (2.0 * w_star + n - 2.0);
}

double imh_mixing_rate(double w_star) {
  if (!(w_star >= 1.0)) throw std::invalid_argument("imh_mixing_rate: w* must be >= 1");
  return 1.0 - 1.0 / w_star;
}

double mscrb_gamma(double w_star, int num_proposals) {
  if (num_proposals < 2) throw std::invalid_argument("mscrb_gamma: N must be >= 2");
  if (!(w_star >= 1.0)) throw std::invalid_argument("mscrb_gamma: w* must be >= 1");
  return 2.0 * w_star / (2.0 * w_star + num_proposals - 2.0);
}

}  // namespace mcsa
