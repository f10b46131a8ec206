#pragma once

#include <vector>

#include "mcsa/distributions.hpp"

namespace mcsa {

/// Everything a pi-invariant kernel needs for one transition. Non-owning;
/// the rng stream must not be shared with another thread.
struct KernelContext {
  const TargetModel& target;
  const Proposal& proposal;
  Rng& rng;
};

struct CisOutcome {
  Vector next_state;
  std::vector<Vector> candidates;   ///< index 0 is the previous state
  std::vector<double> log_weights;  ///< log pi - log q_def per candidate
  int selected_index = 0;

  /// Normalized weights exp(log_w - logsumexp(log_w)).
  std::vector<double> normalized_weights() const;
};

struct ImhOutcome {
  Vector next_state;
  bool accepted = false;
  double log_weight_prev = 0.0;
  double log_weight_prop = 0.0;
};

/// Index drawn from normalized weights by inverse CDF with a single uniform.
int sample_index(std::span<const double> log_weights, double u);

/// Conditional importance sampling: N fresh proposals plus the retained
/// state, one of which is resampled by importance weight.
/// Throws std::domain_error when every candidate has zero weight.
CisOutcome cis_step(const KernelContext& ctx, const Vector& z_prev, int num_proposals);

/// Independent Metropolis-Hastings with acceptance min(1, w(z*)/w(z_prev)).
ImhOutcome imh_step(const KernelContext& ctx, const Vector& z_prev);

/// Kernel used by the discrete transition-matrix oracle.
struct DiscreteKernel {
  enum class Kind { Cis, Imh };
  Kind kind = Kind::Imh;
  int num_proposals = 1;  ///< CIS only

  static DiscreteKernel imh() { return {Kind::Imh, 1}; }
  static DiscreteKernel cis(int n) { return {Kind::Cis, n}; }
};

inline constexpr int kMaxGridSize = 64;
inline constexpr int kMaxExactCisProposals = 3;
inline constexpr long kDefaultCisMonteCarloSamples = 10'000'000;

/// Row-stochastic T[i][j] = P(next = j | prev = i) for the discrete analog
/// of the kernel on a finite grid with the given target and proposal pmfs.
/// CIS with more than three proposals is estimated by Monte Carlo using
/// `mc_samples` draws per row.
Matrix discrete_transition_matrix(const DiscreteKernel& kernel, std::span<const double> grid,
                                  std::span<const double> target_pmf,
                                  std::span<const double> proposal_pmf,
                                  std::uint64_t seed = 0,
                                  long mc_samples = kDefaultCisMonteCarloSamples);

struct Interval {
  double lower;
  double upper;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(long successes, long trials, double z = 4.0);

/// Total-variation contraction per step of the CIS kernel:
/// 1 - (N - 1) / (2 w* + N - 2).
double cis_mixing_rate(double w_star, int num_proposals);

/// 1 - 1/w*.
double imh_mixing_rate(double w_star);

/// Mixing rate of the Rao-Blackwellized CIS kernel, 2 w* / (2 w* + N - 2).
double mscrb_gamma(double w_star, int num_proposals);

}  // namespace mcsa
