#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "mcsa/kernels.hpp"

namespace mcsa {

enum class Method { Msc, MscRb, Jsa, Pmcsa, Elbo };

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);

/// Stochastic gradient of the inclusive KL with respect to (mean, log_scale).
struct GradientEstimate {
  Vector grad;
  int accepted = 0;     ///< accepted moves (IMH) or non-retained selections (CIS)
  int transitions = 0;  ///< kernel applications behind `accepted`
  std::optional<double> ess;

  std::optional<double> acceptance_rate() const;
};

struct MscState { Vector z; };
struct MscRbState { Vector z; };
struct JsaState { Vector z; };
/// N independent chains, each owning its own random stream.
struct PmcsaState {
  std::vector<Vector> chains;
  std::vector<Rng> streams;
};
struct ElboState {};

using ChainState = std::variant<MscState, MscRbState, JsaState, PmcsaState, ElboState>;

/// Markovian score climbing: one CIS transition with N - 1 proposals,
/// gradient -s(lambda; z_t).
GradientEstimate msc_step(const KernelContext& ctx, MscState& state, int budget);

/// Rao-Blackwellized MSC: the self-normalized weighted average of -s over
/// the CIS candidate set; the chain advances with the same CIS draw.
GradientEstimate msc_rb_step(const KernelContext& ctx, MscRbState& state, int budget);

/// Joint stochastic approximation: N sequential IMH transitions, averaged.
GradientEstimate jsa_step(const KernelContext& ctx, JsaState& state, int budget);

/// Parallel MCSA: one IMH transition per chain, averaged over chains.
/// Uses the per-chain streams in `state`, not ctx.rng.
GradientEstimate pmcsa_step(const KernelContext& ctx, PmcsaState& state, int budget);

/// Path-derivative (sticking-the-landing) gradient of the negative ELBO.
GradientEstimate elbo_step(const KernelContext& ctx, int budget);

GradientEstimate estimator_step(const KernelContext& ctx, ChainState& state, int budget);

/// Initial chain state: draws from the proposal, one per chain for pMCSA
/// with chain n streaming from (stream_seed, n).
ChainState init_chain_state(Method method, const Proposal& proposal, int budget, Rng& rng,
                            std::uint64_t stream_seed);

/// Same as init_chain_state but with chain positions given explicitly.
PmcsaState make_pmcsa_state(std::vector<Vector> chains, std::uint64_t stream_seed);

}  // namespace mcsa
