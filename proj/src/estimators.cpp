#include "mcsa/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace mcsa {
namespace {

void require_budget(int budget, int minimum, const char* what) {
  if (budget < minimum)
    throw std::invalid_argument(std::string(what) + ": budget N must be >= " +
                                std::to_string(minimum));
}

void check_finite(const GradientEstimate& est, const char* what) {
  if (!est.grad.allFinite())
    throw std::domain_error(std::string(what) + ": non-finite gradient");
}

double effective_sample_size(const std::vector<double>& normalized) {
  double sum_sq = 0.0;
  for (double w : normalized) sum_sq += w * w;
  return 1.0 / sum_sq;
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Msc: return "MSC";
    case Method::MscRb: return "MSCRB";
    case Method::Jsa: return "JSA";
    case Method::Pmcsa: return "PMCSA";
    case Method::Elbo: return "ELBO";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (auto m : {Method::Msc, Method::MscRb, Method::Jsa, Method::Pmcsa, Method::Elbo})
    if (method_name(m) == name) return m;
  // Kernel names used for the same estimators in the variance simulation.
  if (name == "CIS" || name == "MSC-CIS") return Method::Msc;
  if (name == "CISRB" || name == "MSC-RB" || name == "MSC-CISRB") return Method::MscRb;
  if (name == "PIMH" || name == "MSC-PIMH" || name == "pMCSA") return Method::Pmcsa;
  return std::nullopt;
}

std::optional<double> GradientEstimate::acceptance_rate() const {
  if (transitions == 0) return std::nullopt;
  return static_cast<double>(accepted) / transitions;
}

GradientEstimate msc_step(const KernelContext& ctx, MscState& state, int budget) {
  require_budget(budget, 2, "msc_step");
  auto cis = cis_step(ctx, state.z, budget - 1);
  state.z = std::move(cis.next_state);
  GradientEstimate est;
  est.grad = -score_diag(ctx.proposal.variational(), state.z);
  est.accepted = cis.selected_index != 0 ? 1 : 0;
  est.transitions = 1;
  est.ess = effective_sample_size(cis.normalized_weights());
  check_finite(est, "msc_step");
  return est;
}

GradientEstimate msc_rb_step(const KernelContext& ctx, MscRbState& state, int budget) {
  require_budget(budget, 2, "msc_rb_step");
  auto cis = cis_step(ctx, state.z, budget - 1);
  const auto weights = cis.normalized_weights();
  const auto& params = ctx.proposal.variational();
  GradientEstimate est;
  est.grad = Vector::Zero(2 * params.dim());
  for (std::size_t i = 0; i < cis.candidates.size(); ++i)
    if (weights[i] > 0.0) est.grad.noalias() -= weights[i] * score_diag(params, cis.candidates[i]);
  est.accepted = cis.selected_index != 0 ? 1 : 0;
  est.transitions = 1;
  est.ess = effective_sample_size(weights);
  state.z = std::move(cis.next_state);
  check_finite(est, "msc_rb_step");
  return est;
}

GradientEstimate jsa_step(const KernelContext& ctx, JsaState& state, int budget) {
  require_budget(budget, 1, "jsa_step");
  const auto& params = ctx.proposal.variational();
  GradientEstimate est;
  est.grad = Vector::Zero(2 * params.dim());
  for (int n = 0; n < budget; ++n) {
    auto imh = imh_step(ctx, state.z);
    if (imh.accepted) {
      state.z = std::move(imh.next_state);
      ++est.accepted;
    }
    est.grad.noalias() -= score_diag(params, state.z);
  }
  est.grad /= budget;
  est.transitions = budget;
  check_finite(est, "jsa_step");
  return est;
}

GradientEstimate pmcsa_step(const KernelContext& ctx, PmcsaState& state, int budget) {
  require_budget(budget, 1, "pmcsa_step");
  if (static_cast<int>(state.chains.size()) != budget ||
      state.streams.size() != state.chains.size())
    throw std::invalid_argument("pmcsa_step: state must hold exactly N chains");
  const auto& params = ctx.proposal.variational();
  GradientEstimate est;
  est.grad = Vector::Zero(2 * params.dim());
  for (int n = 0; n < budget; ++n) {
    const KernelContext chain_ctx{ctx.target, ctx.proposal, state.streams[n]};
    auto imh = imh_step(chain_ctx, state.chains[n]);
    if (imh.accepted) {
      state.chains[n] = std::move(imh.next_state);
      ++est.accepted;
    }
    est.grad.noalias() -= score_diag(params, state.chains[n]);
  }
  est.grad /= budget;
  est.transitions = budget;
  check_finite(est, "pmcsa_step");
  return est;
}

GradientEstimate elbo_step(const KernelContext& ctx, int budget) {
  require_budget(budget, 1, "elbo_step");
  if (!ctx.target.has_gradient())
    throw std::invalid_argument("elbo_step: target provides no gradient");
  const auto& params = ctx.proposal.variational();
  const int d = params.dim();
  const Vector scale = params.scale();
  GradientEstimate est;
  est.grad = Vector::Zero(2 * d);
  Vector eps(d);
  for (int n = 0; n < budget; ++n) {
    for (int i = 0; i < d; ++i) eps[i] = ctx.rng.normal();
    const Vector z = params.mean + scale.cwiseProduct(eps);
    // grad_z log q(z; lambda) with lambda held fixed is -eps / sigma.
    const Vector h = ctx.target.grad_log_density(z) + eps.cwiseQuotient(scale);
    est.grad.head(d) -= h;
    est.grad.tail(d) -= h.cwiseProduct(scale).cwiseProduct(eps);
  }
  est.grad /= budget;
  check_finite(est, "elbo_step");
  return est;
}

GradientEstimate estimator_step(const KernelContext& ctx, ChainState& state, int budget) {
  return std::visit(
      [&](auto& s) -> GradientEstimate {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MscState>) return msc_step(ctx, s, budget);
        else if constexpr (std::is_same_v<T, MscRbState>) return msc_rb_step(ctx, s, budget);
        else if constexpr (std::is_same_v<T, JsaState>) return jsa_step(ctx, s, budget);
        else if constexpr (std::is_same_v<T, PmcsaState>) return pmcsa_step(ctx, s, budget);
        else return elbo_step(ctx, budget);
      },
      state);
}

PmcsaState make_pmcsa_state(std::vector<Vector> chains, std::uint64_t stream_seed) {
  PmcsaState state;
  state.streams.reserve(chains.size());
  for (std::size_t n = 0; n < chains.size(); ++n)
    state.streams.push_back(Rng::stream(stream_seed, {n}));
  state.chains = std::move(chains);
  return state;
}

ChainState init_chain_state(Method method, const Proposal& proposal, int budget, Rng& rng,
                            std::uint64_t stream_seed) {
  switch (method) {
    case Method::Msc: return MscState{proposal.sample(rng)};
    case Method::MscRb: return MscRbState{proposal.sample(rng)};
    case Method::Jsa: return JsaState{proposal.sample(rng)};
    case Method::Pmcsa: {
      require_budget(budget, 1, "init_chain_state");
      std::vector<Vector> chains;
      chains.reserve(budget);
      for (int n = 0; n < budget; ++n) chains.push_back(proposal.sample(rng));
      return make_pmcsa_state(std::move(chains), stream_seed);
    }
    case Method::Elbo: return ElboState{};
  }
  throw std::invalid_argument("init_chain_state: unknown method");
}

}  // namespace mcsa
