#include "mcsa/optimizers.hpp"

#include <cmath>
#include <stdexcept>

namespace mcsa {

std::string_view optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::Nesterov: return "nesterov";
    case OptimizerKind::Adam: return "adam";
  }
  return "?";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view name) {
  for (auto k : {OptimizerKind::Sgd, OptimizerKind::Momentum, OptimizerKind::Nesterov,
                 OptimizerKind::Adam})
    if (optimizer_name(k) == name) return k;
  return std::nullopt;
}

StepsizeSchedule::StepsizeSchedule(Kind k, double g) : kind(k), gamma(g) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("StepsizeSchedule: gamma must be positive");
}

double StepsizeSchedule::at(long t) const {
  if (t < 1) throw std::invalid_argument("StepsizeSchedule::at: t must be >= 1");
  switch (kind) {
    case Kind::Constant: return gamma;
    case Kind::InvSqrt: return gamma / std::sqrt(static_cast<double>(t));
    case Kind::Inv: return gamma / static_cast<double>(t);
  }
  return gamma;
}

std::string_view schedule_name(StepsizeSchedule::Kind kind) {
  switch (kind) {
    case StepsizeSchedule::Kind::Constant: return "constant";
    case StepsizeSchedule::Kind::InvSqrt: return "invsqrt";
    case StepsizeSchedule::Kind::Inv: return "inv";
  }
  return "?";
}

std::optional<StepsizeSchedule::Kind> parse_schedule(std::string_view name) {
  for (auto k : {StepsizeSchedule::Kind::Constant, StepsizeSchedule::Kind::InvSqrt,
                 StepsizeSchedule::Kind::Inv})
    if (schedule_name(k) == name) return k;
  return std::nullopt;
}

OptimizerState OptimizerState::make(OptimizerKind kind, int size) {
  OptimizerState state;
  switch (kind) {
    case OptimizerKind::Sgd: state.rule = SgdRule{}; break;
    case OptimizerKind::Momentum: state.rule = MomentumRule{Vector::Zero(size)}; break;
    case OptimizerKind::Nesterov: state.rule = NesterovRule{Vector::Zero(size)}; break;
    case OptimizerKind::Adam: state.rule = AdamRule{Vector::Zero(size), Vector::Zero(size)}; break;
  }
  return state;
}

OptimizerKind OptimizerState::kind() const {
  return static_cast<OptimizerKind>(rule.index());
}

Vector optimizer_update(OptimizerState& state, const Vector& params, const Vector& grad,
                        const StepsizeSchedule& schedule) {
  if (params.size() != grad.size())
    throw std::invalid_argument("optimizer_update: gradient/parameter size mismatch");
  if (!grad.allFinite()) throw std::domain_error("optimizer_update: non-finite gradient");

  const long t = state.step_count + 1;
  const double step = schedule.at(t);
  Vector direction = std::visit(
      [&](auto& rule) -> Vector {
        using R = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<R, SgdRule>) {
          return grad;
        } else if constexpr (std::is_same_v<R, MomentumRule>) {
          if (rule.velocity.size() != grad.size())
            throw std::invalid_argument("optimizer_update: buffer size mismatch");
          rule.velocity = rule.beta * rule.velocity + grad;
          return rule.velocity;
        } else if constexpr (std::is_same_v<R, NesterovRule>) {
          if (rule.velocity.size() != grad.size())
            throw std::invalid_argument("optimizer_update: buffer size mismatch");
          rule.velocity = rule.beta * rule.velocity + grad;
          return grad + rule.beta * rule.velocity;
        } else {
          if (rule.m.size() != grad.size() || rule.v.size() != grad.size())
            throw std::invalid_argument("optimizer_update: buffer size mismatch");
          rule.m = rule.beta1 * rule.m + (1.0 - rule.beta1) * grad;
          rule.v = rule.beta2 * rule.v + (1.0 - rule.beta2) * grad.cwiseAbs2();
          const double m_corr = 1.0 - std::pow(rule.beta1, static_cast<double>(t));
          const double v_corr = 1.0 - std::pow(rule.beta2, static_cast<double>(t));
          return ((rule.m / m_corr).array() /
                  ((rule.v / v_corr).array().sqrt() + rule.eps))
              .matrix();
        }
      },
      state.rule);
  state.step_count = t;
  return params - step * direction;
}

}  // namespace mcsa
