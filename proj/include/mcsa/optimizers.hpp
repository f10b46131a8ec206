#pragma once

#include <optional>
#include <string_view>
#include <variant>

#include "mcsa/distributions.hpp"

namespace mcsa {

enum class OptimizerKind { Sgd, Momentum, Nesterov, Adam };

std::string_view optimizer_name(OptimizerKind kind);
std::optional<OptimizerKind> parse_optimizer(std::string_view name);

struct StepsizeSchedule {
  enum class Kind { Constant, InvSqrt, Inv };
  Kind kind = Kind::Constant;
  double gamma = 0.01;

  StepsizeSchedule(Kind kind, double gamma);

  /// Stepsize at 1-based iteration t.
  double at(long t) const;
};

std::string_view schedule_name(StepsizeSchedule::Kind kind);
std::optional<StepsizeSchedule::Kind> parse_schedule(std::string_view name);

struct SgdRule {};
struct MomentumRule {
  Vector velocity;
  double beta = 0.9;
};
struct NesterovRule {
  Vector velocity;
  double beta = 0.9;
};
struct AdamRule {
  Vector m;
  Vector v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::variant<SgdRule, MomentumRule, NesterovRule, AdamRule> rule;
  long step_count = 0;

  /// Fresh state with zeroed buffers for a parameter vector of length `size`.
  static OptimizerState make(OptimizerKind kind, int size);
  OptimizerKind kind() const;
};

/// One descent step params - gamma_t * direction(grad). Throws
/// std::domain_error on a non-finite gradient; nothing is clipped.
Vector optimizer_update(OptimizerState& state, const Vector& params, const Vector& grad,
                        const StepsizeSchedule& schedule);

}  // namespace mcsa
