#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcsa/estimators.hpp"
#include "mcsa/optimizers.hpp"

namespace mcsa {

enum class ExperimentKind { GaussianConvergence, VarianceSimulation, GradientVariance, StepsizeSweep };

std::string_view experiment_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment(std::string_view name);

/// Raised for malformed or inconsistent configuration; `line` is 0 when the
/// problem is not tied to one line of the file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::GaussianConvergence;
  int dim = 20;
  double nu = 0.0;            ///< Wishart degrees of freedom; 0 selects an isotropic target
  double target_shift = 1.0;  ///< isotropic target: mean entries ~ N(0, shift^2)
  std::vector<Method> methods{Method::Msc, Method::MscRb, Method::Pmcsa};
  std::vector<int> budgets{4, 16, 64};
  long iterations = 5000;
  int repetitions = 10;

  OptimizerKind optimizer = OptimizerKind::Adam;
  StepsizeSchedule::Kind schedule = StepsizeSchedule::Kind::Constant;
  double stepsize = 0.01;
  /// Stepsize sweep grid; empty lists fall back to {optimizer} and a
  /// log-spaced 1e-4..1 grid.
  std::vector<OptimizerKind> sweep_optimizers;
  std::vector<double> sweep_stepsizes;

  bool defensive = true;
  double alpha = kDefaultAlpha;
  double tail_df = kDefaultTailDf;

  std::uint64_t seed = 1;
  std::string output_path;
  long record_stride = 0;  ///< 0 selects max(1, T / 200)
  bool full_resolution = false;

  int num_chains = 512;
  bool duplicate_seeds = false;

  std::vector<double> mean_shifts{0.0, 2.0, 4.0};
  int num_samples = 1 << 14;
  double prev_state = 0.0;

  long effective_stride() const;
  std::vector<OptimizerKind> sweep_optimizer_grid() const;
  std::vector<double> sweep_stepsize_grid() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, repeated
/// keys and malformed values are errors reported with their line number.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field checks; throws ConfigError with line 0.
void validate_config(const ExperimentConfig& cfg);

}  // namespace mcsa
