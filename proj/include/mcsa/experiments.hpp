#pragma once

#include <vector>

#include "mcsa/config.hpp"
#include "mcsa/csv.hpp"
#include "mcsa/diagnostics.hpp"

namespace mcsa {

/// KL above which (or a non-finite parameter) a run is declared diverged.
inline constexpr double kDivergenceKl = 1e12;

struct RunOptions {
  int threads = 1;
  bool record_wall_time = false;  ///< wall_ns stays empty otherwise, keeping output reproducible
};

struct RunSummary {
  std::vector<RunRecord> records;
  int runs = 0;
  int diverged_runs = 0;

  bool all_diverged() const { return runs > 0 && diverged_runs == runs; }
};

/// Gaussian target shared by every cell of a run, derived from cfg.seed:
/// Wishart(nu, I/nu) covariance when nu > 0, otherwise identity covariance
/// with mean entries drawn from N(0, target_shift^2).
TargetModel make_experiment_target(const ExperimentConfig& cfg);

/// Kernel proposal for the current variational parameters.
Proposal make_experiment_proposal(const ExperimentConfig& cfg, const VariationalParams& params);

/// Result of one optimization run.
struct OptimizationRun {
  std::vector<RunRecord> records;         ///< experiment/method/N/repetition filled in
  std::vector<VariationalParams> trace;   ///< lambda_0..lambda_t, only when requested
  bool diverged = false;
  long last_iteration = 0;
  std::optional<double> final_kl;
};

struct OptimizationSpec {
  Method method = Method::Pmcsa;
  int budget = 4;
  OptimizerKind optimizer = OptimizerKind::Adam;
  StepsizeSchedule schedule{StepsizeSchedule::Kind::Constant, 0.01};
  long iterations = 0;
  long stride = 1;
  std::uint64_t seed = 0;
  bool keep_trace = false;
  bool record_wall_time = false;
};

/// Runs MCSA (or the ELBO baseline) from mean 0, log_scale 0, recording the
/// closed-form KL at t = 0, every `stride` iterations and at the end.
OptimizationRun optimize(const ExperimentConfig& cfg, const TargetModel& target,
                         const OptimizationSpec& spec);

RunSummary run_gaussian_convergence(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunSummary run_variance_simulation(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunSummary run_gradient_variance(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunSummary run_stepsize_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Dispatches on cfg.experiment.
RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace mcsa
