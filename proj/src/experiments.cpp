#include "mcsa/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mcsa/parallel.hpp"

namespace mcsa {
namespace {

constexpr std::uint64_t kTargetStream = 0x7461726765740000ULL;
constexpr double kMaxAbsLogScale = 300.0;

std::string label_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

/// Runs every cell on the pool and concatenates per-cell rows in cell order.
template <class Cell, class Fn>
RunSummary run_cells(const std::vector<Cell>& cells, int threads, Fn&& fn) {
  std::vector<OptimizationRun> results(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) { results[i] = fn(cells[i]); });
  RunSummary summary;
  for (auto& r : results) {
    ++summary.runs;
    if (r.diverged) ++summary.diverged_runs;
    for (auto& rec : r.records) summary.records.push_back(std::move(rec));
  }
  return summary;
}

struct RunCell {
  Method method;
  int budget;
  int repetition;
};

std::vector<RunCell> method_cells(const ExperimentConfig& cfg) {
  std::vector<RunCell> cells;
  for (auto m : cfg.methods)
    for (int n : cfg.budgets)
      for (int r = 0; r < cfg.repetitions; ++r) cells.push_back({m, n, r});
  return cells;
}

std::uint64_t cell_seed(std::uint64_t seed, const RunCell& c, std::uint64_t extra = 0) {
  return derive_seed(seed, {static_cast<std::uint64_t>(c.method), static_cast<std::uint64_t>(c.budget),
                            static_cast<std::uint64_t>(c.repetition), extra});
}

}  // namespace

TargetModel make_experiment_target(const ExperimentConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, {kTargetStream});
  if (cfg.nu > 0.0) return TargetModel::gaussian(sample_wishart_target(cfg.dim, cfg.nu, rng));
  Vector mean(cfg.dim);
  for (int i = 0; i < cfg.dim; ++i) mean[i] = cfg.target_shift * rng.normal();
  return TargetModel::gaussian(FullGaussian(std::move(mean), Matrix::Identity(cfg.dim, cfg.dim)));
}

Proposal make_experiment_proposal(const ExperimentConfig& cfg, const VariationalParams& params) {
  if (cfg.defensive) return Proposal(DefensiveMixture::matched(params, cfg.alpha, cfg.tail_df));
  return Proposal(params);
}

OptimizationRun optimize(const ExperimentConfig& cfg, const TargetModel& target,
                         const OptimizationSpec& spec) {
  if (!target.exact) throw std::invalid_argument("optimize: closed-form KL needs a Gaussian target");
  const auto start = std::chrono::steady_clock::now();
  OptimizationRun run;
  auto params = VariationalParams::standard(target.dim);
  Vector flat = params.flat();
  auto optimizer = OptimizerState::make(spec.optimizer, static_cast<int>(flat.size()));
  Rng rng(spec.seed);

  long window_accepted = 0;
  long window_transitions = 0;
  auto record = [&](long t, std::optional<double> kl, bool diverged) {
    RunRecord rec;
    rec.method = std::string(method_name(spec.method));
    rec.N = spec.budget;
    rec.iteration = t;
    rec.kl = kl;
    if (window_transitions > 0)
      rec.acceptance_rate = static_cast<double>(window_accepted) / window_transitions;
    window_accepted = window_transitions = 0;
    rec.diverged = diverged;
    if (spec.record_wall_time)
      rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    run.records.push_back(std::move(rec));
  };

  double kl = kl_gaussian(*target.exact, params);
  run.final_kl = kl;
  record(0, kl, false);
  if (spec.keep_trace) run.trace.push_back(params);

  auto proposal = make_experiment_proposal(cfg, params);
  ChainState state = init_chain_state(spec.method, proposal, spec.budget, rng,
                                      derive_seed(spec.seed, {1}));
  for (long t = 1; t <= spec.iterations; ++t) {
    GradientEstimate est;
    std::optional<double> diverged_kl;
    try {
      const KernelContext ctx{target, proposal, rng};
      est = estimator_step(ctx, state, spec.budget);
      flat = optimizer_update(optimizer, flat, est.grad, spec.schedule);
    } catch (const std::domain_error&) {
      run.diverged = true;
    }
    window_accepted += est.accepted;
    window_transitions += est.transitions;

    if (!run.diverged) {
      const Vector log_scale = flat.tail(target.dim);
      if (!flat.allFinite() || log_scale.cwiseAbs().maxCoeff() > kMaxAbsLogScale) {
        run.diverged = true;
      } else {
        params = VariationalParams::from_flat(flat);
        kl = kl_gaussian(*target.exact, params);
        if (!std::isfinite(kl) || kl > kDivergenceKl) {
          run.diverged = true;
          if (std::isfinite(kl)) diverged_kl = kl;
        }
      }
    }
    if (run.diverged) {
      run.last_iteration = t;
      run.final_kl.reset();
      record(t, diverged_kl, true);
      return run;
    }
    run.final_kl = kl;
    if (spec.keep_trace) run.trace.push_back(params);
    if (t % spec.stride == 0 || t == spec.iterations) record(t, kl, false);
    proposal = make_experiment_proposal(cfg, params);
  }
  run.last_iteration = spec.iterations;
  return run;
}

RunSummary run_gaussian_convergence(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto target = make_experiment_target(cfg);
  const StepsizeSchedule schedule(cfg.schedule, cfg.stepsize);
  const auto name = std::string(experiment_name(cfg.experiment));
  return run_cells(method_cells(cfg), opts.threads, [&](const RunCell& c) {
    OptimizationSpec spec;
    spec.method = c.method;
    spec.budget = c.budget;
    spec.optimizer = cfg.optimizer;
    spec.schedule = schedule;
    spec.iterations = cfg.iterations;
    spec.stride = cfg.effective_stride();
    spec.seed = cell_seed(cfg.seed, c);
    spec.record_wall_time = opts.record_wall_time;
    auto run = optimize(cfg, target, spec);
    for (auto& rec : run.records) {
      rec.experiment = name;
      rec.repetition = c.repetition;
    }
    return run;
  });
}

RunSummary run_variance_simulation(const ExperimentConfig& cfg, const RunOptions& opts) {
  struct Cell {
    std::size_t shift_index;
    RunCell run;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < cfg.mean_shifts.size(); ++s)
    for (auto& c : method_cells(cfg)) cells.push_back({s, c});

  // Target N(0, 1); proposal N(mu, 2) with mu = -shift so that
  // E_target[z] - E_q[z] = shift.
  const auto target = TargetModel::gaussian(FullGaussian(Vector::Zero(1), Matrix::Identity(1, 1)));
  const Vector prev = Vector::Constant(1, cfg.prev_state);
  return run_cells(cells, opts.threads, [&](const Cell& cell) {
    const double shift = cfg.mean_shifts[cell.shift_index];
    const auto start = std::chrono::steady_clock::now();
    const Proposal proposal(
        VariationalParams(Vector::Constant(1, -shift), Vector::Constant(1, 0.5 * std::log(2.0))));
    Rng rng(cell_seed(cfg.seed, cell.run, cell.shift_index + 1));
    const KernelContext ctx{target, proposal, rng};
    const auto report =
        conditional_variance(cell.run.method, ctx, prev, cell.run.budget, cfg.num_samples);
    RunRecord rec;
    rec.experiment = std::string(experiment_name(cfg.experiment)) + ":dmu=" + label_number(shift);
    rec.method = std::string(method_name(cell.run.method));
    rec.N = cell.run.budget;
    rec.repetition = cell.run.repetition;
    rec.iteration = 0;
    rec.grad_variance = report.variance;
    if (opts.record_wall_time)
      rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    OptimizationRun run;
    run.records.push_back(std::move(rec));
    return run;
  });
}

RunSummary run_gradient_variance(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto target = make_experiment_target(cfg);
  const StepsizeSchedule schedule(cfg.schedule, cfg.stepsize);
  const auto name = std::string(experiment_name(cfg.experiment));
  const ProposalFactory factory = [&cfg](const VariationalParams& p) {
    return make_experiment_proposal(cfg, p);
  };
  return run_cells(method_cells(cfg), opts.threads, [&](const RunCell& c) {
    OptimizationSpec spec;
    spec.method = c.method;
    spec.budget = c.budget;
    spec.optimizer = cfg.optimizer;
    spec.schedule = schedule;
    spec.iterations = cfg.iterations;
    spec.stride = cfg.effective_stride();
    spec.seed = cell_seed(cfg.seed, c);
    spec.keep_trace = true;
    spec.record_wall_time = opts.record_wall_time;
    auto run = optimize(cfg, target, spec);

    std::vector<long> record_at;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < run.records.size(); ++i) {
      const long t = run.records[i].iteration;
      if (t >= 1 && t < static_cast<long>(run.trace.size()) + 1 && !run.records[i].diverged) {
        record_at.push_back(t);
        rows.push_back(i);
      }
    }
    ReplicationOptions ropts;
    ropts.num_chains = cfg.num_chains;
    ropts.duplicate_seeds = cfg.duplicate_seeds;
    const auto variances = replicated_gradient_variance(c.method, run.trace, target, factory,
                                                        c.budget, record_at, ropts,
                                                        cell_seed(cfg.seed, c, 2));
    for (std::size_t k = 0; k < rows.size(); ++k)
      run.records[rows[k]].grad_variance = variances[k];
    for (auto& rec : run.records) {
      rec.experiment = name;
      rec.repetition = c.repetition;
    }
    return run;
  });
}

RunSummary run_stepsize_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  struct Cell {
    OptimizerKind optimizer;
    std::size_t gamma_index;
    double gamma;
    RunCell run;
  };
  const auto optimizers = cfg.sweep_optimizer_grid();
  const auto gammas = cfg.sweep_stepsize_grid();
  if (optimizers.empty() || gammas.empty())
    throw ConfigError(0, "stepsize_sweep needs nonempty optimizer and stepsize grids");
  std::vector<Cell> cells;
  for (auto opt : optimizers)
    for (std::size_t g = 0; g < gammas.size(); ++g)
      for (auto& c : method_cells(cfg)) cells.push_back({opt, g, gammas[g], c});

  const auto target = make_experiment_target(cfg);
  return run_cells(cells, opts.threads, [&](const Cell& cell) {
    OptimizationSpec spec;
    spec.method = cell.run.method;
    spec.budget = cell.run.budget;
    spec.optimizer = cell.optimizer;
    spec.schedule = StepsizeSchedule(cfg.schedule, cell.gamma);
    spec.iterations = cfg.iterations;
    spec.stride = std::max(1L, cfg.iterations);
    spec.seed = cell_seed(cfg.seed, cell.run,
                          (static_cast<std::uint64_t>(cell.optimizer) << 32) | cell.gamma_index);
    spec.record_wall_time = opts.record_wall_time;
    auto run = optimize(cfg, target, spec);
    // Only the final row is reported.
    RunRecord last = std::move(run.records.back());
    last.experiment = std::string(experiment_name(cfg.experiment)) + ":optimizer=" +
                      std::string(optimizer_name(cell.optimizer)) + ":gamma=" +
                      label_number(cell.gamma);
    last.repetition = cell.run.repetition;
    run.records.assign(1, std::move(last));
    return run;
  });
}

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  validate_config(cfg);
  switch (cfg.experiment) {
    case ExperimentKind::GaussianConvergence: return run_gaussian_convergence(cfg, opts);
    case ExperimentKind::VarianceSimulation: return run_variance_simulation(cfg, opts);
    case ExperimentKind::GradientVariance: return run_gradient_variance(cfg, opts);
    case ExperimentKind::StepsizeSweep: return run_stepsize_sweep(cfg, opts);
  }
  throw ConfigError(0, "unknown experiment");
}

}  // namespace mcsa
