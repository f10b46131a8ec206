#include "mcsa/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mcsa {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
T parse_number(std::string_view text, int line, std::string_view key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty())
    throw ConfigError(line, "invalid value '" + std::string(text) + "' for '" +
                                std::string(key) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      throw ConfigError(line, "non-finite value for '" + std::string(key) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text, int line, std::string_view key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(line, "expected boolean for '" + std::string(key) + "', got '" +
                              std::string(text) + "'");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, int)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"experiment",
       [](ExperimentConfig& c, std::string_view v, int line) {
         auto kind = parse_experiment(v);
         if (!kind) throw ConfigError(line, "unknown experiment '" + std::string(v) + "'");
         c.experiment = *kind;
       }},
      {"dim", [](ExperimentConfig& c, std::string_view v, int line) { c.dim = parse_number<int>(v, line, "dim"); }},
      {"nu", [](ExperimentConfig& c, std::string_view v, int line) { c.nu = parse_number<double>(v, line, "nu"); }},
      {"target_shift",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.target_shift = parse_number<double>(v, line, "target_shift");
       }},
      {"methods",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.methods.clear();
         for (auto item : split_list(v)) {
           auto m = parse_method(item);
           if (!m) throw ConfigError(line, "unknown method '" + std::string(item) + "'");
           c.methods.push_back(*m);
         }
       }},
      {"budgets",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.budgets.clear();
         for (auto item : split_list(v)) c.budgets.push_back(parse_number<int>(item, line, "budgets"));
       }},
      {"iterations",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.iterations = parse_number<long>(v, line, "iterations");
       }},
      {"repetitions",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.repetitions = parse_number<int>(v, line, "repetitions");
       }},
      {"optimizer",
       [](ExperimentConfig& c, std::string_view v, int line) {
         auto k = parse_optimizer(v);
         if (!k) throw ConfigError(line, "unknown optimizer '" + std::string(v) + "'");
         c.optimizer = *k;
       }},
      {"schedule",
       [](ExperimentConfig& c, std::string_view v, int line) {
         auto k = parse_schedule(v);
         if (!k) throw ConfigError(line, "unknown schedule '" + std::string(v) + "'");
         c.schedule = *k;
       }},
      {"stepsize",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.stepsize = parse_number<double>(v, line, "stepsize");
       }},
      {"optimizers",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.sweep_optimizers.clear();
         for (auto item : split_list(v)) {
           auto k = parse_optimizer(item);
           if (!k) throw ConfigError(line, "unknown optimizer '" + std::string(item) + "'");
           c.sweep_optimizers.push_back(*k);
         }
       }},
      {"stepsizes",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.sweep_stepsizes.clear();
         for (auto item : split_list(v))
           c.sweep_stepsizes.push_back(parse_number<double>(item, line, "stepsizes"));
       }},
      {"defensive",
       [](ExperimentConfig& c, std::string_view v, int line) { c.defensive = parse_bool(v, line, "defensive"); }},
      {"alpha", [](ExperimentConfig& c, std::string_view v, int line) { c.alpha = parse_number<double>(v, line, "alpha"); }},
      {"tail_df",
       [](ExperimentConfig& c, std::string_view v, int line) { c.tail_df = parse_number<double>(v, line, "tail_df"); }},
      {"seed",
       [](ExperimentConfig& c, std::string_view v, int line) { c.seed = parse_number<std::uint64_t>(v, line, "seed"); }},
      {"output", [](ExperimentConfig& c, std::string_view v, int) { c.output_path = std::string(v); }},
      {"record_stride",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.record_stride = parse_number<long>(v, line, "record_stride");
       }},
      {"full_resolution",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.full_resolution = parse_bool(v, line, "full_resolution");
       }},
      {"num_chains",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.num_chains = parse_number<int>(v, line, "num_chains");
       }},
      {"duplicate_seeds",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.duplicate_seeds = parse_bool(v, line, "duplicate_seeds");
       }},
      {"mean_shifts",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.mean_shifts.clear();
         for (auto item : split_list(v))
           c.mean_shifts.push_back(parse_number<double>(item, line, "mean_shifts"));
       }},
      {"num_samples",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.num_samples = parse_number<int>(v, line, "num_samples");
       }},
      {"prev_state",
       [](ExperimentConfig& c, std::string_view v, int line) {
         c.prev_state = parse_number<double>(v, line, "prev_state");
       }},
  };
  return table;
}

}  // namespace

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::GaussianConvergence: return "gaussian_convergence";
    case ExperimentKind::VarianceSimulation: return "variance_simulation";
    case ExperimentKind::GradientVariance: return "gradient_variance";
    case ExperimentKind::StepsizeSweep: return "stepsize_sweep";
  }
  return "?";
}

std::optional<ExperimentKind> parse_experiment(std::string_view name) {
  for (auto k : {ExperimentKind::GaussianConvergence, ExperimentKind::VarianceSimulation,
                 ExperimentKind::GradientVariance, ExperimentKind::StepsizeSweep})
    if (experiment_name(k) == name) return k;
  return std::nullopt;
}

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

long ExperimentConfig::effective_stride() const {
  if (full_resolution) return 1;
  if (record_stride > 0) return record_stride;
  return std::max(1L, iterations / 200);
}

std::vector<OptimizerKind> ExperimentConfig::sweep_optimizer_grid() const {
  if (!sweep_optimizers.empty()) return sweep_optimizers;
  return {optimizer};
}

std::vector<double> ExperimentConfig::sweep_stepsize_grid() const {
  if (!sweep_stepsizes.empty()) return sweep_stepsizes;
  std::vector<double> grid;
  for (int k = -8; k <= 0; ++k) grid.push_back(std::pow(10.0, 0.5 * k));
  return grid;
}

namespace {
void check_ranges(const ExperimentConfig& cfg,
                  const std::function<int(std::string_view)>& line_of);
}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(line_no, "expected 'key = value', got '" + std::string(line) + "'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    if (value.empty()) throw ConfigError(line_no, "missing value for '" + std::string(key) + "'");

    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    if (!seen.emplace(std::string(key), line_no).second)
      throw ConfigError(line_no, "duplicate key '" + std::string(key) + "'");
    it->second(cfg, value, line_no);
  }
  check_ranges(cfg, [&seen](std::string_view key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  });
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

namespace {

// Range checks; `line_of` maps a key to the line that set it (0 if unset).
void check_ranges(const ExperimentConfig& cfg,
                  const std::function<int(std::string_view)>& line_of) {
  auto fail = [&](std::string_view key, const std::string& msg) {
    throw ConfigError(line_of(key), msg);
  };
  if (cfg.dim < 1) fail("dim", "dim must be >= 1");
  if (cfg.budgets.empty()) fail("budgets", "budgets must be nonempty");
  if (cfg.methods.empty()) fail("methods", "methods must be nonempty");
  if (cfg.repetitions < 1) fail("repetitions", "repetitions must be >= 1");
  if (cfg.iterations < 0) fail("iterations", "iterations must be >= 0");
  if (cfg.nu != 0.0 && cfg.nu < cfg.dim) fail("nu", "nu must be 0 (isotropic) or >= dim");
  if (!(cfg.stepsize > 0.0)) fail("stepsize", "stepsize must be positive");
  if (cfg.defensive && !(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("alpha", "alpha must lie in (0, 1)");
  if (!(cfg.tail_df > 0.0)) fail("tail_df", "tail_df must be positive");
  if (cfg.record_stride < 0) fail("record_stride", "record_stride must be >= 0");
  for (double g : cfg.sweep_stepsizes)
    if (!(g > 0.0)) fail("stepsizes", "stepsizes must be positive");
  for (auto m : cfg.methods) {
    for (int n : cfg.budgets) {
      const int minimum = (m == Method::Msc || m == Method::MscRb) ? 2 : 1;
      if (n < minimum)
        fail("budgets", "budget " + std::to_string(n) + " is too small for " + std::string(method_name(m)));
    }
  }
  switch (cfg.experiment) {
    case ExperimentKind::VarianceSimulation:
      if (cfg.dim != 1) fail("dim", "variance_simulation requires dim = 1");
      if (cfg.mean_shifts.empty()) fail("mean_shifts", "mean_shifts must be nonempty");
      if (cfg.num_samples < 2) fail("num_samples", "num_samples must be >= 2");
      for (auto m : cfg.methods)
        if (m == Method::Elbo) fail("methods", "variance_simulation supports MSC, MSCRB, JSA and PMCSA");
      break;
    case ExperimentKind::GradientVariance:
      if (cfg.num_chains < 2) fail("num_chains", "num_chains must be >= 2");
      break;
    default: break;
  }
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  check_ranges(cfg, [](std::string_view) { return 0; });
}

}  // namespace mcsa
