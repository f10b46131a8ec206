// mcsa: run Markov chain score ascent experiments and summarize their CSV.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "mcsa/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov chain score ascent for inclusive-KL variational inference"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  int threads = 1;
  std::optional<long> record_stride;
  bool full_resolution = false;
  bool wall_time = false;
  auto* run = app.add_subcommand("run", "Run an experiment and write its CSV");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_path, "Output CSV path (default: config 'output' or stdout)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--record-stride", record_stride, "Record every R iterations")
      ->check(CLI::PositiveNumber);
  run->add_flag("--full-resolution", full_resolution, "Record every iteration");
  run->add_flag("--wall-time", wall_time, "Fill the wall_ns column (output no longer reproducible)");

  std::string csv_path;
  std::string group = "method,N";
  std::string quantiles = "0.1,0.5,0.9";
  std::string value_column = "kl";
  std::string agg_out;
  auto* aggregate = app.add_subcommand("aggregate", "Quantiles of a CSV column per group");
  aggregate->add_option("csv", csv_path, "Input CSV")->required();
  aggregate->add_option("--group", group, "Comma-separated group columns");
  aggregate->add_option("--quantiles", quantiles, "Comma-separated quantiles in [0, 1]");
  aggregate->add_option("--value", value_column, "Column to summarize");
  aggregate->add_option("--out", agg_out, "Output CSV path (default stdout)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("config", validate_path, "Experiment config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = mcsa::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (record_stride) cfg.record_stride = *record_stride;
      if (full_resolution) cfg.full_resolution = true;
      const auto summary = mcsa::run_experiment(cfg, {threads, wall_time});
      emit(mcsa::write_records(summary.records), out_path.empty() ? cfg.output_path : out_path);
      if (summary.all_diverged()) {
        std::cerr << "mcsa: every run diverged\n";
        return kExitDiverged;
      }
      return kExitOk;
    }
    if (*aggregate) {
      std::ifstream in(csv_path, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open '" + csv_path + "'");
      std::ostringstream buffer;
      buffer << in.rdbuf();
      std::vector<double> qs;
      for (const auto& q : split_commas(quantiles)) qs.push_back(std::stod(q));
      const auto table = mcsa::aggregate_quantiles(mcsa::parse_csv(buffer.str()),
                                                   split_commas(group), value_column, qs);
      emit(mcsa::write_csv(table), agg_out);
      return kExitOk;
    }
    if (*validate) {
      const auto cfg = mcsa::load_config(validate_path);
      std::cout << "ok: " << mcsa::experiment_name(cfg.experiment) << '\n';
      return kExitOk;
    }
  } catch (const mcsa::ConfigError& e) {
    std::cerr << "mcsa: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "mcsa: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
