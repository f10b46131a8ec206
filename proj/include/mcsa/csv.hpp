#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mcsa {

/// Column layout of every CSV the runners emit.
inline constexpr std::string_view kRunRecordHeader =
    "experiment,method,N,repetition,iteration,kl,grad_variance,acceptance_rate,diverged,wall_ns";

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header plus rows of raw fields. Fields never contain commas or quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws CsvError when missing.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
std::string write_csv(const CsvTable& table);

/// 17 significant digits, shortest exponent form from printf("%.17g").
std::string format_double(double value);

struct RunRecord {
  std::string experiment;
  std::string method;
  int N = 0;
  int repetition = 0;
  long iteration = 0;
  std::optional<double> kl;
  std::optional<double> grad_variance;
  std::optional<double> acceptance_rate;
  bool diverged = false;
  std::optional<long long> wall_ns;

  std::string to_csv_row() const;
  static RunRecord from_fields(const std::vector<std::string>& fields);
};

std::string write_records(const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_records(std::string_view text);

/// Per group of `group_keys`: the requested quantiles (linear interpolation
/// between order statistics) of `value_column`, skipping empty values.
/// Output columns: group keys, count, then `<value>_q<q>` per quantile;
/// rows ordered by group key, numerically where both keys are numbers.
CsvTable aggregate_quantiles(const CsvTable& input, const std::vector<std::string>& group_keys,
                             const std::string& value_column, const std::vector<double>& quantiles);

/// Linear-interpolation quantile of sorted data (type 7).
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace mcsa
