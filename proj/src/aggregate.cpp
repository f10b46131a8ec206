#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "mcsa/csv.hpp"

namespace mcsa {
namespace {

std::optional<double> as_number(const std::string& s) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

struct KeyLess {
  bool operator()(const std::vector<std::string>& a, const std::vector<std::string>& b) const {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto na = as_number(a[i]);
      const auto nb = as_number(b[i]);
      if (na && nb) {
        if (*na != *nb) return *na < *nb;
      } else if (a[i] != b[i]) {
        return a[i] < b[i];
      }
    }
    return false;
  }
};

std::string quantile_label(double q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_sorted: q outside [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

CsvTable aggregate_quantiles(const CsvTable& input, const std::vector<std::string>& group_keys,
                             const std::string& value_column,
                             const std::vector<double>& quantiles) {
  if (quantiles.empty()) throw CsvError("at least one quantile is required");
  for (double q : quantiles)
    if (!(q >= 0.0 && q <= 1.0)) throw CsvError("quantiles must lie in [0, 1]");
  std::vector<std::size_t> key_idx;
  for (const auto& k : group_keys) key_idx.push_back(input.column(k));
  const auto value_idx = input.column(value_column);

  std::map<std::vector<std::string>, std::vector<double>, KeyLess> groups;
  for (const auto& row : input.rows) {
    const auto& field = row[value_idx];
    if (field.empty()) continue;
    const auto value = as_number(field);
    if (!value) throw CsvError("non-numeric value '" + field + "' in column " + value_column);
    std::vector<std::string> key;
    key.reserve(key_idx.size());
    for (auto i : key_idx) key.push_back(row[i]);
    groups[std::move(key)].push_back(*value);
  }

  CsvTable out;
  out.header = group_keys;
  out.header.emplace_back("count");
  for (double q : quantiles) out.header.push_back(value_column + "_q" + quantile_label(q));
  for (auto& [key, values] : groups) {
    std::sort(values.begin(), values.end());
    auto row = key;
    row.push_back(std::to_string(values.size()));
    for (double q : quantiles) row.push_back(format_double(quantile_sorted(values, q)));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace mcsa
