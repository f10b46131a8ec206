#include "mcsa/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mcsa {
namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = line.find(',');
    out.emplace_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_opt_double(const std::string& field, const char* name) {
  if (field.empty()) return std::nullopt;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != field.size()) throw CsvError(std::string("invalid number in column ") + name);
  return value;
}

long long parse_int(const std::string& field, const char* name) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (field.empty() || used != field.size())
    throw CsvError(std::string("invalid integer in column ") + name);
  return value;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw CsvError("missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(table.header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw CsvError("empty CSV: header row is mandatory");
  return table;
}

std::string write_csv(const CsvTable& table) {
  std::string out;
  auto append_row = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string RunRecord::to_csv_row() const {
  std::string row = experiment + ',' + method + ',' + std::to_string(N) + ',' +
                    std::to_string(repetition) + ',' + std::to_string(iteration) + ',' + opt(kl) +
                    ',' + opt(grad_variance) + ',' + opt(acceptance_rate) + ',' +
                    (diverged ? "1" : "0") + ',' + (wall_ns ? std::to_string(*wall_ns) : "");
  return row;
}

RunRecord RunRecord::from_fields(const std::vector<std::string>& f) {
  if (f.size() != 10) throw CsvError("run record must have 10 fields");
  RunRecord r;
  r.experiment = f[0];
  r.method = f[1];
  r.N = static_cast<int>(parse_int(f[2], "N"));
  r.repetition = static_cast<int>(parse_int(f[3], "repetition"));
  r.iteration = static_cast<long>(parse_int(f[4], "iteration"));
  r.kl = parse_opt_double(f[5], "kl");
  r.grad_variance = parse_opt_double(f[6], "grad_variance");
  r.acceptance_rate = parse_opt_double(f[7], "acceptance_rate");
  if (f[8] != "0" && f[8] != "1") throw CsvError("diverged must be 0 or 1");
  r.diverged = f[8] == "1";
  if (!f[9].empty()) r.wall_ns = parse_int(f[9], "wall_ns");
  return r;
}

std::string write_records(const std::vector<RunRecord>& records) {
  std::string out(kRunRecordHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.to_csv_row();
    out += '\n';
  }
  return out;
}

std::vector<RunRecord> parse_records(std::string_view text) {
  const auto table = parse_csv(text);
  std::string header;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) header += ',';
    header += table.header[i];
  }
  if (header != kRunRecordHeader)
    throw CsvError("header mismatch: expected '" + std::string(kRunRecordHeader) + "'");
  std::vector<RunRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(RunRecord::from_fields(row));
  return out;
}

}  // namespace mcsa
