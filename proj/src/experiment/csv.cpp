// Copyright 2026 The kltmps Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "kltmps/experiment.hpp"

namespace kltmps {
namespace {

constexpr const char* kRawHeader =
    "algorithm,feedback,eta,m,n,total,repeat,seed,gap,gap_stderr,wall_ms";
constexpr const char* kSummaryHeader =
    "algorithm,feedback,eta,m,n,total,repeats,gap_mean,gap_std";
constexpr const char* kFigureHeader =
    "panel,algorithm,feedback,eta,m,n,total,repeats,gap_mean,gap_std";
constexpr const char* kCoverageHeader =
    "name,model_class,contexts,actions,dim,d2,d2_centered,c_global,c_local_bound,rho,"
    "lower_estimate";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorKind::kIo, "malformed number '" + s + "' in CSV");
  }
  return v;
}

template <typename T>
T parse_unsigned(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kIo, "malformed integer '" + s + "' in CSV");
  }
  return v;
}

// Data lines of a CSV with the given header; '#' lines are skipped.
std::vector<std::vector<std::string>> read_table(std::istream& in, const char* header,
                                                 std::size_t columns) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != header) throw Error(ErrorKind::kIo, "unexpected CSV header '" + line + "'");
      seen_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != columns) {
      throw Error(ErrorKind::kIo, "CSV row has " + std::to_string(fields.size()) +
                                      " fields, expected " + std::to_string(columns));
    }
    out.push_back(std::move(fields));
  }
  if (!seen_header) throw Error(ErrorKind::kIo, "CSV has no header");
  return out;
}

void write_summary_fields(std::ostream& out, const SummaryRow& r) {
  out << r.algorithm << ',' << r.feedback << ',' << format_double(r.eta) << ',' << r.m << ','
      << r.n << ',' << r.total << ',' << r.repeats << ',' << format_double(r.gap_mean) << ','
      << format_double(r.gap_std) << '\n';
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_raw_csv(std::ostream& out, const std::vector<RawRow>& rows) {
  out << kRawHeader << '\n';
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.feedback << ',' << format_double(r.eta) << ',' << r.m << ','
        << r.n << ',' << r.total << ',' << r.repeat << ',' << r.seed << ','
        << format_double(r.gap) << ',' << format_double(r.gap_stderr) << ','
        << format_double(r.wall_ms) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows,
                       const std::vector<std::string>& metadata) {
  for (const auto& line : metadata) out << "# " << line << '\n';
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) write_summary_fields(out, r);
}

std::vector<RawRow> read_raw_csv(std::istream& in) {
  std::vector<RawRow> rows;
  for (const auto& f : read_table(in, kRawHeader, 11)) {
    RawRow r;
    r.algorithm = f[0];
    r.feedback = f[1];
    r.eta = parse_double(f[2]);
    r.m = parse_unsigned<std::size_t>(f[3]);
    r.n = parse_unsigned<std::size_t>(f[4]);
    r.total = parse_unsigned<std::size_t>(f[5]);
    r.repeat = parse_unsigned<std::uint64_t>(f[6]);
    r.seed = parse_unsigned<std::uint64_t>(f[7]);
    r.gap = parse_double(f[8]);
    r.gap_stderr = parse_double(f[9]);
    r.wall_ms = parse_double(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::vector<SummaryRow> rows;
  for (const auto& f : read_table(in, kSummaryHeader, 9)) {
    SummaryRow r;
    r.algorithm = f[0];
    r.feedback = f[1];
    r.eta = parse_double(f[2]);
    r.m = parse_unsigned<std::size_t>(f[3]);
    r.n = parse_unsigned<std::size_t>(f[4]);
    r.total = parse_unsigned<std::size_t>(f[5]);
    r.repeats = parse_unsigned<int>(f[6]);
    r.gap_mean = parse_double(f[7]);
    r.gap_std = parse_double(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_figure_csv(std::ostream& out, const std::vector<FigureRow>& rows) {
  out << kFigureHeader << '\n';
  for (const auto& r : rows) {
    out << r.panel << ',';
    write_summary_fields(out, r.summary);
  }
}

void write_coverage_csv(std::ostream& out, const std::vector<CoverageRow>& rows) {
  out << kCoverageHeader << '\n';
  for (const auto& r : rows) {
    const auto& c = r.report;
    out << r.name << ',' << r.model_class << ',' << r.contexts << ',' << r.actions << ','
        << r.dim << ',' << format_double(c.d2) << ',' << format_double(c.d2_centered) << ','
        << format_double(c.c_global) << ',' << format_double(c.c_local_bound) << ','
        << format_double(c.rho) << ',' << (c.lower_estimate ? 1 : 0) << '\n';
  }
}

}  // namespace kltmps
