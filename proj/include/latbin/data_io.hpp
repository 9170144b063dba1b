#ifndef LATBIN_DATA_IO_HPP
#define LATBIN_DATA_IO_HPP

// Dataset ingestion (comma-separated, header required) and record output in
// CSV or line-delimited JSON.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "latbin/model.hpp"

namespace latbin {

struct DoseCountRecord {
  double dose = 0.0;  // Gy
  std::int64_t count = 0;
};

/// Surviving jejunal crypt counts for 126 mice, grouped by gamma-ray dose.
inline const std::vector<DoseCountRecord>& jejunal_records() {
  static const std::vector<DoseCountRecord> records = [] {
    const std::vector<std::pair<double, std::vector<int>>> rows = {
        {6.25, {76, 96, 73, 81, 81, 87, 77, 75}},
        {6.50, {75, 80, 67, 86, 70, 78, 88, 76, 54, 58, 76, 69, 61, 70}},
        {6.75, {66, 51, 48, 48, 57, 45, 59, 49}},
        {7.25, {35, 33, 35, 37, 38, 53, 37, 36, 42, 45, 48, 42, 31, 36, 40, 45, 47, 38, 40, 35, 27, 35}},
        {7.75, {19, 18, 25, 19, 19, 18, 21, 18}},
        {8.00, {19, 24, 19, 26, 18, 18, 14, 19, 11, 21, 19, 14, 16, 13}},
        {8.25, {19, 19, 19, 16, 12, 16, 12, 13}},
        {8.75, {11, 11, 7, 3, 5, 7, 9, 5, 11, 9, 6, 9, 7, 5, 10, 7, 11, 9, 7, 11, 5, 12}},
        {9.25, {6, 3, 5, 6, 4, 6, 5, 3}},
        {9.50, {1, 4, 5, 5, 3, 6, 3, 3, 5, 5, 1, 4, 3, 4}},
    };
    std::vector<DoseCountRecord> out;
    for (const auto& [dose, counts] : rows)
      for (int c : counts) out.push_back({dose, c});
    return out;
  }();
  return records;
}

/// Builds x = (1, dose) rows, or x = (dose) when `intercept` is false.
inline Dataset dataset_from_records(const std::vector<DoseCountRecord>& records, bool intercept = true) {
  std::vector<Observation> obs;
  obs.reserve(records.size());
  for (const auto& r : records) {
    Vector x(intercept ? 2 : 1);
    if (intercept) {
      x << 1.0, r.dose;
    } else {
      x << r.dose;
    }
    obs.push_back({r.count, std::move(x)});
  }
  return Dataset(std::move(obs));
}

inline Dataset jejunal_dataset() { return dataset_from_records(jejunal_records()); }

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CsvOptions {
  bool intercept = true;  // prepend a constant 1 column
  bool general = false;   // x1,...,xk,count instead of dose,count
};

namespace detail {

// RFC-4180 field splitting: quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view s, std::size_t line_no, std::string_view column) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(line_no, "non-numeric value '" + std::string(s) + "' in column " + std::string(column));
  return v;
}

inline std::int64_t parse_count(std::string_view s, std::size_t line_no) {
  s = trim(s);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // accept integral reals such as "76.0"
    const double d = parse_real(s, line_no, "count");
    if (d != std::floor(d)) throw ParseError(line_no, "count must be an integer, got '" + std::string(s) + "'");
    v = static_cast<std::int64_t>(d);
  }
  if (v < 0) throw ParseError(line_no, "negative count " + std::to_string(v));
  return v;
}

}  // namespace detail

/// Parses a dataset from a stream. The first non-blank line is the header.
inline Dataset read_csv(std::istream& in, const CsvOptions& options = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<Observation> obs;

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (header.empty()) {
      for (auto& f : fields) f = std::string(detail::trim(f));
      header = std::move(fields);
      if (header.size() < 2) throw ParseError(line_no, "header needs at least two columns");
      if (header.back() != "count") throw ParseError(line_no, "last header column must be 'count'");
      if (!options.general && (header.size() != 2 || header.front() != "dose"))
        throw ParseError(line_no, "expected header 'dose,count' (use the general layout for more covariates)");
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    const auto k = static_cast<Eigen::Index>(header.size() - 1);
    const Eigen::Index offset = options.intercept ? 1 : 0;
    Vector x(k + offset);
    if (options.intercept) x[0] = 1.0;
    for (Eigen::Index j = 0; j < k; ++j)
      x[j + offset] = detail::parse_real(fields[static_cast<std::size_t>(j)], line_no,
                                         header[static_cast<std::size_t>(j)]);
    obs.push_back({detail::parse_count(fields.back(), line_no), std::move(x)});
  }
  if (header.empty()) throw std::runtime_error("no header row");
  if (obs.empty()) throw std::runtime_error("no observations");
  return Dataset(std::move(obs));
}

inline Dataset read_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return read_csv(in, options);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
}

// ---------------------------------------------------------------------------
// Record output

using Cell = std::variant<double, std::int64_t, std::string, bool, std::monostate>;

/// A header plus rows of cells; monostate renders as an empty field / null.
struct RecordTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw std::invalid_argument("RecordTable: row has " + std::to_string(row.size()) + " cells, expected " +
                                  std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }
};

enum class RecordFormat { Csv, Structured };

struct WriteOptions {
  RecordFormat format = RecordFormat::Csv;
  bool full_precision = false;
};

inline std::string format_real(double v, bool full_precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, full_precision ? "%.17g" : "%.6g", v);
  return buf;
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string render_cell(const Cell& c, bool full_precision) {
  struct V {
    bool fp;
    std::string operator()(double v) const { return format_real(v, fp); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& s) const { return csv_quote(s); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::monostate) const { return ""; }
  };
  return std::visit(V{full_precision}, c);
}

inline nlohmann::json json_cell(const Cell& c, bool full_precision) {
  struct V {
    bool fp;
    nlohmann::json operator()(double v) const {
      if (!std::isfinite(v)) return format_real(v, fp);
      return fp ? v : std::stod(format_real(v, false));
    }
    nlohmann::json operator()(std::int64_t v) const { return v; }
    nlohmann::json operator()(const std::string& s) const { return s; }
    nlohmann::json operator()(bool b) const { return b; }
    nlohmann::json operator()(std::monostate) const { return nullptr; }
  };
  return std::visit(V{full_precision}, c);
}

}  // namespace detail

inline void write_records(std::ostream& out, const RecordTable& table, const WriteOptions& options = {}) {
  if (options.format == RecordFormat::Csv) {
    for (std::size_t j = 0; j < table.columns.size(); ++j)
      out << (j ? "," : "") << detail::csv_quote(table.columns[j]);
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t j = 0; j < row.size(); ++j)
        out << (j ? "," : "") << detail::render_cell(row[j], options.full_precision);
      out << '\n';
    }
  } else {
    for (const auto& row : table.rows) {
      nlohmann::ordered_json obj;
      for (std::size_t j = 0; j < row.size(); ++j)
        obj[table.columns[j]] = detail::json_cell(row[j], options.full_precision);
      out << obj.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_records: output stream failure");
}

inline void write_records(const std::string& path, const RecordTable& table, const WriteOptions& options = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_records(out, table, options);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Reads back a CSV written by write_records into header + raw string cells.
inline RecordTable read_records_csv(std::istream& in) {
  RecordTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (t.columns.empty()) {
      t.columns = std::move(fields);
      continue;
    }
    std::vector<Cell> row(fields.begin(), fields.end());
    t.add_row(std::move(row));
  }
  return t;
}

/// Embedded dataset as a dose,count table.
inline RecordTable dose_count_table(const std::vector<DoseCountRecord>& records) {
  RecordTable t{{"dose", "count"}, {}};
  for (const auto& r : records) t.add_row({r.dose, r.count});
  return t;
}

}  // namespace latbin

#endif  // LATBIN_DATA_IO_HPP
