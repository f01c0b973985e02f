#include "table.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "config.hpp"

namespace hybridmeas::cli {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) +
                           " cells, header has " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

Cell cell(const std::optional<double>& v) {
  if (!v) return std::monostate{};
  return *v;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string json_cell(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return "null";
  if (const double* d = std::get_if<double>(&c)) {
    // JSON has no literal for non-finite numbers.
    if (!std::isfinite(*d)) return nlohmann::json(format_number(*d)).dump();
    return format_number(*d);
  }
  return nlohmann::json(std::get<std::string>(c)).dump();
}

}  // namespace

void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    os << (i ? "," : "") << csv_text(t.columns[i]);
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      const Cell& c = row[i];
      if (const double* d = std::get_if<double>(&c)) {
        os << format_number(*d);
      } else if (const std::string* s = std::get_if<std::string>(&c)) {
        os << csv_text(*s);
      }
    }
    os << '\n';
  }
}

void write_json(std::ostream& os, const Table& t) {
  os << "{\"schema_version\":" << nlohmann::json(kSchemaVersion).dump()
     << ",\"dataset\":" << nlohmann::json(t.name).dump() << ",\"columns\":[";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    os << (i ? "," : "") << nlohmann::json(t.columns[i]).dump();
  }
  os << "],\"rows\":[";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    os << (r ? ",\n" : "\n") << '[';
    for (std::size_t i = 0; i < t.rows[r].size(); ++i) os << (i ? "," : "") << json_cell(t.rows[r][i]);
    os << ']';
  }
  os << "]}\n";
}

}  // namespace hybridmeas::cli
