#pragma once

// Tabular datasets and their CSV / JSON encodings. Numbers are always written
// with 12 significant digits so identical configs give identical bytes.

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hybridmeas::cli {

/// Empty cell (missing optional value), number, or text.
using Cell = std::variant<std::monostate, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Throws std::logic_error if the row width differs from the header.
  void add(std::vector<Cell> row);
};

Cell cell(const std::optional<double>& v);

/// "%.12g"; non-finite values become "nan", "inf", "-inf".
std::string format_number(double v);

/// Header line, then one line per row. Text containing separators or quotes
/// is quoted RFC 4180 style; empty cells are empty fields.
void write_csv(std::ostream& os, const Table& t);

/// {"schema_version": ..., "dataset": name, "columns": [...], "rows": [[...]]}
/// with empty cells as null.
void write_json(std::ostream& os, const Table& t);

}  // namespace hybridmeas::cli
