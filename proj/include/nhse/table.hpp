#pragma once

#include <string>
#include <variant>
#include <vector>

namespace nhse {

using Cell = std::variant<long long, double, std::string, bool>;

struct Column {
  std::string name;
  std::string unit;  ///< empty for labels and identifiers
};

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

/// RFC 4180 field quoting.
std::string csv_escape(const std::string& field);

std::string format_cell(const Cell& cell);

class ResultTable {
 public:
  ResultTable() = default;
  ResultTable(std::string name, std::vector<Column> columns);

  void add_row(std::vector<Cell> row);

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  std::size_t row_count() const { return rows_.size(); }

  std::size_t column_index(const std::string& column) const;
  /// Numeric view of a column (bools as 0/1). Throws on text columns.
  std::vector<double> numbers(const std::string& column) const;
  std::vector<std::string> texts(const std::string& column) const;
  const Cell& at(std::size_t row, const std::string& column) const;

  /// Header "name[unit]", one line per row, '\n' line ends.
  std::string to_csv() const;

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
};

}  // namespace nhse
