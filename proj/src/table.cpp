#include "nhse/table.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "nhse/error.hpp"

namespace nhse {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  if (res.ec != std::errc()) throw std::runtime_error("number formatting failed");
  return {buf, res.ptr};
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_cell(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, double>) return format_number(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return csv_escape(v);
      },
      cell);
}

ResultTable::ResultTable(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw InvalidArgument("table '" + name_ + "' row has " + std::to_string(row.size()) +
                          " cells, expected " + std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(row));
}

std::size_t ResultTable::column_index(const std::string& column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == column) return i;
  }
  throw InvalidArgument("table '" + name_ + "' has no column '" + column + "'");
}

const Cell& ResultTable::at(std::size_t row, const std::string& column) const {
  return rows_.at(row).at(column_index(column));
}

std::vector<double> ResultTable::numbers(const std::string& column) const {
  const std::size_t c = column_index(column);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) {
    const Cell& cell = row[c];
    if (const auto* d = std::get_if<double>(&cell)) out.push_back(*d);
    else if (const auto* i = std::get_if<long long>(&cell)) out.push_back(static_cast<double>(*i));
    else if (const auto* b = std::get_if<bool>(&cell)) out.push_back(*b ? 1.0 : 0.0);
    else throw InvalidArgument("column '" + column + "' is not numeric");
  }
  return out;
}

std::vector<std::string> ResultTable::texts(const std::string& column) const {
  const std::size_t c = column_index(column);
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) {
    const auto* s = std::get_if<std::string>(&row[c]);
    out.push_back(s ? *s : format_cell(row[c]));
  }
  return out;
}

std::string ResultTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    const std::string head =
        columns_[i].unit.empty() ? columns_[i].name : columns_[i].name + "[" + columns_[i].unit + "]";
    out += csv_escape(head);
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace nhse
