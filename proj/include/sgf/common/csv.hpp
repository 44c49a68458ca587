#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgf::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, embedded separators and
// line breaks. Accepts LF or CRLF line endings. Returns nullopt at EOF.
std::optional<Row> read_row(std::istream& in);

std::vector<Row> read_all(std::istream& in);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, std::span<const std::string> fields);
void write_row(std::ostream& out, std::initializer_list<std::string> fields);

// Header-indexed table. Column lookup by name; throws FormatError when the
// header lacks a required column.
class Table {
 public:
  static Table parse(std::istream& in);

  const Row& header() const noexcept { return header_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;

 private:
  Row header_;
  std::vector<Row> rows_;
};

}  // namespace sgf::csv
