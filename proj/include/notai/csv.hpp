#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace notai {

// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
// breaks; CRLF and LF both end records. A leading UTF-8 BOM is skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // False at end of input. Throws Error{InvalidArgument} on an unterminated
  // quoted field.
  bool next(std::vector<std::string>& row);
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  bool started_ = false;
};

void write_csv_row(std::ostream& out, std::span<const std::string> fields);
std::string csv_escape(const std::string& field);

// Shortest decimal text that parses back to the same double; empty for NaN.
std::string format_number(double v);

}  // namespace notai
