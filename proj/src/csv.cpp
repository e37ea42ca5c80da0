#include "notai/csv.hpp"

#include <charconv>
#include <cmath>

#include "notai/dataset_record.hpp"
#include "notai/error.hpp"

namespace notai {

bool CsvReader::next(std::vector<std::string>& row) {
  row.clear();
  if (!started_) {
    started_ = true;
    if (in_.peek() == 0xEF) {
      char bom[3];
      in_.read(bom, 3);
      if (!(bom[0] == '\xEF' && bom[1] == '\xBB' && bom[2] == '\xBF')) {
        throw Error(ErrorCode::InvalidArgument, "stray bytes at start of CSV");
      }
    }
  }
  if (in_.peek() == std::char_traits<char>::eof()) return false;
  ++line_;

  std::string field;
  bool quoted = false;
  bool after_quote = false;
  const std::size_t start_line = line_;
  for (;;) {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) {
        throw Error(ErrorCode::InvalidArgument,
                    "unterminated quoted field starting on line " + std::to_string(start_line));
      }
      row.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (ch == '\r' && in_.peek() == '\n') {
      in_.get();
      row.push_back(std::move(field));
      return true;
    } else if (ch == '\n') {
      row.push_back(std::move(field));
      return true;
    } else if (ch == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else {
      field.push_back(ch);
    }
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// --- DatasetRecord ----------------------------------------------------------

std::string_view label_name(Label l) noexcept { return l == Label::Ai ? "ai" : "human"; }

Label parse_label(std::string_view s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
  while (!lower.empty() && (lower.back() == ' ' || lower.back() == '\t')) lower.pop_back();
  while (!lower.empty() && (lower.front() == ' ' || lower.front() == '\t')) lower.erase(lower.begin());
  if (lower == "ai" || lower == "1") return Label::Ai;
  if (lower == "human" || lower == "0") return Label::Human;
  throw Error(ErrorCode::InvalidArgument, "unrecognized label '" + std::string(s) + "'");
}

bool DatasetRecord::has_all_features() const noexcept {
  for (const auto& f : features) {
    if (!f) return false;
  }
  return true;
}

const std::string* DatasetRecord::extra_value(std::string_view column) const noexcept {
  for (const auto& [k, v] : extra) {
    if (k == column) return &v;
  }
  return nullptr;
}

}  // namespace notai
