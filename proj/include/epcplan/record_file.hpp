#pragma once

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epcplan/errors.hpp"

namespace epcplan {

/// One `[section]` of a record file. Keys may repeat; order is preserved.
struct Record {
  std::string section;
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : fields)
      if (k == key) return &v;
    return nullptr;
  }

  const std::string& require(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    throw Error(ErrorCode::ParseError,
                "record '" + section + "' starting at line " + std::to_string(line) +
                    " lacks key '" + std::string(key) + "'",
                std::string(key), line);
  }

  std::vector<std::string> all(std::string_view key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : fields)
      if (k == key) out.push_back(v);
    return out;
  }
};

/// Parsed record file: header keys (before the first section) plus records.
///
///   # comment
///   version = 1
///   [item]
///   id = door_alu
///   price_eur = 1099
struct RecordFile {
  Record header;
  std::vector<Record> records;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto piece = trim(s.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end + 1;
  }
  return out;
}

inline RecordFile parse_record_text(std::string_view text) {
  RecordFile file;
  file.header.section = "header";
  file.header.line = 1;
  Record* current = &file.header;
  std::size_t line_no = 0;
  bool any_content = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    any_content = true;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw Error(ErrorCode::ParseError, "malformed section header at line " +
                                               std::to_string(line_no) + ", column 1",
                    {}, line_no);
      file.records.push_back(Record{std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
      current = &file.records.back();
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw Error(ErrorCode::ParseError, "expected 'key = value' at line " +
                                               std::to_string(line_no) + ", column 1",
                    {}, line_no);
      current->fields.emplace_back(std::string(trim(line.substr(0, eq))),
                                   std::string(trim(line.substr(eq + 1))));
    }
    if (end == text.size()) break;
  }
  if (!any_content)
    throw Error(ErrorCode::ParseError, "empty file at line 1, column 1", {}, 1);
  return file;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RecordFile load_record_file(const std::string& path) {
  return parse_record_text(read_text_file(path));
}

/// Strict full-string number parse.
inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || errno == ERANGE) return false;
  out = v;
  return true;
}

}  // namespace epcplan
