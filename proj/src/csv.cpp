#include "tabbench/csv.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tabbench/errors.hpp"

namespace tabbench::data {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parses_as_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

namespace {

std::string unquote(const std::string& s, char quote) {
  if (s.size() >= 2 && s.front() == quote && s.back() == quote) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split_line(const std::string& line, char delim, char quote) {
  std::vector<std::string> out;
  std::string field;
  bool in_quotes = false;
  for (char c : line) {
    if (c == quote) {
      in_quotes = !in_quotes;
      field += c;
    } else if (c == delim && !in_quotes) {
      out.push_back(unquote(trim(field), quote));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(unquote(trim(field), quote));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RawTable parse_csv(const std::string& text, const CsvOptions& options) {
  RawTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t width = 0;
  std::size_t row_index = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line, options.delimiter, options.quote);
    if (options.has_header && !saw_header) {
      table.column_names = fields;
      width = fields.size();
      saw_header = true;
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw ParseError("row " + std::to_string(row_index) + ": expected " +
                       std::to_string(width) + " columns, got " +
                       std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    ++row_index;
  }
  return table;
}

RawTable read_csv(const std::string& path, const CsvOptions& options) {
  return parse_csv(read_file(path), options);
}

RawTable read_arff(const std::string& path) {
  RawTable table;
  std::istringstream in(read_file(path));
  std::string line;
  bool in_data = false;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    if (!in_data) {
      std::string lower = t;
      for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (lower.rfind("@attribute", 0) == 0) {
        std::string rest = trim(t.substr(10));
        // name is either quoted or runs to the first whitespace
        std::string name;
        if (!rest.empty() && (rest[0] == '\'' || rest[0] == '"')) {
          char q = rest[0];
          auto end = rest.find(q, 1);
          name = rest.substr(1, end == std::string::npos ? rest.size() - 1 : end - 1);
        } else {
          name = rest.substr(0, rest.find_first_of(" \t"));
        }
        table.column_names.push_back(name);
      } else if (lower.rfind("@data", 0) == 0) {
        in_data = true;
      }
      continue;
    }
    auto fields = split_line(t, ',', '\'');
    if (fields.size() != table.column_names.size()) {
      throw ParseError("arff row " + std::to_string(row_index) + ": expected " +
                       std::to_string(table.column_names.size()) + " columns, got " +
                       std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    ++row_index;
  }
  if (table.column_names.empty()) throw ParseError("arff file has no attributes: " + path);
  return table;
}

}  // namespace tabbench::data
