#pragma once

#include <string>
#include <vector>

namespace tabbench::data {

struct RawTable {
  std::vector<std::string> column_names;  // empty if no header and no ARFF names
  std::vector<std::vector<std::string>> rows;
};

struct CsvOptions {
  char delimiter = ',';
  bool has_header = true;
  char quote = '"';
};

// Parses delimited text. Fields are trimmed and unquoted; blank lines are
// skipped. Ragged rows raise ParseError with the offending row index.
RawTable read_csv(const std::string& path, const CsvOptions& options);
RawTable parse_csv(const std::string& text, const CsvOptions& options);

// Parses an ARFF file: column names come from @attribute declarations, data
// rows from the @data section (comma separated).
RawTable read_arff(const std::string& path);

std::string trim(const std::string& s);
bool parses_as_number(const std::string& s);

}  // namespace tabbench::data
