#include "tabbench/table.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "tabbench/errors.hpp"

namespace tabbench::data {

int DataTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> DataTable::column(std::size_t index) const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[index]);
  return out;
}

std::vector<std::size_t> DataTable::feature_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].role != Role::target) out.push_back(i);
  }
  return out;
}

void infer_schema(DataTable& table, bool lock_categorical) {
  for (std::size_t c = 0; c < table.schema.size(); ++c) {
    auto& col = table.schema[c];
    std::set<std::string> distinct;
    bool all_numeric = true;
    for (const auto& row : table.rows) {
      const std::string& v = row[c];
      distinct.insert(v);
      if (all_numeric && !parses_as_number(v)) all_numeric = false;
    }
    if (col.role == Role::target) {
      col.levels.assign(distinct.begin(), distinct.end());
      continue;
    }
    bool categorical = distinct.size() < kCategoricalThreshold || !all_numeric;
    if (lock_categorical && col.role == Role::categorical) categorical = true;
    if (categorical) {
      col.role = Role::categorical;
      col.levels.assign(distinct.begin(), distinct.end());
    } else {
      col.role = Role::continuous;
      col.levels.clear();
    }
  }
  const auto& target = table.target_schema();
  if (target.levels.size() < 2) {
    throw DegenerateTargetError("target '" + table.target_name + "' has " +
                                std::to_string(target.levels.size()) + " level(s)");
  }
  table.task = target.levels.size() == 2 ? Task::binary : Task::multi;
}

DataTable build_table(RawTable raw, const std::string& target_name, const LoadOptions& options) {
  DataTable table;
  std::size_t width = raw.rows.empty() ? raw.column_names.size() : raw.rows[0].size();
  if (raw.column_names.empty()) {
    for (std::size_t i = 0; i < width; ++i) raw.column_names.push_back("col" + std::to_string(i));
  }

  std::vector<bool> keep(width, true);
  for (const auto& d : options.drop_columns) {
    bool found = false;
    for (std::size_t i = 0; i < width; ++i) {
      if (raw.column_names[i] == d) {
        keep[i] = false;
        found = true;
      }
    }
    if (!found) throw ConfigError("drop column not found: " + d);
  }

  int target_raw = -1;
  for (std::size_t i = 0; i < width; ++i) {
    if (raw.column_names[i] == target_name) target_raw = static_cast<int>(i);
  }
  if (target_raw < 0 || !keep[static_cast<std::size_t>(target_raw)]) {
    throw ConfigError("target column not present: " + target_name);
  }

  for (std::size_t i = 0; i < width; ++i) {
    if (!keep[i]) continue;
    ColumnSchema col;
    col.name = raw.column_names[i];
    col.role = raw.column_names[i] == target_name ? Role::target : Role::categorical;
    table.schema.push_back(col);
  }
  table.target_name = target_name;

  std::set<std::string> dropped_levels(options.drop_target_levels.begin(),
                                       options.drop_target_levels.end());
  for (auto& raw_row : raw.rows) {
    if (!dropped_levels.empty() &&
        dropped_levels.count(trim(raw_row[static_cast<std::size_t>(target_raw)]))) {
      continue;
    }
    std::vector<std::string> row;
    row.reserve(table.schema.size());
    for (std::size_t i = 0; i < width; ++i) {
      if (!keep[i]) continue;
      std::string v = raw_row[i];
      if (v.empty()) v = kMissingToken;
      row.push_back(std::move(v));
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw ParseError("no data rows");

  infer_schema(table);
  return table;
}

DataTable load_csv(const std::string& path, const std::string& target_name,
                   const LoadOptions& options) {
  RawTable raw = options.arff ? read_arff(path) : read_csv(path, options.csv);
  return build_table(std::move(raw), target_name, options);
}

void write_table_csv(const DataTable& table, const std::string& path) {
  std::ofstream out(path);
  for (std::size_t i = 0; i < table.schema.size(); ++i) {
    out << (i ? "," : "") << table.schema[i].name;
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

}  // namespace tabbench::data
