#pragma once

#include <string>
#include <vector>

#include "tabbench/csv.hpp"

namespace tabbench::data {

enum class Role { continuous, categorical, target };
enum class Task { binary, multi };

inline constexpr const char* kMissingToken = "__missing__";

// Columns with fewer distinct values than this are treated as categorical.
inline constexpr std::size_t kCategoricalThreshold = 10;

struct ColumnSchema {
  std::string name;
  Role role = Role::categorical;
  std::vector<std::string> levels;  // sorted, duplicate-free; categorical/target only
  std::string missing_token = kMissingToken;
};

struct DataTable {
  std::vector<ColumnSchema> schema;
  std::vector<std::vector<std::string>> rows;
  std::string target_name;
  Task task = Task::binary;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_columns() const { return schema.size(); }
  int column_index(const std::string& name) const;
  int target_index() const { return column_index(target_name); }
  const ColumnSchema& target_schema() const { return schema[static_cast<std::size_t>(target_index())]; }

  std::vector<std::string> column(std::size_t index) const;
  std::vector<std::size_t> feature_indices() const;  // every non-target column
};

struct LoadOptions {
  CsvOptions csv;
  std::vector<std::string> drop_columns;        // by name or "colN"
  std::vector<std::string> drop_target_levels;  // rows with these target values are removed
  bool arff = false;
};

// Builds a DataTable from a raw file: replaces empty cells with the missing
// token, infers column roles on the full data, sorts level vocabularies.
DataTable load_csv(const std::string& path, const std::string& target_name,
                   const LoadOptions& options = {});

DataTable build_table(RawTable raw, const std::string& target_name,
                      const LoadOptions& options = {});

// Re-derives levels/roles after rows were modified. Feature roles follow the
// distinct-count rule; `lock_categorical` keeps existing categorical roles.
void infer_schema(DataTable& table, bool lock_categorical = false);

void write_table_csv(const DataTable& table, const std::string& path);

}  // namespace tabbench::data
