#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabbench/table.hpp"

namespace tabbench::data {

struct DatasetEntry {
  std::string name;
  std::string url;
  std::string sha256;
  std::string format;  // "csv" or "arff"
  char delimiter = ',';
  bool has_header = false;
  std::string target;
  std::vector<std::string> drop_columns;
  std::vector<std::string> drop_target_levels;
};

class Registry {
 public:
  // Manifest lines: name|url|sha256|format|delimiter|header|target|drop_cols|drop_levels
  static Registry from_file(const std::string& path);
  static Registry from_text(const std::string& text);

  // Resolution order: TABBENCH_MANIFEST env var, ./data/datasets.manifest,
  // the manifest shipped next to the sources.
  static Registry standard();

  const DatasetEntry& entry(const std::string& name) const;
  std::vector<std::string> names() const;

  // Returns the local path of the dataset file, downloading into cache_dir
  // when absent. The cached file's checksum is verified either way. With
  // offline=true (or TABBENCH_OFFLINE=1) no network is touched.
  std::string fetch(const std::string& name, const std::string& cache_dir,
                    bool offline = false) const;

  DataTable load(const std::string& name, const std::string& cache_dir,
                 bool offline = false) const;

 private:
  std::map<std::string, DatasetEntry> entries_;
};

std::string default_cache_dir();  // TABBENCH_CACHE_DIR or ~/.cache/tabbench
std::string sha256_file(const std::string& path);
std::string http_get_to_file(const std::string& url, const std::string& dest);

}  // namespace tabbench::data
