#pragma once

#include <map>
#include <string>

#include "tabbench/table.hpp"

namespace tabbench::data {

struct ImbalanceReport {
  double evenness = 0.0;   // normalized Shannon entropy of target level counts
  double imbalance = 0.0;  // 1 - evenness
  std::map<std::string, std::size_t> level_counts;
};

ImbalanceReport shannon_imbalance(const DataTable& table);
ImbalanceReport shannon_imbalance(const std::map<std::string, std::size_t>& counts);

}  // namespace tabbench::data
