#include "tabbench/imbalance.hpp"

#include <cmath>

#include "tabbench/errors.hpp"

namespace tabbench::data {

ImbalanceReport shannon_imbalance(const std::map<std::string, std::size_t>& counts) {
  std::size_t k = 0;
  std::size_t n = 0;
  for (const auto& [level, c] : counts) {
    if (c > 0) {
      ++k;
      n += c;
    }
  }
  if (k < 2) throw DegenerateTargetError("imbalance needs at least 2 nonempty target levels");

  double entropy = 0.0;
  for (const auto& [level, c] : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    entropy -= p * std::log(p);
  }
  ImbalanceReport report;
  report.level_counts = counts;
  report.evenness = entropy / std::log(static_cast<double>(k));
  report.imbalance = 1.0 - report.evenness;
  return report;
}

ImbalanceReport shannon_imbalance(const DataTable& table) {
  const auto t = static_cast<std::size_t>(table.target_index());
  std::map<std::string, std::size_t> counts;
  for (const auto& row : table.rows) counts[row[t]] += 1;
  return shannon_imbalance(counts);
}

}  // namespace tabbench::data
