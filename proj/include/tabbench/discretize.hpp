#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbench/table.hpp"
#include "tabbench/tree.hpp"

namespace tabbench::disc {

struct BinEdges {
  std::string column;
  std::vector<double> edges;  // ascending, distinct
  double chosen_alpha = 0.0;
  bool degenerate = false;  // no decision node survived

  // intervals (-inf, e0], (e0, e1], ..., (e_last, +inf)
  std::size_t bin_index(double v) const;
  std::size_t n_bins() const { return edges.size() + 1; }
};

BinEdges extract_bins(const TreeNode& pruned, const std::string& column);

struct DiscretizerConfig {
  int max_depth = 7;  // grid search upper bound
  int folds = 5;
  std::uint64_t seed = 0;
};

struct ColumnDiagnostics {
  std::string column;
  int chosen_depth = 0;
  PruningPath path;
  double chosen_alpha = 0.0;
};

struct DiscretizeResult {
  data::DataTable table;
  std::vector<BinEdges> bins;
  std::vector<ColumnDiagnostics> diagnostics;
};

// Replaces every continuous column by categorical bin levels "bin_0..bin_k".
// Per column: depth grid search 1..max_depth by CV accuracy, weakest-link
// path on the winner, alpha by the cv mean/std criterion.
DiscretizeResult discretize_table(const data::DataTable& table,
                                  const DiscretizerConfig& config = {});

// 1-D Lloyd iterations; edges are midpoints between adjacent final centroids.
// Exposed as an alternative; the benchmark pipeline uses the tree discretizer.
BinEdges kmeans_bins(const std::vector<double>& x, std::size_t k, int max_iter,
                     std::uint64_t seed);

std::string bins_to_json(const std::vector<BinEdges>& bins);
std::vector<BinEdges> bins_from_json(const std::string& text);
void write_diagnostics_csv(const std::vector<ColumnDiagnostics>& diags,
                           const std::string& path);

}  // namespace tabbench::disc
