#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tabbench::disc {

// Binary CART node over a single real feature. Left child takes x <= threshold.
struct TreeNode {
  double threshold = 0.0;
  std::vector<std::size_t> level_counts;  // target-level histogram at this node
  double impurity = 0.0;                  // base-2 entropy
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  bool is_leaf() const { return left == nullptr; }
  std::size_t n_samples() const;
  std::size_t majority_level() const;
  std::size_t n_leaves() const;
  std::size_t n_decision_nodes() const;
  std::size_t misclassified() const;          // n_samples - majority count
  std::size_t subtree_misclassified() const;  // summed over leaves
};

using TreePtr = std::unique_ptr<TreeNode>;

double entropy_bits(const std::vector<std::size_t>& counts);

// Grows a depth-limited tree minimizing weighted child cross-entropy.
// Candidate thresholds are midpoints between consecutive distinct x values;
// ties resolve to the smaller threshold.
TreePtr grow_tree(const std::vector<double>& x, const std::vector<std::size_t>& y,
                  std::size_t n_levels, int max_depth);

TreePtr clone_tree(const TreeNode& node);

// Smallest subtree minimizing sum(leaf errors) + alpha * (leaf count).
TreePtr prune_at(const TreeNode& tree, double alpha);

// Critical alphas of weakest-link pruning, ascending, starting at 0.
std::vector<double> ccp_alphas(const TreeNode& tree);

std::size_t predict_level(const TreeNode& tree, double x);

struct PruningPath {
  std::vector<double> alphas;
  std::vector<std::size_t> subtree_sizes;    // leaf count of the pruned tree
  std::vector<std::size_t> decision_nodes;   // internal-node count
  std::vector<double> cv_mean;               // held-out fold accuracy
  std::vector<double> cv_std;
};

// Alphas from `tree`; each alpha is scored by regrowing on CV folds, pruning
// at that alpha and evaluating held-out accuracy.
PruningPath pruning_path(const TreeNode& tree, const std::vector<double>& x,
                         const std::vector<std::size_t>& y, std::size_t n_levels,
                         int max_depth, int folds, std::uint64_t seed = 0);

struct AlphaChoice {
  double alpha = 0.0;
  bool fallback = false;  // no candidate kept a decision node
};

// Maximizes cv mean/std (std floored at 1e-9) over alphas whose pruned tree
// keeps at least one decision node; ratio ties resolve to the smaller alpha.
AlphaChoice select_alpha(const PruningPath& path);

}  // namespace tabbench::disc
