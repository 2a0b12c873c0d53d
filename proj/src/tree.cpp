#include "tabbench/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tabbench/errors.hpp"
#include "tabbench/rng.hpp"

namespace tabbench::disc {

std::size_t TreeNode::n_samples() const {
  return std::accumulate(level_counts.begin(), level_counts.end(), std::size_t{0});
}

std::size_t TreeNode::majority_level() const {
  return static_cast<std::size_t>(
      std::max_element(level_counts.begin(), level_counts.end()) - level_counts.begin());
}

std::size_t TreeNode::n_leaves() const {
  if (is_leaf()) return 1;
  return left->n_leaves() + right->n_leaves();
}

std::size_t TreeNode::n_decision_nodes() const {
  if (is_leaf()) return 0;
  return 1 + left->n_decision_nodes() + right->n_decision_nodes();
}

std::size_t TreeNode::misclassified() const {
  return n_samples() - level_counts[majority_level()];
}

std::size_t TreeNode::subtree_misclassified() const {
  if (is_leaf()) return misclassified();
  return left->subtree_misclassified() + right->subtree_misclassified();
}

double entropy_bits(const std::vector<std::size_t>& counts) {
  const auto n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (n == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

struct Sample {
  double x;
  std::size_t y;
};

TreePtr grow_rec(std::vector<Sample>& samples, std::size_t lo, std::size_t hi,
                 std::size_t n_levels, int depth_left) {
  auto node = std::make_unique<TreeNode>();
  node->level_counts.assign(n_levels, 0);
  for (std::size_t i = lo; i < hi; ++i) node->level_counts[samples[i].y] += 1;
  node->impurity = entropy_bits(node->level_counts);

  const std::size_t n = hi - lo;
  if (depth_left <= 0 || n < 2 || node->impurity == 0.0) return node;

  // scan midpoints between consecutive distinct sorted x values
  std::vector<std::size_t> left_counts(n_levels, 0);
  double best_cost = std::numeric_limits<double>::infinity();
  double best_threshold = 0.0;
  std::size_t best_split = 0;

  std::size_t i = lo;
  std::vector<std::size_t> running(n_levels, 0);
  while (i < hi) {
    std::size_t j = i;
    while (j < hi && samples[j].x == samples[i].x) {
      running[samples[j].y] += 1;
      ++j;
    }
    if (j == hi) break;  // no distinct value to the right
    const double threshold = (samples[i].x + samples[j].x) / 2.0;
    std::vector<std::size_t> right_counts(n_levels);
    for (std::size_t k = 0; k < n_levels; ++k) {
      right_counts[k] = node->level_counts[k] - running[k];
    }
    const auto n_left = static_cast<double>(j - lo);
    const auto n_right = static_cast<double>(hi - j);
    const double cost =
        (n_left * entropy_bits(running) + n_right * entropy_bits(right_counts)) /
        static_cast<double>(n);
    if (cost < best_cost) {  // strict: ties keep the smaller threshold
      best_cost = cost;
      best_threshold = threshold;
      best_split = j;
    }
    i = j;
  }

  if (!std::isfinite(best_cost)) return node;  // constant x
  node->threshold = best_threshold;
  node->left = grow_rec(samples, lo, best_split, n_levels, depth_left - 1);
  node->right = grow_rec(samples, best_split, hi, n_levels, depth_left - 1);
  return node;
}

}  // namespace

TreePtr grow_tree(const std::vector<double>& x, const std::vector<std::size_t>& y,
                  std::size_t n_levels, int max_depth) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ConfigError("grow_tree needs matching x/y of length >= 2");
  }
  if (n_levels < 2) throw DegenerateTargetError("grow_tree needs >= 2 target levels");
  std::vector<Sample> samples(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) samples[i] = {x[i], y[i]};
  std::stable_sort(samples.begin(), samples.end(),
                   [](const Sample& a, const Sample& b) { return a.x < b.x; });
  return grow_rec(samples, 0, samples.size(), n_levels, max_depth);
}

TreePtr clone_tree(const TreeNode& node) {
  auto out = std::make_unique<TreeNode>();
  out->threshold = node.threshold;
  out->level_counts = node.level_counts;
  out->impurity = node.impurity;
  if (!node.is_leaf()) {
    out->left = clone_tree(*node.left);
    out->right = clone_tree(*node.right);
  }
  return out;
}

namespace {

// weakest-link statistic: g(t) = (R(t) - R(T_t)) / (|leaves(T_t)| - 1),
// with risk measured in misclassification counts
void collect_g(TreeNode* node, std::vector<std::pair<double, TreeNode*>>& out) {
  if (node->is_leaf()) return;
  const double r_node = static_cast<double>(node->misclassified());
  const double r_subtree = static_cast<double>(node->subtree_misclassified());
  const double leaves = static_cast<double>(node->n_leaves());
  out.emplace_back((r_node - r_subtree) / (leaves - 1.0), node);
  collect_g(node->left.get(), out);
  collect_g(node->right.get(), out);
}

void collapse(TreeNode* node) {
  node->left.reset();
  node->right.reset();
  node->threshold = 0.0;
}

constexpr double kGTolerance = 1e-12;

double min_g(TreeNode* root) {
  std::vector<std::pair<double, TreeNode*>> gs;
  collect_g(root, gs);
  double out = std::numeric_limits<double>::infinity();
  for (auto& [g, node] : gs) out = std::min(out, g);
  return out;
}

// Collapses one weakest link at a time while the tree's minimal g stays at or
// below `limit`; the link list is re-collected after every collapse because a
// collapse frees descendants and shifts ancestor statistics.
void collapse_upto(TreeNode* root, double limit) {
  while (!root->is_leaf()) {
    std::vector<std::pair<double, TreeNode*>> gs;
    collect_g(root, gs);
    double lowest = std::numeric_limits<double>::infinity();
    for (auto& [g, node] : gs) lowest = std::min(lowest, g);
    if (lowest > limit + kGTolerance) return;
    for (auto& [g, node] : gs) {
      if (g <= lowest + kGTolerance) {
        collapse(node);
        break;
      }
    }
  }
}

}  // namespace

std::vector<double> ccp_alphas(const TreeNode& tree) {
  std::vector<double> alphas{0.0};
  TreePtr work = clone_tree(tree);
  while (!work->is_leaf()) {
    double g = std::max(min_g(work.get()), alphas.back());
    alphas.push_back(g);
    collapse_upto(work.get(), g);
  }
  return alphas;
}

TreePtr prune_at(const TreeNode& tree, double alpha) {
  TreePtr work = clone_tree(tree);
  collapse_upto(work.get(), alpha);
  return work;
}

std::size_t predict_level(const TreeNode& tree, double x) {
  const TreeNode* node = &tree;
  while (!node->is_leaf()) node = x <= node->threshold ? node->left.get() : node->right.get();
  return node->majority_level();
}

PruningPath pruning_path(const TreeNode& tree, const std::vector<double>& x,
                         const std::vector<std::size_t>& y, std::size_t n_levels,
                         int max_depth, int folds, std::uint64_t seed) {
  if (tree.is_leaf()) throw ConfigError("pruning_path needs at least one decision node");
  if (folds < 2) throw ConfigError("pruning_path needs folds >= 2");

  PruningPath path;
  path.alphas = ccp_alphas(tree);
  for (double a : path.alphas) {
    TreePtr pruned = prune_at(tree, a);
    path.subtree_sizes.push_back(pruned->n_leaves());
    path.decision_nodes.push_back(pruned->n_decision_nodes());
  }

  // deterministic fold assignment: shuffled indices dealt round-robin
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5eedf01d));
  rng.shuffle(order);

  std::vector<std::vector<double>> fold_scores(path.alphas.size());
  for (int f = 0; f < folds; ++f) {
    std::vector<double> train_x, test_x;
    std::vector<std::size_t> train_y, test_y;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (static_cast<int>(i % static_cast<std::size_t>(folds)) == f) {
        test_x.push_back(x[order[i]]);
        test_y.push_back(y[order[i]]);
      } else {
        train_x.push_back(x[order[i]]);
        train_y.push_back(y[order[i]]);
      }
    }
    // skip folds whose training part lost all class diversity
    std::vector<std::size_t> hist(n_levels, 0);
    for (auto v : train_y) hist[v] += 1;
    if (std::count_if(hist.begin(), hist.end(), [](std::size_t c) { return c > 0; }) < 2 ||
        test_x.empty()) {
      continue;
    }
    TreePtr fold_tree = grow_tree(train_x, train_y, n_levels, max_depth);
    for (std::size_t a = 0; a < path.alphas.size(); ++a) {
      TreePtr pruned = prune_at(*fold_tree, path.alphas[a]);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < test_x.size(); ++i) {
        if (predict_level(*pruned, test_x[i]) == test_y[i]) ++correct;
      }
      fold_scores[a].push_back(static_cast<double>(correct) /
                               static_cast<double>(test_x.size()));
    }
  }

  for (auto& scores : fold_scores) {
    if (scores.empty()) {
      path.cv_mean.push_back(0.0);
      path.cv_std.push_back(0.0);
      continue;
    }
    double mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                  static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= static_cast<double>(scores.size());
    path.cv_mean.push_back(mean);
    path.cv_std.push_back(std::sqrt(var));
  }
  return path;
}

AlphaChoice select_alpha(const PruningPath& path) {
  if (path.alphas.empty()) throw ConfigError("empty pruning path");
  AlphaChoice choice;
  double best_ratio = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < path.alphas.size(); ++i) {
    if (path.decision_nodes[i] < 1) continue;
    const double ratio = path.cv_mean[i] / std::max(path.cv_std[i], 1e-9);
    if (ratio > best_ratio) {  // strict: ratio ties keep the smaller alpha
      best_ratio = ratio;
      choice.alpha = path.alphas[i];
      found = true;
    }
  }
  if (!found) {
    choice.alpha = path.alphas.front();
    choice.fallback = true;
  }
  return choice;
}

}  // namespace tabbench::disc
