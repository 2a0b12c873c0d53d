#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "tabbench/discretize.hpp"
#include "tabbench/errors.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/table.hpp"
#include "tabbench/tree.hpp"

using namespace tabbench;
using namespace tabbench::disc;

namespace {

// every achievable pruned variant of a subtree as (leaf errors, leaf count)
// pairs; the root may collapse to a leaf or keep both pruned children
void enumerate_prunings(const TreeNode& node,
                        std::vector<std::pair<double, double>>& out) {
  out.emplace_back(static_cast<double>(node.misclassified()), 1.0);
  if (node.is_leaf()) return;
  std::vector<std::pair<double, double>> lefts, rights;
  enumerate_prunings(*node.left, lefts);
  enumerate_prunings(*node.right, rights);
  for (const auto& l : lefts) {
    for (const auto& r : rights) {
      out.emplace_back(l.first + r.first, l.second + r.second);
    }
  }
}

double oracle_best_cost(const TreeNode& tree, double alpha) {
  std::vector<std::pair<double, double>> all;
  enumerate_prunings(tree, all);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [risk, leaves] : all) best = std::min(best, risk + alpha * leaves);
  return best;
}

double oracle_fewest_optimal_leaves(const TreeNode& tree, double alpha,
                                    double tolerance = 1e-9) {
  std::vector<std::pair<double, double>> all;
  enumerate_prunings(tree, all);
  const double best = oracle_best_cost(tree, alpha);
  double fewest = std::numeric_limits<double>::infinity();
  for (const auto& [risk, leaves] : all) {
    if (risk + alpha * leaves <= best + tolerance) fewest = std::min(fewest, leaves);
  }
  return fewest;
}

std::size_t count_nodes(const TreeNode& node) {
  if (node.is_leaf()) return 1;
  return 1 + count_nodes(*node.left) + count_nodes(*node.right);
}

TreePtr random_tree(Rng& rng) {
  // random small dataset, depth-limited growth; rejection below keeps trees
  // at 15 nodes or fewer with at least one decision node
  const std::size_t n = 16 + rng.below(14);
  const std::size_t n_levels = 2 + rng.below(2);
  std::vector<double> x(n);
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(rng.below(8));
    y[i] = static_cast<std::size_t>(rng.below(n_levels));
  }
  return grow_tree(x, y, n_levels, 3);
}

data::DataTable mixed_table(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  data::RawTable raw;
  raw.column_names = {"real1", "real2", "cat", "y"};
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform(0.0, 10.0);
    const double b = rng.uniform(-3.0, 3.0);
    const std::string level = a + rng.uniform(-1.0, 1.0) > 5.0 ? "pos" : "neg";
    raw.rows.push_back({std::to_string(a), std::to_string(b),
                        "c" + std::to_string(rng.below(3)), level});
  }
  return data::build_table(std::move(raw), "y");
}

}  // namespace

TEST_CASE("entropy in bits") {
  CHECK(entropy_bits({3, 3}) == doctest::Approx(1.0));
  CHECK(entropy_bits({4, 0}) == doctest::Approx(0.0));
  CHECK(entropy_bits({}) == doctest::Approx(0.0));
  CHECK(entropy_bits({1, 1, 1, 1}) == doctest::Approx(2.0));
  // 2/3, 1/3 mixture
  const double h = -(2.0 / 3.0) * std::log2(2.0 / 3.0) - (1.0 / 3.0) * std::log2(1.0 / 3.0);
  CHECK(entropy_bits({2, 1}) == doctest::Approx(h));
}

TEST_CASE("grow_tree splits at the midpoint of the best gap") {
  std::vector<double> x{1, 2, 8, 9};
  std::vector<std::size_t> y{0, 0, 1, 1};
  TreePtr t = grow_tree(x, y, 2, 3);
  REQUIRE_FALSE(t->is_leaf());
  CHECK(t->threshold == doctest::Approx(5.0));
  CHECK(t->left->is_leaf());
  CHECK(t->right->is_leaf());
  CHECK(t->left->majority_level() == 0);
  CHECK(t->right->majority_level() == 1);
  CHECK(t->impurity == doctest::Approx(1.0));
  CHECK(t->left->impurity == doctest::Approx(0.0));

  CHECK(predict_level(*t, 4.9) == 0);
  CHECK(predict_level(*t, 5.0) == 0);  // left branch takes x <= threshold
  CHECK(predict_level(*t, 5.1) == 1);
}

TEST_CASE("grow_tree respects the depth limit and pure nodes") {
  Rng rng(99);
  std::vector<double> x(200);
  std::vector<std::size_t> y(200);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform(0.0, 1.0);
    y[i] = rng.below(3);
  }
  TreePtr t = grow_tree(x, y, 3, 2);
  std::vector<const TreeNode*> stack{t.get()};
  std::size_t max_depth = 0;
  std::vector<std::pair<const TreeNode*, std::size_t>> walk{{t.get(), 0}};
  while (!walk.empty()) {
    auto [node, d] = walk.back();
    walk.pop_back();
    max_depth = std::max(max_depth, d);
    if (!node->is_leaf()) {
      walk.emplace_back(node->left.get(), d + 1);
      walk.emplace_back(node->right.get(), d + 1);
    } else {
      CHECK((d == 2 || node->impurity == 0.0 || node->n_samples() < 2));
    }
  }
  CHECK(max_depth <= 2);

  // constant feature cannot split
  TreePtr leaf = grow_tree({1, 1, 1, 1}, {0, 1, 0, 1}, 2, 3);
  CHECK(leaf->is_leaf());
}

TEST_CASE("grow_tree validates its inputs") {
  CHECK_THROWS_AS(grow_tree({1.0}, {0}, 2, 3), ConfigError);
  CHECK_THROWS_AS(grow_tree({1, 2}, {0, 0}, 1, 3), DegenerateTargetError);
}

TEST_CASE("bin boundaries are right closed") {
  BinEdges bins;
  bins.edges = {0.0, 2.0};
  CHECK(bins.n_bins() == 3);
  CHECK(bins.bin_index(-1.0) == 0);
  CHECK(bins.bin_index(0.0) == 0);
  CHECK(bins.bin_index(0.5) == 1);
  CHECK(bins.bin_index(2.0) == 1);
  CHECK(bins.bin_index(2.1) == 2);
}

TEST_CASE("extract_bins collects sorted distinct thresholds") {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::size_t> y{0, 1, 0, 1, 0, 1, 0, 1};
  TreePtr t = grow_tree(x, y, 2, 3);
  BinEdges bins = extract_bins(*t, "f");
  CHECK(bins.column == "f");
  CHECK_FALSE(bins.degenerate);
  CHECK(std::is_sorted(bins.edges.begin(), bins.edges.end()));
  CHECK(std::set<double>(bins.edges.begin(), bins.edges.end()).size() ==
        bins.edges.size());

  TreePtr leaf = grow_tree({1, 1, 1}, {0, 1, 0}, 2, 3);
  CHECK(extract_bins(*leaf, "g").degenerate);
}

TEST_CASE("pruning matches the exhaustive subtree oracle on random trees") {
  Rng rng(4242);
  std::size_t tested = 0;
  while (tested < 60) {
    TreePtr t = random_tree(rng);
    if (t->is_leaf() || count_nodes(*t) > 15) continue;
    ++tested;

    std::vector<double> alphas = ccp_alphas(*t);
    REQUIRE(alphas.size() >= 2);
    CHECK(alphas.front() == 0.0);
    CHECK(std::is_sorted(alphas.begin(), alphas.end()));

    // probe each critical alpha plus midpoints of consecutive intervals
    std::vector<double> probes = alphas;
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
      probes.push_back((alphas[i] + alphas[i + 1]) / 2.0);
    }
    probes.push_back(alphas.back() + 1.0);

    for (double alpha : probes) {
      TreePtr pruned = prune_at(*t, alpha);
      const double risk = static_cast<double>(pruned->subtree_misclassified());
      const double leaves = static_cast<double>(pruned->n_leaves());
      const double cost = risk + alpha * leaves;
      CHECK(cost == doctest::Approx(oracle_best_cost(*t, alpha)).epsilon(1e-9));
      CHECK(leaves ==
            doctest::Approx(oracle_fewest_optimal_leaves(*t, alpha)).epsilon(1e-9));
    }

    // the last critical alpha collapses the tree to its root
    CHECK(prune_at(*t, alphas.back())->is_leaf());
    // nesting: larger alpha never keeps more leaves
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double alpha : alphas) {
      std::size_t l = prune_at(*t, alpha)->n_leaves();
      CHECK(l <= prev);
      prev = l;
    }
  }
}

TEST_CASE("pruning_path reports sizes and fold scores per alpha") {
  Rng rng(7);
  std::vector<double> x(120);
  std::vector<std::size_t> y(120);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform(0.0, 1.0);
    y[i] = x[i] > 0.6 ? 1u : (rng.uniform() < 0.2 ? 1u : 0u);
  }
  TreePtr t = grow_tree(x, y, 2, 4);
  REQUIRE_FALSE(t->is_leaf());
  PruningPath path = pruning_path(*t, x, y, 2, 4, 5, 123);
  REQUIRE(path.alphas.size() >= 2);
  CHECK(path.subtree_sizes.size() == path.alphas.size());
  CHECK(path.decision_nodes.size() == path.alphas.size());
  CHECK(path.cv_mean.size() == path.alphas.size());
  CHECK(path.cv_std.size() == path.alphas.size());
  // alpha 0 already collapses splits that do not reduce training errors
  CHECK(path.subtree_sizes.front() <= t->n_leaves());
  CHECK(path.subtree_sizes.front() >= 2);
  CHECK(path.subtree_sizes.back() == 1);
  CHECK(path.decision_nodes.back() == 0);
  for (double m : path.cv_mean) {
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
  }
  // scoring is deterministic in the seed
  PruningPath again = pruning_path(*t, x, y, 2, 4, 5, 123);
  CHECK(again.cv_mean == path.cv_mean);
  CHECK(again.cv_std == path.cv_std);
}

TEST_CASE("select_alpha maximizes mean over std among decision-node keepers") {
  PruningPath path;
  path.alphas = {0.0, 0.5, 1.0, 2.0};
  path.decision_nodes = {3, 2, 1, 0};
  path.cv_mean = {0.8, 0.9, 0.85, 0.99};
  path.cv_std = {0.1, 0.05, 0.2, 0.001};

  // ratios: 8, 18, 4.25; the root-only candidate is ignored despite its ratio
  AlphaChoice c = select_alpha(path);
  CHECK(c.alpha == 0.5);
  CHECK_FALSE(c.fallback);

  // zero std is floored, not divided by
  path.cv_std = {0.0, 0.05, 0.2, 0.001};
  CHECK(select_alpha(path).alpha == 0.0);

  // exact ratio ties keep the smaller alpha
  path.cv_mean = {0.9, 0.9, 0.9, 0.1};
  path.cv_std = {0.1, 0.1, 0.1, 0.1};
  CHECK(select_alpha(path).alpha == 0.0);

  // nothing keeps a decision node: fall back to the smallest alpha
  path.decision_nodes = {0, 0, 0, 0};
  AlphaChoice f = select_alpha(path);
  CHECK(f.fallback);
  CHECK(f.alpha == 0.0);
}

TEST_CASE("discretize_table rewrites continuous columns as bin levels") {
  data::DataTable table = mixed_table(300, 31);
  REQUIRE(table.schema[0].role == data::Role::continuous);
  REQUIRE(table.schema[1].role == data::Role::continuous);
  REQUIRE(table.schema[2].role == data::Role::categorical);

  DiscretizerConfig config;
  config.seed = 9;
  DiscretizeResult result = discretize_table(table, config);

  CHECK(result.bins.size() == 2);
  CHECK(result.diagnostics.size() == 2);
  CHECK(result.bins[0].column == "real1");

  // the informative column keeps at least one split near the class boundary
  CHECK_FALSE(result.bins[0].degenerate);
  CHECK(result.bins[0].edges.front() > 2.0);
  CHECK(result.bins[0].edges.front() < 8.0);

  // all rewritten cells are bin levels and consistent with the edges
  const auto& bins = result.bins[0];
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    const double v = std::stod(table.rows[i][0]);
    CHECK(result.table.rows[i][0] == "bin_" + std::to_string(bins.bin_index(v)));
  }
  for (const auto& row : result.table.rows) {
    CHECK(row[0].rfind("bin_", 0) == 0);
    CHECK(row[1].rfind("bin_", 0) == 0);
  }

  // categorical and target columns are untouched
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    CHECK(result.table.rows[i][2] == table.rows[i][2]);
    CHECK(result.table.rows[i][3] == table.rows[i][3]);
  }
  CHECK(result.table.schema[0].role == data::Role::categorical);
  CHECK(result.table.schema[1].role == data::Role::categorical);

  // deterministic in the seed
  DiscretizeResult again = discretize_table(table, config);
  CHECK(again.table.rows == result.table.rows);
  for (std::size_t b = 0; b < result.bins.size(); ++b) {
    CHECK(again.bins[b].edges == result.bins[b].edges);
  }
}

TEST_CASE("kmeans_bins places edges between well separated clusters") {
  std::vector<double> x{0.9, 1.0, 1.1, 4.9, 5.0, 5.1};
  BinEdges bins = kmeans_bins(x, 2, 50, 17);
  REQUIRE(bins.edges.size() == 1);
  CHECK(bins.edges[0] == doctest::Approx(3.0));

  BinEdges three = kmeans_bins({0, 0.1, 10, 10.1, 20, 20.1}, 3, 50, 17);
  REQUIRE(three.edges.size() == 2);
  CHECK(three.edges[0] == doctest::Approx(5.05));
  CHECK(three.edges[1] == doctest::Approx(15.05));

  CHECK_THROWS_AS(kmeans_bins({1, 2, 3}, 1, 10, 0), ConfigError);
  CHECK_THROWS_AS(kmeans_bins({1, 1, 1}, 2, 10, 0), ConfigError);
}

TEST_CASE("bin edges survive a json round trip") {
  std::vector<BinEdges> bins(2);
  bins[0].column = "a";
  bins[0].edges = {0.25, 1.5, 2.75};
  bins[0].chosen_alpha = 0.125;
  bins[1].column = "b";
  bins[1].degenerate = true;
  std::vector<BinEdges> back = bins_from_json(bins_to_json(bins));
  REQUIRE(back.size() == 2);
  CHECK(back[0].column == "a");
  CHECK(back[0].edges == bins[0].edges);
  CHECK(back[0].chosen_alpha == 0.125);
  CHECK_FALSE(back[0].degenerate);
  CHECK(back[1].degenerate);
  CHECK(back[1].edges.empty());
}
