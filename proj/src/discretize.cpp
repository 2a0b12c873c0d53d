#include "tabbench/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "tabbench/errors.hpp"
#include "tabbench/rng.hpp"

namespace tabbench::disc {

std::size_t BinEdges::bin_index(double v) const {
  // count of edges strictly below v; intervals are right-closed
  return static_cast<std::size_t>(
      std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
}

BinEdges extract_bins(const TreeNode& pruned, const std::string& column) {
  BinEdges bins;
  bins.column = column;
  std::set<double> thresholds;
  std::vector<const TreeNode*> stack{&pruned};
  while (!stack.empty()) {
    const TreeNode* node = stack.back();
    stack.pop_back();
    if (node->is_leaf()) continue;
    thresholds.insert(node->threshold);
    stack.push_back(node->left.get());
    stack.push_back(node->right.get());
  }
  bins.edges.assign(thresholds.begin(), thresholds.end());
  bins.degenerate = bins.edges.empty();
  return bins;
}

namespace {

double cv_accuracy(const std::vector<double>& x, const std::vector<std::size_t>& y,
                   std::size_t n_levels, int depth, int folds, std::uint64_t seed) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5eedf01d));
  rng.shuffle(order);

  std::vector<double> scores;
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
    std::vector<std::size_t> hist(n_levels, 0);
    for (auto v : train_y) hist[v] += 1;
    if (std::count_if(hist.begin(), hist.end(), [](std::size_t c) { return c > 0; }) < 2 ||
        test_x.empty()) {
      continue;
    }
    TreePtr tree = grow_tree(train_x, train_y, n_levels, depth);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_x.size(); ++i) {
      if (predict_level(*tree, test_x[i]) == test_y[i]) ++correct;
    }
    scores.push_back(static_cast<double>(correct) / static_cast<double>(test_x.size()));
  }
  if (scores.empty()) return 0.0;
  return std::accumulate(scores.begin(), scores.end(), 0.0) /
         static_cast<double>(scores.size());
}

}  // namespace

DiscretizeResult discretize_table(const data::DataTable& table,
                                  const DiscretizerConfig& config) {
  DiscretizeResult result;
  result.table = table;

  const auto& target_levels = table.target_schema().levels;
  const auto t = static_cast<std::size_t>(table.target_index());
  std::vector<std::size_t> y(table.n_rows());
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    auto it = std::lower_bound(target_levels.begin(), target_levels.end(), table.rows[i][t]);
    y[i] = static_cast<std::size_t>(it - target_levels.begin());
  }
  const std::size_t n_levels = target_levels.size();

  for (std::size_t c = 0; c < table.schema.size(); ++c) {
    if (table.schema[c].role != data::Role::continuous) continue;
    const std::string& name = table.schema[c].name;
    std::vector<double> x(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
      x[i] = std::strtod(table.rows[i][c].c_str(), nullptr);
    }
    const std::uint64_t col_seed = derive_seed(config.seed, c);

    int best_depth = 1;
    double best_acc = -1.0;
    for (int depth = 1; depth <= config.max_depth; ++depth) {
      double acc = cv_accuracy(x, y, n_levels, depth, config.folds, col_seed);
      if (acc > best_acc) {  // ties keep the shallower tree
        best_acc = acc;
        best_depth = depth;
      }
    }

    TreePtr t0 = grow_tree(x, y, n_levels, best_depth);
    BinEdges bins;
    ColumnDiagnostics diag;
    diag.column = name;
    diag.chosen_depth = best_depth;
    if (t0->is_leaf()) {
      bins.column = name;
      bins.degenerate = true;
    } else {
      diag.path = pruning_path(*t0, x, y, n_levels, best_depth, config.folds, col_seed);
      AlphaChoice choice = select_alpha(diag.path);
      diag.chosen_alpha = choice.alpha;
      TreePtr pruned = prune_at(*t0, choice.alpha);
      bins = extract_bins(*pruned, name);
      bins.chosen_alpha = choice.alpha;
    }

    for (std::size_t i = 0; i < result.table.rows.size(); ++i) {
      result.table.rows[i][c] = "bin_" + std::to_string(bins.bin_index(x[i]));
    }
    result.bins.push_back(std::move(bins));
    result.diagnostics.push_back(std::move(diag));
  }

  data::infer_schema(result.table, /*lock_categorical=*/true);
  return result;
}

BinEdges kmeans_bins(const std::vector<double>& x, std::size_t k, int max_iter,
                     std::uint64_t seed) {
  std::vector<double> distinct(x);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (k < 2) throw ConfigError("kmeans_bins needs k >= 2");
  if (distinct.size() < k) throw ConfigError("kmeans_bins needs >= k distinct values");

  // seed centroids from distinct values
  Rng rng(seed);
  std::vector<double> pool(distinct);
  rng.shuffle(pool);
  std::vector<double> centroids(pool.begin(), pool.begin() + static_cast<long>(k));
  std::sort(centroids.begin(), centroids.end());

  std::vector<std::size_t> assign(x.size(), k);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        double d = (x[i] - centroids[j]) * (x[i] - centroids[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      sums[assign[i]] += x[i];
      counts[assign[i]] += 1;
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        centroids[j] = sums[j] / static_cast<double>(counts[j]);
      } else {
        // empty cluster: reseed to the point farthest from its centroid
        double worst = -1.0;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          double d = std::abs(x[i] - centroids[assign[i]]);
          if (d > worst) {
            worst = d;
            pick = i;
          }
        }
        centroids[j] = x[pick];
      }
    }
  }

  std::sort(centroids.begin(), centroids.end());
  BinEdges bins;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    bins.edges.push_back((centroids[j] + centroids[j + 1]) / 2.0);
  }
  return bins;
}

std::string bins_to_json(const std::vector<BinEdges>& bins) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : bins) {
    arr.push_back({{"column", b.column},
                   {"edges", b.edges},
                   {"chosen_alpha", b.chosen_alpha},
                   {"degenerate", b.degenerate}});
  }
  return arr.dump(2);
}

std::vector<BinEdges> bins_from_json(const std::string& text) {
  std::vector<BinEdges> out;
  for (const auto& j : nlohmann::json::parse(text)) {
    BinEdges b;
    b.column = j.at("column").get<std::string>();
    b.edges = j.at("edges").get<std::vector<double>>();
    b.chosen_alpha = j.at("chosen_alpha").get<double>();
    b.degenerate = j.at("degenerate").get<bool>();
    out.push_back(std::move(b));
  }
  return out;
}

void write_diagnostics_csv(const std::vector<ColumnDiagnostics>& diags,
                           const std::string& path) {
  std::ofstream out(path);
  out << "column,depth,alpha,leaves,decision_nodes,cv_mean,cv_std,chosen\n";
  for (const auto& d : diags) {
    for (std::size_t i = 0; i < d.path.alphas.size(); ++i) {
      out << d.column << ',' << d.chosen_depth << ',' << d.path.alphas[i] << ','
          << d.path.subtree_sizes[i] << ',' << d.path.decision_nodes[i] << ','
          << d.path.cv_mean[i] << ',' << d.path.cv_std[i] << ','
          << (d.path.alphas[i] == d.chosen_alpha ? 1 : 0) << "\n";
    }
  }
}

}  // namespace tabbench::disc
