#include "tabbench/split.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "tabbench/errors.hpp"
#include "tabbench/rng.hpp"

namespace tabbench::data {

namespace {

DataTable take_rows(const DataTable& table, const std::vector<std::size_t>& idx) {
  DataTable out;
  out.schema = table.schema;
  out.target_name = table.target_name;
  out.task = table.task;
  out.rows.reserve(idx.size());
  for (auto i : idx) out.rows.push_back(table.rows[i]);
  return out;
}

}  // namespace

SplitIndices split_indices(const DataTable& table, const SplitSpec& spec) {
  const double sum = spec.train_fraction + spec.validation_fraction + spec.test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

  const int target = table.target_index();
  std::map<std::string, std::vector<std::size_t>> strata;  // ordered for determinism
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    strata[table.rows[i][static_cast<std::size_t>(target)]].push_back(i);
  }

  SplitIndices out;
  const double fractions[3] = {spec.train_fraction, spec.validation_fraction,
                               spec.test_fraction};
  std::vector<std::size_t>* buckets[3] = {&out.train, &out.validation, &out.test};

  for (auto& [level, idx] : strata) {
    if (idx.size() < 3) {
      out.warnings.push_back(level);
      out.train.insert(out.train.end(), idx.begin(), idx.end());
      continue;
    }
    Rng rng(derive_seed(spec.seed, std::hash<std::string>{}(level)));
    rng.shuffle(idx);

    // largest-remainder allocation per stratum
    const auto n = static_cast<double>(idx.size());
    std::size_t counts[3];
    double remainders[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      double ideal = fractions[s] * n;
      counts[s] = static_cast<std::size_t>(std::floor(ideal));
      remainders[s] = ideal - std::floor(ideal);
      assigned += counts[s];
    }
    while (assigned < idx.size()) {
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (remainders[s] > remainders[best]) best = s;
      }
      counts[best] += 1;
      remainders[best] = -1;
      ++assigned;
    }

    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t j = 0; j < counts[s]; ++j) buckets[s]->push_back(idx[pos++]);
    }
  }
  for (auto* b : buckets) std::sort(b->begin(), b->end());
  return out;
}

Split split(const DataTable& table, const SplitSpec& spec) {
  Split s;
  s.indices = split_indices(table, spec);
  s.train = take_rows(table, s.indices.train);
  s.validation = take_rows(table, s.indices.validation);
  s.test = take_rows(table, s.indices.test);
  return s;
}

void write_split(const Split& s, const SplitSpec& spec, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_table_csv(s.train, (fs::path(dir) / "train.csv").string());
  write_table_csv(s.validation, (fs::path(dir) / "validation.csv").string());
  write_table_csv(s.test, (fs::path(dir) / "test.csv").string());

  nlohmann::json j;
  j["seed"] = spec.seed;
  j["fractions"] = {spec.train_fraction, spec.validation_fraction, spec.test_fraction};
  j["train_indices"] = s.indices.train;
  j["validation_indices"] = s.indices.validation;
  j["test_indices"] = s.indices.test;
  j["warnings"] = s.indices.warnings;
  std::ofstream out(fs::path(dir) / "split.json");
  out << j.dump(2) << "\n";
}

}  // namespace tabbench::data
