#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbench/table.hpp"

namespace tabbench::data {

struct SplitSpec {
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<std::string> warnings;  // target levels too small to stratify
};

struct Split {
  DataTable train;
  DataTable validation;
  DataTable test;
  SplitIndices indices;
};

// Stratified on the target, deterministic under spec.seed. Levels with fewer
// than 3 samples go entirely to train and are reported in warnings.
SplitIndices split_indices(const DataTable& table, const SplitSpec& spec);

Split split(const DataTable& table, const SplitSpec& spec);

// Persists train/validation/test CSVs plus a JSON sidecar with seed,
// fractions and row indices.
void write_split(const Split& s, const SplitSpec& spec, const std::string& dir);

}  // namespace tabbench::data
