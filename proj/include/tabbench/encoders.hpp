#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabbench/split.hpp"
#include "tabbench/table.hpp"

namespace tabbench::enc {

enum class EncoderKind {
  label,
  ordinal,
  rarelabel,
  onehot,
  binary,
  basen,
  frequency,
  target,
  summary,
  string_similarity,
};

EncoderKind encoder_kind_from_string(const std::string& name);
std::string encoder_kind_name(EncoderKind kind);

struct EncoderSpec {
  EncoderKind kind = EncoderKind::ordinal;
  double rare_threshold = 0.05;        // t, rarelabel
  int base = 3;                        // n, basen
  double smoothing = 1.0;              // m, target
  std::vector<double> quantiles{0.5};  // p list, summary
  double quantile_reg = 1.0;           // alpha_q, summary
  bool winkler_boost = false;          // off: Jaro as printed

  void validate() const;
  bool needs_target() const {
    return kind == EncoderKind::target || kind == EncoderKind::summary;
  }
};

inline constexpr const char* kRareToken = "__rare__";

struct FittedEncoder {
  EncoderSpec spec;
  std::string column;
  std::vector<std::string> vocabulary;                 // train levels, lexicographic
  std::map<std::string, std::vector<double>> mapping;  // level -> output row
  std::vector<double> unknown;                         // reserved unknown entry
  std::size_t output_arity = 1;

  // total: unseen levels fall back to `unknown` (string_similarity computes
  // similarities of the unseen string directly)
  std::vector<double> transform_one(const std::string& value) const;
  std::vector<std::vector<double>> transform(const std::vector<std::string>& x) const;

  std::string to_json() const;
  static FittedEncoder from_json(const std::string& text);
};

// y is the numeric target (level index), required iff spec.needs_target().
FittedEncoder fit(const EncoderSpec& spec, const std::string& column,
                  const std::vector<std::string>& x,
                  const std::vector<double>* y = nullptr);

// formula helpers, exposed for direct testing.
double target_encode_smoothed(std::size_t n_level, double level_sum, double prior_mean,
                              double smoothing_mass);
double summary_encode(std::vector<double> level_values, double global_quantile,
                      double p, double quantile_reg);
double quantile_linear(std::vector<double> values, double p);
double jaro_similarity(const std::string& s1, const std::string& s2);
double jaro_winkler_similarity(const std::string& s1, const std::string& s2);

// ---- table-level encoding ----

struct OutputBlock {
  std::string source_column;
  std::size_t offset = 0;
  std::size_t width = 0;
};

// Distinct fitted (train) values of one output column; index 0 is reserved
// for values unseen during fit.
struct ColumnVocab {
  std::vector<double> values;  // sorted distinct
  std::size_t size_with_unknown() const { return values.size() + 1; }
  std::size_t index_of(double v) const;
};

struct EncodedTable {
  std::vector<FittedEncoder> encoders;
  std::vector<OutputBlock> blocks;
  std::vector<ColumnVocab> vocabs;  // one per output column
  std::size_t n_outputs = 0;

  std::vector<std::vector<double>> train, validation, test;

  // embedding-ready: per-row output-column indices into vocabs (0 = unknown)
  std::vector<std::vector<int>> train_idx, validation_idx, test_idx;

  std::vector<std::string> class_levels;
  std::size_t n_classes = 1;  // target width: 1 for binary, K for multi
  std::vector<std::vector<float>> train_y, validation_y, test_y;
};

// Fits encoders on the train split only and encodes all three splits; the
// target becomes a single 0/1 column (binary) or a one-hot block (multi).
EncodedTable encode_table(const data::Split& split, const EncoderSpec& spec);

void write_encoded_csv(const EncodedTable& table, const std::string& dir);

}  // namespace tabbench::enc
