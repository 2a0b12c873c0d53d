#include "tabbench/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "tabbench/errors.hpp"

namespace tabbench::enc {

namespace {

const std::vector<std::pair<EncoderKind, std::string>> kKindNames = {
    {EncoderKind::label, "label"},
    {EncoderKind::ordinal, "ordinal"},
    {EncoderKind::rarelabel, "rarelabel"},
    {EncoderKind::onehot, "onehot"},
    {EncoderKind::binary, "binary"},
    {EncoderKind::basen, "basen"},
    {EncoderKind::frequency, "frequency"},
    {EncoderKind::target, "target"},
    {EncoderKind::summary, "summary"},
    {EncoderKind::string_similarity, "string_similarity"},
};

}  // namespace

EncoderKind encoder_kind_from_string(const std::string& name) {
  for (const auto& [kind, text] : kKindNames) {
    if (text == name) return kind;
  }
  throw ConfigError("unknown encoder: " + name);
}

std::string encoder_kind_name(EncoderKind kind) {
  for (const auto& [k, text] : kKindNames) {
    if (k == kind) return text;
  }
  throw ConfigError("unknown encoder kind");
}

void EncoderSpec::validate() const {
  if (rare_threshold < 0.0 || rare_threshold > 1.0) {
    throw ConfigError("rare_threshold must be in [0, 1]");
  }
  if (base < 2) throw ConfigError("base must be >= 2");
  if (smoothing < 0.0) throw ConfigError("smoothing must be >= 0");
  if (quantiles.empty()) throw ConfigError("at least one quantile is required");
  for (double p : quantiles) {
    if (p < 0.0 || p > 1.0) throw ConfigError("quantiles must be in [0, 1]");
  }
  if (quantile_reg < 0.0) throw ConfigError("quantile_reg must be >= 0");
}

double target_encode_smoothed(std::size_t n_level, double level_sum, double prior_mean,
                              double smoothing_mass) {
  const double n = static_cast<double>(n_level);
  const double blend = n / (n + smoothing_mass);
  const double level_mean = n_level == 0 ? prior_mean : level_sum / n;
  return blend * level_mean + (1.0 - blend) * prior_mean;
}

double quantile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double summary_encode(std::vector<double> level_values, double global_quantile,
                      double p, double quantile_reg) {
  const double n = static_cast<double>(level_values.size());
  const double q = quantile_linear(std::move(level_values), p);
  return (q * n + global_quantile * quantile_reg) / (n + quantile_reg);
}

double jaro_similarity(const std::string& s1, const std::string& s2) {
  const std::size_t len1 = s1.size();
  const std::size_t len2 = s2.size();
  if (len1 == 0 && len2 == 0) return 1.0;
  if (len1 == 0 || len2 == 0) return 0.0;

  const std::size_t max_len = std::max(len1, len2);
  const std::size_t window = max_len / 2 > 0 ? max_len / 2 - 1 : 0;

  std::vector<bool> matched1(len1, false), matched2(len2, false);
  std::size_t m = 0;
  for (std::size_t i = 0; i < len1; ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(i + window + 1, len2);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!matched2[j] && s1[i] == s2[j]) {
        matched1[i] = true;
        matched2[j] = true;
        ++m;
        break;
      }
    }
  }
  if (m == 0) return 0.0;

  // transpositions: matched characters out of relative order, halved
  std::size_t out_of_order = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < len1; ++i) {
    if (!matched1[i]) continue;
    while (!matched2[j]) ++j;
    if (s1[i] != s2[j]) ++out_of_order;
    ++j;
  }
  const double t = static_cast<double>(out_of_order) / 2.0;

  const double md = static_cast<double>(m);
  return md / (3.0 * static_cast<double>(len1)) +
         md / (3.0 * static_cast<double>(len2)) + (md - t) / (3.0 * md);
}

double jaro_winkler_similarity(const std::string& s1, const std::string& s2) {
  const double d = jaro_similarity(s1, s2);
  std::size_t prefix = 0;
  while (prefix < 4 && prefix < s1.size() && prefix < s2.size() &&
         s1[prefix] == s2[prefix]) {
    ++prefix;
  }
  return d + static_cast<double>(prefix) * 0.1 * (1.0 - d);
}

namespace {

std::size_t digit_width(std::size_t n_levels, int base) {
  // digits needed to write n_levels - 1 in the given base
  std::size_t width = 1;
  std::size_t capacity = static_cast<std::size_t>(base);
  while (capacity < n_levels) {
    capacity *= static_cast<std::size_t>(base);
    ++width;
  }
  return width;
}

std::vector<double> to_digits(std::size_t value, int base, std::size_t width) {
  std::vector<double> digits(width, 0.0);  // most significant first
  for (std::size_t k = width; k-- > 0;) {
    digits[k] = static_cast<double>(value % static_cast<std::size_t>(base));
    value /= static_cast<std::size_t>(base);
  }
  return digits;
}

}  // namespace

FittedEncoder fit(const EncoderSpec& spec, const std::string& column,
                  const std::vector<std::string>& x, const std::vector<double>* y) {
  spec.validate();
  if (x.empty()) throw ConfigError("fit on empty column: " + column);
  if (spec.needs_target() && (y == nullptr || y->size() != x.size())) {
    throw ConfigError(encoder_kind_name(spec.kind) + " needs a target of matching length");
  }

  FittedEncoder enc;
  enc.spec = spec;
  enc.column = column;

  std::map<std::string, std::size_t> counts;
  for (const auto& v : x) counts[v] += 1;
  for (const auto& [level, count] : counts) enc.vocabulary.push_back(level);
  const std::size_t k = enc.vocabulary.size();
  const double n = static_cast<double>(x.size());

  switch (spec.kind) {
    case EncoderKind::label:
    case EncoderKind::ordinal: {
      for (std::size_t i = 0; i < k; ++i) {
        enc.mapping[enc.vocabulary[i]] = {static_cast<double>(i)};
      }
      enc.unknown = {-1.0};
      enc.output_arity = 1;
      break;
    }
    case EncoderKind::rarelabel: {
      std::vector<std::string> kept;
      for (const auto& level : enc.vocabulary) {
        const double freq = static_cast<double>(counts[level]) / n;
        if (freq > spec.rare_threshold) kept.push_back(level);
      }
      const double rare_index = static_cast<double>(kept.size());
      for (std::size_t i = 0; i < kept.size(); ++i) {
        enc.mapping[kept[i]] = {static_cast<double>(i)};
      }
      for (const auto& level : enc.vocabulary) {
        if (!enc.mapping.count(level)) enc.mapping[level] = {rare_index};
      }
      // unseen levels have frequency 0, i.e. rare by definition
      enc.unknown = {rare_index};
      enc.output_arity = 1;
      break;
    }
    case EncoderKind::onehot: {
      for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> row(k, 0.0);
        row[i] = 1.0;
        enc.mapping[enc.vocabulary[i]] = std::move(row);
      }
      enc.unknown.assign(k, 0.0);
      enc.output_arity = k;
      break;
    }
    case EncoderKind::binary:
    case EncoderKind::basen: {
      const int base = spec.kind == EncoderKind::binary ? 2 : spec.base;
      const std::size_t width = digit_width(k, base);
      for (std::size_t i = 0; i < k; ++i) {
        enc.mapping[enc.vocabulary[i]] = to_digits(i, base, width);
      }
      // collides with the all-zero code of level 0
      enc.unknown.assign(width, 0.0);
      enc.output_arity = width;
      break;
    }
    case EncoderKind::frequency: {
      for (const auto& level : enc.vocabulary) {
        enc.mapping[level] = {static_cast<double>(counts[level]) / n};
      }
      enc.unknown = {0.0};
      enc.output_arity = 1;
      break;
    }
    case EncoderKind::target: {
      std::map<std::string, double> sums;
      for (std::size_t i = 0; i < x.size(); ++i) sums[x[i]] += (*y)[i];
      const double prior = std::accumulate(y->begin(), y->end(), 0.0) / n;
      for (const auto& level : enc.vocabulary) {
        enc.mapping[level] = {
            target_encode_smoothed(counts[level], sums[level], prior, spec.smoothing)};
      }
      enc.unknown = {prior};
      enc.output_arity = 1;
      break;
    }
    case EncoderKind::summary: {
      std::map<std::string, std::vector<double>> per_level;
      for (std::size_t i = 0; i < x.size(); ++i) per_level[x[i]].push_back((*y)[i]);
      std::vector<double> globals;
      for (double p : spec.quantiles) globals.push_back(quantile_linear(*y, p));
      for (const auto& level : enc.vocabulary) {
        std::vector<double> row;
        for (std::size_t q = 0; q < spec.quantiles.size(); ++q) {
          row.push_back(summary_encode(per_level[level], globals[q], spec.quantiles[q],
                                       spec.quantile_reg));
        }
        enc.mapping[level] = std::move(row);
      }
      enc.unknown = globals;
      enc.output_arity = spec.quantiles.size();
      break;
    }
    case EncoderKind::string_similarity: {
      for (const auto& level : enc.vocabulary) {
        std::vector<double> row(k);
        for (std::size_t j = 0; j < k; ++j) {
          row[j] = spec.winkler_boost
                       ? jaro_winkler_similarity(level, enc.vocabulary[j])
                       : jaro_similarity(level, enc.vocabulary[j]);
        }
        enc.mapping[level] = std::move(row);
      }
      enc.unknown.assign(k, 0.0);  // unused: unseen strings are compared directly
      enc.output_arity = k;
      break;
    }
  }
  return enc;
}

std::vector<double> FittedEncoder::transform_one(const std::string& value) const {
  auto it = mapping.find(value);
  if (it != mapping.end()) return it->second;
  if (spec.kind == EncoderKind::string_similarity) {
    std::vector<double> row(vocabulary.size());
    for (std::size_t j = 0; j < vocabulary.size(); ++j) {
      row[j] = spec.winkler_boost ? jaro_winkler_similarity(value, vocabulary[j])
                                  : jaro_similarity(value, vocabulary[j]);
    }
    return row;
  }
  return unknown;
}

std::vector<std::vector<double>> FittedEncoder::transform(
    const std::vector<std::string>& x) const {
  std::vector<std::vector<double>> out;
  out.reserve(x.size());
  for (const auto& v : x) out.push_back(transform_one(v));
  return out;
}

std::string FittedEncoder::to_json() const {
  nlohmann::json j;
  j["kind"] = encoder_kind_name(spec.kind);
  j["column"] = column;
  j["params"] = {{"rare_threshold", spec.rare_threshold},
                 {"base", spec.base},
                 {"smoothing", spec.smoothing},
                 {"quantiles", spec.quantiles},
                 {"quantile_reg", spec.quantile_reg},
                 {"winkler_boost", spec.winkler_boost}};
  j["vocabulary"] = vocabulary;
  j["mapping"] = mapping;
  j["unknown"] = unknown;
  j["output_arity"] = output_arity;
  return j.dump(2);
}

FittedEncoder FittedEncoder::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FittedEncoder enc;
  enc.spec.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
  const auto& p = j.at("params");
  enc.spec.rare_threshold = p.at("rare_threshold").get<double>();
  enc.spec.base = p.at("base").get<int>();
  enc.spec.smoothing = p.at("smoothing").get<double>();
  enc.spec.quantiles = p.at("quantiles").get<std::vector<double>>();
  enc.spec.quantile_reg = p.at("quantile_reg").get<double>();
  enc.spec.winkler_boost = p.at("winkler_boost").get<bool>();
  enc.column = j.at("column").get<std::string>();
  enc.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  enc.mapping = j.at("mapping").get<std::map<std::string, std::vector<double>>>();
  enc.unknown = j.at("unknown").get<std::vector<double>>();
  enc.output_arity = j.at("output_arity").get<std::size_t>();
  return enc;
}

std::size_t ColumnVocab::index_of(double v) const {
  auto it = std::lower_bound(values.begin(), values.end(), v);
  if (it == values.end() || *it != v) return 0;
  return static_cast<std::size_t>(it - values.begin()) + 1;
}

namespace {

std::vector<std::vector<float>> encode_target(const data::DataTable& table,
                                              const std::vector<std::string>& levels) {
  const auto t = static_cast<std::size_t>(table.target_index());
  const bool binary = levels.size() == 2;
  const std::size_t width = binary ? 1 : levels.size();
  std::vector<std::vector<float>> out(table.n_rows(), std::vector<float>(width, 0.0f));
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    auto it = std::lower_bound(levels.begin(), levels.end(), table.rows[i][t]);
    if (it == levels.end() || *it != table.rows[i][t]) {
      throw ConfigError("target level outside the training vocabulary: " +
                        table.rows[i][t]);
    }
    const auto idx = static_cast<std::size_t>(it - levels.begin());
    if (binary) {
      out[i][0] = idx == 1 ? 1.0f : 0.0f;
    } else {
      out[i][idx] = 1.0f;
    }
  }
  return out;
}

}  // namespace

EncodedTable encode_table(const data::Split& split, const EncoderSpec& spec) {
  spec.validate();
  const data::DataTable& train = split.train;

  EncodedTable out;
  out.class_levels = train.target_schema().levels;
  out.n_classes = out.class_levels.size() == 2 ? 1 : out.class_levels.size();

  std::vector<double> y;
  if (spec.needs_target()) {
    const auto t = static_cast<std::size_t>(train.target_index());
    y.resize(train.n_rows());
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
      auto it = std::lower_bound(out.class_levels.begin(), out.class_levels.end(),
                                 train.rows[i][t]);
      y[i] = static_cast<double>(it - out.class_levels.begin());
    }
  }

  const auto features = train.feature_indices();
  std::size_t offset = 0;
  for (std::size_t c : features) {
    FittedEncoder enc =
        fit(spec, train.schema[c].name, train.column(c), y.empty() ? nullptr : &y);
    out.blocks.push_back({enc.column, offset, enc.output_arity});
    offset += enc.output_arity;
    out.encoders.push_back(std::move(enc));
  }
  out.n_outputs = offset;

  auto encode_split = [&](const data::DataTable& table) {
    std::vector<std::vector<double>> rows(table.n_rows(),
                                          std::vector<double>(out.n_outputs));
    for (std::size_t e = 0; e < out.encoders.size(); ++e) {
      const auto c = static_cast<std::size_t>(
          table.column_index(out.encoders[e].column));
      const std::size_t off = out.blocks[e].offset;
      for (std::size_t i = 0; i < table.n_rows(); ++i) {
        std::vector<double> v = out.encoders[e].transform_one(table.rows[i][c]);
        std::copy(v.begin(), v.end(), rows[i].begin() + static_cast<long>(off));
      }
    }
    return rows;
  };
  out.train = encode_split(split.train);
  out.validation = encode_split(split.validation);
  out.test = encode_split(split.test);

  out.vocabs.resize(out.n_outputs);
  for (std::size_t c = 0; c < out.n_outputs; ++c) {
    std::set<double> distinct;
    for (const auto& row : out.train) distinct.insert(row[c]);
    out.vocabs[c].values.assign(distinct.begin(), distinct.end());
  }
  auto index_split = [&](const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<int>> idx(rows.size(), std::vector<int>(out.n_outputs));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < out.n_outputs; ++c) {
        idx[i][c] = static_cast<int>(out.vocabs[c].index_of(rows[i][c]));
      }
    }
    return idx;
  };
  out.train_idx = index_split(out.train);
  out.validation_idx = index_split(out.validation);
  out.test_idx = index_split(out.test);

  out.train_y = encode_target(split.train, out.class_levels);
  out.validation_y = encode_target(split.validation, out.class_levels);
  out.test_y = encode_target(split.test, out.class_levels);
  return out;
}

void write_encoded_csv(const EncodedTable& table, const std::string& dir) {
  std::filesystem::create_directories(dir);

  auto write_matrix = [&](const std::vector<std::vector<double>>& rows,
                          const std::vector<std::vector<float>>& ys,
                          const std::string& path) {
    std::ofstream out(path);
    for (const auto& b : table.blocks) {
      for (std::size_t k = 0; k < b.width; ++k) {
        out << b.source_column;
        if (b.width > 1) out << "_" << k;
        out << ',';
      }
    }
    for (std::size_t k = 0; k < table.n_classes; ++k) {
      out << "target";
      if (table.n_classes > 1) out << "_" << k;
      out << (k + 1 == table.n_classes ? '\n' : ',');
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (double v : rows[i]) out << v << ',';
      for (std::size_t k = 0; k < table.n_classes; ++k) {
        out << ys[i][k] << (k + 1 == table.n_classes ? '\n' : ',');
      }
    }
  };
  write_matrix(table.train, table.train_y, dir + "/train.csv");
  write_matrix(table.validation, table.validation_y, dir + "/validation.csv");
  write_matrix(table.test, table.test_y, dir + "/test.csv");

  nlohmann::json j;
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : table.blocks) {
    j["blocks"].push_back(
        {{"column", b.source_column}, {"offset", b.offset}, {"width", b.width}});
  }
  j["class_levels"] = table.class_levels;
  j["n_classes"] = table.n_classes;
  j["encoders"] = nlohmann::json::array();
  for (const auto& e : table.encoders) {
    j["encoders"].push_back(nlohmann::json::parse(e.to_json()));
  }
  std::ofstream meta(dir + "/encoding.json");
  meta << j.dump(2) << "\n";
}

}  // namespace tabbench::enc
