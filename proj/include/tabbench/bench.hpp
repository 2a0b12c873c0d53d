#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabbench/models.hpp"

namespace tabbench::bench {

struct RunConfig {
  std::vector<std::string> datasets;
  std::vector<std::string> encoders;
  std::vector<std::string> models;
  int repetitions = 5;
  std::uint64_t seed = 42;
  int epochs = 10;
  int entity_batch = 256;
  int context_batch = 128;
  double learning_rate = 5e-3;
  std::string output_dir = "runs/default";
  std::string cache_dir;  // empty: resolved from the environment
  int workers = 0;        // 0: TABBENCH_WORKERS or hardware concurrency

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);
  void validate() const;
};

struct CellKey {
  std::string dataset, encoder, model;
  int rep = 0;

  std::string id() const;
  bool operator<(const CellKey& other) const { return id() < other.id(); }
};

struct CellRecord {
  CellKey key;
  std::uint64_t seed = 0;
  std::string status;  // "ok" or "failed"
  std::string error;
  std::optional<double> f1;
  double bce = 0.0;
  double train_seconds = 0.0;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;

  std::string to_json_line() const;
  static CellRecord from_json_line(const std::string& line);
};

// Runs the dataset x encoder x model x repetition grid. Records append to
// <output_dir>/records.jsonl in a fixed grid order; cells already present in
// the file are skipped, so an interrupted run resumes where it stopped.
// Failures become records with status "failed".
void run(const RunConfig& config);

struct CellSummary {
  std::string dataset, encoder, model;
  std::size_t n = 0;
  std::size_t n_failed = 0;
  std::size_t n_f1_undefined = 0;
  double f1_mean = 0.0, f1_std = 0.0;
  double bce_mean = 0.0, bce_std = 0.0;
  double seconds_mean = 0.0, seconds_std = 0.0;
  bool beats_ordinal = false;  // f1_mean above the ordinal cell of the same row
};

std::vector<CellRecord> read_records(const std::string& path);
std::vector<CellSummary> summarize(const std::vector<CellRecord>& records);

// summary_f1.csv, summary_bce.csv, timings.csv and tables.txt in output_dir.
void write_report(const std::vector<CellSummary>& summaries,
                  const std::string& output_dir);

}  // namespace tabbench::bench
