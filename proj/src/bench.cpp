#include "tabbench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tabbench/discretize.hpp"
#include "tabbench/encoders.hpp"
#include "tabbench/errors.hpp"
#include "tabbench/registry.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/split.hpp"

namespace tabbench::bench {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig config;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));

    if (key == "datasets") {
      config.datasets = split_list(value);
    } else if (key == "encoders") {
      config.encoders = split_list(value);
    } else if (key == "models") {
      config.models = split_list(value);
    } else if (key == "repetitions") {
      config.repetitions = std::stoi(value);
    } else if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "epochs") {
      config.epochs = std::stoi(value);
    } else if (key == "entity_batch") {
      config.entity_batch = std::stoi(value);
    } else if (key == "context_batch") {
      config.context_batch = std::stoi(value);
    } else if (key == "learning_rate") {
      config.learning_rate = std::stod(value);
    } else if (key == "output_dir") {
      config.output_dir = value;
    } else if (key == "cache_dir") {
      config.cache_dir = value;
    } else if (key == "workers") {
      config.workers = std::stoi(value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key " + key);
    }
  }
  config.validate();
  return config;
}

void RunConfig::validate() const {
  if (datasets.empty()) throw ConfigError("config needs at least one dataset");
  if (encoders.empty()) throw ConfigError("config needs at least one encoder");
  if (models.empty()) throw ConfigError("config needs at least one model");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (entity_batch < 1 || context_batch < 1) throw ConfigError("batch sizes must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  for (const auto& e : encoders) enc::encoder_kind_from_string(e);
  for (const auto& m : models) models::arch_from_string(m);
}

std::string CellKey::id() const {
  return dataset + "|" + encoder + "|" + model + "|" + std::to_string(rep);
}

std::string CellRecord::to_json_line() const {
  nlohmann::json j;
  j["dataset"] = key.dataset;
  j["encoder"] = key.encoder;
  j["model"] = key.model;
  j["rep"] = key.rep;
  j["seed"] = seed;
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  if (status == "ok") {
    if (f1.has_value()) {
      j["f1"] = *f1;
    } else {
      j["f1"] = nullptr;
    }
    j["bce"] = bce;
    j["train_seconds"] = train_seconds;
    j["train_loss"] = train_loss;
    j["validation_loss"] = validation_loss;
  }
  return j.dump();
}

CellRecord CellRecord::from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  CellRecord rec;
  rec.key.dataset = j.at("dataset").get<std::string>();
  rec.key.encoder = j.at("encoder").get<std::string>();
  rec.key.model = j.at("model").get<std::string>();
  rec.key.rep = j.at("rep").get<int>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.status = j.at("status").get<std::string>();
  if (j.contains("error")) rec.error = j["error"].get<std::string>();
  if (rec.status == "ok") {
    if (!j.at("f1").is_null()) rec.f1 = j["f1"].get<double>();
    rec.bce = j.at("bce").get<double>();
    rec.train_seconds = j.at("train_seconds").get<double>();
    rec.train_loss = j.at("train_loss").get<std::vector<double>>();
    rec.validation_loss = j.at("validation_loss").get<std::vector<double>>();
  }
  return rec;
}

std::vector<CellRecord> read_records(const std::string& path) {
  std::vector<CellRecord> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(CellRecord::from_json_line(line));
  }
  return out;
}

namespace {

int resolve_workers(const RunConfig& config) {
  if (config.workers > 0) return config.workers;
  if (const char* env = std::getenv("TABBENCH_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 2;
}

// Completed results flush to disk strictly in grid order so reruns with the
// same seed produce byte-stable files apart from measured times.
class OrderedWriter {
 public:
  OrderedWriter(const std::string& path, std::size_t n_cells)
      : out_(path, std::ios::app), slots_(n_cells) {}

  void mark_done(std::size_t index) {  // already on disk from a previous run
    std::lock_guard<std::mutex> lock(mu_);
    slots_[index] = std::string{};
    flush_prefix();
  }

  void put(std::size_t index, std::string line) {
    std::lock_guard<std::mutex> lock(mu_);
    slots_[index] = std::move(line);
    flush_prefix();
  }

 private:
  void flush_prefix() {
    while (next_ < slots_.size() && slots_[next_].has_value()) {
      if (!slots_[next_]->empty()) out_ << *slots_[next_] << "\n" << std::flush;
      ++next_;
    }
  }

  std::ofstream out_;
  std::vector<std::optional<std::string>> slots_;
  std::size_t next_ = 0;
  std::mutex mu_;
};

struct Cell {
  std::size_t index;
  CellKey key;
  const enc::EncodedTable* data;
};

}  // namespace

void run(const RunConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.output_dir);
  const std::string records_path = config.output_dir + "/records.jsonl";
  const std::string cache =
      config.cache_dir.empty() ? data::default_cache_dir() : config.cache_dir;

  std::set<std::string> done;
  for (const auto& rec : read_records(records_path)) done.insert(rec.key.id());

  const std::size_t per_dataset =
      config.encoders.size() * config.models.size() *
      static_cast<std::size_t>(config.repetitions);
  OrderedWriter writer(records_path, config.datasets.size() * per_dataset);

  const data::Registry registry = data::Registry::standard();
  const int n_workers = resolve_workers(config);

  std::size_t base_index = 0;
  for (const auto& dataset : config.datasets) {
    // skip the whole dataset if every cell is already recorded
    bool all_done = true;
    {
      std::size_t probe = base_index;
      for (const auto& encoder : config.encoders) {
        for (const auto& model : config.models) {
          for (int rep = 0; rep < config.repetitions; ++rep, ++probe) {
            CellKey key{dataset, encoder, model, rep};
            if (done.count(key.id())) {
              writer.mark_done(probe);
            } else {
              all_done = false;
            }
          }
        }
      }
    }
    if (all_done) {
      base_index += per_dataset;
      continue;
    }

    data::DataTable table = registry.load(dataset, cache);
    disc::DiscretizerConfig dconfig;
    dconfig.seed = derive_seed(config.seed, fnv1a(dataset + "|discretize"));
    disc::DiscretizeResult discretized = disc::discretize_table(table, dconfig);
    data::SplitSpec sspec;
    sspec.seed = derive_seed(config.seed, fnv1a(dataset + "|split"));
    data::Split split = data::split(discretized.table, sspec);

    std::vector<enc::EncodedTable> encoded;
    encoded.reserve(config.encoders.size());
    for (const auto& encoder : config.encoders) {
      enc::EncoderSpec spec;
      spec.kind = enc::encoder_kind_from_string(encoder);
      encoded.push_back(enc::encode_table(split, spec));
    }

    std::vector<Cell> cells;
    std::size_t index = base_index;
    for (std::size_t e = 0; e < config.encoders.size(); ++e) {
      for (const auto& model : config.models) {
        for (int rep = 0; rep < config.repetitions; ++rep, ++index) {
          CellKey key{dataset, config.encoders[e], model, rep};
          if (done.count(key.id())) continue;
          cells.push_back({index, key, &encoded[e]});
        }
      }
    }

    std::mutex queue_mu;
    std::size_t next_cell = 0;
    auto worker = [&]() {
      for (;;) {
        std::size_t mine;
        {
          std::lock_guard<std::mutex> lock(queue_mu);
          if (next_cell >= cells.size()) return;
          mine = next_cell++;
        }
        const Cell& cell = cells[mine];
        CellRecord rec;
        rec.key = cell.key;
        rec.seed = derive_seed(config.seed, fnv1a(cell.key.id()));
        try {
          models::Arch arch = models::arch_from_string(cell.key.model);
          models::TrainConfig tconfig;
          tconfig.epochs = config.epochs;
          tconfig.batch_size =
              arch == models::Arch::entity ? config.entity_batch : config.context_batch;
          tconfig.learning_rate = config.learning_rate;
          tconfig.seed = rec.seed;
          models::TrainReport report = models::train_model(arch, *cell.data, tconfig);
          if (report.diverged) {
            rec.status = "failed";
            rec.error = report.note;
          } else {
            rec.status = "ok";
            rec.f1 = report.test_f1;
            rec.bce = report.test_bce;
            rec.train_seconds = report.train_seconds;
            rec.train_loss = report.train_loss;
            rec.validation_loss = report.validation_loss;
          }
        } catch (const std::exception& ex) {
          rec.status = "failed";
          rec.error = ex.what();
        }
        writer.put(cell.index, rec.to_json_line());
      }
    };

    std::vector<std::thread> pool;
    const int spawn = std::min<int>(n_workers, static_cast<int>(cells.size()));
    for (int i = 0; i < spawn; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    base_index += per_dataset;
  }
}

namespace {

struct Moments {
  std::vector<double> values;

  double mean() const {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }

  double pop_std() const {
    if (values.empty()) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size()));
  }
};

}  // namespace

std::vector<CellSummary> summarize(const std::vector<CellRecord>& records) {
  std::map<std::string, CellSummary> groups;
  std::map<std::string, Moments> f1s, bces, times;
  std::vector<std::string> order;
  for (const auto& rec : records) {
    const std::string key = rec.key.dataset + "|" + rec.key.encoder + "|" + rec.key.model;
    if (!groups.count(key)) {
      groups[key] = {rec.key.dataset, rec.key.encoder, rec.key.model};
      order.push_back(key);
    }
    CellSummary& g = groups[key];
    g.n += 1;
    if (rec.status != "ok") {
      g.n_failed += 1;
      continue;
    }
    if (rec.f1.has_value()) {
      f1s[key].values.push_back(*rec.f1);
    } else {
      g.n_f1_undefined += 1;
    }
    bces[key].values.push_back(rec.bce);
    times[key].values.push_back(rec.train_seconds);
  }

  std::vector<CellSummary> out;
  for (const auto& key : order) {
    CellSummary g = groups[key];
    g.f1_mean = f1s[key].mean();
    g.f1_std = f1s[key].pop_std();
    g.bce_mean = bces[key].mean();
    g.bce_std = bces[key].pop_std();
    g.seconds_mean = times[key].mean();
    g.seconds_std = times[key].pop_std();
    out.push_back(g);
  }
  for (auto& g : out) {
    if (g.encoder == "ordinal") continue;
    for (const auto& other : out) {
      if (other.dataset == g.dataset && other.model == g.model &&
          other.encoder == "ordinal") {
        g.beats_ordinal = g.f1_mean > other.f1_mean;
      }
    }
  }
  return out;
}

void write_report(const std::vector<CellSummary>& summaries,
                  const std::string& output_dir) {
  std::filesystem::create_directories(output_dir);

  {
    std::ofstream out(output_dir + "/summary_f1.csv");
    out << "dataset,model,encoder,f1_mean,f1_std,n,n_failed,n_undefined,beats_ordinal\n";
    for (const auto& g : summaries) {
      out << g.dataset << ',' << g.model << ',' << g.encoder << ',' << g.f1_mean << ','
          << g.f1_std << ',' << g.n << ',' << g.n_failed << ',' << g.n_f1_undefined
          << ',' << (g.beats_ordinal ? 1 : 0) << "\n";
    }
  }
  {
    std::ofstream out(output_dir + "/summary_bce.csv");
    out << "dataset,model,encoder,bce_mean,bce_std,n,n_failed\n";
    for (const auto& g : summaries) {
      out << g.dataset << ',' << g.model << ',' << g.encoder << ',' << g.bce_mean << ','
          << g.bce_std << ',' << g.n << ',' << g.n_failed << "\n";
    }
  }
  {
    std::ofstream out(output_dir + "/timings.csv");
    out << "dataset,model,encoder,train_seconds_mean,train_seconds_std\n";
    for (const auto& g : summaries) {
      out << g.dataset << ',' << g.model << ',' << g.encoder << ',' << g.seconds_mean
          << ',' << g.seconds_std << "\n";
    }
  }

  // plain-text pivot: one table per model, datasets x encoders, best per row
  // marked with '*'
  std::ofstream out(output_dir + "/tables.txt");
  std::vector<std::string> model_names, dataset_names, encoder_names;
  for (const auto& g : summaries) {
    if (std::find(model_names.begin(), model_names.end(), g.model) == model_names.end())
      model_names.push_back(g.model);
    if (std::find(dataset_names.begin(), dataset_names.end(), g.dataset) ==
        dataset_names.end())
      dataset_names.push_back(g.dataset);
    if (std::find(encoder_names.begin(), encoder_names.end(), g.encoder) ==
        encoder_names.end())
      encoder_names.push_back(g.encoder);
  }
  auto find_cell = [&](const std::string& d, const std::string& e,
                       const std::string& m) -> const CellSummary* {
    for (const auto& g : summaries) {
      if (g.dataset == d && g.encoder == e && g.model == m) return &g;
    }
    return nullptr;
  };
  for (const auto& model : model_names) {
    out << "test F1 (mean +/- std), model: " << model << "\n";
    out << std::left << std::setw(12) << "dataset";
    for (const auto& e : encoder_names) out << std::setw(20) << e;
    out << "\n";
    for (const auto& d : dataset_names) {
      double best = -1.0;
      for (const auto& e : encoder_names) {
        if (const CellSummary* g = find_cell(d, e, model)) best = std::max(best, g->f1_mean);
      }
      out << std::setw(12) << d;
      for (const auto& e : encoder_names) {
        const CellSummary* g = find_cell(d, e, model);
        if (!g) {
          out << std::setw(20) << "-";
          continue;
        }
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(3) << g->f1_mean << "+/-"
             << std::setprecision(3) << g->f1_std << (g->f1_mean == best ? "*" : "");
        out << std::setw(20) << cell.str();
      }
      out << "\n";
    }
    out << "\n";
  }
}

}  // namespace tabbench::bench
