#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tabbench/bench.hpp"
#include "tabbench/discretize.hpp"
#include "tabbench/encoders.hpp"
#include "tabbench/models.hpp"
#include "tabbench/registry.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/split.hpp"

namespace {

using namespace tabbench;

std::string cache_or_default(const std::string& cache) {
  return cache.empty() ? data::default_cache_dir() : cache;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Categorical-encoding benchmark for small tabular classification tasks.\n"
      "Environment: TABBENCH_CACHE_DIR (dataset cache), TABBENCH_OFFLINE=1 (no\n"
      "downloads), TABBENCH_WORKERS (training parallelism), TABBENCH_MANIFEST\n"
      "(dataset manifest override)."};
  app.require_subcommand(1);

  std::string cache_dir;
  app.add_option("--cache-dir", cache_dir, "dataset cache directory");

  // fetch
  auto* fetch = app.add_subcommand("fetch", "download and verify datasets");
  std::vector<std::string> fetch_names;
  bool fetch_all = false;
  bool offline = false;
  fetch->add_option("datasets", fetch_names, "dataset names");
  fetch->add_flag("--all", fetch_all, "every dataset in the manifest");
  fetch->add_flag("--offline", offline, "fail instead of downloading");

  // discretize
  auto* discretize = app.add_subcommand("discretize", "bin continuous columns");
  std::string d_dataset, d_out = ".";
  std::uint64_t d_seed = 0;
  discretize->add_option("dataset", d_dataset, "dataset name")->required();
  discretize->add_option("--out", d_out, "output directory");
  discretize->add_option("--seed", d_seed, "fold seed");

  // encode
  auto* encode = app.add_subcommand("encode", "split and encode a dataset");
  std::string e_dataset, e_encoder, e_out = ".";
  std::uint64_t e_seed = 0;
  encode->add_option("dataset", e_dataset, "dataset name")->required();
  encode->add_option("encoder", e_encoder, "encoder name")->required();
  encode->add_option("--out", e_out, "output directory");
  encode->add_option("--seed", e_seed, "discretizer and split seed");

  // train
  auto* train = app.add_subcommand("train", "train one model on one encoding");
  std::string t_dataset, t_encoder, t_model = "entity";
  std::uint64_t t_seed = 0;
  int t_epochs = 10, t_batch = 0;
  double t_rate = 5e-3;
  train->add_option("dataset", t_dataset, "dataset name")->required();
  train->add_option("encoder", t_encoder, "encoder name")->required();
  train->add_option("--model", t_model, "entity or context");
  train->add_option("--seed", t_seed, "master seed");
  train->add_option("--epochs", t_epochs, "training epochs");
  train->add_option("--batch", t_batch, "batch size (default 256 entity, 128 context)");
  train->add_option("--rate", t_rate, "adam learning rate");

  // run
  auto* run = app.add_subcommand("run", "run a benchmark grid from a config file");
  std::string r_config;
  run->add_option("config", r_config, "key=value config file")->required();

  // report
  auto* report = app.add_subcommand("report", "summarize records.jsonl of a run");
  std::string p_dir;
  report->add_option("run_dir", p_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const data::Registry registry = data::Registry::standard();
    const std::string cache = cache_or_default(cache_dir);

    if (*fetch) {
      std::vector<std::string> names = fetch_all ? registry.names() : fetch_names;
      if (names.empty()) throw ConfigError("fetch: give dataset names or --all");
      for (const auto& name : names) {
        std::cout << name << " -> " << registry.fetch(name, cache, offline) << "\n";
      }
    } else if (*discretize) {
      data::DataTable table = registry.load(d_dataset, cache);
      disc::DiscretizerConfig config;
      config.seed = d_seed;
      disc::DiscretizeResult result = disc::discretize_table(table, config);
      data::write_table_csv(result.table, d_out + "/" + d_dataset + "_discrete.csv");
      std::ofstream bins(d_out + "/" + d_dataset + "_bins.json");
      bins << disc::bins_to_json(result.bins) << "\n";
      disc::write_diagnostics_csv(result.diagnostics,
                                  d_out + "/" + d_dataset + "_diagnostics.csv");
      std::cout << "discretized " << result.bins.size() << " columns\n";
    } else if (*encode) {
      data::DataTable table = registry.load(e_dataset, cache);
      disc::DiscretizerConfig dconfig;
      dconfig.seed = e_seed;
      disc::DiscretizeResult result = disc::discretize_table(table, dconfig);
      data::SplitSpec sspec;
      sspec.seed = e_seed;
      data::Split split = data::split(result.table, sspec);
      enc::EncoderSpec spec;
      spec.kind = enc::encoder_kind_from_string(e_encoder);
      enc::EncodedTable encoded = enc::encode_table(split, spec);
      enc::write_encoded_csv(encoded, e_out);
      std::cout << "encoded " << encoded.n_outputs << " output columns\n";
    } else if (*train) {
      data::DataTable table = registry.load(t_dataset, cache);
      disc::DiscretizerConfig dconfig;
      dconfig.seed = derive_seed(t_seed, 1);
      disc::DiscretizeResult result = disc::discretize_table(table, dconfig);
      data::SplitSpec sspec;
      sspec.seed = derive_seed(t_seed, 2);
      data::Split split = data::split(result.table, sspec);
      enc::EncoderSpec spec;
      spec.kind = enc::encoder_kind_from_string(t_encoder);
      enc::EncodedTable encoded = enc::encode_table(split, spec);
      models::Arch arch = models::arch_from_string(t_model);
      models::TrainConfig tconfig;
      tconfig.epochs = t_epochs;
      tconfig.batch_size =
          t_batch > 0 ? t_batch : (arch == models::Arch::entity ? 256 : 128);
      tconfig.learning_rate = t_rate;
      tconfig.seed = derive_seed(t_seed, 3);
      models::TrainReport rep = models::train_model(arch, encoded, tconfig);
      std::cout << models::report_to_json(rep) << "\n";
    } else if (*run) {
      bench::RunConfig config = bench::RunConfig::from_file(r_config);
      if (config.cache_dir.empty()) config.cache_dir = cache;
      bench::run(config);
      auto records = bench::read_records(config.output_dir + "/records.jsonl");
      bench::write_report(bench::summarize(records), config.output_dir);
      std::cout << "wrote " << records.size() << " records to " << config.output_dir
                << "\n";
    } else if (*report) {
      auto records = bench::read_records(p_dir + "/records.jsonl");
      bench::write_report(bench::summarize(records), p_dir);
      std::cout << "summarized " << records.size() << " records\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
