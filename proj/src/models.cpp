#include "tabbench/models.hpp"

#include <json.hpp>

#include "tabbench/errors.hpp"

namespace tabbench::models {

std::size_t embedding_dim(std::size_t cardinality) {
  if (cardinality == 0) throw ConfigError("embedding_dim needs cardinality >= 1");
  // smallest d with (d / 1.6)^2 >= C, i.e. 25 d^2 >= 64 C
  std::size_t d = 1;
  while (25 * d * d < 64 * cardinality) ++d;
  return d;
}

F1Result f1_binary(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) throw ConfigError("f1_binary length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == 1 && y_true[i] == 1) ++tp;
    if (y_pred[i] == 1 && y_true[i] == 0) ++fp;
    if (y_pred[i] == 0 && y_true[i] == 1) ++fn;
  }
  F1Result out;
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) return out;
  out.value = 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  out.defined = true;
  return out;
}

double f1_macro(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                std::size_t n_levels) {
  if (y_true.size() != y_pred.size()) throw ConfigError("f1_macro length mismatch");
  if (n_levels == 0) throw ConfigError("f1_macro needs n_levels >= 1");
  double total = 0.0;
  for (std::size_t level = 0; level < n_levels; ++level) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == static_cast<int>(level);
      const bool p = y_pred[i] == static_cast<int>(level);
      if (p && t) ++tp;
      if (p && !t) ++fp;
      if (!p && t) ++fn;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom > 0) total += 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return total / static_cast<double>(n_levels);
}

Arch arch_from_string(const std::string& name) {
  if (name == "entity") return Arch::entity;
  if (name == "context") return Arch::context;
  throw ConfigError("unknown model: " + name);
}

std::string arch_name(Arch arch) {
  return arch == Arch::entity ? "entity" : "context";
}

std::string report_to_json(const TrainReport& report) {
  nlohmann::json j;
  j["train_loss"] = report.train_loss;
  j["validation_loss"] = report.validation_loss;
  j["train_seconds"] = report.train_seconds;
  j["test_bce"] = report.test_bce;
  if (report.test_f1.has_value()) {
    j["test_f1"] = *report.test_f1;
  } else {
    j["test_f1"] = nullptr;
  }
  j["diverged"] = report.diverged;
  j["note"] = report.note;
  return j.dump(2);
}

TrainReport train_model(Arch arch, const enc::EncodedTable& data,
                        const TrainConfig& config) {
  if (data.train_idx.empty() || data.n_outputs == 0) {
    throw ConfigError("train_model needs a non-empty encoded table");
  }
  Rng init_rng(derive_seed(config.seed, 0x1417));
  Rng drop_rng(derive_seed(config.seed, 0xd409));
  const auto cards = cardinalities_of(data);
  const auto n_out = static_cast<Eigen::Index>(data.n_classes);
  if (arch == Arch::entity) {
    EntityNet<float> net(cards, n_out, init_rng, drop_rng);
    return detail::train_loop(net, data, config);
  }
  ContextNet<float> net(cards, n_out, init_rng, drop_rng);
  return detail::train_loop(net, data, config);
}

}  // namespace tabbench::models
