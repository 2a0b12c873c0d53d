#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabbench/encoders.hpp"
#include "tabbench/nn.hpp"

namespace tabbench::models {

// Smallest d with ceil(sqrt(C) * 1.6) semantics, evaluated in exact integer
// arithmetic (25 d^2 >= 64 C) so boundary cardinalities are not at the mercy
// of floating-point rounding.
std::size_t embedding_dim(std::size_t cardinality);

struct F1Result {
  double value = 0.0;
  bool defined = false;
};

// F1 of the positive class; undefined when 2TP + FP + FN == 0.
F1Result f1_binary(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// Unweighted mean of per-level F1; levels with an undefined F1 contribute 0.
double f1_macro(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                std::size_t n_levels);

enum class Arch { entity, context };

Arch arch_from_string(const std::string& name);
std::string arch_name(Arch arch);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 256;
  double learning_rate = 5e-3;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> validation_loss;
  double train_seconds = 0.0;
  double test_bce = 0.0;
  std::optional<double> test_f1;  // empty when F1 is undefined on the test split
  bool diverged = false;
  std::string note;
};

std::string report_to_json(const TrainReport& report);

namespace detail {

template <class T>
struct MlpBlock {
  nn::Dense<T> dense;
  nn::LayerNorm<T> ln;
  nn::Dropout<T> drop;
  nn::ReLU<T> relu;

  MlpBlock(Eigen::Index in, Eigen::Index out, T drop_rate, Rng& init_rng,
           Rng& drop_rng)
      : dense(in, out, init_rng), ln(out), drop(drop_rate, drop_rng) {}

  nn::Mat<T> forward(const nn::Mat<T>& x, bool train) {
    return relu.forward(drop.forward(ln.forward(dense.forward(x)), train));
  }

  nn::Mat<T> backward(const nn::Mat<T>& dy) {
    return dense.backward(ln.backward(drop.backward(relu.backward(dy))));
  }

  void collect(std::vector<std::pair<std::string, nn::Param<T>*>>& out,
               const std::string& prefix) {
    out.emplace_back(prefix + ".dense.w", &dense.weight);
    out.emplace_back(prefix + ".dense.b", &dense.bias);
    out.emplace_back(prefix + ".ln.gamma", &ln.gamma);
    out.emplace_back(prefix + ".ln.beta", &ln.beta);
  }
};

}  // namespace detail

// One embedding table per encoded column (width from the cardinality rule),
// concatenated and fed through two shrinking MLP blocks.
template <class T>
struct EntityNet {
  nn::EmbeddingBag<T> embeddings;
  detail::MlpBlock<T> block1;
  detail::MlpBlock<T> block2;
  nn::Dense<T> head;
  nn::Sigmoid<T> out;

  static std::vector<Eigen::Index> embed_dims(const std::vector<Eigen::Index>& cards) {
    std::vector<Eigen::Index> dims;
    for (auto c : cards) {
      dims.push_back(static_cast<Eigen::Index>(
          embedding_dim(static_cast<std::size_t>(c))));
    }
    return dims;
  }

  static Eigen::Index total_dim(const std::vector<Eigen::Index>& cards) {
    Eigen::Index d = 0;
    for (auto v : embed_dims(cards)) d += v;
    return d;
  }

  EntityNet(const std::vector<Eigen::Index>& cardinalities, Eigen::Index n_outputs,
            Rng& init_rng, Rng& drop_rng)
      : embeddings(cardinalities, embed_dims(cardinalities), init_rng),
        block1(total_dim(cardinalities), std::max<Eigen::Index>(1, total_dim(cardinalities) / 2),
               static_cast<T>(0.1), init_rng, drop_rng),
        block2(std::max<Eigen::Index>(1, total_dim(cardinalities) / 2),
               std::max<Eigen::Index>(1, total_dim(cardinalities) / 4),
               static_cast<T>(0.1), init_rng, drop_rng),
        head(std::max<Eigen::Index>(1, total_dim(cardinalities) / 4), n_outputs,
             init_rng) {}

  nn::Mat<T> forward(const nn::IdxMat& idx, bool train) {
    return out.forward(
        head.forward(block2.forward(block1.forward(embeddings.forward(idx), train), train)));
  }

  void backward(const nn::Mat<T>& dpred) {
    embeddings.backward(block1.backward(block2.backward(head.backward(out.backward(dpred)))));
  }

  std::vector<std::pair<std::string, nn::Param<T>*>> named_params() {
    std::vector<std::pair<std::string, nn::Param<T>*>> out_params;
    for (std::size_t j = 0; j < embeddings.tables.size(); ++j) {
      out_params.emplace_back("embed." + std::to_string(j), &embeddings.tables[j]);
    }
    block1.collect(out_params, "block1");
    block2.collect(out_params, "block2");
    out_params.emplace_back("head.w", &head.weight);
    out_params.emplace_back("head.b", &head.bias);
    return out_params;
  }

  void set_frozen_dropout(bool frozen) {
    block1.drop.frozen = frozen;
    block2.drop.frozen = frozen;
  }
};

// Shared-width embeddings form a sequence (one position per encoded column)
// processed by a single attention block before a flat MLP head.
template <class T>
struct ContextNet {
  static constexpr Eigen::Index kModelDim = 10;
  static constexpr Eigen::Index kHeads = 4;
  static constexpr Eigen::Index kHeadDim = 3;  // ceil(10 / 4)

  Eigen::Index seq_len;
  nn::EmbeddingBag<T> embeddings;
  nn::MultiHeadAttention<T> attention;
  nn::Dropout<T> attn_drop;
  nn::LayerNorm<T> ln1;
  detail::MlpBlock<T> ffn;
  nn::LayerNorm<T> ln2;
  detail::MlpBlock<T> flat_block;
  nn::Dense<T> head;
  nn::Sigmoid<T> out;

  nn::Mat<T> skip1, skip2;

  static std::vector<Eigen::Index> shared_dims(std::size_t n) {
    return std::vector<Eigen::Index>(n, kModelDim);
  }

  ContextNet(const std::vector<Eigen::Index>& cardinalities, Eigen::Index n_outputs,
             Rng& init_rng, Rng& drop_rng)
      : seq_len(static_cast<Eigen::Index>(cardinalities.size())),
        embeddings(cardinalities, shared_dims(cardinalities.size()), init_rng),
        attention(kModelDim, kHeads, kHeadDim, seq_len, init_rng),
        attn_drop(static_cast<T>(0.1), drop_rng),
        ln1(kModelDim),
        ffn(kModelDim, kModelDim, static_cast<T>(0.1), init_rng, drop_rng),
        ln2(kModelDim),
        flat_block(seq_len * kModelDim, seq_len * kModelDim, static_cast<T>(0.1),
                   init_rng, drop_rng),
        head(seq_len * kModelDim, n_outputs, init_rng) {}

  // (n*seq_len) x dim  ->  n x (seq_len*dim); rows are contiguous so this is
  // a pure reshape
  static nn::Mat<T> flatten(const nn::Mat<T>& x, Eigen::Index seq_len) {
    const Eigen::Index n = x.rows() / seq_len;
    nn::Mat<T> y(n, seq_len * x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index p = 0; p < seq_len; ++p) {
        y.block(i, p * x.cols(), 1, x.cols()) = x.row(i * seq_len + p);
      }
    }
    return y;
  }

  static nn::Mat<T> unflatten(const nn::Mat<T>& y, Eigen::Index seq_len) {
    const Eigen::Index dim = y.cols() / seq_len;
    nn::Mat<T> x(y.rows() * seq_len, dim);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index p = 0; p < seq_len; ++p) {
        x.row(i * seq_len + p) = y.block(i, p * dim, 1, dim);
      }
    }
    return x;
  }

  // embeddings arrive as n x (seq_len*dim); attention wants (n*seq_len) x dim
  nn::Mat<T> forward(const nn::IdxMat& idx, bool train) {
    nn::Mat<T> seq = unflatten(embeddings.forward(idx), seq_len);
    nn::Mat<T> a = attn_drop.forward(attention.forward(seq), train);
    skip1 = seq;
    nn::Mat<T> r1 = ln1.forward(a + seq);
    skip2 = r1;
    nn::Mat<T> r2 = ln2.forward(ffn.forward(r1, train) + r1);
    nn::Mat<T> flat = flatten(r2, seq_len);
    return out.forward(head.forward(flat_block.forward(flat, train)));
  }

  void backward(const nn::Mat<T>& dpred) {
    nn::Mat<T> dflat = flat_block.backward(head.backward(out.backward(dpred)));
    nn::Mat<T> dr2 = ln2.backward(unflatten(dflat, seq_len));
    nn::Mat<T> dr1 = ffn.backward(dr2) + dr2;
    nn::Mat<T> da = ln1.backward(dr1);
    nn::Mat<T> dseq = attention.backward(attn_drop.backward(da)) + da;
    embeddings.backward(flatten(dseq, seq_len));
  }

  std::vector<std::pair<std::string, nn::Param<T>*>> named_params() {
    std::vector<std::pair<std::string, nn::Param<T>*>> out_params;
    for (std::size_t j = 0; j < embeddings.tables.size(); ++j) {
      out_params.emplace_back("embed." + std::to_string(j), &embeddings.tables[j]);
    }
    out_params.emplace_back("attn.wq", &attention.wq);
    out_params.emplace_back("attn.bq", &attention.bq);
    out_params.emplace_back("attn.wk", &attention.wk);
    out_params.emplace_back("attn.bk", &attention.bk);
    out_params.emplace_back("attn.wv", &attention.wv);
    out_params.emplace_back("attn.bv", &attention.bv);
    out_params.emplace_back("attn.wo", &attention.wo);
    out_params.emplace_back("attn.bo", &attention.bo);
    out_params.emplace_back("ln1.gamma", &ln1.gamma);
    out_params.emplace_back("ln1.beta", &ln1.beta);
    ffn.collect(out_params, "ffn");
    out_params.emplace_back("ln2.gamma", &ln2.gamma);
    out_params.emplace_back("ln2.beta", &ln2.beta);
    flat_block.collect(out_params, "flat");
    out_params.emplace_back("head.w", &head.weight);
    out_params.emplace_back("head.b", &head.bias);
    return out_params;
  }

  void set_frozen_dropout(bool frozen) {
    attn_drop.frozen = frozen;
    ffn.drop.frozen = frozen;
    flat_block.drop.frozen = frozen;
  }
};

namespace detail {

inline nn::IdxMat to_idx_matrix(const std::vector<std::vector<int>>& rows) {
  nn::IdxMat m(static_cast<Eigen::Index>(rows.size()),
               rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

template <class T>
nn::Mat<T> to_matrix(const std::vector<std::vector<float>>& rows) {
  nn::Mat<T> m(static_cast<Eigen::Index>(rows.size()),
               rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<T>(rows[i][j]);
    }
  }
  return m;
}

inline std::vector<int> decide(const nn::Mat<float>& pred) {
  std::vector<int> out(static_cast<std::size_t>(pred.rows()));
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (pred.cols() == 1) {
      out[static_cast<std::size_t>(i)] = pred(i, 0) >= 0.5f ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      pred.row(i).maxCoeff(&best);
      out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  }
  return out;
}

template <class Net>
TrainReport train_loop(Net& net, const enc::EncodedTable& data,
                       const TrainConfig& config) {
  using T = float;
  TrainReport report;
  const nn::IdxMat train_x = to_idx_matrix(data.train_idx);
  const nn::IdxMat val_x = to_idx_matrix(data.validation_idx);
  const nn::IdxMat test_x = to_idx_matrix(data.test_idx);
  const nn::Mat<T> train_y = to_matrix<T>(data.train_y);
  const nn::Mat<T> val_y = to_matrix<T>(data.validation_y);
  const nn::Mat<T> test_y = to_matrix<T>(data.test_y);

  auto params = net.named_params();
  std::vector<nn::Param<T>*> plain;
  for (auto& [name, p] : params) plain.push_back(p);
  nn::Adam<T> adam(plain, static_cast<T>(config.learning_rate));

  auto eval_loss = [&](const nn::IdxMat& x, const nn::Mat<T>& y) {
    T total = 0;
    Eigen::Index done = 0;
    while (done < x.rows()) {
      const Eigen::Index take = std::min<Eigen::Index>(config.batch_size, x.rows() - done);
      nn::Mat<T> pred = net.forward(x.middleRows(done, take), /*train=*/false);
      total += nn::bce_loss<T>(pred, y.middleRows(done, take)).loss *
               static_cast<T>(take);
      done += take;
    }
    return static_cast<double>(total / static_cast<T>(x.rows()));
  };

  Rng shuffle_rng(derive_seed(config.seed, 0xba7c4));
  const auto started = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < config.epochs && !report.diverged; ++epoch) {
    std::vector<std::size_t> order(static_cast<std::size_t>(train_x.rows()));
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t take =
          std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                order.size() - start);
      nn::IdxMat bx(static_cast<Eigen::Index>(take), train_x.cols());
      nn::Mat<T> by(static_cast<Eigen::Index>(take), train_y.cols());
      for (std::size_t i = 0; i < take; ++i) {
        bx.row(static_cast<Eigen::Index>(i)) =
            train_x.row(static_cast<Eigen::Index>(order[start + i]));
        by.row(static_cast<Eigen::Index>(i)) =
            train_y.row(static_cast<Eigen::Index>(order[start + i]));
      }
      nn::Mat<T> pred = net.forward(bx, /*train=*/true);
      auto loss = nn::bce_loss<T>(pred, by);
      if (!std::isfinite(static_cast<double>(loss.loss))) {
        report.diverged = true;
        report.note = "non-finite training loss at epoch " + std::to_string(epoch);
        break;
      }
      net.backward(loss.grad);
      adam.step();
      epoch_loss += static_cast<double>(loss.loss) * static_cast<double>(take);
      seen += take;
    }
    if (report.diverged) break;
    report.train_loss.push_back(epoch_loss / static_cast<double>(seen));
    report.validation_loss.push_back(eval_loss(val_x, val_y));
  }
  const auto finished = std::chrono::steady_clock::now();
  report.train_seconds =
      std::chrono::duration<double>(finished - started).count();

  if (!report.diverged) {
    report.test_bce = eval_loss(test_x, test_y);
    nn::Mat<T> pred(test_x.rows(), test_y.cols());
    Eigen::Index done = 0;
    while (done < test_x.rows()) {
      const Eigen::Index take =
          std::min<Eigen::Index>(config.batch_size, test_x.rows() - done);
      pred.middleRows(done, take) = net.forward(test_x.middleRows(done, take), false);
      done += take;
    }
    const std::vector<int> y_pred = decide(pred);
    const std::vector<int> y_true = decide(test_y);
    if (test_y.cols() == 1) {
      F1Result f1 = f1_binary(y_true, y_pred);
      if (f1.defined) report.test_f1 = f1.value;
    } else {
      report.test_f1 =
          f1_macro(y_true, y_pred, static_cast<std::size_t>(test_y.cols()));
    }
  }
  return report;
}

}  // namespace detail

// Cardinalities exclude the reserved unknown row; the tables allocate one
// extra row for it.
inline std::vector<Eigen::Index> cardinalities_of(const enc::EncodedTable& data) {
  std::vector<Eigen::Index> cards;
  for (const auto& v : data.vocabs) {
    cards.push_back(static_cast<Eigen::Index>(v.values.size()));
  }
  return cards;
}

TrainReport train_model(Arch arch, const enc::EncodedTable& data,
                        const TrainConfig& config);

}  // namespace tabbench::models
