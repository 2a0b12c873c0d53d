#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tabbench/errors.hpp"
#include "tabbench/rng.hpp"

namespace tabbench::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using IdxMat = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
struct Param {
  Mat<T> value;
  Mat<T> grad;

  void init(Eigen::Index rows, Eigen::Index cols) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }
};

template <class T>
void glorot_uniform(Mat<T>& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      w(i, j) = static_cast<T>(rng.uniform(-limit, limit));
    }
  }
}

template <class T>
void uniform_init(Mat<T>& w, Rng& rng, double lo, double hi) {
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      w(i, j) = static_cast<T>(rng.uniform(lo, hi));
    }
  }
}

// ---- layers ----

template <class T>
struct Dense {
  Param<T> weight;  // in x out
  Param<T> bias;    // 1 x out
  Mat<T> input;

  Dense(Eigen::Index in, Eigen::Index out, Rng& rng) {
    weight.init(in, out);
    bias.init(1, out);
    glorot_uniform(weight.value, rng);
  }

  Mat<T> forward(const Mat<T>& x) {
    input = x;
    Mat<T> y = x * weight.value;
    y.rowwise() += bias.value.row(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    weight.grad += input.transpose() * dy;
    bias.grad.row(0) += dy.colwise().sum();
    return dy * weight.value.transpose();
  }
};

template <class T>
struct LayerNorm {
  Param<T> gamma;  // 1 x features
  Param<T> beta;
  T eps;
  Mat<T> normalized;
  Mat<T> inv_std;  // rows x 1

  explicit LayerNorm(Eigen::Index features, T eps_ = static_cast<T>(1e-6)) : eps(eps_) {
    gamma.init(1, features);
    gamma.value.setOnes();
    beta.init(1, features);
  }

  Mat<T> forward(const Mat<T>& x) {
    const auto f = static_cast<T>(x.cols());
    Mat<T> centered = x;
    inv_std.resize(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const T mean = x.row(i).mean();
      centered.row(i).array() -= mean;
      const T var = centered.row(i).array().square().sum() / f;
      inv_std(i, 0) = static_cast<T>(1) / std::sqrt(var + eps);
      centered.row(i) *= inv_std(i, 0);
    }
    normalized = centered;
    Mat<T> y = centered.array().rowwise() * gamma.value.row(0).array();
    y.rowwise() += beta.value.row(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const auto f = static_cast<T>(dy.cols());
    gamma.grad.row(0) += (dy.array() * normalized.array()).colwise().sum().matrix();
    beta.grad.row(0) += dy.colwise().sum();
    Mat<T> dn = dy.array().rowwise() * gamma.value.row(0).array();
    Mat<T> dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
      const T sum_dn = dn.row(i).sum();
      const T sum_dn_n = (dn.row(i).array() * normalized.row(i).array()).sum();
      dx.row(i) = inv_std(i, 0) *
                  (dn.row(i).array() - sum_dn / f -
                   normalized.row(i).array() * (sum_dn_n / f));
    }
    return dx;
  }
};

// Inverted dropout: kept units are scaled by 1/(1-rate). The mask can be
// frozen so a finite-difference pass sees the same network as backprop.
template <class T>
struct Dropout {
  T rate;
  Rng* rng;
  bool frozen = false;
  Mat<T> mask;

  Dropout(T rate_, Rng& rng_) : rate(rate_), rng(&rng_) {}

  Mat<T> forward(const Mat<T>& x, bool train) {
    if (!train || rate <= static_cast<T>(0)) {
      mask.resize(0, 0);
      return x;
    }
    const bool reuse = frozen && mask.rows() == x.rows() && mask.cols() == x.cols();
    if (!reuse) {
      const T scale = static_cast<T>(1) / (static_cast<T>(1) - rate);
      mask.resize(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          mask(i, j) = rng->uniform() < static_cast<double>(rate) ? static_cast<T>(0)
                                                                  : scale;
        }
      }
    }
    return x.cwiseProduct(mask);
  }

  Mat<T> backward(const Mat<T>& dy) const {
    if (mask.size() == 0) return dy;
    return dy.cwiseProduct(mask);
  }
};

template <class T>
struct ReLU {
  Mat<T> input;

  Mat<T> forward(const Mat<T>& x) {
    input = x;
    return x.cwiseMax(static_cast<T>(0));
  }

  Mat<T> backward(const Mat<T>& dy) const {
    return (input.array() > static_cast<T>(0)).template cast<T>() * dy.array();
  }
};

template <class T>
struct Sigmoid {
  Mat<T> output;

  Mat<T> forward(const Mat<T>& x) {
    output = (static_cast<T>(1) / (static_cast<T>(1) + (-x.array()).exp())).matrix();
    return output;
  }

  Mat<T> backward(const Mat<T>& dy) const {
    return (dy.array() * output.array() * (static_cast<T>(1) - output.array())).matrix();
  }
};

// Per-column lookup tables; rows of `indices` select one table row per column
// and the selections are concatenated.
template <class T>
struct EmbeddingBag {
  std::vector<Param<T>> tables;          // (cardinality+1) x dim each
  std::vector<Eigen::Index> dims;
  IdxMat indices;

  EmbeddingBag(const std::vector<Eigen::Index>& cardinalities,
               const std::vector<Eigen::Index>& dims_, Rng& rng)
      : dims(dims_) {
    if (cardinalities.size() != dims.size()) {
      throw ConfigError("embedding cardinalities and dims must align");
    }
    tables.resize(dims.size());
    for (std::size_t j = 0; j < dims.size(); ++j) {
      tables[j].init(cardinalities[j] + 1, dims[j]);
      uniform_init(tables[j].value, rng, -0.05, 0.05);
    }
  }

  Eigen::Index total_dim() const {
    Eigen::Index d = 0;
    for (auto v : dims) d += v;
    return d;
  }

  Mat<T> forward(const IdxMat& idx) {
    indices = idx;
    Mat<T> out(idx.rows(), total_dim());
    for (Eigen::Index i = 0; i < idx.rows(); ++i) {
      Eigen::Index off = 0;
      for (std::size_t j = 0; j < tables.size(); ++j) {
        out.block(i, off, 1, dims[j]) = tables[j].value.row(idx(i, static_cast<Eigen::Index>(j)));
        off += dims[j];
      }
    }
    return out;
  }

  void backward(const Mat<T>& dy) {
    for (Eigen::Index i = 0; i < indices.rows(); ++i) {
      Eigen::Index off = 0;
      for (std::size_t j = 0; j < tables.size(); ++j) {
        tables[j].grad.row(indices(i, static_cast<Eigen::Index>(j))) +=
            dy.block(i, off, 1, dims[j]);
        off += dims[j];
      }
    }
  }
};

// Scaled dot-product attention over fixed-length sequences; the batch is laid
// out as (n_sequences * seq_len) x model_dim.
template <class T>
struct MultiHeadAttention {
  Eigen::Index model_dim, n_heads, head_dim, seq_len;
  Param<T> wq, wk, wv;  // model_dim x (n_heads*head_dim)
  Param<T> bq, bk, bv;
  Param<T> wo;  // (n_heads*head_dim) x model_dim
  Param<T> bo;

  Mat<T> input, q, k, v, heads;
  std::vector<Mat<T>> probs;  // per sequence per head, seq_len x seq_len

  MultiHeadAttention(Eigen::Index model_dim_, Eigen::Index n_heads_,
                     Eigen::Index head_dim_, Eigen::Index seq_len_, Rng& rng)
      : model_dim(model_dim_), n_heads(n_heads_), head_dim(head_dim_), seq_len(seq_len_) {
    const Eigen::Index inner = n_heads * head_dim;
    for (auto* p : {&wq, &wk, &wv}) {
      p->init(model_dim, inner);
      glorot_uniform(p->value, rng);
    }
    for (auto* p : {&bq, &bk, &bv}) p->init(1, inner);
    wo.init(inner, model_dim);
    glorot_uniform(wo.value, rng);
    bo.init(1, model_dim);
  }

  Mat<T> forward(const Mat<T>& x) {
    input = x;
    const Eigen::Index n_seq = x.rows() / seq_len;
    q = x * wq.value;
    q.rowwise() += bq.value.row(0);
    k = x * wk.value;
    k.rowwise() += bk.value.row(0);
    v = x * wv.value;
    v.rowwise() += bv.value.row(0);

    const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(head_dim));
    heads.resize(x.rows(), n_heads * head_dim);
    probs.assign(static_cast<std::size_t>(n_seq * n_heads), {});
    for (Eigen::Index s = 0; s < n_seq; ++s) {
      for (Eigen::Index h = 0; h < n_heads; ++h) {
        auto qs = q.block(s * seq_len, h * head_dim, seq_len, head_dim);
        auto ks = k.block(s * seq_len, h * head_dim, seq_len, head_dim);
        auto vs = v.block(s * seq_len, h * head_dim, seq_len, head_dim);
        Mat<T> scores = qs * ks.transpose() * scale;
        for (Eigen::Index r = 0; r < seq_len; ++r) {
          const T mx = scores.row(r).maxCoeff();
          scores.row(r) = (scores.row(r).array() - mx).exp();
          scores.row(r) /= scores.row(r).sum();
        }
        probs[static_cast<std::size_t>(s * n_heads + h)] = scores;
        heads.block(s * seq_len, h * head_dim, seq_len, head_dim) = scores * vs;
      }
    }
    Mat<T> y = heads * wo.value;
    y.rowwise() += bo.value.row(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const Eigen::Index n_seq = input.rows() / seq_len;
    const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(head_dim));

    wo.grad += heads.transpose() * dy;
    bo.grad.row(0) += dy.colwise().sum();
    Mat<T> dheads = dy * wo.value.transpose();

    Mat<T> dq = Mat<T>::Zero(q.rows(), q.cols());
    Mat<T> dk = Mat<T>::Zero(k.rows(), k.cols());
    Mat<T> dv = Mat<T>::Zero(v.rows(), v.cols());
    for (Eigen::Index s = 0; s < n_seq; ++s) {
      for (Eigen::Index h = 0; h < n_heads; ++h) {
        const Mat<T>& p = probs[static_cast<std::size_t>(s * n_heads + h)];
        auto qs = q.block(s * seq_len, h * head_dim, seq_len, head_dim);
        auto ks = k.block(s * seq_len, h * head_dim, seq_len, head_dim);
        auto vs = v.block(s * seq_len, h * head_dim, seq_len, head_dim);
        auto dh = dheads.block(s * seq_len, h * head_dim, seq_len, head_dim);

        Mat<T> dp = dh * vs.transpose();
        dv.block(s * seq_len, h * head_dim, seq_len, head_dim) += p.transpose() * dh;
        // softmax backward, rowwise
        Mat<T> dscores(seq_len, seq_len);
        for (Eigen::Index r = 0; r < seq_len; ++r) {
          const T dot = (dp.row(r).array() * p.row(r).array()).sum();
          dscores.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
        }
        dscores *= scale;
        dq.block(s * seq_len, h * head_dim, seq_len, head_dim) += dscores * ks;
        dk.block(s * seq_len, h * head_dim, seq_len, head_dim) +=
            dscores.transpose() * qs;
      }
    }

    wq.grad += input.transpose() * dq;
    bq.grad.row(0) += dq.colwise().sum();
    wk.grad += input.transpose() * dk;
    bk.grad.row(0) += dk.colwise().sum();
    wv.grad += input.transpose() * dv;
    bv.grad.row(0) += dv.colwise().sum();
    return dq * wq.value.transpose() + dk * wk.value.transpose() +
           dv * wv.value.transpose();
  }
};

// ---- loss ----

template <class T>
struct BceResult {
  T loss;
  Mat<T> grad;  // d loss / d prediction
};

// Mean binary cross-entropy over every output unit, predictions clamped to
// [1e-7, 1 - 1e-7].
template <class T>
BceResult<T> bce_loss(const Mat<T>& pred, const Mat<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ConfigError("bce_loss shape mismatch");
  }
  const T lo = static_cast<T>(1e-7);
  const T hi = static_cast<T>(1) - lo;
  const T count = static_cast<T>(pred.rows() * pred.cols());
  BceResult<T> out;
  out.grad.setZero(pred.rows(), pred.cols());
  T loss = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const T p = std::clamp(pred(i, j), lo, hi);
      const T y = target(i, j);
      loss -= y * std::log(p) + (static_cast<T>(1) - y) * std::log(static_cast<T>(1) - p);
      if (pred(i, j) > lo && pred(i, j) < hi) {
        out.grad(i, j) = (p - y) / (p * (static_cast<T>(1) - p)) / count;
      }
    }
  }
  out.loss = loss / count;
  return out;
}

// ---- optimizer ----

template <class T>
struct Adam {
  T lr, beta1, beta2, eps;
  std::int64_t t = 0;
  std::vector<Param<T>*> params;
  std::vector<Mat<T>> m, v;

  explicit Adam(std::vector<Param<T>*> params_, T lr_ = static_cast<T>(1e-3),
                T beta1_ = static_cast<T>(0.9), T beta2_ = static_cast<T>(0.999),
                T eps_ = static_cast<T>(1e-8))
      : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_), params(std::move(params_)) {
    for (auto* p : params) {
      m.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
      v.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    ++t;
    const T bc1 = static_cast<T>(1) - std::pow(beta1, static_cast<T>(t));
    const T bc2 = static_cast<T>(1) - std::pow(beta2, static_cast<T>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& g = params[i]->grad;
      m[i] = beta1 * m[i] + (static_cast<T>(1) - beta1) * g;
      v[i] = (beta2 * v[i].array() +
              (static_cast<T>(1) - beta2) * g.array().square()).matrix();
      params[i]->value.array() -=
          lr * (m[i].array() / bc1) / ((v[i].array() / bc2).sqrt() + eps);
      g.setZero();
    }
  }

  void zero_grad() {
    for (auto* p : params) p->grad.setZero();
  }
};

// ---- gradient checking ----

template <class T>
struct GradCheckReport {
  T max_abs_diff = 0;
  T max_rel_diff = 0;
  std::size_t coords_checked = 0;
  std::string worst_param;
};

// Central finite differences against already-populated analytic gradients.
// `loss_fn` must be a pure function of the current parameter values (freeze
// dropout masks first). Large parameter sets are subsampled.
template <class T, class F>
GradCheckReport<T> grad_check(const std::vector<std::pair<std::string, Param<T>*>>& params,
                              F loss_fn, T step, std::size_t max_coords,
                              std::uint64_t seed) {
  GradCheckReport<T> report;
  Rng rng(seed);
  for (const auto& [name, param] : params) {
    const auto size = static_cast<std::size_t>(param->value.size());
    std::vector<std::size_t> coords(size);
    std::iota(coords.begin(), coords.end(), 0);
    if (size > max_coords) {
      rng.shuffle(coords);
      coords.resize(max_coords);
    }
    for (std::size_t c : coords) {
      T* slot = param->value.data() + c;
      const T saved = *slot;
      *slot = saved + step;
      const T up = loss_fn();
      *slot = saved - step;
      const T down = loss_fn();
      *slot = saved;
      const T fd = (up - down) / (2 * step);
      const T an = *(param->grad.data() + c);
      const T abs_diff = std::abs(fd - an);
      const T rel = abs_diff / std::max(static_cast<T>(1), std::abs(fd) + std::abs(an));
      if (abs_diff > report.max_abs_diff) {
        report.max_abs_diff = abs_diff;
        report.worst_param = name;
      }
      report.max_rel_diff = std::max(report.max_rel_diff, rel);
      ++report.coords_checked;
    }
  }
  return report;
}

}  // namespace tabbench::nn
