#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tabbench/nn.hpp"

using namespace tabbench;
using nn::Mat;

namespace {

Mat<double> random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Mat<double> m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-scale, scale);
  }
  return m;
}

// numeric d loss / d input for a layer wrapped in a scalar loss
template <class Forward>
Mat<double> fd_input_grad(Mat<double> x, Forward f, double eps = 1e-6) {
  Mat<double> g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + eps;
      const double up = f(x);
      x(i, j) = saved - eps;
      const double down = f(x);
      x(i, j) = saved;
      g(i, j) = (up - down) / (2 * eps);
    }
  }
  return g;
}

// weighted-sum loss makes every output element contribute a distinct gradient
double weighted(const Mat<double>& y, const Mat<double>& w) {
  return (y.array() * w.array()).sum();
}

}  // namespace

TEST_CASE("dense forward matches manual affine map") {
  Rng rng(1);
  nn::Dense<double> dense(3, 2, rng);
  dense.weight.value << 1, 2, 3, 4, 5, 6;
  dense.bias.value << 10, 20;
  Mat<double> x(1, 3);
  x << 1, 1, 1;
  Mat<double> y = dense.forward(x);
  CHECK(y(0, 0) == doctest::Approx(1 + 3 + 5 + 10));
  CHECK(y(0, 1) == doctest::Approx(2 + 4 + 6 + 20));
}

TEST_CASE("dense backward matches finite differences") {
  Rng rng(2);
  nn::Dense<double> dense(4, 3, rng);
  Mat<double> x = random_matrix(5, 4, rng);
  Mat<double> w = random_matrix(5, 3, rng);

  Mat<double> y = dense.forward(x);
  Mat<double> dx = dense.backward(w);

  auto loss = [&](const Mat<double>& xin) { return weighted(dense.forward(xin), w); };
  Mat<double> fd = fd_input_grad(x, loss);
  CHECK((dx - fd).cwiseAbs().maxCoeff() < 1e-6);

  // parameter gradients
  auto params = std::vector<std::pair<std::string, nn::Param<double>*>>{
      {"w", &dense.weight}, {"b", &dense.bias}};
  dense.weight.grad.setZero();
  dense.bias.grad.setZero();
  dense.forward(x);
  dense.backward(w);
  auto report = nn::grad_check<double>(
      params, [&]() { return weighted(dense.forward(x), w); }, 1e-6, 1000, 3);
  CHECK(report.max_abs_diff < 1e-6);
}

TEST_CASE("layer norm output is normalized and backward is exact") {
  Rng rng(3);
  nn::LayerNorm<double> ln(6);
  Mat<double> x = random_matrix(4, 6, rng, 3.0);
  Mat<double> y = ln.forward(x);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    CHECK(y.row(i).mean() == doctest::Approx(0.0).epsilon(1e-9));
    const double var = (y.row(i).array() - y.row(i).mean()).square().sum() / 6.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }

  // non-trivial gamma/beta
  ln.gamma.value = random_matrix(1, 6, rng);
  ln.beta.value = random_matrix(1, 6, rng);
  Mat<double> w = random_matrix(4, 6, rng);
  ln.gamma.grad.setZero();
  ln.beta.grad.setZero();
  ln.forward(x);
  Mat<double> dx = ln.backward(w);
  auto loss = [&](const Mat<double>& xin) { return weighted(ln.forward(xin), w); };
  CHECK((dx - fd_input_grad(x, loss)).cwiseAbs().maxCoeff() < 1e-6);

  auto params = std::vector<std::pair<std::string, nn::Param<double>*>>{
      {"gamma", &ln.gamma}, {"beta", &ln.beta}};
  ln.gamma.grad.setZero();
  ln.beta.grad.setZero();
  ln.forward(x);
  ln.backward(w);
  auto report = nn::grad_check<double>(
      params, [&]() { return weighted(ln.forward(x), w); }, 1e-6, 1000, 4);
  CHECK(report.max_abs_diff < 1e-6);
}

TEST_CASE("relu and sigmoid backward match finite differences") {
  Rng rng(4);
  Mat<double> x = random_matrix(3, 5, rng, 2.0);
  Mat<double> w = random_matrix(3, 5, rng);

  nn::ReLU<double> relu;
  relu.forward(x);
  Mat<double> dx = relu.backward(w);
  auto rloss = [&](const Mat<double>& xin) {
    nn::ReLU<double> r;
    return weighted(r.forward(xin), w);
  };
  CHECK((dx - fd_input_grad(x, rloss)).cwiseAbs().maxCoeff() < 1e-6);

  nn::Sigmoid<double> sig;
  sig.forward(x);
  Mat<double> dxs = sig.backward(w);
  auto sloss = [&](const Mat<double>& xin) {
    nn::Sigmoid<double> s;
    return weighted(s.forward(xin), w);
  };
  CHECK((dxs - fd_input_grad(x, sloss)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("dropout scales kept units and keeps eval identity") {
  Rng rng(5);
  nn::Dropout<double> drop(0.5, rng);
  Mat<double> x = Mat<double>::Ones(200, 50);
  Mat<double> eval = drop.forward(x, /*train=*/false);
  CHECK((eval - x).cwiseAbs().maxCoeff() == 0.0);

  Mat<double> train = drop.forward(x, /*train=*/true);
  std::size_t kept = 0;
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    for (Eigen::Index j = 0; j < train.cols(); ++j) {
      if (train(i, j) != 0.0) {
        CHECK(train(i, j) == doctest::Approx(2.0));
        ++kept;
      }
    }
  }
  const double keep_rate = static_cast<double>(kept) / 10000.0;
  CHECK(keep_rate > 0.45);
  CHECK(keep_rate < 0.55);

  // frozen mask is reused
  drop.frozen = true;
  Mat<double> again = drop.forward(x, /*train=*/true);
  CHECK((again - train).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embedding lookup and scatter-add backward") {
  Rng rng(6);
  nn::EmbeddingBag<double> emb({3, 2}, {2, 3}, rng);
  nn::IdxMat idx(2, 2);
  idx << 1, 0, 3, 2;
  Mat<double> y = emb.forward(idx);
  CHECK(y.rows() == 2);
  CHECK(y.cols() == 5);
  CHECK(y(0, 0) == emb.tables[0].value(1, 0));
  CHECK(y(1, 4) == emb.tables[1].value(2, 2));

  Mat<double> w = random_matrix(2, 5, rng);
  emb.backward(w);
  // table 0, row 1 receives sample 0's first block
  CHECK(emb.tables[0].grad(1, 0) == doctest::Approx(w(0, 0)));
  CHECK(emb.tables[0].grad(3, 1) == doctest::Approx(w(1, 1)));
  CHECK(emb.tables[1].grad(0, 2) == doctest::Approx(w(0, 4)));
}

TEST_CASE("attention rows are convex mixtures and gradients are exact") {
  Rng rng(7);
  const Eigen::Index seq = 5, dm = 10;
  nn::MultiHeadAttention<double> mha(dm, 4, 3, seq, rng);
  Mat<double> x = random_matrix(2 * seq, dm, rng);
  Mat<double> y = mha.forward(x);
  CHECK(y.rows() == 2 * seq);
  CHECK(y.cols() == dm);
  for (const auto& p : mha.probs) {
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      CHECK(p.row(r).sum() == doctest::Approx(1.0));
      CHECK(p.row(r).minCoeff() >= 0.0);
    }
  }

  Mat<double> w = random_matrix(2 * seq, dm, rng);
  Mat<double> dx = mha.backward(w);
  auto loss = [&](const Mat<double>& xin) { return weighted(mha.forward(xin), w); };
  CHECK((dx - fd_input_grad(x, loss, 1e-6)).cwiseAbs().maxCoeff() < 1e-6);

  auto params = std::vector<std::pair<std::string, nn::Param<double>*>>{
      {"wq", &mha.wq}, {"bq", &mha.bq}, {"wk", &mha.wk}, {"bk", &mha.bk},
      {"wv", &mha.wv}, {"bv", &mha.bv}, {"wo", &mha.wo}, {"bo", &mha.bo}};
  for (auto& [name, p] : params) p->grad.setZero();
  mha.forward(x);
  mha.backward(w);
  auto report = nn::grad_check<double>(
      params, [&]() { return weighted(mha.forward(x), w); }, 1e-6, 500, 8);
  CHECK(report.max_abs_diff < 1e-6);
}

TEST_CASE("bce loss value and gradient") {
  Mat<double> pred(1, 2), target(1, 2);
  pred << 0.8, 0.3;
  target << 1, 0;
  auto res = nn::bce_loss(pred, target);
  const double expected = -(std::log(0.8) + std::log(0.7)) / 2.0;
  CHECK(res.loss == doctest::Approx(expected));

  // analytic gradient against finite differences
  Rng rng(9);
  Mat<double> p = random_matrix(4, 3, rng, 0.45);
  p.array() += 0.5;  // keep away from the clamp
  Mat<double> t(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) t(i, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  auto res2 = nn::bce_loss(p, t);
  auto loss = [&](const Mat<double>& pin) { return nn::bce_loss(pin, t).loss; };
  CHECK((res2.grad - fd_input_grad(p, loss)).cwiseAbs().maxCoeff() < 1e-6);

  // clamp keeps extreme predictions finite
  Mat<double> extreme(1, 1), one(1, 1);
  extreme << 0.0;
  one << 1.0;
  CHECK(std::isfinite(nn::bce_loss(extreme, one).loss));
}

TEST_CASE("adam moves parameters against the gradient and zeroes it") {
  Rng rng(10);
  nn::Param<double> p;
  p.init(1, 2);
  p.value << 1.0, -1.0;
  p.grad << 0.5, -0.5;
  nn::Adam<double> adam({&p});
  adam.step();
  // first step moves by ~lr in the gradient's opposite direction
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  CHECK(p.value(0, 1) == doctest::Approx(-1.0 + 1e-3).epsilon(1e-6));
  CHECK(p.grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(adam.t == 1);
}

TEST_CASE("adam converges on a quadratic bowl") {
  nn::Param<double> p;
  p.init(1, 2);
  p.value << 3.0, -2.0;
  nn::Adam<double> adam({&p}, 0.05);
  for (int i = 0; i < 2000; ++i) {
    p.grad = 2.0 * p.value;  // d/dx of |x|^2
    adam.step();
  }
  CHECK(p.value.cwiseAbs().maxCoeff() < 1e-4);
}
