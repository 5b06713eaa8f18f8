#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "epcplan/nn/dense_net.hpp"
#include "epcplan/nn/grad_check.hpp"
#include "epcplan/nn/loss.hpp"
#include "epcplan/nn/optimizer.hpp"
#include "epcplan/training.hpp"

using namespace epcplan;
using namespace epcplan::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

DenseNet random_net(std::vector<std::size_t> dims, std::uint64_t seed, bool relu_output = false) {
  auto acts = mlp_activations(dims.size() - 1);
  if (relu_output) acts.back() = Activation::Relu;
  auto net = init_net(dims, acts, seed);
  Rng rng(seed + 99);
  for (auto& l : net.layers())
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.uniform(-0.5, 0.5);
  return net;
}

}  // namespace

TEST(Loss, CrossEntropyHandValue) {
  // -log(e^3 / (e + e^2 + e^3)) = log(1 + e^-1 + e^-2) = 0.40760596444
  Vector z(3);
  z << 1, 2, 3;
  const auto r = cross_entropy(z, 2);
  EXPECT_NEAR(r.loss, std::log(1 + std::exp(-1.0) + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(r.loss, 0.40760596444, 1e-10);
  EXPECT_NEAR(r.grad.sum(), 0.0, 1e-15);
  EXPECT_NEAR(r.grad(2), softmax(z)(2) - 1.0, 1e-15);
}

TEST(Loss, UniformLogitsGiveLogFifteen) {
  for (double c : {0.0, 3.5, -100.0}) {
    const Vector z = Vector::Constant(15, c);
    for (std::size_t k = 0; k < 15; ++k) EXPECT_NEAR(cross_entropy(z, k).loss, std::log(15.0), 1e-9);
  }
}

TEST(Loss, SoftmaxIsStableForLargeLogits) {
  Vector z(2);
  z << 1000, 1000;
  const auto p = softmax(z);
  EXPECT_DOUBLE_EQ(p(0), 0.5);
  EXPECT_TRUE(std::isfinite(cross_entropy(z, 0).loss));
}

TEST(Loss, BatchCrossEntropyIsMeanOfRows) {
  Rng rng(1);
  const Matrix z = random_matrix(4, 5, rng);
  std::vector<std::size_t> y = {0, 4, 2, 2};
  const auto b = cross_entropy_batch(z, y);
  double mean = 0;
  for (int r = 0; r < 4; ++r) mean += cross_entropy(z.row(r).transpose(), y[r]).loss / 4;
  EXPECT_NEAR(b.loss, mean, 1e-14);
  EXPECT_THROW(cross_entropy_batch(z, std::vector<std::size_t>{0, 1}), Error);
}

TEST(Loss, InfoNceTwoPairsHandValue) {
  // anchors = views = {e1, e2}, t = 1: s = I, so each row loss is
  // log(e + 1) - 1 = log(1 + e^-1).
  Matrix a(2, 2);
  a << 1, 0, 0, 1;
  const auto r = info_nce(a, a, 1.0);
  EXPECT_NEAR(r.loss, std::log(1 + std::exp(-1.0)), 1e-15);  // 0.3132616875
  // same with t = 0.5: log(1 + e^-2) = 0.1269280110
  EXPECT_NEAR(info_nce(a, a, 0.5).loss, 0.1269280110429725, 1e-12);
}

TEST(Loss, InfoNceUniformRepresentationsGiveLogN) {
  for (Eigen::Index n : {2, 8, 64}) {
    const Matrix same = Matrix::Constant(n, 7, 0.3);
    const auto r = info_nce(same, same, 0.7);
    EXPECT_NEAR(r.loss, std::log(static_cast<double>(n)), 1e-9) << n;
  }
}

TEST(Loss, InfoNceRejectsDegenerateBatch) {
  const Matrix one = Matrix::Ones(1, 3);
  try {
    info_nce(one, one, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBatch);
  }
}

TEST(Loss, InfoNceIsScaleInvariantPerRow) {
  Rng rng(4);
  const Matrix a = random_matrix(5, 3, rng), b = random_matrix(5, 3, rng);
  Matrix a2 = a;
  a2.row(2) *= 7.0;
  EXPECT_NEAR(info_nce(a, b, 0.5).loss, info_nce(a2, b, 0.5).loss, 1e-12);
}

TEST(Net, RejectsBadArchitecture) {
  EXPECT_THROW(init_mlp({4}, 1), Error);
  EXPECT_THROW(init_mlp({4, 0, 3}, 1), Error);
  Layer a{Matrix::Zero(3, 4), Vector::Zero(3), Activation::Relu};
  Layer b{Matrix::Zero(2, 5), Vector::Zero(2), Activation::Identity};
  try {
    DenseNet({a, b});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadArchitecture);
  }
}

TEST(Net, DimMismatchOnWrongInput) {
  const auto net = init_mlp({4, 3, 2}, 1);
  std::vector<double> x(5, 0.0);
  EXPECT_THROW(net.forward(x), Error);
}

TEST(Net, InitIsHeUniformAndDeterministic) {
  const auto a = init_mlp({100, 50, 3}, 9);
  EXPECT_EQ(a, init_mlp({100, 50, 3}, 9));
  EXPECT_FALSE(a == init_mlp({100, 50, 3}, 10));
  const double limit = std::sqrt(6.0 / 100.0);
  EXPECT_LE(a.layers()[0].weight.cwiseAbs().maxCoeff(), limit);
  EXPECT_GT(a.layers()[0].weight.cwiseAbs().maxCoeff(), 0.9 * limit);
  EXPECT_EQ(a.layers()[0].bias.squaredNorm(), 0.0);
  // U(-l, l) has variance l^2 / 3
  const double var = a.layers()[0].weight.squaredNorm() / 5000.0;
  EXPECT_NEAR(var, limit * limit / 3.0, 0.1 * limit * limit / 3.0);
  EXPECT_EQ(a.parameter_count(), 100u * 50 + 50 + 50 * 3 + 3);
}

TEST(Net, ReluOnHiddenIdentityOnOutput) {
  Layer h{Matrix::Identity(2, 2), Vector::Zero(2), Activation::Relu};
  Layer o{-Matrix::Identity(2, 2), Vector::Zero(2), Activation::Identity};
  const DenseNet net({h, o});
  std::vector<double> x = {1.0, -2.0};
  const auto y = net.forward(x);
  EXPECT_EQ(y(0), -1.0);
  EXPECT_EQ(y(1), 0.0);
}

TEST(Net, BatchForwardMatchesSingleRows) {
  Rng rng(2);
  const auto net = random_net({6, 8, 4}, 3);
  const Matrix x = random_matrix(5, 6, rng);
  const Matrix y = net.forward_batch(x);
  for (Eigen::Index r = 0; r < 5; ++r) {
    Vector xr = x.row(r).transpose();
    const auto yr = net.forward(std::span<const double>(xr.data(), 6));
    EXPECT_LT((yr - y.row(r).transpose()).norm(), 1e-12);
  }
}

TEST(GradCheck, CrossEntropyOnRandomNets) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<std::size_t> dims = {2 + rng.below(5)};
    const auto hidden = 1 + rng.below(3);
    for (std::uint64_t h = 0; h < hidden; ++h) dims.push_back(2 + rng.below(6));
    dims.push_back(2 + rng.below(4));
    const auto net = random_net(dims, seed);
    std::vector<double> x(dims[0]);
    for (auto& v : x) v = rng.normal();
    const auto report = grad_check(net, x, rng.below(dims.back()));
    EXPECT_LT(report.max_relative_error, 1e-5) << "seed " << seed;
    EXPECT_EQ(report.tensors.size(), net.layer_count() * 2);
  }
}

TEST(GradCheck, InfoNceOnRandomEncoders) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 1000);
    const std::size_t in = 3 + rng.below(4);
    const auto net = random_net({in, 6, 4}, seed);
    const auto n = static_cast<Eigen::Index>(2 + rng.below(5));
    const Matrix a = random_matrix(n, static_cast<Eigen::Index>(in), rng);
    const Matrix b = a + 0.3 * random_matrix(n, static_cast<Eigen::Index>(in), rng);
    const auto report = info_nce_grad_check(net, a, b, 0.5 + rng.uniform());
    EXPECT_LT(report.max_relative_error, 1e-5) << "seed " << seed;
  }
}

TEST(GradCheck, DetectsABrokenGradient) {
  auto net = random_net({3, 4, 2}, 5);
  std::vector<double> x = {0.3, -1.2, 0.8};
  Matrix row = Eigen::Map<const Matrix>(x.data(), 1, 3);
  ForwardCache cache;
  net.forward_cached(row, cache);
  std::size_t label = 1;
  const auto ce = cross_entropy_batch(cache.output(), std::span<const std::size_t>(&label, 1));
  auto g = net.backward(cache, ce.grad);
  g.weight[1](0, 0) += 0.1;
  const auto report = compare_gradients(
      net, g, [&](const DenseNet& n) { return cross_entropy(n.forward(x), label).loss; }, 1e-5);
  EXPECT_GT(report.max_relative_error, 1e-3);
  EXPECT_THROW(compare_gradients(net, g, [](const DenseNet&) { return 0.0; }, 0.1), Error);
}

TEST(GradCheck, InputGradientMatchesFiniteDifference) {
  auto net = random_net({3, 5, 2}, 8);
  Vector x(3);
  x << 0.2, -0.4, 1.1;
  Matrix row = x.transpose();
  ForwardCache cache;
  net.forward_cached(row, cache);
  std::size_t label = 0;
  const auto ce = cross_entropy_batch(cache.output(), std::span<const std::size_t>(&label, 1));
  Matrix dx;
  net.backward(cache, ce.grad, 0, &dx);
  for (int i = 0; i < 3; ++i) {
    Vector up = x, down = x;
    up(i) += 1e-6;
    down(i) -= 1e-6;
    const double num = (cross_entropy(net.forward(std::span<const double>(up.data(), 3)), label).loss -
                        cross_entropy(net.forward(std::span<const double>(down.data(), 3)), label).loss) /
                       2e-6;
    EXPECT_LT(relative_error(dx(0, i), num), 1e-6);
  }
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Layer l{Matrix::Zero(1, 2), Vector::Zero(1), Activation::Identity};
  DenseNet net({l});
  Adam adam(net);
  auto g = net.zero_gradients();
  g.weight[0] << 3.0, -0.5;
  g.bias[0] << 0.0;
  adam.step(net, g, 0.01);
  // bias-corrected first step: m_hat / (sqrt(v_hat) + eps) = sign(g) (up to eps)
  EXPECT_NEAR(net.layers()[0].weight(0, 0), -0.01, 1e-9);
  EXPECT_NEAR(net.layers()[0].weight(0, 1), 0.01, 1e-9);
  EXPECT_EQ(net.layers()[0].bias(0), 0.0);
}

TEST(Adam, FrozenLayersStayFixed) {
  auto net = random_net({4, 5, 3}, 2);
  const auto before = net.layers()[0].weight;
  Adam adam(net);
  Rng rng(1);
  const Matrix x = random_matrix(8, 4, rng);
  std::vector<std::size_t> y = {0, 1, 2, 0, 1, 2, 0, 1};
  TrainConfig cfg;
  for (int i = 0; i < 5; ++i) train_step(net, adam, x, y, cfg, 1);
  EXPECT_EQ(net.layers()[0].weight, before);
}

TEST(Training, LossDecreasesOnSeparableData) {
  Rng rng(3);
  Matrix x(200, 2);
  std::vector<std::size_t> y(200);
  for (int i = 0; i < 200; ++i) {
    y[i] = static_cast<std::size_t>(i % 2);
    x(i, 0) = (y[i] ? 2.0 : -2.0) + 0.3 * rng.normal();
    x(i, 1) = rng.normal();
  }
  auto net = init_mlp({2, 8, 2}, 1);
  Adam adam(net);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  const double first = train_step(net, adam, x, y, cfg);
  double last = first;
  for (int i = 0; i < 100; ++i) last = train_step(net, adam, x, y, cfg);
  EXPECT_LT(last, 0.1 * first);
  const auto pred = argmax_rows(net.forward_batch(x));
  std::size_t correct = 0;
  for (int i = 0; i < 200; ++i) correct += pred[i] == y[i];
  EXPECT_GE(correct, 198u);
}

TEST(Training, NonFiniteLossIsReported) {
  auto net = init_mlp({2, 2}, 1);
  net.layers()[0].weight(0, 0) = std::numeric_limits<double>::infinity();
  Adam adam(net);
  Matrix x = Matrix::Ones(2, 2);
  std::vector<std::size_t> y = {0, 1};
  try {
    train_step(net, adam, x, y, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
}

TEST(Training, L2PenaltyEntersObjectiveAndGradient) {
  auto net = random_net({3, 2}, 4);
  Rng rng(5);
  const Matrix x = random_matrix(4, 3, rng);
  std::vector<std::size_t> y = {0, 1, 1, 0};
  TrainConfig cfg;
  cfg.l2_weight = 0.1;
  // gradient check of the full objective
  ForwardCache cache;
  net.forward_cached(x, cache);
  const auto ce = cross_entropy_batch(cache.output(), y);
  auto g = net.backward(cache, ce.grad);
  add_l2_gradient(net, g, cfg.l2_weight);
  const auto report = compare_gradients(
      net, g,
      [&](const DenseNet& n) { return cross_entropy_batch(n.forward_batch(x), y).loss + 0.1 * l2_penalty(n); }, 1e-5);
  EXPECT_LT(report.max_relative_error, 1e-5);
  Adam adam(net);
  EXPECT_NEAR(train_step(net, adam, x, y, cfg), ce.loss + 0.1 * l2_penalty(random_net({3, 2}, 4)), 1e-12);
}

TEST(Training, ConfigValidation) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.learning_rate = -1;
  EXPECT_THROW(cfg.validate(), Error);
}
