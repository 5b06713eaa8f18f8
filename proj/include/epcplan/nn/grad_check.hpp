#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "epcplan/errors.hpp"
#include "epcplan/nn/dense_net.hpp"
#include "epcplan/nn/loss.hpp"

namespace epcplan::nn {

/// |a - n| / max(|a|, |n|, 1e-6); the floor keeps near-zero gradients from
/// reporting round-off as relative error.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

struct TensorCheck {
  std::size_t layer = 0;
  bool is_bias = false;
  std::size_t entries = 0;
  double max_relative_error = 0.0;
};

struct GradReport {
  double max_relative_error = 0.0;
  std::vector<TensorCheck> tensors;  // weight, bias per layer
};

/// On/off state of every hidden ReLU unit for every row of `batches`. The
/// loss is smooth in the parameters wherever this pattern stays fixed.
using ReluPattern = std::vector<bool>;

inline ReluPattern relu_pattern(const DenseNet& net, std::initializer_list<const Matrix*> batches) {
  ReluPattern out;
  for (const Matrix* x : batches) {
    Matrix a = *x;
    for (const auto& l : net.layers()) {
      Matrix z = a * l.weight.transpose();
      z.rowwise() += l.bias.transpose();
      if (l.activation != Activation::Relu) {
        a = std::move(z);
        continue;
      }
      for (Eigen::Index i = 0; i < z.size(); ++i) out.push_back(z.data()[i] > 0.0);
      a = z.cwiseMax(0.0);
    }
  }
  return out;
}

/// Compares backprop against fourth-order central differences of
/// `loss(net)` on every parameter. `analytic` must be the gradient of that
/// same loss. With `pattern`, a step whose stencil would cross a ReLU kink is
/// cut tenfold (down to eps / 1000) until the stencil is kink-free.
inline GradReport compare_gradients(DenseNet& net, const Gradients& analytic,
                                    const std::function<long double(const DenseNet&)>& loss, double eps,
                                    const std::function<ReluPattern(const DenseNet&)>& pattern = {}) {
  if (!(eps > 0.0 && eps <= 1e-3)) throw Error(ErrorCode::InvalidArgument, "eps must be in (0, 1e-3]");
  GradReport report;
  auto probe = [&](double& param, double grad) {
    const double saved = param;
    auto at = [&](double offset) {
      param = saved + offset;
      return loss(net);
    };
    auto smooth_over = [&](double h) {
      if (!pattern) return true;
      param = saved;
      const auto base = pattern(net);
      for (double offset : {-2 * h, -h, h, 2 * h}) {
        param = saved + offset;
        if (pattern(net) != base) return false;
      }
      return true;
    };
    double h = eps;
    while (h > eps * 1.5e-3 && !smooth_over(h)) h *= 0.1;
    const long double numeric = (8.0L * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0L * h);
    param = saved;
    return relative_error(grad, static_cast<double>(numeric));
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& layer = net.layers()[l];
    TensorCheck w{l, false, static_cast<std::size_t>(layer.weight.size()), 0.0};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        w.max_relative_error =
            std::max(w.max_relative_error, probe(layer.weight(r, c), analytic.weight[l](r, c)));
    TensorCheck b{l, true, static_cast<std::size_t>(layer.bias.size()), 0.0};
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      b.max_relative_error = std::max(b.max_relative_error, probe(layer.bias(r), analytic.bias[l](r)));
    report.max_relative_error = std::max({report.max_relative_error, w.max_relative_error, b.max_relative_error});
    report.tensors.push_back(w);
    report.tensors.push_back(b);
  }
  return report;
}

/// Cross-entropy in extended precision. A saturated softmax has a loss far
/// larger than its gradient, and double differences of it are round-off.
inline long double cross_entropy_extended(const Vector& logits, std::size_t label) {
  const long double m = logits.maxCoeff();
  long double sum = 0.0L;
  for (Eigen::Index k = 0; k < logits.size(); ++k) sum += std::exp(static_cast<long double>(logits(k)) - m);
  return std::log(sum) + m - static_cast<long double>(logits(static_cast<Eigen::Index>(label)));
}

/// Cross-entropy gradient check for one labelled sample.
inline GradReport grad_check(const DenseNet& net, std::span<const double> x, std::size_t label,
                             double eps = 1e-4) {
  DenseNet probe_net = net;
  Matrix row = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  ForwardCache cache;
  probe_net.forward_cached(row, cache);
  const auto ce = cross_entropy_batch(cache.output(), std::span<const std::size_t>(&label, 1));
  const Gradients analytic = probe_net.backward(cache, ce.grad);
  auto loss = [&](const DenseNet& n) {
    return cross_entropy_extended(n.forward(x), label);
  };
  return compare_gradients(probe_net, analytic, loss, eps,
                           [&](const DenseNet& n) { return relu_pattern(n, {&row}); });
}

/// InfoNCE over cosine similarities in extended precision, same definition
/// as `info_nce`.
inline long double info_nce_extended(const Matrix& anchors, const Matrix& views, double temperature) {
  using Ext = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  auto unit_rows = [](const Matrix& m) {
    Ext u = m.cast<long double>();
    for (Eigen::Index i = 0; i < u.rows(); ++i) u.row(i) /= std::max(u.row(i).norm(), 1e-12L);
    return u;
  };
  const Ext s = (unit_rows(anchors) * unit_rows(views).transpose()) / static_cast<long double>(temperature);
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const long double m = s.row(i).maxCoeff();
    long double sum = 0.0L;
    for (Eigen::Index j = 0; j < s.cols(); ++j) sum += std::exp(s(i, j) - m);
    total += m + std::log(sum) - s(i, i);
  }
  return total / static_cast<long double>(s.rows());
}

/// InfoNCE gradient check for an encoder over a batch of row pairs.
inline GradReport info_nce_grad_check(const DenseNet& net, const Matrix& original, const Matrix& corrupted,
                                      double temperature, double eps = 1e-4) {
  DenseNet probe_net = net;
  const auto analytic = info_nce_net(probe_net, original, corrupted, temperature);
  auto loss = [&](const DenseNet& n) {
    return info_nce_extended(n.forward_batch(original), n.forward_batch(corrupted), temperature);
  };
  return compare_gradients(probe_net, analytic.grad, loss, eps,
                           [&](const DenseNet& n) { return relu_pattern(n, {&original, &corrupted}); });
}

}  // namespace epcplan::nn
