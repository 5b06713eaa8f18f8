#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "epcplan/errors.hpp"
#include "epcplan/nn/dense_net.hpp"

namespace epcplan::nn {

/// Max-subtracted softmax.
inline Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    auto e = (logits.row(r).array() - m).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;
};

/// -log softmax(logits)[label]; gradient softmax - onehot.
inline LossAndGrad cross_entropy(const Vector& logits, std::size_t label) {
  if (label >= static_cast<std::size_t>(logits.size()))
    throw Error(ErrorCode::InvalidArgument, "label out of range");
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  LossAndGrad out;
  out.loss = lse - logits(static_cast<Eigen::Index>(label));
  out.grad = (logits.array() - lse).exp().matrix();
  out.grad(static_cast<Eigen::Index>(label)) -= 1.0;
  return out;
}

struct BatchLoss {
  double loss = 0.0;   // mean over rows
  Matrix grad;         // d(mean loss)/d(logits)
};

inline BatchLoss cross_entropy_batch(const Matrix& logits, std::span<const std::size_t> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size())
    throw Error(ErrorCode::DimMismatch, "labels/logits row mismatch");
  const auto n = static_cast<double>(labels.size());
  BatchLoss out{0.0, Matrix(logits.rows(), logits.cols())};
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto label = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(r)]);
    if (label >= logits.cols()) throw Error(ErrorCode::InvalidArgument, "label out of range");
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    total += lse - logits(r, label);
    out.grad.row(r) = ((logits.row(r).array() - lse).exp() / n).matrix();
    out.grad(r, label) -= 1.0 / n;
  }
  out.loss = total / n;
  return out;
}

/// InfoNCE over in-batch pairs with cosine similarity:
///   L = (1/N) sum_i -log( exp(s_ii / t) / sum_j exp(s_ij / t) ),
///   s_ij = cos(anchor_i, view_j).
struct InfoNceResult {
  double loss = 0.0;
  Matrix anchor_grad;
  Matrix view_grad;
};

inline InfoNceResult info_nce(const Matrix& anchors, const Matrix& views, double temperature) {
  const Eigen::Index n = anchors.rows();
  if (n < 2 || views.rows() != n)
    throw Error(ErrorCode::DegenerateBatch, "InfoNCE needs >= 2 matched pairs");
  if (anchors.cols() != views.cols()) throw Error(ErrorCode::DimMismatch, "representation widths differ");
  if (!(temperature > 0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  constexpr double kTiny = 1e-12;

  Vector anchor_norm = anchors.rowwise().norm().cwiseMax(kTiny);
  Vector view_norm = views.rowwise().norm().cwiseMax(kTiny);
  Matrix u = anchor_norm.cwiseInverse().asDiagonal() * anchors;
  Matrix v = view_norm.cwiseInverse().asDiagonal() * views;
  Matrix s = (u * v.transpose()) / temperature;

  InfoNceResult out;
  Matrix ds(n, n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = s.row(i).maxCoeff();
    const double lse = m + std::log((s.row(i).array() - m).exp().sum());
    total += lse - s(i, i);
    ds.row(i) = (s.row(i).array() - lse).exp().matrix();
    ds(i, i) -= 1.0;
  }
  const double nd = static_cast<double>(n);
  out.loss = total / nd;
  ds /= (nd * temperature);

  Matrix du = ds * v;
  Matrix dv = ds.transpose() * u;
  // Through l2 normalization: dz = (du - u (u . du)) / |z|.
  out.anchor_grad.resize(n, anchors.cols());
  out.view_grad.resize(n, views.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.anchor_grad.row(i) = (du.row(i) - u.row(i) * u.row(i).dot(du.row(i))) / anchor_norm(i);
    out.view_grad.row(i) = (dv.row(i) - v.row(i) * v.row(i).dot(dv.row(i))) / view_norm(i);
  }
  return out;
}

struct NetLoss {
  double loss = 0.0;
  Gradients grad;
};

/// InfoNCE of f(original) against f(corrupted) with parameter gradients
/// summed over both passes.
inline NetLoss info_nce_net(const DenseNet& f, const Matrix& original, const Matrix& corrupted,
                            double temperature) {
  ForwardCache a, b;
  f.forward_cached(original, a);
  f.forward_cached(corrupted, b);
  const auto nce = info_nce(a.output(), b.output(), temperature);
  NetLoss out{nce.loss, f.backward(a, nce.anchor_grad)};
  out.grad += f.backward(b, nce.view_grad);
  return out;
}

}  // namespace epcplan::nn
