#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "epcplan/errors.hpp"
#include "epcplan/nn/dense_net.hpp"

namespace epcplan {

/// Little-endian byte sink for checkpoints.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { buf_.append(s); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  void f64s(const std::vector<double>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) f64(x);
  }

  /// Layer count, dimension list, activations, then each layer's weights
  /// (row-major) followed by its bias.
  void net(const nn::DenseNet& n) {
    u32(static_cast<std::uint32_t>(n.layer_count()));
    for (auto d : n.dims()) u32(static_cast<std::uint32_t>(d));
    for (const auto& l : n.layers()) u8(static_cast<std::uint8_t>(l.activation));
    for (const auto& l : n.layers()) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) f64(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) f64(l.bias(r));
    }
  }

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(raw(u32())); }
  std::vector<double> f64s() {
    const auto n = u32();
    need(static_cast<std::size_t>(n) * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }

  nn::DenseNet net() {
    const auto layers = u32();
    if (layers == 0 || layers > 64) throw Error(ErrorCode::BadCheckpoint, "implausible layer count");
    std::vector<std::size_t> dims(layers + 1);
    for (auto& d : dims) {
      d = u32();
      if (d == 0 || d > (1u << 20)) throw Error(ErrorCode::BadCheckpoint, "implausible layer size");
    }
    std::vector<nn::Layer> out;
    std::vector<nn::Activation> acts(layers);
    for (auto& a : acts) {
      const auto v = u8();
      if (v > 1) throw Error(ErrorCode::BadCheckpoint, "unknown activation");
      a = static_cast<nn::Activation>(v);
    }
    for (std::size_t l = 0; l < layers; ++l) {
      const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
      const auto cols = static_cast<Eigen::Index>(dims[l]);
      need(static_cast<std::size_t>(rows * cols + rows) * 8);
      nn::Layer layer{nn::Matrix(rows, cols), nn::Vector(rows), acts[l]};
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = f64();
      for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = f64();
      out.push_back(std::move(layer));
    }
    nn::DenseNet n(std::move(out));
    if (!n.all_finite()) throw Error(ErrorCode::BadCheckpoint, "non-finite parameters");
    return n;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::BadCheckpoint, "truncated checkpoint");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace epcplan
