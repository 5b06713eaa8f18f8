#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>

#include "epcplan/binary_io.hpp"
#include "epcplan/classifiers.hpp"
#include "epcplan/encoder.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/model.hpp"
#include "epcplan/record_file.hpp"
#include "epcplan/scarf.hpp"
#include "epcplan/schema.hpp"
#include "epcplan/trees.hpp"

namespace epcplan {

// Container layout (all integers and doubles little-endian):
//
//   "LLEM1"  u32 format_version  u64 schema_hash  str section_tag
//   u32 metadata_count  { str key  str value }*
//   f64s encoder_means  f64s encoder_scales      (indexed by schema feature)
//   payload (depends on section_tag)
//
// Network payloads write u32 layer_count, the dimension list, activations
// and then row-major weights plus bias per layer.
inline constexpr std::string_view kCheckpointMagic = "LLEM1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

using Metadata = std::map<std::string, std::string>;

namespace detail {

inline void write_header(BinaryWriter& out, const Encoder& enc, std::string_view tag, const Metadata& meta) {
  out.raw(kCheckpointMagic);
  out.u32(kCheckpointVersion);
  out.u64(enc.schema().hash());
  out.str(tag);
  out.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    out.str(k);
    out.str(v);
  }
  out.f64s(enc.means());
  out.f64s(enc.scales());
}

struct Header {
  std::string tag;
  Metadata metadata;
  Encoder encoder;
};

inline Header read_header(BinaryReader& in, const FeatureSchema& schema) {
  if (in.raw(kCheckpointMagic.size()) != kCheckpointMagic)
    throw Error(ErrorCode::BadCheckpoint, "bad magic; not an LLEM1 checkpoint");
  const auto version = in.u32();
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::BadCheckpoint, "unsupported format version " + std::to_string(version));
  const auto hash = in.u64();
  if (hash != schema.hash())
    throw Error(ErrorCode::SchemaMismatch, "checkpoint was written for a different feature schema");
  Header h;
  h.tag = in.str();
  const auto count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto k = in.str();
    h.metadata[k] = in.str();
  }
  auto means = in.f64s();
  auto scales = in.f64s();
  h.encoder = Encoder::from_statistics(schema, std::move(means), std::move(scales));
  return h;
}

inline NetClassifier read_net_classifier(BinaryReader& in, const Encoder& enc) {
  NetClassifier c;
  c.encoder_layers = in.u32();
  c.net = in.net();
  if (c.net.input_dim() != enc.encoded_dim()) throw Error(ErrorCode::BadCheckpoint, "net input dim mismatch");
  if (c.encoder_layers > c.net.layer_count()) throw Error(ErrorCode::BadCheckpoint, "encoder layer count");
  return c;
}

}  // namespace detail

inline std::string serialize_model(const RatingModel& model, const Metadata& meta = {}) {
  BinaryWriter out;
  detail::write_header(out, model.encoder(), model.kind(), meta);
  model.write_payload(out);
  return out.bytes();
}

struct LoadedModel {
  std::shared_ptr<const RatingModel> model;
  Metadata metadata;
};

inline LoadedModel deserialize_model(std::string_view bytes, const FeatureSchema& schema) {
  BinaryReader in(bytes);
  auto h = detail::read_header(in, schema);
  const std::size_t dim = h.encoder.encoded_dim();
  LoadedModel out;
  out.metadata = h.metadata;
  if (h.tag == "mlp" || h.tag == "scarf") {
    auto c = detail::read_net_classifier(in, h.encoder);
    out.model = std::make_shared<FlatNetModel>(h.tag, h.encoder, std::move(c));
  } else if (h.tag == "c2f_mlp" || h.tag == "c2f_scarf") {
    auto coarse = detail::read_net_classifier(in, h.encoder);
    std::array<NetClassifier, kCoarseCount> fine;
    for (auto& f : fine) f = detail::read_net_classifier(in, h.encoder);
    out.model = std::make_shared<HierarchicalModel>(h.tag, h.encoder, std::move(coarse), std::move(fine));
  } else if (h.tag == "decision_tree") {
    out.model = std::make_shared<trees::DecisionTreeModel>(h.encoder, trees::detail::read_tree(in, dim));
  } else if (h.tag == "random_forest") {
    const auto per_split = in.u32();
    const auto count = in.u32();
    std::vector<trees::Tree> ts;
    std::vector<std::uint64_t> seeds;
    for (std::uint32_t i = 0; i < count; ++i) {
      seeds.push_back(in.u64());
      ts.push_back(trees::detail::read_tree(in, dim));
    }
    out.model = std::make_shared<trees::ForestModel>(h.encoder, std::move(ts), std::move(seeds), per_split);
  } else if (h.tag == "gbt") {
    const double shrinkage = in.f64();
    auto initial = in.f64s();
    if (initial.size() != kRatingCount) throw Error(ErrorCode::BadCheckpoint, "gbt initial scores");
    const auto rounds = in.u32();
    std::vector<std::vector<trees::Tree>> rs(rounds);
    for (auto& r : rs)
      for (std::size_t k = 0; k < kRatingCount; ++k) r.push_back(trees::detail::read_tree(in, dim));
    out.model = std::make_shared<trees::GbtModel>(h.encoder, std::move(initial), std::move(rs), shrinkage);
  } else {
    throw Error(ErrorCode::BadCheckpoint, "unknown or non-classifier section tag '" + h.tag + "'");
  }
  if (!in.at_end()) throw Error(ErrorCode::BadCheckpoint, "trailing bytes after payload");
  return out;
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void save_model(const std::string& path, const RatingModel& model, const Metadata& meta = {}) {
  write_file(path, serialize_model(model, meta));
}

inline LoadedModel load_model(const std::string& path, const FeatureSchema& schema) {
  return deserialize_model(read_text_file(path), schema);
}

/// Encoder-only artifact of SCARF pre-training (section tag "scarf_encoder").
inline std::string serialize_scarf_encoder(const scarf::ScarfEncoder& pre, const Encoder& enc,
                                           const Metadata& meta = {}) {
  BinaryWriter out;
  detail::write_header(out, enc, "scarf_encoder", meta);
  out.u32(static_cast<std::uint32_t>(pre.epochs));
  out.f64(pre.temperature);
  out.f64(pre.final_loss);
  out.f64s(pre.epoch_losses);
  out.net(pre.f);
  return out.bytes();
}

struct LoadedScarfEncoder {
  scarf::ScarfEncoder encoder_net;
  Encoder feature_encoder;
};

inline LoadedScarfEncoder deserialize_scarf_encoder(std::string_view bytes, const FeatureSchema& schema) {
  BinaryReader in(bytes);
  auto h = detail::read_header(in, schema);
  if (h.tag != "scarf_encoder") throw Error(ErrorCode::BadCheckpoint, "expected a scarf_encoder section");
  LoadedScarfEncoder out;
  out.feature_encoder = h.encoder;
  out.encoder_net.epochs = in.u32();
  out.encoder_net.temperature = in.f64();
  out.encoder_net.final_loss = in.f64();
  out.encoder_net.epoch_losses = in.f64s();
  out.encoder_net.f = in.net();
  if (!in.at_end()) throw Error(ErrorCode::BadCheckpoint, "trailing bytes after payload");
  return out;
}


}  // namespace epcplan
