#pragma once

#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowhawk/errors.hpp"
#include "flowhawk/nn/network.hpp"

namespace flowhawk::nn {

struct ModelMeta {
  double vacc = 0.0;
  double vp = 0.0;
  std::vector<std::string> class_labels;
  std::string schema_hash;
  uint64_t seed = 0;
};

namespace detail {

inline constexpr char kModelMagic[8] = {'F', 'H', 'M', 'O', 'D', 'E', 'L', '1'};

inline std::string block_kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::kPlain: return "plain";
    case BlockKind::kResA: return "res_a";
    case BlockKind::kResB: return "res_b";
    case BlockKind::kDense: return "dense";
  }
  return "plain";
}

inline BlockKind block_kind_of(const std::string& s) {
  if (s == "plain") return BlockKind::kPlain;
  if (s == "res_a") return BlockKind::kResA;
  if (s == "res_b") return BlockKind::kResB;
  if (s == "dense") return BlockKind::kDense;
  throw FormatError("model file: unknown block kind '" + s + "'");
}

inline nlohmann::json spec_to_json(const SubnetSpec& spec) {
  nlohmann::json j;
  j["variant"] = std::string(1, spec.variant);
  j["classes"] = spec.classes;
  j["feature_count"] = spec.feature_count;
  j["input_channels"] = spec.input_channels;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : spec.blocks) {
    nlohmann::json jb;
    jb["kind"] = block_kind_name(b.kind);
    jb["filters"] = b.filters;
    jb["units"] = b.units;
    jb["kernel"] = b.kernel;
    jb["pool"] = b.pool;
    jb["dropout_rate"] = b.dropout_rate;
    jb["inner_plain_count"] = b.inner_plain_count;
    jb["downsample"] = b.downsample;
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  return j;
}

inline SubnetSpec spec_from_json(const nlohmann::json& j) {
  SubnetSpec spec;
  spec.variant = j.at("variant").get<std::string>().at(0);
  spec.classes = j.at("classes").get<int>();
  spec.feature_count = j.at("feature_count").get<int>();
  spec.input_channels = j.at("input_channels").get<int>();
  for (const auto& jb : j.at("blocks")) {
    BlockSpec b;
    b.kind = block_kind_of(jb.at("kind").get<std::string>());
    b.filters = jb.at("filters").get<int>();
    b.units = jb.at("units").get<int>();
    b.kernel = jb.at("kernel").get<int>();
    b.pool = jb.at("pool").get<int>();
    b.dropout_rate = jb.at("dropout_rate").get<double>();
    b.inner_plain_count = jb.at("inner_plain_count").get<int>();
    b.downsample = jb.at("downsample").get<bool>();
    spec.blocks.push_back(b);
  }
  return spec;
}

template <typename Scalar>
std::vector<ParamRef<Scalar>> all_tensors(Network<Scalar>& net) {
  std::vector<ParamRef<Scalar>> tensors = net.params();
  auto state = net.state();
  tensors.insert(tensors.end(), state.begin(), state.end());
  return tensors;
}

}  // namespace detail

/// Container layout: magic, little-endian u32 JSON-header length, JSON header
/// (topology, VACC/VP, class ordering, schema hash, tensor manifest), then the
/// tensors as little-endian IEEE-754 doubles in column-major order.
template <typename Scalar>
void save_model(const std::string& path, Network<Scalar>& net, const ModelMeta& meta) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["spec"] = detail::spec_to_json(net.spec());
  header["vacc"] = meta.vacc;
  header["vp"] = meta.vp;
  header["class_labels"] = meta.class_labels;
  header["schema_hash"] = meta.schema_hash;
  header["seed"] = meta.seed;

  auto tensors = detail::all_tensors(net);
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& t : tensors) {
    nlohmann::json jt;
    jt["name"] = t.name;
    jt["rows"] = t.value->rows();
    jt["cols"] = t.value->cols();
    manifest.push_back(std::move(jt));
  }
  header["tensors"] = std::move(manifest);

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file: " + path);
  out.write(detail::kModelMagic, sizeof(detail::kModelMagic));
  const uint32_t len = static_cast<uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& t : tensors) {
    const Mat<double> m = t.value->template cast<double>();
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  }
  if (!out) throw DataError("model write failed: " + path);
}

template <typename Scalar>
struct LoadedModel {
  std::unique_ptr<Network<Scalar>> net;
  ModelMeta meta;
};

template <typename Scalar>
LoadedModel<Scalar> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kModelMagic, 8) != 0)
    throw FormatError("not a model file: " + path);
  uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string header_text(len, '\0');
  in.read(header_text.data(), len);
  if (!in) throw FormatError("truncated model header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model header is not valid JSON: " + std::string(e.what()));
  }
  if (header.value("format_version", 0) != 1)
    throw FormatError("unsupported model format version in " + path);

  LoadedModel<Scalar> loaded;
  loaded.meta.vacc = header.at("vacc").get<double>();
  loaded.meta.vp = header.at("vp").get<double>();
  loaded.meta.class_labels = header.at("class_labels").get<std::vector<std::string>>();
  loaded.meta.schema_hash = header.at("schema_hash").get<std::string>();
  loaded.meta.seed = header.at("seed").get<uint64_t>();
  loaded.net =
      std::make_unique<Network<Scalar>>(detail::spec_from_json(header.at("spec")), loaded.meta.seed);

  auto tensors = detail::all_tensors(*loaded.net);
  const auto& manifest = header.at("tensors");
  if (manifest.size() != tensors.size())
    throw FormatError("model tensor count mismatch in " + path);
  for (size_t i = 0; i < tensors.size(); ++i) {
    const auto& jt = manifest[i];
    if (jt.at("name").get<std::string>() != tensors[i].name ||
        jt.at("rows").get<Eigen::Index>() != tensors[i].value->rows() ||
        jt.at("cols").get<Eigen::Index>() != tensors[i].value->cols())
      throw FormatError("model tensor layout mismatch at '" + tensors[i].name + "' in " + path);
    Mat<double> m(tensors[i].value->rows(), tensors[i].value->cols());
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw FormatError("truncated model weights: " + path);
    *tensors[i].value = m.cast<Scalar>();
  }
  return loaded;
}

}  // namespace flowhawk::nn
