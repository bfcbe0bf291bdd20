#include "emorec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

namespace emorec {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'E', 'M', 'O', 'R', 'C', 'K', 'P', 'T'};

uint64_t fnv1a_bytes(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void put_u32(std::string& out, uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) {
  uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  uint32_t u32() { return static_cast<uint32_t>(u(4)); }
  uint64_t u64() { return u(8); }
  double f64() {
    const uint64_t bits = u64();
    double x;
    std::memcpy(&x, &bits, sizeof x);
    return x;
  }
  std::string str(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& bytes() const { return bytes_; }

 private:
  uint64_t u(int n) {
    need(static_cast<size_t>(n));
    uint64_t x = 0;
    for (int i = 0; i < n; ++i) {
      x |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<size_t>(i)]))
           << (8 * i);
    }
    pos_ += static_cast<size_t>(n);
    return x;
  }
  void need(size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw IntegrityError("checkpoint truncated");
    }
  }

  std::string bytes_;
  size_t pos_ = 0;
};

json taxonomy_to_json(const LabelTaxonomy& t) {
  json names = json::array();
  for (const auto& l : t.labels()) names.push_back(l.name);
  return names;
}

}  // namespace

std::string pipeline_config_to_json(const PipelineConfig& c) {
  json j;
  j["taxonomy"] = taxonomy_to_json(c.taxonomy);
  json active = json::array();
  for (Modality m : c.active) active.push_back(to_string(m));
  j["active"] = std::move(active);
  j["seed"] = c.seed;
  j["fusion_hidden"] = c.fusion_hidden;
  j["face"] = {{"in_channels", c.face.in_channels},
               {"height", c.face.height},
               {"width", c.face.width},
               {"cnn_channels", c.face.cnn_channels},
               {"encoder_channels", c.face.encoder_channels},
               {"fusion_channels", c.face.fusion_channels},
               {"feature_dim", c.face.feature_dim},
               {"head_hidden", c.face.head_hidden}};
  j["posture"] = {{"channels", c.posture.channels},
                  {"height", c.posture.height},
                  {"width", c.posture.width},
                  {"conv_channels", c.posture.conv_channels},
                  {"deep_dim", c.posture.deep_dim},
                  {"head_hidden", c.posture.head_hidden}};
  j["gait"] = {{"channels", c.gait.channels},
               {"height", c.gait.height},
               {"width", c.gait.width},
               {"frames", c.gait.frames},
               {"conv_channels", c.gait.conv_channels},
               {"cnn_feature_dim", c.gait.cnn_feature_dim},
               {"lstm_frame_size", c.gait.lstm_frame_size},
               {"lstm_hidden", c.gait.lstm_hidden},
               {"lstm_layers", c.gait.lstm_layers},
               {"head_hidden", c.gait.head_hidden}};
  j["context"] = {{"channels", c.context.channels},
                  {"height", c.context.height},
                  {"width", c.context.width},
                  {"conv_channels", c.context.conv_channels},
                  {"feature_dim", c.context.feature_dim},
                  {"head_hidden", c.context.head_hidden}};
  return j.dump();
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("pipeline config: ") + e.what());
  }
  try {
    PipelineConfig c;
    c.taxonomy = LabelTaxonomy(j.at("taxonomy").get<std::vector<std::string>>());
    c.active.clear();
    for (const auto& name : j.at("active")) {
      c.active.push_back(modality_from_string(name.get<std::string>()));
    }
    c.seed = j.value("seed", static_cast<uint64_t>(7));
    c.fusion_hidden = j.value("fusion_hidden", 64);
    if (j.contains("face")) {
      const auto& f = j.at("face");
      c.face.in_channels = f.value("in_channels", 1);
      c.face.height = f.value("height", 48);
      c.face.width = f.value("width", 48);
      c.face.cnn_channels = f.value("cnn_channels", c.face.cnn_channels);
      c.face.encoder_channels = f.value("encoder_channels", c.face.encoder_channels);
      c.face.fusion_channels = f.value("fusion_channels", c.face.fusion_channels);
      c.face.feature_dim = f.value("feature_dim", 256);
      c.face.head_hidden = f.value("head_hidden", 128);
    }
    if (j.contains("posture")) {
      const auto& p = j.at("posture");
      c.posture.channels = p.value("channels", 3);
      c.posture.height = p.value("height", 96);
      c.posture.width = p.value("width", 96);
      c.posture.conv_channels = p.value("conv_channels", c.posture.conv_channels);
      c.posture.deep_dim = p.value("deep_dim", 100);
      c.posture.head_hidden = p.value("head_hidden", 64);
    }
    if (j.contains("gait")) {
      const auto& g = j.at("gait");
      c.gait.channels = g.value("channels", 3);
      c.gait.height = g.value("height", 112);
      c.gait.width = g.value("width", 112);
      c.gait.frames = g.value("frames", 16);
      c.gait.conv_channels = g.value("conv_channels", c.gait.conv_channels);
      c.gait.cnn_feature_dim = g.value("cnn_feature_dim", 256);
      c.gait.lstm_frame_size = g.value("lstm_frame_size", 32);
      c.gait.lstm_hidden = g.value("lstm_hidden", 128);
      c.gait.lstm_layers = g.value("lstm_layers", 4);
      c.gait.head_hidden = g.value("head_hidden", 64);
    }
    if (j.contains("context")) {
      const auto& b = j.at("context");
      c.context.channels = b.value("channels", 3);
      c.context.height = b.value("height", 96);
      c.context.width = b.value("width", 96);
      c.context.conv_channels = b.value("conv_channels", c.context.conv_channels);
      c.context.feature_dim = b.value("feature_dim", 128);
      c.context.head_hidden = b.value("head_hidden", 64);
    }
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("pipeline config: ") + e.what());
  }
}

void save_checkpoint(const Pipeline& pipeline, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);

  const std::string config = pipeline_config_to_json(pipeline.config());
  put_u64(out, config.size());
  out += config;

  const auto params = pipeline.parameters();
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u32(out, static_cast<uint32_t>(p.name.size()));
    out += p.name;
    const auto& t = p.node->value;
    put_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int e : t.shape) put_u32(out, static_cast<uint32_t>(e));
    put_u64(out, t.v.size());
    for (double x : t.v) put_f64(out, x);
  }
  put_u64(out, fnv1a_bytes(out));

  std::ofstream file(path, std::ios::binary);
  if (!file) throw ParseError("cannot write checkpoint '" + path + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IntegrityError("failed writing checkpoint '" + path + "'");
}

Pipeline load_checkpoint(const std::string& path,
                         const std::optional<LabelTaxonomy>& expected_taxonomy) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ParseError("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(file)),
                    std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof kMagic + 12) {
    throw IntegrityError("checkpoint truncated");
  }
  const std::string body = bytes.substr(0, bytes.size() - 8);
  Reader tail(bytes.substr(bytes.size() - 8));
  if (tail.u64() != fnv1a_bytes(body)) {
    throw IntegrityError("checkpoint hash mismatch (corrupt or truncated)");
  }

  Reader r(body);
  if (r.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw IntegrityError("not a checkpoint file");
  }
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " +
                       std::to_string(version));
  }

  const uint64_t config_len = r.u64();
  const PipelineConfig config = pipeline_config_from_json(
      r.str(static_cast<size_t>(config_len)));
  if (expected_taxonomy && !(config.taxonomy == *expected_taxonomy)) {
    throw TaxonomyError("checkpoint was trained on a different taxonomy");
  }

  Pipeline pipeline(config);
  std::map<std::string, nn::NodeRef> by_name;
  for (const auto& p : pipeline.parameters()) by_name[p.name] = p.node;

  const uint32_t param_count = r.u32();
  size_t restored = 0;
  for (uint32_t i = 0; i < param_count; ++i) {
    const uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    const uint32_t ndim = r.u32();
    std::vector<int> shape;
    for (uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(r.u32()));
    const uint64_t count = r.u64();
    std::vector<double> values(static_cast<size_t>(count));
    for (auto& x : values) x = r.f64();

    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw IntegrityError("checkpoint parameter '" + name +
                           "' does not exist in the rebuilt pipeline");
    }
    nn::Tensor& t = it->second->value;
    if (t.shape != shape || t.v.size() != values.size()) {
      throw IntegrityError("checkpoint parameter '" + name + "' has shape " +
                           nn::shape_string(shape) + ", expected " +
                           nn::shape_string(t.shape));
    }
    t.v = std::move(values);
    ++restored;
  }
  if (restored != by_name.size()) {
    throw IntegrityError("checkpoint restored " + std::to_string(restored) +
                         " of " + std::to_string(by_name.size()) +
                         " parameters");
  }
  return pipeline;
}

}  // namespace emorec
