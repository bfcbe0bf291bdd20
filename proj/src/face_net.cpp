#include "emorec/face_net.hpp"

#include "emorec/image_ops.hpp"

namespace emorec {

using nn::NodeRef;
using nn::Tensor;

FaceNetConfig FaceNetConfig::mini() {
  FaceNetConfig c;
  c.height = 16;
  c.width = 16;
  c.cnn_channels = {2, 3, 4};
  c.encoder_channels = {2, 3, 4, 5};
  c.fusion_channels = {4, 4};
  c.feature_dim = 16;
  c.head_hidden = 8;
  return c;
}

FaceNetConfig FaceNetConfig::mini_fer() {
  FaceNetConfig c;
  c.cnn_channels = {3, 4, 6};
  c.encoder_channels = {3, 4, 6, 8};
  c.fusion_channels = {6, 6};
  c.feature_dim = 24;
  c.head_hidden = 16;
  return c;
}

void FaceNetConfig::validate() const {
  if (in_channels != 1 && in_channels != 3) {
    throw ConfigError("face net input must have 1 or 3 channels");
  }
  if (height <= 0 || width <= 0 || feature_dim <= 0 || head_hidden <= 0) {
    throw ConfigError("face net extents must be positive");
  }
  if (cnn_channels.empty() || encoder_channels.empty() || fusion_channels.empty()) {
    throw ConfigError("face net channel plans must be nonempty");
  }
  int h = height, w = width;
  for (size_t i = 0; i < encoder_channels.size(); ++i) {
    if (h < 2 && w < 2) {
      throw ConfigError("face encoder pools exhaust the input resolution");
    }
    h = nn::pool_out_extent(h, 2, 2);
    w = nn::pool_out_extent(w, 2, 2);
  }
}

FaceNet::FaceNet(FaceNetConfig config, int classes, uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);

  int in_c = config_.in_channels;
  for (size_t i = 0; i < config_.cnn_channels.size(); ++i) {
    cnn_stream_.emplace_back("face.cnn" + std::to_string(i), in_c,
                             config_.cnn_channels[i], 3, rng);
    in_c = config_.cnn_channels[i];
  }

  in_c = config_.in_channels;
  for (size_t i = 0; i < config_.encoder_channels.size(); ++i) {
    encoder_.emplace_back("face.enc" + std::to_string(i), in_c,
                          config_.encoder_channels[i], 3, rng);
    in_c = config_.encoder_channels[i];
  }

  // Decoder stage i consumes the unpooled map concatenated with encoder
  // skip i and produces the channel count the next unpool expects; the last
  // stage emits the single-channel attention map.
  for (size_t i = config_.encoder_channels.size(); i-- > 0;) {
    const int skip_c = config_.encoder_channels[i];
    const int out_c = i > 0 ? config_.encoder_channels[i - 1] : 1;
    decoder_.emplace_back("face.dec" + std::to_string(i), skip_c + skip_c,
                          out_c, 3, rng);
  }

  // One unpool per encoder pool; walking the pre-pool sizes back up must
  // land on the resolution the stride-1 feature stream still carries.
  if (decoder_.size() != encoder_.size()) {
    throw ConfigError("face net: decoder must mirror every encoder pool");
  }
  std::vector<std::pair<int, int>> pre_pool_sizes;
  int h = config_.height, w = config_.width;
  for (size_t i = 0; i < config_.encoder_channels.size(); ++i) {
    pre_pool_sizes.emplace_back(h, w);
    h = nn::pool_out_extent(h, 2, 2);
    w = nn::pool_out_extent(w, 2, 2);
  }
  for (size_t i = pre_pool_sizes.size(); i-- > 0;) {
    h = pre_pool_sizes[i].first;
    w = pre_pool_sizes[i].second;
  }
  if (h != config_.height || w != config_.width) {
    throw ConfigError("face net: decoder does not reconstruct the gated "
                      "stream resolution");
  }

  in_c = config_.cnn_channels.back();
  int fh = config_.height, fw = config_.width;
  for (size_t i = 0; i < config_.fusion_channels.size(); ++i) {
    post_fusion_.emplace_back("face.fus" + std::to_string(i), in_c,
                              config_.fusion_channels[i], 3, rng);
    in_c = config_.fusion_channels[i];
    fh = nn::pool_out_extent(fh, 2, 2);
    fw = nn::pool_out_extent(fw, 2, 2);
  }
  const int flat = in_c * fh * fw;
  feature_fc_ = std::make_unique<nn::Dense>("face.feature_fc", flat,
                                            config_.feature_dim, rng);
  head_ = std::make_unique<nn::ClassifierHead>("face.head", config_.feature_dim,
                                               config_.head_hidden, classes, rng);
}

void FaceNet::check_input(const Tensor& t) const {
  const std::vector<int> want = {config_.in_channels, config_.height,
                                 config_.width};
  if (t.shape != want) {
    throw ShapeError("face input: expected " + nn::shape_string(want) +
                     ", got " + nn::shape_string(t.shape));
  }
}

FaceNet::Forward FaceNet::forward(
    const NodeRef& input, const std::optional<Tensor>& attention_override) const {
  check_input(input->value);

  // Feature stream: spatial size preserved by stride-1 pooling.
  NodeRef cnn = input;
  for (const auto& conv : cnn_stream_) {
    cnn = nn::maxpool2d(nn::relu(conv.apply(cnn)), 2, 1).out;
  }

  // Encoder with memorized pool indices and pre-pool skips.
  NodeRef enc = input;
  std::vector<NodeRef> skips;
  std::vector<std::shared_ptr<nn::PoolIndices>> pool_indices;
  for (const auto& conv : encoder_) {
    enc = nn::relu(conv.apply(enc));
    skips.push_back(enc);
    auto pooled = nn::maxpool2d(enc, 2, 2);
    enc = pooled.out;
    pool_indices.push_back(pooled.indices);
  }

  // Decoder: unpool to the memorized positions, concatenate the skip,
  // convolve; sigmoid on the final single-channel map.
  NodeRef dec = enc;
  for (size_t step = 0; step < decoder_.size(); ++step) {
    const size_t level = decoder_.size() - 1 - step;
    dec = nn::unpool2d(dec, pool_indices[level]);
    dec = nn::concat_channels(dec, skips[level]);
    dec = decoder_[step].apply(dec);
    dec = level == 0 ? nn::sigmoid(dec) : nn::relu(dec);
  }
  NodeRef attention = dec;
  if (attention_override) {
    if (attention_override->shape != attention->value.shape) {
      throw ShapeError("attention override: expected " +
                       nn::shape_string(attention->value.shape) + ", got " +
                       nn::shape_string(attention_override->shape));
    }
    attention = nn::constant(*attention_override);
  }

  NodeRef fused = nn::broadcast_mul(attention, cnn);

  NodeRef t = fused;
  for (const auto& conv : post_fusion_) {
    t = nn::maxpool2d(nn::relu(conv.apply(t)), 2, 2).out;
  }
  NodeRef features = feature_fc_->apply(nn::flatten(t));
  return {features, attention, cnn, fused};
}

ModalityFeatures FaceNet::features(const ImagePatch& face) const {
  auto fwd = forward(nn::constant(patch_to_tensor(face)));
  ModalityFeatures out{Modality::face, fwd.features->value.v};
  out.validate(config_.feature_dim);
  return out;
}

ImagePatch FaceNet::attention_map(const ImagePatch& face) const {
  auto fwd = forward(nn::constant(patch_to_tensor(face)));
  return tensor_to_patch(fwd.attention->value, PatchKind::full);
}

nn::NodeRef FaceNet::classify_node(const NodeRef& input) const {
  return head_->apply(forward(input).features);
}

EmotionDistribution FaceNet::classify(const ImagePatch& face,
                                      const LabelTaxonomy& taxonomy) const {
  if (taxonomy.k() != head_->classes()) {
    throw TaxonomyError("face head was built for k=" +
                        std::to_string(head_->classes()) + ", got k=" +
                        std::to_string(taxonomy.k()));
  }
  NodeRef probs = classify_node(nn::constant(patch_to_tensor(face)));
  return EmotionDistribution::validated(taxonomy, probs->value.v);
}

std::vector<nn::NamedParam> FaceNet::parameters() const {
  std::vector<nn::NamedParam> out;
  auto append = [&out](const std::vector<nn::NamedParam>& p) {
    out.insert(out.end(), p.begin(), p.end());
  };
  for (const auto& c : cnn_stream_) append(c.parameters());
  for (const auto& c : encoder_) append(c.parameters());
  for (const auto& c : decoder_) append(c.parameters());
  for (const auto& c : post_fusion_) append(c.parameters());
  append(feature_fc_->parameters());
  append(head_->parameters());
  return out;
}

}  // namespace emorec
