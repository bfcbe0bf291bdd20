#include "emorec/gait_net.hpp"

#include "emorec/image_ops.hpp"

namespace emorec {

using nn::NodeRef;

namespace {

// Pools follow convs 1, 2, 4, 6, 8 (1-based), C3D style.
constexpr int kConvCount = 8;
constexpr bool kPoolAfter[kConvCount] = {true, true, false, true,
                                         false, true, false, true};

}  // namespace

GaitNetConfig GaitNetConfig::mini() {
  GaitNetConfig c;
  c.channels = 1;
  c.height = 16;
  c.width = 16;
  c.conv_channels = {2, 2, 3, 3, 4, 4, 4, 4};
  c.cnn_feature_dim = 8;
  c.lstm_frame_size = 8;
  c.lstm_hidden = 8;
  c.head_hidden = 8;
  return c;
}

std::vector<int> GaitNetConfig::temporal_trace() const {
  std::vector<int> trace = {frames};
  int t = frames;
  for (int i = 0; i < kConvCount; ++i) {
    if (!kPoolAfter[i]) continue;
    const int kt = trace.size() == 1 ? 1 : 2;  // first pool keeps time
    t = nn::pool_out_extent(t, kt, kt);
    trace.push_back(t);
  }
  return trace;
}

std::vector<int> GaitNetConfig::spatial_trace() const {
  std::vector<int> trace = {height};
  int h = height;
  for (int i = 0; i < kConvCount; ++i) {
    if (!kPoolAfter[i]) continue;
    h = nn::pool_out_extent(h, 2, 2);
    trace.push_back(h);
  }
  return trace;
}

void GaitNetConfig::validate() const {
  if (channels != 1 && channels != 3) {
    throw ConfigError("gait net input must have 1 or 3 channels");
  }
  if (conv_channels.size() != kConvCount) {
    throw ConfigError("gait net needs exactly 8 convolutions, got " +
                      std::to_string(conv_channels.size()));
  }
  if (height <= 0 || width <= 0 || frames <= 0 || cnn_feature_dim <= 0 ||
      lstm_frame_size <= 0 || lstm_hidden <= 0 || lstm_layers <= 0) {
    throw ConfigError("gait net extents must be positive");
  }
  // Temporal pooling schedule is fixed at {1,2,2,2,2}.
  const auto trace = temporal_trace();
  if (trace.size() != 6 || trace[1] != frames) {
    throw ConfigError("gait net temporal schedule violated");
  }
}

GaitNet::GaitNet(GaitNetConfig config, int classes, uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);

  int in_c = config_.channels;
  for (int i = 0; i < kConvCount; ++i) {
    convs_.emplace_back("gait.conv" + std::to_string(i), in_c,
                        config_.conv_channels[static_cast<size_t>(i)], 3, rng);
    in_c = config_.conv_channels[static_cast<size_t>(i)];
  }
  const int t_out = config_.temporal_trace().back();
  const int h_out = config_.spatial_trace().back();
  int w_out = config_.width;
  for (int i = 0; i < 5; ++i) w_out = nn::pool_out_extent(w_out, 2, 2);
  const int flat = in_c * t_out * h_out * w_out;
  fc1_ = std::make_unique<nn::Dense>("gait.fc1", flat, config_.cnn_feature_dim,
                                     rng);
  fc2_ = std::make_unique<nn::Dense>("gait.fc2", config_.cnn_feature_dim,
                                     config_.cnn_feature_dim, rng);
  lstm_ = std::make_unique<nn::LstmStack>(
      "gait.lstm", config_.lstm_layers,
      config_.lstm_frame_size * config_.lstm_frame_size, config_.lstm_hidden,
      rng);
  head_ = std::make_unique<nn::ClassifierHead>(
      "gait.head", config_.feature_dim(), config_.head_hidden, classes, rng);
}

GaitNet::Forward GaitNet::forward(const FrameSegment& segment) const {
  segment.validate();
  if (segment.size() != config_.frames) {
    throw ShapeError("gait segment: expected " + std::to_string(config_.frames) +
                     " frames, got " + std::to_string(segment.size()));
  }
  const ImagePatch& f0 = segment.frames.front();
  if (f0.channels != config_.channels || f0.height != config_.height ||
      f0.width != config_.width) {
    throw ShapeError("gait frame: expected [" + std::to_string(config_.channels) +
                     "x" + std::to_string(config_.height) + "x" +
                     std::to_string(config_.width) + "], got [" +
                     std::to_string(f0.channels) + "x" +
                     std::to_string(f0.height) + "x" +
                     std::to_string(f0.width) + "]");
  }

  // 3D-CNN stream.
  NodeRef t = nn::constant(segment_to_tensor(segment));
  bool first_pool = true;
  for (int i = 0; i < kConvCount; ++i) {
    t = nn::relu(convs_[static_cast<size_t>(i)].apply(t));
    if (kPoolAfter[i]) {
      t = nn::maxpool3d(t, first_pool ? 1 : 2, 2, 2).out;
      first_pool = false;
    }
  }
  NodeRef d = fc2_->apply(nn::relu(fc1_->apply(nn::flatten(t))));

  // LSTM stream over downsampled grayscale frames.
  std::vector<NodeRef> steps;
  steps.reserve(segment.frames.size());
  for (const auto& frame : segment.frames) {
    ImagePatch gray = resize_bilinear(to_grayscale(frame),
                                      config_.lstm_frame_size,
                                      config_.lstm_frame_size);
    steps.push_back(nn::constant(
        nn::Tensor({config_.lstm_frame_size * config_.lstm_frame_size},
                   std::move(gray.pixels))));
  }
  NodeRef l = lstm_->apply(steps);

  return {d, l, nn::concat({d, l})};
}

ModalityFeatures GaitNet::features(const FrameSegment& segment) const {
  auto fwd = forward(segment);
  ModalityFeatures out{Modality::gait, fwd.features->value.v};
  out.validate(config_.feature_dim());
  return out;
}

EmotionDistribution GaitNet::classify(const ModalityFeatures& features,
                                      const LabelTaxonomy& taxonomy) const {
  if (features.source != Modality::gait) {
    throw InvalidInputError("gait classifier fed " +
                            std::string(to_string(features.source)) +
                            " features");
  }
  features.validate(config_.feature_dim());
  if (taxonomy.k() != head_->classes()) {
    throw TaxonomyError("gait head was built for k=" +
                        std::to_string(head_->classes()) + ", got k=" +
                        std::to_string(taxonomy.k()));
  }
  NodeRef probs = head_->apply(
      nn::constant(nn::Tensor({features.dim()}, features.values)));
  return EmotionDistribution::validated(taxonomy, probs->value.v);
}

NodeRef GaitNet::classify_node(const FrameSegment& segment) const {
  return head_->apply(forward(segment).features);
}

std::vector<nn::NamedParam> GaitNet::parameters() const {
  std::vector<nn::NamedParam> out;
  for (const auto& c : convs_) {
    auto p = c.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto append = [&out](const std::vector<nn::NamedParam>& p) {
    out.insert(out.end(), p.begin(), p.end());
  };
  append(fc1_->parameters());
  append(fc2_->parameters());
  append(lstm_->parameters());
  append(head_->parameters());
  return out;
}

}  // namespace emorec
