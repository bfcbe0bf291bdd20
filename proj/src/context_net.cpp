#include "emorec/context_net.hpp"

#include "emorec/image_ops.hpp"

namespace emorec {

using nn::NodeRef;

ContextNetConfig ContextNetConfig::mini() {
  ContextNetConfig c;
  c.height = 16;
  c.width = 16;
  c.conv_channels = {3, 4, 6};
  c.feature_dim = 16;
  c.head_hidden = 16;
  return c;
}

void ContextNetConfig::validate() const {
  if (channels != 1 && channels != 3) {
    throw ConfigError("context net input must have 1 or 3 channels");
  }
  if (height <= 0 || width <= 0 || feature_dim <= 0 || head_hidden <= 0) {
    throw ConfigError("context net extents must be positive");
  }
}

ContextNet::ContextNet(ContextNetConfig config, int classes, uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  cnn_ = std::make_unique<nn::Conv2dStack>("context.cnn", config_.channels,
                                           config_.height, config_.width,
                                           config_.conv_channels,
                                           config_.feature_dim, rng);
  head_ = std::make_unique<nn::ClassifierHead>(
      "context.head", config_.feature_dim, config_.head_hidden, classes, rng);
}

void ContextNet::check_input(const nn::Tensor& t) const {
  const std::vector<int> want = {config_.channels, config_.height,
                                 config_.width};
  if (t.shape != want) {
    throw ShapeError("context input: expected " + nn::shape_string(want) +
                     ", got " + nn::shape_string(t.shape));
  }
}

NodeRef ContextNet::forward(const NodeRef& background) const {
  check_input(background->value);
  return cnn_->apply(background);
}

ModalityFeatures ContextNet::features(const ImagePatch& background) const {
  NodeRef f = forward(nn::constant(patch_to_tensor(background)));
  ModalityFeatures out{Modality::context, f->value.v};
  out.validate(config_.feature_dim);
  return out;
}

EmotionDistribution ContextNet::classify(const ModalityFeatures& features,
                                         const LabelTaxonomy& taxonomy) const {
  if (features.source != Modality::context) {
    throw InvalidInputError("context classifier fed " +
                            std::string(to_string(features.source)) +
                            " features");
  }
  features.validate(config_.feature_dim);
  if (taxonomy.k() != head_->classes()) {
    throw TaxonomyError("context head was built for k=" +
                        std::to_string(head_->classes()) + ", got k=" +
                        std::to_string(taxonomy.k()));
  }
  NodeRef probs = head_->apply(
      nn::constant(nn::Tensor({features.dim()}, features.values)));
  return EmotionDistribution::validated(taxonomy, probs->value.v);
}

NodeRef ContextNet::classify_node(const NodeRef& background) const {
  return head_->apply(forward(background));
}

std::vector<nn::NamedParam> ContextNet::parameters() const {
  auto out = cnn_->parameters();
  auto p = head_->parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace emorec
