#include "emorec/posture_net.hpp"

#include "emorec/image_ops.hpp"

namespace emorec {

using nn::NodeRef;

PostureNetConfig PostureNetConfig::mini() {
  PostureNetConfig c;
  c.height = 16;
  c.width = 16;
  c.conv_channels = {3, 4, 6};
  c.deep_dim = 16;
  c.head_hidden = 16;
  return c;
}

void PostureNetConfig::validate() const {
  if (channels != 1 && channels != 3) {
    throw ConfigError("posture net input must have 1 or 3 channels");
  }
  if (height <= 0 || width <= 0 || deep_dim <= 0 || head_hidden <= 0) {
    throw ConfigError("posture net extents must be positive");
  }
  schema.validate();
}

PostureNet::PostureNet(PostureNetConfig config, int classes, uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  cnn_ = std::make_unique<nn::Conv2dStack>("posture.cnn", config_.channels,
                                           config_.height, config_.width,
                                           config_.conv_channels,
                                           config_.deep_dim, rng);
  head_ = std::make_unique<nn::ClassifierHead>(
      "posture.head", config_.feature_dim(), config_.head_hidden, classes, rng);
}

void PostureNet::check_input(const nn::Tensor& t) const {
  const std::vector<int> want = {config_.channels, config_.height,
                                 config_.width};
  if (t.shape != want) {
    throw ShapeError("posture input: expected " + nn::shape_string(want) +
                     ", got " + nn::shape_string(t.shape));
  }
}

NodeRef PostureNet::deep_features(const NodeRef& body) const {
  check_input(body->value);
  return cnn_->apply(body);
}

ModalityFeatures PostureNet::features(const ImagePatch& body,
                                      const LandmarkFrame& landmarks) const {
  const pose::PostureVisualFeatures visual =
      pose::compute_posture_features(landmarks, config_.schema);
  NodeRef deep = deep_features(nn::constant(patch_to_tensor(body)));

  ModalityFeatures out;
  out.source = Modality::posture;
  out.values.assign(visual.values.begin(), visual.values.end());
  out.values.insert(out.values.end(), deep->value.v.begin(),
                    deep->value.v.end());
  out.validate(config_.feature_dim());
  return out;
}

EmotionDistribution PostureNet::classify(const ModalityFeatures& features,
                                         const LabelTaxonomy& taxonomy) const {
  if (features.source != Modality::posture) {
    throw InvalidInputError("posture classifier fed " +
                            std::string(to_string(features.source)) +
                            " features");
  }
  features.validate(config_.feature_dim());
  if (taxonomy.k() != head_->classes()) {
    throw TaxonomyError("posture head was built for k=" +
                        std::to_string(head_->classes()) + ", got k=" +
                        std::to_string(taxonomy.k()));
  }
  NodeRef probs = head_->apply(
      nn::constant(nn::Tensor({features.dim()}, features.values)));
  return EmotionDistribution::validated(taxonomy, probs->value.v);
}

NodeRef PostureNet::classify_node(const NodeRef& body,
                                  const std::vector<double>& visual) const {
  if (static_cast<int>(visual.size()) != pose::kPostureFeatureCount) {
    throw ShapeError("posture visual features: expected " +
                     std::to_string(pose::kPostureFeatureCount) + ", got " +
                     std::to_string(visual.size()));
  }
  NodeRef v = nn::constant(
      nn::Tensor({pose::kPostureFeatureCount}, visual));
  NodeRef fp = nn::concat({v, deep_features(body)});
  return head_->apply(fp);
}

std::vector<nn::NamedParam> PostureNet::parameters() const {
  auto out = cnn_->parameters();
  auto p = head_->parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace emorec
