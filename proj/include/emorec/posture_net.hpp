#ifndef EMOREC_POSTURE_NET_HPP
#define EMOREC_POSTURE_NET_HPP

#include <memory>
#include <vector>

#include "emorec/core.hpp"
#include "emorec/layers.hpp"
#include "emorec/pose_geometry.hpp"

namespace emorec {

struct PostureNetConfig {
  int channels = 3;
  int height = 96;
  int width = 96;
  std::vector<int> conv_channels = {32, 64, 128};
  int deep_dim = 100;  // |D|
  int head_hidden = 64;
  pose::SkeletonSchema schema;

  /// |F_P| = 24 visual features + |D| deep features.
  int feature_dim() const { return pose::kPostureFeatureCount + deep_dim; }

  static PostureNetConfig mini();
  void validate() const;
};

/// Posture module: Table-style visual features V concatenated with a CNN
/// deep feature set D, F_P = [V, D], plus a stand-alone classifier.
class PostureNet : public nn::Module {
 public:
  PostureNet(PostureNetConfig config, int classes, uint64_t seed);

  /// Deep feature graph over a body image (face already removed upstream).
  nn::NodeRef deep_features(const nn::NodeRef& body) const;

  /// F_P = [V, D]; V comes from the landmark frame, D from the body image.
  ModalityFeatures features(const ImagePatch& body,
                            const LandmarkFrame& landmarks) const;

  EmotionDistribution classify(const ModalityFeatures& features,
                               const LabelTaxonomy& taxonomy) const;
  /// Builds the stand-alone classification graph for training.
  nn::NodeRef classify_node(const nn::NodeRef& body,
                            const std::vector<double>& visual) const;

  const nn::ClassifierHead& head() const { return *head_; }

  std::vector<nn::NamedParam> parameters() const override;
  const PostureNetConfig& config() const { return config_; }
  int feature_dim() const { return config_.feature_dim(); }

 private:
  void check_input(const nn::Tensor& t) const;

  PostureNetConfig config_;
  std::unique_ptr<nn::Conv2dStack> cnn_;
  std::unique_ptr<nn::ClassifierHead> head_;
};

}  // namespace emorec

#endif  // EMOREC_POSTURE_NET_HPP
