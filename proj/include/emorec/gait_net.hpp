#ifndef EMOREC_GAIT_NET_HPP
#define EMOREC_GAIT_NET_HPP

#include <memory>
#include <vector>

#include "emorec/core.hpp"
#include "emorec/layers.hpp"

namespace emorec {

struct GaitNetConfig {
  int channels = 3;
  int height = 112;
  int width = 112;
  int frames = kDefaultSegmentFrames;
  /// Exactly 8 convolutions; pools sit after convs 1, 2, 4, 6 and 8. The
  /// first pool is 1x2x2, the rest 2x2x2, so the temporal extent halves at
  /// every pool but the first.
  std::vector<int> conv_channels = {64, 64, 128, 128, 256, 256, 256, 256};
  int cnn_feature_dim = 256;  // |D|, output of the two dense layers
  int lstm_frame_size = 32;   // frames fed to the LSTM as NxN grayscale
  int lstm_hidden = 128;      // |L|
  int lstm_layers = 4;
  int head_hidden = 64;

  /// |F_G| = |D| + |L|.
  int feature_dim() const { return cnn_feature_dim + lstm_hidden; }

  /// Temporal extents [input, after pool1..pool5].
  std::vector<int> temporal_trace() const;
  /// Spatial extents (height) [input, after pool1..pool5].
  std::vector<int> spatial_trace() const;

  static GaitNetConfig mini();
  void validate() const;
};

/// Gait module: two streams over a 16-frame body segment, a 3D CNN and a
/// stacked LSTM; F_G = [D, L].
class GaitNet : public nn::Module {
 public:
  GaitNet(GaitNetConfig config, int classes, uint64_t seed);

  struct Forward {
    nn::NodeRef cnn_features;   // [cnn_feature_dim]
    nn::NodeRef lstm_features;  // [lstm_hidden]
    nn::NodeRef features;       // concatenation [D, L]
  };
  Forward forward(const FrameSegment& segment) const;

  ModalityFeatures features(const FrameSegment& segment) const;
  EmotionDistribution classify(const ModalityFeatures& features,
                               const LabelTaxonomy& taxonomy) const;
  nn::NodeRef classify_node(const FrameSegment& segment) const;

  const nn::ClassifierHead& head() const { return *head_; }

  std::vector<nn::NamedParam> parameters() const override;
  const GaitNetConfig& config() const { return config_; }
  int feature_dim() const { return config_.feature_dim(); }

 private:
  GaitNetConfig config_;
  std::vector<nn::Conv3d> convs_;
  std::unique_ptr<nn::Dense> fc1_;
  std::unique_ptr<nn::Dense> fc2_;
  std::unique_ptr<nn::LstmStack> lstm_;
  std::unique_ptr<nn::ClassifierHead> head_;
};

}  // namespace emorec

#endif  // EMOREC_GAIT_NET_HPP
