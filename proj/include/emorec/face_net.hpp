#ifndef EMOREC_FACE_NET_HPP
#define EMOREC_FACE_NET_HPP

#include <memory>
#include <optional>
#include <vector>

#include "emorec/core.hpp"
#include "emorec/layers.hpp"

namespace emorec {

struct FaceNetConfig {
  int in_channels = 1;
  int height = 48;
  int width = 48;
  /// Feature stream: one conv+relu+maxpool(2, stride 1) per entry; the
  /// stride-1 pools keep the spatial size, so the stream output is gated by
  /// the full-resolution attention map.
  std::vector<int> cnn_channels = {32, 64, 128};
  /// Attention stream encoder: conv+relu+maxpool(2, stride 2) per entry.
  /// The decoder mirrors it with unpool + skip concatenation + convolution,
  /// ending in a single-channel sigmoid map at input resolution.
  std::vector<int> encoder_channels = {32, 64, 128, 256};
  /// Post-fusion stages: conv+relu+maxpool(2, stride 2) per entry.
  std::vector<int> fusion_channels = {128, 128};
  int feature_dim = 256;
  int head_hidden = 128;

  /// Tiny widths on a 16x16 input, for gradient checks.
  static FaceNetConfig mini();
  /// Tiny widths on the 48x48 grayscale input, for small training runs.
  static FaceNetConfig mini_fer();

  void validate() const;
};

/// Two-stream face feature extractor and stand-alone classifier.
class FaceNet : public nn::Module {
 public:
  FaceNet(FaceNetConfig config, int classes, uint64_t seed);

  struct Forward {
    nn::NodeRef features;    // [feature_dim]
    nn::NodeRef attention;   // [1,H,W], sigmoid output
    nn::NodeRef cnn_stream;  // [C,H,W] feature-stream output
    nn::NodeRef fused;       // attention (x) cnn_stream, post-fusion input
  };

  /// Full graph forward. `attention_override`, when set, replaces the
  /// decoder output before the multiplication (used to probe the gating).
  Forward forward(const nn::NodeRef& input,
                  const std::optional<nn::Tensor>& attention_override = {}) const;

  /// Feature vector F_F plus the attention map for inspection.
  ModalityFeatures features(const ImagePatch& face) const;
  ImagePatch attention_map(const ImagePatch& face) const;

  EmotionDistribution classify(const ImagePatch& face,
                               const LabelTaxonomy& taxonomy) const;
  nn::NodeRef classify_node(const nn::NodeRef& input) const;

  const nn::ClassifierHead& head() const { return *head_; }

  std::vector<nn::NamedParam> parameters() const override;
  const FaceNetConfig& config() const { return config_; }
  int feature_dim() const { return config_.feature_dim; }

 private:
  void check_input(const nn::Tensor& t) const;

  FaceNetConfig config_;
  std::vector<nn::Conv2d> cnn_stream_;
  std::vector<nn::Conv2d> encoder_;
  std::vector<nn::Conv2d> decoder_;
  std::vector<nn::Conv2d> post_fusion_;
  std::unique_ptr<nn::Dense> feature_fc_;
  std::unique_ptr<nn::ClassifierHead> head_;
};

}  // namespace emorec

#endif  // EMOREC_FACE_NET_HPP
