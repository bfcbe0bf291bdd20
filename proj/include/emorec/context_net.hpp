#ifndef EMOREC_CONTEXT_NET_HPP
#define EMOREC_CONTEXT_NET_HPP

#include <memory>
#include <vector>

#include "emorec/core.hpp"
#include "emorec/layers.hpp"

namespace emorec {

struct ContextNetConfig {
  int channels = 3;
  int height = 96;
  int width = 96;
  std::vector<int> conv_channels = {32, 64, 128};
  int feature_dim = 128;  // |F_B|
  int head_hidden = 64;

  static ContextNetConfig mini();
  void validate() const;
};

/// Background context module: plain CNN features over the scene with the
/// subject regions already masked out upstream.
class ContextNet : public nn::Module {
 public:
  ContextNet(ContextNetConfig config, int classes, uint64_t seed);

  nn::NodeRef forward(const nn::NodeRef& background) const;
  ModalityFeatures features(const ImagePatch& background) const;
  EmotionDistribution classify(const ModalityFeatures& features,
                               const LabelTaxonomy& taxonomy) const;
  nn::NodeRef classify_node(const nn::NodeRef& background) const;

  const nn::ClassifierHead& head() const { return *head_; }

  std::vector<nn::NamedParam> parameters() const override;
  const ContextNetConfig& config() const { return config_; }
  int feature_dim() const { return config_.feature_dim; }

 private:
  void check_input(const nn::Tensor& t) const;

  ContextNetConfig config_;
  std::unique_ptr<nn::Conv2dStack> cnn_;
  std::unique_ptr<nn::ClassifierHead> head_;
};

}  // namespace emorec

#endif  // EMOREC_CONTEXT_NET_HPP
