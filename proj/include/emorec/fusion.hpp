#ifndef EMOREC_FUSION_HPP
#define EMOREC_FUSION_HPP

#include <map>
#include <memory>
#include <vector>

#include "emorec/context_net.hpp"
#include "emorec/core.hpp"
#include "emorec/face_net.hpp"
#include "emorec/gait_net.hpp"
#include "emorec/posture_net.hpp"

namespace emorec {

/// Which modalities are fused and what feature length each contributes.
struct FusionConfig {
  std::vector<Modality> active;          // canonical order, no duplicates
  std::map<Modality, int> expected_dims;

  int fused_dim() const;
  bool is_active(Modality m) const;
  void validate() const;
};

/// Early fusion: concatenation in canonical order (face, posture, gait,
/// context), skipping inactive modalities. Throws MissingModalityError when
/// an active modality is absent (naming it), ConfigError on an unexpected
/// extra, ShapeError on a wrong per-modality length.
std::vector<double> fuse(const FusionConfig& config,
                         const std::vector<ModalityFeatures>& features);

struct PipelineConfig {
  LabelTaxonomy taxonomy = LabelTaxonomy::four_class();
  std::vector<Modality> active = all_modalities();
  FaceNetConfig face;
  PostureNetConfig posture;
  GaitNetConfig gait;
  ContextNetConfig context;
  int fusion_hidden = 64;
  uint64_t seed = 7;

  /// Miniature widths across every module, for desk-scale training runs.
  static PipelineConfig mini(LabelTaxonomy taxonomy, uint64_t seed,
                             std::vector<Modality> active = all_modalities());
  void validate() const;
};

struct ClassificationResult {
  std::map<Modality, EmotionDistribution> per_modality;  // O_i
  EmotionDistribution fused;
};

/// Owns the per-modality networks plus the fusion classifier and runs the
/// whole recognition path over observations. Frozen pipelines are safe to
/// share for concurrent inference; training access is externally serialized.
class Pipeline : public nn::Module {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const FusionConfig& fusion_config() const { return fusion_config_; }
  const LabelTaxonomy& taxonomy() const { return config_.taxonomy; }
  int fused_dim() const { return fusion_config_.fused_dim(); }

  // Active-module access; throws ConfigError when the module is inactive.
  const FaceNet& face() const;
  const PostureNet& posture() const;
  const GaitNet& gait() const;
  const ContextNet& context() const;

  /// Extracts one modality's features from an observation. Throws
  /// MissingModalityError (naming the modality) when its inputs are absent.
  ModalityFeatures features_for(Modality m, const SubjectObservation& obs) const;

  /// Graph-building variant used by training; gradients flow into the
  /// module's extractor parameters.
  nn::NodeRef feature_node(Modality m, const SubjectObservation& obs) const;

  /// Stand-alone module output O_m as a probability node.
  nn::NodeRef modality_probs_node(Modality m, const SubjectObservation& obs) const;

  /// Fused classification as a probability node. With a single active
  /// modality this is that module's own head (degenerate fusion).
  nn::NodeRef fused_probs_node(const SubjectObservation& obs) const;

  /// Classifies a pre-fused vector. With a single active modality the
  /// vector is routed through that module's stand-alone head.
  EmotionDistribution multimodal_classify(const std::vector<double>& fused) const;

  /// Runs every active module on the observation: per-modality outputs O_i
  /// plus the fused result.
  ClassificationResult classify(const SubjectObservation& obs) const;

  std::vector<nn::NamedParam> parameters() const override;
  /// Parameters of one module (face/posture/gait/context) or of the fusion
  /// head ("fusion").
  std::vector<nn::NamedParam> parameters_of(const std::string& component) const;

 private:
  PipelineConfig config_;
  FusionConfig fusion_config_;
  std::unique_ptr<FaceNet> face_;
  std::unique_ptr<PostureNet> posture_;
  std::unique_ptr<GaitNet> gait_;
  std::unique_ptr<ContextNet> context_;
  std::unique_ptr<nn::ClassifierHead> fusion_head_;  // null when 1 modality
};

}  // namespace emorec

#endif  // EMOREC_FUSION_HPP
