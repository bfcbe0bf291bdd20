#include "emorec/fusion.hpp"

#include <algorithm>

#include "emorec/image_ops.hpp"
#include "emorec/rng.hpp"

namespace emorec {

using nn::NodeRef;

int FusionConfig::fused_dim() const {
  int dim = 0;
  for (Modality m : active) dim += expected_dims.at(m);
  return dim;
}

bool FusionConfig::is_active(Modality m) const {
  return std::find(active.begin(), active.end(), m) != active.end();
}

void FusionConfig::validate() const {
  if (active.empty()) throw ConfigError("fusion: no active modalities");
  // Canonical order, no duplicates.
  size_t cursor = 0;
  const auto& order = all_modalities();
  for (Modality m : active) {
    while (cursor < order.size() && order[cursor] != m) ++cursor;
    if (cursor == order.size()) {
      throw ConfigError("fusion: active modalities must follow the canonical "
                        "face, posture, gait, context order without repeats");
    }
    ++cursor;
    if (!expected_dims.contains(m) || expected_dims.at(m) <= 0) {
      throw ConfigError(std::string("fusion: missing expected dim for ") +
                        to_string(m));
    }
  }
}

std::vector<double> fuse(const FusionConfig& config,
                         const std::vector<ModalityFeatures>& features) {
  config.validate();
  for (const auto& f : features) {
    if (!config.is_active(f.source)) {
      throw ConfigError(std::string("fusion: unexpected ") +
                        to_string(f.source) + " features");
    }
  }
  std::vector<double> fused;
  fused.reserve(static_cast<size_t>(config.fused_dim()));
  for (Modality m : config.active) {
    const ModalityFeatures* found = nullptr;
    for (const auto& f : features) {
      if (f.source == m) {
        if (found) {
          throw ConfigError(std::string("fusion: duplicate ") + to_string(m) +
                            " features");
        }
        found = &f;
      }
    }
    if (!found) {
      throw MissingModalityError(std::string("fusion: missing ") +
                                 to_string(m) + " features");
    }
    found->validate(config.expected_dims.at(m));
    fused.insert(fused.end(), found->values.begin(), found->values.end());
  }
  return fused;
}

PipelineConfig PipelineConfig::mini(LabelTaxonomy taxonomy, uint64_t seed,
                                    std::vector<Modality> active) {
  PipelineConfig c;
  c.taxonomy = std::move(taxonomy);
  c.active = std::move(active);
  c.face = FaceNetConfig::mini();
  c.posture = PostureNetConfig::mini();
  c.gait = GaitNetConfig::mini();
  c.context = ContextNetConfig::mini();
  c.fusion_hidden = 32;
  c.seed = seed;
  return c;
}

void PipelineConfig::validate() const {
  if (taxonomy.k() < 2) throw ConfigError("pipeline: taxonomy too small");
  if (fusion_hidden <= 0) throw ConfigError("pipeline: fusion_hidden must be positive");
  FusionConfig probe;
  probe.active = active;
  for (Modality m : active) probe.expected_dims[m] = 1;
  probe.validate();
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  config_.validate();
  const int k = config_.taxonomy.k();
  fusion_config_.active = config_.active;
  for (Modality m : config_.active) {
    switch (m) {
      case Modality::face:
        face_ = std::make_unique<FaceNet>(config_.face, k,
                                          derive_seed(config_.seed, "face"));
        fusion_config_.expected_dims[m] = face_->feature_dim();
        break;
      case Modality::posture:
        posture_ = std::make_unique<PostureNet>(
            config_.posture, k, derive_seed(config_.seed, "posture"));
        fusion_config_.expected_dims[m] = posture_->feature_dim();
        break;
      case Modality::gait:
        gait_ = std::make_unique<GaitNet>(config_.gait, k,
                                          derive_seed(config_.seed, "gait"));
        fusion_config_.expected_dims[m] = gait_->feature_dim();
        break;
      case Modality::context:
        context_ = std::make_unique<ContextNet>(
            config_.context, k, derive_seed(config_.seed, "context"));
        fusion_config_.expected_dims[m] = context_->feature_dim();
        break;
    }
  }
  if (config_.active.size() > 1) {
    Rng rng(derive_seed(config_.seed, "fusion"));
    fusion_head_ = std::make_unique<nn::ClassifierHead>(
        "fusion.head", fusion_config_.fused_dim(), config_.fusion_hidden, k,
        rng);
  }
}

const FaceNet& Pipeline::face() const {
  if (!face_) throw ConfigError("face module is not active");
  return *face_;
}
const PostureNet& Pipeline::posture() const {
  if (!posture_) throw ConfigError("posture module is not active");
  return *posture_;
}
const GaitNet& Pipeline::gait() const {
  if (!gait_) throw ConfigError("gait module is not active");
  return *gait_;
}
const ContextNet& Pipeline::context() const {
  if (!context_) throw ConfigError("context module is not active");
  return *context_;
}

namespace {

[[noreturn]] void missing(Modality m, const char* what) {
  throw MissingModalityError(std::string(to_string(m)) +
                             ": observation lacks " + what);
}

}  // namespace

ModalityFeatures Pipeline::features_for(Modality m,
                                        const SubjectObservation& obs) const {
  NodeRef node = feature_node(m, obs);
  ModalityFeatures out{m, node->value.v};
  out.validate(fusion_config_.expected_dims.at(m));
  return out;
}

NodeRef Pipeline::feature_node(Modality m, const SubjectObservation& obs) const {
  switch (m) {
    case Modality::face: {
      if (!obs.face) missing(m, "a face patch");
      return face().forward(nn::constant(patch_to_tensor(*obs.face))).features;
    }
    case Modality::posture: {
      if (!obs.body) missing(m, "a body patch");
      if (!obs.landmarks || obs.landmarks->empty()) missing(m, "landmarks");
      // Posture is instantaneous; use the most recent landmark frame.
      const pose::PostureVisualFeatures visual = pose::compute_posture_features(
          obs.landmarks->back(), posture().config().schema);
      NodeRef v = nn::constant(nn::Tensor(
          {pose::kPostureFeatureCount},
          std::vector<double>(visual.values.begin(), visual.values.end())));
      NodeRef d = posture().deep_features(
          nn::constant(patch_to_tensor(*obs.body)));
      return nn::concat({v, d});
    }
    case Modality::gait: {
      if (!obs.segment) missing(m, "a frame segment");
      return gait().forward(*obs.segment).features;
    }
    case Modality::context: {
      if (!obs.background) missing(m, "a background patch");
      return context().forward(nn::constant(patch_to_tensor(*obs.background)));
    }
  }
  throw ConfigError("unknown modality");
}

NodeRef Pipeline::modality_probs_node(Modality m,
                                      const SubjectObservation& obs) const {
  switch (m) {
    case Modality::face: {
      if (!obs.face) missing(m, "a face patch");
      return face().classify_node(nn::constant(patch_to_tensor(*obs.face)));
    }
    case Modality::posture: {
      if (!obs.body) missing(m, "a body patch");
      if (!obs.landmarks || obs.landmarks->empty()) missing(m, "landmarks");
      const pose::PostureVisualFeatures visual = pose::compute_posture_features(
          obs.landmarks->back(), posture().config().schema);
      return posture().classify_node(
          nn::constant(patch_to_tensor(*obs.body)),
          std::vector<double>(visual.values.begin(), visual.values.end()));
    }
    case Modality::gait: {
      if (!obs.segment) missing(m, "a frame segment");
      return gait().classify_node(*obs.segment);
    }
    case Modality::context: {
      if (!obs.background) missing(m, "a background patch");
      return context().classify_node(
          nn::constant(patch_to_tensor(*obs.background)));
    }
  }
  throw ConfigError("unknown modality");
}

NodeRef Pipeline::fused_probs_node(const SubjectObservation& obs) const {
  if (config_.active.size() == 1) {
    return modality_probs_node(config_.active.front(), obs);
  }
  std::vector<NodeRef> parts;
  parts.reserve(config_.active.size());
  for (Modality m : config_.active) parts.push_back(feature_node(m, obs));
  return fusion_head_->apply(nn::concat(parts));
}

EmotionDistribution Pipeline::multimodal_classify(
    const std::vector<double>& fused) const {
  if (static_cast<int>(fused.size()) != fused_dim()) {
    throw ShapeError("fused vector: expected " + std::to_string(fused_dim()) +
                     " values, got " + std::to_string(fused.size()));
  }
  NodeRef in = nn::constant(nn::Tensor({fused_dim()}, fused));
  NodeRef probs;
  if (config_.active.size() == 1) {
    // Degenerate fusion: the single module's own head is the multimodal
    // classifier, so O_i and the fused output coincide.
    switch (config_.active.front()) {
      case Modality::face: probs = face().head().apply(in); break;
      case Modality::posture: probs = posture().head().apply(in); break;
      case Modality::gait: probs = gait().head().apply(in); break;
      case Modality::context: probs = context().head().apply(in); break;
    }
  } else {
    probs = fusion_head_->apply(in);
  }
  return EmotionDistribution::validated(config_.taxonomy, probs->value.v);
}

ClassificationResult Pipeline::classify(const SubjectObservation& obs) const {
  obs.validate();
  ClassificationResult result;
  // One extraction per modality feeds both its stand-alone head and fusion.
  std::vector<NodeRef> features;
  for (Modality m : config_.active) {
    NodeRef feat = feature_node(m, obs);
    features.push_back(feat);
    NodeRef probs;
    switch (m) {
      case Modality::face: probs = face().head().apply(feat); break;
      case Modality::posture: probs = posture().head().apply(feat); break;
      case Modality::gait: probs = gait().head().apply(feat); break;
      case Modality::context: probs = context().head().apply(feat); break;
    }
    result.per_modality.emplace(
        m, EmotionDistribution::validated(config_.taxonomy, probs->value.v));
  }
  if (config_.active.size() == 1) {
    result.fused = result.per_modality.begin()->second;
  } else {
    NodeRef probs = fusion_head_->apply(nn::concat(features));
    result.fused =
        EmotionDistribution::validated(config_.taxonomy, probs->value.v);
  }
  return result;
}

std::vector<nn::NamedParam> Pipeline::parameters() const {
  std::vector<nn::NamedParam> out;
  auto append = [&out](const std::vector<nn::NamedParam>& p) {
    out.insert(out.end(), p.begin(), p.end());
  };
  if (face_) append(face_->parameters());
  if (posture_) append(posture_->parameters());
  if (gait_) append(gait_->parameters());
  if (context_) append(context_->parameters());
  if (fusion_head_) append(fusion_head_->parameters());
  return out;
}

std::vector<nn::NamedParam> Pipeline::parameters_of(
    const std::string& component) const {
  if (component == "face" && face_) return face_->parameters();
  if (component == "posture" && posture_) return posture_->parameters();
  if (component == "gait" && gait_) return gait_->parameters();
  if (component == "context" && context_) return context_->parameters();
  if (component == "fusion" && fusion_head_) return fusion_head_->parameters();
  throw ConfigError("no active component named '" + component + "'");
}

}  // namespace emorec
