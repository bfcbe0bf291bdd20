#ifndef EMOREC_SITUATIONAL_HPP
#define EMOREC_SITUATIONAL_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emorec/core.hpp"

namespace emorec {

// ---------------------------------------------------------------------------
// Scene annotations
// ---------------------------------------------------------------------------

struct AnpDetection {
  std::string phrase;  // adjective_noun form, e.g. "creative_kids"
  double confidence = 0.0;

  bool operator==(const AnpDetection&) const = default;
};

/// Place category, attributes and ANP detections for one scene. ANPs are
/// kept sorted by descending confidence.
struct SceneAnnotation {
  std::string place_category;
  std::vector<std::string> place_attributes;
  std::vector<AnpDetection> anps;

  bool operator==(const SceneAnnotation&) const = default;
};

/// Validates confidences and sorts the ANPs descending (stable).
SceneAnnotation make_scene_annotation(std::string place_category,
                                      std::vector<std::string> attributes,
                                      std::vector<AnpDetection> anps);

/// Source of scene annotations looked up by image id.
class AnnotationProvider {
 public:
  virtual ~AnnotationProvider() = default;
  /// Throws MissingAnnotationError for an unknown image id.
  virtual SceneAnnotation annotate(const std::string& image_id) const = 0;
};

/// File-backed provider over line-delimited JSON records:
///   {"image_id": "...", "place_category": "...",
///    "attributes": ["..."], "anps": [{"phrase": "...", "confidence": 0.9}]}
class FileAnnotationProvider : public AnnotationProvider {
 public:
  static FileAnnotationProvider load(const std::string& path);

  SceneAnnotation annotate(const std::string& image_id) const override;
  size_t size() const { return records_.size(); }

 private:
  std::map<std::string, SceneAnnotation> records_;
};

// ---------------------------------------------------------------------------
// Average-emotion tracking
// ---------------------------------------------------------------------------

/// One recognized emotion, attributed to a zone at a time.
struct EmotionObservationEvent {
  EmotionLabel label;
  double timestamp = 0.0;  // seconds
  std::string zone_id;
  std::string subject_id;
};

/// Counts recognized emotions per (zone, time bucket) and serves the
/// normalized average-emotion scores l_e = N_e / sum(N_e). Updates are
/// single-writer; reads see a consistent snapshot.
class AverageEmotionTracker {
 public:
  AverageEmotionTracker(LabelTaxonomy taxonomy, double bucket_seconds = 60.0);

  const LabelTaxonomy& taxonomy() const { return taxonomy_; }
  double bucket_seconds() const { return bucket_seconds_; }

  int64_t bucket_of(double timestamp) const;

  /// Increments the event's (zone, bucket, label) count. Throws
  /// TaxonomyError when the label does not belong to the taxonomy.
  void record(const EmotionObservationEvent& event);

  /// Raw counts for a row, or nullopt when the row was never touched.
  std::optional<std::vector<int64_t>> counts(const std::string& zone_id,
                                             int64_t bucket) const;

  /// Scores l_e for a row; nullopt is the explicit no-data marker (row
  /// absent or total zero) — never a division by zero.
  std::optional<std::vector<double>> average_scores(const std::string& zone_id,
                                                    int64_t bucket) const;

  struct Row {
    std::string zone_id;
    int64_t bucket = 0;
    std::vector<int64_t> counts;
  };
  std::vector<Row> rows() const;
  size_t total_events() const { return total_events_; }

 private:
  LabelTaxonomy taxonomy_;
  double bucket_seconds_;
  std::map<std::pair<std::string, int64_t>, std::vector<int64_t>> rows_;
  size_t total_events_ = 0;
};

// ---------------------------------------------------------------------------
// Anomaly detection
// ---------------------------------------------------------------------------

struct AnomalyResult {
  bool flag = false;
  double score = 0.0;  // max pairwise total-variation distance, in [0,1]
};

inline constexpr double kDefaultAnomalyThreshold = 0.4;

/// Flags modality disagreement: score is the maximum total-variation
/// distance over all pairs of per-modality distributions; flagged when it
/// exceeds the threshold. Needs at least two distributions over the same
/// taxonomy.
AnomalyResult detect_anomaly(const std::vector<EmotionDistribution>& outputs,
                             double threshold = kDefaultAnomalyThreshold);

// ---------------------------------------------------------------------------
// Explanations
// ---------------------------------------------------------------------------

struct ExplanationInputs {
  EmotionLabel fused;
  std::map<Modality, EmotionLabel> modality_labels;
  std::optional<SceneAnnotation> annotation;
  /// Average-emotion scores for the observation's (zone, bucket) together
  /// with the taxonomy naming them; absent means no data.
  std::optional<std::vector<double>> average_scores;
  LabelTaxonomy taxonomy;
  AnomalyResult anomaly;
};

struct ExplanationRecord {
  EmotionLabel fused;
  std::map<Modality, EmotionLabel> modality_labels;
  std::optional<SceneAnnotation> annotation;
  std::optional<std::vector<double>> average_scores;
  AnomalyResult anomaly;
  std::string text;
};

/// Renders the explanation template, omitting clauses whose inputs are
/// absent; always yields nonempty text naming at least the fused label.
ExplanationRecord render_explanation(const ExplanationInputs& inputs);

}  // namespace emorec

#endif  // EMOREC_SITUATIONAL_HPP
