#ifndef EMOREC_CORE_HPP
#define EMOREC_CORE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emorec/errors.hpp"

namespace emorec {

// ---------------------------------------------------------------------------
// Labels and taxonomies
// ---------------------------------------------------------------------------

struct EmotionLabel {
  int id = 0;
  std::string name;

  bool operator==(const EmotionLabel&) const = default;
};

/// Ordered set of emotion labels. Ids are contiguous from 0; names unique.
class LabelTaxonomy {
 public:
  LabelTaxonomy() = default;
  explicit LabelTaxonomy(std::vector<std::string> names);

  /// {Neutral, Sad, Happy, Angry}
  static LabelTaxonomy four_class();
  /// {Neutral, Sad, Happy, Angry, Surprise, Fear, Disgust}
  static LabelTaxonomy seven_class();

  int k() const { return static_cast<int>(labels_.size()); }
  const std::vector<EmotionLabel>& labels() const { return labels_; }
  const EmotionLabel& label(int id) const;
  const std::string& name(int id) const { return label(id).name; }
  int id_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  bool operator==(const LabelTaxonomy&) const = default;

 private:
  std::vector<EmotionLabel> labels_;
};

/// Probability vector over a taxonomy. Entries in [0,1], sum 1 within 1e-6.
class EmotionDistribution {
 public:
  EmotionDistribution() = default;

  /// Validates the invariants and throws TaxonomyError / InvalidInputError on
  /// violation. Classifier outputs go through here, so every distribution in
  /// the system is checked.
  static EmotionDistribution validated(LabelTaxonomy taxonomy,
                                       std::vector<double> probs);

  const LabelTaxonomy& taxonomy() const { return taxonomy_; }
  const std::vector<double>& probs() const { return probs_; }
  double prob(int id) const { return probs_.at(static_cast<size_t>(id)); }

  /// Index of the largest probability; ties break to the lowest index.
  int argmax() const;
  const EmotionLabel& top() const { return taxonomy_.label(argmax()); }

 private:
  LabelTaxonomy taxonomy_;
  std::vector<double> probs_;
};

/// Normalizes a nonnegative raw vector into a distribution.
EmotionDistribution make_distribution(const LabelTaxonomy& taxonomy,
                                      const std::vector<double>& raw);

// ---------------------------------------------------------------------------
// Landmarks
// ---------------------------------------------------------------------------

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

inline constexpr int kLandmarkCount = 20;

/// One subject's 20 2D body points at one instant, in pixel coordinates.
struct LandmarkFrame {
  std::vector<Point2> points;     // exactly 20 once validated
  std::vector<bool> visibility;   // exactly 20
  double frame_width = 0.0;
  double frame_height = 0.0;
  double timestamp = 0.0;
  std::string subject_id;
  std::string zone_id;

  bool operator==(const LandmarkFrame&) const = default;
};

/// Returns the frame iff all invariants hold: exactly 20 points, positive
/// frame dimensions, every visible point inside the frame.
LandmarkFrame validate_landmark_frame(LandmarkFrame frame);

// ---------------------------------------------------------------------------
// Images and segments
// ---------------------------------------------------------------------------

enum class PatchKind { face, body, background, full };

const char* to_string(PatchKind kind);

/// Channel-first image with values already scaled to [0,1].
struct ImagePatch {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // channels*height*width, row-major per channel
  PatchKind kind = PatchKind::full;

  double at(int c, int y, int x) const {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double& at(int c, int y, int x) {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }

  /// Validates channel count, positive extents and the [0,1] value range.
  void validate() const;

  bool operator==(const ImagePatch&) const = default;
};

ImagePatch make_patch(int channels, int height, int width,
                      PatchKind kind = PatchKind::full, double fill = 0.0);

inline constexpr int kDefaultSegmentFrames = 16;

/// Fixed-length sequence of same-shaped frames.
struct FrameSegment {
  std::vector<ImagePatch> frames;

  int size() const { return static_cast<int>(frames.size()); }
  /// Throws ShapeError on mixed frame shapes or an empty segment.
  void validate() const;

  bool operator==(const FrameSegment&) const = default;
};

// ---------------------------------------------------------------------------
// Modality features
// ---------------------------------------------------------------------------

enum class Modality { face, posture, gait, context };

/// Canonical concatenation order: face, posture, gait, context.
const std::vector<Modality>& all_modalities();
const char* to_string(Modality m);
Modality modality_from_string(const std::string& name);

/// Fixed-dimension real feature vector produced by one module.
struct ModalityFeatures {
  Modality source = Modality::face;
  std::vector<double> values;

  int dim() const { return static_cast<int>(values.size()); }
  /// Throws InvalidInputError if any value is non-finite, ShapeError if the
  /// length differs from `expected_dim` (when >= 0).
  void validate(int expected_dim = -1) const;
};

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

/// Per-subject input bundle; any subset of modality inputs may be present,
/// but at least one must be.
struct SubjectObservation {
  std::optional<ImagePatch> face;
  std::optional<ImagePatch> body;
  std::optional<std::vector<LandmarkFrame>> landmarks;
  std::optional<FrameSegment> segment;
  std::optional<ImagePatch> background;
  std::string zone_id;
  double timestamp = 0.0;
  std::string subject_id;

  bool has_any_input() const {
    return face || body || landmarks || segment || background;
  }
  /// Throws InvalidInputError when no modality input is present.
  void validate() const;
};

}  // namespace emorec

#endif  // EMOREC_CORE_HPP
