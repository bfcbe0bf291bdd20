#include "emorec/core.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace emorec {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

LabelTaxonomy::LabelTaxonomy(std::vector<std::string> names) {
  if (names.size() < 2) {
    throw TaxonomyError("taxonomy needs at least 2 labels, got " +
                        std::to_string(names.size()));
  }
  std::set<std::string> seen;
  labels_.reserve(names.size());
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw TaxonomyError("empty label name");
    if (!seen.insert(names[i]).second) {
      throw TaxonomyError("duplicate label name '" + names[i] + "'");
    }
    labels_.push_back({static_cast<int>(i), std::move(names[i])});
  }
}

LabelTaxonomy LabelTaxonomy::four_class() {
  return LabelTaxonomy({"Neutral", "Sad", "Happy", "Angry"});
}

LabelTaxonomy LabelTaxonomy::seven_class() {
  return LabelTaxonomy(
      {"Neutral", "Sad", "Happy", "Angry", "Surprise", "Fear", "Disgust"});
}

const EmotionLabel& LabelTaxonomy::label(int id) const {
  if (id < 0 || id >= k()) {
    throw TaxonomyError("label id " + std::to_string(id) +
                        " out of range for k=" + std::to_string(k()));
  }
  return labels_[static_cast<size_t>(id)];
}

int LabelTaxonomy::id_of(const std::string& name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return l.id;
  }
  throw TaxonomyError("unknown label '" + name + "'");
}

bool LabelTaxonomy::contains(const std::string& name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return true;
  }
  return false;
}

EmotionDistribution EmotionDistribution::validated(LabelTaxonomy taxonomy,
                                                   std::vector<double> probs) {
  if (static_cast<int>(probs.size()) != taxonomy.k()) {
    throw TaxonomyError("distribution length " + std::to_string(probs.size()) +
                        " does not match taxonomy k=" +
                        std::to_string(taxonomy.k()));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw InvalidInputError("probability out of [0,1]: " +
                              std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InvalidInputError("probabilities sum to " + std::to_string(sum) +
                            ", expected 1 within 1e-6");
  }
  EmotionDistribution d;
  d.taxonomy_ = std::move(taxonomy);
  d.probs_ = std::move(probs);
  return d;
}

int EmotionDistribution::argmax() const {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs_.size()); ++i) {
    if (probs_[static_cast<size_t>(i)] > probs_[static_cast<size_t>(best)]) {
      best = i;
    }
  }
  return best;
}

EmotionDistribution make_distribution(const LabelTaxonomy& taxonomy,
                                      const std::vector<double>& raw) {
  if (static_cast<int>(raw.size()) != taxonomy.k()) {
    throw TaxonomyError("raw vector length " + std::to_string(raw.size()) +
                        " does not match taxonomy k=" +
                        std::to_string(taxonomy.k()));
  }
  double sum = 0.0;
  for (double x : raw) {
    if (!std::isfinite(x) || x < 0.0) {
      throw InvalidInputError("raw entries must be finite and nonnegative");
    }
    sum += x;
  }
  if (sum <= 0.0) {
    throw InvalidInputError("raw entries sum to zero; cannot normalize");
  }
  std::vector<double> probs(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) probs[i] = raw[i] / sum;
  return EmotionDistribution::validated(taxonomy, std::move(probs));
}

LandmarkFrame validate_landmark_frame(LandmarkFrame frame) {
  if (frame.points.size() != kLandmarkCount ||
      frame.visibility.size() != kLandmarkCount) {
    throw SchemaError("landmark frame needs exactly " +
                      std::to_string(kLandmarkCount) + " points, got " +
                      std::to_string(frame.points.size()));
  }
  if (!(frame.frame_width > 0.0) || !(frame.frame_height > 0.0)) {
    throw SchemaError("frame dimensions must be positive");
  }
  for (int i = 0; i < kLandmarkCount; ++i) {
    const Point2& p = frame.points[static_cast<size_t>(i)];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw RangeError("non-finite coordinate at landmark " +
                       std::to_string(i));
    }
    if (frame.visibility[static_cast<size_t>(i)]) {
      if (p.x < 0.0 || p.x > frame.frame_width || p.y < 0.0 ||
          p.y > frame.frame_height) {
        std::ostringstream os;
        os << "visible landmark " << i << " at (" << p.x << ", " << p.y
           << ") outside frame " << frame.frame_width << "x"
           << frame.frame_height;
        throw RangeError(os.str());
      }
    }
  }
  return frame;
}

const char* to_string(PatchKind kind) {
  switch (kind) {
    case PatchKind::face: return "face";
    case PatchKind::body: return "body";
    case PatchKind::background: return "background";
    case PatchKind::full: return "full";
  }
  return "?";
}

void ImagePatch::validate() const {
  if (channels != 1 && channels != 3) {
    throw ShapeError("image channels must be 1 or 3, got " +
                     std::to_string(channels));
  }
  if (height <= 0 || width <= 0) {
    throw ShapeError("image extents must be positive, got " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  if (pixels.size() != static_cast<size_t>(channels) * height * width) {
    throw ShapeError("pixel count " + std::to_string(pixels.size()) +
                     " does not match " + std::to_string(channels) + "x" +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw RangeError("pixel value " + std::to_string(v) +
                       " outside [0,1]");
    }
  }
}

ImagePatch make_patch(int channels, int height, int width, PatchKind kind,
                      double fill) {
  ImagePatch p;
  p.channels = channels;
  p.height = height;
  p.width = width;
  p.kind = kind;
  p.pixels.assign(static_cast<size_t>(channels) * height * width, fill);
  p.validate();
  return p;
}

void FrameSegment::validate() const {
  if (frames.empty()) throw ShapeError("segment has no frames");
  const ImagePatch& first = frames.front();
  for (const auto& f : frames) {
    if (f.channels != first.channels || f.height != first.height ||
        f.width != first.width) {
      std::ostringstream os;
      os << "mixed frame shapes in segment: expected " << first.channels << "x"
         << first.height << "x" << first.width << ", got " << f.channels << "x"
         << f.height << "x" << f.width;
      throw ShapeError(os.str());
    }
  }
}

const std::vector<Modality>& all_modalities() {
  static const std::vector<Modality> order = {
      Modality::face, Modality::posture, Modality::gait, Modality::context};
  return order;
}

const char* to_string(Modality m) {
  switch (m) {
    case Modality::face: return "face";
    case Modality::posture: return "posture";
    case Modality::gait: return "gait";
    case Modality::context: return "context";
  }
  return "?";
}

Modality modality_from_string(const std::string& name) {
  for (Modality m : all_modalities()) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown modality '" + name + "'");
}

void ModalityFeatures::validate(int expected_dim) const {
  if (expected_dim >= 0 && dim() != expected_dim) {
    throw ShapeError(std::string(to_string(source)) + " features: expected " +
                     std::to_string(expected_dim) + " values, got " +
                     std::to_string(dim()));
  }
  if (!all_finite(values)) {
    throw InvalidInputError(std::string(to_string(source)) +
                            " features contain a non-finite value");
  }
}

void SubjectObservation::validate() const {
  if (!has_any_input()) {
    throw InvalidInputError("observation carries no modality input");
  }
}

}  // namespace emorec
