#include "emorec/situational.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace emorec {

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string phrase_of(const std::string& anp) {
  std::string s = anp;
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::string fmt_score(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

SceneAnnotation make_scene_annotation(std::string place_category,
                                      std::vector<std::string> attributes,
                                      std::vector<AnpDetection> anps) {
  for (const auto& anp : anps) {
    if (!(anp.confidence >= 0.0 && anp.confidence <= 1.0)) {
      throw RangeError("ANP confidence " + std::to_string(anp.confidence) +
                       " outside [0,1] for '" + anp.phrase + "'");
    }
  }
  std::stable_sort(anps.begin(), anps.end(),
                   [](const AnpDetection& a, const AnpDetection& b) {
                     return a.confidence > b.confidence;
                   });
  return {std::move(place_category), std::move(attributes), std::move(anps)};
}

FileAnnotationProvider FileAnnotationProvider::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open annotation file '" + path + "'");
  FileAnnotationProvider provider;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      std::vector<AnpDetection> anps;
      for (const auto& a : j.value("anps", nlohmann::json::array())) {
        anps.push_back({a.at("phrase").get<std::string>(),
                        a.at("confidence").get<double>()});
      }
      provider.records_[j.at("image_id").get<std::string>()] =
          make_scene_annotation(
              j.value("place_category", std::string{}),
              j.value("attributes", std::vector<std::string>{}),
              std::move(anps));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("annotation file '" + path + "' line " +
                       std::to_string(line_no) + ": " + e.what());
    }
  }
  return provider;
}

SceneAnnotation FileAnnotationProvider::annotate(
    const std::string& image_id) const {
  auto it = records_.find(image_id);
  if (it == records_.end()) {
    throw MissingAnnotationError("no annotation for image id '" + image_id +
                                 "'");
  }
  return it->second;
}

AverageEmotionTracker::AverageEmotionTracker(LabelTaxonomy taxonomy,
                                             double bucket_seconds)
    : taxonomy_(std::move(taxonomy)), bucket_seconds_(bucket_seconds) {
  if (!(bucket_seconds > 0.0)) {
    throw ConfigError("bucket width must be positive");
  }
}

int64_t AverageEmotionTracker::bucket_of(double timestamp) const {
  return static_cast<int64_t>(std::floor(timestamp / bucket_seconds_));
}

void AverageEmotionTracker::record(const EmotionObservationEvent& event) {
  const int id = event.label.id;
  if (id < 0 || id >= taxonomy_.k() ||
      taxonomy_.name(id) != event.label.name) {
    throw TaxonomyError("event label '" + event.label.name + "' (id " +
                        std::to_string(id) + ") not in tracker taxonomy");
  }
  auto& row = rows_[{event.zone_id, bucket_of(event.timestamp)}];
  if (row.empty()) row.assign(static_cast<size_t>(taxonomy_.k()), 0);
  ++row[static_cast<size_t>(id)];
  ++total_events_;
}

std::optional<std::vector<int64_t>> AverageEmotionTracker::counts(
    const std::string& zone_id, int64_t bucket) const {
  auto it = rows_.find({zone_id, bucket});
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::vector<double>> AverageEmotionTracker::average_scores(
    const std::string& zone_id, int64_t bucket) const {
  auto it = rows_.find({zone_id, bucket});
  if (it == rows_.end()) return std::nullopt;
  int64_t total = 0;
  for (int64_t c : it->second) total += c;
  if (total == 0) return std::nullopt;
  std::vector<double> scores(it->second.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    scores[i] = static_cast<double>(it->second[i]) / static_cast<double>(total);
  }
  return scores;
}

std::vector<AverageEmotionTracker::Row> AverageEmotionTracker::rows() const {
  std::vector<Row> out;
  out.reserve(rows_.size());
  for (const auto& [key, counts] : rows_) {
    out.push_back({key.first, key.second, counts});
  }
  return out;
}

AnomalyResult detect_anomaly(const std::vector<EmotionDistribution>& outputs,
                             double threshold) {
  if (outputs.size() < 2) {
    throw InsufficientModalityError(
        "anomaly detection needs at least 2 modality outputs, got " +
        std::to_string(outputs.size()));
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidInputError("anomaly threshold must lie in [0,1]");
  }
  const LabelTaxonomy& taxonomy = outputs.front().taxonomy();
  for (const auto& d : outputs) {
    if (!(d.taxonomy() == taxonomy)) {
      throw TaxonomyError("anomaly detection across mixed taxonomies");
    }
  }
  double score = 0.0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    for (size_t j = i + 1; j < outputs.size(); ++j) {
      double tv = 0.0;
      const auto& p = outputs[i].probs();
      const auto& q = outputs[j].probs();
      for (size_t e = 0; e < p.size(); ++e) tv += std::abs(p[e] - q[e]);
      score = std::max(score, tv / 2.0);
    }
  }
  return {score > threshold, score};
}

ExplanationRecord render_explanation(const ExplanationInputs& inputs) {
  if (inputs.fused.name.empty()) {
    throw InvalidInputError("explanation needs the fused label");
  }

  const auto label_of = [&](Modality m) -> std::optional<std::string> {
    auto it = inputs.modality_labels.find(m);
    if (it == inputs.modality_labels.end()) return std::nullopt;
    return lowercase(it->second.name);
  };
  const std::optional<std::string> face = label_of(Modality::face);
  const std::optional<std::string> posture = label_of(Modality::posture);
  const std::optional<std::string> gait = label_of(Modality::gait);

  std::string identity;  // "is <anp> in a <place>"
  if (inputs.annotation) {
    const SceneAnnotation& a = *inputs.annotation;
    if (!a.anps.empty()) identity = "is " + phrase_of(a.anps.front().phrase);
    if (!a.place_category.empty()) {
      identity += identity.empty() ? "is in a " : " in a ";
      identity += a.place_category;
    }
  }

  std::string expression;
  if (face) expression = "has a " + *face + " facial expression";
  if (posture) {
    expression += expression.empty() ? "has " : " and ";
    expression += "a body posture showing " + *posture;
  }

  std::string text = "the subject";
  if (identity.empty() && expression.empty()) {
    text += " appears " + lowercase(inputs.fused.name);
  } else {
    if (!identity.empty()) text += " " + identity;
    if (!expression.empty()) {
      text += identity.empty() ? " " : ", ";
      text += expression;
    }
  }
  if (gait) text += "; gait indicates " + *gait;
  if (inputs.average_scores) {
    if (inputs.average_scores->size() !=
        static_cast<size_t>(inputs.taxonomy.k())) {
      throw TaxonomyError("average scores do not match the taxonomy");
    }
    const auto& s = *inputs.average_scores;
    size_t best = 0;
    for (size_t i = 1; i < s.size(); ++i) {
      if (s[i] > s[best]) best = i;
    }
    text += "; surrounding average emotion is " +
            lowercase(inputs.taxonomy.name(static_cast<int>(best))) + " (" +
            fmt_score(s[best]) + ")";
  }
  if (inputs.anomaly.flag) {
    text += "; WARNING: modality disagreement " + fmt_score(inputs.anomaly.score);
  }
  text += ".";

  ExplanationRecord record;
  record.fused = inputs.fused;
  record.modality_labels = inputs.modality_labels;
  record.annotation = inputs.annotation;
  record.average_scores = inputs.average_scores;
  record.anomaly = inputs.anomaly;
  record.text = std::move(text);
  return record;
}

}  // namespace emorec
