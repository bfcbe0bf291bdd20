#include "emorec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "emorec/image_io.hpp"
#include "emorec/image_ops.hpp"
#include "emorec/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace emorec {

const char* to_string(Split split) {
  return split == Split::train ? "train" : "test";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw ParseError("unknown split '" + name + "'");
}

std::vector<size_t> DatasetManifest::indices_of(Split split) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == split) out.push_back(i);
  }
  return out;
}

namespace {

std::string resolve(const fs::path& base, const std::string& rel) {
  const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  if (!fs::exists(p)) {
    throw ParseError("manifest references missing file '" + p.string() + "'");
  }
  return p.string();
}

void apply_box(ImagePatch& patch, const json& box, const char* what) {
  if (!box.is_array() || box.size() != 4) {
    throw ParseError(std::string(what) + " must be [x, y, w, h]");
  }
  mean_fill_rect(patch, box[0].get<int>(), box[1].get<int>(),
                 box[2].get<int>(), box[3].get<int>());
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("manifest '" + path + "': " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();

  DatasetManifest manifest;
  try {
    manifest.taxonomy = LabelTaxonomy(j.at("taxonomy").get<std::vector<std::string>>());
    for (const auto& rec : j.at("samples")) {
      Sample s;
      s.label = manifest.taxonomy.id_of(rec.at("label").get<std::string>());
      s.split = split_from_string(rec.value("split", std::string("train")));
      s.obs.subject_id = rec.value("subject_id", std::string{});
      s.obs.zone_id = rec.value("zone_id", std::string{});
      s.obs.timestamp = rec.value("timestamp", 0.0);
      s.scene_id = rec.value("scene_id", std::string{});

      if (rec.contains("face")) {
        s.obs.face = read_netpbm(resolve(base, rec.at("face").get<std::string>()),
                                 PatchKind::face);
      }
      if (rec.contains("body")) {
        ImagePatch body = read_netpbm(
            resolve(base, rec.at("body").get<std::string>()), PatchKind::body);
        if (rec.contains("face_box")) apply_box(body, rec.at("face_box"), "face_box");
        s.obs.body = std::move(body);
      }
      if (rec.contains("landmarks")) {
        s.obs.landmarks = load_landmark_stream(
            resolve(base, rec.at("landmarks").get<std::string>()));
      }
      if (rec.contains("segment")) {
        FrameSegment segment;
        for (const auto& frame_path : rec.at("segment")) {
          segment.frames.push_back(read_netpbm(
              resolve(base, frame_path.get<std::string>()), PatchKind::body));
        }
        segment.validate();
        s.obs.segment = std::move(segment);
      }
      if (rec.contains("background")) {
        ImagePatch bg = read_netpbm(
            resolve(base, rec.at("background").get<std::string>()),
            PatchKind::background);
        if (rec.contains("subject_box")) {
          apply_box(bg, rec.at("subject_box"), "subject_box");
        }
        s.obs.background = std::move(bg);
      }
      s.obs.validate();
      manifest.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError("manifest '" + path + "': " + e.what());
  }
  return manifest;
}

std::string write_manifest_tree(const DatasetManifest& manifest,
                                const std::string& directory) {
  const fs::path root(directory);
  fs::create_directories(root);
  json samples = json::array();
  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    const Sample& s = manifest.samples[i];
    char tag[16];
    std::snprintf(tag, sizeof tag, "%05zu", i);
    json rec;
    rec["label"] = manifest.taxonomy.name(s.label);
    rec["split"] = to_string(s.split);
    if (!s.obs.subject_id.empty()) rec["subject_id"] = s.obs.subject_id;
    if (!s.obs.zone_id.empty()) rec["zone_id"] = s.obs.zone_id;
    rec["timestamp"] = s.obs.timestamp;
    if (!s.scene_id.empty()) rec["scene_id"] = s.scene_id;

    const auto ext = [](const ImagePatch& p) {
      return p.channels == 1 ? ".pgm" : ".ppm";
    };
    if (s.obs.face) {
      const std::string rel = std::string("faces/") + tag + ext(*s.obs.face);
      fs::create_directories(root / "faces");
      write_netpbm(*s.obs.face, (root / rel).string());
      rec["face"] = rel;
    }
    if (s.obs.body) {
      const std::string rel = std::string("bodies/") + tag + ext(*s.obs.body);
      fs::create_directories(root / "bodies");
      write_netpbm(*s.obs.body, (root / rel).string());
      rec["body"] = rel;
    }
    if (s.obs.landmarks) {
      const std::string rel = std::string("landmarks/") + tag + ".jsonl";
      fs::create_directories(root / "landmarks");
      write_landmark_stream(*s.obs.landmarks, (root / rel).string());
      rec["landmarks"] = rel;
    }
    if (s.obs.segment) {
      fs::create_directories(root / "segments");
      json frames = json::array();
      for (size_t f = 0; f < s.obs.segment->frames.size(); ++f) {
        char ftag[16];
        std::snprintf(ftag, sizeof ftag, "_%02zu", f);
        const std::string rel = std::string("segments/") + tag + ftag +
                                ext(s.obs.segment->frames[f]);
        write_netpbm(s.obs.segment->frames[f], (root / rel).string());
        frames.push_back(rel);
      }
      rec["segment"] = std::move(frames);
    }
    if (s.obs.background) {
      const std::string rel =
          std::string("backgrounds/") + tag + ext(*s.obs.background);
      fs::create_directories(root / "backgrounds");
      write_netpbm(*s.obs.background, (root / rel).string());
      rec["background"] = rel;
    }
    samples.push_back(std::move(rec));
  }
  json j;
  std::vector<std::string> names;
  for (const auto& l : manifest.taxonomy.labels()) names.push_back(l.name);
  j["taxonomy"] = names;
  j["samples"] = std::move(samples);

  const std::string manifest_path = (root / "manifest.json").string();
  std::ofstream out(manifest_path);
  out << j.dump(2) << "\n";
  if (!out) throw ParseError("cannot write manifest '" + manifest_path + "'");
  return manifest_path;
}

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

DatasetManifest load_fer_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open csv '" + path + "'");

  DatasetManifest manifest;
  manifest.taxonomy = LabelTaxonomy::seven_class();
  // Source convention 0..6 mapped onto the 7-class taxonomy by name.
  const int label_map[7] = {
      manifest.taxonomy.id_of("Angry"),    manifest.taxonomy.id_of("Disgust"),
      manifest.taxonomy.id_of("Fear"),     manifest.taxonomy.id_of("Happy"),
      manifest.taxonomy.id_of("Sad"),      manifest.taxonomy.id_of("Surprise"),
      manifest.taxonomy.id_of("Neutral")};

  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (t.rfind("emotion", 0) == 0) continue;  // header row
    }
    const auto where = "csv line " + std::to_string(line_no);

    const size_t c1 = t.find(',');
    const size_t c2 = t.rfind(',');
    if (c1 == std::string::npos || c2 == c1) {
      throw ParseError(where + ": expected emotion,pixels,usage");
    }
    int fer_label;
    try {
      fer_label = std::stoi(trim(t.substr(0, c1)));
    } catch (const std::exception&) {
      throw ParseError(where + ": emotion index is not an integer");
    }
    if (fer_label < 0 || fer_label > 6) {
      throw ParseError(where + ": emotion index " + std::to_string(fer_label) +
                       " outside 0..6");
    }

    ImagePatch face = make_patch(1, 48, 48, PatchKind::face);
    std::istringstream pix(t.substr(c1 + 1, c2 - c1 - 1));
    size_t count = 0;
    std::string tok;
    while (pix >> tok) {
      int value;
      try {
        value = std::stoi(tok);
      } catch (const std::exception&) {
        throw ParseError(where + ": pixel value '" + tok + "' is not an integer");
      }
      if (value < 0 || value > 255) {
        throw ParseError(where + ": pixel value " + std::to_string(value) +
                         " outside 0..255");
      }
      if (count < face.pixels.size()) face.pixels[count] = value / 255.0;
      ++count;
    }
    if (count != face.pixels.size()) {
      throw SchemaError(where + ": expected 2304 pixels, got " +
                        std::to_string(count));
    }

    Sample s;
    s.label = label_map[fer_label];
    s.split = trim(t.substr(c2 + 1)) == "Training" ? Split::train : Split::test;
    s.obs.face = std::move(face);
    manifest.samples.push_back(std::move(s));
  }
  return manifest;
}

std::vector<LandmarkFrame> load_landmark_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open landmark stream '" + path + "'");
  std::vector<LandmarkFrame> frames;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where =
        "landmark stream '" + path + "' line " + std::to_string(line_no);
    LandmarkFrame frame;
    try {
      const json j = json::parse(line);
      frame.subject_id = j.value("subject_id", std::string{});
      frame.zone_id = j.value("zone_id", std::string{});
      frame.timestamp = j.value("timestamp", 0.0);
      frame.frame_width = j.at("frame_w").get<double>();
      frame.frame_height = j.at("frame_h").get<double>();
      for (const auto& p : j.at("points")) {
        if (!p.is_array() || p.size() != 3) {
          throw SchemaError(where + ": point must be [x, y, visible]");
        }
        frame.points.push_back({p[0].get<double>(), p[1].get<double>()});
        frame.visibility.push_back(p[2].get<bool>());
      }
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    try {
      frames.push_back(validate_landmark_frame(std::move(frame)));
    } catch (const Error& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return frames;
}

void write_landmark_stream(const std::vector<LandmarkFrame>& frames,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write landmark stream '" + path + "'");
  for (const auto& f : frames) {
    json j;
    j["subject_id"] = f.subject_id;
    j["zone_id"] = f.zone_id;
    j["timestamp"] = f.timestamp;
    j["frame_w"] = f.frame_width;
    j["frame_h"] = f.frame_height;
    json points = json::array();
    for (size_t i = 0; i < f.points.size(); ++i) {
      points.push_back({f.points[i].x, f.points[i].y,
                        static_cast<bool>(f.visibility[i])});
    }
    j["points"] = std::move(points);
    out << j.dump() << "\n";
  }
  if (!out) throw IntegrityError("failed writing '" + path + "'");
}

void assign_split_fraction(DatasetManifest& manifest, double train_fraction,
                           uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw InvalidInputError("train fraction must lie in [0,1]");
  }
  std::vector<size_t> order(manifest.samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.next_u64() % i]);
  }
  const size_t n_train = static_cast<size_t>(
      std::llround(train_fraction * static_cast<double>(order.size())));
  for (size_t rank = 0; rank < order.size(); ++rank) {
    manifest.samples[order[rank]].split =
        rank < n_train ? Split::train : Split::test;
  }
}

std::vector<LosoSplit> make_loso_splits(const DatasetManifest& manifest) {
  std::set<std::string> subjects;
  for (const auto& s : manifest.samples) {
    if (s.obs.subject_id.empty()) {
      throw InvalidInputError("leave-one-subject-out needs a subject_id on "
                              "every sample");
    }
    subjects.insert(s.obs.subject_id);
  }
  std::vector<LosoSplit> splits;
  for (const auto& held_out : subjects) {
    LosoSplit split;
    split.held_out_subject = held_out;
    split.manifest.taxonomy = manifest.taxonomy;
    split.manifest.samples = manifest.samples;
    for (auto& s : split.manifest.samples) {
      s.split = s.obs.subject_id == held_out ? Split::test : Split::train;
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

ImagePatch banded_patch(int channels, int h, int w, PatchKind kind, int band,
                        int bands, bool vertical, Rng& rng) {
  ImagePatch p = make_patch(channels, h, w, kind);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int pos = vertical ? x * bands / w : y * bands / h;
        const double base = pos == band ? 0.82 : 0.18;
        p.at(c, y, x) = clamp01(base + rng.uniform(-0.08, 0.08));
      }
    }
  }
  return p;
}

LandmarkFrame synthetic_pose(int cls, int k, const std::string& subject,
                             const std::string& zone, double timestamp,
                             Rng& rng) {
  const double t = k > 1 ? static_cast<double>(cls) / (k - 1) : 0.0;
  const auto jit = [&rng]() { return rng.uniform(-0.8, 0.8); };

  LandmarkFrame f;
  f.frame_width = 100.0;
  f.frame_height = 100.0;
  f.subject_id = subject;
  f.zone_id = zone;
  f.timestamp = timestamp;
  f.points.resize(kLandmarkCount);
  f.visibility.assign(kLandmarkCount, true);

  const pose::SkeletonSchema s;
  auto set = [&](int idx, double x, double y) {
    f.points[static_cast<size_t>(idx)] = {std::clamp(x + jit(), 2.0, 98.0),
                                          std::clamp(y + jit(), 2.0, 98.0)};
  };
  set(s.head_top, 50, 8);
  set(s.head, 50, 15);
  set(s.neck, 50, 24);
  set(s.chest, 50, 32);
  set(s.back, 50, 40);
  set(s.root, 50, 48);
  set(s.r_shoulder, 38, 26);
  set(s.l_shoulder, 62, 26);
  // Arms sweep from hanging (t=0) to overhead (t=1); legs spread with t.
  set(s.r_elbow, 36 - 4 * t, 38 - 16 * t);
  set(s.l_elbow, 64 + 4 * t, 38 - 16 * t);
  set(s.r_wrist, 36 - 7 * t, 50 - 34 * t);
  set(s.l_wrist, 64 + 7 * t, 50 - 34 * t);
  set(s.r_hand, 36 - 8 * t, 53 - 40 * t);
  set(s.l_hand, 64 + 8 * t, 53 - 40 * t);
  set(s.r_hip, 44, 52);
  set(s.l_hip, 56, 52);
  set(s.r_knee, 43 - 5 * t, 71);
  set(s.l_knee, 57 + 5 * t, 71);
  set(s.r_foot, 42 - 9 * t, 92);
  set(s.l_foot, 58 + 9 * t, 92);
  return validate_landmark_frame(std::move(f));
}

FrameSegment synthetic_segment(const GaitNetConfig& cfg, int cls, int k,
                               Rng& rng) {
  FrameSegment segment;
  const double angle = 2.0 * std::numbers::pi * cls / std::max(1, k);
  const double cx = cfg.width / 2.0, cy = cfg.height / 2.0;
  const double radius = std::min(cfg.width, cfg.height) * 0.3;
  const int blob = std::max(2, cfg.height / 4);
  for (int fi = 0; fi < cfg.frames; ++fi) {
    ImagePatch frame = make_patch(cfg.channels, cfg.height, cfg.width,
                                  PatchKind::body);
    const double phase =
        cfg.frames > 1 ? static_cast<double>(fi) / (cfg.frames - 1) - 0.5 : 0.0;
    const int bx = static_cast<int>(cx + 2.0 * radius * phase * std::cos(angle));
    const int by = static_cast<int>(cy + 2.0 * radius * phase * std::sin(angle));
    for (int c = 0; c < cfg.channels; ++c) {
      for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
          const bool inside = std::abs(x - bx) <= blob / 2 &&
                              std::abs(y - by) <= blob / 2;
          frame.at(c, y, x) =
              clamp01((inside ? 0.85 : 0.12) + rng.uniform(-0.05, 0.05));
        }
      }
    }
    segment.frames.push_back(std::move(frame));
  }
  return segment;
}

}  // namespace

DatasetManifest make_synthetic_manifest(const PipelineConfig& config,
                                        int sample_count, uint64_t seed,
                                        double train_fraction) {
  if (sample_count <= 0) {
    throw InvalidInputError("synthetic dataset needs a positive sample count");
  }
  DatasetManifest manifest;
  manifest.taxonomy = config.taxonomy;
  const int k = config.taxonomy.k();
  Rng rng(derive_seed(seed, "synthetic"));

  for (int i = 0; i < sample_count; ++i) {
    const int cls = i % k;
    Sample s;
    s.label = cls;
    s.obs.subject_id = "s" + std::to_string(i % 10);
    s.obs.zone_id = "z" + std::to_string(i % 2);
    s.obs.timestamp = 17.0 * i;
    s.scene_id = "scene" + std::to_string(i % 3);

    for (Modality m : config.active) {
      switch (m) {
        case Modality::face:
          s.obs.face = banded_patch(config.face.in_channels, config.face.height,
                                    config.face.width, PatchKind::face, cls, k,
                                    /*vertical=*/true, rng);
          break;
        case Modality::posture:
          s.obs.body = banded_patch(config.posture.channels,
                                    config.posture.height, config.posture.width,
                                    PatchKind::body, cls, k,
                                    /*vertical=*/false, rng);
          s.obs.landmarks = std::vector<LandmarkFrame>{
              synthetic_pose(cls, k, s.obs.subject_id, s.obs.zone_id,
                             s.obs.timestamp, rng)};
          break;
        case Modality::gait:
          s.obs.segment = synthetic_segment(config.gait, cls, k, rng);
          break;
        case Modality::context: {
          ImagePatch bg = make_patch(config.context.channels,
                                     config.context.height,
                                     config.context.width, PatchKind::background);
          const double level = (cls + 1.0) / (k + 1.0);
          for (double& v : bg.pixels) v = clamp01(level + rng.uniform(-0.04, 0.04));
          s.obs.background = std::move(bg);
          break;
        }
      }
    }
    manifest.samples.push_back(std::move(s));
  }
  if (train_fraction < 1.0) {
    assign_split_fraction(manifest, train_fraction, derive_seed(seed, "split"));
  }
  return manifest;
}

}  // namespace emorec
