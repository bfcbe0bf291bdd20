#ifndef EMOREC_DATASET_HPP
#define EMOREC_DATASET_HPP

#include <string>
#include <vector>

#include "emorec/core.hpp"
#include "emorec/fusion.hpp"

namespace emorec {

enum class Split { train, test };

const char* to_string(Split split);
Split split_from_string(const std::string& name);

/// One dataset record with its modality inputs loaded into memory.
struct Sample {
  SubjectObservation obs;
  int label = 0;
  Split split = Split::train;
  std::string scene_id;  // optional key into an annotation provider
};

struct DatasetManifest {
  LabelTaxonomy taxonomy;
  std::vector<Sample> samples;

  std::vector<size_t> indices_of(Split split) const;
  size_t count_of(Split split) const { return indices_of(split).size(); }
};

/// Loads a JSON manifest:
///   {"taxonomy": ["Neutral", ...],
///    "samples": [{"label": "Happy", "split": "train", "subject_id": "s1",
///                 "zone_id": "z0", "timestamp": 3.5, "scene_id": "scene01",
///                 "face": "faces/a.pgm",
///                 "body": "bodies/a.ppm", "face_box": [x, y, w, h],
///                 "landmarks": "landmarks/a.jsonl",
///                 "segment": ["seg/a_00.ppm", ...],
///                 "background": "bg/a.ppm", "subject_box": [x, y, w, h]}]}
/// Paths are relative to the manifest's directory; every referenced file
/// must exist. `face_box` is mean-filled out of the body image and
/// `subject_box` out of the background at load time.
DatasetManifest load_manifest(const std::string& path);

/// Writes a manifest and all its modality files (netpbm images, landmark
/// streams) under `directory`, returning the manifest path.
std::string write_manifest_tree(const DatasetManifest& manifest,
                                const std::string& directory);

/// Loads the public face-expression CSV convention: header
/// `emotion,pixels,usage`, then one row per 48x48 grayscale image with 2304
/// space-separated values in [0,255]. Label indices follow the dataset
/// convention 0=Angry 1=Disgust 2=Fear 3=Happy 4=Sad 5=Surprise 6=Neutral;
/// usage Training maps to the train split, everything else to test.
DatasetManifest load_fer_csv(const std::string& path);

/// Line-delimited JSON landmark records:
///   {"subject_id": "s", "zone_id": "z", "timestamp": 1.0,
///    "frame_w": 100, "frame_h": 100, "points": [[x, y, visible] x 20]}
std::vector<LandmarkFrame> load_landmark_stream(const std::string& path);
void write_landmark_stream(const std::vector<LandmarkFrame>& frames,
                           const std::string& path);

/// Reassigns splits at random with the given train fraction.
void assign_split_fraction(DatasetManifest& manifest, double train_fraction,
                           uint64_t seed);

struct LosoSplit {
  std::string held_out_subject;
  DatasetManifest manifest;  // held-out subject = test, everyone else = train
};

/// One split per distinct subject; each is subject-disjoint between train
/// and test. Throws InvalidInputError when a sample lacks a subject id.
std::vector<LosoSplit> make_loso_splits(const DatasetManifest& manifest);

/// Deterministic synthetic multimodal dataset shaped for the given pipeline
/// config: per-class separable patterns in every modality.
DatasetManifest make_synthetic_manifest(const PipelineConfig& config,
                                        int sample_count, uint64_t seed,
                                        double train_fraction = 1.0);

}  // namespace emorec

#endif  // EMOREC_DATASET_HPP
