#ifndef EMOREC_TRAIN_HPP
#define EMOREC_TRAIN_HPP

#include <string>
#include <vector>

#include "emorec/dataset.hpp"
#include "emorec/fusion.hpp"

namespace emorec {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::string optimizer = "adam";  // "adam" or "sgd"
  int batch_size = 8;
  int epochs = 20;
  uint64_t seed = 7;
  /// When positive, each phase stops once its train accuracy reaches this.
  double target_accuracy = -1.0;

  void validate() const;
};

struct PhaseReport {
  std::string phase;            // "face", ..., "fused"
  std::vector<double> losses;   // mean cross-entropy per epoch
  int epochs_run = 0;
  double final_train_accuracy = 0.0;
};

struct TrainReport {
  std::vector<PhaseReport> phases;

  const PhaseReport& phase(const std::string& name) const;
};

/// Trains each active module stand-alone (extractor plus its head) on the
/// train split, then, with two or more modalities, the fused classifier
/// end-to-end. Checks up front that every train sample carries every active
/// modality (MissingModalityError before any epoch) and that the manifest
/// taxonomy matches the pipeline's. Fixed seeds reproduce the loss curves
/// exactly.
TrainReport train(Pipeline& pipeline, const DatasetManifest& manifest,
                  const TrainConfig& config);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::vector<double>> confusion;
  double map = 0.0;
  std::vector<int> predictions;
  std::vector<int> labels;
  std::vector<std::vector<double>> scores;  // fused softmax scores per sample
};

/// Runs the fused classifier over one split and computes the metrics.
EvalResult evaluate(const Pipeline& pipeline, const DatasetManifest& manifest,
                    Split split);

/// Train accuracy of one stand-alone module over one split.
double evaluate_modality(const Pipeline& pipeline,
                         const DatasetManifest& manifest, Split split,
                         Modality modality);

}  // namespace emorec

#endif  // EMOREC_TRAIN_HPP
