#ifndef EMOREC_ABLATION_HPP
#define EMOREC_ABLATION_HPP

#include <string>
#include <vector>

#include "emorec/train.hpp"

namespace emorec {

struct AblationRow {
  std::string name;               // "F", "F+C", "F+P+G+C", ...
  std::vector<Modality> active;   // modality set actually trained
  bool with_context = false;
  double accuracy = 0.0;
};

/// Trains and evaluates the six modality combinations {F, P, G, F+P, F+G,
/// F+P+G}, each without and with the context module: exactly 12 rows. Every
/// run starts from a fresh pipeline seeded with the base config's seed, so
/// a row reproduces an independent single-configuration run.
std::vector<AblationRow> run_ablation(const DatasetManifest& manifest,
                                      const PipelineConfig& base,
                                      const TrainConfig& train_config);

}  // namespace emorec

#endif  // EMOREC_ABLATION_HPP
