#include "emorec/ablation.hpp"

namespace emorec {

namespace {

std::string combo_name(const std::vector<Modality>& active) {
  std::string name;
  for (Modality m : active) {
    if (!name.empty()) name += "+";
    switch (m) {
      case Modality::face: name += "F"; break;
      case Modality::posture: name += "P"; break;
      case Modality::gait: name += "G"; break;
      case Modality::context: name += "C"; break;
    }
  }
  return name;
}

}  // namespace

std::vector<AblationRow> run_ablation(const DatasetManifest& manifest,
                                      const PipelineConfig& base,
                                      const TrainConfig& train_config) {
  const std::vector<std::vector<Modality>> combos = {
      {Modality::face},
      {Modality::posture},
      {Modality::gait},
      {Modality::face, Modality::posture},
      {Modality::face, Modality::gait},
      {Modality::face, Modality::posture, Modality::gait},
  };

  std::vector<AblationRow> rows;
  for (const auto& combo : combos) {
    for (bool with_context : {false, true}) {
      std::vector<Modality> active = combo;
      if (with_context) active.push_back(Modality::context);

      AblationRow row;
      row.active = active;
      row.with_context = with_context;
      row.name = combo_name(active);
      try {
        PipelineConfig config = base;
        config.active = active;
        Pipeline pipeline(config);
        train(pipeline, manifest, train_config);
        row.accuracy = evaluate(pipeline, manifest, Split::test).accuracy;
      } catch (const Error& e) {
        throw Error("ablation combination " + row.name + ": " + e.what());
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace emorec
