// Command-line front end: synth, train, eval, infer, explain, ablate, bench.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "emorec/ablation.hpp"
#include "emorec/checkpoint.hpp"
#include "emorec/dataset.hpp"
#include "emorec/latency.hpp"
#include "emorec/situational.hpp"
#include "emorec/train.hpp"

using namespace emorec;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Run settings: a key = value config file plus command-line overrides.
// ---------------------------------------------------------------------------

struct RunSettings {
  std::string taxonomy = "four";      // four | seven
  std::string modalities = "face,posture,gait,context";
  std::string scale = "mini";         // mini | default
  uint64_t seed = 7;
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double target_accuracy = -1.0;
  double train_fraction = 0.8;
  double bucket_seconds = 60.0;
  double anomaly_threshold = kDefaultAnomalyThreshold;
};

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void load_settings_file(RunSettings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config '" + path + "' line " + std::to_string(line_no) +
                       ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    try {
      if (key == "taxonomy") s.taxonomy = value;
      else if (key == "modalities") s.modalities = value;
      else if (key == "scale") s.scale = value;
      else if (key == "seed") s.seed = std::stoull(value);
      else if (key == "epochs") s.epochs = std::stoi(value);
      else if (key == "batch_size") s.batch_size = std::stoi(value);
      else if (key == "learning_rate") s.learning_rate = std::stod(value);
      else if (key == "target_accuracy") s.target_accuracy = std::stod(value);
      else if (key == "train_fraction") s.train_fraction = std::stod(value);
      else if (key == "bucket_seconds") s.bucket_seconds = std::stod(value);
      else if (key == "anomaly_threshold") s.anomaly_threshold = std::stod(value);
      else {
        throw ParseError("config '" + path + "' line " +
                         std::to_string(line_no) + ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("config '" + path + "' line " + std::to_string(line_no) +
                       ": bad value for '" + key + "'");
    }
  }
}

LabelTaxonomy taxonomy_of(const RunSettings& s) {
  if (s.taxonomy == "four") return LabelTaxonomy::four_class();
  if (s.taxonomy == "seven") return LabelTaxonomy::seven_class();
  throw ConfigError("taxonomy must be 'four' or 'seven'");
}

std::vector<Modality> modalities_of(const RunSettings& s) {
  std::vector<Modality> out;
  std::stringstream ss(s.modalities);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(modality_from_string(trim(item)));
  }
  return out;
}

PipelineConfig pipeline_config_of(const RunSettings& s) {
  if (s.scale == "mini") {
    return PipelineConfig::mini(taxonomy_of(s), s.seed, modalities_of(s));
  }
  if (s.scale != "default") {
    throw ConfigError("scale must be 'mini' or 'default'");
  }
  PipelineConfig c;
  c.taxonomy = taxonomy_of(s);
  c.active = modalities_of(s);
  c.seed = s.seed;
  return c;
}

TrainConfig train_config_of(const RunSettings& s) {
  TrainConfig tc;
  tc.seed = s.seed;
  tc.epochs = s.epochs;
  tc.batch_size = s.batch_size;
  tc.learning_rate = s.learning_rate;
  tc.target_accuracy = s.target_accuracy;
  return tc;
}

DatasetManifest load_data(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    return load_fer_csv(path);
  }
  return load_manifest(path);
}

std::ofstream open_jsonl(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  return out;
}

std::string label_name(const DatasetManifest& m, int id) {
  return m.taxonomy.name(id);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const RunSettings& s, const std::string& out_dir, int samples) {
  const auto config = pipeline_config_of(s);
  auto manifest = make_synthetic_manifest(config, samples, s.seed,
                                          s.train_fraction);
  const std::string path = write_manifest_tree(manifest, out_dir);

  // Matching annotation stub so `explain` works out of the box.
  const std::string stub = out_dir + "/annotations.jsonl";
  std::ofstream out(stub);
  const char* places[] = {"classroom", "park", "office"};
  const char* anps[] = {"creative_kids", "sunny_day", "busy_desk"};
  for (int i = 0; i < 3; ++i) {
    json j;
    j["image_id"] = "scene" + std::to_string(i);
    j["place_category"] = places[i];
    j["attributes"] = json::array({"enclosed_area"});
    j["anps"] = json::array({{{"phrase", anps[i]}, {"confidence", 0.9}}});
    out << j.dump() << "\n";
  }
  std::cout << "wrote " << manifest.samples.size() << " samples under "
            << out_dir << "\n"
            << "manifest:    " << path << "\n"
            << "annotations: " << stub << "\n";
  return 0;
}

int cmd_train(const RunSettings& s, const std::string& manifest_path,
              const std::string& checkpoint_path) {
  const auto manifest = load_data(manifest_path);
  RunSettings adjusted = s;
  adjusted.taxonomy = manifest.taxonomy.k() == 7 ? "seven" : "four";
  Pipeline pipeline(pipeline_config_of(adjusted));
  const auto report = train(pipeline, manifest, train_config_of(adjusted));

  for (const auto& phase : report.phases) {
    std::cout << "phase " << phase.phase << ": " << phase.epochs_run
              << " epochs, final loss "
              << (phase.losses.empty() ? 0.0 : phase.losses.back())
              << ", train accuracy " << phase.final_train_accuracy << "\n";
  }
  save_checkpoint(pipeline, checkpoint_path);
  std::cout << "checkpoint written to " << checkpoint_path << "\n";
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& checkpoint_path,
             const std::string& jsonl_path) {
  const auto manifest = load_data(manifest_path);
  Pipeline pipeline = load_checkpoint(checkpoint_path, manifest.taxonomy);
  const auto result = evaluate(pipeline, manifest, Split::test);

  std::cout << "test samples: " << result.labels.size() << "\n"
            << "accuracy:     " << result.accuracy << "\n"
            << "mAP:          " << result.map << "\n\n"
            << "confusion matrix (rows = true, columns = predicted):\n";
  std::cout << "            ";
  for (const auto& l : manifest.taxonomy.labels()) {
    std::cout << " " << l.name.substr(0, 8) << std::string(l.name.size() >= 8 ? 1 : 9 - l.name.size(), ' ');
  }
  std::cout << "\n";
  for (int r = 0; r < manifest.taxonomy.k(); ++r) {
    std::cout << "  " << manifest.taxonomy.name(r)
              << std::string(manifest.taxonomy.name(r).size() > 10
                                 ? 1
                                 : 10 - manifest.taxonomy.name(r).size(), ' ');
    for (double x : result.confusion[static_cast<size_t>(r)]) {
      std::printf(" %8.3f ", x);
    }
    std::cout << "\n";
  }

  if (!jsonl_path.empty()) {
    auto out = open_jsonl(jsonl_path);
    json j;
    j["record"] = "metrics";
    j["accuracy"] = result.accuracy;
    j["map"] = result.map;
    j["confusion"] = result.confusion;
    out << j.dump() << "\n";
    for (size_t i = 0; i < result.labels.size(); ++i) {
      json row;
      row["record"] = "prediction";
      row["index"] = i;
      row["label"] = label_name(manifest, result.labels[i]);
      row["predicted"] = label_name(manifest, result.predictions[i]);
      row["scores"] = result.scores[i];
      out << row.dump() << "\n";
    }
    std::cout << "\nrecords written to " << jsonl_path << "\n";
  }
  return 0;
}

int cmd_infer(const std::string& manifest_path, const std::string& checkpoint_path,
              const std::string& jsonl_path) {
  const auto manifest = load_data(manifest_path);
  Pipeline pipeline = load_checkpoint(checkpoint_path, manifest.taxonomy);

  std::optional<std::ofstream> jsonl;
  if (!jsonl_path.empty()) jsonl = open_jsonl(jsonl_path);

  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    const Sample& sample = manifest.samples[i];
    const auto result = pipeline.classify(sample.obs);
    std::cout << "#" << i << " subject=" << sample.obs.subject_id
              << " zone=" << sample.obs.zone_id
              << " fused=" << result.fused.top().name;
    for (const auto& [m, dist] : result.per_modality) {
      std::cout << " " << to_string(m) << "=" << dist.top().name;
    }
    std::cout << "\n";
    if (jsonl) {
      json j;
      j["record"] = "inference";
      j["index"] = i;
      j["subject_id"] = sample.obs.subject_id;
      j["zone_id"] = sample.obs.zone_id;
      j["fused"] = result.fused.top().name;
      j["fused_scores"] = result.fused.probs();
      json per;
      for (const auto& [m, dist] : result.per_modality) {
        per[to_string(m)] = dist.top().name;
      }
      j["per_modality"] = per;
      *jsonl << j.dump() << "\n";
    }
  }
  return 0;
}

int cmd_explain(const RunSettings& s, const std::string& manifest_path,
                const std::string& checkpoint_path,
                const std::string& annotations_path,
                const std::string& jsonl_path) {
  const auto manifest = load_data(manifest_path);
  Pipeline pipeline = load_checkpoint(checkpoint_path, manifest.taxonomy);

  std::optional<FileAnnotationProvider> provider;
  if (!annotations_path.empty()) {
    provider = FileAnnotationProvider::load(annotations_path);
  }

  // First pass: classify everything and fill the average-emotion tracker.
  std::vector<ClassificationResult> results;
  AverageEmotionTracker tracker(manifest.taxonomy, s.bucket_seconds);
  for (const auto& sample : manifest.samples) {
    auto result = pipeline.classify(sample.obs);
    tracker.record({result.fused.top(), sample.obs.timestamp,
                    sample.obs.zone_id, sample.obs.subject_id});
    results.push_back(std::move(result));
  }

  std::optional<std::ofstream> jsonl;
  if (!jsonl_path.empty()) jsonl = open_jsonl(jsonl_path);

  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    const Sample& sample = manifest.samples[i];
    const auto& result = results[i];

    ExplanationInputs in;
    in.taxonomy = manifest.taxonomy;
    in.fused = result.fused.top();
    for (const auto& [m, dist] : result.per_modality) {
      in.modality_labels[m] = dist.top();
    }
    std::vector<EmotionDistribution> outputs;
    for (const auto& [m, dist] : result.per_modality) outputs.push_back(dist);
    if (outputs.size() >= 2) {
      in.anomaly = detect_anomaly(outputs, s.anomaly_threshold);
    }
    in.average_scores = tracker.average_scores(
        sample.obs.zone_id, tracker.bucket_of(sample.obs.timestamp));
    if (provider && !sample.scene_id.empty()) {
      try {
        in.annotation = provider->annotate(sample.scene_id);
      } catch (const MissingAnnotationError& e) {
        std::cerr << "warning: " << e.what() << "\n";
      }
    }

    const auto record = render_explanation(in);
    std::cout << "#" << i << " [" << label_name(manifest, sample.label)
              << "] " << record.text << "\n";
    if (jsonl) {
      json j;
      j["record"] = "explanation";
      j["index"] = i;
      j["subject_id"] = sample.obs.subject_id;
      j["zone_id"] = sample.obs.zone_id;
      j["fused"] = record.fused.name;
      json per;
      for (const auto& [m, label] : record.modality_labels) {
        per[to_string(m)] = label.name;
      }
      j["per_modality"] = per;
      if (record.annotation) {
        j["place_category"] = record.annotation->place_category;
        json anps = json::array();
        for (const auto& a : record.annotation->anps) {
          anps.push_back({{"phrase", a.phrase}, {"confidence", a.confidence}});
        }
        j["anps"] = anps;
      }
      if (record.average_scores) j["average_scores"] = *record.average_scores;
      j["anomaly"] = record.anomaly.flag;
      j["disagreement"] = record.anomaly.score;
      j["text"] = record.text;
      *jsonl << j.dump() << "\n";
    }
  }
  return 0;
}

int cmd_ablate(const RunSettings& s, const std::string& manifest_path,
               const std::string& jsonl_path) {
  const auto manifest = load_data(manifest_path);
  RunSettings adjusted = s;
  adjusted.taxonomy = manifest.taxonomy.k() == 7 ? "seven" : "four";
  const auto rows =
      run_ablation(manifest, pipeline_config_of(adjusted), train_config_of(adjusted));

  std::cout << "combination   accuracy\n";
  for (const auto& row : rows) {
    std::printf("  %-10s  %.4f\n", row.name.c_str(), row.accuracy);
  }
  if (!jsonl_path.empty()) {
    auto out = open_jsonl(jsonl_path);
    for (const auto& row : rows) {
      json j;
      j["record"] = "ablation";
      j["combination"] = row.name;
      j["with_context"] = row.with_context;
      j["accuracy"] = row.accuracy;
      out << j.dump() << "\n";
    }
    std::cout << "records written to " << jsonl_path << "\n";
  }
  return 0;
}

int cmd_bench(const RunSettings& s, const std::string& manifest_path,
              const std::string& checkpoint_path, int reps) {
  const auto manifest = load_data(manifest_path);
  std::optional<Pipeline> pipeline;
  if (!checkpoint_path.empty()) {
    pipeline.emplace(load_checkpoint(checkpoint_path, manifest.taxonomy));
  } else {
    RunSettings adjusted = s;
    adjusted.taxonomy = manifest.taxonomy.k() == 7 ? "seven" : "four";
    pipeline.emplace(pipeline_config_of(adjusted));
  }

  // Pick the first sample carrying every active modality.
  const Sample* sample = nullptr;
  for (const auto& cand : manifest.samples) {
    try {
      for (Modality m : pipeline->config().active) {
        (void)pipeline->features_for(m, cand.obs);
      }
      sample = &cand;
      break;
    } catch (const MissingModalityError&) {
    }
  }
  if (!sample) throw MissingModalityError("no sample carries every modality");

  const auto report = measure_latency(*pipeline, sample->obs, reps);

  // Published full-scale baseline, shown for comparison only.
  const std::map<Modality, double> reference = {{Modality::face, 1.0},
                                                {Modality::context, 0.92},
                                                {Modality::posture, 1.18},
                                                {Modality::gait, 1.63}};
  std::cout << "module     mean_ms    ratio    reference_ratio\n";
  for (const auto& e : report.entries) {
    std::printf("  %-8s %9.3f %8.2f %9.2f\n", to_string(e.modality),
                e.mean_seconds * 1e3, e.ratio, reference.at(e.modality));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular multimodal emotion recognition pipeline"};
  app.require_subcommand(1);

  RunSettings settings;
  std::string config_path, manifest_path, checkpoint_path, jsonl_path;
  std::string annotations_path, out_dir;
  int samples = 24;
  int reps = 20;

  // Settings file loads first so explicit flags override it.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        load_settings_file(settings, argv[i + 1]);
      } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
      }
    }
  }

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value settings file");
    cmd->add_option("--seed", settings.seed, "random seed");
    cmd->add_option("--taxonomy", settings.taxonomy, "four | seven");
    cmd->add_option("--modalities", settings.modalities,
                    "comma-separated subset of face,posture,gait,context");
    cmd->add_option("--scale", settings.scale, "mini | default");
  };

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset tree");
  add_common(synth);
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--samples", samples, "sample count");
  synth->add_option("--train-fraction", settings.train_fraction,
                    "train split fraction");

  auto* train_cmd = app.add_subcommand("train", "train on a manifest");
  add_common(train_cmd);
  train_cmd->add_option("--manifest", manifest_path, "manifest.json or FER csv")
      ->required();
  train_cmd->add_option("--out", checkpoint_path, "checkpoint output path")
      ->required();
  train_cmd->add_option("--epochs", settings.epochs, "epoch count");
  train_cmd->add_option("--batch-size", settings.batch_size, "batch size");
  train_cmd->add_option("--learning-rate", settings.learning_rate, "step size");
  train_cmd->add_option("--target-accuracy", settings.target_accuracy,
                        "stop a phase early at this train accuracy");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--manifest", manifest_path, "dataset")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "model")->required();
  eval_cmd->add_option("--jsonl", jsonl_path, "line-delimited record output");

  auto* infer_cmd = app.add_subcommand("infer", "per-sample predictions");
  infer_cmd->add_option("--manifest", manifest_path, "dataset")->required();
  infer_cmd->add_option("--checkpoint", checkpoint_path, "model")->required();
  infer_cmd->add_option("--jsonl", jsonl_path, "line-delimited record output");

  auto* explain_cmd =
      app.add_subcommand("explain", "explanations with situational knowledge");
  explain_cmd->add_option("--manifest", manifest_path, "dataset")->required();
  explain_cmd->add_option("--checkpoint", checkpoint_path, "model")->required();
  explain_cmd->add_option("--annotations", annotations_path,
                          "scene annotation stub (jsonl)");
  explain_cmd->add_option("--jsonl", jsonl_path, "record output");
  explain_cmd->add_option("--config", config_path, "key = value settings file");
  explain_cmd->add_option("--bucket-seconds", settings.bucket_seconds,
                          "average-emotion bucket width");
  explain_cmd->add_option("--anomaly-threshold", settings.anomaly_threshold,
                          "disagreement threshold t_a");

  auto* ablate_cmd = app.add_subcommand("ablate", "modality ablation table");
  add_common(ablate_cmd);
  ablate_cmd->add_option("--manifest", manifest_path, "dataset")->required();
  ablate_cmd->add_option("--jsonl", jsonl_path, "record output");
  ablate_cmd->add_option("--epochs", settings.epochs, "epochs per combination");
  ablate_cmd->add_option("--batch-size", settings.batch_size, "batch size");

  auto* bench_cmd = app.add_subcommand("bench", "relative per-module latency");
  add_common(bench_cmd);
  bench_cmd->add_option("--manifest", manifest_path, "dataset")->required();
  bench_cmd->add_option("--checkpoint", checkpoint_path, "optional model");
  bench_cmd->add_option("--reps", reps, "timed repetitions per module");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(settings, out_dir, samples);
    if (train_cmd->parsed()) return cmd_train(settings, manifest_path, checkpoint_path);
    if (eval_cmd->parsed()) return cmd_eval(manifest_path, checkpoint_path, jsonl_path);
    if (infer_cmd->parsed()) return cmd_infer(manifest_path, checkpoint_path, jsonl_path);
    if (explain_cmd->parsed()) {
      return cmd_explain(settings, manifest_path, checkpoint_path,
                         annotations_path, jsonl_path);
    }
    if (ablate_cmd->parsed()) return cmd_ablate(settings, manifest_path, jsonl_path);
    if (bench_cmd->parsed()) {
      return cmd_bench(settings, manifest_path, checkpoint_path, reps);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
