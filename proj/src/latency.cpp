#include "emorec/latency.hpp"

#include <chrono>

namespace emorec {

LatencyReport measure_latency(const Pipeline& pipeline,
                              const SubjectObservation& sample,
                              int repetitions) {
  if (repetitions < 10) {
    throw InvalidInputError("latency measurement needs at least 10 repetitions");
  }
  if (!pipeline.fusion_config().is_active(Modality::face)) {
    throw ConfigError("latency baseline needs the face module active");
  }

  using clock = std::chrono::steady_clock;
  LatencyReport report;
  report.repetitions = repetitions;

  double face_mean = 0.0;
  for (Modality m : pipeline.config().active) {
    for (int w = 0; w < 2; ++w) {
      (void)pipeline.modality_probs_node(m, sample);  // warmup
    }
    const auto start = clock::now();
    for (int r = 0; r < repetitions; ++r) {
      (void)pipeline.modality_probs_node(m, sample);
    }
    const auto stop = clock::now();
    const double mean =
        std::chrono::duration<double>(stop - start).count() / repetitions;
    report.entries.push_back({m, mean, 0.0});
    if (m == Modality::face) face_mean = mean;
  }
  if (!(face_mean > 0.0)) {
    throw MeasurementError("face module measured zero duration");
  }
  for (auto& e : report.entries) e.ratio = e.mean_seconds / face_mean;
  return report;
}

}  // namespace emorec
