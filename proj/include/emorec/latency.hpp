#ifndef EMOREC_LATENCY_HPP
#define EMOREC_LATENCY_HPP

#include <vector>

#include "emorec/fusion.hpp"

namespace emorec {

struct LatencyReport {
  struct Entry {
    Modality modality;
    double mean_seconds = 0.0;
    double ratio = 0.0;  // mean / face mean; face is 1.0 by construction
  };
  std::vector<Entry> entries;  // canonical order, face first when active
  int repetitions = 0;
};

/// Times each active module's stand-alone classification of one observation
/// (single-threaded, warmup first) and reports per-module means relative to
/// the face module. Requires the face module active and repetitions >= 10.
/// Throws MeasurementError when the clock yields a zero face-module mean.
LatencyReport measure_latency(const Pipeline& pipeline,
                              const SubjectObservation& sample,
                              int repetitions);

}  // namespace emorec

#endif  // EMOREC_LATENCY_HPP
