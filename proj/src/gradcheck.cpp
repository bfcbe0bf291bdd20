#include "emorec/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "emorec/rng.hpp"

namespace emorec::nn {

double grad_check(const std::function<NodeRef()>& build_loss,
                  const std::vector<NodeRef>& params,
                  const GradCheckConfig& config) {
  if (params.empty()) {
    throw InvalidInputError("grad_check: no parameters to check");
  }

  zero_grads(params);
  for (const auto& p : params) p->grad();  // allocate before accumulation
  NodeRef loss = build_loss();
  loss->value.require_finite("grad_check loss");
  backward(loss);

  // Sample entries uniformly over the combined parameter vector.
  size_t total = 0;
  for (const auto& p : params) total += p->value.size();
  const size_t samples =
      std::min<size_t>(total, static_cast<size_t>(config.max_sampled));
  Rng rng(config.seed);

  std::vector<std::pair<size_t, size_t>> picks;  // (param index, entry index)
  if (samples == total) {
    for (size_t pi = 0; pi < params.size(); ++pi) {
      for (size_t e = 0; e < params[pi]->value.size(); ++e) picks.push_back({pi, e});
    }
  } else {
    for (size_t s = 0; s < samples; ++s) {
      size_t flat = rng.next_u64() % total;
      size_t pi = 0;
      while (flat >= params[pi]->value.size()) {
        flat -= params[pi]->value.size();
        ++pi;
      }
      picks.push_back({pi, flat});
    }
  }

  double max_rel = 0.0;
  for (const auto& [pi, e] : picks) {
    Node& p = *params[pi];
    const double analytic = p.grad().v[e];
    if (!std::isfinite(analytic)) {
      throw NumericalError("grad_check: non-finite analytic gradient in " +
                           p.name);
    }
    const double saved = p.value.v[e];
    p.value.v[e] = saved + config.step;
    const double up = build_loss()->value.v[0];
    p.value.v[e] = saved - config.step;
    const double down = build_loss()->value.v[0];
    p.value.v[e] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("grad_check: non-finite loss under perturbation");
    }
    const double numeric = (up - down) / (2.0 * config.step);
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), config.denom_floor});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  }
  return max_rel;
}

}  // namespace emorec::nn
