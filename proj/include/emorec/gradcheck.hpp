#ifndef EMOREC_GRADCHECK_HPP
#define EMOREC_GRADCHECK_HPP

#include <functional>
#include <vector>

#include "emorec/autodiff.hpp"

namespace emorec::nn {

struct GradCheckConfig {
  double step = 1e-5;            // central-difference step
  int max_sampled = 200;         // parameter entries sampled across tensors
  uint64_t seed = 1;             // sampling seed
  double denom_floor = 1e-6;     // guard for near-zero gradient pairs
};

/// Compares analytic parameter gradients against central finite differences.
///
/// `build_loss` must rebuild the scalar loss graph from the current parameter
/// values on every call (parameters are persistent nodes, so perturbing
/// their values and rebuilding re-evaluates the network). Returns the
/// maximum relative error over the sampled parameter entries, where
/// rel = |analytic - numeric| / max(|analytic|, |numeric|, denom_floor).
///
/// Runs entirely in 64-bit arithmetic. Throws NumericalError if any gradient
/// or perturbed loss is non-finite, InvalidInputError when params is empty.
double grad_check(const std::function<NodeRef()>& build_loss,
                  const std::vector<NodeRef>& params,
                  const GradCheckConfig& config = {});

}  // namespace emorec::nn

#endif  // EMOREC_GRADCHECK_HPP
