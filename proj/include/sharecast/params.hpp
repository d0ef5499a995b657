#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cascade.hpp"
#include "kernel.hpp"

namespace sharecast {

/// Multiplier applied to the raw infectiousness estimate as a function of the
/// evaluation time. Empty means identity.
using Correction = std::function<double(double time_s)>;

/// Piecewise-constant correction: value of the last breakpoint with start <= t.
inline Correction step_correction(std::vector<std::pair<double, double>> steps) {
  if (steps.empty()) return {};
  return [steps = std::move(steps)](double t) {
    double v = 1.0;
    for (const auto& [start, value] : steps) {
      if (start > t) break;
      v = value;
    }
    return v;
  };
}

struct ModelParams {
  KernelParams kernel = default_kernel();
  double n_star_default = 140.0;
  double epsilon_subcritical = 0.01;
  Correction correction;
  TimeframeSchedule schedule;
  std::int64_t min_reshares = 1;

  double alpha(double t) const { return correction ? correction(t) : 1.0; }
};

inline void validate(const ModelParams& p) {
  validate(p.kernel);
  if (!(p.n_star_default > 0.0)) throw invalid_argument("n_star_default must be positive");
  if (!(p.epsilon_subcritical > 0.0 && p.epsilon_subcritical < 1.0))
    throw invalid_argument("epsilon_subcritical must lie in (0, 1)");
  if (p.min_reshares < 1) throw invalid_argument("min_reshares must be positive");
}

}  // namespace sharecast
