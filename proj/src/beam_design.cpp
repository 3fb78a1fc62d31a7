// SPDX-License-Identifier: Apache-2.0
#include "beamcap/beam_design.hpp"

#include <cmath>
#include <numbers>

#include "beamcap/errors.hpp"
#include "beamcap/onoff_asymptotic.hpp"

namespace beamcap {

using std::numbers::pi;

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::constant_beams:
      return "constant_beams";
    case StrategyKind::gated_single_beam:
      return "gated_single_beam";
    case StrategyKind::off:
      return "off";
  }
  return "unknown";
}

double normalized_on_power(const StrategySpec& spec, const SystemDims& dims) {
  return dims.m * spec.p_on;
}

double invert_sbar(double target_sbar, double y) {
  if (!(target_sbar > 0.0 && target_sbar <= 1.0))
    throw InvalidArgument("invert_sbar: target must lie in (0, 1]");
  if (target_sbar == 1.0) return 0.0;
  double lo = 0.0, hi = pi;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sbar_infinity(mid, y) > target_sbar ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

StrategySpec finite_design(const SystemDims& dims, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("finite_design: rho must be positive");
  const DesignPoint opt = solve_optimal_a(dims.y, rho);
  const int m = dims.m;
  StrategySpec spec;
  if (opt.sbar < 1e-9) return spec;

  if (opt.sbar * m < 1.0 - 1e-9) {
    spec.kind = StrategyKind::gated_single_beam;
    spec.s = 1;
    spec.p_on = rho / (m * opt.sbar);
    spec.kappa = lambda_of_t(opt.a, dims.y);
    spec.predicted_rate = opt.rate;
    return spec;
  }

  // Compare the two integer beam counts adjacent to m * sbar.
  const double target = opt.sbar * m;
  const int s_up = std::min(m, static_cast<int>(std::ceil(target - 1e-9)));
  const int s_down = std::max(1, static_cast<int>(std::floor(target + 1e-9)));
  spec.kind = StrategyKind::constant_beams;
  spec.predicted_rate = -1.0;
  for (int s : {s_up, s_down}) {
    const double rate = info_rate_infinity(invert_sbar(static_cast<double>(s) / m, dims.y),
                                           dims.y, rho);
    if (rate > spec.predicted_rate) {
      spec.predicted_rate = rate;
      spec.s = s;
    }
  }
  spec.p_on = rho / spec.s;
  return spec;
}

}  // namespace beamcap
