// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "beamcap/spectra.hpp"

namespace beamcap {

enum class StrategyKind { constant_beams, gated_single_beam, off };

std::string to_string(StrategyKind kind);

struct StrategySpec {
  StrategyKind kind = StrategyKind::off;
  int s = 0;
  double p_on = 0.0;            // physical per-beam power
  double kappa = 0.0;           // eigenvalue threshold of W, gated kind only
  double predicted_rate = 0.0;  // nats per dimension
};

// Per-beam power in the W normalization: Pbar_on = m P_on.
double normalized_on_power(const StrategySpec& spec, const SystemDims& dims);

// Threshold angle whose limiting on-fraction equals target_sbar.
double invert_sbar(double target_sbar, double y);

StrategySpec finite_design(const SystemDims& dims, double rho);

}  // namespace beamcap
