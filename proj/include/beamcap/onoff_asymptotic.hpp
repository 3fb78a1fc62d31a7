// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace beamcap {

struct DesignPoint {
  double a = 0.0;
  double sbar = 1.0;
  double pbar_on = 0.0;  // rho / sbar
  double rate = 0.0;     // nats per dimension
  double rho = 0.0;
  double y = 1.0;
};

// Limiting fraction of beams switched on for threshold angle a.
double sbar_infinity(double a, double y);
// Limiting rate per dimension (nats) with on-power rho / sbar.
double info_rate_infinity(double a, double y, double rho);
double dinfo_da(double a, double y, double rho);

DesignPoint solve_optimal_a(double y, double rho);
std::vector<DesignPoint> sweep_rho(double y, const std::vector<double>& rho_grid);

}  // namespace beamcap
