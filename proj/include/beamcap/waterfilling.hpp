// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace beamcap {

struct WaterfillSolution {
  double nu = 0.0;
  double a = 0.0;
  double rho = 0.0;
  double capacity = 0.0;  // nats per dimension
};

// Threshold angle of the lowest eigenchannel above water level nu.
double a_of_nu(double nu, double y);
double power_of_nu(double nu, double y);
double capacity_of_nu(double nu, double y);
WaterfillSolution solve_nu(double rho, double y);

}  // namespace beamcap
