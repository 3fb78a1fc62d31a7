// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

namespace beamcap {

// Li2(z) on the closed unit disk.
std::complex<double> dilog(std::complex<double> z);

// sum_l (r^l e^{ilt}/l) (sum_{k<l} (u/r)^k/k + r^{-2l} sum_{k>=l} r^{2k}(u/r)^k/k)
std::complex<double> sr1(double u, double r, double t);
// sum_l (r^l e^{ilt}/l) r^{-2l} sum_{k>=l} r^{2k}/k
std::complex<double> sr2(double r, double t);

struct AuxQuantities {
  double r;
  double alpha;
  double w;
  double u;
  double theta_r;
  double theta_u;
};

AuxQuantities aux_quantities(double y, double sbar, double rho, double a);

// atan(x sin a / (1 - x cos a)) for 0 <= x <= 1.
double phase_angle(double x, double a);

// Real part of i(F(a) - F(-a))-style combinations; throws if the imaginary residue exceeds 1e-9.
double checked_real(std::complex<double> z, const char* what);

}  // namespace beamcap
