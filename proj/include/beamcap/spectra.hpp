// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

namespace beamcap {

struct SystemDims {
  int tx = 0;  // L_T
  int rx = 0;  // L_R
  int m = 0;   // min(L_T, L_R)
  int n = 0;   // max(L_T, L_R)
  double y = 0.0;
  double tau = 0.0;
  double r = 0.0;

  static SystemDims from_antennas(int tx, int rx);
};

// Validates y in (0, 1].
void check_ratio(double y);

struct SpectralSupport {
  double lambda_minus;
  double lambda_plus;
};

SpectralSupport mp_support(double y);
inline SpectralSupport mp_support(const SystemDims& dims) { return mp_support(dims.y); }

// Marchenko-Pastur density of W = HH^H/m in the W normalization.
double mp_density(double lambda, double y);
// CDF by quadrature of mp_density.
double mp_cdf(double lambda, double y);

double lambda_of_t(double t, double y);
double t_density(double t, double y);

// Adaptive 15-point Gauss-Kronrod. Throws NumericError on non-convergence.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-10);

}  // namespace beamcap
