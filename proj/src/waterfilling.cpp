// SPDX-License-Identifier: Apache-2.0
#include "beamcap/waterfilling.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "beamcap/errors.hpp"
#include "beamcap/onoff_asymptotic.hpp"
#include "beamcap/spectra.hpp"
#include "beamcap/special_functions.hpp"

namespace beamcap {

using std::numbers::pi;
using C = std::complex<double>;

double a_of_nu(double nu, double y) {
  const auto [lo, hi] = mp_support(y);
  if (!(nu * hi >= 1.0 - 1e-12)) throw Infeasible("water level below the top of the spectrum");
  if (y < 1.0 && 1.0 / nu < lo) return 0.0;
  const double r = std::sqrt(y);
  // sin^2(a/2) = (y/nu - (1-r)^2) / (4r); the half-angle form stays accurate near a = 0.
  const double s2 = std::clamp((y / nu - (1.0 - r) * (1.0 - r)) / (4.0 * r), 0.0, 1.0);
  if (s2 <= 0.5) return 2.0 * std::asin(std::sqrt(s2));
  return std::acos(std::clamp(1.0 - 2.0 * s2, -1.0, 1.0));
}

double power_of_nu(double nu, double y) {
  const double a = a_of_nu(nu, y);
  const double sbar = sbar_infinity(a, y);
  double j4 = 0.0;
  if (y == 1.0) {
    if (a == 0.0) throw Infeasible("water level is unbounded");
    j4 = (-pi + a + 2.0 / std::tan(0.5 * a)) / (2.0 * pi);
  } else {
    const double r = std::sqrt(y);
    const C z_plus = 1.0 / (1.0 - std::polar(r, a));
    const C z_minus = 1.0 / (1.0 - std::polar(r, -a));
    const double comb = checked_real(C(0.0, 0.5) * (z_minus - z_plus), "power_of_nu J4");
    j4 = (y / (1.0 - y) * (pi - a) - (1.0 + y) / (1.0 - y) * phase_angle(r, a) + comb) / pi;
  }
  return std::max(nu * sbar - j4, 0.0);
}

double capacity_of_nu(double nu, double y) {
  const double a = a_of_nu(nu, y);
  const double sbar = sbar_infinity(a, y);
  const double r = std::sqrt(y);
  const double sa = std::sin(a);
  const double theta_r = phase_angle(r, a);
  const double edge = sa == 0.0 ? 0.0 : sa * (1.0 - std::log(1.0 + y - 2.0 * r * std::cos(a)));
  const double j5 = (edge - r * (pi - a) - (1.0 / r - r) * theta_r) / (pi * r);
  const C li_minus = dilog(std::polar(r, -a));
  const C li_plus = dilog(std::polar(r, a));
  const double j6 =
      (1.0 + y) / (2.0 * pi * y) * checked_real(C(0.0, 1.0) * (li_minus - li_plus), "J6");
  double cap = std::log(nu / y) * sbar + j5 + j6;
  if (y < 1.0) {
    const C l_minus = std::log(1.0 - std::polar(r, -a));
    const C l_plus = std::log(1.0 - std::polar(r, a));
    const double squares =
        checked_real(C(0.0, 0.5) * (l_minus * l_minus - l_plus * l_plus), "J7 squares");
    const double series = checked_real(C(0.0, 1.0) * (sr2(r, -a) - sr2(r, a)), "J7 series");
    const double j7 = -(1.0 - y) / (2.0 * pi * y) *
                      (squares + 2.0 * std::log1p(-y) * (pi - a - theta_r) + series);
    cap += j7;
  }
  return std::max(cap, 0.0);
}

WaterfillSolution solve_nu(double rho, double y) {
  if (!(rho > 0.0)) throw InvalidArgument("solve_nu: rho must be positive");
  const double nu_min = 1.0 / mp_support(y).lambda_plus;
  double lo = nu_min;
  double hi = 2.0 * nu_min;
  while (power_of_nu(hi, y) <= rho) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 400 && hi - lo > 1e-16 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (power_of_nu(mid, y) < rho ? lo : hi) = mid;
  }
  WaterfillSolution s;
  s.nu = 0.5 * (lo + hi);
  s.a = a_of_nu(s.nu, y);
  s.rho = power_of_nu(s.nu, y);
  s.capacity = capacity_of_nu(s.nu, y);
  return s;
}

}  // namespace beamcap
