// SPDX-License-Identifier: Apache-2.0
#include "beamcap/onoff_asymptotic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "beamcap/errors.hpp"
#include "beamcap/spectra.hpp"
#include "beamcap/special_functions.hpp"

namespace beamcap {

using std::numbers::pi;
using C = std::complex<double>;

namespace {

constexpr double kMinSbar = 1e-12;
constexpr double kOffSbar = 1e-9;

void check_angle(double a) {
  if (!(a >= 0.0 && a <= pi)) throw InvalidArgument("threshold angle must lie in [0, pi]");
}

// theta_u / u, with the small-u limit expanded.
double theta_over_u(const AuxQuantities& q, double a) {
  if (q.u < 1e-8) return std::sin(a) * (1.0 + q.u * std::cos(a));
  return q.theta_u / q.u;
}

AuxQuantities aux_checked(double a, double y, double rho, double sbar) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (sbar < kMinSbar) throw DegenerateInput("threshold too close to pi: sbar vanishes");
  return aux_quantities(y, sbar, rho, a);
}

}  // namespace

double sbar_infinity(double a, double y) {
  check_ratio(y);
  check_angle(a);
  if (y == 1.0) {
    const double d = pi - a;
    // d - sin d loses everything to cancellation for small d.
    const double v = d < 1e-2 ? d * d * d / 6.0 * (1.0 - d * d / 20.0 * (1.0 - d * d / 42.0))
                              : d - std::sin(d);
    return v / pi;
  }
  const double r = std::sqrt(y);
  const double v = pi - a - std::sin(a) / r + (1.0 - y) / y * phase_angle(r, a);
  return std::clamp(v / pi, 0.0, 1.0);
}

double info_rate_infinity(double a, double y, double rho) {
  check_ratio(y);
  check_angle(a);
  const double sbar = sbar_infinity(a, y);
  const AuxQuantities q = aux_checked(a, y, rho, sbar);
  const double r = q.r, u = q.u;
  const double sa = std::sin(a), ca = std::cos(a);

  const double j0 = (sa * (1.0 - std::log(1.0 + u * u - 2.0 * u * ca)) - u * (pi - a) -
                     (theta_over_u(q, a) - u * q.theta_u)) /
                    (pi * r);
  const C li_minus = dilog(std::polar(u, -a));
  const C li_plus = dilog(std::polar(u, a));
  const double j1 = (1.0 + y) / (2.0 * pi * y) *
                    checked_real(C(0.0, 1.0) * (li_minus - li_plus), "info_rate_infinity J1");
  double rate = (std::log(q.w) - std::log(q.alpha)) * sbar + j0 + j1;
  if (y < 1.0) {
    const C s_plus = sr1(u, r, a);
    const C s_minus = sr1(u, r, -a);
    const double comb = checked_real(C(0.0, 1.0) * (s_plus - s_minus), "info_rate_infinity J2");
    const double j2 =
        (1.0 - y) / (2.0 * pi * y) * (-2.0 * std::log1p(-u * r) * (pi - a - q.theta_r) + comb);
    rate += j2;
  }
  return std::max(rate, 0.0);
}

double dinfo_da(double a, double y, double rho) {
  check_ratio(y);
  check_angle(a);
  const double sbar = sbar_infinity(a, y);
  const AuxQuantities q = aux_checked(a, y, rho, sbar);
  const double r = q.r, u = q.u, w = q.w;
  const double ca = std::cos(a);
  double j3 = 0.0, id = 0.0;
  if (y < 1.0) {
    j3 = (1.0 - std::cos(2.0 * a)) / (1.0 + y - 2.0 * r * ca);
    id = (pi - a - (1.0 - u * u) / (r - u) * theta_over_u(q, a) +
          (1.0 - y) / (r * (r - u)) * q.theta_r) /
         (pi * w * (1.0 - u * r));
  } else {
    j3 = 1.0 + ca;
    id = (pi - a) / (pi * w * (1.0 - u)) - (1.0 + u) * theta_over_u(q, a) / (pi * w * (1.0 - u));
  }
  return j3 / pi *
         (1.0 - std::log1p(rho / (sbar * y) * (1.0 + y - 2.0 * r * ca)) - y / rho * id);
}

namespace {

DesignPoint make_point(double a, double y, double rho) {
  DesignPoint p;
  p.a = a;
  p.y = y;
  p.rho = rho;
  p.sbar = sbar_infinity(a, y);
  p.pbar_on = rho / p.sbar;
  p.rate = info_rate_infinity(a, y, rho);
  return p;
}

// Largest angle whose on-fraction still exceeds the "effectively off" level.
double last_usable_angle(double y) {
  double lo = 0.0, hi = pi;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sbar_infinity(mid, y) > kOffSbar ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

DesignPoint solve_optimal_a(double y, double rho) {
  check_ratio(y);
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  const double lo_end = 1e-6;
  const double hi_end = std::min(pi - 1e-6, last_usable_angle(y));
  constexpr int kScan = 64;

  double prev_a = lo_end;
  if (dinfo_da(prev_a, y, rho) <= 0.0) return make_point(0.0, y, rho);
  for (int i = 1; i < kScan; ++i) {
    const double a = lo_end + (hi_end - lo_end) * i / (kScan - 1);
    const double d = dinfo_da(a, y, rho);
    if (d <= 0.0) {
      double lo = prev_a, hi = a;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (dinfo_da(mid, y, rho) > 0.0 ? lo : hi) = mid;
      }
      return make_point(0.5 * (lo + hi), y, rho);
    }
    prev_a = a;
  }
  // Still rising where the on-fraction hits the off level: run at that edge.
  return make_point(hi_end, y, rho);
}

std::vector<DesignPoint> sweep_rho(double y, const std::vector<double>& rho_grid) {
  std::vector<DesignPoint> out;
  out.reserve(rho_grid.size());
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    if (!(rho_grid[i] > 0.0) || (i > 0 && !(rho_grid[i] > rho_grid[i - 1])))
      throw InvalidArgument("sweep_rho: grid must be positive and strictly increasing");
    out.push_back(solve_optimal_a(y, rho_grid[i]));
  }
  return out;
}

}  // namespace beamcap
