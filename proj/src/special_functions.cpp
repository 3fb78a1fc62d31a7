// SPDX-License-Identifier: Apache-2.0
#include "beamcap/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "beamcap/errors.hpp"

namespace beamcap {

using std::numbers::pi;
using C = std::complex<double>;

namespace {

// B_{2k}/(2k+1)! for k = 1..
constexpr std::array<double, 16> kBernoulliOverFactorial = {
    1.0 / 36.0,
    -1.0 / 3600.0,
    1.0 / 211680.0,
    -1.0 / 10886400.0,
    1.0 / 526901760.0,
    -4.0647616451442255e-11,
    8.9216910204564526e-13,
    -1.9939295860721076e-14,
    4.5189800296199182e-16,
    -1.0356517612181247e-17,
    2.3952186210261867e-19,
    -5.5817858743250093e-21,
    1.3091507554183213e-22,
    -3.0874198024267403e-24,
    7.3159756527022034e-26,
    -1.7408456572340007e-27,
};

// Li2 via the Bernoulli series in w = -ln(1-z); converges for |w| < 2 pi.
C dilog_bernoulli(C z) {
  const C w = -std::log(1.0 - z);
  const C w2 = w * w;
  C sum = w - 0.25 * w2;
  C power = w;
  for (double coeff : kBernoulliOverFactorial) {
    power *= w2;
    const C term = coeff * power;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Smallest L with bound * r^L / (L (1 - r)) below 1e-17.
int series_length(double r, double bound) {
  const double ar = std::abs(r);
  double power = ar;
  int l = 1;
  while (bound * power / (l * (1.0 - ar)) > 1e-17 && l < 10000000) {
    power *= ar;
    ++l;
  }
  return l + 10;
}

}  // namespace

C dilog(C z) {
  const double az = std::abs(z);
  if (!(az <= 1.0 + 1e-12)) throw DomainError("dilog: |z| > 1");
  if (z == C(0.0)) return 0.0;
  if (z == C(1.0)) return pi * pi / 6.0;
  if (z.real() <= 0.5) return dilog_bernoulli(z);
  const C one_minus = 1.0 - z;
  return pi * pi / 6.0 - std::log(z) * std::log(one_minus) - dilog_bernoulli(one_minus);
}

C sr1(double u, double r, double t) {
  if (!(std::abs(u) < 1.0 && std::abs(r) < 1.0 && r != 0.0 && std::abs(u / r) < 1.0))
    throw DomainError("sr1: parameters outside the convergence region");
  if (u == 0.0) return 0.0;
  const double q = u / r;
  const double p = u * r;
  const double head = -std::log1p(-std::abs(q));
  const double tail_head = p == 0.0 ? 1.0 : -std::log1p(-std::abs(p)) / std::abs(p);
  const int n = series_length(r, head + tail_head);

  // g[l] = sum_j p^j/(l+j), by backward recurrence g[l] = 1/l + p g[l+1].
  std::vector<double> g(n + 2);
  {
    double start = 0.0, pj = 1.0;
    for (int j = 0; j < 100000; ++j) {
      const double term = pj / (n + 1 + j);
      start += term;
      if (std::abs(term) < 1e-18 * std::abs(start)) break;
      pj *= p;
    }
    g[n + 1] = start;
    for (int l = n; l >= 1; --l) g[l] = 1.0 / l + p * g[l + 1];
  }

  C sum = 0.0;
  double inner = 0.0;  // sum_{k<l} q^k/k
  double rl = 1.0, ql = 1.0;
  const C step = std::polar(1.0, t);
  C phase = 1.0;
  for (int l = 1; l <= n; ++l) {
    rl *= r;
    phase *= step;
    if (l > 1) inner += ql / (l - 1);
    ql *= q;
    sum += (rl / l) * (inner + ql * g[l]) * phase;
  }
  return sum;
}

C sr2(double r, double t) {
  if (!(std::abs(r) < 1.0)) throw DomainError("sr2: |r| must be < 1");
  if (r == 0.0) return 0.0;
  const double r2 = r * r;
  const double bound = -std::log1p(-r2) / r2;
  const int n = series_length(r, bound);

  std::vector<double> h(n + 2);
  {
    double start = 0.0, pj = 1.0;
    for (int j = 0; j < 100000; ++j) {
      const double term = pj / (n + 1 + j);
      start += term;
      if (term < 1e-18 * start) break;
      pj *= r2;
    }
    h[n + 1] = start;
    for (int l = n; l >= 1; --l) h[l] = 1.0 / l + r2 * h[l + 1];
  }

  C sum = 0.0;
  double rl = 1.0;
  const C step = std::polar(1.0, t);
  C phase = 1.0;
  for (int l = 1; l <= n; ++l) {
    rl *= r;
    phase *= step;
    sum += (rl / l) * h[l] * phase;
  }
  return sum;
}

double phase_angle(double x, double a) {
  return std::atan2(x * std::sin(a), 1.0 - x * std::cos(a));
}

AuxQuantities aux_quantities(double y, double sbar, double rho, double a) {
  if (!(y > 0.0 && y <= 1.0)) throw InvalidArgument("aux_quantities: y must lie in (0, 1]");
  if (!(a >= 0.0 && a <= pi)) throw InvalidArgument("aux_quantities: a must lie in [0, pi]");
  if (!(sbar > 0.0) || !(rho > 0.0))
    throw DegenerateInput("aux_quantities: sbar and rho must be positive");
  AuxQuantities q{};
  q.r = std::sqrt(y);
  q.alpha = sbar * y / rho;
  const double b = 1.0 + y + q.alpha;
  const double disc = std::sqrt((b - 2.0 * q.r) * (b + 2.0 * q.r));
  q.w = 0.5 * (b + disc);
  // w and r u are the two roots of x^2 - b x + y; dividing avoids cancellation.
  q.u = q.r / q.w;
  q.theta_r = phase_angle(q.r, a);
  q.theta_u = phase_angle(q.u, a);
  return q;
}

double checked_real(C z, const char* what) {
  if (!(std::abs(z.imag()) < 1e-9))
    throw NumericError(std::string(what) + ": imaginary residue too large", z.real());
  return z.real();
}

}  // namespace beamcap
