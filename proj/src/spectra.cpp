// SPDX-License-Identifier: Apache-2.0
#include "beamcap/spectra.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "beamcap/errors.hpp"

namespace beamcap {

using std::numbers::pi;

SystemDims SystemDims::from_antennas(int tx, int rx) {
  if (tx < 1 || rx < 1) throw InvalidArgument("antenna counts must be >= 1");
  SystemDims d;
  d.tx = tx;
  d.rx = rx;
  d.m = std::min(tx, rx);
  d.n = std::max(tx, rx);
  d.y = static_cast<double>(d.m) / d.n;
  d.tau = static_cast<double>(d.n) / d.m;
  d.r = std::sqrt(d.y);
  return d;
}

void check_ratio(double y) {
  if (!(y > 0.0 && y <= 1.0)) throw InvalidArgument("dimension ratio y must lie in (0, 1]");
}

SpectralSupport mp_support(double y) {
  check_ratio(y);
  const double st = 1.0 / std::sqrt(y);
  return {(st - 1.0) * (st - 1.0), (st + 1.0) * (st + 1.0)};
}

double mp_density(double lambda, double y) {
  const auto [lo, hi] = mp_support(y);
  if (!(lambda > lo && lambda < hi) || lambda <= 0.0) return 0.0;
  const double prod = std::max((hi - lambda) * (lambda - lo), 0.0);
  return std::sqrt(prod) / (2.0 * pi * lambda);
}

double mp_cdf(double lambda, double y) {
  const auto [lo, hi] = mp_support(y);
  if (lambda <= lo) return 0.0;
  if (lambda >= hi) return 1.0;
  // Through the angle variable the integrand is smooth at both edges.
  const double c = std::clamp((1.0 + y - y * lambda) / (2.0 * std::sqrt(y)), -1.0, 1.0);
  return integrate([y](double t) { return t_density(t, y); }, 0.0, std::acos(c), 1e-12);
}

double lambda_of_t(double t, double y) {
  check_ratio(y);
  if (!(t >= 0.0 && t <= pi)) throw InvalidArgument("lambda_of_t: t must lie in [0, pi]");
  return (1.0 + y - 2.0 * std::sqrt(y) * std::cos(t)) / y;
}

double t_density(double t, double y) {
  check_ratio(y);
  if (y == 1.0) return (1.0 + std::cos(t)) / pi;
  return (1.0 - std::cos(2.0 * t)) / (pi * (1.0 + y - 2.0 * std::sqrt(y) * std::cos(t)));
}

namespace {

struct Panel {
  double a;
  double b;
  double value;
  double error;
  double abs_value;  // integral of |f|, for the roundoff floor
  int depth;
};

// One 15-point Kronrod panel with the embedded 7-point Gauss rule; error as in QUADPACK.
Panel kronrod_panel(const std::function<double(double)>& f, double a, double b, int depth) {
  using boost::math::quadrature::gauss;
  using boost::math::quadrature::gauss_kronrod;
  const auto& x = gauss_kronrod<double, 15>::abscissa();
  const auto& wk = gauss_kronrod<double, 15>::weights();
  const auto& wg = gauss<double, 7>::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double fv[15];
  fv[0] = f(mid);
  for (std::size_t i = 1; i < x.size(); ++i) {
    fv[2 * i - 1] = f(mid - half * x[i]);
    fv[2 * i] = f(mid + half * x[i]);
  }
  double kron = wk[0] * fv[0], gsum = wg[0] * fv[0], abs_sum = wk[0] * std::abs(fv[0]);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double pair = fv[2 * i - 1] + fv[2 * i];
    kron += wk[i] * pair;
    abs_sum += wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
    if (i % 2 == 0) gsum += wg[i / 2] * pair;
  }
  const double mean = 0.5 * kron;
  double asc = wk[0] * std::abs(fv[0] - mean);
  for (std::size_t i = 1; i < x.size(); ++i)
    asc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));
  asc *= half;
  double err = std::abs((kron - gsum) * half);
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  return {a, b, kron * half, err, abs_sum * std::abs(half), depth};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo <= hi)) throw InvalidArgument("integrate: need lo <= hi");
  if (lo == hi) return 0.0;
  constexpr int kMaxDepth = 60;
  constexpr std::size_t kMaxPanels = 200000;
  auto by_error = [](const Panel& p, const Panel& q) { return p.error < q.error; };
  std::vector<Panel> heap{kronrod_panel(f, lo, hi, 0)};
  double value = heap[0].value, error = heap[0].error, abs_value = heap[0].abs_value;
  std::size_t panels = 1;
  for (;;) {
    if (!std::isfinite(value)) throw NumericError("integrate: integrand is not finite", value);
    const double floor = 50.0 * std::numeric_limits<double>::epsilon() * abs_value;
    if (error <= std::max(tol, floor)) break;
    if (panels >= kMaxPanels)
      throw NumericError("integrate: adaptive quadrature did not converge", value);
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Panel worst = heap.back();
    if (worst.depth >= kMaxDepth)
      throw NumericError("integrate: subdivision depth exhausted", value);
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    value -= worst.value;
    error -= worst.error;
    abs_value -= worst.abs_value;
    for (const Panel& p : {kronrod_panel(f, worst.a, mid, worst.depth + 1),
                           kronrod_panel(f, mid, worst.b, worst.depth + 1)}) {
      value += p.value;
      error += p.error;
      abs_value += p.abs_value;
      heap.push_back(p);
      std::push_heap(heap.begin(), heap.end(), by_error);
    }
    panels += 2;
  }
  // Re-add from scratch so the running updates leave no drift.
  std::sort(heap.begin(), heap.end(), [](const Panel& p, const Panel& q) { return p.a < q.a; });
  double total = 0.0;
  for (const Panel& p : heap) total += p.value;
  return total;
}

}  // namespace beamcap
