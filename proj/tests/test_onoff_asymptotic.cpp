// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "beamcap/errors.hpp"
#include "beamcap/onoff_asymptotic.hpp"
#include "beamcap/spectra.hpp"

using namespace beamcap;
using Catch::Approx;
using std::numbers::pi;

namespace {

double sbar_quad(double a, double y) {
  return integrate([y](double t) { return t_density(t, y); }, a, pi, 1e-12);
}

double rate_quad(double a, double y, double rho) {
  const double sbar = sbar_quad(a, y);
  return integrate(
      [&](double t) {
        return std::log1p(rho / (y * sbar) * (1.0 + y - 2.0 * std::sqrt(y) * std::cos(t))) *
               t_density(t, y);
      },
      a, pi, 1e-12);
}

}  // namespace

TEST_CASE("on-fraction at hand-evaluated angles") {
  CHECK(sbar_infinity(0.0, 1.0) == Approx(1.0));
  for (double y : {0.25, 0.5, 1.0}) CHECK(sbar_infinity(pi, y) == Approx(0.0).margin(1e-15));
  CHECK(sbar_infinity(pi / 2, 1.0) == Approx((pi / 2 - 1.0) / pi));
  CHECK(sbar_infinity(0.0, 0.5) == Approx(1.0));
}

TEST_CASE("on-fraction matches quadrature of the angle density") {
  for (double y : {0.25, 0.5, 0.75, 1.0})
    for (double a : {0.0, 0.3, 1.0, 2.0, 3.0, 3.1})
      CHECK(std::abs(sbar_infinity(a, y) - sbar_quad(a, y)) < 1e-10);
}

TEST_CASE("on-fraction stays accurate close to pi") {
  // Relative accuracy for y = 1 through the series branch.
  for (double d : {1e-2, 1e-3, 1e-4}) {
    const double exact = (d * d * d / 6.0 - std::pow(d, 5) / 120.0 + std::pow(d, 7) / 5040.0) / pi;
    CHECK(sbar_infinity(pi - d, 1.0) == Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("rate matches quadrature") {
  for (double y : {0.25, 0.5, 0.75, 1.0})
    for (double a : {0.0, 0.5, 1.0, 1.5, 2.5})
      for (double rho : {0.1, 1.0, 10.0, 100.0})
        CHECK(std::abs(info_rate_infinity(a, y, rho) - rate_quad(a, y, rho)) < 1e-8);
  CHECK(std::abs(info_rate_infinity(1.0, 1.0, 10.0) - rate_quad(1.0, 1.0, 10.0)) < 1e-8);
}

TEST_CASE("rate with every beam on is the equal-power rate per dimension") {
  for (double y : {0.5, 1.0}) {
    const double direct = integrate(
        [y](double l) { return std::log1p(10.0 * l) * mp_density(l, y); }, mp_support(y).lambda_minus,
        mp_support(y).lambda_plus, 1e-9);
    CHECK(info_rate_infinity(0.0, y, 10.0) == Approx(direct).margin(1e-8));
  }
}

TEST_CASE("rate refuses thresholds with no beams on") {
  CHECK_THROWS_AS(info_rate_infinity(pi - 1e-5, 1.0, 1.0), DegenerateInput);
  CHECK_THROWS_AS(dinfo_da(pi - 1e-5, 1.0, 1.0), DegenerateInput);
  CHECK_THROWS_AS(info_rate_infinity(1.0, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("derivative matches central differences") {
  const double h = 1e-5;
  for (double y : {0.5, 1.0})
    for (double a : {0.5, 1.5, 2.5})
      for (double rho : {0.5, 5.0, 50.0}) {
        const double fd = (info_rate_infinity(a + h, y, rho) - info_rate_infinity(a - h, y, rho)) / (2 * h);
        CHECK(dinfo_da(a, y, rho) == Approx(fd).epsilon(1e-5));
      }
}

TEST_CASE("derivative is negative near pi") {
  for (double rho : {0.01, 1.0, 100.0}) CHECK(dinfo_da(3.0, 1.0, rho) < 0.0);
}

TEST_CASE("derivative changes sign at most once, from + to -") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uy(0.1, 1.0), ulog(-2.0, 3.0);
  for (int rep = 0; rep < 10; ++rep) {
    const double y = rep == 0 ? 1.0 : uy(rng);
    const double rho = std::pow(10.0, ulog(rng));
    int changes = 0;
    double prev = dinfo_da(1e-3, y, rho);
    for (int i = 1; i < 400; ++i) {
      const double a = 1e-3 + (2.9 - 1e-3) * i / 399.0;
      const double d = dinfo_da(a, y, rho);
      if ((prev > 0) != (d > 0)) {
        ++changes;
        CHECK(prev > 0);
      }
      prev = d;
    }
    CHECK(changes <= 1);
  }
}

TEST_CASE("optimal threshold beats a grid scan and zeroes the derivative") {
  for (double y : {0.5, 1.0})
    for (double rho : {0.05, 0.5, 1.0, 5.0, 50.0}) {
      const DesignPoint p = solve_optimal_a(y, rho);
      double best = 0.0;
      for (int i = 0; i < 50; ++i) {
        const double a = pi * i / 50.0;
        if (sbar_infinity(a, y) > 1e-9) best = std::max(best, info_rate_infinity(a, y, rho));
      }
      CHECK(p.rate >= best - 1e-9);
      if (p.a > 0.0) CHECK(std::abs(dinfo_da(p.a, y, rho)) < 1e-8);
      CHECK(p.pbar_on * p.sbar == Approx(rho).epsilon(1e-9));
      CHECK(p.sbar >= 0.0);
      CHECK(p.sbar <= 1.0);
    }
  const DesignPoint p = solve_optimal_a(0.5, 1.0);
  CHECK(p.rate >= info_rate_infinity(0.0, 0.5, 1.0));
  CHECK(p.rate >= info_rate_infinity(2.5, 0.5, 1.0));
}

TEST_CASE("optimal threshold moves toward zero as SNR grows") {
  const DesignPoint lo = solve_optimal_a(1.0, 1.0), mid = solve_optimal_a(1.0, 1e2), hi = solve_optimal_a(1.0, 1e4);
  CHECK(hi.a < mid.a);
  CHECK(mid.a < lo.a);
  CHECK(hi.sbar > 0.95);
  const DesignPoint tiny = solve_optimal_a(1.0, 1e-3);
  CHECK(tiny.a > lo.a);
  CHECK(tiny.a > 2.0);
  CHECK(tiny.sbar < 0.1);
}

TEST_CASE("sweep is monotone in SNR") {
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(std::pow(10.0, -1.0 + 4.0 * i / 19.0));
  for (double y : {0.5, 1.0}) {
    const auto pts = sweep_rho(y, grid);
    REQUIRE(pts.size() == grid.size());
    for (std::size_t i = 1; i < pts.size(); ++i) {
      CHECK(pts[i].a <= pts[i - 1].a + 1e-9);
      CHECK(pts[i].sbar >= pts[i - 1].sbar - 1e-9);
      CHECK(pts[i].rate > pts[i - 1].rate);
    }
  }
  CHECK_THROWS_AS(sweep_rho(1.0, {1.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(sweep_rho(1.0, {-1.0}), InvalidArgument);
}
