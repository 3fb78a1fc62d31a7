// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "beamcap/beam_design.hpp"
#include "beamcap/errors.hpp"
#include "beamcap/grassmann.hpp"
#include "beamcap/onoff_asymptotic.hpp"
#include "beamcap/simulate.hpp"
#include "beamcap/spectra.hpp"
#include "beamcap/waterfilling.hpp"

using namespace beamcap;
using Catch::Approx;

namespace {

SimConfig make_config(int tx, int rx, double rho, std::size_t trials, std::uint64_t seed = 1,
                      int workers = 0) {
  SimConfig c;
  c.dims = SystemDims::from_antennas(tx, rx);
  c.rho = rho;
  c.trials = trials;
  c.seed = seed;
  c.workers = workers;
  return c;
}

StrategySpec constant(int s, double rho) {
  StrategySpec spec;
  spec.kind = StrategyKind::constant_beams;
  spec.s = s;
  spec.p_on = rho / s;
  return spec;
}

double log_det_of(const ComplexMatrix& q, const ComplexMatrix& g, double p) {
  const std::size_t s = q.cols();
  return log_det_hpd(ComplexMatrix::identity(s) + Complex(p) * (q.adjoint() * g * q));
}

MultiRankCodebook random_multirank(int ltx, int budget, Rng& rng) {
  MultiRankCodebook mcb;
  mcb.ltx = ltx;
  mcb.subcodes.resize(ltx + 1);
  for (int s = 1; s <= ltx; ++s) {
    mcb.subcodes[s].ltx = ltx;
    mcb.subcodes[s].rank = s;
  }
  std::uniform_int_distribution<int> pick(0, ltx);
  int used = 0;
  while (used < budget) {
    const int s = pick(rng);
    if (s == 0) {
      if (mcb.off_count == 0) mcb.off_count = 1, ++used;
      continue;
    }
    if (s == ltx && !mcb.subcodes[s].matrices.empty()) continue;
    mcb.subcodes[s].matrices.push_back(s == ltx ? ComplexMatrix::identity(ltx)
                                                : sample_uniform_stiefel(ltx, s, rng));
    ++used;
  }
  return mcb;
}

}  // namespace

TEST_CASE("normalized and raw eigenvalues carry the same received power") {
  Rng rng(1);
  for (auto [tx, rx] : {std::pair{4, 2}, {2, 4}, {3, 3}}) {
    const SimConfig c = make_config(tx, rx, 1.0, 1);
    const ComplexMatrix h = sample_channel(c.dims, rng);
    CHECK(h.rows() == static_cast<std::size_t>(rx));
    CHECK(h.cols() == static_cast<std::size_t>(tx));
    const auto w = hermitian_eigenvalues(normalized_gram(h, c.dims));
    const auto raw = hermitian_eigenvalues(h.adjoint() * h);
    REQUIRE(w.size() == static_cast<std::size_t>(c.dims.m));
    const double p_on = 0.7;
    StrategySpec spec = constant(1, p_on);
    const double pbar = normalized_on_power(spec, c.dims);
    for (int i = 0; i < c.dims.m; ++i) CHECK(pbar * w[i] == Approx(p_on * raw[i]).epsilon(1e-10));
  }
}

TEST_CASE("perfect on/off matches the asymptotic prediction") {
  const SimConfig c = make_config(4, 4, 10.0, 10000);
  const StrategySpec spec = finite_design(c.dims, c.rho);
  const RateEstimate r = rate_perfect_onoff(c, spec);
  CHECK(r.trials == 10000);
  CHECK(r.mean_rate / c.dims.m == Approx(spec.predicted_rate).epsilon(0.05));
  CHECK(r.mean_power_used == Approx(10.0).epsilon(1e-12));
}

TEST_CASE("all beams on reproduces ln det(I + rho/m HH^H)") {
  const SimConfig c = make_config(2, 4, 100.0, 500, 5);
  const RateEstimate r = rate_perfect_onoff(c, constant(2, c.rho));
  double sum = 0.0;
  for (std::size_t i = 0; i < c.trials; ++i) {
    Rng rng = make_stream(c.seed, i);
    const ComplexMatrix h = sample_channel(c.dims, rng);
    sum += log_det_hpd(ComplexMatrix::identity(2) + Complex(c.rho / 2) * (h.adjoint() * h));
  }
  CHECK(r.mean_rate == Approx(sum / c.trials).epsilon(1e-10));
  CHECK(rate_csir(c).mean_rate == Approx(r.mean_rate).epsilon(1e-10));
}

TEST_CASE("gated strategy respects the power budget") {
  const SimConfig c = make_config(4, 2, 1e-3, 20000);
  const StrategySpec spec = finite_design(c.dims, c.rho);
  REQUIRE(spec.kind == StrategyKind::gated_single_beam);
  const RateEstimate r = rate_perfect_onoff(c, spec);
  CHECK(r.mean_power_used <= c.rho + 3.0 * r.power_std_error);
  CHECK(r.mean_rate > 0.0);

  StrategySpec off;
  off.kind = StrategyKind::off;
  const RateEstimate z = rate_perfect_onoff(c, off);
  CHECK(z.mean_rate == 0.0);
  CHECK(z.mean_power_used == 0.0);
}

TEST_CASE("a codebook holding the true beams is perfect beamforming") {
  const SimConfig c = make_config(4, 2, 10.0, 2000, 3);
  for (int s : {1, 2}) {
    const RateEstimate cheat = rate_with_selector(c, s, c.rho / s, [](const ComplexMatrix& vs) { return vs; });
    const RateEstimate perfect = rate_perfect_onoff(c, constant(s, c.rho));
    CHECK(cheat.mean_rate == Approx(perfect.mean_rate).epsilon(1e-9));
  }
}

TEST_CASE("finite codebook rate against the mu approximation") {
  const SimConfig c = make_config(4, 2, 10.0, 5000, 4);
  const StrategySpec spec = finite_design(c.dims, c.rho);
  REQUIRE(spec.kind == StrategyKind::constant_beams);
  const Codebook cb = design_subcode(4, spec.s, 16, 9, 2000, 8);
  const RateEstimate sim = rate_with_codebook(c, cb, spec.s, spec.p_on);
  const MuEstimate mu = estimate_mu(cb, 50000, 10, 0);
  const double approx = capacity_approx(c.dims, spec.s, mu.mu_hat, c.rho) * c.dims.m;
  CHECK(std::abs(sim.mean_rate - approx) / sim.mean_rate <= 0.03);
  CHECK(sim.mean_rate <= rate_perfect_onoff(c, spec).mean_rate + 2.0 * sim.std_error);
  CHECK_THROWS_AS(rate_with_codebook(c, cb, spec.s == 1 ? 2 : 1, spec.p_on), InvalidArgument);
}

TEST_CASE("bigger codebooks deliver more rate") {
  const SimConfig c = make_config(4, 2, 10.0, 4000, 6);
  double prev = 0.0, prev_se = 0.0;
  for (int k : {4, 16, 64}) {
    const Codebook cb = design_subcode(4, 2, k, 11, 300, 2);
    const RateEstimate r = rate_with_codebook(c, cb, 2, 5.0);
    CHECK(r.mean_rate >= prev - 2.0 * std::hypot(r.std_error, prev_se));
    prev = r.mean_rate;
    prev_se = r.std_error;
  }
}

TEST_CASE("water-filling rate matches its asymptotic capacity") {
  const SimConfig c = make_config(4, 4, 10.0, 10000, 7);
  const RateEstimate r = rate_csitr_waterfill(c);
  CHECK(r.mean_rate / 4 == Approx(solve_nu(10.0, 1.0).capacity).epsilon(0.05));
  CHECK(r.mean_power_used == Approx(10.0).epsilon(0.03));
  const RateEstimate onoff = rate_perfect_onoff(c, finite_design(c.dims, c.rho));
  CHECK(r.mean_rate >= onoff.mean_rate - 2.0 * std::hypot(r.std_error, onoff.std_error));
}

TEST_CASE("at high SNR every eigenvalue sits above water") {
  const SystemDims dims = SystemDims::from_antennas(4, 4);
  const double nu = solve_nu(1e4, 1.0).nu;
  int all_on = 0;
  for (int i = 0; i < 1000; ++i) {
    Rng rng = make_stream(12, i);
    const auto lam = hermitian_eigenvalues(normalized_gram(sample_channel(dims, rng), dims));
    if (lam.back() * nu >= 1.0) ++all_on;
  }
  CHECK(all_on >= 990);
}

TEST_CASE("scalar Rayleigh CSIR rate") {
  const double oracle = integrate([](double x) { return std::log1p(x) * std::exp(-x); }, 0.0, 60.0, 1e-12);
  CHECK(oracle == Approx(0.596347362323194).epsilon(1e-10));
  const RateEstimate r = rate_csir(make_config(1, 1, 1.0, 100000, 13));
  CHECK(std::abs(r.mean_rate - oracle) < 3.0 * r.std_error);
}

TEST_CASE("CSIR at low SNR grows like L_R rho") {
  const SimConfig c = make_config(2, 3, 1e-3, 20000, 14);
  CHECK(rate_csir(c).mean_rate / c.rho == Approx(3.0).epsilon(0.05));
}

TEST_CASE("strategy ordering and the 90 percent gap") {
  for (auto [tx, rx] : {std::pair{4, 2}, {4, 3}, {4, 4}})
    for (double rho : {0.1, 1.0, 10.0, 100.0}) {
      const SimConfig c = make_config(tx, rx, rho, 3000, 15);
      const RateEstimate wf = rate_csitr_waterfill(c);
      const StrategySpec spec = finite_design(c.dims, rho);
      const RateEstimate on = rate_perfect_onoff(c, spec);
      const RateEstimate csir = rate_csir(c);
      INFO(tx << "x" << rx << " rho=" << rho);
      CHECK(wf.mean_rate >= on.mean_rate - 2.0 * std::hypot(wf.std_error, on.std_error));
      CHECK(wf.mean_rate >= csir.mean_rate - 2.0 * std::hypot(wf.std_error, csir.std_error));
      CHECK(on.mean_rate >= 0.9 * wf.mean_rate);
      CHECK(on.mean_power_used <= rho * (1.0 + 1e-12) + 3.0 * on.power_std_error);
    }
}

TEST_CASE("normalized rate scales with dimension") {
  const RateEstimate r4 = rate_perfect_onoff(make_config(4, 4, 10.0, 4000, 16),
                                             finite_design(SystemDims::from_antennas(4, 4), 10.0));
  const RateEstimate r8 = rate_perfect_onoff(make_config(8, 8, 10.0, 2000, 16),
                                             finite_design(SystemDims::from_antennas(8, 8), 10.0));
  CHECK(r4.mean_rate / 4 == Approx(r8.mean_rate / 8).epsilon(0.04));
}

TEST_CASE("estimates do not depend on the worker count") {
  const StrategySpec spec = finite_design(SystemDims::from_antennas(4, 3), 3.0);
  const RateEstimate a = rate_perfect_onoff(make_config(4, 3, 3.0, 777, 17, 1), spec);
  const RateEstimate b = rate_perfect_onoff(make_config(4, 3, 3.0, 777, 17, 3), spec);
  CHECK(a.mean_rate == b.mean_rate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.mean_power_used == b.mean_power_used);
  const RateEstimate w1 = rate_csitr_waterfill(make_config(4, 3, 3.0, 777, 17, 1));
  const RateEstimate w4 = rate_csitr_waterfill(make_config(4, 3, 3.0, 777, 17, 4));
  CHECK(w1.mean_rate == w4.mean_rate);
  CHECK_THROWS_AS(rate_csir(make_config(2, 2, 1.0, 0)), InvalidArgument);
}

TEST_CASE("rank choice is the largest maximizer of the Lagrangian") {
  Rng rng(18);
  const SystemDims dims = SystemDims::from_antennas(4, 2);
  for (int rep = 0; rep < 200; ++rep) {
    const MultiRankCodebook mcb = random_multirank(4, 16, rng);
    const ComplexMatrix h = sample_channel(dims, rng);
    const double p_on = std::exp(std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
    const double kappa = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const FeedbackChoice fc = multirank_feedback(h, mcb, p_on, kappa);

    const ComplexMatrix g = h.adjoint() * h;
    int best_s = -1;
    double best = -1e300;
    std::size_t best_index = 0;
    for (int s = 0; s <= 4; ++s) {
      double info = -1e300;
      std::size_t index = 0;
      if (s == 0) {
        if (mcb.off_count == 0) continue;
        info = 0.0;
      } else {
        const auto& qs = mcb.subcodes[s].matrices;
        if (qs.empty()) continue;
        for (std::size_t i = 0; i < qs.size(); ++i) {
          const double v = log_det_of(qs[i], g, p_on);
          if (v > info) info = v, index = i;
        }
      }
      const double lag = info - kappa * s;
      if (lag >= best) best = lag, best_s = s, best_index = index;
    }
    CHECK(fc.s_tilde == best_s);
    if (best_s > 0) CHECK(fc.index == best_index);
  }
}

TEST_CASE("rank choice at the extremes of the threshold") {
  Rng rng(19);
  const SystemDims dims = SystemDims::from_antennas(4, 2);
  for (int rep = 0; rep < 50; ++rep) {
    const MultiRankCodebook mcb = random_multirank(4, 16, rng);
    const ComplexMatrix h = sample_channel(dims, rng);
    const auto values = rank_information(h, mcb, 1.0);
    double top = -1.0;
    int top_s = -1;
    for (int s = 0; s <= 4; ++s)
      if (values[s] && values[s]->info >= top) top = values[s]->info, top_s = s;
    CHECK(multirank_feedback(h, mcb, 1.0, 0.0).s_tilde == top_s);
    if (mcb.off_count > 0) CHECK(multirank_feedback(h, mcb, 1.0, 1e9).s_tilde == 0);
  }
  MultiRankCodebook empty;
  empty.ltx = 4;
  empty.subcodes.resize(5);
  CHECK_THROWS_AS(multirank_feedback(sample_channel(dims, rng), empty, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(multirank_feedback(sample_channel(dims, rng), random_multirank(4, 4, rng), 1.0, -1.0),
                  InvalidArgument);
}

TEST_CASE("threshold calibration") {
  const SimConfig c = make_config(4, 2, 1.0, 2000, 20);
  Rng rng(21);

  SECTION("a single rank is always chosen") {
    MultiRankCodebook mcb;
    mcb.ltx = 4;
    mcb.subcodes.resize(5);
    mcb.subcodes[2] = design_subcode(4, 2, 16, 1, 100, 1);
    for (int s : {1, 3, 4}) mcb.subcodes[s].ltx = 4, mcb.subcodes[s].rank = s;
    const double kappa = calibrate_kappa(mcb, c.rho / 2, c);
    const RateEstimate r = rate_multirank_fixed(c, mcb, c.rho / 2, kappa);
    CHECK(r.mean_power_used == Approx(c.rho));
  }

  SECTION("expected rank falls as the threshold rises, and calibration hits the budget") {
    const MultiRankCodebook mcb = random_multirank(4, 16, rng);
    const double p_on = 0.8;
    double prev = 1e9;
    for (double kappa : {0.0, 0.1, 0.3, 0.6, 1.0, 2.0}) {
      double sum = 0.0;
      for (int i = 0; i < 300; ++i) {
        Rng r = make_stream(22, i);
        sum += multirank_feedback(sample_channel(c.dims, r), mcb, p_on, kappa).s_tilde;
      }
      CHECK(sum <= prev);
      prev = sum;
    }
    if (mcb.off_count > 0) {
      const double kappa = calibrate_kappa(mcb, p_on, c);
      const RateEstimate r = rate_multirank_fixed(c, mcb, p_on, kappa);
      CHECK(r.mean_power_used == Approx(c.rho).epsilon(0.03));
    }
  }

  SECTION("infeasible budgets") {
    MultiRankCodebook mcb;
    mcb.ltx = 4;
    mcb.subcodes.resize(5);
    mcb.subcodes[1] = design_subcode(4, 1, 4, 1, 50, 1);
    CHECK_THROWS_AS(calibrate_kappa(mcb, c.rho / 8, c), Infeasible);
    CHECK_THROWS_AS(calibrate_kappa(mcb, c.rho * 4, c), Infeasible);
    CHECK_THROWS_AS(calibrate_kappa(mcb, 0.0, c), InvalidArgument);
  }
}

TEST_CASE("single-rank partition reduces to the fixed-codebook rate") {
  const SimConfig c = make_config(4, 2, 10.0, 1500, 23);
  MultiRankOptions opt;
  opt.design_iterations = 300;
  opt.design_restarts = 2;
  opt.partition = std::vector<int>{0, 0, 16, 0, 0};
  const MultiRankResult r = rate_multirank(c, 4, opt);
  CHECK(r.partition == *opt.partition);
  CHECK(r.p_on == Approx(5.0));
  CHECK(r.estimate.mean_power_used == Approx(10.0));

  const Codebook cb = design_subcode(4, 2, 16, c.seed, 300, 2);
  // Max-log-det feedback, recomputed trial by trial.
  double sum = 0.0;
  for (std::size_t i = 0; i < c.trials; ++i) {
    Rng rng = make_stream(c.seed, i);
    const ComplexMatrix g = [&] { const ComplexMatrix h = sample_channel(c.dims, rng); return h.adjoint() * h; }();
    double best = -1.0;
    for (const auto& q : cb.matrices) best = std::max(best, log_det_of(q, g, 5.0));
    sum += best;
  }
  CHECK(r.estimate.mean_rate == Approx(sum / c.trials).epsilon(1e-10));
  const RateEstimate chordal = rate_with_codebook(c, cb, 2, 5.0);
  CHECK(r.estimate.mean_rate >= chordal.mean_rate);
  CHECK(r.estimate.mean_rate <= chordal.mean_rate * 1.03);
}

TEST_CASE("partition validation") {
  const SimConfig c = make_config(4, 2, 1.0, 10);
  MultiRankOptions opt;
  opt.partition = std::vector<int>{0, 20, 0, 0, 0};
  CHECK_THROWS_AS(rate_multirank(c, 4, opt), InvalidArgument);
  opt.partition = std::vector<int>{0, 4, 0};
  CHECK_THROWS_AS(rate_multirank(c, 4, opt), InvalidArgument);
  opt.partition = std::vector<int>{2, 4, 0, 0, 0};
  CHECK_THROWS_AS(rate_multirank(c, 4, opt), InvalidArgument);
  CHECK_THROWS_AS(rate_multirank(make_config(6, 2, 1.0, 10), 4), InvalidArgument);
}

TEST_CASE("capacity approximation endpoints") {
  const SystemDims dims = SystemDims::from_antennas(4, 2);
  CHECK(capacity_approx(dims, 1, 1.0, 3.0) == Approx(info_rate_infinity(invert_sbar(0.5, 0.5), 0.5, 3.0)));
  CHECK(capacity_approx(dims, 2, 0.0, 3.0) == 0.0);
  CHECK(capacity_approx(dims, 2, 0.5, 3.0) < capacity_approx(dims, 2, 1.0, 3.0));
  CHECK_THROWS_AS(capacity_approx(dims, 2, 1.5, 3.0), InvalidArgument);
  CHECK_THROWS_AS(capacity_approx(dims, 3, 1.0, 3.0), InvalidArgument);
}
