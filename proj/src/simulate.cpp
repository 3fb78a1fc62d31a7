// SPDX-License-Identifier: Apache-2.0
#include "beamcap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "beamcap/errors.hpp"
#include "beamcap/onoff_asymptotic.hpp"
#include "beamcap/parallel.hpp"
#include "beamcap/waterfilling.hpp"

namespace beamcap {

namespace {

constexpr double kEmpty = std::numeric_limits<double>::quiet_NaN();
// Calibration draws come from streams disjoint from the evaluation trials.
constexpr std::uint64_t kCalibrationStream = std::uint64_t{1} << 48;

struct TrialOutcome {
  double rate;
  double power;
};

RateEstimate run_trials(const SimConfig& config, std::uint64_t stream_offset,
                        const std::function<TrialOutcome(Rng&)>& trial) {
  if (config.trials < 1) throw InvalidArgument("simulation needs at least one trial");
  std::vector<double> rates(config.trials), powers(config.trials);
  parallel_for(config.trials, config.workers, [&](std::size_t i) {
    Rng rng = make_stream(config.seed, stream_offset + i);
    const TrialOutcome o = trial(rng);
    rates[i] = o.rate;
    powers[i] = o.power;
  });
  const SampleStats r = sample_stats(rates);
  const SampleStats p = sample_stats(powers);
  return {r.mean, r.std_error, config.trials, p.mean, p.std_error};
}

// ln det(I + p M) for a small Hermitian PSD M, one value per p in `powers`.
void log_dets(const ComplexMatrix& m, const std::vector<double>& powers, double* out) {
  const std::size_t s = m.rows();
  if (s == 1) {
    const double g = m(0, 0).real();
    for (std::size_t k = 0; k < powers.size(); ++k) out[k] = std::log1p(powers[k] * g);
    return;
  }
  double ev[8];
  std::vector<double> values;
  if (s == 2) {
    const double a = m(0, 0).real(), d = m(1, 1).real();
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(m(0, 1)));
    ev[0] = std::max(0.5 * (a + d) + disc, 0.0);
    ev[1] = std::max(0.5 * (a + d) - disc, 0.0);
  } else {
    values = hermitian_eigenvalues(m);
  }
  const double* lam = s == 2 ? ev : values.data();
  for (std::size_t k = 0; k < powers.size(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s; ++j) acc += std::log1p(powers[k] * std::max(lam[j], 0.0));
    out[k] = acc;
  }
}

// Rank tables hold one row of L_T + 1 values per trial; NaN marks an empty rank.
int select_rank_row(const double* row, int ltx, double kappa) {
  for (int s = ltx; s >= 0; --s) {
    if (std::isnan(row[s])) continue;
    bool ok = true;
    for (int t = 0; t < s && ok; ++t)
      if (!std::isnan(row[t]) && row[s] - row[t] < (s - t) * kappa) ok = false;
    if (ok) return s;
  }
  throw InvalidArgument("multi-rank codebook has no nonempty sub-code");
}

double kappa_from_rows(const std::vector<double>& table, std::size_t n, int ltx, double p_on,
                       double rho) {
  const std::size_t width = static_cast<std::size_t>(ltx) + 1;
  // s_tilde(kappa) = s_0 + sum_j (s_j - s_{j-1}) [kappa <= e_j] per trial.
  std::vector<std::pair<double, double>> events;
  double base = 0.0;
  std::vector<int> ranks;
  std::vector<double> reach;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &table[i * width];
    ranks.clear();
    for (int s = 0; s <= ltx; ++s)
      if (!std::isnan(row[s])) ranks.push_back(s);
    if (ranks.empty()) throw InvalidArgument("multi-rank codebook has no nonempty sub-code");
    base += ranks[0];
    reach.assign(ranks.size(), std::numeric_limits<double>::infinity());
    for (std::size_t j = 1; j < ranks.size(); ++j)
      for (std::size_t k = 0; k < j; ++k)
        reach[j] = std::min(reach[j], (row[ranks[j]] - row[ranks[k]]) / (ranks[j] - ranks[k]));
    for (std::size_t j = ranks.size(); j-- > 1;) {
      if (j + 1 < ranks.size()) reach[j] = std::max(reach[j], reach[j + 1]);
      if (reach[j] >= 0.0) events.emplace_back(reach[j], ranks[j] - ranks[j - 1]);
    }
  }
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const double scale = p_on / static_cast<double>(n);
  const double tol = 0.01 * rho;
  double level = base;
  if (level * scale > rho + tol) throw Infeasible("on-power too high even with the fewest beams");
  double best_kappa = events.empty() ? 0.0 : events.front().first * 2.0 + 1.0;
  double best_gap = std::abs(level * scale - rho);
  for (std::size_t i = 0; i < events.size();) {
    const double e = events[i].first;
    while (i < events.size() && events[i].first == e) level += events[i++].second;
    const double next = i < events.size() ? events[i].first : 0.0;
    const double gap = std::abs(level * scale - rho);
    if (gap < best_gap || (gap == best_gap && level * scale <= rho)) {
      best_gap = gap;
      best_kappa = 0.5 * (e + next);
    }
  }
  if (level * scale < rho - tol) throw Infeasible("power target unreachable even at kappa = 0");
  return best_kappa;
}

RateEstimate evaluate_rows(const std::vector<double>& table, std::size_t n, int ltx, double p_on,
                           double kappa) {
  const std::size_t width = static_cast<std::size_t>(ltx) + 1;
  std::vector<double> rates(n), powers(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &table[i * width];
    const int s = select_rank_row(row, ltx, kappa);
    rates[i] = row[s];
    powers[i] = s * p_on;
  }
  const SampleStats r = sample_stats(rates);
  const SampleStats p = sample_stats(powers);
  return {r.mean, r.std_error, n, p.mean, p.std_error};
}

std::vector<double> rank_table(const MultiRankCodebook& mcb, double p_on, const SimConfig& config,
                               std::uint64_t stream_offset) {
  const std::size_t width = static_cast<std::size_t>(mcb.ltx) + 1;
  std::vector<double> table(config.trials * width, kEmpty);
  parallel_for(config.trials, config.workers, [&](std::size_t i) {
    Rng rng = make_stream(config.seed, stream_offset + i);
    const auto values = rank_information(sample_channel(config.dims, rng), mcb, p_on);
    for (std::size_t s = 0; s < width; ++s)
      if (values[s]) table[i * width + s] = values[s]->info;
  });
  return table;
}

void check_mcb(const MultiRankCodebook& mcb, const SimConfig& config) {
  if (mcb.ltx != config.dims.tx || mcb.subcodes.size() != static_cast<std::size_t>(mcb.ltx) + 1)
    throw InvalidArgument("multi-rank codebook does not match the transmit antennas");
}

}  // namespace

ComplexMatrix sample_channel(const SystemDims& dims, Rng& rng) {
  return sample_gaussian_matrix(dims.rx, dims.tx, rng);
}

ComplexMatrix normalized_gram(const ComplexMatrix& h, const SystemDims& dims) {
  const ComplexMatrix g = dims.rx <= dims.tx ? h * h.adjoint() : h.adjoint() * h;
  return Complex(1.0 / dims.m) * g;
}

RateEstimate rate_perfect_onoff(const SimConfig& config, const StrategySpec& strategy) {
  const SystemDims& dims = config.dims;
  if (strategy.kind == StrategyKind::constant_beams && (strategy.s < 1 || strategy.s > dims.m))
    throw InvalidArgument("rate_perfect_onoff: beam count out of range");
  const double pbar = normalized_on_power(strategy, dims);
  return run_trials(config, 0, [&](Rng& rng) -> TrialOutcome {
    const ComplexMatrix h = sample_channel(dims, rng);
    if (strategy.kind == StrategyKind::off) return {0.0, 0.0};
    const std::vector<double> lam = hermitian_eigenvalues(normalized_gram(h, dims));
    if (strategy.kind == StrategyKind::gated_single_beam) {
      if (lam[0] >= strategy.kappa) return {std::log1p(pbar * lam[0]), strategy.p_on};
      return {0.0, 0.0};
    }
    double rate = 0.0;
    for (int i = 0; i < strategy.s; ++i) rate += std::log1p(pbar * std::max(lam[i], 0.0));
    return {rate, strategy.s * strategy.p_on};
  });
}

RateEstimate rate_with_selector(const SimConfig& config, int s, double p_on,
                                const BeamSelector& select) {
  const SystemDims& dims = config.dims;
  if (s < 1 || s > dims.tx) throw InvalidArgument("rate_with_selector: rank out of range");
  return run_trials(config, 0, [&](Rng& rng) -> TrialOutcome {
    const ComplexMatrix h = sample_channel(dims, rng);
    const ComplexMatrix g = h.adjoint() * h;
    const ComplexMatrix vs = hermitian_eig(g).vectors.leading_columns(s);
    const ComplexMatrix q = select(vs);
    if (q.rows() != static_cast<std::size_t>(dims.tx) || q.cols() != static_cast<std::size_t>(s))
      throw InvalidArgument("rate_with_selector: beamforming matrix has the wrong shape");
    const ComplexMatrix m = ComplexMatrix::identity(s) + Complex(p_on) * (q.adjoint() * g * q);
    return {log_det_hpd(m), s * p_on};
  });
}

RateEstimate rate_with_codebook(const SimConfig& config, const Codebook& codebook, int s,
                                double p_on) {
  if (codebook.rank != s || codebook.ltx != config.dims.tx)
    throw InvalidArgument("rate_with_codebook: codebook does not match rank or antennas");
  if (codebook.matrices.empty()) throw InvalidArgument("rate_with_codebook: empty codebook");
  return rate_with_selector(config, s, p_on, [&](const ComplexMatrix& vs) {
    return codebook.matrices[select_beamforming(vs, codebook)];
  });
}

RateEstimate rate_csitr_waterfill(const SimConfig& config) {
  const SystemDims& dims = config.dims;
  const double nu = solve_nu(config.rho, dims.y).nu;
  return run_trials(config, 0, [&](Rng& rng) -> TrialOutcome {
    const std::vector<double> lam = hermitian_eigenvalues(normalized_gram(sample_channel(dims, rng), dims));
    double rate = 0.0, power = 0.0;
    for (double l : lam)
      if (l * nu >= 1.0) {
        rate += std::log(l * nu);
        power += nu - 1.0 / l;
      }
    return {rate, power / dims.m};
  });
}

RateEstimate rate_csir(const SimConfig& config) {
  const SystemDims& dims = config.dims;
  const double gain = config.rho * dims.m / dims.tx;
  return run_trials(config, 0, [&](Rng& rng) -> TrialOutcome {
    const std::vector<double> lam = hermitian_eigenvalues(normalized_gram(sample_channel(dims, rng), dims));
    double rate = 0.0;
    for (double l : lam) rate += std::log1p(gain * std::max(l, 0.0));
    return {rate, config.rho};
  });
}

std::vector<int> MultiRankCodebook::sizes() const {
  std::vector<int> k(subcodes.size(), 0);
  for (std::size_t s = 0; s < subcodes.size(); ++s)
    k[s] = s == 0 ? off_count : static_cast<int>(subcodes[s].size());
  return k;
}

std::vector<std::optional<RankValue>> rank_information(const ComplexMatrix& h,
                                                       const MultiRankCodebook& mcb, double p_on) {
  std::vector<std::optional<RankValue>> out(static_cast<std::size_t>(mcb.ltx) + 1);
  if (mcb.off_count > 0) out[0] = RankValue{0.0, 0};
  const ComplexMatrix g = h.adjoint() * h;
  const std::vector<double> powers{p_on};
  for (int s = 1; s <= mcb.ltx; ++s) {
    const Codebook& cb = mcb.subcodes[s];
    for (std::size_t i = 0; i < cb.matrices.size(); ++i) {
      const ComplexMatrix& q = cb.matrices[i];
      double v = 0.0;
      log_dets(q.adjoint() * g * q, powers, &v);
      if (!out[s] || v > out[s]->info) out[s] = RankValue{v, i};
    }
  }
  return out;
}

int select_rank(const std::vector<std::optional<RankValue>>& values, double kappa) {
  std::vector<double> row(values.size(), kEmpty);
  for (std::size_t s = 0; s < values.size(); ++s)
    if (values[s]) row[s] = values[s]->info;
  return select_rank_row(row.data(), static_cast<int>(values.size()) - 1, kappa);
}

FeedbackChoice multirank_feedback(const ComplexMatrix& h, const MultiRankCodebook& mcb,
                                  double p_on, double kappa) {
  if (!(kappa >= 0.0)) throw InvalidArgument("multirank_feedback: kappa must be >= 0");
  const auto values = rank_information(h, mcb, p_on);
  const int s = select_rank(values, kappa);
  return {s, values[s]->index};
}

double calibrate_kappa(const MultiRankCodebook& mcb, double p_on, const SimConfig& config) {
  if (!(p_on > 0.0)) throw InvalidArgument("calibrate_kappa: p_on must be positive");
  check_mcb(mcb, config);
  const auto table = rank_table(mcb, p_on, config, kCalibrationStream);
  return kappa_from_rows(table, config.trials, mcb.ltx, p_on, config.rho);
}

RateEstimate rate_multirank_fixed(const SimConfig& config, const MultiRankCodebook& mcb,
                                  double p_on, double kappa) {
  check_mcb(mcb, config);
  const auto table = rank_table(mcb, p_on, config, 0);
  return evaluate_rows(table, config.trials, mcb.ltx, p_on, kappa);
}

Codebook design_subcode(int ltx, int rank, int size, std::uint64_t seed, int iterations,
                        int restarts) {
  Rng rng = make_stream(seed ^ 0x6a09e667f3bcc909ULL,
                        (static_cast<std::uint64_t>(rank) << 32) | static_cast<std::uint32_t>(size));
  return design_codebook(ltx, rank, size, rng, iterations, restarts);
}

namespace {

std::vector<std::vector<int>> candidate_partitions(int ltx, int budget) {
  std::vector<std::vector<int>> out;
  for (int k0 = 0; k0 <= 1; ++k0) {
    const int total = budget - k0;
    if (total < 1) continue;
    auto add = [&](int s1, int k1, int s2, int k2) {
      std::vector<int> p(static_cast<std::size_t>(ltx) + 1, 0);
      p[0] = k0;
      p[s1] += k1;
      if (s2 > 0) p[s2] += k2;
      out.push_back(std::move(p));
    };
    for (int s = 1; s <= ltx; ++s)
      if (s < ltx || total == 1) add(s, total, 0, 0);
    for (int s1 = 1; s1 < ltx; ++s1)
      for (int s2 = s1 + 1; s2 <= ltx; ++s2) {
        if (s2 == ltx) {
          if (total >= 2) add(s1, total - 1, s2, 1);
          continue;
        }
        for (int k1 = 1; k1 < total; ++k1) add(s1, k1, s2, total - k1);
      }
  }
  return out;
}

}  // namespace

MultiRankResult rate_multirank(const SimConfig& config, int feedback_bits,
                               const MultiRankOptions& options) {
  const int ltx = config.dims.tx;
  if (feedback_bits < 1 || feedback_bits > 30)
    throw InvalidArgument("rate_multirank: feedback_bits out of range");
  const int budget = 1 << feedback_bits;
  std::vector<std::vector<int>> partitions;
  if (options.partition) {
    const auto& p = *options.partition;
    if (p.size() != static_cast<std::size_t>(ltx) + 1)
      throw InvalidArgument("rate_multirank: partition needs one size per rank 0..L_T");
    if (std::accumulate(p.begin(), p.end(), 0) > budget || std::accumulate(p.begin(), p.end(), 0) < 1)
      throw InvalidArgument("rate_multirank: partition sizes exceed the feedback budget");
    if (p[0] > 1 || p[ltx] > 1 || *std::min_element(p.begin(), p.end()) < 0)
      throw InvalidArgument("rate_multirank: off and full-rank sub-codes hold at most one entry");
    partitions.push_back(p);
  } else {
    if (ltx > 4 || feedback_bits > 6)
      throw InvalidArgument("rate_multirank: search limited to L_T <= 4 and R_fb <= 6");
    partitions = candidate_partitions(ltx, budget);
  }

  // Distinct (rank, size) sub-codes.
  std::vector<std::pair<int, int>> keys;
  for (const auto& p : partitions)
    for (int s = 1; s <= ltx; ++s)
      if (p[s] > 0) keys.emplace_back(s, p[s]);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<Codebook> books;
  for (const auto& [s, k] : keys)
    books.push_back(design_subcode(ltx, s, k, config.seed, options.design_iterations,
                                   options.design_restarts));
  auto book_of = [&](int s, int k) {
    return static_cast<std::size_t>(
        std::lower_bound(keys.begin(), keys.end(), std::make_pair(s, k)) - keys.begin());
  };

  // On-power grid: every constant-rank point plus a log grid reaching into gated territory.
  const double rho = config.rho;
  std::vector<double> grid;
  for (int s = 1; s <= ltx; ++s) grid.push_back(rho / s);
  constexpr int kLogPoints = 12;
  for (int i = 0; i < kLogPoints; ++i)
    grid.push_back(rho / ltx * std::pow(16.0 * ltx, static_cast<double>(i) / (kLogPoints - 1)));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const std::size_t np = grid.size();

  // best[batch][book][p][trial] = I_s for the sub-code, computed once per channel draw.
  const std::size_t n = config.trials;
  std::vector<double> best[2];
  for (int batch = 0; batch < 2; ++batch) {
    best[batch].assign(books.size() * np * n, -std::numeric_limits<double>::infinity());
    const std::uint64_t offset = batch == 0 ? kCalibrationStream : 0;
    parallel_for(n, config.workers, [&](std::size_t i) {
      Rng rng = make_stream(config.seed, offset + i);
      const ComplexMatrix h = sample_channel(config.dims, rng);
      const ComplexMatrix g = h.adjoint() * h;
      std::vector<double> ld(np);
      for (std::size_t b = 0; b < books.size(); ++b)
        for (const ComplexMatrix& q : books[b].matrices) {
          log_dets(q.adjoint() * g * q, grid, ld.data());
          for (std::size_t k = 0; k < np; ++k) {
            double& slot = best[batch][(b * np + k) * n + i];
            slot = std::max(slot, ld[k]);
          }
        }
    });
  }

  MultiRankResult result;
  double best_cal = -1.0;
  const std::size_t width = static_cast<std::size_t>(ltx) + 1;
  std::vector<double> cal(n * width), eval(n * width);
  for (const auto& p : partitions) {
    for (std::size_t k = 0; k < np; ++k) {
      for (std::size_t i = 0; i < n; ++i)
        for (int s = 0; s <= ltx; ++s) {
          double c = kEmpty, e = kEmpty;
          if (s == 0 && p[0] > 0) c = e = 0.0;
          if (s > 0 && p[s] > 0) {
            const std::size_t b = book_of(s, p[s]);
            c = best[0][(b * np + k) * n + i];
            e = best[1][(b * np + k) * n + i];
          }
          cal[i * width + s] = c;
          eval[i * width + s] = e;
        }
      double kappa = 0.0;
      try {
        kappa = kappa_from_rows(cal, n, ltx, grid[k], rho);
      } catch (const Infeasible&) {
        continue;
      }
      ++result.candidates;
      // Choose on the calibration batch; the evaluation batch only reports the winner.
      const RateEstimate est = evaluate_rows(cal, n, ltx, grid[k], kappa);
      if (est.mean_rate > best_cal) {
        const RateEstimate held_out = evaluate_rows(eval, n, ltx, grid[k], kappa);
        if (held_out.mean_power_used > rho * 1.01 + 3.0 * held_out.power_std_error) continue;
        best_cal = est.mean_rate;
        result.estimate = held_out;
        result.partition = p;
        result.p_on = grid[k];
        result.kappa = kappa;
      }
    }
  }
  if (result.partition.empty())
    throw Infeasible("rate_multirank: no partition meets the power constraint");
  return result;
}

double capacity_approx(const SystemDims& dims, int s, double mu, double rho) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("capacity_approx: mu must lie in [0, 1]");
  if (s < 1 || s > dims.m) throw InvalidArgument("capacity_approx: beam count out of range");
  if (mu == 0.0) return 0.0;
  const double a = invert_sbar(static_cast<double>(s) / dims.m, dims.y);
  return info_rate_infinity(a, dims.y, mu * rho);
}

}  // namespace beamcap
