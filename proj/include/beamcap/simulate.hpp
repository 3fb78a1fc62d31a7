// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "beamcap/beam_design.hpp"
#include "beamcap/grassmann.hpp"
#include "beamcap/linalg.hpp"
#include "beamcap/spectra.hpp"

namespace beamcap {

struct SimConfig {
  SystemDims dims;
  double rho = 1.0;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: default_worker_count()
};

struct RateEstimate {
  double mean_rate = 0.0;  // nats per channel use, whole link
  double std_error = 0.0;
  std::size_t trials = 0;
  double mean_power_used = 0.0;
  double power_std_error = 0.0;
};

// H is L_R x L_T with CN(0,1) entries.
ComplexMatrix sample_channel(const SystemDims& dims, Rng& rng);
// W = (1/m) HH^H or (1/m) H^H H, whichever is m x m.
ComplexMatrix normalized_gram(const ComplexMatrix& h, const SystemDims& dims);

RateEstimate rate_perfect_onoff(const SimConfig& config, const StrategySpec& strategy);

// Beam choice from the top-s right singular vectors of H (L_T x s).
using BeamSelector = std::function<ComplexMatrix(const ComplexMatrix& vs)>;
RateEstimate rate_with_selector(const SimConfig& config, int s, double p_on,
                                const BeamSelector& select);
RateEstimate rate_with_codebook(const SimConfig& config, const Codebook& codebook, int s,
                                double p_on);

RateEstimate rate_csitr_waterfill(const SimConfig& config);
RateEstimate rate_csir(const SimConfig& config);

// Sub-code per rank 0..L_T. Rank 0 carries no matrices; off_count says whether it is used.
struct MultiRankCodebook {
  int ltx = 0;
  int off_count = 0;
  std::vector<Codebook> subcodes;  // index = rank; empty matrices means K_s = 0

  std::vector<int> sizes() const;  // K_0 .. K_{L_T}
};

struct RankValue {
  double info = 0.0;       // I_s(H)
  std::size_t index = 0;   // maximizer within B_s
};

// I_s(H) = max over B_s of ln|I + p_on H Q Q^H H^H| for every nonempty rank.
std::vector<std::optional<RankValue>> rank_information(const ComplexMatrix& h,
                                                       const MultiRankCodebook& mcb, double p_on);
// Largest s with I_s - I_t >= (s - t) kappa against all smaller nonempty ranks.
int select_rank(const std::vector<std::optional<RankValue>>& values, double kappa);

struct FeedbackChoice {
  int s_tilde = 0;
  std::size_t index = 0;
};

FeedbackChoice multirank_feedback(const ComplexMatrix& h, const MultiRankCodebook& mcb,
                                  double p_on, double kappa);

double calibrate_kappa(const MultiRankCodebook& mcb, double p_on, const SimConfig& config);

RateEstimate rate_multirank_fixed(const SimConfig& config, const MultiRankCodebook& mcb,
                                  double p_on, double kappa);

// Deterministic sub-code design shared by the partition search and its comparators.
Codebook design_subcode(int ltx, int rank, int size, std::uint64_t seed, int iterations,
                        int restarts);

struct MultiRankOptions {
  int design_iterations = 2000;
  int design_restarts = 8;
  std::optional<std::vector<int>> partition;  // K_0 .. K_{L_T}; searched when absent
};

struct MultiRankResult {
  RateEstimate estimate;
  std::vector<int> partition;
  double p_on = 0.0;
  double kappa = 0.0;
  std::size_t candidates = 0;
};

MultiRankResult rate_multirank(const SimConfig& config, int feedback_bits,
                               const MultiRankOptions& options = {});

// Perfect-beamforming limit with the on-power scaled by mu, nats per dimension.
double capacity_approx(const SystemDims& dims, int s, double mu, double rho);

}  // namespace beamcap
