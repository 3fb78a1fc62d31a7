// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "beamcap/linalg.hpp"

namespace beamcap {

struct Codebook {
  int ltx = 0;
  int rank = 0;
  std::vector<ComplexMatrix> matrices;
  double min_pairwise_dc2 = 0.0;  // infinite for a single matrix
  std::optional<double> measured_mean_dc2;
  // Reserves one extra feedback index meaning "transmitter off". Never stored as a matrix.
  bool off_index = false;

  std::size_t size() const { return matrices.size(); }
  // Feedback indices consumed, counting the off index.
  std::size_t index_count() const { return matrices.size() + (off_index ? 1 : 0); }
};

double chordal_distance_sq(const ComplexMatrix& q1, const ComplexMatrix& q2);
ComplexMatrix sample_uniform_stiefel(int ltx, int rank, Rng& rng);

Codebook design_codebook(int ltx, int rank, int size, Rng& rng, int iterations = 2000,
                         int restarts = 8);

// argmax_i ||Vs^H Q_i||_F^2, lowest index on ties.
std::size_t select_beamforming(const ComplexMatrix& vs, const Codebook& codebook);

struct MuEstimate {
  double mu_hat = 0.0;
  double mean_dc2 = 0.0;
  double offdiag_max = 0.0;  // of the estimated E[Vs^H Q Q^H Vs]
  double diag_spread = 0.0;
  std::size_t trials = 0;
};

MuEstimate estimate_mu(const Codebook& codebook, std::size_t trials, std::uint64_t seed,
                       int workers = 0);

struct DistortionBounds {
  int t = 0;
  double eta = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mu_lower = 0.0;
  double mu_upper = 0.0;
  bool small_codebook = false;  // the bounds assume a large codebook
};

DistortionBounds distortion_bounds(int ltx, int rank, int feedback_bits, bool gated = false);

void write_codebook(std::ostream& out, const Codebook& codebook);
Codebook read_codebook(std::istream& in);

}  // namespace beamcap
