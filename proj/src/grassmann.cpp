// SPDX-License-Identifier: Apache-2.0
#include "beamcap/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "beamcap/errors.hpp"
#include "beamcap/parallel.hpp"

namespace beamcap {

double chordal_distance_sq(const ComplexMatrix& q1, const ComplexMatrix& q2) {
  if (q1.rows() != q2.rows() || q1.cols() != q2.cols())
    throw InvalidArgument("chordal_distance_sq: shape mismatch");
  const std::size_t s = q1.cols();
  double overlap = 0.0;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      Complex acc = 0.0;
      for (std::size_t k = 0; k < q1.rows(); ++k) acc += std::conj(q1(k, i)) * q2(k, j);
      overlap += std::norm(acc);
    }
  return std::max(static_cast<double>(s) - overlap, 0.0);
}

ComplexMatrix sample_uniform_stiefel(int ltx, int rank, Rng& rng) {
  if (rank < 1 || rank > ltx) throw InvalidArgument("sample_uniform_stiefel: need 1 <= rank <= ltx");
  return orthonormalize(sample_gaussian_matrix(ltx, rank, rng));
}

namespace {

// Canonical i < j order so a reloaded codebook reports the same bits.
double min_pairwise(const std::vector<ComplexMatrix>& qs) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t j = i + 1; j < qs.size(); ++j)
      best = std::min(best, chordal_distance_sq(qs[i], qs[j]));
  return best;
}

struct Packing {
  std::vector<ComplexMatrix> points;
  std::vector<double> dist;  // K x K
  std::size_t k;

  double& d(std::size_t i, std::size_t j) { return dist[i * k + j]; }

  double min_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) best = std::min(best, dist[i * k + j]);
    return best;
  }
  double nearest(std::size_t i, std::size_t skip) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j)
      if (j != i && j != skip) best = std::min(best, dist[i * k + j]);
    return best;
  }
};

Packing random_packing(int ltx, int rank, std::size_t k, Rng& rng) {
  Packing p{{}, std::vector<double>(k * k, 0.0), k};
  for (std::size_t i = 0; i < k; ++i) p.points.push_back(sample_uniform_stiefel(ltx, rank, rng));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      p.d(i, j) = p.d(j, i) = chordal_distance_sq(p.points[i], p.points[j]);
  return p;
}

// Pushes the worst pair apart: one endpoint is replaced by a fresh uniform sample or by a
// jittered copy of itself, and the move is kept only if the packing does not get worse.
void refine(Packing& p, int ltx, int rank, int iterations, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<double> cand(p.k);
  for (int it = 0; it < iterations; ++it) {
    std::size_t wi = 0, wj = 1;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.k; ++i)
      for (std::size_t j = i + 1; j < p.k; ++j)
        if (p.d(i, j) < worst) worst = p.d(i, j), wi = i, wj = j;
    const std::size_t victim = p.nearest(wi, wj) <= p.nearest(wj, wi) ? wi : wj;

    ComplexMatrix q = sample_uniform_stiefel(ltx, rank, rng);
    if (it % 2 == 1) {
      const double step = 0.5 * std::sqrt(std::max(worst, 1e-6));
      ComplexMatrix moved = p.points[victim];
      for (int r = 0; r < ltx; ++r)
        for (int c = 0; c < rank; ++c) {
          const double re = normal(rng);
          const double im = normal(rng);
          moved(r, c) += step * Complex(re, im);
        }
      q = orthonormalize(moved);
    }

    double cand_nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.k; ++j) {
      cand[j] = j == victim ? 0.0 : chordal_distance_sq(q, p.points[j]);
      if (j != victim) cand_nearest = std::min(cand_nearest, cand[j]);
    }
    double others = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.k; ++i)
      for (std::size_t j = i + 1; j < p.k; ++j)
        if (i != victim && j != victim) others = std::min(others, p.d(i, j));
    const double new_min = std::min(others, cand_nearest);
    const double old_nearest = p.nearest(victim, victim);
    if (new_min > worst || (new_min == worst && cand_nearest > old_nearest)) {
      p.points[victim] = q;
      for (std::size_t j = 0; j < p.k; ++j)
        if (j != victim) p.d(victim, j) = p.d(j, victim) = cand[j];
    }
  }
}

}  // namespace

Codebook design_codebook(int ltx, int rank, int size, Rng& rng, int iterations, int restarts) {
  if (rank < 1 || rank > ltx) throw InvalidArgument("design_codebook: need 1 <= rank <= ltx");
  if (size < 1) throw InvalidArgument("design_codebook: size must be >= 1");
  Codebook cb;
  cb.ltx = ltx;
  cb.rank = rank;
  if (rank == ltx) {
    if (size != 1) throw InvalidArgument("design_codebook: full-rank planes are all identical");
    cb.matrices.push_back(ComplexMatrix::identity(ltx));
    cb.min_pairwise_dc2 = std::numeric_limits<double>::infinity();
    return cb;
  }
  if (size == 1) {
    cb.matrices.push_back(sample_uniform_stiefel(ltx, rank, rng));
    cb.min_pairwise_dc2 = std::numeric_limits<double>::infinity();
    return cb;
  }
  double best = -1.0;
  for (int restart = 0; restart < std::max(restarts, 1); ++restart) {
    Packing p = random_packing(ltx, rank, static_cast<std::size_t>(size), rng);
    refine(p, ltx, rank, iterations, rng);
    const double score = p.min_distance();
    if (score > best) {
      best = score;
      cb.matrices = std::move(p.points);
    }
  }
  cb.min_pairwise_dc2 = min_pairwise(cb.matrices);
  return cb;
}

std::size_t select_beamforming(const ComplexMatrix& vs, const Codebook& codebook) {
  if (codebook.matrices.empty()) throw InvalidArgument("select_beamforming: empty codebook");
  if (vs.rows() != static_cast<std::size_t>(codebook.ltx) ||
      vs.cols() != static_cast<std::size_t>(codebook.rank))
    throw InvalidArgument("select_beamforming: shape mismatch");
  std::size_t best_index = 0;
  double best = -1.0;
  const std::size_t s = vs.cols();
  for (std::size_t idx = 0; idx < codebook.matrices.size(); ++idx) {
    const ComplexMatrix& q = codebook.matrices[idx];
    double score = 0.0;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        Complex acc = 0.0;
        for (std::size_t k = 0; k < vs.rows(); ++k) acc += std::conj(vs(k, i)) * q(k, j);
        score += std::norm(acc);
      }
    if (score > best) {
      best = score;
      best_index = idx;
    }
  }
  return best_index;
}

MuEstimate estimate_mu(const Codebook& codebook, std::size_t trials, std::uint64_t seed,
                       int workers) {
  if (trials < 1) throw InvalidArgument("estimate_mu: trials must be >= 1");
  const std::size_t s = static_cast<std::size_t>(codebook.rank);
  // Per trial: d_c^2, then the s x s entries of Vs^H Q Q^H Vs.
  const std::size_t stride = 1 + 2 * s * s;
  std::vector<double> samples(trials * stride);
  parallel_for(trials, workers, [&](std::size_t trial) {
    Rng rng = make_stream(seed, trial);
    const ComplexMatrix vs = sample_uniform_stiefel(codebook.ltx, codebook.rank, rng);
    const ComplexMatrix& q = codebook.matrices[select_beamforming(vs, codebook)];
    const ComplexMatrix g = vs.adjoint() * q;
    const ComplexMatrix m = g * g.adjoint();
    double* row = &samples[trial * stride];
    row[0] = std::max(static_cast<double>(s) - m.trace().real(), 0.0);
    for (std::size_t i = 0; i < s * s; ++i) {
      row[1 + 2 * i] = m.data()[i].real();
      row[2 + 2 * i] = m.data()[i].imag();
    }
  });

  std::vector<double> column(trials);
  auto column_mean = [&](std::size_t offset) {
    for (std::size_t t = 0; t < trials; ++t) column[t] = samples[t * stride + offset];
    return pairwise_sum(column) / static_cast<double>(trials);
  };
  MuEstimate est;
  est.trials = trials;
  est.mean_dc2 = column_mean(0);
  est.mu_hat = 1.0 - est.mean_dc2 / static_cast<double>(s);
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      const std::size_t e = i * s + j;
      const Complex mean(column_mean(1 + 2 * e), column_mean(2 + 2 * e));
      if (i == j) {
        dmin = std::min(dmin, mean.real());
        dmax = std::max(dmax, mean.real());
      } else {
        est.offdiag_max = std::max(est.offdiag_max, std::abs(mean));
      }
    }
  est.diag_spread = dmax - dmin;
  return est;
}

DistortionBounds distortion_bounds(int ltx, int rank, int feedback_bits, bool gated) {
  if (rank < 1 || rank >= ltx) throw InvalidArgument("distortion_bounds: need 1 <= rank < ltx");
  if (feedback_bits < 1) throw InvalidArgument("distortion_bounds: feedback_bits must be >= 1");
  DistortionBounds b;
  b.t = rank * (ltx - rank);
  const double t = b.t;
  const int half = std::min(rank, ltx - rank);
  double log_eta = -std::lgamma(t + 1.0);
  for (int i = 1; i <= half; ++i) log_eta += std::lgamma(ltx - i + 1.0) - std::lgamma(half - i + 1.0);
  b.eta = std::exp(log_eta);

  const double k = std::ldexp(1.0, feedback_bits) - (gated ? 1.0 : 0.0);
  const double scale = std::pow(b.eta, -1.0 / t) * std::pow(k, -1.0 / t);
  b.lower = t / (t + 1.0) * scale;
  b.upper = std::tgamma(1.0 / t) / t * scale;
  b.mu_lower = std::clamp(1.0 - b.upper / rank, 0.0, 1.0);
  b.mu_upper = std::clamp(1.0 - b.lower / rank, 0.0, 1.0);
  b.small_codebook = k < 10.0;
  return b;
}

void write_codebook(std::ostream& out, const Codebook& codebook) {
  out << "grassmann-codebook v1 ltx=" << codebook.ltx << " rank=" << codebook.rank
      << " size=" << codebook.size();
  if (codebook.off_index) out << " off=1";
  out << '\n';
  char buf[64];
  for (const ComplexMatrix& q : codebook.matrices) {
    out << '\n';
    for (std::size_t r = 0; r < q.rows(); ++r) {
      for (std::size_t c = 0; c < q.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", q(r, c).real(), q(r, c).imag());
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
  }
}

namespace {

int header_field(const std::string& token, const std::string& key) {
  if (token.rfind(key + "=", 0) != 0) throw InvalidArgument("codebook header: expected " + key);
  try {
    std::size_t used = 0;
    const int v = std::stoi(token.substr(key.size() + 1), &used);
    if (used != token.size() - key.size() - 1) throw InvalidArgument("bad integer");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("codebook header: bad value for " + key);
  }
}

}  // namespace

Codebook read_codebook(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("codebook: missing header");
  std::istringstream header(line);
  std::string magic, version, t_ltx, t_rank, t_size, t_off;
  header >> magic >> version >> t_ltx >> t_rank >> t_size;
  if (magic != "grassmann-codebook" || version != "v1")
    throw InvalidArgument("codebook: unsupported format");
  Codebook cb;
  cb.ltx = header_field(t_ltx, "ltx");
  cb.rank = header_field(t_rank, "rank");
  const int size = header_field(t_size, "size");
  if (header >> t_off) cb.off_index = header_field(t_off, "off") == 1;
  if (cb.ltx < 1 || cb.rank < 1 || cb.rank > cb.ltx || size < 0)
    throw InvalidArgument("codebook: invalid dimensions");

  for (int i = 0; i < size; ++i) {
    ComplexMatrix q(cb.ltx, cb.rank);
    for (int r = 0; r < cb.ltx; ++r)
      for (int c = 0; c < cb.rank; ++c) {
        std::string token;
        if (!(in >> token)) throw InvalidArgument("codebook: truncated body");
        const auto comma = token.find(',');
        if (comma == std::string::npos) throw InvalidArgument("codebook: expected re,im pair");
        char* end = nullptr;
        const double re = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + comma) throw InvalidArgument("codebook: bad real part");
        const double im = std::strtod(token.c_str() + comma + 1, &end);
        if (*end != '\0') throw InvalidArgument("codebook: bad imaginary part");
        q(r, c) = Complex(re, im);
      }
    cb.matrices.push_back(std::move(q));
  }
  cb.min_pairwise_dc2 = min_pairwise(cb.matrices);
  return cb;
}

}  // namespace beamcap
