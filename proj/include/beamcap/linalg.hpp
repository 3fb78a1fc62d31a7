// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <random>
#include <vector>

namespace beamcap {

using Complex = std::complex<double>;

// Dense row-major complex matrix. Sizes here are tiny (at most 8x8 in practice).
class ComplexMatrix {
 public:
  ComplexMatrix(std::size_t rows, std::size_t cols);
  static ComplexMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<Complex>& data() const { return data_; }

  ComplexMatrix adjoint() const;
  // First `count` columns.
  ComplexMatrix leading_columns(std::size_t count) const;
  Complex trace() const;
  double frobenius_norm() const;

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
  friend ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
  friend ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
  friend ComplexMatrix operator*(Complex s, const ComplexMatrix& a);
  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Complex> data_;
};

struct EigenDecomposition {
  std::vector<double> values;  // descending
  ComplexMatrix vectors;       // column i pairs with values[i]
};

EigenDecomposition hermitian_eig(const ComplexMatrix& a);
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a);

ComplexMatrix orthonormalize(const ComplexMatrix& m);

// ln det of a Hermitian positive definite matrix, via Cholesky.
double log_det_hpd(const ComplexMatrix& a);

// Per-trial generator. The stream depends only on (seed, stream), never on scheduling.
using Rng = std::mt19937_64;
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

// Entries i.i.d. CN(0,1).
ComplexMatrix sample_gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace beamcap
