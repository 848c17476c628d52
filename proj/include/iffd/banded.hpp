#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <vector>

#include "iffd/dense.hpp"
#include "iffd/errors.hpp"

namespace iffd {

/// Square matrix with entries only for |i - j| <= bandwidth. The full band is
/// stored row by row (2b+1 slots per row); symmetric matrices are kept
/// symmetric by their producers.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(int dim, int bandwidth)
      : dim_(dim), bw_(bandwidth), data_(static_cast<std::size_t>(dim) * (2 * bandwidth + 1), 0.0) {}

  int dim() const noexcept { return dim_; }
  int bandwidth() const noexcept { return bw_; }

  bool in_band(int i, int j) const noexcept { return std::abs(i - j) <= bw_; }

  double operator()(int i, int j) const noexcept {
    assert(i >= 0 && i < dim_ && j >= 0 && j < dim_);
    return in_band(i, j) ? data_[slot(i, j)] : 0.0;
  }

  double& at(int i, int j) noexcept {
    assert(in_band(i, j));
    return data_[slot(i, j)];
  }

  void add(int i, int j, double v) noexcept { at(i, j) += v; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const noexcept {
    assert(static_cast<int>(x.size()) == dim_ && static_cast<int>(y.size()) == dim_);
    for (int i = 0; i < dim_; ++i) {
      const int lo = std::max(0, i - bw_);
      const int hi = std::min(dim_ - 1, i + bw_);
      const double* r = data_.data() + static_cast<std::size_t>(i) * (2 * bw_ + 1) + (bw_ - i);
      double s = 0.0;
      for (int j = lo; j <= hi; ++j) s += r[j] * x[j];
      y[i] = s;
    }
  }

  /// Strided variant used for mode products on tensors.
  void multiply_strided(const double* x, double* y, std::ptrdiff_t stride) const noexcept {
    for (int i = 0; i < dim_; ++i) {
      const int lo = std::max(0, i - bw_);
      const int hi = std::min(dim_ - 1, i + bw_);
      const double* r = data_.data() + static_cast<std::size_t>(i) * (2 * bw_ + 1) + (bw_ - i);
      double s = 0.0;
      for (int j = lo; j <= hi; ++j) s += r[j] * x[j * stride];
      y[i * stride] = s;
    }
  }

  double quadratic_form(std::span<const double> x) const {
    std::vector<double> y(dim_);
    multiply(x, y);
    return dot(x, y);
  }

  bool is_symmetric(double tol = 0.0) const noexcept {
    for (int i = 0; i < dim_; ++i)
      for (int j = std::max(0, i - bw_); j < i; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = std::max(0, i - bw_); j <= std::min(dim_ - 1, i + bw_); ++j) d(i, j) = (*this)(i, j);
    return d;
  }

  /// Keeps the rows/columns listed in `keep` (ascending).
  BandedMatrix restricted(std::span<const int> keep) const {
    const int m = static_cast<int>(keep.size());
    BandedMatrix r(m, bw_);
    for (int a = 0; a < m; ++a)
      for (int b = std::max(0, a - bw_); b <= std::min(m - 1, a + bw_); ++b) r.at(a, b) = (*this)(keep[a], keep[b]);
    return r;
  }

 private:
  std::size_t slot(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * (2 * bw_ + 1) + (j - i + bw_);
  }

  int dim_ = 0;
  int bw_ = 0;
  std::vector<double> data_;
};

/// Banded Cholesky factorization A = L L^T of an SPD banded matrix.
class BandCholesky {
 public:
  explicit BandCholesky(const BandedMatrix& a) : n_(a.dim()), b_(a.bandwidth()), l_(static_cast<std::size_t>(n_) * (b_ + 1)) {
    for (int j = 0; j < n_; ++j) {
      double d = a(j, j);
      for (int k = std::max(0, j - b_); k < j; ++k) d -= L(j, k) * L(j, k);
      if (!(d > 0.0)) throw SingularError("BandCholesky: matrix is not positive definite");
      const double ljj = std::sqrt(d);
      L(j, j) = ljj;
      for (int i = j + 1; i <= std::min(n_ - 1, j + b_); ++i) {
        double s = a(i, j);
        for (int k = std::max(0, i - b_); k < j; ++k) s -= L(i, k) * L(j, k);
        L(i, j) = s / ljj;
      }
    }
  }

  int dim() const noexcept { return n_; }

  /// Overwrites x with A^{-1} x.
  void solve_in_place(std::span<double> x) const noexcept {
    assert(static_cast<int>(x.size()) == n_);
    for (int i = 0; i < n_; ++i) {
      double s = x[i];
      for (int k = std::max(0, i - b_); k < i; ++k) s -= L(i, k) * x[k];
      x[i] = s / L(i, i);
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double s = x[i];
      for (int k = i + 1; k <= std::min(n_ - 1, i + b_); ++k) s -= L(k, i) * x[k];
      x[i] = s / L(i, i);
    }
  }

 private:
  double& L(int i, int j) noexcept { return l_[static_cast<std::size_t>(i) * (b_ + 1) + (j - i + b_)]; }
  double L(int i, int j) const noexcept { return l_[static_cast<std::size_t>(i) * (b_ + 1) + (j - i + b_)]; }

  int n_;
  int b_;
  std::vector<double> l_;
};

}  // namespace iffd
