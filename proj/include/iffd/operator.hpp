#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "iffd/banded.hpp"
#include "iffd/dense.hpp"
#include "iffd/errors.hpp"
#include "iffd/tensor.hpp"

namespace iffd {

/// Square linear operator y = A x.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t size() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;

  std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> y(size());
    apply(x, y);
    return y;
  }
};

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(std::size_t n) : n_(n) {}
  std::size_t size() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const override { std::copy(x.begin(), x.end(), y.begin()); }

 private:
  std::size_t n_;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(DenseMatrix a) : a_(std::move(a)) {}
  std::size_t size() const override { return static_cast<std::size_t>(a_.rows()); }
  void apply(std::span<const double> x, std::span<double> y) const override { multiply(a_, x, y); }

 private:
  DenseMatrix a_;
};

/// Compressed sparse rows; square.
class SparseMatrix final : public LinearOperator {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<int> cols, std::vector<double> vals)
      : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {}

  std::size_t size() const override { return n_; }
  std::size_t nonzeros() const noexcept { return vals_.size(); }
  std::size_t row_nonzeros(std::size_t i) const noexcept { return row_ptr_[i + 1] - row_ptr_[i]; }

  void apply(std::span<const double> x, std::span<double> y) const override {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[i] = s;
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    const auto b = cols_.begin() + row_ptr_[i];
    const auto e = cols_.begin() + row_ptr_[i + 1];
    const auto it = std::lower_bound(b, e, static_cast<int>(j));
    return (it != e && *it == static_cast<int>(j)) ? vals_[it - cols_.begin()] : 0.0;
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(static_cast<int>(n_), static_cast<int>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(static_cast<int>(i), cols_[k]) = vals_[k];
    return d;
  }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const int> col_indices() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return vals_; }
  std::span<double> values() noexcept { return vals_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

/// Writes the lower triangle in Matrix Market coordinate format (1-based).
inline void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      if (static_cast<std::size_t>(a.col_indices()[k]) <= i) ++count;
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << a.size() << ' ' << a.size() << ' ' << count << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      if (static_cast<std::size_t>(a.col_indices()[k]) <= i)
        os << i + 1 << ' ' << a.col_indices()[k] + 1 << ' ' << a.values()[k] << '\n';
}

/// Sum of Kronecker products Σ_t (A_{t,d-1} ⊗ ... ⊗ A_{t,0}), each factor
/// banded and acting on one direction of the lexicographic tensor layout.
class KronOperator final : public LinearOperator {
 public:
  using Term = std::vector<BandedMatrix>;

  KronOperator(TensorShape shape, std::vector<Term> terms) : shape_(std::move(shape)), terms_(std::move(terms)) {
    for (const Term& t : terms_) {
      if (static_cast<int>(t.size()) != shape_.order()) throw InvalidArgument("KronOperator: term order mismatch");
      for (int k = 0; k < shape_.order(); ++k)
        if (t[k].dim() != shape_.extent(k)) throw InvalidArgument("KronOperator: factor size mismatch");
    }
  }

  std::size_t size() const override { return shape_.size(); }
  const TensorShape& shape() const noexcept { return shape_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }

  void apply(std::span<const double> x, std::span<double> y) const override {
    const std::size_t n = shape_.size();
    std::vector<double> a(n), b(n);
    std::fill(y.begin(), y.end(), 0.0);
    for (const Term& t : terms_) {
      banded_mode_product(shape_, 0, t[0], x, a);
      for (int k = 1; k < shape_.order(); ++k) {
        banded_mode_product(shape_, k, t[k], a, b);
        std::swap(a, b);
      }
      for (std::size_t i = 0; i < n; ++i) y[i] += a[i];
    }
  }

  DenseMatrix to_dense() const {
    const int n = static_cast<int>(shape_.size());
    DenseMatrix d(n, n);
    for (const Term& t : terms_) {
      DenseMatrix k = t[shape_.order() - 1].to_dense();
      for (int l = shape_.order() - 2; l >= 0; --l) k = kron(k, t[l].to_dense());
      d = d + k;
    }
    return d;
  }

 private:
  TensorShape shape_;
  std::vector<Term> terms_;
};

}  // namespace iffd
