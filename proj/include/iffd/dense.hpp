#pragma once

// Small dense linear algebra: enough for outlier-space eigenproblems, the FD
// factors and the test oracles. Row-major storage, value semantics.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "iffd/errors.hpp"

namespace iffd {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  static DenseMatrix identity(int n) {
    DenseMatrix I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int i, int j) noexcept {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const noexcept {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  std::span<double> row(int i) noexcept {
    return {data_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int i) const noexcept {
    return {data_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)};
  }

  std::vector<double> column(int j) const {
    std::vector<double> c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transposed() const {
    DenseMatrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  assert(a.cols() == b.rows());
  DenseMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  DenseMatrix c = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) -= b(i, j);
  return c;
}

inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  DenseMatrix c = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) += b(i, j);
  return c;
}

/// y = A x
inline void multiply(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  assert(static_cast<int>(x.size()) == a.cols() && static_cast<int>(y.size()) == a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

/// y = A^T x
inline void multiply_transpose(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  assert(static_cast<int>(x.size()) == a.rows() && static_cast<int>(y.size()) == a.cols());
  std::fill(y.begin(), y.end(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    const double xi = x[i];
    for (int j = 0; j < a.cols(); ++j) y[j] += r[j] * xi;
  }
}

inline std::vector<double> operator*(const DenseMatrix& a, const std::vector<double>& x) {
  std::vector<double> y(a.rows());
  multiply(a, x, y);
  return y;
}

/// Kronecker product a ⊗ b.
inline DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) c(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return c;
}

/// Lower Cholesky factor L with A = L L^T. Throws SingularError if A is not SPD.
inline DenseMatrix cholesky(const DenseMatrix& a) {
  const int n = a.rows();
  DenseMatrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw SingularError("cholesky: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solves L y = b in place (L lower triangular).
inline void forward_substitute(const DenseMatrix& l, std::span<double> b) {
  for (int i = 0; i < l.rows(); ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
}

/// Solves L^T x = b in place.
inline void backward_substitute_transpose(const DenseMatrix& l, std::span<double> b) {
  for (int i = l.rows() - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < l.rows(); ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
}

/// Solves A X = B with partial pivoting; A square. Throws SingularError.
inline DenseMatrix lu_solve(DenseMatrix a, DenseMatrix b) {
  const int n = a.rows();
  assert(a.cols() == n && b.rows() == n);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw SingularError("lu_solve: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (int j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (int j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  for (int i = n - 1; i >= 0; --i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = b(i, j);
      for (int k = i + 1; k < n; ++k) s -= a(i, k) * b(k, j);
      b(i, j) = s / a(i, i);
    }
  return b;
}

inline DenseMatrix inverse(const DenseMatrix& a) { return lu_solve(a, DenseMatrix::identity(a.rows())); }

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  DenseMatrix vectors;         // columns
};

namespace detail {

// Flip each column so that its first entry that is not negligible is positive.
inline void normalize_signs(DenseMatrix& v) {
  for (int j = 0; j < v.cols(); ++j) {
    double scale = 0.0;
    for (int i = 0; i < v.rows(); ++i) scale = std::max(scale, std::abs(v(i, j)));
    const double tiny = 1e-10 * scale;
    for (int i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > tiny) {
        if (v(i, j) < 0.0)
          for (int k = 0; k < v.rows(); ++k) v(k, j) = -v(k, j);
        break;
      }
    }
  }
}

inline void sort_ascending(SymmetricEigen& e) {
  const int n = static_cast<int>(e.values.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return e.values[a] < e.values[b]; });
  SymmetricEigen out{std::vector<double>(n), DenseMatrix(e.vectors.rows(), n)};
  for (int j = 0; j < n; ++j) {
    out.values[j] = e.values[order[j]];
    for (int i = 0; i < e.vectors.rows(); ++i) out.vectors(i, j) = e.vectors(i, order[j]);
  }
  e = std::move(out);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for a symmetric matrix. Converges unconditionally;
/// O(n^3) per sweep, so intended for the small outlier blocks and FD factors.
inline SymmetricEigen symmetric_eigen(DenseMatrix a) {
  const int n = a.rows();
  assert(a.cols() == n);
  DenseMatrix v = DenseMatrix::identity(n);
  double total = 0.0;
  for (double x : a.data()) total += x * x;
  const double threshold = 1e-30 * total;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= threshold) break;

    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }

  SymmetricEigen e{std::vector<double>(n), std::move(v)};
  for (int i = 0; i < n; ++i) e.values[i] = a(i, i);
  detail::sort_ascending(e);
  detail::normalize_signs(e.vectors);
  return e;
}

/// Generalized eigendecomposition of the pencil (K, M), M SPD:
/// returns Q, Λ with Q^T M Q = I and Q^T K Q = Λ (ascending).
/// Reduces to standard form through the Cholesky factor of M.
inline SymmetricEigen generalized_eigen(const DenseMatrix& k, const DenseMatrix& m) {
  const int n = m.rows();
  assert(k.rows() == n && k.cols() == n && m.cols() == n);
  if (n == 0) return {};
  const DenseMatrix l = cholesky(m);

  // C = L^{-1} K L^{-T}
  DenseMatrix c = k;
  for (int j = 0; j < n; ++j) {
    std::vector<double> col = c.column(j);
    forward_substitute(l, col);
    for (int i = 0; i < n; ++i) c(i, j) = col[i];
  }
  for (int i = 0; i < n; ++i) {
    std::vector<double> r(c.row(i).begin(), c.row(i).end());
    forward_substitute(l, r);
    for (int j = 0; j < n; ++j) c(i, j) = r[j];
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double s = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = s;
      c(j, i) = s;
    }

  SymmetricEigen e = symmetric_eigen(std::move(c));
  for (int j = 0; j < n; ++j) {
    std::vector<double> col = e.vectors.column(j);
    backward_substitute_transpose(l, col);
    for (int i = 0; i < n; ++i) e.vectors(i, j) = col[i];
  }
  detail::normalize_signs(e.vectors);
  return e;
}

/// Orthonormal basis of null(B^T) for a tall B (rows >= cols, full column rank),
/// via Householder QR: the trailing rows-cols columns of Q.
inline DenseMatrix left_null_space(const DenseMatrix& b) {
  const int r = b.rows();
  const int c = b.cols();
  if (r < c) throw UnsupportedError("left_null_space: matrix must be tall");
  DenseMatrix a = b;
  std::vector<std::vector<double>> reflectors;
  reflectors.reserve(c);
  for (int k = 0; k < c; ++k) {
    double norm = 0.0;
    for (int i = k; i < r; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    std::vector<double> v(r, 0.0);
    if (norm == 0.0) throw SingularError("left_null_space: rank deficient block");
    const double alpha = a(k, k) > 0 ? -norm : norm;
    for (int i = k; i < r; ++i) v[i] = a(i, k);
    v[k] -= alpha;
    double vn = 0.0;
    for (int i = k; i < r; ++i) vn += v[i] * v[i];
    if (vn > 0.0)
      for (int j = k; j < c; ++j) {
        double s = 0.0;
        for (int i = k; i < r; ++i) s += v[i] * a(i, j);
        s *= 2.0 / vn;
        for (int i = k; i < r; ++i) a(i, j) -= s * v[i];
      }
    reflectors.push_back(std::move(v));
  }
  // Q = H_0 H_1 ... H_{c-1}; columns c..r-1 of Q are Q e_j.
  DenseMatrix n(r, r - c);
  for (int j = 0; j < r - c; ++j) {
    std::vector<double> e(r, 0.0);
    e[c + j] = 1.0;
    for (int k = c - 1; k >= 0; --k) {
      const auto& v = reflectors[k];
      double vn = 0.0, s = 0.0;
      for (int i = k; i < r; ++i) {
        vn += v[i] * v[i];
        s += v[i] * e[i];
      }
      if (vn == 0.0) continue;
      s *= 2.0 / vn;
      for (int i = k; i < r; ++i) e[i] -= s * v[i];
    }
    for (int i = 0; i < r; ++i) n(i, j) = e[i];
  }
  return n;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace iffd
