#pragma once

// Regular/outlier splitting S_{p,h,D} = S_reg ⊕ S_out of one univariate space.
// S_reg is spanned by the special basis: cardinal B-splines centered at the
// nodes, symmetrized (Neumann end) or antisymmetrized (Dirichlet end) by
// reflection about the boundary. S_out is its L²-orthogonal complement.

#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "iffd/banded.hpp"
#include "iffd/dense.hpp"
#include "iffd/errors.hpp"
#include "iffd/spline.hpp"

namespace iffd {

/// Column-compressed sparse rectangular matrix.
class SparseColumns {
 public:
  SparseColumns() = default;
  explicit SparseColumns(int rows) : rows_(rows), col_ptr_{0} {}

  /// Appends a column given as (row, value) entries; entries with
  /// |value| <= drop are skipped.
  void push_column(const std::vector<std::pair<int, double>>& entries, double drop = 0.0) {
    for (const auto& [r, v] : entries)
      if (std::abs(v) > drop) {
        row_.push_back(r);
        val_.push_back(v);
      }
    col_ptr_.push_back(static_cast<int>(row_.size()));
  }

  /// Appends a dense column.
  void push_dense_column(std::span<const double> col, double drop = 0.0) {
    std::vector<std::pair<int, double>> e;
    for (int i = 0; i < static_cast<int>(col.size()); ++i)
      if (col[i] != 0.0) e.emplace_back(i, col[i]);
    push_column(e, drop);
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return static_cast<int>(col_ptr_.size()) - 1; }
  std::size_t nonzeros() const noexcept { return val_.size(); }

  std::span<const int> column_rows(int j) const noexcept {
    return {row_.data() + col_ptr_[j], static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j])};
  }
  std::span<const double> column_values(int j) const noexcept {
    return {val_.data() + col_ptr_[j], static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j])};
  }

  std::vector<double> dense_column(int j) const {
    std::vector<double> c(rows_, 0.0);
    const auto r = column_rows(j);
    const auto v = column_values(j);
    for (std::size_t k = 0; k < r.size(); ++k) c[r[k]] = v[k];
    return c;
  }

  /// y = V x
  void multiply(std::span<const double> x, std::span<double> y) const noexcept {
    std::fill(y.begin(), y.begin() + rows_, 0.0);
    for (int j = 0; j < cols(); ++j) {
      const double xj = x[j];
      for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) y[row_[k]] += val_[k] * xj;
    }
  }

  /// y = V^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const noexcept {
    for (int j = 0; j < cols(); ++j) {
      double s = 0.0;
      for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) s += val_[k] * x[row_[k]];
      y[j] = s;
    }
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols());
    for (int j = 0; j < cols(); ++j)
      for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) d(row_[k], j) = val_[k];
    return d;
  }

 private:
  int rows_ = 0;
  std::vector<int> col_ptr_{0};
  std::vector<int> row_;
  std::vector<double> val_;
};

/// (n_reg, n_out) for S_{p,h,D} with `repeated` extra interior multiplicities.
inline std::pair<int, int> regular_dims(int p, int n, DirichletSet d, int repeated = 0) {
  if (n <= p)
    throw UnsupportedError("splitting requires n > p (n = " + std::to_string(n) + ", p = " + std::to_string(p) + ")");
  const int nreg = detail::regular_count(p, n, d);
  const int m = n + p + repeated - d.count();
  return {nreg, m - nreg};
}

/// Cardinal index range: B̃_c centered at x_c for c = -⌊(p-1)/2⌋ .. n+⌊p/2⌋.
/// Position in the m_full-long cardinal (and open-knot) numbering is c + ⌊(p-1)/2⌋.
constexpr int cardinal_offset(int p) noexcept { return (p - 1) / 2; }

/// B̃_j restricted to [0,1], centered at x_c with c = j - ⌊(p-1)/2⌋.
inline double restricted_cardinal(int p, int n, int j, double x) {
  const int c = j - cardinal_offset(p);
  return cardinal_bspline(p, x * n - node_abscissa(p, n, c) * n);
}

/// m_full × n_reg coefficients of the special basis in the cardinal basis.
inline SparseColumns special_basis_coefficients(const SplineSpace& space, DirichletSet d) {
  if (!space.maximally_smooth()) throw UnsupportedError("special basis: maximally smooth space required");
  const int p = space.degree();
  const int n = space.elements();
  regular_dims(p, n, d);
  const NodeSet ns = nodes_and_frequencies(space, d);
  const int lo = -cardinal_offset(p);
  const int hi = n + p / 2;
  const int delta = degree_shift(p);
  const double s0 = d.left ? -1.0 : 1.0;
  const double s1 = d.right ? -1.0 : 1.0;
  SparseColumns s(space.full_dim());
  for (int idx = 0; idx < ns.size(); ++idx) {
    const int c = ns.first_index + idx;
    std::vector<std::pair<int, double>> col{{c - lo, 1.0}};
    const int left = delta - c;
    const int right = 2 * n + delta - c;
    if (left >= lo && left <= hi && left != c) col.emplace_back(left - lo, s0);
    if (right >= lo && right <= hi && right != c) col.emplace_back(right - lo, s1);
    std::sort(col.begin(), col.end());
    s.push_column(col);
  }
  return s;
}

/// m_full × m_full matrix T with B̃_j|[0,1] = Σ_i T_ij B_{p,h,i}. Identity except
/// for the first and last p columns, which come from collocation at the
/// Greville abscissae of the first p open-knot functions (mirrored on the right).
inline SparseColumns cardinal_to_openknot(const SplineSpace& space) {
  if (!space.maximally_smooth()) throw UnsupportedError("cardinal_to_openknot: maximally smooth space required");
  const int p = space.degree();
  const int n = space.elements();
  const int m = space.full_dim();
  if (n < p) throw UnsupportedError("cardinal_to_openknot requires n >= p");
  const auto& knots = space.knots();
  DenseMatrix a(p, p), b(p, p);
  for (int r = 0; r < p; ++r) {
    double g = 0.0;
    for (int k = r + 1; k <= r + p; ++k) g += knots[k];
    g /= p;
    const BasisValues bv = eval_basis(space, g, 0);
    for (int i = 0; i < p; ++i) {
      const int off = i - bv.first;
      a(r, i) = (off >= 0 && off <= p) ? bv.values[off] : 0.0;
    }
    for (int j = 0; j < p; ++j) b(r, j) = restricted_cardinal(p, n, j, g);
  }
  const DenseMatrix t = lu_solve(a, b);
  SparseColumns out(m);
  constexpr double drop = 1e-15;
  for (int j = 0; j < m; ++j) {
    std::vector<std::pair<int, double>> col;
    if (j < p) {
      for (int i = 0; i < p; ++i) col.emplace_back(i, t(i, j));
    } else if (j >= m - p) {
      // mirror: T_{m-1-i, m-1-j} = T_{i,j}
      const int jm = m - 1 - j;
      for (int i = p - 1; i >= 0; --i) col.emplace_back(m - 1 - i, t(i, jm));
    } else {
      col.emplace_back(j, 1.0);
    }
    out.push_column(col, drop);
  }
  return out;
}

/// Inserts zeros at the Dirichlet positions: coefficients of S_{p,h,D} -> S_{p,h}.
inline std::vector<double> expand_dirichlet(const SplineSpace& space, DirichletSet d, std::span<const double> coef) {
  std::vector<double> full(space.full_dim(), 0.0);
  const int off = d.left ? 1 : 0;
  for (std::size_t i = 0; i < coef.size(); ++i) full[i + off] = coef[i];
  return full;
}

struct Splitting {
  int n_reg = 0;
  int n_out = 0;
  int m = 0;
  SparseColumns v_reg;  // m × n_reg
  DenseMatrix v_out;    // m × n_out, columns of unit Euclidean norm
};

namespace detail {

// Orthonormal basis of null(V^T), assembled per connected component of the
// bipartite row/column sparsity graph of V, so that each null vector stays local.
inline DenseMatrix local_left_null_space(const SparseColumns& v, int expected) {
  const int m = v.rows();
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int j = 0; j < v.cols(); ++j) {
    const auto r = v.column_rows(j);
    for (std::size_t k = 1; k < r.size(); ++k) parent[find(r[k])] = find(r[0]);
  }
  std::vector<std::vector<int>> comp_rows(m), comp_cols(m);
  for (int i = 0; i < m; ++i) comp_rows[find(i)].push_back(i);
  for (int j = 0; j < v.cols(); ++j) {
    const auto r = v.column_rows(j);
    if (!r.empty()) comp_cols[find(r[0])].push_back(j);
  }
  DenseMatrix out(m, expected);
  int filled = 0;
  for (int c = 0; c < m; ++c) {
    const auto& rows = comp_rows[c];
    const auto& cols = comp_cols[c];
    if (rows.size() <= cols.size()) continue;
    DenseMatrix block(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const auto r = v.column_rows(cols[b]);
      const auto val = v.column_values(cols[b]);
      for (std::size_t k = 0; k < r.size(); ++k) {
        const auto pos = std::lower_bound(rows.begin(), rows.end(), r[k]) - rows.begin();
        block(static_cast<int>(pos), static_cast<int>(b)) = val[k];
      }
    }
    const DenseMatrix nb = left_null_space(block);
    for (int q = 0; q < nb.cols(); ++q, ++filled) {
      if (filled >= expected) throw SingularError("splitting: regular basis is rank deficient");
      for (std::size_t r = 0; r < rows.size(); ++r) out(rows[r], filled) = nb(static_cast<int>(r), q);
    }
  }
  if (filled != expected) throw SingularError("splitting: outlier dimension mismatch");
  return out;
}

inline Splitting finish_splitting(SparseColumns v_reg, int n_out, const BandedMatrix& mass) {
  Splitting s;
  s.m = v_reg.rows();
  s.n_reg = v_reg.cols();
  s.n_out = n_out;
  if (mass.dim() != s.m) throw InvalidArgument("splitting: mass matrix size mismatch");
  DenseMatrix w = local_left_null_space(v_reg, n_out);
  // V_out = M^{-1} N, so V_reg^T M V_out = V_reg^T N = 0.
  const BandCholesky chol(mass);
  std::vector<double> col(s.m);
  for (int j = 0; j < n_out; ++j) {
    for (int i = 0; i < s.m; ++i) col[i] = w(i, j);
    chol.solve_in_place(col);
    const double nrm = norm2(col);
    for (int i = 0; i < s.m; ++i) w(i, j) = col[i] / nrm;
  }
  s.v_reg = std::move(v_reg);
  s.v_out = std::move(w);
  return s;
}

// Columns T·S in the full smooth basis, as dense vectors.
inline std::vector<std::vector<double>> regular_columns_full(const SplineSpace& smooth, DirichletSet d) {
  const SparseColumns s = special_basis_coefficients(smooth, d);
  const SparseColumns t = cardinal_to_openknot(smooth);
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < s.cols(); ++j) {
    std::vector<double> c(smooth.full_dim(), 0.0);
    const auto sr = s.column_rows(j);
    const auto sv = s.column_values(j);
    for (std::size_t k = 0; k < sr.size(); ++k) {
      const auto tr = t.column_rows(sr[k]);
      const auto tv = t.column_values(sr[k]);
      for (std::size_t l = 0; l < tr.size(); ++l) c[tr[l]] += sv[k] * tv[l];
    }
    cols.push_back(std::move(c));
  }
  return cols;
}

inline SparseColumns restrict_rows(const SplineSpace& space, DirichletSet d,
                                   const std::vector<std::vector<double>>& full_cols) {
  const int m = space.dim(d);
  const int off = d.left ? 1 : 0;
  SparseColumns v(m);
  for (const auto& c : full_cols) {
    double scale = 0.0;
    for (double x : c) scale = std::max(scale, std::abs(x));
    const double first = c.front(), last = c.back();
    if ((d.left && std::abs(first) > 1e-10 * scale) || (d.right && std::abs(last) > 1e-10 * scale))
      throw SingularError("splitting: regular basis function does not vanish on the Dirichlet boundary");
    std::vector<std::pair<int, double>> e;
    for (int i = 0; i < m; ++i)
      if (c[i + off] != 0.0) e.emplace_back(i, c[i + off]);
    v.push_column(e, 1e-14 * scale);
  }
  return v;
}

}  // namespace detail

/// Splitting of a maximally smooth S_{p,h,D}; `mass` is its univariate mass matrix.
inline Splitting build_splitting(const SplineSpace& space, DirichletSet d, const BandedMatrix& mass) {
  if (!space.maximally_smooth()) throw UnsupportedError("build_splitting: use build_splitting_reduced for repeated knots");
  const auto [nreg, nout] = regular_dims(space.degree(), space.elements(), d);
  SparseColumns v = detail::restrict_rows(space, d, detail::regular_columns_full(space, d));
  if (v.cols() != nreg) throw SingularError("splitting: regular dimension mismatch");
  return detail::finish_splitting(std::move(v), nout, mass);
}

/// Splitting of a space with repeated interior knots: S_reg of the smooth space
/// embedded by knot insertion; S_out grows by one per extra multiplicity.
inline Splitting build_splitting_reduced(const SplineSpace& space, DirichletSet d, const BandedMatrix& mass) {
  if (space.maximally_smooth()) return build_splitting(space, d, mass);
  const SplineSpace smooth = space.smooth();
  const auto [nreg, nout] = regular_dims(space.degree(), space.elements(), d, space.extra_multiplicity());
  auto cols = detail::regular_columns_full(smooth, d);
  for (auto& c : cols) c = embed_in_refined(smooth, space, std::move(c));
  SparseColumns v = detail::restrict_rows(space, d, cols);
  return detail::finish_splitting(std::move(v), nout, mass);
}

}  // namespace iffd
