#pragma once

// Multivariate Galerkin discretization of the pulled-back Poisson problem on
// tensor-product spline spaces.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "iffd/geometry.hpp"
#include "iffd/operator.hpp"
#include "iffd/univariate.hpp"

namespace iffd {

/// S_{p,h,D_1} ⊗ ... ⊗ S_{p,h,D_d}, lexicographic with direction 0 fastest.
struct TensorSpace {
  std::vector<SplineSpace> spaces;
  std::vector<DirichletSet> bc;

  int dim() const noexcept { return static_cast<int>(spaces.size()); }
  TensorShape shape() const {
    std::vector<int> e;
    for (int k = 0; k < dim(); ++k) e.push_back(spaces[k].dim(bc[k]));
    return TensorShape(std::move(e));
  }
  std::size_t dofs() const { return shape().size(); }

  void validate() const {
    if (dim() != 2 && dim() != 3) throw InvalidArgument("tensor space dimension must be 2 or 3");
    if (bc.size() != spaces.size()) throw InvalidArgument("one boundary set per direction required");
  }
};

namespace detail {

inline KronOperator weighted_kron(const TensorSpace& ts, const std::vector<std::vector<Weight>>* factors) {
  ts.validate();
  const int d = ts.dim();
  std::vector<KronOperator::Term> terms;
  for (int a = 0; a < d; ++a) {
    KronOperator::Term t;
    for (int k = 0; k < d; ++k) {
      const Weight w = factors ? (*factors)[a][k] : Weight{};
      t.push_back(univariate_matrix(ts.spaces[k], ts.bc[k], k == a ? MatrixKind::stiffness : MatrixKind::mass, w));
    }
    terms.push_back(std::move(t));
  }
  return KronOperator(ts.shape(), std::move(terms));
}

}  // namespace detail

/// Â = Σ_a (M ⊗ .. ⊗ K_a ⊗ .. ⊗ M): the Galerkin matrix for G = identity.
inline KronOperator kron_surrogate(const TensorSpace& ts) { return detail::weighted_kron(ts, nullptr); }

/// Exact stiffness operator for a geometry with a separable metric, as a sum of
/// Kronecker products of weighted univariate matrices.
inline KronOperator separable_stiffness(const GeometryMap& geom, const TensorSpace& ts) {
  if (!geom.separable()) throw UnsupportedError("geometry '" + geom.name() + "' has no separable metric");
  if (geom.dim() != ts.dim()) throw InvalidArgument("geometry/space dimension mismatch");
  return detail::weighted_kron(ts, &geom.separable()->factors);
}

namespace detail {

struct ElementLoop {
  const TensorSpace& ts;
  std::vector<BasisTable> tables;
  std::vector<int> offset;  // full index -> reduced index shift per direction
  std::vector<int> extent;

  ElementLoop(const TensorSpace& t, int extra_points) : ts(t) {
    for (int k = 0; k < ts.dim(); ++k) {
      tables.emplace_back(ts.spaces[k], ts.spaces[k].degree() + 1 + extra_points);
      offset.push_back(ts.bc[k].left ? 1 : 0);
      extent.push_back(ts.spaces[k].dim(ts.bc[k]));
    }
  }

  int reduced(int k, int full) const noexcept {
    const int r = full - offset[k];
    return (r >= 0 && r < extent[k]) ? r : -1;
  }

  /// Calls f(element multi-index) for every element.
  template <class F>
  void for_each_element(F&& f) const {
    const int d = ts.dim();
    std::array<int, 3> e{0, 0, 0};
    std::array<int, 3> n{1, 1, 1};
    for (int k = 0; k < d; ++k) n[k] = ts.spaces[k].elements();
    for (e[2] = 0; e[2] < n[2]; ++e[2])
      for (e[1] = 0; e[1] < n[1]; ++e[1])
        for (e[0] = 0; e[0] < n[0]; ++e[0]) f(e);
  }

  /// Calls f(quadrature multi-index) over the tensor rule of one element.
  template <class F>
  void for_each_point(F&& f) const {
    const int d = ts.dim();
    std::array<int, 3> q{0, 0, 0};
    std::array<int, 3> nq{1, 1, 1};
    for (int k = 0; k < d; ++k) nq[k] = tables[k].points();
    for (q[2] = 0; q[2] < nq[2]; ++q[2])
      for (q[1] = 0; q[1] < nq[1]; ++q[1])
        for (q[0] = 0; q[0] < nq[0]; ++q[0]) f(q);
  }
};

inline void check_determinant(double det, double& sign) {
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw SingularGeometryError("det J_G vanishes at a quadrature point");
  const double s = det > 0 ? 1.0 : -1.0;
  if (sign == 0.0) sign = s;
  else if (s != sign) throw SingularGeometryError("det J_G changes sign on the quadrature grid");
}

}  // namespace detail

/// Sparse stiffness matrix [a(B_j, B_i)] assembled element by element with the
/// full pulled-back integrand, p+1 Gauss points per direction.
inline SparseMatrix assemble_stiffness(const GeometryMap& geom, const TensorSpace& ts) {
  ts.validate();
  if (geom.dim() != ts.dim()) throw InvalidArgument("geometry/space dimension mismatch");
  const int d = ts.dim();
  const TensorShape shape = ts.shape();
  const std::size_t N = shape.size();
  detail::ElementLoop loop(ts, 0);

  std::array<int, 3> m{1, 1, 1}, bw{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    m[k] = shape.extent(k);
    bw[k] = ts.spaces[k].degree();
  }

  // CSR pattern: row (i0,i1,i2) couples to the clipped box |j_k - i_k| <= p_k.
  std::vector<std::size_t> row_ptr(N + 1, 0);
  auto box = [&](int k, int i) { return std::array<int, 2>{std::max(0, i - bw[k]), std::min(m[k] - 1, i + bw[k])}; };
  for (int i2 = 0; i2 < m[2]; ++i2)
    for (int i1 = 0; i1 < m[1]; ++i1)
      for (int i0 = 0; i0 < m[0]; ++i0) {
        std::size_t count = 1;
        const std::array<int, 3> ii{i0, i1, i2};
        for (int k = 0; k < d; ++k) {
          const auto b = box(k, ii[k]);
          count *= static_cast<std::size_t>(b[1] - b[0] + 1);
        }
        const std::size_t row = i0 + static_cast<std::size_t>(m[0]) * (i1 + static_cast<std::size_t>(m[1]) * i2);
        row_ptr[row + 1] = count;
      }
  for (std::size_t i = 0; i < N; ++i) row_ptr[i + 1] += row_ptr[i];
  std::vector<int> cols(row_ptr[N]);
  std::vector<double> vals(row_ptr[N], 0.0);
  for (int i2 = 0; i2 < m[2]; ++i2)
    for (int i1 = 0; i1 < m[1]; ++i1)
      for (int i0 = 0; i0 < m[0]; ++i0) {
        const std::array<int, 3> ii{i0, i1, i2};
        std::array<std::array<int, 2>, 3> b{};
        for (int k = 0; k < 3; ++k) b[k] = k < d ? box(k, ii[k]) : std::array<int, 2>{0, 0};
        const std::size_t row = i0 + static_cast<std::size_t>(m[0]) * (i1 + static_cast<std::size_t>(m[1]) * i2);
        std::size_t pos = row_ptr[row];
        for (int j2 = b[2][0]; j2 <= b[2][1]; ++j2)
          for (int j1 = b[1][0]; j1 <= b[1][1]; ++j1)
            for (int j0 = b[0][0]; j0 <= b[0][1]; ++j0)
              cols[pos++] = static_cast<int>(j0 + static_cast<std::size_t>(m[0]) * (j1 + static_cast<std::size_t>(m[1]) * j2));
      }

  auto slot = [&](std::size_t row, const std::array<int, 3>& ii, const std::array<int, 3>& jj) {
    std::size_t off = 0, stride = 1;
    for (int k = 0; k < d; ++k) {
      const auto b = box(k, ii[k]);
      off += stride * static_cast<std::size_t>(jj[k] - b[0]);
      stride *= static_cast<std::size_t>(b[1] - b[0] + 1);
    }
    return row_ptr[row] + off;
  };

  std::array<int, 3> nloc_dir{1, 1, 1};
  int nloc = 1;
  for (int k = 0; k < d; ++k) {
    nloc_dir[k] = ts.spaces[k].degree() + 1;
    nloc *= nloc_dir[k];
  }
  std::vector<double> local(static_cast<std::size_t>(nloc) * nloc);
  std::vector<double> grad(static_cast<std::size_t>(nloc) * d);
  std::vector<double> cgrad(static_cast<std::size_t>(nloc) * d);
  double sign = 0.0;

  loop.for_each_element([&](const std::array<int, 3>& e) {
    std::fill(local.begin(), local.end(), 0.0);
    loop.for_each_point([&](const std::array<int, 3>& q) {
      Point x{0, 0, 0};
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        x[k] = loop.tables[k].x(e[k], q[k]);
        w *= loop.tables[k].weight(e[k], q[k]);
      }
      const Jacobian J = geom.jacobian(x);
      detail::check_determinant(jacobian_determinant(J, d), sign);
      const DenseMatrix C = metric_coefficient(J, d);
      for (int a = 0; a < nloc; ++a) {
        std::array<int, 3> la{a % nloc_dir[0], (a / nloc_dir[0]) % nloc_dir[1], a / (nloc_dir[0] * nloc_dir[1])};
        for (int l = 0; l < d; ++l) {
          double g = 1.0;
          for (int k = 0; k < d; ++k)
            g *= (k == l) ? loop.tables[k].deriv(e[k], q[k], la[k]) : loop.tables[k].value(e[k], q[k], la[k]);
          grad[static_cast<std::size_t>(a) * d + l] = g;
        }
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int r = 0; r < d; ++r) s += C(l, r) * grad[static_cast<std::size_t>(a) * d + r];
          cgrad[static_cast<std::size_t>(a) * d + l] = w * s;
        }
      }
      for (int a = 0; a < nloc; ++a)
        for (int b = 0; b < nloc; ++b) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) s += cgrad[static_cast<std::size_t>(a) * d + l] * grad[static_cast<std::size_t>(b) * d + l];
          local[static_cast<std::size_t>(a) * nloc + b] += s;
        }
    });
    // scatter
    for (int a = 0; a < nloc; ++a) {
      std::array<int, 3> la{a % nloc_dir[0], (a / nloc_dir[0]) % nloc_dir[1], a / (nloc_dir[0] * nloc_dir[1])};
      std::array<int, 3> ia{0, 0, 0};
      bool ok = true;
      for (int k = 0; k < d && ok; ++k) {
        ia[k] = loop.reduced(k, loop.tables[k].first(e[k]) + la[k]);
        ok = ia[k] >= 0;
      }
      if (!ok) continue;
      const std::size_t row = ia[0] + static_cast<std::size_t>(m[0]) * (ia[1] + static_cast<std::size_t>(m[1]) * ia[2]);
      for (int b = 0; b < nloc; ++b) {
        std::array<int, 3> lb{b % nloc_dir[0], (b / nloc_dir[0]) % nloc_dir[1], b / (nloc_dir[0] * nloc_dir[1])};
        std::array<int, 3> ib{0, 0, 0};
        bool okb = true;
        for (int k = 0; k < d && okb; ++k) {
          ib[k] = loop.reduced(k, loop.tables[k].first(e[k]) + lb[k]);
          okb = ib[k] >= 0;
        }
        if (!okb) continue;
        vals[slot(row, ia, ib)] += local[static_cast<std::size_t>(a) * nloc + b];
      }
    }
  });
  return SparseMatrix(N, std::move(row_ptr), std::move(cols), std::move(vals));
}

/// Identity geometry: Â; separable metric: exact weighted Kronecker sum;
/// otherwise the assembled sparse matrix.
inline std::unique_ptr<LinearOperator> stiffness_operator(const GeometryMap& geom, const TensorSpace& ts) {
  if (geom.is_identity()) return std::make_unique<KronOperator>(kron_surrogate(ts));
  if (geom.separable()) return std::make_unique<KronOperator>(separable_stiffness(geom, ts));
  return std::make_unique<SparseMatrix>(assemble_stiffness(geom, ts));
}

using Source = std::function<double(const Point&)>;

/// [∫ f(G(x̂)) B_i(x̂) |det J_G| dx̂]_i
inline std::vector<double> assemble_load(const GeometryMap& geom, const TensorSpace& ts, const Source& f) {
  ts.validate();
  const int d = ts.dim();
  const TensorShape shape = ts.shape();
  detail::ElementLoop loop(ts, 1);
  std::vector<double> rhs(shape.size(), 0.0);
  std::array<int, 3> m{1, 1, 1};
  for (int k = 0; k < d; ++k) m[k] = shape.extent(k);
  std::array<int, 3> nloc_dir{1, 1, 1};
  int nloc = 1;
  for (int k = 0; k < d; ++k) {
    nloc_dir[k] = ts.spaces[k].degree() + 1;
    nloc *= nloc_dir[k];
  }
  double sign = 0.0;
  loop.for_each_element([&](const std::array<int, 3>& e) {
    loop.for_each_point([&](const std::array<int, 3>& q) {
      Point x{0, 0, 0};
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        x[k] = loop.tables[k].x(e[k], q[k]);
        w *= loop.tables[k].weight(e[k], q[k]);
      }
      const double det = jacobian_determinant(geom.jacobian(x), d);
      detail::check_determinant(det, sign);
      const double fw = f(geom(x)) * std::abs(det) * w;
      for (int a = 0; a < nloc; ++a) {
        std::array<int, 3> la{a % nloc_dir[0], (a / nloc_dir[0]) % nloc_dir[1], a / (nloc_dir[0] * nloc_dir[1])};
        std::array<int, 3> ia{0, 0, 0};
        double v = fw;
        bool ok = true;
        for (int k = 0; k < d && ok; ++k) {
          ia[k] = loop.reduced(k, loop.tables[k].first(e[k]) + la[k]);
          ok = ia[k] >= 0;
          v *= loop.tables[k].value(e[k], q[k], la[k]);
        }
        if (ok) rhs[ia[0] + static_cast<std::size_t>(m[0]) * (ia[1] + static_cast<std::size_t>(m[1]) * ia[2])] += v;
      }
    });
  });
  return rhs;
}

/// ‖u_h∘G^{-1} - u‖_{L²(Ω)} for coefficients u_h in the reduced tensor basis.
inline double l2_error(const GeometryMap& geom, const TensorSpace& ts, std::span<const double> coef, const Source& exact) {
  ts.validate();
  const int d = ts.dim();
  const TensorShape shape = ts.shape();
  detail::ElementLoop loop(ts, 2);
  std::array<int, 3> m{1, 1, 1};
  for (int k = 0; k < d; ++k) m[k] = shape.extent(k);
  std::array<int, 3> nloc_dir{1, 1, 1};
  int nloc = 1;
  for (int k = 0; k < d; ++k) {
    nloc_dir[k] = ts.spaces[k].degree() + 1;
    nloc *= nloc_dir[k];
  }
  double err2 = 0.0;
  loop.for_each_element([&](const std::array<int, 3>& e) {
    loop.for_each_point([&](const std::array<int, 3>& q) {
      Point x{0, 0, 0};
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        x[k] = loop.tables[k].x(e[k], q[k]);
        w *= loop.tables[k].weight(e[k], q[k]);
      }
      double uh = 0.0;
      for (int a = 0; a < nloc; ++a) {
        std::array<int, 3> la{a % nloc_dir[0], (a / nloc_dir[0]) % nloc_dir[1], a / (nloc_dir[0] * nloc_dir[1])};
        std::array<int, 3> ia{0, 0, 0};
        double v = 1.0;
        bool ok = true;
        for (int k = 0; k < d && ok; ++k) {
          ia[k] = loop.reduced(k, loop.tables[k].first(e[k]) + la[k]);
          ok = ia[k] >= 0;
          v *= loop.tables[k].value(e[k], q[k], la[k]);
        }
        if (ok) uh += v * coef[ia[0] + static_cast<std::size_t>(m[0]) * (ia[1] + static_cast<std::size_t>(m[1]) * ia[2])];
      }
      const double det = std::abs(jacobian_determinant(geom.jacobian(x), d));
      const double diff = uh - exact(geom(x));
      err2 += w * det * diff * diff;
    });
  });
  return std::sqrt(err2);
}

/// sup(|det J| σ²_max(J^{-1})) / inf(|det J| σ²_min(J^{-1})) over the quadrature
/// grid: an upper bound for κ(Â^{-1} A).
inline double geometry_condition_bound(const GeometryMap& geom, const TensorSpace& ts) {
  const int d = ts.dim();
  detail::ElementLoop loop(ts, 0);
  double hi = 0.0, lo = std::numeric_limits<double>::infinity();
  loop.for_each_element([&](const std::array<int, 3>& e) {
    loop.for_each_point([&](const std::array<int, 3>& q) {
      Point x{0, 0, 0};
      for (int k = 0; k < d; ++k) x[k] = loop.tables[k].x(e[k], q[k]);
      const SymmetricEigen ev = symmetric_eigen(metric_coefficient(geom.jacobian(x), d));
      lo = std::min(lo, ev.values.front());
      hi = std::max(hi, ev.values.back());
    });
  });
  return hi / lo;
}

}  // namespace iffd
