#pragma once

#include <functional>
#include <vector>

#include "iffd/banded.hpp"
#include "iffd/quadrature.hpp"
#include "iffd/spline.hpp"

namespace iffd {

/// Basis values and first derivatives of one spline space at q Gauss points
/// per element. Shared by the univariate and the multivariate assembly.
class BasisTable {
 public:
  BasisTable(const SplineSpace& space, int points_per_element)
      : p_(space.degree()), n_(space.elements()), q_(points_per_element) {
    const QuadratureRule rule = gauss_rule(q_);
    const double h = space.h();
    x_.resize(static_cast<std::size_t>(n_) * q_);
    w_.resize(x_.size());
    first_.resize(n_);
    val_.resize(x_.size() * (p_ + 1));
    der_.resize(val_.size());
    for (int e = 0; e < n_; ++e) {
      const double a = static_cast<double>(e) / n_;
      for (int k = 0; k < q_; ++k) {
        const std::size_t idx = static_cast<std::size_t>(e) * q_ + k;
        const double x = a + h * rule.points[k];
        x_[idx] = x;
        w_[idx] = h * rule.weights[k];
        const int span = find_span(space.knots(), p_, x);
        first_[e] = span - p_;
        const DenseMatrix d = basis_derivatives(space.knots(), p_, span, x, 1);
        for (int j = 0; j <= p_; ++j) {
          val_[idx * (p_ + 1) + j] = d(0, j);
          der_[idx * (p_ + 1) + j] = d(1, j);
        }
      }
    }
  }

  int degree() const noexcept { return p_; }
  int elements() const noexcept { return n_; }
  int points() const noexcept { return q_; }
  double x(int e, int k) const noexcept { return x_[static_cast<std::size_t>(e) * q_ + k]; }
  double weight(int e, int k) const noexcept { return w_[static_cast<std::size_t>(e) * q_ + k]; }
  int first(int e) const noexcept { return first_[e]; }
  double value(int e, int k, int a) const noexcept { return val_[(static_cast<std::size_t>(e) * q_ + k) * (p_ + 1) + a]; }
  double deriv(int e, int k, int a) const noexcept { return der_[(static_cast<std::size_t>(e) * q_ + k) * (p_ + 1) + a]; }

 private:
  int p_, n_, q_;
  std::vector<double> x_, w_;
  std::vector<int> first_;
  std::vector<double> val_, der_;
};

enum class MatrixKind { mass, stiffness };

using Weight = std::function<double(double)>;

/// [∫ w B_j B_i]_{ij} (mass) or [∫ w B'_j B'_i]_{ij} (stiffness) on S_{p,h,D},
/// with p+1 Gauss points per element. A null weight means w = 1.
inline BandedMatrix univariate_matrix(const SplineSpace& space, DirichletSet d, MatrixKind kind,
                                      const Weight& weight = nullptr) {
  const int p = space.degree();
  const BasisTable table(space, p + 1);
  BandedMatrix full(space.full_dim(), p);
  for (int e = 0; e < table.elements(); ++e) {
    const int f = table.first(e);
    for (int k = 0; k < table.points(); ++k) {
      double w = table.weight(e, k);
      if (weight) w *= weight(table.x(e, k));
      for (int a = 0; a <= p; ++a) {
        const double ua = kind == MatrixKind::mass ? table.value(e, k, a) : table.deriv(e, k, a);
        for (int b = 0; b <= p; ++b) {
          const double ub = kind == MatrixKind::mass ? table.value(e, k, b) : table.deriv(e, k, b);
          full.add(f + a, f + b, w * ua * ub);
        }
      }
    }
  }
  const std::vector<int> keep = space.kept_indices(d);
  return full.restricted(keep);
}

inline BandedMatrix univariate_mass(const SplineSpace& space, DirichletSet d) {
  return univariate_matrix(space, d, MatrixKind::mass);
}

inline BandedMatrix univariate_stiffness(const SplineSpace& space, DirichletSet d) {
  return univariate_matrix(space, d, MatrixKind::stiffness);
}

}  // namespace iffd
