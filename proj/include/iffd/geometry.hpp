#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "iffd/dense.hpp"
#include "iffd/errors.hpp"
#include "iffd/univariate.hpp"

namespace iffd {

using Point = std::array<double, 3>;
using Jacobian = std::array<std::array<double, 3>, 3>;  // J[i][j] = ∂G_i/∂x̂_j

/// Pulled-back coefficient |det J| J^{-1} J^{-T} that is diagonal, with each
/// diagonal entry a product of univariate factors: C_aa(x̂) = Π_k factors[a][k](x̂_k).
/// An empty factor means 1.
struct SeparableMetric {
  std::vector<std::vector<Weight>> factors;
};

/// Bijective map G: [0,1]^d -> Ω with its Jacobian. Immutable.
class GeometryMap {
 public:
  GeometryMap(std::string name, int dim, std::function<Point(const Point&)> map,
              std::function<Jacobian(const Point&)> jacobian, std::optional<SeparableMetric> separable = {},
              bool identity = false)
      : name_(std::move(name)),
        dim_(dim),
        map_(std::move(map)),
        jac_(std::move(jacobian)),
        separable_(std::move(separable)),
        identity_(identity) {
    if (dim_ != 2 && dim_ != 3) throw InvalidArgument("geometry dimension must be 2 or 3");
  }

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  Point operator()(const Point& x) const { return map_(x); }
  Jacobian jacobian(const Point& x) const { return jac_(x); }
  const std::optional<SeparableMetric>& separable() const noexcept { return separable_; }
  bool is_identity() const noexcept { return identity_; }

 private:
  std::string name_;
  int dim_;
  std::function<Point(const Point&)> map_;
  std::function<Jacobian(const Point&)> jac_;
  std::optional<SeparableMetric> separable_;
  bool identity_;
};

inline double jacobian_determinant(const Jacobian& j, int d) {
  if (d == 2) return j[0][0] * j[1][1] - j[0][1] * j[1][0];
  return j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
         j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
}

/// |det J| J^{-1} J^{-T} as a d×d matrix.
inline DenseMatrix metric_coefficient(const Jacobian& j, int d) {
  DenseMatrix jm(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) jm(a, b) = j[a][b];
  const DenseMatrix jinv = inverse(jm);
  DenseMatrix c = jinv * jinv.transposed();
  const double det = std::abs(jacobian_determinant(j, d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) c(a, b) *= det;
  return c;
}

namespace detail {

inline GeometryMap make_identity(int d) {
  std::vector<std::vector<Weight>> f(d, std::vector<Weight>(d));
  return GeometryMap(
      d == 2 ? "square" : "cube", d, [](const Point& x) { return x; },
      [](const Point&) {
        Jacobian j{};
        for (int i = 0; i < 3; ++i) j[i][i] = 1.0;
        return j;
      },
      SeparableMetric{std::move(f)}, true);
}

// Quarter annulus with inner radius 1 and outer radius 2:
// G(x,y) = ((1+x) cos(πy/2), (1+x) sin(πy/2)), optionally extruded in z.
inline GeometryMap make_annulus(int d) {
  constexpr double half_pi = std::numbers::pi / 2;
  auto map = [](const Point& x) {
    const double r = 1.0 + x[0];
    const double t = half_pi * x[1];
    return Point{r * std::cos(t), r * std::sin(t), x[2]};
  };
  auto jac = [](const Point& x) {
    const double r = 1.0 + x[0];
    const double t = half_pi * x[1];
    Jacobian j{};
    j[0][0] = std::cos(t);
    j[0][1] = -r * half_pi * std::sin(t);
    j[1][0] = std::sin(t);
    j[1][1] = r * half_pi * std::cos(t);
    j[2][2] = 1.0;
    return j;
  };
  // J^T J = diag(1, (π/2)^2 (1+x)^2, 1), det J = (π/2)(1+x)
  Weight radial = [](double x) { return half_pi * (1.0 + x); };
  Weight angular = [](double x) { return 1.0 / (half_pi * (1.0 + x)); };
  std::vector<std::vector<Weight>> f(d, std::vector<Weight>(d));
  f[0][0] = radial;
  f[1][0] = angular;
  if (d == 3) f[2][0] = radial;
  return GeometryMap(d == 2 ? "quarter_annulus_2d" : "thick_quarter_annulus_3d", d, map, jac,
                     SeparableMetric{std::move(f)});
}

}  // namespace detail

/// square, cube, quarter_annulus_2d (alias annulus2d),
/// thick_quarter_annulus_3d (alias annulus3d).
inline GeometryMap builtin_geometry(const std::string& name) {
  if (name == "square") return detail::make_identity(2);
  if (name == "cube") return detail::make_identity(3);
  if (name == "quarter_annulus_2d" || name == "annulus2d") return detail::make_annulus(2);
  if (name == "thick_quarter_annulus_3d" || name == "annulus3d") return detail::make_annulus(3);
  throw InvalidArgument("unknown geometry '" + name + "'");
}

}  // namespace iffd
