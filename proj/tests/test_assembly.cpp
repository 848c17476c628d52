#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "iffd/galerkin.hpp"
#include "iffd/solver.hpp"

using namespace iffd;

namespace {

// Brute-force Galerkin stiffness: every pair of tensor basis functions,
// integrated with a Gauss rule on every element, no sparsity or scatter logic.
DenseMatrix dense_stiffness_oracle(const GeometryMap& g, const TensorSpace& ts) {
  const int d = ts.dim();
  const TensorShape shape = ts.shape();
  const int N = static_cast<int>(shape.size());
  DenseMatrix a(N, N);
  const int n = ts.spaces[0].elements();
  const QuadratureRule rule = gauss_rule(ts.spaces[0].degree() + 1);  // same rule as the library
  const int q = rule.size();
  std::vector<std::vector<double>> val(d), der(d);
  std::vector<int> idx(d);
  std::vector<int> e(3, 0), k(3, 0);
  const int ne2 = d == 3 ? n : 1, nq2 = d == 3 ? q : 1;
  for (e[2] = 0; e[2] < ne2; ++e[2])
    for (e[1] = 0; e[1] < n; ++e[1])
      for (e[0] = 0; e[0] < n; ++e[0])
        for (k[2] = 0; k[2] < nq2; ++k[2])
          for (k[1] = 0; k[1] < q; ++k[1])
            for (k[0] = 0; k[0] < q; ++k[0]) {
              Point x{0, 0, 0};
              double w = 1;
              for (int l = 0; l < d; ++l) {
                x[l] = (e[l] + rule.points[k[l]]) / n;
                w *= rule.weights[k[l]] / n;
                const SplineSpace& s = ts.spaces[l];
                val[l].assign(s.full_dim(), 0.0);
                der[l].assign(s.full_dim(), 0.0);
                const BasisValues b0 = eval_basis(s, x[l], 0), b1 = eval_basis(s, x[l], 1);
                for (std::size_t j = 0; j < b0.values.size(); ++j) {
                  val[l][b0.first + j] = b0.values[j];
                  der[l][b1.first + j] = b1.values[j];
                }
              }
              const DenseMatrix c = metric_coefficient(g.jacobian(x), d);
              std::vector<std::vector<double>> grad(N, std::vector<double>(d));
              for (int i = 0; i < N; ++i) {
                std::size_t rem = i;
                for (int l = 0; l < d; ++l) {
                  idx[l] = static_cast<int>(rem % shape.extent(l)) + (ts.bc[l].left ? 1 : 0);
                  rem /= shape.extent(l);
                }
                for (int r = 0; r < d; ++r) {
                  double gr = 1;
                  for (int l = 0; l < d; ++l) gr *= (l == r) ? der[l][idx[l]] : val[l][idx[l]];
                  grad[i][r] = gr;
                }
              }
              for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                  double s = 0;
                  for (int r = 0; r < d; ++r)
                    for (int t = 0; t < d; ++t) s += grad[i][r] * c(r, t) * grad[j][t];
                  a(i, j) += w * s;
                }
            }
  return a;
}

TensorSpace make_space(int d, int p, int n, std::vector<DirichletSet> bc) {
  TensorSpace ts;
  for (int k = 0; k < d; ++k) ts.spaces.emplace_back(p, n);
  ts.bc = std::move(bc);
  return ts;
}

double rel_diff(const DenseMatrix& a, const DenseMatrix& b) { return (a - b).max_abs() / b.max_abs(); }

}  // namespace

TEST(Gauss, MidpointAndTwoPoint) {
  const QuadratureRule g1 = gauss_rule(1);
  EXPECT_DOUBLE_EQ(g1.points[0], 0.5);
  EXPECT_DOUBLE_EQ(g1.weights[0], 1.0);
  const QuadratureRule g2 = gauss_rule(2);
  EXPECT_NEAR(g2.points[0], 0.5 - 1 / (2 * std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(g2.points[1], 0.5 + 1 / (2 * std::sqrt(3.0)), 1e-15);
  double s = 0;
  for (int i = 0; i < 2; ++i) s += g2.weights[i] * std::pow(g2.points[i], 3);
  EXPECT_NEAR(s, 0.25, 1e-16);
}

TEST(Gauss, MomentExactnessProperty) {
  for (int q = 1; q <= 32; ++q) {
    const QuadratureRule g = gauss_rule(q);
    for (int k = 0; k <= 2 * q - 1; ++k) {
      double s = 0;
      for (int i = 0; i < q; ++i) s += g.weights[i] * std::pow(g.points[i], k);
      ASSERT_NEAR(s, 1.0 / (k + 1), 1e-13) << "q=" << q << " k=" << k;
    }
  }
  EXPECT_THROW(gauss_rule(0), InvalidArgument);
  EXPECT_THROW(gauss_rule(33), InvalidArgument);
}

TEST(Univariate, LinearMassAndStiffnessRows) {
  const SplineSpace s(1, 4);
  const BandedMatrix m = univariate_mass(s, DirichletSet::none());
  const BandedMatrix k = univariate_stiffness(s, DirichletSet::none());
  const double h = 0.25;
  EXPECT_NEAR(m(2, 1), h / 6, 1e-15);
  EXPECT_NEAR(m(2, 2), 2 * h / 3, 1e-15);
  EXPECT_NEAR(m(2, 3), h / 6, 1e-15);
  EXPECT_NEAR(k(2, 1), -1 / h, 1e-13);
  EXPECT_NEAR(k(2, 2), 2 / h, 1e-13);
  EXPECT_NEAR(k(2, 3), -1 / h, 1e-13);
}

TEST(Univariate, QuadraticClosedForm) {
  // p=2, n=4: interior functions are cardinal; mass row h(1/120, 26/120, 66/120, ...)
  const SplineSpace s(2, 8);
  const BandedMatrix m = univariate_mass(s, DirichletSet::none());
  const BandedMatrix k = univariate_stiffness(s, DirichletSet::none());
  const double h = 1.0 / 8;
  EXPECT_NEAR(m(4, 4), h * 66.0 / 120, 1e-15);
  EXPECT_NEAR(m(4, 5), h * 26.0 / 120, 1e-15);
  EXPECT_NEAR(m(4, 6), h * 1.0 / 120, 1e-15);
  EXPECT_NEAR(k(4, 4), 1.0 / h, 1e-13);
  EXPECT_NEAR(k(4, 5), -1.0 / (3 * h), 1e-13);
  EXPECT_NEAR(k(4, 6), -1.0 / (6 * h), 1e-13);
}

TEST(Univariate, DirichletStiffnessIsDefinite) {
  const SplineSpace s(2, 8);
  const BandedMatrix k = univariate_stiffness(s, DirichletSet::both());
  std::vector<double> ones(k.dim(), 1.0), y(k.dim());
  k.multiply(ones, y);
  EXPECT_GT(norm2(y), 1e-3);
  EXPECT_GT(symmetric_eigen(k.to_dense()).values.front(), 0.0);
}

TEST(Univariate, NeumannStiffnessHasConstantNullVector) {
  for (int p = 1; p <= 5; ++p) {
    const BandedMatrix k = univariate_stiffness(SplineSpace(p, 9), DirichletSet::none());
    std::vector<double> ones(k.dim(), 1.0), y(k.dim());
    k.multiply(ones, y);
    EXPECT_LT(norm2(y), 1e-11);
    const auto ev = symmetric_eigen(k.to_dense()).values;
    EXPECT_NEAR(ev[0], 0.0, 1e-10);
    EXPECT_GT(ev[1], 1e-3);
  }
}

TEST(Univariate, SymmetricPositiveMass) {
  for (int p = 1; p <= 6; ++p)
    for (DirichletSet d : kAllDirichletSets) {
      const BandedMatrix m = univariate_mass(SplineSpace(p, 10), d);
      EXPECT_TRUE(m.is_symmetric(1e-15));
      EXPECT_EQ(m.dim(), SplineSpace(p, 10).dim(d));
      EXPECT_GT(symmetric_eigen(m.to_dense()).values.front(), 0.0);
    }
}

TEST(Geometry, Evaluations) {
  const GeometryMap sq = builtin_geometry("square");
  const Point a = sq({0.3, 0.7, 0});
  EXPECT_DOUBLE_EQ(a[0], 0.3);
  EXPECT_DOUBLE_EQ(a[1], 0.7);
  const GeometryMap an = builtin_geometry("quarter_annulus_2d");
  const Point b = an({0, 0, 0});
  EXPECT_NEAR(b[0], 1.0, 1e-15);
  EXPECT_NEAR(b[1], 0.0, 1e-15);
  const Point c = an({1, 1, 0});
  EXPECT_NEAR(c[0], 0.0, 1e-15);
  EXPECT_NEAR(c[1], 2.0, 1e-15);
  for (double x : {0.0, 0.4, 1.0})
    EXPECT_NEAR(jacobian_determinant(an.jacobian({x, 0.3, 0}), 2), std::numbers::pi / 2 * (1 + x), 1e-14);
  EXPECT_THROW(builtin_geometry("plate_with_hole"), InvalidArgument);
  EXPECT_EQ(builtin_geometry("annulus3d").dim(), 3);
}

TEST(Geometry, SeparableMetricMatchesJacobian) {
  for (const char* name : {"quarter_annulus_2d", "thick_quarter_annulus_3d"}) {
    const GeometryMap g = builtin_geometry(name);
    const int d = g.dim();
    const auto& f = g.separable()->factors;
    for (double x : {0.1, 0.5, 0.9})
      for (double y : {0.2, 0.8}) {
        const Point pt{x, y, 0.3};
        const DenseMatrix c = metric_coefficient(g.jacobian(pt), d);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            double expect = 0;
            if (a == b) {
              expect = 1;
              for (int k = 0; k < d; ++k)
                if (f[a][k]) expect *= f[a][k](pt[k]);
            }
            EXPECT_NEAR(c(a, b), expect, 1e-13);
          }
      }
  }
}

TEST(Assembly, KronEqualsDenseOracleOnIdentityGeometry) {
  const GeometryMap sq = builtin_geometry("square");
  const TensorSpace ts = make_space(2, 2, 4, {DirichletSet::both(), {true, false}});
  const DenseMatrix oracle = dense_stiffness_oracle(sq, ts);
  const KronOperator a = kron_surrogate(ts);
  EXPECT_LT(rel_diff(a.to_dense(), oracle), 1e-12);
  // Â e_1 is the first column
  std::vector<double> e(a.size(), 0.0), y(a.size());
  e[0] = 1;
  a.apply(e, y);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], oracle(static_cast<int>(i), 0), 1e-12);
}

TEST(Assembly, SparseEqualsDenseOracleOnAnnulus) {
  const GeometryMap an = builtin_geometry("quarter_annulus_2d");
  for (DirichletSet d : kAllDirichletSets) {
    const TensorSpace ts = make_space(2, 2, 4, {d, DirichletSet::both()});
    const DenseMatrix oracle = dense_stiffness_oracle(an, ts);
    EXPECT_LT(rel_diff(assemble_stiffness(an, ts).to_dense(), oracle), 1e-12);
    EXPECT_LT(rel_diff(separable_stiffness(an, ts).to_dense(), oracle), 1e-12);
  }
}

TEST(Assembly, SparseEqualsDenseOracle3D) {
  const GeometryMap an = builtin_geometry("thick_quarter_annulus_3d");
  const TensorSpace ts = make_space(3, 2, 3, {DirichletSet::none(), DirichletSet::none(), {true, false}});
  const DenseMatrix oracle = dense_stiffness_oracle(an, ts);
  EXPECT_LT(rel_diff(assemble_stiffness(an, ts).to_dense(), oracle), 1e-12);
  EXPECT_LT(rel_diff(separable_stiffness(an, ts).to_dense(), oracle), 1e-12);
}

TEST(Assembly, SparseStructure) {
  const GeometryMap an = builtin_geometry("quarter_annulus_2d");
  const TensorSpace ts = make_space(2, 3, 8, {DirichletSet::both(), DirichletSet::both()});
  const SparseMatrix a = assemble_stiffness(an, ts);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(a.row_nonzeros(i), 49u);
  const DenseMatrix d = a.to_dense();
  EXPECT_LT((d - d.transposed()).max_abs(), 1e-13 * d.max_abs());
  EXPECT_GT(symmetric_eigen(d).values.front(), 0.0);
}

TEST(Assembly, KronSymmetryProperty) {
  const TensorSpace ts = make_space(3, 3, 6, {DirichletSet::both(), {false, true}, DirichletSet::none()});
  const KronOperator a = kron_surrogate(ts);
  for (int t = 0; t < 5; ++t) {
    const auto u = random_vector(a.size(), 10 + t), v = random_vector(a.size(), 100 + t);
    const auto au = a(u), av = a(v);
    EXPECT_NEAR(dot(au, v), dot(u, av), 1e-12 * norm2(au) * norm2(v));
  }
}

TEST(Assembly, KronRejectsBadDimension) {
  EXPECT_THROW(kron_surrogate(make_space(1, 2, 4, {DirichletSet::both()})), InvalidArgument);
}

TEST(Assembly, SingularGeometryRejected) {
  // folds the square: det J changes sign at x = 1/2
  const GeometryMap fold(
      "fold", 2, [](const Point& x) { return Point{(x[0] - 0.5) * (x[0] - 0.5), x[1], 0}; },
      [](const Point& x) {
        Jacobian j{};
        j[0][0] = 2 * (x[0] - 0.5);
        j[1][1] = 1;
        j[2][2] = 1;
        return j;
      });
  EXPECT_THROW(assemble_stiffness(fold, make_space(2, 2, 3, {DirichletSet::both(), DirichletSet::both()})),
               SingularGeometryError);
}

TEST(Assembly, MatrixMarketHeader) {
  const SparseMatrix a = assemble_stiffness(builtin_geometry("square"), make_space(2, 1, 2, {DirichletSet::none(), DirichletSet::none()}));
  std::ostringstream os;
  write_matrix_market(os, a);
  EXPECT_EQ(os.str().rfind("%%MatrixMarket matrix coordinate real symmetric\n9 9 ", 0), 0u);
}

TEST(Assembly, ManufacturedSolutionConvergesAtRatePPlusOne) {
  const GeometryMap sq = builtin_geometry("square");
  const double pi = std::numbers::pi;
  const Source f = [&](const Point& x) { return 2 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  const Source u = [&](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  for (int p = 1; p <= 3; ++p) {
    std::vector<double> errs;
    for (int n : {8, 16, 32}) {
      const TensorSpace ts = make_space(2, p, n, {DirichletSet::both(), DirichletSet::both()});
      const SparseMatrix a = assemble_stiffness(sq, ts);
      const auto b = assemble_load(sq, ts, f);
      const TensorPreconditioner pre = make_preconditioner(Variant::fd, ts);
      const PcgResult r = pcg(a, b, &pre, 1e-13, 200);
      errs.push_back(l2_error(sq, ts, r.solution, u));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
      const double rate = std::log2(errs[i - 1] / errs[i]);
      EXPECT_GT(rate, p + 1 - 0.3) << "p=" << p << " errors " << errs[i - 1] << " -> " << errs[i];
    }
  }
}

TEST(Assembly, GeometryConditionBoundHolds) {
  const GeometryMap an = builtin_geometry("quarter_annulus_2d");
  const TensorSpace ts = make_space(2, 2, 8, {DirichletSet::both(), DirichletSet::both()});
  const DenseMatrix a = assemble_stiffness(an, ts).to_dense();
  const DenseMatrix ah = kron_surrogate(ts).to_dense();
  const auto ev = generalized_eigen(a, ah).values;
  EXPECT_LE(ev.back() / ev.front(), geometry_condition_bound(an, ts) * (1 + 1e-10));
}
