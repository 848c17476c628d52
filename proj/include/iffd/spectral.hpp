#pragma once

// Spectral data of one direction: closed-form eigenvalues and scalings on the
// regular space, a small generalized eigenproblem on the outlier space, and the
// resulting approximate eigenvector matrix Q̃ = [V_reg U D̃^{-1}, V_out Q_out].

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "iffd/banded.hpp"
#include "iffd/dense.hpp"
#include "iffd/errors.hpp"
#include "iffd/splitting.hpp"
#include "iffd/transforms.hpp"

namespace iffd {

/// Σ_{|k|<=K} B̃_q(k) cos(k hα)
inline double cardinal_cosine_sum(int q, int kmax, double h_alpha) {
  double s = cardinal_bspline(q, 0.0);
  for (int k = 1; k <= kmax; ++k) s += 2.0 * cardinal_bspline(q, k) * std::cos(k * h_alpha);
  return s;
}

/// Θ_j: eigenvalue of the collocation matrix of the special basis at the nodes.
inline double theta(int p, double h, double alpha) { return cardinal_cosine_sum(p, p / 2, h * alpha); }

/// Symbol of the periodic mass matrix divided by h.
inline double mass_symbol(int p, double h, double alpha) { return cardinal_cosine_sum(2 * p + 1, p, h * alpha); }

/// Symbol of the periodic stiffness matrix times h.
inline double stiffness_symbol(int p, double h, double alpha) {
  const double x = h * alpha;
  const double s = p >= 1 ? cardinal_cosine_sum(2 * p - 1, p - 1, x) : 0.0;
  return (2.0 - 2.0 * std::cos(x)) * s;
}

/// Mean of sin²(x_i α + β) over the nodes: 1/2, except for the constant and the
/// alternating mode (hα ∈ {0, π}) where every node sees the same value.
inline double node_mean_square(int p, int n, DirichletSet d, double alpha) {
  const double h = 1.0 / n;
  if (std::abs(std::sin(h * alpha)) > 1e-12) return 0.5;
  const NodeSet ns = nodes_and_frequencies(SplineSpace(p, n), d);
  const double v = std::sin(ns.nodes.front() * alpha + ns.phase);
  return v * v;
}

/// Λ_jj = (2 - 2cos hα)/h² · Σ_{|k|<p} B̃_{2p-1}(k)cos(khα) / Σ_{|k|<=p} B̃_{2p+1}(k)cos(khα)
inline double symbol_lambda(int p, double h, double alpha) {
  const double den = mass_symbol(p, h, alpha);
  if (!(den > 0.0)) throw Error("symbol_lambda: nonpositive mass symbol");
  return stiffness_symbol(p, h, alpha) / (h * h * den);
}

/// D̃_jj = ‖V_reg U e_j‖_{L²} = (mean_j · Σ_{|k|<=p} B̃_{2p+1}(k)cos(khα))^{1/2}
inline double symbol_dtilde(int p, int n, DirichletSet d, double alpha) {
  const double h = 1.0 / n;
  const double den = mass_symbol(p, h, alpha);
  if (!(den > 0.0)) throw Error("symbol_dtilde: nonpositive mass symbol");
  return std::sqrt(node_mean_square(p, n, d, alpha) * den);
}

/// D_reg = D̃ / Θ: the scaling for eigenvectors expressed through interpolation
/// at the nodes instead of the special basis.
inline double symbol_dreg(int p, int n, DirichletSet d, double alpha) {
  const double th = theta(p, 1.0 / n, alpha);
  if (!(th > 0.0)) throw Error("symbol_dreg: nonpositive Θ");
  return symbol_dtilde(p, n, d, alpha) / th;
}

/// Generalized eigenpairs of a small SPD pencil, Q^T M Q = I, Q^T K Q = Λ.
inline SymmetricEigen outlier_eigen(const DenseMatrix& m_out, const DenseMatrix& k_out) {
  if (m_out.rows() > 64) throw UnsupportedError("outlier_eigen: n_out > 64");
  try {
    return generalized_eigen(k_out, m_out);
  } catch (const SingularError&) {
    throw SingularError("outlier_eigen: outlier mass matrix is not SPD (invalid splitting)");
  }
}

namespace detail {

inline DenseMatrix banded_congruence(const BandedMatrix& a, const DenseMatrix& v) {
  const int m = v.rows(), c = v.cols();
  DenseMatrix av(m, c);
  std::vector<double> x(m), y(m);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < m; ++i) x[i] = v(i, j);
    a.multiply(x, y);
    for (int i = 0; i < m; ++i) av(i, j) = y[i];
  }
  return v.transposed() * av;
}

}  // namespace detail

/// One direction's approximate diagonalization of the pencil (K, M).
class UnivariateSpectral {
 public:
  UnivariateSpectral(const SplineSpace& space, DirichletSet d, const BandedMatrix& mass, const BandedMatrix& stiffness)
      : space_(space), bc_(d) {
    const SplineSpace smooth = space.smooth();
    splitting_ = build_splitting_reduced(space, d, mass);
    nodes_ = nodes_and_frequencies(smooth, d);
    kind_ = select_transform(space.degree(), d);
    plan_ = std::make_shared<TransformPlan>(kind_, splitting_.n_reg);
    const int p = space.degree(), n = space.elements();
    for (double a : nodes_.frequencies) {
      d_tilde_.push_back(symbol_dtilde(p, n, d, a));
      lambda_reg_.push_back(symbol_lambda(p, 1.0 / n, a));
    }
    if (splitting_.n_out > 0) {
      const DenseMatrix m_out = detail::banded_congruence(mass, splitting_.v_out);
      const DenseMatrix k_out = detail::banded_congruence(stiffness, splitting_.v_out);
      SymmetricEigen e = outlier_eigen(m_out, k_out);
      lambda_out_ = std::move(e.values);
      q_out_ = std::move(e.vectors);
      w_out_ = splitting_.v_out * q_out_;
    }
  }

  const SplineSpace& space() const noexcept { return space_; }
  DirichletSet bc() const noexcept { return bc_; }
  int size() const noexcept { return splitting_.m; }
  TransformKind transform() const noexcept { return kind_; }
  const NodeSet& nodes() const noexcept { return nodes_; }
  const Splitting& splitting() const noexcept { return splitting_; }
  const std::vector<double>& d_tilde() const noexcept { return d_tilde_; }
  const std::vector<double>& lambda_reg() const noexcept { return lambda_reg_; }
  const std::vector<double>& lambda_out() const noexcept { return lambda_out_; }
  const DenseMatrix& q_out() const noexcept { return q_out_; }
  /// V_out Q_out
  const DenseMatrix& w_out() const noexcept { return w_out_; }

  /// Λ̃: regular eigenvalues followed by outlier eigenvalues.
  std::vector<double> eigenvalues() const {
    std::vector<double> l = lambda_reg_;
    l.insert(l.end(), lambda_out_.begin(), lambda_out_.end());
    return l;
  }

  /// Replaces the closed-form D̃ (e.g. with the dense oracle values).
  void set_d_tilde(std::vector<double> d) {
    if (static_cast<int>(d.size()) != splitting_.n_reg) throw InvalidArgument("set_d_tilde: size mismatch");
    d_tilde_ = std::move(d);
  }

  /// out = Q̃^T r. `out` must not alias `r`.
  void apply_qt(std::span<const double> r, std::span<double> out) const {
    const int nreg = splitting_.n_reg, nout = splitting_.n_out;
    std::span<double> reg = out.subspan(0, nreg);
    splitting_.v_reg.multiply_transpose(r, reg);
    plan_->apply_adjoint(reg, reg);
    for (int j = 0; j < nreg; ++j) reg[j] /= d_tilde_[j];
    if (nout > 0) multiply_transpose(w_out_, r, out.subspan(nreg, nout));
  }

  /// out = Q̃ z. Uses z as scratch for the regular block unless `scratch` is given.
  void apply_q(std::span<const double> z, std::span<double> out, std::span<double> scratch) const {
    const int nreg = splitting_.n_reg, nout = splitting_.n_out, m = splitting_.m;
    for (int j = 0; j < nreg; ++j) scratch[j] = z[j] / d_tilde_[j];
    std::span<double> reg = scratch.subspan(0, nreg);
    plan_->apply(reg, reg);
    splitting_.v_reg.multiply(reg, out);
    for (int k = 0; k < nout; ++k) {
      const double zk = z[nreg + k];
      if (zk == 0.0) continue;
      for (int i = 0; i < m; ++i) out[i] += w_out_(i, k) * zk;
    }
  }

  /// Dense Q̃ (m × m), for verification.
  DenseMatrix dense_q() const {
    const int m = splitting_.m;
    DenseMatrix q(m, m);
    std::vector<double> e(m), col(m), scratch(m);
    for (int j = 0; j < m; ++j) {
      std::fill(e.begin(), e.end(), 0.0);
      e[j] = 1.0;
      apply_q(e, col, scratch);
      for (int i = 0; i < m; ++i) q(i, j) = col[i];
    }
    return q;
  }

 private:
  SplineSpace space_;
  DirichletSet bc_;
  Splitting splitting_;
  NodeSet nodes_;
  TransformKind kind_{};
  std::shared_ptr<TransformPlan> plan_;
  std::vector<double> d_tilde_, lambda_reg_, lambda_out_;
  DenseMatrix q_out_, w_out_;
};

// ---------------------------------------------------------------------------
// Dense oracles (verification only; O(m^3)).

/// Dense V_reg U: columns are the regular eigenfunctions in the open-knot basis.
inline DenseMatrix dense_regular_eigenfunctions(const UnivariateSpectral& s) {
  const DenseMatrix u = reference_matrix(s.transform(), s.splitting().n_reg);
  return s.splitting().v_reg.to_dense() * u;
}

/// C_reg: (i, j) = B̂_j(x_i), special basis functions evaluated at the nodes.
inline DenseMatrix collocation_matrix(const UnivariateSpectral& s) {
  const SplineSpace& space = s.space();
  const Splitting& sp = s.splitting();
  const auto& x = s.nodes().nodes;
  DenseMatrix c(sp.n_reg, sp.n_reg);
  for (int j = 0; j < sp.n_reg; ++j) {
    const std::vector<double> full = expand_dirichlet(space, s.bc(), sp.v_reg.dense_column(j));
    for (int i = 0; i < sp.n_reg; ++i) c(i, j) = eval_spline(space, full, x[i]);
  }
  return c;
}

/// D̃ from the definition (U^T V_reg^T M V_reg U)^{1/2}, diagonal part.
inline std::vector<double> dense_dtilde(const UnivariateSpectral& s, const BandedMatrix& mass) {
  const DenseMatrix f = dense_regular_eigenfunctions(s);
  const DenseMatrix g = detail::banded_congruence(mass, f);
  std::vector<double> d(f.cols());
  for (int j = 0; j < f.cols(); ++j) d[j] = std::sqrt(g(j, j));
  return d;
}

/// D_reg from interpolation: the eigenfunctions C_reg^{-1} U in the special
/// basis, normalized in L².
inline std::vector<double> dense_dreg(const UnivariateSpectral& s, const BandedMatrix& mass) {
  const DenseMatrix u = reference_matrix(s.transform(), s.splitting().n_reg);
  const DenseMatrix coef = lu_solve(collocation_matrix(s), u);
  const DenseMatrix f = s.splitting().v_reg.to_dense() * coef;
  const DenseMatrix g = detail::banded_congruence(mass, f);
  std::vector<double> d(f.cols());
  for (int j = 0; j < f.cols(); ++j) d[j] = std::sqrt(g(j, j));
  return d;
}

/// Full matrix D̃^{-1} U^T V_reg^T A V_reg U D̃^{-1} for A = mass or stiffness.
inline DenseMatrix dense_regular_block(const UnivariateSpectral& s, const BandedMatrix& a) {
  DenseMatrix f = dense_regular_eigenfunctions(s);
  for (int j = 0; j < f.cols(); ++j)
    for (int i = 0; i < f.rows(); ++i) f(i, j) /= s.d_tilde()[j];
  return detail::banded_congruence(a, f);
}

}  // namespace iffd
