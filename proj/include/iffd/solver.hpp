#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iffd/dense.hpp"
#include "iffd/errors.hpp"
#include "iffd/galerkin.hpp"
#include "iffd/operator.hpp"
#include "iffd/spectral.hpp"
#include "iffd/tensor.hpp"

namespace iffd {

enum class Variant { none, fd, iffd };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::none: return "none";
    case Variant::fd: return "fd";
    case Variant::iffd: return "iffd";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "none") return Variant::none;
  if (s == "fd") return Variant::fd;
  if (s == "iffd") return Variant::iffd;
  throw InvalidArgument("unknown preconditioner '" + s + "' (expected none, fd or iffd)");
}

/// Approximate eigenvector matrix Q̃ of one direction with Q̃^T M Q̃ = I and
/// Q̃^T K Q̃ ≈ diag(eigenvalues()).
class DirectionalFactor {
 public:
  virtual ~DirectionalFactor() = default;
  virtual int size() const = 0;
  virtual std::vector<double> eigenvalues() const = 0;
  /// out = Q̃^T in; scratch has size() entries. No aliasing.
  virtual void apply_qt(std::span<const double> in, std::span<double> out, std::span<double> scratch) const = 0;
  /// out = Q̃ in
  virtual void apply_q(std::span<const double> in, std::span<double> out, std::span<double> scratch) const = 0;
};

/// Exact generalized eigenvectors, applied densely (FD).
class DenseFactor final : public DirectionalFactor {
 public:
  explicit DenseFactor(SymmetricEigen e) : e_(std::move(e)) {}
  int size() const override { return e_.vectors.rows(); }
  std::vector<double> eigenvalues() const override { return e_.values; }
  void apply_qt(std::span<const double> in, std::span<double> out, std::span<double>) const override {
    multiply_transpose(e_.vectors, in, out);
  }
  void apply_q(std::span<const double> in, std::span<double> out, std::span<double>) const override {
    multiply(e_.vectors, in, out);
  }
  const SymmetricEigen& eigen() const noexcept { return e_; }

 private:
  SymmetricEigen e_;
};

/// Q^T M Q = I, Q^T K Q = Λ via the dense generalized eigensolver.
inline DenseFactor fd_factor(const DenseMatrix& m, const DenseMatrix& k) {
  try {
    return DenseFactor(generalized_eigen(k, m));
  } catch (const SingularError&) {
    throw SingularError("fd_factor: mass matrix is not SPD");
  }
}

/// Regular block by fast transforms, outlier block dense (IFFD).
class SpectralFactor final : public DirectionalFactor {
 public:
  explicit SpectralFactor(std::shared_ptr<const UnivariateSpectral> s) : s_(std::move(s)) {}
  int size() const override { return s_->size(); }
  std::vector<double> eigenvalues() const override { return s_->eigenvalues(); }
  void apply_qt(std::span<const double> in, std::span<double> out, std::span<double>) const override {
    s_->apply_qt(in, out);
  }
  void apply_q(std::span<const double> in, std::span<double> out, std::span<double> scratch) const override {
    s_->apply_q(in, out, scratch);
  }
  const UnivariateSpectral& spectral() const noexcept { return *s_; }

 private:
  std::shared_ptr<const UnivariateSpectral> s_;
};

struct PreconditionerOptions {
  /// All-Neumann problems: drop the zero mode instead of failing.
  bool project_zero_mode = false;
};

/// P^{-1} = (⊗ Q̃_k) (Σ_k I ⊗ .. ⊗ Λ̃_k ⊗ .. ⊗ I)^{-1} (⊗ Q̃_k^T), or the identity
/// for Variant::none.
class TensorPreconditioner final : public LinearOperator {
 public:
  TensorPreconditioner(Variant v, TensorShape shape, std::vector<std::shared_ptr<const DirectionalFactor>> factors,
                       PreconditionerOptions opt = {})
      : variant_(v), shape_(std::move(shape)), factors_(std::move(factors)) {
    if (variant_ == Variant::none) return;
    if (static_cast<int>(factors_.size()) != shape_.order()) throw InvalidArgument("preconditioner: one factor per direction");
    for (int k = 0; k < shape_.order(); ++k)
      if (factors_[k]->size() != shape_.extent(k)) throw InvalidArgument("preconditioner: factor size mismatch");
    // eigenvalue sum, built by accumulating one direction at a time
    inv_sum_.assign(shape_.size(), 0.0);
    double scale = 0.0;
    for (int k = 0; k < shape_.order(); ++k) {
      const std::vector<double> lam = factors_[k]->eigenvalues();
      const std::size_t s = shape_.inner(k);
      const int len = shape_.extent(k);
      for (std::size_t idx = 0; idx < inv_sum_.size(); ++idx) inv_sum_[idx] += lam[(idx / s) % len];
      for (double l : lam) scale = std::max(scale, std::abs(l));
    }
    for (double& x : inv_sum_) {
      if (std::abs(x) <= 1e-12 * scale) {
        if (!opt.project_zero_mode) singular_ = true;
        x = 0.0;
      } else {
        x = 1.0 / x;
      }
    }
  }

  Variant variant() const noexcept { return variant_; }
  const TensorShape& shape() const noexcept { return shape_; }
  const std::vector<std::shared_ptr<const DirectionalFactor>>& factors() const noexcept { return factors_; }
  std::size_t size() const override { return shape_.size(); }

  /// y = P^{-1} r
  void apply(std::span<const double> r, std::span<double> y) const override {
    if (r.size() != shape_.size() || y.size() != shape_.size()) throw InvalidArgument("apply_inverse: length mismatch");
    if (variant_ == Variant::none) {
      std::copy(r.begin(), r.end(), y.begin());
      return;
    }
    if (singular_)
      throw SingularError("preconditioner is singular (all directions pure Neumann); enable zero-mode projection");
    std::copy(r.begin(), r.end(), y.begin());
    for (int k = 0; k < shape_.order(); ++k) {
      const DirectionalFactor& f = *factors_[k];
      std::vector<double> scratch(f.size());
      for_each_fiber(shape_, k, y, y, [&](std::span<const double> in, std::span<double> out) { f.apply_qt(in, out, scratch); });
    }
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= inv_sum_[i];
    for (int k = 0; k < shape_.order(); ++k) {
      const DirectionalFactor& f = *factors_[k];
      std::vector<double> scratch(f.size());
      for_each_fiber(shape_, k, y, y, [&](std::span<const double> in, std::span<double> out) { f.apply_q(in, out, scratch); });
    }
  }

 private:
  Variant variant_;
  TensorShape shape_;
  std::vector<std::shared_ptr<const DirectionalFactor>> factors_;
  std::vector<double> inv_sum_;
  bool singular_ = false;
};

inline std::vector<double> apply_inverse(const TensorPreconditioner& p, std::span<const double> r) {
  std::vector<double> y(r.size());
  p.apply(r, y);
  return y;
}

/// Per-direction factor of the chosen variant for S_{p,h,D}.
inline std::shared_ptr<const DirectionalFactor> make_factor(Variant v, const SplineSpace& space, DirichletSet d) {
  const BandedMatrix m = univariate_mass(space, d);
  const BandedMatrix k = univariate_stiffness(space, d);
  if (v == Variant::fd) return std::make_shared<DenseFactor>(fd_factor(m.to_dense(), k.to_dense()));
  if (v == Variant::iffd) return std::make_shared<SpectralFactor>(std::make_shared<UnivariateSpectral>(space, d, m, k));
  return nullptr;
}

/// Preconditioner for the parametric surrogate Â of a tensor space.
inline TensorPreconditioner make_preconditioner(Variant v, const TensorSpace& ts, PreconditionerOptions opt = {}) {
  ts.validate();
  std::vector<std::shared_ptr<const DirectionalFactor>> f;
  if (v != Variant::none)
    for (int k = 0; k < ts.dim(); ++k) {
      // directions with identical data share one factor
      std::shared_ptr<const DirectionalFactor> reuse;
      for (int l = 0; l < k; ++l)
        if (ts.spaces[l] == ts.spaces[k] && ts.bc[l] == ts.bc[k]) reuse = f[l];
      f.push_back(reuse ? reuse : make_factor(v, ts.spaces[k], ts.bc[k]));
    }
  return TensorPreconditioner(v, ts.shape(), std::move(f), opt);
}

// ---------------------------------------------------------------------------

/// splitmix64
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [-1, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }

 private:
  std::uint64_t state_;
};

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  SplitMix64 g(seed);
  std::vector<double> v(n);
  for (double& x : v) x = g.uniform();
  return v;
}

struct PcgReport {
  int iterations = 0;
  std::vector<double> residuals;  // relative, index 0 is the initial residual
  double final_relres = 0.0;      // ‖b - A u‖ / ‖b‖ recomputed at exit
  double setup_ms = 0.0;
  double solve_ms = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
};

struct PcgResult {
  std::vector<double> solution;
  PcgReport report;
};

/// Preconditioned CG from the zero initial guess, stopping on the relative
/// residual ‖r_k‖ / ‖b‖ of the unpreconditioned system. A null P means none.
inline PcgResult pcg(const LinearOperator& a, std::span<const double> b, const LinearOperator* p, double tol, int max_iters) {
  if (!(tol > 0.0)) throw InvalidArgument("pcg: tolerance must be positive");
  if (max_iters < 0) throw InvalidArgument("pcg: max_iters must be nonnegative");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = a.size();
  if (b.size() != n) throw InvalidArgument("pcg: right-hand side length mismatch");
  PcgResult res;
  res.solution.assign(n, 0.0);
  std::vector<double> r(b.begin(), b.end()), z(n), d(n), q(n);
  const double bnorm = norm2(b);
  PcgReport& rep = res.report;
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.residuals.push_back(0.0);
    return res;
  }
  auto precondition = [&] {
    if (p) p->apply(r, z);
    else std::copy(r.begin(), r.end(), z.begin());
  };
  precondition();
  d = z;
  double rz = dot(r, z);
  rep.residuals.push_back(1.0);
  for (int it = 0; it < max_iters; ++it) {
    a.apply(d, q);
    const double dq = dot(d, q);
    if (!(dq > 0.0)) break;  // operator not SPD along d
    const double alpha = rz / dq;
    for (std::size_t i = 0; i < n; ++i) {
      res.solution[i] += alpha * d[i];
      r[i] -= alpha * q[i];
    }
    const double rel = norm2(r) / bnorm;
    rep.residuals.push_back(rel);
    rep.iterations = it + 1;
    if (rel <= tol) {
      rep.converged = true;
      break;
    }
    precondition();
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
  }
  std::vector<double> au(n);
  a.apply(res.solution, au);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (b[i] - au[i]) * (b[i] - au[i]);
  rep.final_relres = std::sqrt(s) / bnorm;
  rep.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------

struct ConditionEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 0.0;
  int steps = 0;
  bool breakdown = false;  // invariant subspace found before convergence
};

namespace detail {

// Number of eigenvalues of the symmetric tridiagonal (a, b) below x (Sturm count).
inline int sturm_count(const std::vector<double>& a, const std::vector<double>& b, double x) {
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double off = i > 0 ? b[i - 1] * b[i - 1] : 0.0;
    q = a[i] - x - (i > 0 ? off / q : 0.0);
    if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(a[i]) + std::abs(x) + 1.0);
    if (q < 0.0) ++count;
  }
  return count;
}

/// k-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix.
inline double tridiagonal_eigenvalue(const std::vector<double>& a, const std::vector<double>& b, int k) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = (i > 0 ? std::abs(b[i - 1]) : 0.0) + (i + 1 < a.size() ? std::abs(b[i]) : 0.0);
    lo = std::min(lo, a[i] - r);
    hi = std::max(hi, a[i] + r);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(a, b, mid) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Extreme eigenvalues of P^{-1} A by preconditioned Lanczos with full
/// reorthogonalization (Lanczos vectors orthonormal in the P^{-1} inner product).
inline ConditionEstimate estimate_condition(const LinearOperator& a, const LinearOperator* p, int max_steps = 300,
                                            std::uint64_t seed = 12345) {
  const std::size_t n = a.size();
  if (n > 200000) throw UnsupportedError("estimate_condition: problem too large");
  max_steps = static_cast<int>(std::min<std::size_t>(max_steps, n));
  std::vector<std::vector<double>> vs, ys;  // v_j and y_j = P^{-1} v_j
  std::vector<double> alpha, beta;
  std::vector<double> r = random_vector(n, seed), z(n), w(n);
  auto prec = [&](std::span<const double> in, std::span<double> out) {
    if (p) p->apply(in, out);
    else std::copy(in.begin(), in.end(), out.begin());
  };
  prec(r, z);
  const double rz0 = dot(r, z);
  double b = std::sqrt(rz0);
  ConditionEstimate est;
  double prev_min = 0.0, prev_max = 0.0;
  for (int j = 0; j < max_steps; ++j) {
    std::vector<double> v(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = r[i] / b;
      y[i] = z[i] / b;
    }
    a.apply(y, w);
    const double al = dot(y, w);
    alpha.push_back(al);
    for (std::size_t i = 0; i < n; ++i) r[i] = w[i] - al * v[i] - (j > 0 ? beta.back() * vs.back()[i] : 0.0);
    vs.push_back(std::move(v));
    ys.push_back(std::move(y));
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < vs.size(); ++k) {
        const double c = dot(r, ys[k]);
        for (std::size_t i = 0; i < n; ++i) r[i] -= c * vs[k][i];
      }
    prec(r, z);
    const double rz = dot(r, z);
    est.steps = j + 1;
    const int m = static_cast<int>(alpha.size());
    const double lmin = detail::tridiagonal_eigenvalue(alpha, beta, 0);
    const double lmax = detail::tridiagonal_eigenvalue(alpha, beta, m - 1);
    est.lambda_min = lmin;
    est.lambda_max = lmax;
    if (!(rz > 1e-24 * rz0)) {
      est.breakdown = true;
      break;
    }
    if (j >= 10 && std::abs(lmin - prev_min) <= 1e-10 * std::abs(lmin) &&
        std::abs(lmax - prev_max) <= 1e-10 * std::abs(lmax))
      break;
    prev_min = lmin;
    prev_max = lmax;
    b = std::sqrt(rz);
    beta.push_back(b);
  }
  est.kappa = est.lambda_max / est.lambda_min;
  return est;
}

}  // namespace iffd
