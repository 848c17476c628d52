#pragma once

// Univariate spline spaces on the uniform grid z_k = k/n, open-knot and
// cardinal B-splines, boundary bookkeeping and the Fourier node sets.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iffd/dense.hpp"
#include "iffd/errors.hpp"

namespace iffd {

inline constexpr int kMaxDegree = 16;

/// Which ends of [0,1] carry a homogeneous Dirichlet condition.
struct DirichletSet {
  bool left = false;   // x = 0
  bool right = false;  // x = 1

  constexpr int count() const noexcept { return int(left) + int(right); }
  constexpr bool contains(int end) const noexcept { return end == 0 ? left : right; }
  friend constexpr bool operator==(DirichletSet, DirichletSet) = default;

  static constexpr DirichletSet both() noexcept { return {true, true}; }
  static constexpr DirichletSet none() noexcept { return {false, false}; }

  /// Two-letter token: first letter for x=0, second for x=1; 'd' or 'n'.
  static DirichletSet from_token(std::string_view tok) {
    auto end = [&](char c) {
      if (c == 'd' || c == 'D') return true;
      if (c == 'n' || c == 'N') return false;
      throw InvalidArgument("boundary token must be two of 'd'/'n', got '" + std::string(tok) + "'");
    };
    if (tok.size() != 2) throw InvalidArgument("boundary token must have two letters, got '" + std::string(tok) + "'");
    return {end(tok[0]), end(tok[1])};
  }

  std::string token() const { return {left ? 'd' : 'n', right ? 'd' : 'n'}; }
};

/// All four boundary configurations, in a fixed order.
inline constexpr DirichletSet kAllDirichletSets[] = {{true, true}, {true, false}, {false, true}, {false, false}};

struct KnotMultiplicity {
  int breakpoint;    // k in 1..n-1
  int multiplicity;  // 1..p; 1 is the smooth default
  friend bool operator==(const KnotMultiplicity&, const KnotMultiplicity&) = default;
};

/// S_{p,h}: splines of degree p on n uniform elements, C^{p-1} except at the
/// listed interior breakpoints (C^{p-mult} there). Immutable.
class SplineSpace {
 public:
  SplineSpace(int degree, int elements, std::vector<KnotMultiplicity> mults = {})
      : p_(degree), n_(elements), mults_(std::move(mults)) {
    if (p_ < 1 || p_ > kMaxDegree)
      throw InvalidArgument("spline degree must be in 1.." + std::to_string(kMaxDegree) + ", got " + std::to_string(p_));
    if (n_ < 1) throw InvalidArgument("number of elements must be >= 1");
    std::sort(mults_.begin(), mults_.end(), [](auto& a, auto& b) { return a.breakpoint < b.breakpoint; });
    for (std::size_t i = 0; i < mults_.size(); ++i) {
      const auto& km = mults_[i];
      if (km.breakpoint < 1 || km.breakpoint > n_ - 1)
        throw InvalidArgument("repeated knot index " + std::to_string(km.breakpoint) + " outside 1..n-1");
      if (km.multiplicity < 1 || km.multiplicity > p_)
        throw InvalidArgument("knot multiplicity must be in 1..p, got " + std::to_string(km.multiplicity));
      if (i > 0 && mults_[i - 1].breakpoint == km.breakpoint)
        throw InvalidArgument("duplicate repeated-knot index " + std::to_string(km.breakpoint));
    }
    std::erase_if(mults_, [](auto& km) { return km.multiplicity == 1; });
    build_knots();
  }

  int degree() const noexcept { return p_; }
  int elements() const noexcept { return n_; }
  double h() const noexcept { return 1.0 / n_; }
  const std::vector<KnotMultiplicity>& interior_multiplicities() const noexcept { return mults_; }

  /// Σ (multiplicity - 1) over the interior knots.
  int extra_multiplicity() const noexcept {
    int e = 0;
    for (auto& km : mults_) e += km.multiplicity - 1;
    return e;
  }
  bool maximally_smooth() const noexcept { return mults_.empty(); }

  /// dim S_{p,h} = n + p + extra multiplicities.
  int full_dim() const noexcept { return n_ + p_ + extra_multiplicity(); }
  /// dim S_{p,h,D}
  int dim(DirichletSet d) const noexcept { return full_dim() - d.count(); }

  const std::vector<double>& knots() const noexcept { return knots_; }

  SplineSpace smooth() const { return SplineSpace(p_, n_); }

  /// Indices (into the full open-knot basis) kept in S_{p,h,D}.
  std::vector<int> kept_indices(DirichletSet d) const {
    std::vector<int> keep;
    for (int i = d.left ? 1 : 0; i < full_dim() - (d.right ? 1 : 0); ++i) keep.push_back(i);
    return keep;
  }

  friend bool operator==(const SplineSpace& a, const SplineSpace& b) {
    return a.p_ == b.p_ && a.n_ == b.n_ && a.mults_ == b.mults_;
  }

 private:
  void build_knots() {
    knots_.clear();
    knots_.insert(knots_.end(), p_ + 1, 0.0);
    std::size_t mi = 0;
    for (int k = 1; k < n_; ++k) {
      int mult = 1;
      if (mi < mults_.size() && mults_[mi].breakpoint == k) mult = mults_[mi++].multiplicity;
      knots_.insert(knots_.end(), mult, static_cast<double>(k) / n_);
    }
    knots_.insert(knots_.end(), p_ + 1, 1.0);
  }

  int p_;
  int n_;
  std::vector<KnotMultiplicity> mults_;
  std::vector<double> knots_;
};

/// Ξ with p+1 repeated boundary knots; length full_dim() + p + 1.
inline std::vector<double> open_knot_vector(const SplineSpace& space) { return space.knots(); }

/// Knot span s with knots[s] <= x < knots[s+1]; x = 1 maps to the last nonempty span.
inline int find_span(std::span<const double> knots, int p, double x) {
  const int m = static_cast<int>(knots.size()) - p - 1;  // number of basis functions
  if (x >= knots[m]) return m - 1;
  if (x <= knots[p]) return p;
  auto it = std::upper_bound(knots.begin() + p, knots.begin() + m + 1, x);
  return static_cast<int>(it - knots.begin()) - 1;
}

/// Values and derivatives (rows 0..nders) of the p+1 basis functions active in
/// `span`, computed with the de Boor triangular scheme.
inline DenseMatrix basis_derivatives(std::span<const double> knots, int p, int span, double x, int nders) {
  DenseMatrix ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots[span + 1 - j];
    right[j] = knots[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double tmp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    ndu(j, j) = saved;
  }

  DenseMatrix ders(nders + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  DenseMatrix a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= std::min(nders, p); ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double fac = p;
  for (int k = 1; k <= std::min(nders, p); ++k) {
    for (int j = 0; j <= p; ++j) ders(k, j) *= fac;
    fac *= (p - k);
  }
  return ders;
}

/// The functions supported at a point: index of the first one and its values.
struct BasisValues {
  int first = 0;
  std::vector<double> values;
};

inline BasisValues eval_basis(std::span<const double> knots, int p, double x, int deriv) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("eval_basis: x = " + std::to_string(x) + " outside [0,1]");
  if (deriv < 0) throw DomainError("eval_basis: negative derivative order");
  const int span = find_span(knots, p, x);
  BasisValues out{span - p, std::vector<double>(p + 1, 0.0)};
  if (deriv > p) return out;
  const DenseMatrix d = basis_derivatives(knots, p, span, x, deriv);
  for (int j = 0; j <= p; ++j) out.values[j] = d(deriv, j);
  return out;
}

/// B^{(deriv)}_{p,h,i}(x) for the functions of `space` supported at x.
inline BasisValues eval_basis(const SplineSpace& space, double x, int deriv) {
  return eval_basis(space.knots(), space.degree(), x, deriv);
}

/// Value of a spline with open-knot coefficients `coef` (full basis) at x.
inline double eval_spline(const SplineSpace& space, std::span<const double> coef, double x, int deriv = 0) {
  const BasisValues b = eval_basis(space, x, deriv);
  double s = 0.0;
  for (std::size_t j = 0; j < b.values.size(); ++j) s += b.values[j] * coef[b.first + j];
  return s;
}

/// Symmetric cardinal B-spline of degree p, supported on [-(p+1)/2, (p+1)/2],
/// evaluated with the two-term recurrence in O(p^2) (all weights are convex
/// combinations inside the support, so the scheme is stable for large p).
inline double cardinal_bspline(int p, double x) {
  if (p < 0) throw InvalidArgument("cardinal_bspline: negative degree");
  if (std::abs(x) >= 0.5 * (p + 1) && !(p == 0 && x == -0.5)) return 0.0;
  // level q holds B̃_q at x + s - (p - q)/2, s = 0..p-q
  // Pick the active cell once. Testing x + s per cell can round past a
  // breakpoint for every s and leave all indicators zero.
  std::vector<double> v(p + 1, 0.0);
  const int cell = std::clamp(static_cast<int>(std::floor(x + 0.5 * (p + 1))), 0, p);
  v[p - cell] = 1.0;
  for (int q = 1; q <= p; ++q) {
    for (int s = 0; s <= p - q; ++s) {
      const double y = x + s - 0.5 * (p - q);
      // B̃_{q-1}(y - 1/2) sits at index s, B̃_{q-1}(y + 1/2) at s + 1
      v[s] = ((q + 1 + 2 * y) * v[s + 1] + (q + 1 - 2 * y) * v[s]) / (2.0 * q);
    }
  }
  return v[0];
}

/// δ_p: 0 for odd p, 1 for even p.
constexpr int degree_shift(int p) noexcept { return p % 2 == 0 ? 1 : 0; }

/// x_i for any integer i: ih (odd p) or (i - 1/2)h (even p).
inline double node_abscissa(int p, int n, int i) {
  return p % 2 == 1 ? static_cast<double>(i) / n : (i - 0.5) / n;
}

/// Interpolation nodes and analytic frequencies of the regular space:
/// x_i, α_j = k_j π, phase β, for i, j = 1..n_reg.
struct NodeSet {
  int degree = 0;
  int elements = 0;
  DirichletSet bc;
  std::vector<double> nodes;
  std::vector<double> frequencies;
  /// α_j / π (integers or half-integers).
  std::vector<double> frequency_multiples;
  double phase = 0.0;
  /// Index i (in the x_i numbering) of the first node.
  int first_index = 1;

  int size() const noexcept { return static_cast<int>(nodes.size()); }
};

namespace detail {

/// n_reg of the smooth space, without the n > p requirement.
constexpr int regular_count(int p, int n, DirichletSet d) noexcept {
  if (p % 2 == 1) {
    if (d.left && d.right) return n - 1;
    if (!d.left && !d.right) return n + 1;
  }
  return n;
}

}  // namespace detail

inline NodeSet nodes_and_frequencies(const SplineSpace& space, DirichletSet d) {
  if (!space.maximally_smooth())
    throw UnsupportedError("nodes_and_frequencies: defined for maximally smooth spaces only");
  const int p = space.degree();
  const int n = space.elements();
  NodeSet ns;
  ns.degree = p;
  ns.elements = n;
  ns.bc = d;
  const int nreg = detail::regular_count(p, n, d);

  // For odd p the nodes are ih starting at i=1 if x=0 is Dirichlet, at i=0
  // otherwise; the Table-1 numbering writes the latter as (i-1)h.
  ns.first_index = (p % 2 == 1 && !d.left) ? 0 : 1;
  double freq_offset = 0.0;  // α_j = (j + offset) π
  if (d.left && d.right) freq_offset = 0.0;
  else if (d.left || d.right) freq_offset = -0.5;
  else freq_offset = -1.0;
  ns.phase = d.left ? 0.0 : std::numbers::pi / 2;

  for (int j = 1; j <= nreg; ++j) {
    ns.nodes.push_back(node_abscissa(p, n, ns.first_index + j - 1));
    ns.frequency_multiples.push_back(j + freq_offset);
    ns.frequencies.push_back((j + freq_offset) * std::numbers::pi);
  }
  return ns;
}

/// Boehm insertion of the knot u once: returns the refined knot vector and
/// overwrites `coef` with the coefficients of the same spline in the refined basis.
inline std::vector<double> insert_knot(std::span<const double> knots, int p, double u, std::vector<double>& coef) {
  const int m = static_cast<int>(coef.size());
  if (static_cast<int>(knots.size()) != m + p + 1) throw InvalidArgument("insert_knot: size mismatch");
  const int k = find_span(knots, p, u);
  std::vector<double> q(m + 1);
  for (int i = 0; i <= m; ++i) {
    if (i <= k - p) q[i] = coef[i];
    else if (i >= k + 1) q[i] = coef[i - 1];
    else {
      const double a = (u - knots[i]) / (knots[i + p] - knots[i]);
      q[i] = a * coef[i] + (1.0 - a) * coef[i - 1];
    }
  }
  coef = std::move(q);
  std::vector<double> refined(knots.begin(), knots.begin() + k + 1);
  refined.push_back(u);
  refined.insert(refined.end(), knots.begin() + k + 1, knots.end());
  return refined;
}

/// Coefficients of a spline of `smooth` in the basis of `refined`, which has the
/// same degree and grid but repeated interior knots.
inline std::vector<double> embed_in_refined(const SplineSpace& smooth, const SplineSpace& refined, std::vector<double> coef) {
  std::vector<double> knots = smooth.knots();
  const int p = smooth.degree();
  for (const auto& km : refined.interior_multiplicities()) {
    const double u = static_cast<double>(km.breakpoint) / refined.elements();
    for (int r = 1; r < km.multiplicity; ++r) knots = insert_knot(knots, p, u, coef);
  }
  return coef;
}

}  // namespace iffd
