#pragma once

// The eight unnormalized discrete sine/cosine transforms appearing as U_reg.
// Entries are exactly sin or cos of π (i+a)(j+b) / R with 0-based i, j.
// The fast path uses FFTW's real-to-real kinds, which compute the same sums up
// to a factor 2 and a doubled weight on one or both endpoint inputs.

#include <fftw3.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "iffd/dense.hpp"
#include "iffd/errors.hpp"
#include "iffd/spline.hpp"

namespace iffd {

enum class TransformKind { dst1, dst2, dst3, dst4, dct1, dct2, dct3, dct4 };

inline constexpr std::array<TransformKind, 8> kAllTransformKinds = {
    TransformKind::dst1, TransformKind::dst2, TransformKind::dst3, TransformKind::dst4,
    TransformKind::dct1, TransformKind::dct2, TransformKind::dct3, TransformKind::dct4};

inline std::string to_string(TransformKind k) {
  switch (k) {
    case TransformKind::dst1: return "DST-I";
    case TransformKind::dst2: return "DST-II";
    case TransformKind::dst3: return "DST-III";
    case TransformKind::dst4: return "DST-IV";
    case TransformKind::dct1: return "DCT-I";
    case TransformKind::dct2: return "DCT-II";
    case TransformKind::dct3: return "DCT-III";
    case TransformKind::dct4: return "DCT-IV";
  }
  return "?";
}

/// Kind whose matrix is the transpose: I and IV are symmetric, II and III swap.
constexpr TransformKind adjoint(TransformKind k) noexcept {
  switch (k) {
    case TransformKind::dst2: return TransformKind::dst3;
    case TransformKind::dst3: return TransformKind::dst2;
    case TransformKind::dct2: return TransformKind::dct3;
    case TransformKind::dct3: return TransformKind::dct2;
    default: return k;
  }
}

constexpr bool is_sine(TransformKind k) noexcept {
  return k == TransformKind::dst1 || k == TransformKind::dst2 || k == TransformKind::dst3 || k == TransformKind::dst4;
}

/// U_reg kind for a given degree parity and boundary set.
constexpr TransformKind select_transform(int p, DirichletSet d) noexcept {
  const bool odd = p % 2 == 1;
  if (d.left && d.right) return odd ? TransformKind::dst1 : TransformKind::dst3;
  if (d.left) return odd ? TransformKind::dst2 : TransformKind::dst4;
  if (d.right) return odd ? TransformKind::dct2 : TransformKind::dct4;
  return odd ? TransformKind::dct1 : TransformKind::dct3;
}

namespace detail {

// Entry angle π·(2i+ra)(2j+rb) / (4R): offsets ra, rb in half-units and R.
struct KindGeometry {
  int ra, rb;
  long long period;  // R
};

inline KindGeometry kind_geometry(TransformKind k, int n) {
  switch (k) {
    case TransformKind::dst1: return {2, 2, n + 1LL};
    case TransformKind::dst2: return {2, 1, n};
    case TransformKind::dst3: return {1, 2, n};
    case TransformKind::dst4: return {1, 1, n};
    case TransformKind::dct1: return {0, 0, n - 1LL};
    case TransformKind::dct2: return {0, 1, n};
    case TransformKind::dct3: return {1, 0, n};
    case TransformKind::dct4: return {1, 1, n};
  }
  return {0, 0, 1};
}

inline fftw_r2r_kind fftw_kind(TransformKind k) {
  switch (k) {
    case TransformKind::dst1: return FFTW_RODFT00;
    case TransformKind::dst2: return FFTW_RODFT10;
    case TransformKind::dst3: return FFTW_RODFT01;
    case TransformKind::dst4: return FFTW_RODFT11;
    case TransformKind::dct1: return FFTW_REDFT00;
    case TransformKind::dct2: return FFTW_REDFT10;
    case TransformKind::dct3: return FFTW_REDFT01;
    case TransformKind::dct4: return FFTW_REDFT11;
  }
  return FFTW_R2HC;
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

inline constexpr int kReferenceMatrixCap = 4096;

/// Dense U for the kind at size n, from integer-reduced angles so that the
/// entries stay accurate for large n.
inline DenseMatrix reference_matrix(TransformKind k, int n) {
  if (n < 1) throw InvalidArgument("reference_matrix: size must be positive");
  if (n > kReferenceMatrixCap) throw InvalidArgument("reference_matrix: size exceeds " + std::to_string(kReferenceMatrixCap));
  DenseMatrix u(n, n);
  if (k == TransformKind::dct1 && n == 1) {
    u(0, 0) = 1.0;
    return u;
  }
  const auto g = detail::kind_geometry(k, n);
  const long long full = 8 * g.period;  // 2π
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const long long q = ((2LL * i + g.ra) * (2LL * j + g.rb)) % full;
      const double angle = std::numbers::pi * static_cast<double>(q) / (4.0 * g.period);
      u(i, j) = is_sine(k) ? std::sin(angle) : std::cos(angle);
    }
  return u;
}

/// Reusable plan for y = U x and y = U^T x at a fixed size. Reentrant: apply may
/// be called concurrently on distinct buffers.
class TransformPlan {
 public:
  TransformPlan(TransformKind kind, int n) : kind_(kind), n_(n) {
    if (n < 1) throw InvalidArgument("TransformPlan: size must be positive");
    if (kind == TransformKind::dct1 && n == 1) return;
    forward_ = make(kind);
    backward_ = make(adjoint(kind));
  }

  TransformKind kind() const noexcept { return kind_; }
  int size() const noexcept { return n_; }

  /// y = U x; in-place (x and y the same buffer) allowed.
  void apply(std::span<const double> x, std::span<double> y) const { run(kind_, forward_.get(), x, y); }
  /// y = U^T x
  void apply_adjoint(std::span<const double> x, std::span<double> y) const { run(adjoint(kind_), backward_.get(), x, y); }

 private:
  struct PlanDeleter {
    void operator()(fftw_plan_s* p) const noexcept {
      if (p) fftw_destroy_plan(p);
    }
  };
  using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

  PlanPtr make(TransformKind k) const {
    std::vector<double> buf(n_);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_plan p = fftw_plan_r2r_1d(n_, buf.data(), buf.data(), detail::fftw_kind(k), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw Error("FFTW failed to create a plan");
    return PlanPtr(p);
  }

  void run(TransformKind k, fftw_plan_s* plan, std::span<const double> x, std::span<double> y) const {
    if (static_cast<int>(x.size()) != n_ || static_cast<int>(y.size()) != n_)
      throw InvalidArgument("transform: length mismatch");
    if (!plan) {  // DCT-I of size 1
      y[0] = x[0];
      return;
    }
    if (x.data() != y.data()) std::copy(x.begin(), x.end(), y.begin());
    // endpoint weights that FFTW counts once but the plain sum counts twice (after the /2)
    switch (k) {
      case TransformKind::dct1: y[0] *= 2.0; y[n_ - 1] *= 2.0; break;
      case TransformKind::dct3: y[0] *= 2.0; break;
      case TransformKind::dst3: y[n_ - 1] *= 2.0; break;
      default: break;
    }
    fftw_execute_r2r(plan, y.data(), y.data());
    for (double& v : y) v *= 0.5;
  }

  TransformKind kind_;
  int n_;
  PlanPtr forward_, backward_;
};

}  // namespace iffd
