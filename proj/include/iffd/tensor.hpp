#pragma once

// Lexicographic tensor layout (direction 0 varies fastest) and mode-wise
// application of univariate operators.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "iffd/banded.hpp"

namespace iffd {

class TensorShape {
 public:
  TensorShape() = default;
  explicit TensorShape(std::vector<int> dims) : dims_(std::move(dims)) {}

  int order() const noexcept { return static_cast<int>(dims_.size()); }
  int extent(int k) const noexcept { return dims_[k]; }
  const std::vector<int>& extents() const noexcept { return dims_; }
  std::size_t size() const noexcept {
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>{});
  }
  /// Product of the extents of directions before k.
  std::size_t inner(int k) const noexcept {
    std::size_t s = 1;
    for (int l = 0; l < k; ++l) s *= dims_[l];
    return s;
  }
  std::size_t outer(int k) const noexcept {
    std::size_t s = 1;
    for (int l = k + 1; l < order(); ++l) s *= dims_[l];
    return s;
  }

  std::size_t flat(std::span<const int> idx) const noexcept {
    std::size_t f = 0;
    for (int k = order() - 1; k >= 0; --k) f = f * dims_[k] + idx[k];
    return f;
  }

  friend bool operator==(const TensorShape&, const TensorShape&) = default;

 private:
  std::vector<int> dims_;
};

/// y = (I ⊗ .. ⊗ A ⊗ .. ⊗ I) x with A acting on direction `mode`. Works on
/// contiguous slabs of the inner directions, so every direction streams memory.
inline void banded_mode_product(const TensorShape& shape, int mode, const BandedMatrix& a,
                                std::span<const double> x, std::span<double> y) {
  const std::size_t s = shape.inner(mode);
  const int len = shape.extent(mode);
  const std::size_t outer = shape.outer(mode);
  const int bw = a.bandwidth();
  assert(a.dim() == len);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* xo = x.data() + o * len * s;
    double* yo = y.data() + o * len * s;
    for (int i = 0; i < len; ++i) {
      double* yi = yo + i * s;
      std::fill(yi, yi + s, 0.0);
      for (int j = std::max(0, i - bw); j <= std::min(len - 1, i + bw); ++j) {
        const double aij = a(i, j);
        if (aij == 0.0) continue;
        const double* xj = xo + j * s;
        for (std::size_t t = 0; t < s; ++t) yi[t] += aij * xj[t];
      }
    }
  }
}

/// Applies `op(in_fiber, out_fiber)` to every fiber along `mode`. Fibers are
/// gathered into contiguous buffers in blocks; `in` and `out` may alias.
template <class FiberOp>
void for_each_fiber(const TensorShape& shape, int mode, std::span<const double> in, std::span<double> out, FiberOp&& op) {
  const std::size_t s = shape.inner(mode);
  const int len = shape.extent(mode);
  const std::size_t outer = shape.outer(mode);
  if (s == 1) {
    std::vector<double> tmp(len);
    for (std::size_t o = 0; o < outer; ++o) {
      std::span<const double> fin(in.data() + o * len, len);
      op(fin, std::span<double>(tmp));
      std::copy(tmp.begin(), tmp.end(), out.begin() + o * len);
    }
    return;
  }
  constexpr std::size_t kBlock = 32;
  std::vector<double> bin(kBlock * len), bout(kBlock * len);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* xo = in.data() + o * len * s;
    double* yo = out.data() + o * len * s;
    for (std::size_t c = 0; c < s; c += kBlock) {
      const std::size_t nb = std::min(kBlock, s - c);
      for (int i = 0; i < len; ++i) {
        const double* src = xo + i * s + c;
        for (std::size_t b = 0; b < nb; ++b) bin[b * len + i] = src[b];
      }
      for (std::size_t b = 0; b < nb; ++b)
        op(std::span<const double>(bin.data() + b * len, len), std::span<double>(bout.data() + b * len, len));
      for (int i = 0; i < len; ++i) {
        double* dst = yo + i * s + c;
        for (std::size_t b = 0; b < nb; ++b) dst[b] = bout[b * len + i];
      }
    }
  }
}

}  // namespace iffd
