#pragma once

// Data-parallel image kernels. The default namespace holds the OpenMP
// versions used by the library; `serial` holds straightforward reference
// implementations kept for equivalence tests and the benchmark.

#include <cstdint>
#include <span>
#include <vector>

#include "hilite/image.hpp"

namespace hilite::kernels {

/// Burt–Adelson binomial taps [1,4,6,4,1]/16.
inline constexpr float kBinomial5[5] = {1.0f / 16, 4.0f / 16, 6.0f / 16,
                                        4.0f / 16, 1.0f / 16};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Reflect-101 index into [0, n). n == 1 maps everything to 0.
inline int reflect101(int i, int n) noexcept {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

struct ShiftEstimate {
  int dx = 0;
  int dy = 0;
  double score = 0.0;
};

/// Blur with the 5-tap kernel (reflect-101) and keep even rows/columns.
/// Output is ceil(W/2) × ceil(H/2).
ImageBuffer reduce(const ImageBuffer& src);

/// Zero-insertion upsample to target_w × target_h followed by the 5-tap
/// kernel scaled by 2 per axis, reflect-101 on the target grid.
ImageBuffer expand(const ImageBuffer& src, int target_w, int target_h);

/// Sum of the local SSIM map over all valid 11×11 Gaussian windows, and the
/// number of windows.
struct SsimAccum {
  double sum = 0.0;
  std::size_t windows = 0;
};
SsimAccum ssim_accumulate(const GrayImage& a, const GrayImage& b);

/// Equal-width histogram over [0,1]; values outside are clamped to the end
/// bins.
std::vector<std::uint64_t> histogram(std::span<const float> values, int bins);

/// Integer translation maximizing the zero-mean normalized cross-correlation
/// of `moved(x+dx, y+dy)` against `ref(x, y)` over the central window that
/// stays in bounds for every candidate. Ties prefer the smaller |dx|+|dy|,
/// then scan order.
ShiftEstimate best_shift(const GrayImage& ref, const GrayImage& moved,
                         int max_shift);

/// Normalized 1-D Gaussian taps, length kSsimWindow.
std::vector<double> ssim_gaussian_taps();

namespace serial {

ImageBuffer reduce(const ImageBuffer& src);
ImageBuffer expand(const ImageBuffer& src, int target_w, int target_h);
SsimAccum ssim_accumulate(const GrayImage& a, const GrayImage& b);
std::vector<std::uint64_t> histogram(std::span<const float> values, int bins);
ShiftEstimate best_shift(const GrayImage& ref, const GrayImage& moved,
                         int max_shift);

}  // namespace serial

/// Bin index for a unit-interval value under `bins` equal-width buckets.
inline int bin_of(float v, int bins) noexcept {
  if (!(v > 0.0f)) return 0;
  const int b = static_cast<int>(static_cast<double>(v) * bins);
  return b >= bins ? bins - 1 : b;
}

}  // namespace hilite::kernels
