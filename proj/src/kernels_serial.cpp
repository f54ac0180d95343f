// Reference kernels: direct, unoptimized formulations of the same
// operations. Not used by the library paths.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "hilite/error.hpp"
#include "hilite/kernels.hpp"

namespace hilite::kernels::serial {

ImageBuffer reduce(const ImageBuffer& src) {
  const int w = src.width(), h = src.height(), c = src.channels();
  // Full-resolution 5×5 blur, then decimate.
  ImageBuffer blurred(w, h, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int j = 0; j < 5; ++j)
          for (int i = 0; i < 5; ++i)
            acc += static_cast<double>(kBinomial5[j]) * kBinomial5[i] *
                   src.at(reflect101(x + i - 2, w), reflect101(y + j - 2, h), ch);
        blurred.at(x, y, ch) = static_cast<float>(acc);
      }
  ImageBuffer out((w + 1) / 2, (h + 1) / 2, c);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = blurred.at(2 * x, 2 * y, ch);
  return out;
}

ImageBuffer expand(const ImageBuffer& src, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    throw Error(ErrorCode::InvalidArgument, "upsample target must be non-zero");
  }
  const int w = src.width(), h = src.height(), c = src.channels();
  // Explicit zero-inserted grid at the target size.
  ImageBuffer zeros(target_w, target_h, c, 0.0f);
  for (int y = 0; y < target_h; y += 2)
    for (int x = 0; x < target_w; x += 2)
      for (int ch = 0; ch < c; ++ch)
        zeros.at(x, y, ch) = src.at(std::min(x / 2, w - 1), std::min(y / 2, h - 1), ch);

  const double gain = (target_w == 1 ? 1.0 : 2.0) * (target_h == 1 ? 1.0 : 2.0);
  ImageBuffer out(target_w, target_h, c);
  for (int y = 0; y < target_h; ++y)
    for (int x = 0; x < target_w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int j = 0; j < 5; ++j)
          for (int i = 0; i < 5; ++i)
            acc += static_cast<double>(kBinomial5[j]) * kBinomial5[i] *
                   zeros.at(reflect101(x + i - 2, target_w),
                            reflect101(y + j - 2, target_h), ch);
        out.at(x, y, ch) = static_cast<float>(gain * acc);
      }
  return out;
}

SsimAccum ssim_accumulate(const GrayImage& a, const GrayImage& b) {
  const int n = kSsimWindow;
  const int ow = a.width - n + 1, oh = a.height - n + 1;
  if (ow < 1 || oh < 1) return {};
  const auto g = ssim_gaussian_taps();
  const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;

  SsimAccum acc;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double mx = 0, my = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          mx += g[i] * g[j] * a.at(x + i, y + j);
          my += g[i] * g[j] * b.at(x + i, y + j);
        }
      double vx = 0, vy = 0, cxy = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double da = a.at(x + i, y + j) - mx, db = b.at(x + i, y + j) - my;
          vx += g[i] * g[j] * da * da;
          vy += g[i] * g[j] * db * db;
          cxy += g[i] * g[j] * da * db;
        }
      acc.sum += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++acc.windows;
    }
  return acc;
}

std::vector<std::uint64_t> histogram(std::span<const float> values, int bins) {
  std::vector<std::uint64_t> hist(bins, 0);
  for (float v : values) ++hist[bin_of(v, bins)];
  return hist;
}

ShiftEstimate best_shift(const GrayImage& ref, const GrayImage& moved,
                         int max_shift) {
  const int w = ref.width, h = ref.height;
  const int m = std::max(0, std::min({max_shift, (w - 2) / 2, (h - 2) / 2}));
  ShiftEstimate best{0, 0, -2.0};
  int best_dist = 0;
  for (int dy = -m; dy <= m; ++dy)
    for (int dx = -m; dx <= m; ++dx) {
      double ma = 0, mb = 0, n = 0;
      for (int y = m; y < h - m; ++y)
        for (int x = m; x < w - m; ++x) {
          ma += ref.at(x, y);
          mb += moved.at(x + dx, y + dy);
          n += 1;
        }
      ma /= n;
      mb /= n;
      double cov = 0, va = 0, vb = 0;
      for (int y = m; y < h - m; ++y)
        for (int x = m; x < w - m; ++x) {
          const double da = ref.at(x, y) - ma, db = moved.at(x + dx, y + dy) - mb;
          cov += da * db;
          va += da * da;
          vb += db * db;
        }
      const double s = (va > 0 && vb > 0) ? cov / std::sqrt(va * vb) : 0.0;
      const int dist = std::abs(dx) + std::abs(dy);
      if (s > best.score || (s == best.score && dist < best_dist)) {
        best = {dx, dy, s};
        best_dist = dist;
      }
    }
  return best;
}

}  // namespace hilite::kernels::serial
