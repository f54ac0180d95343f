#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "hilite/error.hpp"
#include "hilite/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hilite::kernels {

namespace {

// Source sample feeding position j of the zero-inserted grid, or -1
// for an inserted zero. Positions past 2*(n-1) replicate the last sample.
inline int inserted_source(int j, int n) noexcept {
  if (j & 1) return -1;
  return std::min(j / 2, n - 1);
}

inline float expand_gain(int target) noexcept { return target == 1 ? 1.0f : 2.0f; }

}  // namespace

std::vector<double> ssim_gaussian_taps() {
  std::vector<double> taps(kSsimWindow);
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - r;
    taps[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

ImageBuffer reduce(const ImageBuffer& src) {
  const int w = src.width(), h = src.height(), c = src.channels();
  const int ow = (w + 1) / 2, oh = (h + 1) / 2;
  const auto in = src.data();

  // Horizontal pass, even columns only: h × ow.
  std::vector<float> tmp(static_cast<std::size_t>(h) * ow * c);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const float* row = in.data() + static_cast<std::size_t>(y) * w * c;
    float* dst = tmp.data() + static_cast<std::size_t>(y) * ow * c;
    for (int x = 0; x < ow; ++x) {
      int idx[5];
      for (int k = 0; k < 5; ++k) idx[k] = reflect101(2 * x + k - 2, w);
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0.0f;
        for (int k = 0; k < 5; ++k) acc += kBinomial5[k] * row[idx[k] * c + ch];
        dst[x * c + ch] = acc;
      }
    }
  }

  ImageBuffer out(ow, oh, c);
  auto o = out.data();
  const std::size_t stride = static_cast<std::size_t>(ow) * c;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    const float* rows[5];
    for (int k = 0; k < 5; ++k)
      rows[k] = tmp.data() + reflect101(2 * y + k - 2, h) * stride;
    float* dst = o.data() + y * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      float acc = 0.0f;
      for (int k = 0; k < 5; ++k) acc += kBinomial5[k] * rows[k][i];
      dst[i] = acc;
    }
  }
  return out;
}

ImageBuffer expand(const ImageBuffer& src, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    throw Error(ErrorCode::InvalidArgument, "upsample target must be non-zero");
  }
  const int w = src.width(), h = src.height(), c = src.channels();
  const auto in = src.data();
  const float gx = expand_gain(target_w), gy = expand_gain(target_h);

  // Horizontal: h × target_w.
  std::vector<float> tmp(static_cast<std::size_t>(h) * target_w * c);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const float* row = in.data() + static_cast<std::size_t>(y) * w * c;
    float* dst = tmp.data() + static_cast<std::size_t>(y) * target_w * c;
    for (int x = 0; x < target_w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0.0f;
        for (int k = 0; k < 5; ++k) {
          const int s = inserted_source(reflect101(x + k - 2, target_w), w);
          if (s >= 0) acc += kBinomial5[k] * row[s * c + ch];
        }
        dst[x * c + ch] = gx * acc;
      }
    }
  }

  ImageBuffer out(target_w, target_h, c);
  auto o = out.data();
  const std::size_t stride = static_cast<std::size_t>(target_w) * c;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < target_h; ++y) {
    const float* rows[5];
    float weights[5];
    int used = 0;
    for (int k = 0; k < 5; ++k) {
      const int s = inserted_source(reflect101(y + k - 2, target_h), h);
      if (s >= 0) {
        rows[used] = tmp.data() + s * stride;
        weights[used] = kBinomial5[k];
        ++used;
      }
    }
    float* dst = o.data() + y * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      float acc = 0.0f;
      for (int k = 0; k < used; ++k) acc += weights[k] * rows[k][i];
      dst[i] = gy * acc;
    }
  }
  return out;
}

SsimAccum ssim_accumulate(const GrayImage& a, const GrayImage& b) {
  const int w = a.width, h = a.height;
  const int n = kSsimWindow;
  const int ow = w - n + 1, oh = h - n + 1;
  if (ow < 1 || oh < 1) return {};
  const auto g = ssim_gaussian_taps();

  // Five horizontally filtered moment planes: a, b, a², b², ab.
  const std::size_t plane = static_cast<std::size_t>(h) * ow;
  std::vector<double> hx(5 * plane);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s[5] = {0, 0, 0, 0, 0};
      for (int k = 0; k < n; ++k) {
        const double va = a.at(x + k, y), vb = b.at(x + k, y);
        s[0] += g[k] * va;
        s[1] += g[k] * vb;
        s[2] += g[k] * va * va;
        s[3] += g[k] * vb * vb;
        s[4] += g[k] * va * vb;
      }
      const std::size_t at = static_cast<std::size_t>(y) * ow + x;
      for (int m = 0; m < 5; ++m) hx[m * plane + at] = s[m];
    }
  }

  const double c1 = (kSsimK1) * (kSsimK1);
  const double c2 = (kSsimK2) * (kSsimK2);
  std::vector<double> row_sums(oh, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    double row_sum = 0.0;
    for (int x = 0; x < ow; ++x) {
      double s[5] = {0, 0, 0, 0, 0};
      for (int k = 0; k < n; ++k) {
        const std::size_t at = static_cast<std::size_t>(y + k) * ow + x;
        for (int m = 0; m < 5; ++m) s[m] += g[k] * hx[m * plane + at];
      }
      const double mx = s[0], my = s[1];
      const double vx = s[2] - mx * mx, vy = s[3] - my * my;
      const double cxy = s[4] - mx * my;
      row_sum += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    row_sums[y] = row_sum;
  }
  SsimAccum acc;
  for (double r : row_sums) acc.sum += r;
  acc.windows = static_cast<std::size_t>(ow) * oh;
  return acc;
}

std::vector<std::uint64_t> histogram(std::span<const float> values, int bins) {
  std::vector<std::uint64_t> hist(bins, 0);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(bins, 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) ++local[bin_of(values[i], bins)];
#pragma omp critical
    for (int b = 0; b < bins; ++b) hist[b] += local[b];
  }
  return hist;
}

ShiftEstimate best_shift(const GrayImage& ref, const GrayImage& moved,
                         int max_shift) {
  const int w = ref.width, h = ref.height;
  const int m = std::max(0, std::min({max_shift, (w - 2) / 2, (h - 2) / 2}));
  const int side = 2 * m + 1;
  std::vector<double> scores(static_cast<std::size_t>(side) * side, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (int cand = 0; cand < side * side; ++cand) {
    const int dy = cand / side - m, dx = cand % side - m;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int y = m; y < h - m; ++y) {
      for (int x = m; x < w - m; ++x) {
        const double va = ref.at(x, y), vb = moved.at(x + dx, y + dy);
        sa += va;
        sb += vb;
        saa += va * va;
        sbb += vb * vb;
        sab += va * vb;
      }
    }
    const double n = static_cast<double>(w - 2 * m) * (h - 2 * m);
    const double cov = sab - sa * sb / n;
    const double va = saa - sa * sa / n, vb = sbb - sb * sb / n;
    scores[cand] = (va > 0 && vb > 0) ? cov / std::sqrt(va * vb) : 0.0;
  }

  ShiftEstimate best{0, 0, scores[static_cast<std::size_t>(m) * side + m]};
  for (int cand = 0; cand < side * side; ++cand) {
    const int dy = cand / side - m, dx = cand % side - m;
    const double s = scores[cand];
    const int dist = std::abs(dx) + std::abs(dy);
    const int best_dist = std::abs(best.dx) + std::abs(best.dy);
    if (s > best.score || (s == best.score && dist < best_dist)) {
      best = {dx, dy, s};
    }
  }
  return best;
}

}  // namespace hilite::kernels
