#include "hilite/prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hilite/error.hpp"
#include "hilite/kernels.hpp"
#include "hilite/pyramid.hpp"

namespace hilite {

namespace {

void require_nonempty(const SoftMask& mask, const char* what) {
  if (mask.data.empty()) {
    throw Error(ErrorCode::EmptyInput, std::string(what) + ": empty mask");
  }
}

void validate_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 100.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "alpha_percentile must lie in [0,100), got " +
                    std::to_string(alpha));
  }
}

void validate(const PriorConfig& cfg) {
  validate_alpha(cfg.alpha_percentile);
  if (cfg.bins < 2) {
    throw Error(ErrorCode::InvalidArgument, "Otsu needs at least 2 bins");
  }
}

// Between-class variance times N^2 as an exact fraction:
//   N^2 * w0 * w1 * (mu0 - mu1)^2 == (N*S0 - n0*S)^2 / (n0*n1)
// with S0, S sums of bin indices. Candidates are compared by
// cross-multiplication so that mathematically equal scores tie exactly.
struct SplitScore {
  unsigned __int128 num;
  std::uint64_t den;
};

SplitScore split_score(std::uint64_t n0, std::uint64_t n1, std::uint64_t sum0,
                       std::uint64_t sum_total) noexcept {
  const __int128 total = static_cast<__int128>(n0) + n1;
  const __int128 d = total * sum0 - static_cast<__int128>(n0) * sum_total;
  const unsigned __int128 mag = static_cast<unsigned __int128>(d < 0 ? -d : d);
  return {mag * mag, n0 * n1};
}

struct U192 {
  unsigned __int128 hi;
  std::uint64_t lo;
  auto operator<=>(const U192&) const = default;
};

U192 mul(unsigned __int128 a, std::uint64_t b) noexcept {
  const std::uint64_t a_lo = static_cast<std::uint64_t>(a);
  const std::uint64_t a_hi = static_cast<std::uint64_t>(a >> 64);
  const unsigned __int128 low = static_cast<unsigned __int128>(a_lo) * b;
  const unsigned __int128 high = static_cast<unsigned __int128>(a_hi) * b + (low >> 64);
  return {high, static_cast<std::uint64_t>(low)};
}

bool greater(const SplitScore& a, const SplitScore& b) noexcept {
  return mul(a.num, b.den) > mul(b.num, a.den);
}

}  // namespace

SoftMask residual_map(const GrayImage& highlight, const GrayImage& gt) {
  if (!highlight.same_dims(gt)) {
    throw Error(ErrorCode::DimensionMismatch,
                "residual_map: " + std::to_string(highlight.width) + "x" +
                    std::to_string(highlight.height) + " vs " +
                    std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
  SoftMask m(highlight.width, highlight.height);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m.data.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    m.data[i] = std::clamp(highlight.data[i] - gt.data[i], 0.0f, 1.0f);
  return m;
}

float percentile_nearest_rank(const SoftMask& mask, double alpha_percentile) {
  require_nonempty(mask, "percentile");
  std::vector<float> values = mask.data;
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(alpha_percentile * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

SoftMask contrast_stretch(const SoftMask& mask, double alpha_percentile) {
  require_nonempty(mask, "contrast_stretch");
  validate_alpha(alpha_percentile);
  const float p = percentile_nearest_rank(mask, alpha_percentile);
  const float top = *std::max_element(mask.data.begin(), mask.data.end());
  SoftMask out(mask.width, mask.height, 0.0f);
  if (!(top > p)) return out;
  const double range = static_cast<double>(top) - p;
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    const double v = (static_cast<double>(mask.data[i]) - p) / range;
    out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

OtsuResult otsu_threshold(const SoftMask& mask, int bins) {
  require_nonempty(mask, "otsu_threshold");
  if (bins < 2) throw Error(ErrorCode::InvalidArgument, "Otsu needs at least 2 bins");

  const auto hist = kernels::histogram(mask.data, bins);
  std::uint64_t total = 0, sum_total = 0;
  for (int b = 0; b < bins; ++b) {
    total += hist[b];
    sum_total += static_cast<std::uint64_t>(b) * hist[b];
  }

  int best = -1;
  SplitScore best_score{0, 1};
  std::uint64_t n0 = 0, sum0 = 0;
  for (int k = 0; k + 1 < bins; ++k) {
    n0 += hist[k];
    sum0 += static_cast<std::uint64_t>(k) * hist[k];
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const SplitScore score = split_score(n0, n1, sum0, sum_total);
    if (best < 0 || greater(score, best_score)) {
      best = k;
      best_score = score;
    }
  }

  OtsuResult result;
  result.split_bin = best;
  result.mask = BinaryMask(mask.width, mask.height, 0);
  float background_max = 0.0f;
  bool any_background = false;
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    const float v = mask.data[i];
    if (best >= 0 && kernels::bin_of(v, bins) > best) {
      result.mask.data[i] = 1;
    } else if (!any_background || v > background_max) {
      background_max = v;
      any_background = true;
    }
  }
  result.threshold = background_max;
  return result;
}

PriorResult generate_prior(const ImageBuffer& highlight, const ImageBuffer& gt,
                           const PriorConfig& cfg) {
  validate(cfg);
  if (highlight.width() != gt.width() || highlight.height() != gt.height()) {
    throw Error(ErrorCode::DimensionMismatch,
                "highlight and ground-truth images differ in size");
  }
  SoftMask soft = residual_map(to_grayscale(highlight), to_grayscale(gt));
  if (cfg.apply_stretch) soft = contrast_stretch(soft, cfg.alpha_percentile);
  OtsuResult otsu = otsu_threshold(soft, cfg.bins);
  return PriorResult{std::move(soft), std::move(otsu.mask), otsu.threshold};
}

PriorResult generate_prior_at_base(const ImageBuffer& highlight,
                                   const ImageBuffer& gt, int depth,
                                   const PriorConfig& cfg) {
  if (highlight.width() != gt.width() || highlight.height() != gt.height()) {
    throw Error(ErrorCode::DimensionMismatch,
                "highlight and ground-truth images differ in size");
  }
  return generate_prior(decompose(highlight, depth).base,
                        decompose(gt, depth).base, cfg);
}

PriorResult input_otsu_baseline(const ImageBuffer& highlight, int bins) {
  const GrayImage gray = to_grayscale(highlight);
  SoftMask soft(gray.width, gray.height);
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    soft.data[i] = std::clamp(gray.data[i], 0.0f, 1.0f);
  OtsuResult otsu = otsu_threshold(soft, bins);
  return PriorResult{std::move(soft), std::move(otsu.mask), otsu.threshold};
}

}  // namespace hilite
