#include "hilite/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hilite/error.hpp"
#include "hilite/kernels.hpp"

namespace hilite {

namespace {

template <typename Plane>
void require_same_dims(const Plane& a, const Plane& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width) + "x" +
                    std::to_string(a.height) + " vs " +
                    std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

// Fixed-size blocks summed in order, so the result does not depend on the
// thread count.
double sum_squared_diff(std::span<const float> a, std::span<const float> b) {
  constexpr std::size_t kBlock = 4096;
  const std::ptrdiff_t blocks =
      static_cast<std::ptrdiff_t>((a.size() + kBlock - 1) / kBlock);
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t end = std::min(a.size(), begin + kBlock);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = static_cast<double>(a[i]) - b[i];
      sum += d * d;
    }
    partial[static_cast<std::size_t>(blk)] = sum;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "mse: empty images");
  return sum_squared_diff(a.data(), b.data()) / static_cast<double>(a.size());
}

double rmse(const ImageBuffer& a, const ImageBuffer& b, RmseScale scale) {
  const double r = std::sqrt(mse(a, b));
  return scale == RmseScale::Byte ? r * 255.0 : r;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const GrayImage& a, const GrayImage& b) {
  require_same_dims(a, b, "ssim");
  if (a.width < kernels::kSsimWindow || a.height < kernels::kSsimWindow) {
    throw Error(ErrorCode::ImageTooSmall,
                "ssim needs at least 11x11, got " + std::to_string(a.width) +
                    "x" + std::to_string(a.height));
  }
  const auto acc = kernels::ssim_accumulate(a, b);
  return acc.sum / static_cast<double>(acc.windows);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "ssim");
  return ssim(to_grayscale(a), to_grayscale(b));
}

ConfusionCounts mask_confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_dims(pred, gt, "mask_confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::EmptyInput, "accuracy: no pixels");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double ber(const ConfusionCounts& c) {
  const std::uint64_t positives = c.tp + c.fn, negatives = c.tn + c.fp;
  if (positives == 0) {
    throw Error(ErrorCode::UndefinedClass,
                "ber: ground truth has no positive (highlight) pixels");
  }
  if (negatives == 0) {
    throw Error(ErrorCode::UndefinedClass,
                "ber: ground truth has no negative (background) pixels");
  }
  const double fnr = static_cast<double>(c.fn) / static_cast<double>(positives);
  const double fpr = static_cast<double>(c.fp) / static_cast<double>(negatives);
  return 100.0 * 0.5 * (fnr + fpr);
}

double tv(const SoftMask& mask) {
  const int w = mask.width, h = mask.height;
  if (w < 2 || h < 2) {
    throw Error(ErrorCode::ImageTooSmall,
                "tv needs at least 2x2, got " + std::to_string(w) + "x" +
                    std::to_string(h));
  }
  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = mask.at(x, y);
      if (x + 1 < w) sx += std::abs(mask.at(x + 1, y) - v);
      if (y + 1 < h) sy += std::abs(mask.at(x, y + 1) - v);
    }
  return sx / (static_cast<double>(w - 1) * h) +
         sy / (static_cast<double>(h - 1) * w);
}

double mask_loss(const SoftMask& pred, const SoftMask& target, double beta1) {
  require_same_dims(pred, target, "mask_loss");
  double l1 = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    l1 += std::abs(static_cast<double>(pred.data[i]) - target.data[i]);
  l1 /= static_cast<double>(pred.data.size());
  return l1 + beta1 * tv(pred);
}

double total_loss(double mse_term, double ssim_term, double dm_term,
                  double structure_term, double mask_term,
                  const LossWeights& w) {
  for (double v : {mse_term, ssim_term, dm_term, structure_term, mask_term,
                   w.lambda1, w.lambda2, w.lambda3, w.lambda4}) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFinite, "total_loss: non-finite input");
    }
  }
  if (w.lambda1 < 0 || w.lambda2 < 0 || w.lambda3 < 0 || w.lambda4 < 0) {
    throw Error(ErrorCode::InvalidArgument, "total_loss: negative weight");
  }
  return mse_term + w.lambda1 * ssim_term + w.lambda2 * dm_term +
         w.lambda3 * structure_term + w.lambda4 * mask_term;
}

}  // namespace hilite
