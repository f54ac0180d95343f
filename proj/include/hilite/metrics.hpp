#pragma once

#include <cstdint>

#include "hilite/image.hpp"

namespace hilite {

enum class RmseScale { Unit, Byte };

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

/// Loss weights: total = mse + l1*ssim + l2*dm + l3*structure + l4*mask,
/// with beta1 weighting TV inside the mask loss.
struct LossWeights {
  double lambda1 = 0.4;
  double lambda2 = 1.0;
  double lambda3 = 0.1;
  double lambda4 = 0.5;
  double beta1 = 0.00005;
};

double mse(const ImageBuffer& a, const ImageBuffer& b);
/// Joint over all samples; RmseScale::Byte multiplies by 255.
double rmse(const ImageBuffer& a, const ImageBuffer& b,
            RmseScale scale = RmseScale::Unit);
/// Peak 1.0. Identical inputs give +infinity.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Mean SSIM over valid 11×11 Gaussian windows (sigma 1.5, K1 0.01,
/// K2 0.03, L = 1).
double ssim(const GrayImage& a, const GrayImage& b);
/// Color inputs are converted with to_grayscale first.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

ConfusionCounts mask_confusion(const BinaryMask& pred, const BinaryMask& gt);
double accuracy(const ConfusionCounts& c);
/// Balanced error rate in percent. Throws UndefinedClass if either class is
/// absent from the ground truth.
double ber(const ConfusionCounts& c);

/// Anisotropic TV: mean |dx| over horizontal pairs plus mean |dy| over
/// vertical pairs. Requires at least 2×2.
double tv(const SoftMask& mask);

/// mean |pred - target| + beta1 * tv(pred).
double mask_loss(const SoftMask& pred, const SoftMask& target, double beta1);

double total_loss(double mse_term, double ssim_term, double dm_term,
                  double structure_term, double mask_term,
                  const LossWeights& w = {});

}  // namespace hilite
