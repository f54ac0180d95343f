#pragma once

#include <cstdint>

#include "hilite/image.hpp"

namespace hilite {

struct PriorConfig {
  double alpha_percentile = 80.0;  ///< in [0, 100)
  bool apply_stretch = true;
  int bins = 256;
};

struct OtsuResult {
  /// Largest value left in the background class; foreground is `v > threshold`.
  float threshold = 0.0f;
  BinaryMask mask;
  /// Index of the last background bin, or -1 when no split separates two
  /// non-empty classes.
  int split_bin = -1;
};

struct PriorResult {
  SoftMask soft;
  BinaryMask binary;
  float threshold = 0.0f;
};

/// m = max(highlight - gt, 0).
SoftMask residual_map(const GrayImage& highlight, const GrayImage& gt);

/// Nearest-rank percentile: the ceil(alpha/100 * n)-th smallest value
/// (1-based, rank at least 1).
float percentile_nearest_rank(const SoftMask& mask, double alpha_percentile);

/// Clip below the alpha-th percentile p and rescale by (max - p).
SoftMask contrast_stretch(const SoftMask& mask, double alpha_percentile);

/// Otsu over `bins` equal-width buckets on [0,1]. Ties go to the smaller
/// split. A mask with no valid split yields an all-zero result.
OtsuResult otsu_threshold(const SoftMask& mask, int bins = 256);

/// grayscale -> residual -> optional stretch -> Otsu.
PriorResult generate_prior(const ImageBuffer& highlight, const ImageBuffer& gt,
                           const PriorConfig& cfg = {});

/// The same pipeline on the pyramid base pair (I_D, I_gtD).
PriorResult generate_prior_at_base(const ImageBuffer& highlight,
                                   const ImageBuffer& gt, int depth,
                                   const PriorConfig& cfg = {});

/// Otsu directly on the grayscale highlight image (baseline variant).
PriorResult input_otsu_baseline(const ImageBuffer& highlight, int bins = 256);

}  // namespace hilite
