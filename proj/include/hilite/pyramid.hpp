#pragma once

#include <filesystem>
#include <vector>

#include "hilite/image.hpp"

namespace hilite {

inline constexpr int kDefaultPyramidDepth = 2;

/// Laplacian pyramid: `highs[i]` is the signed band-pass layer at level i
/// (ceil(H/2^i) × ceil(W/2^i)), `base` the low-pass residue at level D.
struct Pyramid {
  std::vector<ImageBuffer> highs;
  ImageBuffer base;

  int depth() const noexcept { return static_cast<int>(highs.size()); }
};

/// One reduce step. Requires width, height >= 2.
ImageBuffer gaussian_down(const ImageBuffer& img);

/// Classical expand to an exact target size. Throws on a zero target.
ImageBuffer upsample_to(const ImageBuffer& img, int target_w, int target_h);

/// Largest depth D with ceil(min(W,H)/2^D) >= 2.
int max_depth(int width, int height) noexcept;

/// Channels are decomposed independently. Throws DepthTooLarge when
/// ceil(min(W,H)/2^D) < 2, InvalidArgument when depth < 1.
Pyramid decompose(const ImageBuffer& img, int depth);

/// Inverse of decompose. The result is unclamped unless `clamp_to_unit`.
ImageBuffer reconstruct(const Pyramid& pyr, bool clamp_to_unit = false);

/// Writes high_<i>.png (16-bit, (h+1)/2), base.png (16-bit) and
/// pyramid.json. Lossy: quantized to 16 bits.
void export_pyramid(const Pyramid& pyr, const std::filesystem::path& dir);

/// Reads a directory written by export_pyramid.
Pyramid import_pyramid(const std::filesystem::path& dir);

}  // namespace hilite
