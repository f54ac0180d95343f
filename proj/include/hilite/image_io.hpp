#pragma once

#include <filesystem>

#include "hilite/image.hpp"

namespace hilite {

enum class BitDepth { Eight = 8, Sixteen = 16 };

/// Loads an 8/16-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or a binary
/// PGM/PPM. Samples are divided by the format's max value; alpha is dropped.
///
/// Throws Error with MissingFile, UnsupportedFormat or CorruptHeader.
ImageBuffer load_image(const std::filesystem::path& path);

/// Writes PNG, or binary PGM/PPM when the extension is .pgm/.ppm/.pnm.
/// Samples are clamped to [0,1] and quantized round-half-up.
void save_image(const ImageBuffer& img, const std::filesystem::path& path,
                BitDepth depth = BitDepth::Eight);

/// Quantize a unit sample to [0, max_value], round half up.
std::uint32_t quantize(float sample, std::uint32_t max_value) noexcept;

}  // namespace hilite
