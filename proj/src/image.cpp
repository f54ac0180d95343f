#include "hilite/image.hpp"

#include <algorithm>
#include <string>

#include "hilite/error.hpp"

namespace hilite {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "missing_file";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::CorruptHeader: return "corrupt_header";
    case ErrorCode::UnwritablePath: return "unwritable_path";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::ImageTooSmall: return "image_too_small";
    case ErrorCode::DepthTooLarge: return "depth_too_large";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::UndefinedClass: return "undefined_class";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::OutOfRange: return "out_of_range";
    case ErrorCode::IncompatibleLevel: return "incompatible_level";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::ParseError: return "parse_error";
  }
  return "unknown";
}

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 1 || height < 1 || channels < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "image dimensions must be positive, got " +
                    std::to_string(width) + "x" + std::to_string(height) + "x" +
                    std::to_string(channels));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<float> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    throw Error(ErrorCode::DimensionMismatch,
                "sample count " + std::to_string(data_.size()) +
                    " does not match " + std::to_string(width) + "x" +
                    std::to_string(height) + "x" + std::to_string(channels));
  }
}

GrayImage to_grayscale(const ImageBuffer& img) {
  GrayImage out(img.width(), img.height());
  const auto src = img.data();
  if (img.channels() == 1) {
    std::copy(src.begin(), src.end(), out.data.begin());
    return out;
  }
  if (img.channels() != 3) {
    throw Error(ErrorCode::InvalidArgument,
                "to_grayscale expects 1 or 3 channels, got " +
                    std::to_string(img.channels()));
  }
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
    out.data[i] = static_cast<float>(0.299 * r + 0.587 * g + 0.114 * b);
  }
  return out;
}

namespace {

template <typename T, typename Tag>
ImageBuffer plane_to_buffer(const Plane<T, Tag>& p) {
  std::vector<float> data(p.data.begin(), p.data.end());
  return ImageBuffer(p.width, p.height, 1, std::move(data));
}

}  // namespace

ImageBuffer to_buffer(const GrayImage& gray) { return plane_to_buffer(gray); }
ImageBuffer to_buffer(const SoftMask& mask) { return plane_to_buffer(mask); }
ImageBuffer to_buffer(const BinaryMask& mask) { return plane_to_buffer(mask); }

GrayImage as_gray(const ImageBuffer& img) {
  if (img.channels() != 1) {
    throw Error(ErrorCode::InvalidArgument,
                "expected a 1-channel image, got " +
                    std::to_string(img.channels()) + " channels");
  }
  const auto d = img.data();
  return GrayImage(img.width(), img.height(),
                   std::vector<float>(d.begin(), d.end()));
}

ImageBuffer clamp_unit(ImageBuffer img) {
  for (float& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": shapes differ (" +
                    std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + "x" +
                    std::to_string(a.channels()) + " vs " +
                    std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + "x" +
                    std::to_string(b.channels()) + ")");
  }
}

}  // namespace hilite
