#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hilite {

/// Interleaved H×W×C float raster, row-major.
///
/// Pixel data loaded from disk or handed back by exported image operations
/// lies in [0,1]. Pyramid high-frequency layers and diffusion tensors reuse
/// the container with signed, unclamped values.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, float fill = 0.0f);
  ImageBuffer(int width, int height, int channels, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int x, int y, int c = 0) noexcept {
    return data_[index(x, y, c)];
  }
  float at(int x, int y, int c = 0) const noexcept {
    return data_[index(x, y, c)];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Single-channel W×H plane. The tag keeps grayscale images and the two
/// mask kinds from being mixed up at call sites.
template <typename T, typename Tag>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(int w, int h, T fill = T{})
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}
  Plane(int w, int h, std::vector<T> values)
      : width(w), height(h), data(std::move(values)) {}

  std::size_t size() const noexcept { return data.size(); }
  T& at(int x, int y) noexcept {
    return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
  T at(int x, int y) const noexcept {
    return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
  template <typename OtherTag>
  bool same_dims(const Plane<T, OtherTag>& o) const noexcept {
    return width == o.width && height == o.height;
  }

  friend bool operator==(const Plane&, const Plane&) = default;
};

struct GrayTag;
struct SoftMaskTag;
struct BinaryMaskTag;

using GrayImage = Plane<float, GrayTag>;
/// Continuous highlight prior, values in [0,1].
using SoftMask = Plane<float, SoftMaskTag>;
/// Thresholded highlight mask, values in {0,1}.
using BinaryMask = Plane<std::uint8_t, BinaryMaskTag>;

/// BT.601 luma for 3-channel input; 1-channel input is copied unchanged.
GrayImage to_grayscale(const ImageBuffer& img);

/// Wraps a plane as a 1-channel ImageBuffer.
ImageBuffer to_buffer(const GrayImage& gray);
ImageBuffer to_buffer(const SoftMask& mask);
ImageBuffer to_buffer(const BinaryMask& mask);

/// Requires a 1-channel buffer.
GrayImage as_gray(const ImageBuffer& img);

/// Clamps every sample into [0,1].
ImageBuffer clamp_unit(ImageBuffer img);

/// Throws DimensionMismatch with `what` in the message unless shapes agree.
void require_same_shape(const ImageBuffer& a, const ImageBuffer& b,
                        const char* what);

}  // namespace hilite
