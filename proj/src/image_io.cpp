#include "hilite/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "hilite/error.hpp"

namespace hilite {

namespace fs = std::filesystem;

std::uint32_t quantize(float sample, std::uint32_t max_value) noexcept {
  const double v = std::clamp(static_cast<double>(sample), 0.0, 1.0);
  return static_cast<std::uint32_t>(v * max_value + 0.5);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return e;
}

void png_warning_silent(png_structp, png_const_charp) {}

[[noreturn]] void png_error_silent(png_structp png, png_const_charp) {
  png_longjmp(png, 1);
}

// ---------------------------------------------------------------- PNG read

ImageBuffer read_png(std::FILE* fp, const fs::path& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_silent, png_warning_silent);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptHeader, "cannot initialise PNG reader");
  }

  // Everything touched after setjmp lives outside the protected region.
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0, bit_depth = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptHeader,
                "corrupt or truncated PNG: " + path.string());
  }

  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::UnsupportedFormat,
                "unsupported PNG channel layout in " + path.string());
  }

  ImageBuffer img(static_cast<int>(width), static_cast<int>(height), channels);
  auto out = img.data();
  if (bit_depth == 16) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const unsigned v = (pixels[2 * i] << 8) | pixels[2 * i + 1];
      out[i] = static_cast<float>(v / 65535.0);
    }
  } else {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<float>(pixels[i] / 255.0);
  }
  return img;
}

// ---------------------------------------------------------------- PNM read

class PnmHeaderReader {
 public:
  PnmHeaderReader(std::istream& in, const fs::path& path)
      : in_(in), path_(path) {}

  long next_int() {
    skip_space_and_comments();
    long v = 0;
    int digits = 0;
    while (std::isdigit(in_.peek())) {
      v = v * 10 + (in_.get() - '0');
      if (++digits > 9) fail();
    }
    if (digits == 0) fail();
    return v;
  }

  [[noreturn]] void fail() const {
    throw Error(ErrorCode::CorruptHeader, "corrupt PNM header: " + path_.string());
  }

 private:
  void skip_space_and_comments() {
    for (;;) {
      const int c = in_.peek();
      if (c == '#') {
        while (in_.peek() != '\n' && in_.peek() != EOF) in_.get();
      } else if (std::isspace(c)) {
        in_.get();
      } else {
        return;
      }
    }
  }

  std::istream& in_;
  const fs::path& path_;
};

ImageBuffer read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[2] = {};
  in.read(magic, 2);
  const int channels = magic[1] == '5' ? 1 : 3;
  PnmHeaderReader header(in, path);
  const long width = header.next_int();
  const long height = header.next_int();
  const long maxval = header.next_int();
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) header.fail();
  if (!std::isspace(in.get())) header.fail();

  const int bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) *
                            static_cast<std::size_t>(height) * channels;
  std::vector<unsigned char> raw(count * bytes);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(ErrorCode::CorruptHeader,
                "truncated PNM pixel data: " + path.string());
  }
  ImageBuffer img(static_cast<int>(width), static_cast<int>(height), channels);
  auto out = img.data();
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    out[i] = static_cast<float>(std::min<double>(v * scale, 1.0));
  }
  return img;
}

// ---------------------------------------------------------------- writers

void write_png(const ImageBuffer& img, const fs::path& path, BitDepth depth) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) {
    throw Error(ErrorCode::UnwritablePath, "cannot write " + path.string() +
                                               ": " + std::strerror(errno));
  }
  const int bits = static_cast<int>(depth);
  const std::size_t samples_per_row =
      static_cast<std::size_t>(img.width()) * img.channels();
  const std::size_t rowbytes = samples_per_row * (bits / 8);
  std::vector<unsigned char> pixels(rowbytes * img.height());
  const auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (bits == 16) {
      const std::uint32_t q = quantize(src[i], 65535);
      pixels[2 * i] = static_cast<unsigned char>(q >> 8);
      pixels[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    } else {
      pixels[i] = static_cast<unsigned char>(quantize(src[i], 255));
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) rows[y] = pixels.data() + y * rowbytes;

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_silent, png_warning_silent);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::UnwritablePath, "cannot initialise PNG writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::UnwritablePath, "failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), bits,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) {
    throw Error(ErrorCode::UnwritablePath, "failed writing " + path.string());
  }
}

void write_pnm(const ImageBuffer& img, const fs::path& path, BitDepth depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::UnwritablePath, "cannot write " + path.string());
  }
  const std::uint32_t maxval = depth == BitDepth::Sixteen ? 65535 : 255;
  out << (img.channels() == 1 ? "P5" : "P6") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(img.size() * (maxval > 255 ? 2 : 1));
  for (float v : img.data()) {
    const std::uint32_t q = quantize(v, maxval);
    if (maxval > 255) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) {
    throw Error(ErrorCode::UnwritablePath, "failed writing " + path.string());
  }
}

}  // namespace

ImageBuffer load_image(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::MissingFile, "no such file: " + path.string());
  }
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) {
    throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  }
  unsigned char sig[8] = {};
  const std::size_t got = std::fread(sig, 1, sizeof sig, fp.get());
  if (got == 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(fp.get(), path);
  if (got >= 2 && sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) {
    fp.reset();
    return read_pnm(path);
  }
  throw Error(ErrorCode::UnsupportedFormat,
              "not a PNG or binary PGM/PPM file: " + path.string());
}

void save_image(const ImageBuffer& img, const fs::path& path, BitDepth depth) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorCode::InvalidArgument,
                "only 1- or 3-channel images can be saved, got " +
                    std::to_string(img.channels()));
  }
  const std::string ext = lower_ext(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    write_pnm(img, path, depth);
  } else {
    write_png(img, path, depth);
  }
}

}  // namespace hilite
