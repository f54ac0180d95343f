#include "hilite/pyramid.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "hilite/error.hpp"
#include "hilite/image_io.hpp"
#include "hilite/kernels.hpp"
#include "json.hpp"

namespace hilite {

namespace {

inline int half_up(int n) noexcept { return (n + 1) / 2; }

std::string dims_str(const ImageBuffer& img) {
  return std::to_string(img.width()) + "x" + std::to_string(img.height()) +
         "x" + std::to_string(img.channels());
}

}  // namespace

ImageBuffer gaussian_down(const ImageBuffer& img) {
  if (img.width() < 2 || img.height() < 2) {
    throw Error(ErrorCode::ImageTooSmall,
                "gaussian_down needs at least 2x2, got " + dims_str(img));
  }
  return kernels::reduce(img);
}

ImageBuffer upsample_to(const ImageBuffer& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "upsample target must be non-zero, got " +
                    std::to_string(target_w) + "x" + std::to_string(target_h));
  }
  return kernels::expand(img, target_w, target_h);
}

int max_depth(int width, int height) noexcept {
  int n = std::min(width, height);
  int depth = 0;
  while (half_up(n) >= 2 && n >= 2) {
    n = half_up(n);
    ++depth;
  }
  return depth;
}

Pyramid decompose(const ImageBuffer& img, int depth) {
  if (depth < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "pyramid depth must be >= 1, got " + std::to_string(depth));
  }
  if (depth > max_depth(img.width(), img.height())) {
    throw Error(ErrorCode::DepthTooLarge,
                "depth " + std::to_string(depth) + " too large for " +
                    dims_str(img) + " (max " +
                    std::to_string(max_depth(img.width(), img.height())) + ")");
  }
  Pyramid pyr;
  pyr.highs.reserve(depth);
  ImageBuffer current = img;
  for (int level = 0; level < depth; ++level) {
    ImageBuffer next = gaussian_down(current);
    const ImageBuffer up = upsample_to(next, current.width(), current.height());
    auto d = current.data();
    const auto u = up.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= u[i];
    pyr.highs.push_back(std::move(current));
    current = std::move(next);
  }
  pyr.base = std::move(current);
  return pyr;
}

ImageBuffer reconstruct(const Pyramid& pyr, bool clamp_to_unit) {
  if (pyr.highs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "pyramid has no levels");
  }
  const int depth = pyr.depth();
  for (int i = 0; i < depth; ++i) {
    const ImageBuffer& level = pyr.highs[i];
    const ImageBuffer& below = i + 1 < depth ? pyr.highs[i + 1] : pyr.base;
    if (below.width() != half_up(level.width()) ||
        below.height() != half_up(level.height()) ||
        below.channels() != level.channels()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "level " + std::to_string(i) + " is " + dims_str(level) +
                      " but level " + std::to_string(i + 1) + " is " +
                      dims_str(below));
    }
  }
  ImageBuffer current = pyr.base;
  for (int level = depth - 1; level >= 0; --level) {
    const ImageBuffer& high = pyr.highs[level];
    ImageBuffer up = upsample_to(current, high.width(), high.height());
    auto u = up.data();
    const auto hd = high.data();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = hd[i] + u[i];
    current = std::move(up);
  }
  return clamp_to_unit ? clamp_unit(std::move(current)) : current;
}

void export_pyramid(const Pyramid& pyr, const std::filesystem::path& dir) {
  nlohmann::json meta;
  meta["depth"] = pyr.depth();
  meta["high_encoding"] = "(h+1)/2";
  meta["bit_depth"] = 16;
  meta["channels"] = pyr.base.channels();
  nlohmann::json levels = nlohmann::json::array();
  for (int i = 0; i < pyr.depth(); ++i) {
    ImageBuffer encoded = pyr.highs[i];
    for (float& v : encoded.data()) v = (v + 1.0f) * 0.5f;
    const std::string name = "high_" + std::to_string(i) + ".png";
    save_image(encoded, dir / name, BitDepth::Sixteen);
    levels.push_back({{"file", name},
                      {"width", encoded.width()},
                      {"height", encoded.height()}});
  }
  save_image(pyr.base, dir / "base.png", BitDepth::Sixteen);
  meta["levels"] = levels;
  meta["base"] = {{"file", "base.png"},
                  {"width", pyr.base.width()},
                  {"height", pyr.base.height()}};
  if (!pyr.highs.empty()) {
    meta["width"] = pyr.highs[0].width();
    meta["height"] = pyr.highs[0].height();
  }
  std::ofstream out(dir / "pyramid.json");
  if (!out) {
    throw Error(ErrorCode::UnwritablePath,
                "cannot write " + (dir / "pyramid.json").string());
  }
  out << meta.dump(2) << '\n';
}

Pyramid import_pyramid(const std::filesystem::path& dir) {
  const auto sidecar = dir / "pyramid.json";
  std::ifstream in(sidecar);
  if (!in) throw Error(ErrorCode::MissingFile, "no such file: " + sidecar.string());
  nlohmann::json meta;
  try {
    in >> meta;
    Pyramid pyr;
    for (const auto& level : meta.at("levels")) {
      ImageBuffer img = load_image(dir / level.at("file").get<std::string>());
      for (float& v : img.data()) v = v * 2.0f - 1.0f;
      pyr.highs.push_back(std::move(img));
    }
    pyr.base = load_image(dir / meta.at("base").at("file").get<std::string>());
    if (pyr.depth() != meta.at("depth").get<int>()) {
      throw Error(ErrorCode::ParseError,
                  "pyramid.json depth does not match its level list");
    }
    return pyr;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError,
                "malformed " + sidecar.string() + ": " + e.what());
  }
}

}  // namespace hilite
