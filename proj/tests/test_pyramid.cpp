#include "json.hpp"

#include <fstream>

#include "doctest.h"
#include "hilite/error.hpp"
#include "hilite/kernels.hpp"
#include "hilite/pyramid.hpp"
#include "test_support.hpp"

using namespace hilite;
using hilite::testing::TempDir;

TEST_CASE("gaussian_down halves with ceiling and keeps constants") {
  CHECK(gaussian_down(ImageBuffer(4, 4, 1, 0.3f)).width() == 2);
  const ImageBuffer five = gaussian_down(ImageBuffer(5, 5, 3, 0.3f));
  CHECK(five.width() == 3);
  CHECK(five.height() == 3);
  for (float v : five.data()) CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));
  CHECK_THROWS_AS(gaussian_down(ImageBuffer(1, 4, 1)), Error);
}

TEST_CASE("upsample_to hits the exact target") {
  const ImageBuffer up = upsample_to(ImageBuffer(2, 2, 1, 0.6f), 4, 4);
  CHECK(up.width() == 4);
  CHECK(up.height() == 4);
  for (float v : up.data()) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));

  const ImageBuffer odd = upsample_to(ImageBuffer(3, 2, 1, 0.6f), 11, 3);
  CHECK(odd.width() == 11);
  CHECK(odd.height() == 3);
  for (float v : odd.data()) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));

  Rng rng(1);
  const ImageBuffer x = testing::random_image(13, 9, 3, rng);
  const ImageBuffer r = upsample_to(gaussian_down(x), 13, 9);
  CHECK(r.same_shape(x));
  CHECK_THROWS_AS(upsample_to(x, 0, 3), Error);
}

TEST_CASE("decompose sizes and constant images") {
  const Pyramid p = decompose(ImageBuffer(8, 8, 1, 0.42f), 2);
  REQUIRE(p.depth() == 2);
  CHECK(p.highs[0].width() == 8);
  CHECK(p.highs[1].width() == 4);
  CHECK(p.base.width() == 2);
  CHECK(p.base.height() == 2);
  for (const auto& h : p.highs)
    for (float v : h.data()) CHECK(std::abs(v) <= 1e-7);
  for (float v : p.base.data()) CHECK(v == doctest::Approx(0.42f).epsilon(1e-6));
}

TEST_CASE("decompose rejects bad depths") {
  const ImageBuffer img(8, 8, 1);
  try {
    decompose(img, 3);
    FAIL("expected DepthTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DepthTooLarge);
  }
  CHECK_THROWS_AS(decompose(img, 0), Error);
  CHECK(max_depth(8, 8) == 2);
  CHECK(max_depth(7, 5) == 2);
  CHECK(max_depth(3, 3) == 1);
  CHECK(max_depth(257, 129) == 7);
}

TEST_CASE("reconstruct inverts decompose on random images") {
  Rng rng(5);
  const ImageBuffer x16 = testing::random_image(16, 16, 1, rng);
  CHECK(testing::max_abs_diff(reconstruct(decompose(x16, 3)), x16) <= 1e-6);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 4 + static_cast<int>(rng.below(60));
    const int h = 4 + static_cast<int>(rng.below(60));
    const ImageBuffer x = testing::random_image(w, h, trial % 2 ? 3 : 1, rng);
    const int d = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_depth(w, h))));
    CHECK(testing::max_abs_diff(reconstruct(decompose(x, d)), x) <= 1e-6);
  }
}

TEST_CASE("reconstruct with zero highs is the iterated upsample of the base") {
  Rng rng(6);
  const ImageBuffer x = testing::random_image(19, 14, 1, rng);
  Pyramid p = decompose(x, 2);
  for (auto& h : p.highs) h = ImageBuffer(h.width(), h.height(), h.channels(), 0.0f);
  const ImageBuffer expected = upsample_to(upsample_to(p.base, 10, 7), 19, 14);
  CHECK(testing::max_abs_diff(reconstruct(p), expected) <= 1e-7);
}

TEST_CASE("reconstruct detects tampered dimensions") {
  Rng rng(7);
  Pyramid p = decompose(testing::random_image(16, 16, 1, rng), 2);
  p.highs[1] = ImageBuffer(5, 4, 1);
  try {
    reconstruct(p);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("reconstruct clamps only on request") {
  Pyramid p = decompose(ImageBuffer(8, 8, 1, 0.5f), 1);
  p.highs[0].at(3, 3) = 0.9f;
  p.highs[0].at(4, 4) = -0.8f;
  const ImageBuffer raw = reconstruct(p);
  CHECK(raw.at(3, 3) > 1.0f);
  CHECK(raw.at(4, 4) < 0.0f);
  const ImageBuffer clamped = reconstruct(p, true);
  CHECK(clamped.at(3, 3) == 1.0f);
  CHECK(clamped.at(4, 4) == 0.0f);
}

TEST_CASE("impulse energy stays inside the level footprint") {
  // Distances are measured in level-i pixels around the impulse position
  // at that level. The reduce chain reaches at most 2 + 1 + 1/2 + ... < 4
  // level-i pixels and the final expand adds 2 more.
  const int n = 64, cx = 29, cy = 35;
  ImageBuffer img(n, n, 1, 0.0f);
  img.at(cx, cy) = 1.0f;
  const Pyramid p = decompose(img, 3);
  for (int i = 0; i < p.depth(); ++i) {
    const double scale = 1 << i;
    const double box = 4 * scale;
    const double tight = 6.0;
    const auto& h = p.highs[static_cast<std::size_t>(i)];
    double energy_inside = 0.0;
    for (int y = 0; y < h.height(); ++y)
      for (int x = 0; x < h.width(); ++x) {
        const double ex = std::abs(x - cx / scale), ey = std::abs(y - cy / scale);
        if (ex > box || ey > box) CHECK(h.at(x, y) == 0.0f);
        if (ex > tight || ey > tight) CHECK(h.at(x, y) == 0.0f);
        else energy_inside += std::abs(h.at(x, y));
      }
    CHECK(energy_inside > 0.0);
  }
}

TEST_CASE("decompose and reconstruct are bitwise deterministic") {
  Rng rng(8);
  const ImageBuffer x = testing::random_image(45, 33, 3, rng);
  const Pyramid a = decompose(x, 3);
  const Pyramid b = decompose(x, 3);
  for (int i = 0; i < 3; ++i) CHECK(a.highs[i] == b.highs[i]);
  CHECK(a.base == b.base);
  CHECK(reconstruct(a) == reconstruct(b));
}

TEST_CASE("export and import round trip through 16-bit PNGs") {
  TempDir dir("pyr");
  Rng rng(9);
  const ImageBuffer x = testing::random_image(21, 17, 3, rng);
  const Pyramid p = decompose(x, 2);
  export_pyramid(p, dir.path());
  CHECK(std::filesystem::exists(dir / "high_0.png"));
  CHECK(std::filesystem::exists(dir / "high_1.png"));
  CHECK(std::filesystem::exists(dir / "base.png"));

  std::ifstream js(dir / "pyramid.json");
  const auto meta = nlohmann::json::parse(js);
  CHECK(meta.at("depth") == 2);
  CHECK(meta.at("levels").size() == 2);
  CHECK(meta.at("levels")[1].at("width") == 11);

  const Pyramid q = import_pyramid(dir.path());
  REQUIRE(q.depth() == 2);
  // Highs pass through (h+1)/2 so their step is twice the 16-bit step.
  for (int i = 0; i < 2; ++i) CHECK(testing::max_abs_diff(p.highs[i], q.highs[i]) <= 1.0 / 65535 + 1e-7);
  CHECK(testing::max_abs_diff(p.base, q.base) <= 0.5 / 65535 + 1e-7);
  CHECK(testing::max_abs_diff(reconstruct(q), x) <= 1e-4);
}
