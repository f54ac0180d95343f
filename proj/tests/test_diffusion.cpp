#include <cmath>
#include <limits>

#include "doctest.h"
#include "hilite/diffusion.hpp"
#include "hilite/error.hpp"
#include "hilite/metrics.hpp"
#include "test_support.hpp"

using namespace hilite;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected hilite::Error");
  return ErrorCode::ParseError;
}

Conditioning small_conditioning(Rng& rng, int w = 8, int h = 6) {
  const ImageBuffer hi = testing::random_image(w, h, 1, rng);
  const int bw = (w + 1) / 2, bh = (h + 1) / 2;
  return build_conditioning(hi, testing::random_image(bw, bh, 3, rng), testing::random_image(bw, bh, 3, rng));
}

}  // namespace

TEST_CASE("schedule products") {
  const DiffusionSchedule one({0.1});
  CHECK(one.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
  const DiffusionSchedule two({0.1, 0.2});
  CHECK(two.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-15));
  CHECK(two.alpha_bar(2) == two.alpha_bar(1) * two.alpha(2));
  CHECK(code_of([&] { two.alpha_bar(0); }) == ErrorCode::OutOfRange);
  CHECK(code_of([&] { two.alpha_bar(3); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { linear_schedule(10, 0.02, 0.01); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { linear_schedule(0, 0.01, 0.02); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { linear_schedule(10, 0.0, 0.02); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { DiffusionSchedule({0.1, 1.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("linear schedule endpoints and monotone alpha_bar") {
  const DiffusionSchedule s = linear_schedule();
  REQUIRE(s.steps() == 1000);
  CHECK(s.beta(1) == 1e-4);
  CHECK(s.beta(1000) == 0.02);
  for (int t = 2; t <= 1000; ++t) {
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(s.alpha_bar(t) == s.alpha_bar(t - 1) * s.alpha(t));
  }
  CHECK(s.alpha_bar(1000) > 0.0);
  CHECK(s.alpha_bar(1) < 1.0);
  const DiffusionSchedule flat = linear_schedule(5, 0.05, 0.05);
  for (int t = 1; t <= 5; ++t) CHECK(flat.beta(t) == 0.05);
}

TEST_CASE("forward_sample limbs and superposition") {
  Rng rng(1);
  const DiffusionSchedule s = linear_schedule(100, 1e-4, 0.02);
  const ImageBuffer x0 = testing::random_image(6, 5, 3, rng);
  const ImageBuffer zero(6, 5, 3, 0.0f);
  const ImageBuffer det = forward_sample(x0, 40, zero, s);
  const double k = std::sqrt(s.alpha_bar(40));
  for (std::size_t i = 0; i < det.data().size(); ++i) CHECK(det.data()[i] == static_cast<float>(k * x0.data()[i]) );

  const ImageBuffer eps = gaussian_noise(6, 5, 3, 9);
  const ImageBuffer near = forward_sample(x0, 1, eps, s);
  double max_eps = 0;
  for (float e : eps.data()) max_eps = std::max(max_eps, std::abs(static_cast<double>(e)));
  CHECK(testing::max_abs_diff(near, x0) <= std::sqrt(1 - s.alpha_bar(1)) * max_eps + 1e-4);

  // Affine: f(a x + b x', e) relation checked through f(x, e) = f(x, 0) + f(0, e).
  const ImageBuffer split = forward_sample(zero, 40, eps, s);
  const ImageBuffer both = forward_sample(x0, 40, eps, s);
  for (std::size_t i = 0; i < both.data().size(); ++i)
    CHECK(both.data()[i] == doctest::Approx(det.data()[i] + split.data()[i]).epsilon(1e-6));

  CHECK(code_of([&] { forward_sample(x0, 0, eps, s); }) == ErrorCode::OutOfRange);
  CHECK(code_of([&] { forward_sample(x0, 101, eps, s); }) == ErrorCode::OutOfRange);
  CHECK(code_of([&] { forward_sample(x0, 3, ImageBuffer(6, 5, 1), s); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("forward_sample moments over seeded draws") {
  const DiffusionSchedule s = linear_schedule();
  const ImageBuffer x0(2, 1, 1, {0.8f, -0.3f});
  const int n = 20000;
  for (int t : {1, 500, 1000}) {
    const double ab = s.alpha_bar(t);
    double sum[2] = {0, 0}, sq[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
      const ImageBuffer xt = forward_sample(x0, t, gaussian_noise(2, 1, 1, 1000 + i), s);
      for (int p = 0; p < 2; ++p) {
        const double r = xt.data()[p] - std::sqrt(ab) * x0.data()[p];
        sum[p] += r;
        sq[p] += r * r;
      }
    }
    for (int p = 0; p < 2; ++p) {
      const double mean = sum[p] / n;
      const double var = sq[p] / n - mean * mean;
      CHECK(std::abs(mean) <= 4 * std::sqrt(1 - ab) / std::sqrt(n));
      CHECK(std::abs(var / (1 - ab) - 1) <= 0.05);
    }
  }
}

TEST_CASE("gaussian_noise is reproducible and standard") {
  CHECK(gaussian_noise(9, 7, 3, 42) == gaussian_noise(9, 7, 3, 42));
  CHECK_FALSE(gaussian_noise(9, 7, 3, 42) == gaussian_noise(9, 7, 3, 43));
  const ImageBuffer big = gaussian_noise(200, 200, 1, 5);
  double s = 0, q = 0;
  for (float v : big.data()) {
    s += v;
    q += static_cast<double>(v) * v;
  }
  const double n = 40000;
  CHECK(std::abs(s / n) < 4 / std::sqrt(n));
  CHECK(std::abs(q / n - 1) < 0.05);
}

TEST_CASE("build_target and dm_loss") {
  const ImageBuffer gt(1, 1, 1, 0.5f), in(1, 1, 1, 0.2f);
  CHECK(build_target(gt, in).at(0, 0) == doctest::Approx(0.3f));
  CHECK(build_target(gt, gt).at(0, 0) == 0.0f);
  Rng rng(2);
  const ImageBuffer a = testing::random_image(9, 4, 3, rng);
  const ImageBuffer b = testing::random_image(9, 4, 3, rng);
  const ImageBuffer t = build_target(a, b);
  for (std::size_t i = 0; i < t.data().size(); ++i)
    CHECK(std::abs(t.data()[i] + b.data()[i] - a.data()[i]) <= std::numeric_limits<float>::epsilon());
  // On a dyadic grid both the subtraction and the addition are exact.
  ImageBuffer qa = a, qb = b;
  for (float& v : qa.data()) v = std::round(v * 65536.0f) / 65536.0f;
  for (float& v : qb.data()) v = std::round(v * 65536.0f) / 65536.0f;
  const ImageBuffer qt = build_target(qa, qb);
  for (std::size_t i = 0; i < qt.data().size(); ++i) CHECK(qt.data()[i] + qb.data()[i] == qa.data()[i]);
  CHECK(code_of([&] { build_target(a, ImageBuffer(9, 4, 1)); }) == ErrorCode::DimensionMismatch);

  CHECK(dm_loss(a, a) == 0.0);
  ImageBuffer off = a;
  for (float& v : off.data()) v += 0.1f;
  CHECK(dm_loss(a, off) == doctest::Approx(0.01).epsilon(1e-5));
  const double r = rmse(a, b);
  CHECK(std::abs(dm_loss(a, b) - r * r) <= 1e-9);
}

TEST_CASE("build_conditioning stacks channels in order") {
  Rng rng(3);
  const ImageBuffer h = testing::random_image(9, 7, 1, rng);
  const ImageBuffer bin(5, 4, 3, 0.25f), bout(5, 4, 3, 0.75f);
  const Conditioning c = build_conditioning(h, bin, bout);
  REQUIRE(c.stack.channels() == 7);
  CHECK(c.target_channels == 1);
  CHECK(c.stack.width() == 9);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x) {
      CHECK(c.stack.at(x, y, 0) == h.at(x, y));
      for (int ch = 1; ch <= 3; ++ch) CHECK(c.stack.at(x, y, ch) == doctest::Approx(0.25f).epsilon(1e-6));
      for (int ch = 4; ch <= 6; ++ch) CHECK(c.stack.at(x, y, ch) == doctest::Approx(0.75f).epsilon(1e-6));
    }
  CHECK(code_of([&] { build_conditioning(h, ImageBuffer(4, 4, 3), bout); }) == ErrorCode::IncompatibleLevel);
  CHECK(code_of([&] { build_conditioning(h, bin, ImageBuffer(5, 3, 3)); }) == ErrorCode::IncompatibleLevel);
}

TEST_CASE("sampling timesteps stride uniformly down to 1") {
  CHECK(sampling_timesteps(1000, 1) == std::vector<int>{1000});
  CHECK(sampling_timesteps(1000, 4) == std::vector<int>{1000, 750, 500, 250});
  CHECK(sampling_timesteps(10, 3) == std::vector<int>{10, 7, 4});
  const auto all = sampling_timesteps(50, 50);
  for (int i = 0; i < 50; ++i) CHECK(all[static_cast<std::size_t>(i)] == 50 - i);
  CHECK(code_of([] { sampling_timesteps(10, 0); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { sampling_timesteps(10, 11); }) == ErrorCode::OutOfRange);
}

TEST_CASE("sampler fixed points and determinism") {
  Rng rng(4);
  const DiffusionSchedule s = linear_schedule();
  const Conditioning y = small_conditioning(rng);
  const ImageBuffer g = testing::random_image(8, 6, 1, rng);
  const Denoiser fixed = [&](const ImageBuffer&, int, const ImageBuffer&) { return g; };
  CHECK(sample(fixed, y, s, 10, 1) == g);
  CHECK(sample(fixed, y, s, 10, 999) == g);

  const Denoiser zero = [](const ImageBuffer& xt, int, const ImageBuffer&) {
    return ImageBuffer(xt.width(), xt.height(), xt.channels(), 0.0f);
  };
  const ImageBuffer zero_out = sample(zero, y, s, 1000, 7);
  for (float v : zero_out.data()) CHECK(v == 0.0f);

  // A denoiser that depends on x_t exercises the full update path.
  const Denoiser shrink = [](const ImageBuffer& xt, int t, const ImageBuffer&) {
    ImageBuffer out = xt;
    for (float& v : out.data()) v = static_cast<float>(v * 0.5 / (1.0 + t * 1e-3));
    return out;
  };
  const ImageBuffer a = sample(shrink, y, s, 25, 11);
  const ImageBuffer b = sample(shrink, y, s, 25, 11);
  const ImageBuffer c = sample(shrink, y, s, 25, 12);
  CHECK(a == b);
  CHECK_FALSE(a == c);

  int calls = 0;
  sample(fixed, y, s, 10, 1, [&](int step, int t, const ImageBuffer& x0) {
    CHECK(step == calls);
    CHECK(t == sampling_timesteps(1000, 10)[static_cast<std::size_t>(step)]);
    CHECK(x0 == g);
    ++calls;
  });
  CHECK(calls == 10);
  CHECK(code_of([&] { sample(fixed, y, s, 0, 1); }) == ErrorCode::OutOfRange);
  CHECK(code_of([&] { sample(fixed, y, s, 1001, 1); }) == ErrorCode::OutOfRange);
}

TEST_CASE("oracle denoiser recovers x0 for any step count") {
  Rng rng(5);
  const DiffusionSchedule s = linear_schedule();
  const Conditioning y = small_conditioning(rng);
  const ImageBuffer x0 = testing::random_image(8, 6, 1, rng);
  const Denoiser oracle = [&](const ImageBuffer&, int, const ImageBuffer&) { return x0; };
  for (int n : {1, 10, 1000}) CHECK(testing::max_abs_diff(sample(oracle, y, s, n, 3), x0) <= 1e-6);
}
