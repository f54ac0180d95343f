#include "hilite/diffusion.hpp"

#include <cmath>
#include <string>

#include "hilite/error.hpp"
#include "hilite/pyramid.hpp"
#include "hilite/rng.hpp"

namespace hilite {

DiffusionSchedule::DiffusionSchedule(std::vector<double> betas)
    : betas_(std::move(betas)) {
  if (betas_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "schedule needs at least one step");
  }
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "beta must lie in (0,1), got " + std::to_string(b));
    }
    alphas_.push_back(1.0 - b);
    running *= alphas_.back();
    alpha_bars_.push_back(running);
  }
}

std::size_t DiffusionSchedule::checked(int t) const {
  if (t < 1 || t > steps()) {
    throw Error(ErrorCode::OutOfRange, "timestep " + std::to_string(t) +
                                           " outside [1, " +
                                           std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

DiffusionSchedule linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1 || !(beta_start > 0.0) || !(beta_start <= beta_end) ||
      !(beta_end < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "invalid schedule: need T >= 1 and 0 < beta_start <= beta_end "
                "< 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    betas[i] = steps == 1 ? beta_start
                          : beta_start + (beta_end - beta_start) * i / (steps - 1);
  }
  if (steps > 1) betas.back() = beta_end;
  return DiffusionSchedule(std::move(betas));
}

ImageBuffer forward_sample(const ImageBuffer& x0, int t, const ImageBuffer& eps,
                           const DiffusionSchedule& sched) {
  const double abar = sched.alpha_bar(t);
  require_same_shape(x0, eps, "forward_sample");
  const double signal = std::sqrt(abar), noise = std::sqrt(1.0 - abar);
  ImageBuffer out(x0.width(), x0.height(), x0.channels());
  auto o = out.data();
  const auto x = x0.data();
  const auto e = eps.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = static_cast<float>(signal * x[i] + noise * e[i]);
  return out;
}

ImageBuffer build_target(const ImageBuffer& h_gt, const ImageBuffer& h_in) {
  require_same_shape(h_gt, h_in, "build_target");
  ImageBuffer out = h_gt;
  auto o = out.data();
  const auto in = h_in.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= in[i];
  return out;
}

Conditioning build_conditioning(const ImageBuffer& h, const ImageBuffer& base_in,
                                const ImageBuffer& base_out) {
  const int bw = (h.width() + 1) / 2, bh = (h.height() + 1) / 2;
  for (const ImageBuffer* base : {&base_in, &base_out}) {
    if (base->width() != bw || base->height() != bh) {
      throw Error(ErrorCode::IncompatibleLevel,
                  "base is " + std::to_string(base->width()) + "x" +
                      std::to_string(base->height()) +
                      " but one level below h needs " + std::to_string(bw) +
                      "x" + std::to_string(bh));
    }
  }
  const ImageBuffer up_in = upsample_to(base_in, h.width(), h.height());
  const ImageBuffer up_out = upsample_to(base_out, h.width(), h.height());
  const int ch = h.channels(), ci = up_in.channels(), co = up_out.channels();
  ImageBuffer stack(h.width(), h.height(), ch + ci + co);
  for (int y = 0; y < h.height(); ++y)
    for (int x = 0; x < h.width(); ++x) {
      int c = 0;
      for (int k = 0; k < ch; ++k) stack.at(x, y, c++) = h.at(x, y, k);
      for (int k = 0; k < ci; ++k) stack.at(x, y, c++) = up_in.at(x, y, k);
      for (int k = 0; k < co; ++k) stack.at(x, y, c++) = up_out.at(x, y, k);
    }
  return Conditioning{std::move(stack), ch};
}

double dm_loss(const ImageBuffer& x0, const ImageBuffer& predicted_x0) {
  require_same_shape(x0, predicted_x0, "dm_loss");
  const auto a = x0.data();
  const auto b = predicted_x0.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

std::vector<int> sampling_timesteps(int total_steps, int n_steps) {
  if (n_steps < 1 || n_steps > total_steps) {
    throw Error(ErrorCode::OutOfRange,
                "n_steps " + std::to_string(n_steps) + " outside [1, " +
                    std::to_string(total_steps) + "]");
  }
  std::vector<int> ts;
  ts.reserve(static_cast<std::size_t>(n_steps));
  for (long long k = n_steps; k >= 1; --k)
    ts.push_back(static_cast<int>((k * total_steps + n_steps - 1) / n_steps));
  return ts;
}

ImageBuffer gaussian_noise(int width, int height, int channels,
                           std::uint64_t seed) {
  ImageBuffer out(width, height, channels);
  Rng rng(seed);
  for (float& v : out.data()) v = static_cast<float>(rng.normal());
  return out;
}

ImageBuffer sample(const Denoiser& denoiser, const Conditioning& y,
                   const DiffusionSchedule& sched, int n_steps,
                   std::uint64_t seed, const SampleObserver& observer) {
  const std::vector<int> ts = sampling_timesteps(sched.steps(), n_steps);
  if (y.target_channels < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "conditioning must declare its target channel count");
  }
  ImageBuffer x = gaussian_noise(y.stack.width(), y.stack.height(),
                                 y.target_channels, seed);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int t = ts[i];
    ImageBuffer x0_hat = denoiser(x, t, y.stack);
    if (!x0_hat.same_shape(x)) {
      throw Error(ErrorCode::DimensionMismatch,
                  "denoiser output shape differs from x_t");
    }
    if (observer) observer(static_cast<int>(i), t, x0_hat);
    if (i + 1 == ts.size()) return x0_hat;

    const double abar = sched.alpha_bar(t);
    const double abar_next = sched.alpha_bar(ts[i + 1]);
    const double s = std::sqrt(abar), n = std::sqrt(1.0 - abar);
    const double s_next = std::sqrt(abar_next), n_next = std::sqrt(1.0 - abar_next);
    auto xv = x.data();
    const auto pred = x0_hat.data();
    for (std::size_t k = 0; k < xv.size(); ++k) {
      const double eps_hat = (xv[k] - s * pred[k]) / n;
      xv[k] = static_cast<float>(s_next * pred[k] + n_next * eps_hat);
    }
  }
  return x;  // unreachable: ts is never empty
}

}  // namespace hilite
