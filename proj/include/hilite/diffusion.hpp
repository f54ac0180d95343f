#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hilite/image.hpp"

namespace hilite {

/// Noise schedule over steps 1..T. Index with the 1-based accessors.
class DiffusionSchedule {
 public:
  explicit DiffusionSchedule(std::vector<double> betas);

  int steps() const noexcept { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(checked(t)); }
  double alpha(int t) const { return alphas_.at(checked(t)); }
  double alpha_bar(int t) const { return alpha_bars_.at(checked(t)); }

  const std::vector<double>& betas() const noexcept { return betas_; }
  const std::vector<double>& alpha_bars() const noexcept { return alpha_bars_; }

 private:
  std::size_t checked(int t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

inline constexpr int kDefaultDiffusionSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

/// Betas linearly spaced from beta_start to beta_end inclusive.
DiffusionSchedule linear_schedule(int steps = kDefaultDiffusionSteps,
                                  double beta_start = kDefaultBetaStart,
                                  double beta_end = kDefaultBetaEnd);

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, unclamped.
ImageBuffer forward_sample(const ImageBuffer& x0, int t, const ImageBuffer& eps,
                           const DiffusionSchedule& sched);

/// Target residual x0 = h_gt - h_in.
ImageBuffer build_target(const ImageBuffer& h_gt, const ImageBuffer& h_in);

/// Channel stack [h, Up(base_in), Up(base_out)] at h's resolution.
struct Conditioning {
  ImageBuffer stack;
  /// Channels of the leading h block; the sampled x0 has this many.
  int target_channels = 0;
};

/// Both bases must sit exactly one pyramid level below h.
Conditioning build_conditioning(const ImageBuffer& h, const ImageBuffer& base_in,
                                const ImageBuffer& base_out);

/// Mean squared difference.
double dm_loss(const ImageBuffer& x0, const ImageBuffer& predicted_x0);

/// Predicts x0 from (x_t, t, conditioning stack).
using Denoiser = std::function<ImageBuffer(const ImageBuffer& x_t, int t,
                                           const ImageBuffer& y)>;

/// Called after each denoiser evaluation with the step index (0-based), the
/// timestep and the prediction.
using SampleObserver =
    std::function<void(int step, int t, const ImageBuffer& predicted_x0)>;

/// The n timesteps visited by sample(), descending: ceil(k*T/n), k = n..1.
std::vector<int> sampling_timesteps(int total_steps, int n_steps);

/// Standard-normal raster drawn from `seed`.
ImageBuffer gaussian_noise(int width, int height, int channels,
                           std::uint64_t seed);

/// Deterministic x0-prediction sampler (DDIM, eta = 0).
ImageBuffer sample(const Denoiser& denoiser, const Conditioning& y,
                   const DiffusionSchedule& sched, int n_steps,
                   std::uint64_t seed, const SampleObserver& observer = {});

}  // namespace hilite
