// Copyright 2026 The sepbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEPBENCH_DIFFUSION_HPP_
#define SEPBENCH_DIFFUSION_HPP_

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "sepbench/rng.hpp"

namespace sepbench {

// Cosine variance-preserving schedule: alpha = cos(pi t / 2),
// sigma = sin(pi t / 2), lambda = ln(alpha/sigma). lambda is +inf at t=0
// and -inf at t=1; solvers only evaluate it on the clipped grid.
struct ScheduleEval {
  double alpha = 1.0;
  double sigma = 0.0;
  double lambda = std::numeric_limits<double>::infinity();
};

ScheduleEval schedule_eval(double t);
double lambda_to_time(double lambda);  // inverse of the log-SNR map

// Sampler grid clipping; keeps lambda finite at both ends.
constexpr double kTimeClip = 1e-3;

// v-parameterization algebra: x_t = alpha x0 + sigma eps,
// v = alpha eps - sigma x0, and the two inversions.
std::vector<double> v_from(const std::vector<double>& x0,
                           const std::vector<double>& eps, double t);
std::vector<double> x0_from_v(const std::vector<double>& x_t,
                              const std::vector<double>& v, double t);
std::vector<double> eps_from_v(const std::vector<double>& x_t,
                               const std::vector<double>& v, double t);

// Classifier-free guidance combination. Scales 1.0 and 0.0 return the
// conditional / unconditional branch bit-identically.
std::vector<double> cfg_combine(const std::vector<double>& cond_out,
                                const std::vector<double>& uncond_out,
                                double cfg_scale);

struct GuidanceConfig {
  double cfg_scale = 1.0;
  double drop_rate_text = 0.10;
  double drop_rate_mixture = 0.10;
  double drop_rate_imitation = 0.90;
};

struct ConditionMask {
  bool keep_text = true;
  bool keep_mixture = true;
  bool keep_imitation = true;
};

// Independent Bernoulli drops at the configured rates; draw order is
// text, mixture, imitation.
ConditionMask sample_condition_mask(Rng& rng, const GuidanceConfig& cfg);

// Latent sequence: frames x 128 at the 40 Hz frame rate.
struct LatentSeq {
  static constexpr std::size_t kWidth = 128;
  std::size_t frames = 0;
  std::vector<double> values;  // row-major frames x kWidth

  static LatentSeq zeros(std::size_t frames);
};

// Per-frame affine map 128 -> 128 used to fold a condition stream into
// the noisy latent by in-place addition.
struct FrameProjection {
  std::vector<double> weight;  // kWidth x kWidth, row-major; empty = identity
  std::vector<double> bias;    // kWidth; empty = zero

  static FrameProjection identity() { return {}; }
};

// out = noisy + projection(condition), frame by frame.
LatentSeq apply_additive_condition(const LatentSeq& noisy,
                                   const LatentSeq& condition,
                                   const FrameProjection& projection);

// Denoiser contract: v-prediction of the same shape as x_t. `conditioned`
// distinguishes the conditional and unconditional branches for CFG.
using DenoiserFn = std::function<std::vector<double>(
    const std::vector<double>& x_t, double t, bool conditioned)>;

// Analytic data model x0 ~ N(mu, diag(s^2)); its posterior-mean denoiser
// is exact, which makes the sampler verifiable without any training.
struct GaussianDataModel {
  std::vector<double> mu;
  std::vector<double> s;  // per-dimension standard deviation, > 0

  DenoiserFn denoiser() const;
};

// v-prediction of the optimal denoiser for the Gaussian model:
// x0_hat = (alpha s^2 x_t + sigma^2 mu) / (alpha^2 s^2 + sigma^2).
std::vector<double> gaussian_denoiser(const GaussianDataModel& model,
                                      const std::vector<double>& x_t,
                                      double t);

// One exponential-integrator step from time t to time s (s < t) in log-SNR
// space; order 1 keeps the start-point noise estimate, order 2 re-evaluates
// it at the log-SNR midpoint. CFG is applied per denoiser call.
std::vector<double> dpm_solver_step(const std::vector<double>& x_t, double t,
                                    double s, const DenoiserFn& denoiser,
                                    int order, bool conditioned = true,
                                    const GuidanceConfig& guidance = {});

struct SampleOptions {
  int steps = 50;
  int order = 2;
  bool conditioned = true;
  GuidanceConfig guidance;
};

// Draws x ~ N(0, I) at the clipped start time and integrates to the
// clipped end on a uniform-in-t grid. Deterministic for a fixed rng.
std::vector<double> sample_chain(const DenoiserFn& denoiser, std::size_t dim,
                                 Rng& rng, const SampleOptions& options);

// Typed wrapper producing a frames x 128 latent.
LatentSeq sample(const DenoiserFn& denoiser, std::size_t frames, Rng& rng,
                 const SampleOptions& options);

// 2-Wasserstein distance between the empirical 1-D sample distribution and
// N(mu, s^2), via quantile matching on the sorted samples.
double wasserstein2_to_gaussian(std::vector<double> samples, double mu,
                                double s);

// Inverse standard normal CDF (Acklam's rational approximation).
double normal_quantile(double p);

}  // namespace sepbench

#endif  // SEPBENCH_DIFFUSION_HPP_
