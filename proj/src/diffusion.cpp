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

#include "sepbench/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "sepbench/errors.hpp"

namespace sepbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_same_shape(const std::vector<double>& a,
                        const std::vector<double>& b) {
  require(a.size() == b.size(), Errc::kShape,
          "vector shapes differ (" + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()) + ")");
}

}  // namespace

ScheduleEval schedule_eval(double t) {
  require(t >= 0.0 && t <= 1.0, Errc::kDomain, "t must lie in [0, 1]");
  ScheduleEval eval;
  eval.alpha = std::cos(kPi * t / 2.0);
  eval.sigma = std::sin(kPi * t / 2.0);
  if (t == 0.0) {
    eval.alpha = 1.0;
    eval.sigma = 0.0;
    eval.lambda = std::numeric_limits<double>::infinity();
  } else if (t == 1.0) {
    eval.alpha = 0.0;
    eval.sigma = 1.0;
    eval.lambda = -std::numeric_limits<double>::infinity();
  } else {
    eval.lambda = std::log(eval.alpha / eval.sigma);
  }
  return eval;
}

double lambda_to_time(double lambda) {
  // lambda = -ln tan(pi t / 2)  =>  t = (2/pi) atan(exp(-lambda)).
  return (2.0 / kPi) * std::atan(std::exp(-lambda));
}

std::vector<double> v_from(const std::vector<double>& x0,
                           const std::vector<double>& eps, double t) {
  require_same_shape(x0, eps);
  const ScheduleEval sc = schedule_eval(t);
  std::vector<double> v(x0.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = sc.alpha * eps[i] - sc.sigma * x0[i];
  }
  return v;
}

std::vector<double> x0_from_v(const std::vector<double>& x_t,
                              const std::vector<double>& v, double t) {
  require_same_shape(x_t, v);
  const ScheduleEval sc = schedule_eval(t);
  std::vector<double> x0(x_t.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    x0[i] = sc.alpha * x_t[i] - sc.sigma * v[i];
  }
  return x0;
}

std::vector<double> eps_from_v(const std::vector<double>& x_t,
                               const std::vector<double>& v, double t) {
  require_same_shape(x_t, v);
  const ScheduleEval sc = schedule_eval(t);
  std::vector<double> eps(x_t.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i] = sc.sigma * x_t[i] + sc.alpha * v[i];
  }
  return eps;
}

std::vector<double> cfg_combine(const std::vector<double>& cond_out,
                                const std::vector<double>& uncond_out,
                                double cfg_scale) {
  require_same_shape(cond_out, uncond_out);
  // Exact fixed points of the formula, returned without arithmetic so the
  // scale-1.0 contract is a bit identity.
  if (cfg_scale == 1.0) return cond_out;
  if (cfg_scale == 0.0) return uncond_out;
  std::vector<double> out(cond_out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = uncond_out[i] + cfg_scale * (cond_out[i] - uncond_out[i]);
  }
  return out;
}

ConditionMask sample_condition_mask(Rng& rng, const GuidanceConfig& cfg) {
  ConditionMask mask;
  mask.keep_text = !rng.bernoulli(cfg.drop_rate_text);
  mask.keep_mixture = !rng.bernoulli(cfg.drop_rate_mixture);
  mask.keep_imitation = !rng.bernoulli(cfg.drop_rate_imitation);
  return mask;
}

LatentSeq LatentSeq::zeros(std::size_t frames) {
  LatentSeq seq;
  seq.frames = frames;
  seq.values.assign(frames * kWidth, 0.0);
  return seq;
}

LatentSeq apply_additive_condition(const LatentSeq& noisy,
                                   const LatentSeq& condition,
                                   const FrameProjection& projection) {
  require(noisy.frames == condition.frames, Errc::kShape,
          "latent frame counts differ");
  require(noisy.values.size() == noisy.frames * LatentSeq::kWidth &&
              condition.values.size() == condition.frames * LatentSeq::kWidth,
          Errc::kShape, "latent width must be 128");
  const std::size_t width = LatentSeq::kWidth;
  require(projection.weight.empty() ||
              projection.weight.size() == width * width,
          Errc::kShape, "projection weight must be 128x128");
  require(projection.bias.empty() || projection.bias.size() == width,
          Errc::kShape, "projection bias must have width 128");

  LatentSeq out = noisy;
  for (std::size_t f = 0; f < noisy.frames; ++f) {
    const double* c = &condition.values[f * width];
    double* o = &out.values[f * width];
    for (std::size_t i = 0; i < width; ++i) {
      double projected;
      if (projection.weight.empty()) {
        projected = c[i];
      } else {
        projected = 0.0;
        const double* row = &projection.weight[i * width];
        for (std::size_t j = 0; j < width; ++j) projected += row[j] * c[j];
      }
      if (!projection.bias.empty()) projected += projection.bias[i];
      o[i] += projected;
    }
  }
  return out;
}

std::vector<double> gaussian_denoiser(const GaussianDataModel& model,
                                      const std::vector<double>& x_t,
                                      double t) {
  require(!model.mu.empty() && model.mu.size() == model.s.size(),
          Errc::kShape, "model mu and s must have matching nonzero size");
  require(x_t.size() % model.mu.size() == 0, Errc::kShape,
          "state size must be a multiple of the model dimension");
  const ScheduleEval sc = schedule_eval(t);
  const std::size_t dim = model.mu.size();

  std::vector<double> v(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double mu = model.mu[i % dim];
    const double s2 = model.s[i % dim] * model.s[i % dim];
    require(s2 > 0.0, Errc::kPrecondition, "model stddev must be positive");
    const double x0_hat = (sc.alpha * s2 * x_t[i] + sc.sigma * sc.sigma * mu) /
                          (sc.alpha * sc.alpha * s2 + sc.sigma * sc.sigma);
    const double eps_hat =
        sc.sigma > 0.0 ? (x_t[i] - sc.alpha * x0_hat) / sc.sigma : 0.0;
    v[i] = sc.alpha * eps_hat - sc.sigma * x0_hat;
  }
  return v;
}

DenoiserFn GaussianDataModel::denoiser() const {
  const GaussianDataModel model = *this;
  return [model](const std::vector<double>& x_t, double t,
                 bool /*conditioned*/) {
    return gaussian_denoiser(model, x_t, t);
  };
}

namespace {

// Guided noise estimate at (x, t): denoiser v-output (with CFG across the
// conditional and unconditional branches when requested) converted to eps.
std::vector<double> guided_eps(const DenoiserFn& denoiser,
                               const std::vector<double>& x, double t,
                               bool conditioned,
                               const GuidanceConfig& guidance) {
  std::vector<double> v;
  if (!conditioned) {
    v = denoiser(x, t, false);
  } else if (guidance.cfg_scale == 1.0) {
    v = denoiser(x, t, true);  // the uncond branch would be discarded
  } else {
    v = cfg_combine(denoiser(x, t, true), denoiser(x, t, false),
                    guidance.cfg_scale);
  }
  require(v.size() == x.size(), Errc::kShape,
          "denoiser output shape differs from its input");
  return eps_from_v(x, v, t);
}

}  // namespace

std::vector<double> dpm_solver_step(const std::vector<double>& x_t, double t,
                                    double s, const DenoiserFn& denoiser,
                                    int order, bool conditioned,
                                    const GuidanceConfig& guidance) {
  require(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0, Errc::kDomain,
          "step times must lie in [0, 1]");
  require(s <= t, Errc::kDomain, "step must move toward t = 0 (s <= t)");
  require(order == 1 || order == 2, Errc::kInvalidArgument,
          "solver order must be 1 or 2");
  if (s == t) return x_t;

  const ScheduleEval at = schedule_eval(t);
  const ScheduleEval as = schedule_eval(s);
  const double h = as.lambda - at.lambda;

  std::vector<double> eps = guided_eps(denoiser, x_t, t, conditioned, guidance);
  if (order == 2) {
    // Midpoint evaluation at the log-SNR midpoint state.
    const double lambda_mid = at.lambda + h / 2.0;
    const double t_mid = lambda_to_time(lambda_mid);
    const ScheduleEval am = schedule_eval(t_mid);
    std::vector<double> u(x_t.size());
    const double ratio_mid = am.alpha / at.alpha;
    const double coef_mid = am.sigma * std::expm1(h / 2.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = ratio_mid * x_t[i] - coef_mid * eps[i];
    }
    eps = guided_eps(denoiser, u, t_mid, conditioned, guidance);
  }

  const double ratio = as.alpha / at.alpha;
  const double coef = as.sigma * std::expm1(h);
  std::vector<double> x_s(x_t.size());
  for (std::size_t i = 0; i < x_s.size(); ++i) {
    x_s[i] = ratio * x_t[i] - coef * eps[i];
  }
  return x_s;
}

std::vector<double> sample_chain(const DenoiserFn& denoiser, std::size_t dim,
                                 Rng& rng, const SampleOptions& options) {
  require(options.steps >= 1, Errc::kPrecondition, "steps must be >= 1");
  std::vector<double> x(dim);
  for (auto& value : x) value = rng.normal();

  // Uniform-in-t grid with endpoint clipping against the lambda
  // singularities; the interpolation form lands on both endpoints exactly.
  const double t_start = 1.0 - kTimeClip;
  const double t_end = kTimeClip;
  auto grid = [&](int k) {
    const double u = static_cast<double>(k) / options.steps;
    return t_start * (1.0 - u) + t_end * u;
  };
  for (int k = 0; k < options.steps; ++k) {
    x = dpm_solver_step(x, grid(k), grid(k + 1), denoiser, options.order,
                        options.conditioned, options.guidance);
  }
  return x;
}

LatentSeq sample(const DenoiserFn& denoiser, std::size_t frames, Rng& rng,
                 const SampleOptions& options) {
  LatentSeq seq;
  seq.frames = frames;
  seq.values = sample_chain(denoiser, frames * LatentSeq::kWidth, rng, options);
  return seq;
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, Errc::kDomain, "quantile needs p in (0, 1)");
  // Acklam's rational approximation, |relative error| < 1.2e-9.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double q, r;
  if (p < p_low) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double wasserstein2_to_gaussian(std::vector<double> samples, double mu,
                                double s) {
  require(!samples.empty(), Errc::kPrecondition, "no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    const double target = mu + s * normal_quantile(p);
    const double d = samples[i] - target;
    acc += d * d;
  }
  return std::sqrt(acc / n);
}

}  // namespace sepbench
