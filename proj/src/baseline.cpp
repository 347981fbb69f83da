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

#include "sepbench/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "sepbench/errors.hpp"

namespace sepbench {

SpectroConfig separation_stft_config() {
  SpectroConfig cfg;
  cfg.window_len = 2048;
  cfg.hop_len = 512;
  return cfg;
}

TFMask irm_mask(const std::vector<Spectrogram>& stem_spectrograms,
                const std::vector<std::size_t>& target_indices,
                double floor) {
  require(!stem_spectrograms.empty(), Errc::kPrecondition,
          "no stem spectrograms");
  const std::size_t n_frames = stem_spectrograms[0].n_frames;
  const std::size_t n_bins = stem_spectrograms[0].n_bins;
  for (const auto& spec : stem_spectrograms) {
    require(spec.n_frames == n_frames && spec.n_bins == n_bins, Errc::kShape,
            "stem spectrogram shapes differ");
  }
  std::vector<bool> is_target(stem_spectrograms.size(), false);
  for (const std::size_t t : target_indices) {
    require(t < stem_spectrograms.size(), Errc::kShape,
            "target index out of range");
    is_target[t] = true;
  }

  TFMask mask;
  mask.n_frames = n_frames;
  mask.n_bins = n_bins;
  mask.values.resize(n_frames * n_bins);
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    double target_mag = 0.0;
    double total_mag = 0.0;
    for (std::size_t k = 0; k < stem_spectrograms.size(); ++k) {
      const double mag = std::abs(stem_spectrograms[k].data[i]);
      total_mag += mag;
      if (is_target[k]) target_mag += mag;
    }
    mask.values[i] = std::clamp(target_mag / (total_mag + floor), 0.0, 1.0);
  }
  return mask;
}

AudioClip apply_mask(const AudioClip& mixture, const TFMask& mask,
                     const SpectroConfig& cfg) {
  Spectrogram spec = stft(mixture, cfg);
  require(spec.n_frames == mask.n_frames && spec.n_bins == mask.n_bins,
          Errc::kShape, "mask shape does not match the mixture spectrogram");
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    spec.data[i] *= mask.values[i];
  }
  return istft(spec, cfg, mixture.sample_rate, mixture.samples.size());
}

AudioClip oracle_separate_rendered(const AudioClip& mixture,
                                   const std::vector<AudioClip>& stems,
                                   const std::vector<std::size_t>& targets,
                                   SeparationOp op, SeparateMethod method) {
  require(!stems.empty(), Errc::kPrecondition, "ground-truth stems required");
  // The operator decides which subset the estimate should keep.
  std::vector<std::size_t> keep;
  if (op == SeparationOp::kExtract) {
    keep = targets;
  } else {
    std::vector<bool> is_target(stems.size(), false);
    for (const std::size_t t : targets) is_target[t] = true;
    for (std::size_t k = 0; k < stems.size(); ++k) {
      if (!is_target[k]) keep.push_back(k);
    }
    require(!keep.empty(), Errc::kInvalidArgument,
            "removal of every stem leaves nothing to estimate");
  }

  const SpectroConfig cfg = separation_stft_config();
  if (method == SeparateMethod::kIrm) {
    std::vector<Spectrogram> specs;
    specs.reserve(stems.size());
    for (const auto& stem : stems) specs.push_back(stft(stem, cfg));
    const TFMask mask = irm_mask(specs, keep);
    return apply_mask(mixture, mask, cfg);
  }

  // Spectral gate: the complement of the kept subset is the noise profile.
  AudioClip profile;
  profile.sample_rate = mixture.sample_rate;
  profile.channels = 1;
  profile.samples.assign(mixture.samples.size(), 0.0f);
  std::vector<bool> kept(stems.size(), false);
  for (const std::size_t k : keep) kept[k] = true;
  for (std::size_t k = 0; k < stems.size(); ++k) {
    if (kept[k]) continue;
    for (std::size_t i = 0; i < profile.samples.size(); ++i) {
      profile.samples[i] += stems[k].samples[i];
    }
  }
  return spectral_gate(mixture, profile);
}

AudioClip oracle_separate(const MixtureScene& scene, SeparationOp op,
                          const EventPool& pool, SeparateMethod method) {
  const SceneRender render = render_scene(scene, pool);
  return oracle_separate_rendered(render.mixture, render.stem_contributions,
                                  scene.target_indices, op, method);
}

AudioClip spectral_gate(const AudioClip& mixture,
                        const AudioClip& noise_profile,
                        double over_subtraction, double floor) {
  require(mixture.mono() && noise_profile.mono(), Errc::kPrecondition,
          "spectral_gate expects mono clips");
  require(mean_square(noise_profile.samples) > 0.0, Errc::kDegenerateSignal,
          "noise profile is silent");

  const SpectroConfig cfg = separation_stft_config();
  const Spectrogram noise_spec = stft(noise_profile, cfg);
  std::vector<double> noise_mean(noise_spec.n_bins, 0.0);
  for (std::size_t f = 0; f < noise_spec.n_frames; ++f) {
    for (std::size_t b = 0; b < noise_spec.n_bins; ++b) {
      noise_mean[b] += std::abs(noise_spec.at(f, b));
    }
  }
  for (auto& v : noise_mean) {
    v /= std::max<std::size_t>(1, noise_spec.n_frames);
  }

  Spectrogram spec = stft(mixture, cfg);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    for (std::size_t b = 0; b < spec.n_bins; ++b) {
      const double mag = std::abs(spec.at(f, b));
      const double gain =
          mag > 0.0
              ? std::max(floor, 1.0 - over_subtraction * noise_mean[b] / mag)
              : floor;
      spec.at(f, b) *= gain;
    }
  }
  return istft(spec, cfg, mixture.sample_rate, mixture.samples.size());
}

}  // namespace sepbench
