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

#ifndef SEPBENCH_BASELINE_HPP_
#define SEPBENCH_BASELINE_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "sepbench/audio.hpp"
#include "sepbench/scene.hpp"
#include "sepbench/spectro.hpp"

namespace sepbench {

// Separation front end: 2048-sample Hann window, hop 512.
SpectroConfig separation_stft_config();

// Time-frequency mask, frames x bins, entries in [0, 1].
struct TFMask {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<double> values;

  double at(std::size_t frame, std::size_t bin) const {
    return values[frame * n_bins + bin];
  }
};

// Ideal ratio mask from ground-truth stem magnitudes:
// sum_target |S| / (sum_all |S| + floor), clamped to [0, 1].
TFMask irm_mask(const std::vector<Spectrogram>& stem_spectrograms,
                const std::vector<std::size_t>& target_indices,
                double floor = 1e-8);

// Masked resynthesis with the mixture phase; output length matches input.
AudioClip apply_mask(const AudioClip& mixture, const TFMask& mask,
                     const SpectroConfig& cfg);

enum class SeparateMethod { kIrm, kGate };

// Ground-truth-driven separation of a rendered scene: IRM over the
// operator's stem subset, or spectral gating against the complement.
AudioClip oracle_separate(const MixtureScene& scene, SeparationOp op,
                          const EventPool& pool,
                          SeparateMethod method = SeparateMethod::kIrm);

// Same entry point over pre-rendered material (manifest-driven runs).
AudioClip oracle_separate_rendered(const AudioClip& mixture,
                                   const std::vector<AudioClip>& stems,
                                   const std::vector<std::size_t>& targets,
                                   SeparationOp op, SeparateMethod method);

// Magnitude spectral subtraction: per-bin gain
// max(floor, 1 - over_subtraction * mean_noise_mag / |X|).
AudioClip spectral_gate(const AudioClip& mixture,
                        const AudioClip& noise_profile,
                        double over_subtraction = 1.0, double floor = 0.05);

}  // namespace sepbench

#endif  // SEPBENCH_BASELINE_HPP_
