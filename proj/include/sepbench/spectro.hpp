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

#ifndef SEPBENCH_SPECTRO_HPP_
#define SEPBENCH_SPECTRO_HPP_

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "sepbench/audio.hpp"

namespace sepbench {

// Analysis parameters shared by the STFT and Mel front ends.
// The Hann taper is evaluated at half-sample centers, w[i] =
// 0.5*(1 - cos(2*pi*(i+0.5)/N)), which is COLA-compatible and strictly
// positive, so overlap-add reconstruction is exact at the clip edges too.
struct SpectroConfig {
  std::size_t window_len = 1024;
  std::size_t hop_len = 256;  // window/4 default
  std::string window_fn = "hann";
  std::size_t n_mels = 64;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 = sample_rate / 2
  double log_floor = 1e-5;
};

// Frames x bins, row-major; bins = window/2 + 1.
struct Spectrogram {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(std::size_t frame, std::size_t bin) {
    return data[frame * n_bins + bin];
  }
  const std::complex<double>& at(std::size_t frame, std::size_t bin) const {
    return data[frame * n_bins + bin];
  }
};

// Frames x n_mels, row-major.
struct MelMatrix {
  std::size_t n_frames = 0;
  std::size_t n_mels = 0;
  std::vector<double> data;
};

std::vector<double> make_window(const SpectroConfig& cfg);

// Short-time transform over frames starting at k*hop - (window - hop):
// the left shift gives every sample, the first hop included, a full set of
// overlapping windows, so masked resynthesis stays bounded. Tail frames
// are zero-padded; frame count ceil((len + window - hop) / hop). Window
// length must be a power of two.
Spectrogram stft(const AudioClip& clip, const SpectroConfig& cfg);

// Weighted overlap-add inverse with per-sample synthesis-window
// normalization; reconstructs output_len samples.
AudioClip istft(const Spectrogram& spec, const SpectroConfig& cfg,
                int sample_rate, std::size_t output_len);

// Triangular filters on the HTK Mel scale over [fmin, fmax].
class MelFilterbank {
 public:
  MelFilterbank(const SpectroConfig& cfg, int sample_rate);

  std::size_t n_mels() const { return filters_.size(); }
  // Weighted sum of magnitude bins for one mel band.
  double apply(const std::complex<double>* frame, std::size_t mel) const;

  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  struct Filter {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };
  std::vector<Filter> filters_;
};

// log(log_floor + sum_bins weight * |STFT|), per frame and mel band.
MelMatrix mel_spectrogram(const AudioClip& clip, const SpectroConfig& cfg);

namespace reference {

// Serial O(n^2) DFT used as an oracle for the radix-2 path and as the
// baseline side of the kernel benchmark.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& input);

// STFT built on naive_dft, single-threaded.
Spectrogram stft_serial(const AudioClip& clip, const SpectroConfig& cfg);

}  // namespace reference

}  // namespace sepbench

#endif  // SEPBENCH_SPECTRO_HPP_
