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

#ifndef SEPBENCH_AUDIO_HPP_
#define SEPBENCH_AUDIO_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sepbench {

// Uniformly sampled waveform. Samples are stored planar (all of channel 0,
// then channel 1) in float32, nominal range [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  int channels = 1;

  std::size_t frames() const {
    return channels > 0 ? samples.size() / static_cast<std::size_t>(channels)
                        : 0;
  }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
  }
  bool mono() const { return channels == 1; }
  std::span<const float> channel(int c) const {
    return std::span<const float>(samples).subspan(
        static_cast<std::size_t>(c) * frames(), frames());
  }
};

AudioClip make_mono(std::vector<float> samples, int sample_rate);

enum class WavEncoding { kPcm16, kFloat32 };

// WAV header metadata without the payload.
struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  std::size_t frames = 0;
  int bits_per_sample = 0;
};

// RIFF/WAVE reader for PCM-16, PCM-24 and 32-bit float, little-endian.
// Amplitudes are scaled to [-1, 1] (integer full scale 2^(bits-1)).
AudioClip read_wav(const std::string& path);
WavInfo read_wav_info(const std::string& path);

// Writes PCM-16 (round to nearest, clamped) or float32 (bit-exact).
void write_wav(const AudioClip& clip, const std::string& path,
               WavEncoding encoding = WavEncoding::kFloat32);

// Stereo frames are averaged; mono input is returned unchanged.
AudioClip downmix_mono(const AudioClip& clip);

// Band-limited rate conversion with a Kaiser-windowed sinc kernel.
// Output length is round(len * target_rate / source_rate).
AudioClip resample(const AudioClip& clip, int target_rate);

// Frame-wise RMS with a zero-padded final frame; frame count ceil(len/hop).
std::vector<double> rms_frames(const AudioClip& clip, std::size_t frame_len,
                               std::size_t hop_len);

double peak_amplitude(const AudioClip& clip);
double mean_square(std::span<const float> samples);
double rms(const AudioClip& clip);

// Scales the clip so the peak amplitude is at most 1; no-op otherwise.
// Returns the factor applied (1.0 when nothing was done).
double normalize_peak(AudioClip& clip);

}  // namespace sepbench

#endif  // SEPBENCH_AUDIO_HPP_
