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

#include "sepbench/spectro.hpp"

#include <algorithm>
#include <cmath>

#include "sepbench/errors.hpp"
#include "sepbench/parallel.hpp"

namespace sepbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. inverse=true omits the 1/N
// scaling (callers apply it).
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> step(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
}

void validate_stft_config(const SpectroConfig& cfg) {
  require(is_power_of_two(cfg.window_len), Errc::kConfig,
          "window_len must be a power of two");
  require(cfg.hop_len >= 1 && cfg.hop_len <= cfg.window_len, Errc::kConfig,
          "hop_len must satisfy 0 < hop <= window");
  require(cfg.window_fn == "hann" || cfg.window_fn == "rect", Errc::kConfig,
          "unknown window function: " + cfg.window_fn);
}

void frame_into(const AudioClip& clip, std::int64_t start,
                const std::vector<double>& window,
                std::vector<std::complex<double>>& out) {
  const std::int64_t len = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t w = static_cast<std::int64_t>(window.size());
  for (std::int64_t i = 0; i < w; ++i) {
    const std::int64_t idx = start + i;
    const double v = idx >= 0 && idx < len
                         ? static_cast<double>(
                               clip.samples[static_cast<std::size_t>(idx)])
                         : 0.0;
    out[static_cast<std::size_t>(i)] =
        std::complex<double>(v * window[static_cast<std::size_t>(i)], 0.0);
  }
}

// Frames are shifted left by (window - hop) so every sample, including the
// first hop, is covered by a full complement of overlapping windows. The
// overlap-add divisor then never becomes small, which keeps resynthesis of
// modified (masked) spectrograms bounded while reconstruction of untouched
// spectrograms stays exact.
std::int64_t frame_pad(const SpectroConfig& cfg) {
  return static_cast<std::int64_t>(cfg.window_len - cfg.hop_len);
}

std::size_t frame_count(std::size_t len, const SpectroConfig& cfg) {
  if (len == 0) return 0;
  const std::size_t padded = len + static_cast<std::size_t>(frame_pad(cfg));
  return (padded + cfg.hop_len - 1) / cfg.hop_len;
}

}  // namespace

std::vector<double> make_window(const SpectroConfig& cfg) {
  std::vector<double> w(cfg.window_len);
  if (cfg.window_fn == "rect") {
    std::fill(w.begin(), w.end(), 1.0);
    return w;
  }
  const double n = static_cast<double>(cfg.window_len);
  for (std::size_t i = 0; i < cfg.window_len; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * (static_cast<double>(i) + 0.5) / n));
  }
  return w;
}

Spectrogram stft(const AudioClip& clip, const SpectroConfig& cfg) {
  require(clip.mono(), Errc::kPrecondition, "stft expects a mono clip");
  validate_stft_config(cfg);

  const std::size_t len = clip.samples.size();
  const std::size_t n_frames = frame_count(len, cfg);
  Spectrogram spec;
  spec.n_frames = n_frames;
  spec.n_bins = cfg.window_len / 2 + 1;
  spec.data.assign(n_frames * spec.n_bins, {0.0, 0.0});
  if (n_frames == 0) return spec;

  const std::vector<double> window = make_window(cfg);
  const std::int64_t pad = frame_pad(cfg);
  parallel_for(static_cast<std::int64_t>(n_frames), [&](std::int64_t k) {
    std::vector<std::complex<double>> buf(cfg.window_len);
    frame_into(clip, k * static_cast<std::int64_t>(cfg.hop_len) - pad, window,
               buf);
    fft_radix2(buf, false);
    std::complex<double>* row = &spec.at(static_cast<std::size_t>(k), 0);
    for (std::size_t b = 0; b < spec.n_bins; ++b) row[b] = buf[b];
  });
  return spec;
}

AudioClip istft(const Spectrogram& spec, const SpectroConfig& cfg,
                int sample_rate, std::size_t output_len) {
  validate_stft_config(cfg);
  require(spec.n_bins == cfg.window_len / 2 + 1, Errc::kShape,
          "spectrogram bins do not match the window length");

  const std::vector<double> window = make_window(cfg);
  const std::size_t w = cfg.window_len;
  const std::int64_t pad = frame_pad(cfg);
  std::vector<double> acc(output_len, 0.0);
  std::vector<double> norm(output_len, 0.0);

  std::vector<std::complex<double>> buf(w);
  for (std::size_t k = 0; k < spec.n_frames; ++k) {
    // Rebuild the full conjugate-symmetric spectrum from the stored half.
    for (std::size_t b = 0; b < spec.n_bins; ++b) buf[b] = spec.at(k, b);
    for (std::size_t b = spec.n_bins; b < w; ++b) {
      buf[b] = std::conj(spec.at(k, w - b));
    }
    fft_radix2(buf, true);
    const std::int64_t start =
        static_cast<std::int64_t>(k * cfg.hop_len) - pad;
    for (std::size_t i = 0; i < w; ++i) {
      const std::int64_t idx = start + static_cast<std::int64_t>(i);
      if (idx < 0 || idx >= static_cast<std::int64_t>(output_len)) continue;
      const double sample = buf[i].real() / static_cast<double>(w);
      acc[static_cast<std::size_t>(idx)] += sample * window[i];
      norm[static_cast<std::size_t>(idx)] += window[i] * window[i];
    }
  }

  AudioClip out;
  out.sample_rate = sample_rate;
  out.channels = 1;
  out.samples.resize(output_len, 0.0f);
  for (std::size_t i = 0; i < output_len; ++i) {
    out.samples[i] = norm[i] > 0.0
                         ? static_cast<float>(acc[i] / norm[i])
                         : 0.0f;
  }
  return out;
}

double MelFilterbank::hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double MelFilterbank::mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(const SpectroConfig& cfg, int sample_rate) {
  require(cfg.n_mels >= 1, Errc::kConfig, "n_mels must be >= 1");
  const double nyquist = sample_rate / 2.0;
  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : nyquist;
  require(cfg.fmin >= 0.0 && cfg.fmin < fmax && fmax <= nyquist + 1e-9,
          Errc::kConfig, "mel range must satisfy 0 <= fmin < fmax <= rate/2");

  const std::size_t n_bins = cfg.window_len / 2 + 1;
  const double bin_hz =
      static_cast<double>(sample_rate) / static_cast<double>(cfg.window_len);
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(fmax);

  filters_.resize(cfg.n_mels);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = mel_to_hz(mel_lo + (mel_hi - mel_lo) *
                                               static_cast<double>(m) /
                                               static_cast<double>(cfg.n_mels + 1));
    const double center = mel_to_hz(mel_lo + (mel_hi - mel_lo) *
                                                 static_cast<double>(m + 1) /
                                                 static_cast<double>(cfg.n_mels + 1));
    const double right = mel_to_hz(mel_lo + (mel_hi - mel_lo) *
                                                static_cast<double>(m + 2) /
                                                static_cast<double>(cfg.n_mels + 1));
    Filter f;
    bool started = false;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double hz = static_cast<double>(b) * bin_hz;
      double weight = 0.0;
      if (hz > left && hz < right) {
        weight = hz <= center ? (hz - left) / (center - left)
                              : (right - hz) / (right - center);
      }
      if (weight > 0.0) {
        if (!started) {
          f.first_bin = b;
          started = true;
        }
        f.weights.push_back(weight);
      } else if (started) {
        break;
      }
    }
    require(started, Errc::kConfig,
            "mel filter " + std::to_string(m) +
                " has no nonzero weight; reduce n_mels or enlarge the window");
    filters_[m] = std::move(f);
  }
}

double MelFilterbank::apply(const std::complex<double>* frame,
                            std::size_t mel) const {
  const Filter& f = filters_[mel];
  double acc = 0.0;
  for (std::size_t i = 0; i < f.weights.size(); ++i) {
    acc += f.weights[i] * std::abs(frame[f.first_bin + i]);
  }
  return acc;
}

MelMatrix mel_spectrogram(const AudioClip& clip, const SpectroConfig& cfg) {
  const Spectrogram spec = stft(clip, cfg);
  const MelFilterbank bank(cfg, clip.sample_rate);

  MelMatrix mel;
  mel.n_frames = spec.n_frames;
  mel.n_mels = cfg.n_mels;
  mel.data.resize(mel.n_frames * mel.n_mels);
  parallel_for(static_cast<std::int64_t>(spec.n_frames), [&](std::int64_t k) {
    const std::complex<double>* row = &spec.at(static_cast<std::size_t>(k), 0);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      mel.data[static_cast<std::size_t>(k) * cfg.n_mels + m] =
          std::log(cfg.log_floor + bank.apply(row, m));
    }
  });
  return mel;
}

namespace reference {

std::vector<std::complex<double>> naive_dft(const std::vector<double>& input) {
  const std::size_t n = input.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double angle =
          -2.0 * kPi * static_cast<double>(k) * static_cast<double>(j) /
          static_cast<double>(n);
      acc += input[j] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

Spectrogram stft_serial(const AudioClip& clip, const SpectroConfig& cfg) {
  require(clip.mono(), Errc::kPrecondition, "stft expects a mono clip");
  const std::int64_t len = static_cast<std::int64_t>(clip.samples.size());
  const std::size_t n_frames = frame_count(clip.samples.size(), cfg);
  Spectrogram spec;
  spec.n_frames = n_frames;
  spec.n_bins = cfg.window_len / 2 + 1;
  spec.data.assign(n_frames * spec.n_bins, {0.0, 0.0});

  const std::vector<double> window = make_window(cfg);
  const std::int64_t pad = frame_pad(cfg);
  std::vector<double> frame(cfg.window_len);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::int64_t start =
        static_cast<std::int64_t>(k * cfg.hop_len) - pad;
    for (std::size_t i = 0; i < cfg.window_len; ++i) {
      const std::int64_t idx = start + static_cast<std::int64_t>(i);
      frame[i] = idx >= 0 && idx < len
                     ? static_cast<double>(
                           clip.samples[static_cast<std::size_t>(idx)]) *
                           window[i]
                     : 0.0;
    }
    const auto full = naive_dft(frame);
    for (std::size_t b = 0; b < spec.n_bins; ++b) spec.at(k, b) = full[b];
  }
  return spec;
}

}  // namespace reference

}  // namespace sepbench
