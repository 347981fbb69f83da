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

#include "sepbench/curves.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sepbench/errors.hpp"
#include "sepbench/parallel.hpp"
#include "sepbench/scene.hpp"

using nlohmann::json;

namespace sepbench {

AudioClip time_shift(const AudioClip& clip, double shift_s) {
  require(clip.mono(), Errc::kPrecondition, "time_shift expects mono");
  require(std::fabs(shift_s) <= clip.duration_s() + 1e-12, Errc::kPrecondition,
          "|shift| must not exceed the clip duration");
  const std::int64_t len = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t shift =
      std::llround(shift_s * static_cast<double>(clip.sample_rate));

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.channels = 1;
  out.samples.assign(clip.samples.size(), 0.0f);
  for (std::int64_t i = 0; i < len; ++i) {
    const std::int64_t src = i - shift;
    if (src >= 0 && src < len) {
      out.samples[static_cast<std::size_t>(i)] =
          clip.samples[static_cast<std::size_t>(src)];
    }
  }
  return out;
}

AudioClip pitch_shift(const AudioClip& clip, double semitones) {
  require(clip.mono(), Errc::kPrecondition, "pitch_shift expects mono");
  require(std::fabs(semitones) <= 12.0, Errc::kPrecondition,
          "pitch shift limited to +-12 semitones");
  if (semitones == 0.0) return clip;

  const double factor = std::pow(2.0, semitones / 12.0);
  // Playing the clip back `factor` times faster raises every frequency by
  // the same factor: resample to rate/factor, then relabel at the original
  // rate and fix the length.
  const int intermediate_rate = std::max(
      1, static_cast<int>(std::lround(clip.sample_rate / factor)));
  AudioClip shifted = resample(clip, intermediate_rate);
  shifted.sample_rate = clip.sample_rate;
  shifted.samples.resize(clip.samples.size(), 0.0f);
  return shifted;
}

AudioClip add_ambient_noise(const AudioClip& clip, const AudioClip& noise,
                            double snr_db, Rng& rng) {
  require(clip.mono() && noise.mono(), Errc::kPrecondition,
          "add_ambient_noise expects mono clips");
  require(!noise.samples.empty(), Errc::kPrecondition, "noise clip is empty");
  const double signal_power = mean_square(clip.samples);
  require(signal_power > 0.0, Errc::kDegenerateSignal,
          "cannot set a noise SNR against a silent clip");

  // Circular segment: a random start decorrelates the noise from the clip
  // and lets short profiles loop.
  const std::size_t noise_len = noise.samples.size();
  const std::size_t start = rng.below(noise_len);
  std::vector<float> segment(clip.samples.size());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    segment[i] = noise.samples[(start + i) % noise_len];
  }
  const double noise_power = mean_square(segment);
  require(noise_power > 0.0, Errc::kDegenerateSignal,
          "selected noise segment is silent");
  const float gain =
      static_cast<float>(snr_gain(signal_power, noise_power, snr_db));

  AudioClip out = clip;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] += gain * segment[i];
  }
  return out;
}

namespace {

// 40 Hz frame grid. Frame starts use exact rational arithmetic so the
// curve-length law holds even when rate/40 is not an integer (44100/40 =
// 1102.5).
std::size_t curve_length(std::size_t samples, int rate) {
  if (samples == 0) return 0;
  const std::uint64_t num = static_cast<std::uint64_t>(samples) * 40ULL;
  return static_cast<std::size_t>((num + static_cast<std::uint64_t>(rate) - 1) /
                                  static_cast<std::uint64_t>(rate));
}

std::size_t frame_start(std::size_t k, int rate) {
  return static_cast<std::size_t>((static_cast<std::uint64_t>(k) *
                                   static_cast<std::uint64_t>(rate)) /
                                  40ULL);
}

}  // namespace

std::vector<float> extract_rms_curve(const AudioClip& clip) {
  require(clip.mono(), Errc::kPrecondition, "extract_rms_curve expects mono");
  const std::size_t len = clip.samples.size();
  const int rate = clip.sample_rate;
  const std::size_t n = curve_length(len, rate);
  const std::size_t frame_len = static_cast<std::size_t>(
      std::max<std::int64_t>(1, std::llround(2.0 * rate / kCurveRateHz)));

  std::vector<float> out(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t k) {
    const std::size_t start = frame_start(static_cast<std::size_t>(k), rate);
    double acc = 0.0;
    const std::size_t end = std::min(start + frame_len, len);
    for (std::size_t i = start; i < end; ++i) {
      const double v = clip.samples[i];
      acc += v * v;
    }
    out[static_cast<std::size_t>(k)] = static_cast<float>(
        std::sqrt(acc / static_cast<double>(frame_len)));
  });
  return out;
}

std::vector<float> extract_pitch_curve(const AudioClip& clip, double f_lo,
                                       double f_hi) {
  require(clip.mono(), Errc::kPrecondition,
          "extract_pitch_curve expects mono");
  const int rate = clip.sample_rate;
  require(f_lo >= 20.0 && f_lo < f_hi && f_hi <= rate / 4.0,
          Errc::kPrecondition, "pitch band must satisfy 20 <= lo < hi <= rate/4");

  const std::size_t len = clip.samples.size();
  const std::size_t n = curve_length(len, rate);
  const std::size_t tau_min = static_cast<std::size_t>(
      std::max<std::int64_t>(2, std::llround(rate / f_hi)));
  const std::size_t tau_max = static_cast<std::size_t>(
      std::llround(rate / f_lo));
  // Difference-function integration window: one maximum period, so each
  // frame reads window + tau_max samples (zero-padded past the end).
  const std::size_t window = tau_max;
  constexpr double kVoicedThreshold = 0.15;

  std::vector<float> out(n, 0.0f);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t k) {
    const std::size_t start = frame_start(static_cast<std::size_t>(k), rate);
    auto sample = [&](std::size_t i) -> double {
      const std::size_t idx = start + i;
      return idx < len ? static_cast<double>(clip.samples[idx]) : 0.0;
    };

    // Cumulative-mean normalized difference function over the lag range.
    std::vector<double> diff(tau_max + 1, 0.0);
    for (std::size_t tau = 1; tau <= tau_max; ++tau) {
      double acc = 0.0;
      for (std::size_t i = 0; i < window; ++i) {
        const double d = sample(i) - sample(i + tau);
        acc += d * d;
      }
      diff[tau] = acc;
    }
    std::vector<double> cmndf(tau_max + 1, 1.0);
    double running = 0.0;
    for (std::size_t tau = 1; tau <= tau_max; ++tau) {
      running += diff[tau];
      cmndf[tau] = running > 0.0
                       ? diff[tau] * static_cast<double>(tau) / running
                       : 1.0;
    }

    // First lag under the threshold wins; otherwise the global minimum.
    std::size_t best = 0;
    for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
      if (cmndf[tau] < kVoicedThreshold) {
        // Walk down to the local minimum of this dip.
        while (tau + 1 <= tau_max && cmndf[tau + 1] < cmndf[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best == 0) {
      double min_val = kVoicedThreshold;
      for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
        if (cmndf[tau] < min_val) {
          min_val = cmndf[tau];
          best = tau;
        }
      }
    }
    if (best == 0) return;  // unvoiced

    // Parabolic interpolation around the chosen lag.
    double tau_refined = static_cast<double>(best);
    if (best > tau_min && best < tau_max) {
      const double a = cmndf[best - 1];
      const double b = cmndf[best];
      const double c = cmndf[best + 1];
      const double denom = a - 2.0 * b + c;
      if (std::fabs(denom) > 1e-12) {
        tau_refined += 0.5 * (a - c) / denom;
      }
    }
    const double f0 = rate / tau_refined;
    if (f0 >= f_lo && f0 <= f_hi) {
      out[static_cast<std::size_t>(k)] = static_cast<float>(f0);
    }
  });
  return out;
}

std::vector<float> median_filter(const std::vector<float>& curve, int size) {
  require(size >= 0, Errc::kPrecondition, "median size must be >= 0");
  if (size <= 1 || curve.empty()) return curve;

  const std::int64_t n = static_cast<std::int64_t>(curve.size());
  const std::int64_t lo_off = -(size / 2);
  const std::int64_t hi_off = (size % 2 == 0) ? size / 2 - 1 : size / 2;

  std::vector<float> out(curve.size());
  std::vector<float> window(static_cast<std::size_t>(size));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = lo_off; j <= hi_off; ++j) {
      const std::int64_t idx = std::clamp<std::int64_t>(i + j, 0, n - 1);
      window[static_cast<std::size_t>(j - lo_off)] =
          curve[static_cast<std::size_t>(idx)];
    }
    std::sort(window.begin(), window.end());
    const std::size_t mid = window.size() / 2;
    out[static_cast<std::size_t>(i)] =
        window.size() % 2 == 1
            ? window[mid]
            : 0.5f * (window[mid - 1] + window[mid]);
  }
  return out;
}

ControlCurves extract_curves(const AudioClip& clip, int median_size,
                             double f_lo, double f_hi) {
  ControlCurves curves;
  curves.median_size = median_size;
  curves.rms = median_filter(extract_rms_curve(clip), median_size);
  curves.pitch_hz =
      median_filter(extract_pitch_curve(clip, f_lo, f_hi), median_size);
  return curves;
}

void write_curves(const ControlCurves& curves, const std::string& path) {
  require(curves.rms.size() == curves.pitch_hz.size(), Errc::kShape,
          "rms and pitch curves must have equal length");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::kIo, "cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(curves.rms.data()),
            static_cast<std::streamsize>(curves.rms.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(curves.pitch_hz.data()),
            static_cast<std::streamsize>(curves.pitch_hz.size() * sizeof(float)));
  out.flush();
  require(out.good(), Errc::kIo, "write failed: " + path);

  const json sidecar = {{"rate", 40},
                        {"median_size", curves.median_size},
                        {"length", curves.rms.size()}};
  std::ofstream meta(path + ".json", std::ios::trunc);
  require(meta.good(), Errc::kIo, "cannot write sidecar for " + path);
  meta << sidecar.dump() << '\n';
}

ControlCurves read_curves(const std::string& path) {
  std::ifstream meta(path + ".json");
  require(meta.good(), Errc::kIo, "missing curve sidecar: " + path + ".json");
  json sidecar;
  try {
    meta >> sidecar;
  } catch (const json::exception& e) {
    throw_error(Errc::kFormat, std::string("bad curve sidecar: ") + e.what());
  }
  const std::size_t length = sidecar.at("length").get<std::size_t>();

  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::kIo, "cannot open curve file: " + path);
  ControlCurves curves;
  curves.median_size = sidecar.value("median_size", 0);
  curves.rms.resize(length);
  curves.pitch_hz.resize(length);
  in.read(reinterpret_cast<char*>(curves.rms.data()),
          static_cast<std::streamsize>(length * sizeof(float)));
  in.read(reinterpret_cast<char*>(curves.pitch_hz.data()),
          static_cast<std::streamsize>(length * sizeof(float)));
  require(static_cast<std::size_t>(in.gcount()) == length * sizeof(float),
          Errc::kFormat, "curve payload shorter than the sidecar length");
  return curves;
}

void build_imitation_manifest(
    const std::vector<ImitationRecord>& imitations,
    const std::map<std::pair<std::string, int>, std::string>& sounds,
    const std::string& out_path) {
  std::vector<ImitationRecord> ordered = imitations;
  std::sort(ordered.begin(), ordered.end(),
            [](const ImitationRecord& a, const ImitationRecord& b) {
              return a.id < b.id;
            });

  std::ofstream out(out_path, std::ios::trunc);
  require(out.good(), Errc::kIo, "cannot write manifest: " + out_path);
  for (const auto& imitation : ordered) {
    json paths = json::array();
    for (const int size : kMedianSizes) {
      auto it = sounds.find({imitation.id, size});
      require(it != sounds.end(), Errc::kIncompletePair,
              "imitation '" + imitation.id + "' lacks the median-size-" +
                  std::to_string(size) + " variant");
      paths.push_back(it->second);
    }
    const json record = {{"imitation", imitation.path},
                         {"sounds", paths},
                         {"label", imitation.label},
                         {"split", imitation.split}};
    out << record.dump() << '\n';
  }
  out.flush();
  require(out.good(), Errc::kIo, "manifest write failed: " + out_path);
}

std::vector<ImitationPair> load_imitation_manifest(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open manifest: " + path);
  std::vector<ImitationPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw_error(Errc::kFormat, std::string("bad manifest line: ") + e.what());
    }
    ImitationPair pair;
    pair.imitation_path = record.at("imitation").get<std::string>();
    pair.sound_paths = record.at("sounds").get<std::vector<std::string>>();
    require(pair.sound_paths.size() == kMedianSizes.size(),
            Errc::kIncompletePair, "pair must list exactly 7 sound variants");
    pair.label = record.value("label", "");
    pair.split = record.value("split", "");
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace sepbench
