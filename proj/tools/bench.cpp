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

// Kernel benchmark: times the serial path (thread budget 1, plus the
// naive-DFT reference where one exists) against the OpenMP path and checks
// that both produce bit-identical results. Exits nonzero on any mismatch.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "sepbench/audio.hpp"
#include "sepbench/curves.hpp"
#include "sepbench/diffusion.hpp"
#include "sepbench/metrics.hpp"
#include "sepbench/parallel.hpp"
#include "sepbench/rng.hpp"
#include "sepbench/spectro.hpp"

using namespace sepbench;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

AudioClip noise_clip(double duration_s, int rate, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n =
      static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<float> samples(n);
  for (auto& s : samples) {
    s = static_cast<float>(0.4 * (2.0 * rng.uniform() - 1.0));
  }
  return make_mono(std::move(samples), rate);
}

int failures = 0;

template <typename Fn>
double timed(Fn&& fn) {
  const double start = now_ms();
  fn();
  return now_ms() - start;
}

void report(const std::string& kernel, double serial_ms, double parallel_ms,
            bool identical, const char* ok_label = "bit-identical") {
  std::printf("%-28s %10.1f ms %10.1f ms %8.2fx   %s\n", kernel.c_str(),
              serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0,
              identical ? ok_label : "MISMATCH");
  if (!identical) ++failures;
}

bool same(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  const double scale = quick ? 0.25 : 1.0;

  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  // Resampler.
  {
    const AudioClip clip = noise_clip(8.0 * scale, 44100, 1);
    AudioClip serial_out, parallel_out;
    set_threads(1);
    const double t_serial = timed([&] { serial_out = resample(clip, 48000); });
    set_threads(0);
    const double t_parallel =
        timed([&] { parallel_out = resample(clip, 48000); });
    report("resample 44.1k->48k", t_serial, t_parallel,
           same(serial_out.samples, parallel_out.samples));
  }

  // STFT (FFT path), serial budget vs full budget.
  {
    const AudioClip clip = noise_clip(16.0 * scale, 44100, 2);
    SpectroConfig cfg;
    cfg.window_len = 2048;
    cfg.hop_len = 512;
    Spectrogram serial_spec, parallel_spec;
    set_threads(1);
    const double t_serial = timed([&] { serial_spec = stft(clip, cfg); });
    set_threads(0);
    const double t_parallel = timed([&] { parallel_spec = stft(clip, cfg); });
    const bool identical =
        serial_spec.data.size() == parallel_spec.data.size() &&
        std::memcmp(serial_spec.data.data(), parallel_spec.data.data(),
                    serial_spec.data.size() * sizeof(serial_spec.data[0])) ==
            0;
    report("stft 2048/512", t_serial, t_parallel, identical);

    // Naive-DFT reference against the FFT path (tolerance check).
    SpectroConfig small = cfg;
    small.window_len = 512;
    small.hop_len = 128;
    AudioClip short_clip = clip;
    short_clip.samples.resize(static_cast<std::size_t>(44100 * scale));
    Spectrogram fast;
    set_threads(0);
    const double t_fast = timed([&] { fast = stft(short_clip, small); });
    Spectrogram naive;
    const double t_naive =
        timed([&] { naive = reference::stft_serial(short_clip, small); });
    double worst = 0.0;
    for (std::size_t i = 0; i < fast.data.size(); ++i) {
      worst = std::max(worst, std::abs(fast.data[i] - naive.data[i]));
    }
    report("stft vs naive-DFT oracle", t_naive, t_fast, worst <= 1e-8,
           "within 1e-8");
  }

  // Multi-resolution Mel distance.
  {
    const AudioClip a = noise_clip(4.0 * scale, 44100, 3);
    AudioClip b = a;
    for (auto& s : b.samples) s *= 0.8f;
    double serial_value = 0.0, parallel_value = 0.0;
    set_threads(1);
    const double t_serial =
        timed([&] { serial_value = mel_l2_multires(a, b); });
    set_threads(0);
    const double t_parallel =
        timed([&] { parallel_value = mel_l2_multires(a, b); });
    report("mel_l2 multi-resolution", t_serial, t_parallel,
           serial_value == parallel_value);
  }

  // Control curves.
  {
    const AudioClip clip = noise_clip(12.0 * scale, 44100, 4);
    ControlCurves serial_curves, parallel_curves;
    set_threads(1);
    const double t_serial =
        timed([&] { serial_curves = extract_curves(clip, 9); });
    set_threads(0);
    const double t_parallel =
        timed([&] { parallel_curves = extract_curves(clip, 9); });
    report("rms+pitch curves", t_serial, t_parallel,
           same(serial_curves.rms, parallel_curves.rms) &&
               same(serial_curves.pitch_hz, parallel_curves.pitch_hz));
  }

  // Diffusion sampling chains.
  {
    GaussianDataModel model;
    model.mu = {3.0};
    model.s = {0.5};
    const DenoiserFn denoiser = model.denoiser();
    SampleOptions options;
    options.steps = 25;
    options.order = 2;
    const std::size_t chains =
        static_cast<std::size_t>(20000 * scale);
    std::vector<double> serial_samples(chains), parallel_samples(chains);
    auto run = [&](std::vector<double>& out) {
      parallel_for(static_cast<std::int64_t>(chains), [&](std::int64_t i) {
        Rng rng = Rng::derive(9, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] =
            sample_chain(denoiser, 1, rng, options)[0];
      });
    };
    set_threads(1);
    const double t_serial = timed([&] { run(serial_samples); });
    set_threads(0);
    const double t_parallel = timed([&] { run(parallel_samples); });
    report("dpm sampling 25x2", t_serial, t_parallel,
           same(serial_samples, parallel_samples));
  }

  if (failures > 0) {
    std::fprintf(stderr, "%d kernel(s) diverged between paths\n", failures);
    return 1;
  }
  return 0;
}
