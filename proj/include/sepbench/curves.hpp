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

#ifndef SEPBENCH_CURVES_HPP_
#define SEPBENCH_CURVES_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "sepbench/audio.hpp"
#include "sepbench/rng.hpp"

namespace sepbench {

// Control-curve frame rate and the median-filter size ladder used to
// produce sound-effect variants.
constexpr double kCurveRateHz = 40.0;
constexpr std::array<int, 7> kMedianSizes = {0, 3, 6, 9, 12, 15, 19};

// RMS and pitch sequences on the 40 Hz grid; pitch 0 marks unvoiced
// frames. Both sequences have length ceil(duration * 40).
struct ControlCurves {
  std::vector<float> rms;
  std::vector<float> pitch_hz;
  int median_size = 0;
};

// Non-circular shift with zero fill; positive delays, negative advances.
AudioClip time_shift(const AudioClip& clip, double shift_s);

// Resampling-based shift by 2^(semitones/12) (no time-stretch
// compensation), truncated or zero-padded back to the original length.
AudioClip pitch_shift(const AudioClip& clip, double semitones);

// Adds a random circular segment of `noise`, scaled to the requested SNR.
AudioClip add_ambient_noise(const AudioClip& clip, const AudioClip& noise,
                            double snr_db, Rng& rng);

// 40 Hz RMS envelope; frame k starts at round(k*rate/40) and spans two
// hops, so the length law len == ceil(duration*40) holds for any rate.
std::vector<float> extract_rms_curve(const AudioClip& clip);

// 40 Hz fundamental-frequency track via the cumulative-mean normalized
// difference function; frames without a confident period are 0.
std::vector<float> extract_pitch_curve(const AudioClip& clip,
                                       double f_lo = 60.0,
                                       double f_hi = 1000.0);

// Sliding median with edge replication. Size 0 or 1 is the identity; an
// even size uses the left-biased window [i-size/2, i+size/2-1].
std::vector<float> median_filter(const std::vector<float>& curve, int size);

ControlCurves extract_curves(const AudioClip& clip, int median_size = 0,
                             double f_lo = 60.0, double f_hi = 1000.0);

// Curve container: raw little-endian float32, rms then pitch, with a JSON
// sidecar {rate, median_size, length} at <path>.json.
void write_curves(const ControlCurves& curves, const std::string& path);
ControlCurves read_curves(const std::string& path);

struct ImitationRecord {
  std::string id;
  std::string path;
  std::string label;
  std::string split;  // train|val|test
};

// One vocal imitation paired with its seven sound-effect variants, keyed
// by median size in kMedianSizes order.
struct ImitationPair {
  std::string imitation_path;
  std::vector<std::string> sound_paths;
  std::string label;
  std::string split;
};

// Emits JSON-lines ImitationPair records ordered by imitation id. Every
// imitation must have exactly one sound per median size.
void build_imitation_manifest(
    const std::vector<ImitationRecord>& imitations,
    const std::map<std::pair<std::string, int>, std::string>& sounds,
    const std::string& out_path);

std::vector<ImitationPair> load_imitation_manifest(const std::string& path);

}  // namespace sepbench

#endif  // SEPBENCH_CURVES_HPP_
