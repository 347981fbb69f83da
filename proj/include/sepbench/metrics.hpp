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

#ifndef SEPBENCH_METRICS_HPP_
#define SEPBENCH_METRICS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sepbench/audio.hpp"
#include "sepbench/scene.hpp"
#include "sepbench/spectro.hpp"

namespace sepbench {

// SDR values are capped here so aggregates stay finite when the residual
// vanishes.
constexpr double kSdrCapDb = 100.0;

// Activity framing defaults (~23 ms frames, ~12 ms hop at 44.1 kHz) and
// the decision threshold.
constexpr std::size_t kActivityFrameLen = 1024;
constexpr std::size_t kActivityHopLen = 512;
constexpr double kActivityThreshold = 0.01;

// 10*log10(sum ref^2 / sum (ref-est)^2), capped at +100 dB.
double sdr(const AudioClip& est, const AudioClip& ref);

// sdr(est, ref) - sdr(mix, ref); exactly 0 when est == mix.
double sdri(const AudioClip& est, const AudioClip& ref, const AudioClip& mix);

// Default resolution ladder for the multi-resolution Mel distance:
// windows 64..2048, hop window/4, mel counts {8,16,32,64,128,128}.
std::vector<SpectroConfig> default_mel_resolutions();

// Mean over resolutions of the RMS difference between log-Mel matrices.
double mel_l2_multires(const AudioClip& a, const AudioClip& b,
                       const std::vector<SpectroConfig>& resolutions =
                           default_mel_resolutions());

// Frame-activity decisions from thresholded frame RMS. The comparison is
// made at single precision so an amplitude written as float 0.01 counts
// as active against the 0.01 threshold.
struct ActivitySequence {
  std::vector<bool> frames;
  std::size_t frame_len = kActivityFrameLen;
  std::size_t hop_len = kActivityHopLen;
  double threshold = kActivityThreshold;
};

ActivitySequence activity_sequence(const AudioClip& clip,
                                   double threshold = kActivityThreshold,
                                   std::size_t frame_len = kActivityFrameLen,
                                   std::size_t hop_len = kActivityHopLen);

// F1 agreement between the activity sequences of estimate and reference;
// two all-inactive sequences score 1.0.
double f1_decision_error(const AudioClip& est, const AudioClip& ref,
                         double threshold = kActivityThreshold,
                         std::size_t frame_len = kActivityFrameLen,
                         std::size_t hop_len = kActivityHopLen);

// N x D row-major embedding matrix with provenance tag.
struct EmbeddingSet {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> values;
  std::string source_tag;

  double at(std::size_t row, std::size_t col) const {
    return values[row * dim + col];
  }
};

// Raw float32 payload plus JSON sidecar {dtype, shape, layout, endianness}
// at <path>.json.
EmbeddingSet load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingSet& set, const std::string& path);

// dot(a,b) / (|a| |b|); errors on zero vectors.
double cosine_score(std::span<const float> a, std::span<const float> b);

// Frechet distance between Gaussians fitted to the two sets:
// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2), sample
// covariances (divisor N-1), symmetric eigendecompositions with negative
// eigenvalues clamped to zero.
double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b);

// Per-scene metric map plus aggregates; non-finite values are counted and
// excluded from means, never silently dropped.
struct EvalReport {
  std::map<std::string, std::map<std::string, double>> per_item;
  struct Aggregate {
    double mean = 0.0;
    std::size_t count = 0;
    std::size_t nonfinite = 0;
  };
  std::map<std::string, Aggregate> aggregates;
  std::vector<std::string> skipped;  // scenes without usable estimates
};

struct EvaluateOptions {
  std::set<std::string> metrics;  // sdri, mel, f1, clap, clapa, fad
  std::string estimates_dir;
  std::string ref_embeddings;   // file or directory of <id>.emb
  std::string est_embeddings;
  std::string text_embeddings;
};

EvalReport evaluate_manifest(const Manifest& manifest,
                             const EvaluateOptions& options);

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace sepbench

#endif  // SEPBENCH_METRICS_HPP_
