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

#ifndef SEPBENCH_SCENE_HPP_
#define SEPBENCH_SCENE_HPP_

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sepbench/audio.hpp"
#include "sepbench/prompts.hpp"
#include "sepbench/rng.hpp"

namespace sepbench {

// One placed sound event inside a scene. crop_start_s selects the segment
// of the (resampled) source when it is longer than the scene; offset_s
// places a shorter segment on the scene timeline.
struct Stem {
  std::string source_path;
  std::string caption;
  std::string category;
  double gain_db = 0.0;
  double offset_s = 0.0;
  double crop_start_s = 0.0;
  double duration_s = 0.0;
};

constexpr double kPerturbDisabled = std::numeric_limits<double>::infinity();

struct MixtureScene {
  std::string id;
  double duration_s = 10.0;
  int sample_rate = 44100;
  std::vector<Stem> stems;
  std::vector<std::size_t> target_indices;  // sorted, nonempty
  SeparationOp op = SeparationOp::kExtract;
  std::vector<double> snr_db_per_stem;  // stem 0 is the 0 dB reference
  std::uint64_t seed = 0;
  double perturb_snr_db = kPerturbDisabled;
  std::string prompt;
  int template_id = -1;
};

enum class TargetRule { kFirstStem, kUniformSubset };

struct DatasetPreset {
  std::string name;
  int n_events_lo = 2;
  int n_events_hi = 5;
  double snr_lo_db = -3.0;
  double snr_hi_db = 10.0;
  double duration_s = 10.0;
  int sample_rate = 44100;
  double remove_probability = 0.0;  // operator mix: P(remove)
  TargetRule target_rule = TargetRule::kFirstStem;
};

// Built-in presets: train, audiocaps, esc50, fsdmix, asfx, imitation.
const std::vector<DatasetPreset>& builtin_presets();
DatasetPreset preset_by_name(const std::string& name);

struct PoolEntry {
  std::string path;
  std::vector<std::string> captions;
  std::string category;
  // Filled at load time from the WAV header.
  std::size_t source_frames = 0;
  int source_rate = 0;
};

// Mono-at-rate clip cache shared across scene builds and renders.
class ClipCache {
 public:
  std::shared_ptr<const AudioClip> get(const std::string& path, int rate);

 private:
  std::mutex mutex_;
  std::map<std::pair<std::string, int>, std::shared_ptr<const AudioClip>>
      cache_;
};

// Catalog of candidate sound events with captions and category labels.
// Loadable from a JSON-lines file ({"path","captions","category"} records,
// paths relative to the file) or from a directory of WAVs, where the
// category is the parent directory name (file stem for flat layouts) and
// the caption is the file stem with underscores as spaces.
class EventPool {
 public:
  static EventPool load(const std::string& path);
  static EventPool from_entries(std::vector<PoolEntry> entries);

  const std::vector<PoolEntry>& entries() const { return entries_; }
  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<std::size_t>& entries_in_category(
      const std::string& category) const;
  ClipCache& cache() const { return *cache_; }

 private:
  void index();
  std::vector<PoolEntry> entries_;
  std::vector<std::string> categories_;  // sorted for deterministic draws
  std::map<std::string, std::vector<std::size_t>> by_category_;
  std::shared_ptr<ClipCache> cache_ = std::make_shared<ClipCache>();
};

// Linear gain for the interferer so that
// 10*log10(target_power / (gain^2 * interferer_power)) == snr_db.
double snr_gain(double target_power, double interferer_power, double snr_db);

// Draws a scene from the pool under the preset's rules. Deterministic for
// a fixed rng; draw order: event count, categories, clips, captions,
// placements, SNRs, operator, target subset, prompt template.
MixtureScene build_scene(const EventPool& pool, const DatasetPreset& preset,
                         Rng& rng, const std::string& id = "",
                         const TemplateLibrary* templates = nullptr);

// Rendering output. The mixture is by construction the per-sample float32
// sum of the extraction and removal groups, so the complement identity
// extract + remove == mixture holds bit-exactly, including after peak
// normalization (the factor is folded into every stem).
struct SceneRender {
  AudioClip mixture;
  AudioClip extract_target;
  AudioClip remove_target;  // silence when the target covers every stem
  std::vector<AudioClip> stem_contributions;
  double normalization = 1.0;
};

SceneRender render_scene(const MixtureScene& scene, const EventPool& pool);
AudioClip render_mixture(const MixtureScene& scene, const EventPool& pool);
AudioClip render_target(const MixtureScene& scene, SeparationOp op,
                        const EventPool& pool);

// Additive white Gaussian noise at the requested SNR (exact by
// construction); the +inf sentinel disables the perturbation.
AudioClip perturb_input(const AudioClip& clip, double perturb_snr_db, Rng& rng);

struct SimulateOptions {
  double perturb_snr_db = kPerturbDisabled;
  std::optional<double> duration_s;  // overrides the preset
  const TemplateLibrary* templates = nullptr;  // builtin when null
};

// Writes per-scene WAVs (mixture, extraction target, removal target where
// defined, per-stem contributions) plus manifest.jsonl into out_dir.
// Fully reproducible from (preset, count, seed, pool ordering); partial
// output is removed if any scene fails. Returns the manifest path.
std::string simulate_dataset(const EventPool& pool,
                             const DatasetPreset& preset, std::size_t count,
                             std::uint64_t seed, const std::string& out_dir,
                             const SimulateOptions& options = {});

// One manifest line, with paths kept relative to the manifest directory.
struct ManifestEntry {
  MixtureScene scene;
  std::string mixture_path;
  std::string extract_path;
  std::optional<std::string> remove_path;
  std::optional<std::string> perturbed_path;
  std::vector<std::string> stem_paths;
  double normalization = 1.0;
};

struct Manifest {
  std::string base_dir;
  std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const std::string& path);
std::string resolve_path(const Manifest& manifest, const std::string& rel);

}  // namespace sepbench

#endif  // SEPBENCH_SCENE_HPP_
