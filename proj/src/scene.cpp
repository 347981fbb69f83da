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

#include "sepbench/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sepbench/errors.hpp"
#include "sepbench/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sepbench {

namespace {

std::int64_t seconds_to_samples(double seconds, int rate) {
  return std::llround(seconds * static_cast<double>(rate));
}

std::string scene_file(const std::string& id, const std::string& suffix) {
  return id + "." + suffix + ".wav";
}

}  // namespace

const std::vector<DatasetPreset>& builtin_presets() {
  static const std::vector<DatasetPreset> presets = {
      // Training mixtures: 2-5 events, per-stem SNR U[-3,10] dB, 10 s,
      // extraction and removal with random target subsets.
      {"train", 2, 5, -3.0, 10.0, 10.0, 44100, 0.5, TargetRule::kUniformSubset},
      // Pairwise caption-queried evaluation: target + one noise clip,
      // SNR U[-15,15] dB.
      {"audiocaps", 2, 2, -15.0, 15.0, 10.0, 44100, 0.0,
       TargetRule::kFirstStem},
      // Pairwise at a fixed 0 dB SNR, 5 s clips.
      {"esc50", 2, 2, 0.0, 0.0, 5.0, 44100, 0.0, TargetRule::kFirstStem},
      // 3-5 events, SNR U[-10,10] dB.
      {"fsdmix", 3, 5, -10.0, 10.0, 10.0, 44100, 0.0, TargetRule::kFirstStem},
      // 2-5 events, SNR U[-10,10] dB (out-of-domain style evaluation).
      {"asfx", 2, 5, -10.0, 10.0, 10.0, 44100, 0.0, TargetRule::kFirstStem},
      // Imitation-queried mixes: 1 target + 1-3 interferers, U[-3,10] dB,
      // 8 s scenes.
      {"imitation", 2, 4, -3.0, 10.0, 8.0, 44100, 0.0, TargetRule::kFirstStem},
  };
  return presets;
}

DatasetPreset preset_by_name(const std::string& name) {
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : builtin_presets()) {
    if (!known.empty()) known += ", ";
    known += p.name;
  }
  throw_error(Errc::kInvalidArgument,
              "unknown preset '" + name + "' (known: " + known + ")");
}

std::shared_ptr<const AudioClip> ClipCache::get(const std::string& path,
                                                int rate) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find({path, rate});
    if (it != cache_.end()) return it->second;
  }
  AudioClip clip = downmix_mono(read_wav(path));
  if (clip.sample_rate != rate) clip = resample(clip, rate);
  auto shared = std::make_shared<const AudioClip>(std::move(clip));
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.insert({{path, rate}, shared}).first->second;
}

void EventPool::index() {
  std::set<std::string> cats;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    cats.insert(entries_[i].category);
    by_category_[entries_[i].category].push_back(i);
  }
  categories_.assign(cats.begin(), cats.end());
}

EventPool EventPool::from_entries(std::vector<PoolEntry> entries) {
  EventPool pool;
  pool.entries_ = std::move(entries);
  for (auto& e : pool.entries_) {
    if (e.source_rate == 0) {
      const WavInfo info = read_wav_info(e.path);
      e.source_frames = info.frames;
      e.source_rate = info.sample_rate;
    }
  }
  pool.index();
  return pool;
}

EventPool EventPool::load(const std::string& path) {
  std::vector<PoolEntry> entries;
  fs::path p(path);
  fs::path jsonl;
  if (fs::is_directory(p)) {
    if (fs::exists(p / "pool.jsonl")) {
      jsonl = p / "pool.jsonl";
    } else {
      // Directory scan: sorted for a stable pool ordering.
      std::vector<fs::path> wavs;
      for (const auto& entry : fs::recursive_directory_iterator(p)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".wav") wavs.push_back(entry.path());
      }
      std::sort(wavs.begin(), wavs.end());
      require(!wavs.empty(), Errc::kInsufficientPool,
              "no WAV files found under " + path);
      for (const auto& wav : wavs) {
        PoolEntry e;
        e.path = wav.string();
        std::string caption = wav.stem().string();
        std::replace(caption.begin(), caption.end(), '_', ' ');
        e.captions = {caption};
        e.category = wav.parent_path() == p ? wav.stem().string()
                                            : wav.parent_path().filename().string();
        entries.push_back(std::move(e));
      }
      return from_entries(std::move(entries));
    }
  } else {
    jsonl = p;
  }

  std::ifstream in(jsonl);
  require(in.good(), Errc::kIo, "cannot open pool file: " + jsonl.string());
  const fs::path base = jsonl.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw_error(Errc::kFormat, "pool line " + std::to_string(line_no) +
                                     ": " + e.what());
    }
    PoolEntry entry;
    fs::path rel(record.at("path").get<std::string>());
    entry.path = rel.is_absolute() ? rel.string() : (base / rel).string();
    if (record.contains("captions")) {
      entry.captions = record.at("captions").get<std::vector<std::string>>();
    } else if (record.contains("caption")) {
      entry.captions = {record.at("caption").get<std::string>()};
    }
    entry.category = record.at("category").get<std::string>();
    entries.push_back(std::move(entry));
  }
  return from_entries(std::move(entries));
}

const std::vector<std::size_t>& EventPool::entries_in_category(
    const std::string& category) const {
  auto it = by_category_.find(category);
  require(it != by_category_.end(), Errc::kInvalidArgument,
          "unknown category: " + category);
  return it->second;
}

double snr_gain(double target_power, double interferer_power, double snr_db) {
  require(target_power > 0.0 && interferer_power > 0.0,
          Errc::kDegenerateSignal,
          "snr_gain requires strictly positive signal powers");
  return std::sqrt(target_power /
                   (interferer_power * std::pow(10.0, snr_db / 10.0)));
}

namespace {

struct Placement {
  double crop_start_s = 0.0;
  double offset_s = 0.0;
  double duration_s = 0.0;
  double power = 0.0;
};

// Draws crop/offset for one source and measures the power of the selected
// segment. Re-draws the crop a few times if the segment is silent.
Placement place_segment(const AudioClip& processed, double scene_duration_s,
                        int rate, Rng& rng, const std::string& path) {
  const double clip_dur =
      static_cast<double>(processed.samples.size()) / rate;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Placement p;
    if (clip_dur > scene_duration_s) {
      p.crop_start_s = rng.uniform(0.0, clip_dur - scene_duration_s);
      p.offset_s = 0.0;
      p.duration_s = scene_duration_s;
    } else {
      p.crop_start_s = 0.0;
      p.offset_s = rng.uniform(0.0, scene_duration_s - clip_dur);
      p.duration_s = clip_dur;
    }
    const std::int64_t start = seconds_to_samples(p.crop_start_s, rate);
    const std::int64_t want = seconds_to_samples(p.duration_s, rate);
    const std::int64_t avail =
        static_cast<std::int64_t>(processed.samples.size()) - start;
    const std::int64_t n = std::max<std::int64_t>(
        0, std::min(want, avail));
    p.power = mean_square(std::span<const float>(processed.samples)
                              .subspan(static_cast<std::size_t>(start),
                                       static_cast<std::size_t>(n)));
    if (p.power > 0.0) return p;
    if (clip_dur <= scene_duration_s) break;  // whole clip is silent
  }
  throw_error(Errc::kDegenerateSignal,
              "selected segment of " + path + " is silent");
}

}  // namespace

MixtureScene build_scene(const EventPool& pool, const DatasetPreset& preset,
                         Rng& rng, const std::string& id,
                         const TemplateLibrary* templates) {
  require(preset.n_events_lo >= 1 && preset.n_events_lo <= preset.n_events_hi,
          Errc::kInvalidArgument, "preset event range is invalid");
  require(preset.snr_lo_db <= preset.snr_hi_db, Errc::kInvalidArgument,
          "preset SNR range is invalid");
  const auto& categories = pool.categories();
  require(categories.size() >=
              static_cast<std::size_t>(preset.n_events_hi),
          Errc::kInsufficientPool,
          "pool must span at least " + std::to_string(preset.n_events_hi) +
              " distinct categories, has " +
              std::to_string(categories.size()));

  MixtureScene scene;
  scene.id = id;
  scene.duration_s = preset.duration_s;
  scene.sample_rate = preset.sample_rate;

  const int n_events =
      preset.n_events_lo +
      static_cast<int>(rng.below(static_cast<std::uint64_t>(
          preset.n_events_hi - preset.n_events_lo + 1)));

  // Partial Fisher-Yates over the sorted category list.
  std::vector<std::size_t> order(categories.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int k = 0; k < n_events; ++k) {
    const std::size_t j =
        k + rng.below(static_cast<std::uint64_t>(order.size() - k));
    std::swap(order[k], order[j]);
  }

  std::vector<double> powers;
  for (int k = 0; k < n_events; ++k) {
    const std::string& category = categories[order[static_cast<std::size_t>(k)]];
    const auto& members = pool.entries_in_category(category);
    const PoolEntry& entry = pool.entries()[members[rng.below(members.size())]];

    Stem stem;
    stem.source_path = entry.path;
    stem.category = category;
    stem.caption = choose_caption(entry.captions, rng);

    const auto processed = pool.cache().get(entry.path, scene.sample_rate);
    const Placement p = place_segment(*processed, scene.duration_s,
                                      scene.sample_rate, rng, entry.path);
    stem.crop_start_s = p.crop_start_s;
    stem.offset_s = p.offset_s;
    stem.duration_s = p.duration_s;
    powers.push_back(p.power);
    scene.stems.push_back(std::move(stem));
  }

  // Stem 0 is the 0 dB reference; each other stem draws its own SNR.
  scene.snr_db_per_stem.assign(scene.stems.size(), 0.0);
  scene.stems[0].gain_db = 0.0;
  for (std::size_t k = 1; k < scene.stems.size(); ++k) {
    const double snr = rng.uniform(preset.snr_lo_db, preset.snr_hi_db);
    scene.snr_db_per_stem[k] = snr;
    const double gain = snr_gain(powers[0], powers[k], snr);
    scene.stems[k].gain_db = 20.0 * std::log10(gain);
  }

  const bool want_remove =
      rng.uniform() < preset.remove_probability && scene.stems.size() >= 2;
  scene.op = want_remove ? SeparationOp::kRemove : SeparationOp::kExtract;

  const std::size_t n = scene.stems.size();
  scene.target_indices.clear();
  if (preset.target_rule == TargetRule::kFirstStem || n == 1) {
    scene.target_indices.push_back(0);
  } else {
    // Uniform over nonempty subsets; proper subsets only for removal.
    const std::uint64_t span = (std::uint64_t{1} << n) -
                               (scene.op == SeparationOp::kRemove ? 2 : 1);
    const std::uint64_t mask = 1 + rng.below(span);
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (std::uint64_t{1} << k)) scene.target_indices.push_back(k);
    }
  }

  // Prompt template; the draw happens even without a library so the rng
  // stream does not depend on whether prompts are wanted.
  const std::uint64_t template_index = rng.below(50);
  if (templates != nullptr) {
    std::vector<std::string> captions;
    for (const std::size_t t : scene.target_indices) {
      captions.push_back(scene.stems[t].caption);
    }
    const auto& bank = templates->for_operator(scene.op);
    const PromptSpec spec = compose_prompt(
        *templates, scene.op, captions,
        bank[static_cast<std::size_t>(template_index % bank.size())].id);
    scene.prompt = spec.text;
    scene.template_id = spec.template_id;
  }
  return scene;
}

namespace {

void validate_scene(const MixtureScene& scene) {
  require(!scene.stems.empty(), Errc::kPrecondition, "scene has no stems");
  require(scene.sample_rate > 0 && scene.duration_s > 0.0, Errc::kPrecondition,
          "scene must have a positive rate and duration");
  require(!scene.target_indices.empty(), Errc::kPrecondition,
          "target set must not be empty");
  std::set<std::size_t> seen;
  for (const std::size_t t : scene.target_indices) {
    require(t < scene.stems.size(), Errc::kPrecondition,
            "target index out of range");
    require(seen.insert(t).second, Errc::kPrecondition,
            "duplicate target index");
  }
  std::set<std::string> cats;
  for (const auto& stem : scene.stems) {
    require(cats.insert(stem.category).second, Errc::kPrecondition,
            "stems must carry distinct categories (duplicate '" +
                stem.category + "')");
    require(std::isfinite(stem.gain_db), Errc::kPrecondition,
            "stem gain must be finite");
    require(stem.offset_s >= 0.0 &&
                stem.offset_s + stem.duration_s <= scene.duration_s + 1e-9,
            Errc::kPrecondition, "stem placement exceeds the scene");
  }
}

// Renders one stem contribution at full scene length with the combined
// (gain * normalization) multiplier applied in float32.
AudioClip render_contribution(const MixtureScene& scene, std::size_t k,
                              const AudioClip& processed, double norm) {
  const int rate = scene.sample_rate;
  const std::int64_t scene_len = seconds_to_samples(scene.duration_s, rate);
  const Stem& stem = scene.stems[k];

  AudioClip out;
  out.sample_rate = rate;
  out.channels = 1;
  out.samples.assign(static_cast<std::size_t>(scene_len), 0.0f);

  const std::int64_t src_start = seconds_to_samples(stem.crop_start_s, rate);
  const std::int64_t dst_start = seconds_to_samples(stem.offset_s, rate);
  const std::int64_t want = seconds_to_samples(stem.duration_s, rate);
  const std::int64_t n = std::max<std::int64_t>(
      0, std::min({want,
                   static_cast<std::int64_t>(processed.samples.size()) -
                       src_start,
                   scene_len - dst_start}));
  const float multiplier =
      static_cast<float>(std::pow(10.0, stem.gain_db / 20.0) * norm);
  for (std::int64_t i = 0; i < n; ++i) {
    out.samples[static_cast<std::size_t>(dst_start + i)] =
        multiplier * processed.samples[static_cast<std::size_t>(src_start + i)];
  }
  return out;
}

}  // namespace

SceneRender render_scene(const MixtureScene& scene, const EventPool& pool) {
  validate_scene(scene);
  const int rate = scene.sample_rate;
  const std::size_t scene_len =
      static_cast<std::size_t>(seconds_to_samples(scene.duration_s, rate));

  std::vector<std::shared_ptr<const AudioClip>> sources;
  for (const auto& stem : scene.stems) {
    sources.push_back(pool.cache().get(stem.source_path, rate));
  }
  std::vector<bool> is_target(scene.stems.size(), false);
  for (const std::size_t t : scene.target_indices) is_target[t] = true;

  SceneRender render;
  double norm = 1.0;
  for (int iteration = 0; iteration < 8; ++iteration) {
    render.stem_contributions.clear();
    for (std::size_t k = 0; k < scene.stems.size(); ++k) {
      render.stem_contributions.push_back(
          render_contribution(scene, k, *sources[k], norm));
    }

    auto sum_group = [&](bool target_group) {
      AudioClip acc;
      acc.sample_rate = rate;
      acc.channels = 1;
      acc.samples.assign(scene_len, 0.0f);
      for (std::size_t k = 0; k < scene.stems.size(); ++k) {
        if (is_target[k] != target_group) continue;
        const auto& c = render.stem_contributions[k].samples;
        for (std::size_t i = 0; i < scene_len; ++i) acc.samples[i] += c[i];
      }
      return acc;
    };
    render.extract_target = sum_group(true);
    render.remove_target = sum_group(false);

    render.mixture.sample_rate = rate;
    render.mixture.channels = 1;
    render.mixture.samples.resize(scene_len);
    for (std::size_t i = 0; i < scene_len; ++i) {
      render.mixture.samples[i] =
          render.extract_target.samples[i] + render.remove_target.samples[i];
    }

    const double peak = peak_amplitude(render.mixture);
    if (peak <= 1.0) break;
    // Fold the normalization into every stem and re-render so the
    // complement identity survives; shave a little extra after the first
    // retry in case rounding leaves the peak a few ulps above 1.
    norm = norm / peak * (iteration == 0 ? 1.0 : 1.0 - 1e-6);
  }
  render.normalization = norm;
  return render;
}

AudioClip render_mixture(const MixtureScene& scene, const EventPool& pool) {
  return render_scene(scene, pool).mixture;
}

AudioClip render_target(const MixtureScene& scene, SeparationOp op,
                        const EventPool& pool) {
  if (op == SeparationOp::kRemove) {
    require(scene.target_indices.size() < scene.stems.size(),
            Errc::kInvalidArgument,
            "removal of every stem is not a defined operation");
  }
  SceneRender render = render_scene(scene, pool);
  return op == SeparationOp::kExtract ? std::move(render.extract_target)
                                      : std::move(render.remove_target);
}

AudioClip perturb_input(const AudioClip& clip, double perturb_snr_db,
                        Rng& rng) {
  if (std::isinf(perturb_snr_db) && perturb_snr_db > 0.0) return clip;
  require(clip.mono(), Errc::kPrecondition, "perturb_input expects mono");
  const double signal_power = mean_square(clip.samples);
  require(signal_power > 0.0, Errc::kDegenerateSignal,
          "cannot set a noise SNR against a silent clip");

  std::vector<double> noise(clip.samples.size());
  double noise_power = 0.0;
  for (auto& v : noise) {
    v = rng.normal();
    noise_power += v * v;
  }
  noise_power /= static_cast<double>(noise.size());
  const double gain = snr_gain(signal_power, noise_power, perturb_snr_db);

  AudioClip out = clip;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] += static_cast<float>(gain * noise[i]);
  }
  return out;
}

namespace {

json scene_to_json(const ManifestEntry& entry) {
  const MixtureScene& scene = entry.scene;
  json stems = json::array();
  for (std::size_t k = 0; k < scene.stems.size(); ++k) {
    const Stem& s = scene.stems[k];
    stems.push_back({{"path", entry.stem_paths[k]},
                     {"source", s.source_path},
                     {"caption", s.caption},
                     {"category", s.category},
                     {"gain_db", s.gain_db},
                     {"offset_s", s.offset_s},
                     {"crop_start_s", s.crop_start_s},
                     {"duration_s", s.duration_s}});
  }
  json record = {
      {"id", scene.id},
      {"mixture", entry.mixture_path},
      {"target_extract", entry.extract_path},
      {"target_remove",
       entry.remove_path ? json(*entry.remove_path) : json(nullptr)},
      {"stems", stems},
      {"target_indices", scene.target_indices},
      {"operator", to_string(scene.op)},
      {"prompt", scene.prompt},
      {"template_id", scene.template_id},
      {"snr_db_per_stem", scene.snr_db_per_stem},
      {"normalization", entry.normalization},
      {"seed", scene.seed},
      {"duration_s", scene.duration_s},
      {"sample_rate", scene.sample_rate},
  };
  if (entry.perturbed_path) {
    record["mixture_perturbed"] = *entry.perturbed_path;
    record["perturb_snr_db"] = scene.perturb_snr_db;
  }
  return record;
}

ManifestEntry entry_from_json(const json& record) {
  ManifestEntry entry;
  MixtureScene& scene = entry.scene;
  scene.id = record.at("id").get<std::string>();
  entry.mixture_path = record.at("mixture").get<std::string>();
  entry.extract_path = record.at("target_extract").get<std::string>();
  if (!record.at("target_remove").is_null()) {
    entry.remove_path = record.at("target_remove").get<std::string>();
  }
  for (const auto& s : record.at("stems")) {
    Stem stem;
    entry.stem_paths.push_back(s.at("path").get<std::string>());
    stem.source_path = s.value("source", "");
    stem.caption = s.value("caption", "");
    stem.category = s.value("category", "");
    stem.gain_db = s.value("gain_db", 0.0);
    stem.offset_s = s.value("offset_s", 0.0);
    stem.crop_start_s = s.value("crop_start_s", 0.0);
    stem.duration_s = s.value("duration_s", 0.0);
    scene.stems.push_back(std::move(stem));
  }
  scene.target_indices =
      record.at("target_indices").get<std::vector<std::size_t>>();
  scene.op = parse_operator(record.at("operator").get<std::string>());
  scene.prompt = record.value("prompt", "");
  scene.template_id = record.value("template_id", -1);
  scene.snr_db_per_stem =
      record.at("snr_db_per_stem").get<std::vector<double>>();
  entry.normalization = record.value("normalization", 1.0);
  scene.seed = record.value("seed", std::uint64_t{0});
  scene.duration_s = record.at("duration_s").get<double>();
  scene.sample_rate = record.at("sample_rate").get<int>();
  if (record.contains("mixture_perturbed")) {
    entry.perturbed_path = record.at("mixture_perturbed").get<std::string>();
    scene.perturb_snr_db = record.value("perturb_snr_db", kPerturbDisabled);
  }
  return entry;
}

std::string scene_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%06zu", index);
  return buf;
}

}  // namespace

std::string simulate_dataset(const EventPool& pool,
                             const DatasetPreset& preset, std::size_t count,
                             std::uint64_t seed, const std::string& out_dir,
                             const SimulateOptions& options) {
  DatasetPreset effective = preset;
  if (options.duration_s) effective.duration_s = *options.duration_s;

  fs::create_directories(out_dir);
  const fs::path base(out_dir);

  static const TemplateLibrary default_templates = TemplateLibrary::builtin();
  const TemplateLibrary* templates =
      options.templates ? options.templates : &default_templates;

  std::vector<std::string> lines(count);
  std::vector<std::vector<std::string>> created(count);

  auto build_one = [&](std::int64_t index) {
    const std::size_t i = static_cast<std::size_t>(index);
    const std::uint64_t scene_seed = Rng::mix(seed, i);
    Rng rng(scene_seed);
    MixtureScene scene =
        build_scene(pool, effective, rng, scene_id_for(i), templates);
    scene.seed = scene_seed;
    scene.perturb_snr_db = options.perturb_snr_db;

    const SceneRender render = render_scene(scene, pool);

    ManifestEntry entry;
    entry.normalization = render.normalization;
    entry.mixture_path = scene_file(scene.id, "mixture");
    entry.extract_path = scene_file(scene.id, "extract");

    auto emit = [&](const AudioClip& clip, const std::string& rel) {
      const std::string path = (base / rel).string();
      write_wav(clip, path, WavEncoding::kFloat32);
      created[i].push_back(path);
    };

    emit(render.mixture, entry.mixture_path);
    emit(render.extract_target, entry.extract_path);
    if (scene.target_indices.size() < scene.stems.size()) {
      entry.remove_path = scene_file(scene.id, "remove");
      emit(render.remove_target, *entry.remove_path);
    }
    for (std::size_t k = 0; k < scene.stems.size(); ++k) {
      entry.stem_paths.push_back(
          scene_file(scene.id, "stem" + std::to_string(k)));
      emit(render.stem_contributions[k], entry.stem_paths[k]);
    }
    if (!(std::isinf(scene.perturb_snr_db) && scene.perturb_snr_db > 0.0)) {
      entry.perturbed_path = scene_file(scene.id, "mixture_perturbed");
      emit(perturb_input(render.mixture, scene.perturb_snr_db, rng),
           *entry.perturbed_path);
    }

    entry.scene = std::move(scene);
    lines[i] = scene_to_json(entry).dump();
  };

  try {
    parallel_for(static_cast<std::int64_t>(count), build_one);

    const fs::path manifest_path = base / "manifest.jsonl";
    std::ofstream out(manifest_path, std::ios::trunc);
    require(out.good(), Errc::kIo,
            "cannot write manifest: " + manifest_path.string());
    for (const auto& line : lines) out << line << '\n';
    out.flush();
    require(out.good(), Errc::kIo,
            "manifest write failed: " + manifest_path.string());
    return manifest_path.string();
  } catch (...) {
    // Remove whatever was produced so failures do not leave partial sets.
    std::error_code ec;
    for (const auto& per_scene : created) {
      for (const auto& file : per_scene) fs::remove(file, ec);
    }
    fs::remove(base / "manifest.jsonl", ec);
    throw;
  }
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open manifest: " + path);
  Manifest manifest;
  manifest.base_dir = fs::path(path).parent_path().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      manifest.entries.push_back(entry_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw_error(Errc::kFormat, "manifest line " + std::to_string(line_no) +
                                     ": " + e.what());
    }
  }
  return manifest;
}

std::string resolve_path(const Manifest& manifest, const std::string& rel) {
  const fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(manifest.base_dir) / p).string();
}

}  // namespace sepbench
