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

// Eigen is used only for the symmetric eigendecompositions behind the
// Frechet distance; its own threading stays off so results do not depend
// on the thread budget.
#define EIGEN_DONT_PARALLELIZE

#include "sepbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <Eigen/Dense>
#include <json.hpp>

#include "sepbench/errors.hpp"
#include "sepbench/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sepbench {

namespace {

void require_comparable(const AudioClip& a, const AudioClip& b) {
  require(a.mono() && b.mono(), Errc::kPrecondition,
          "metrics expect mono clips");
  require(a.samples.size() == b.samples.size(), Errc::kShape,
          "clip lengths differ (" + std::to_string(a.samples.size()) + " vs " +
              std::to_string(b.samples.size()) + ")");
  require(a.sample_rate == b.sample_rate, Errc::kShape,
          "clip sample rates differ");
}

}  // namespace

double sdr(const AudioClip& est, const AudioClip& ref) {
  require_comparable(est, ref);
  double ref_energy = 0.0;
  double residual_energy = 0.0;
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    const double r = ref.samples[i];
    const double d = r - static_cast<double>(est.samples[i]);
    ref_energy += r * r;
    residual_energy += d * d;
  }
  require(ref_energy > 0.0, Errc::kDegenerateSignal,
          "reference signal is silent");
  if (residual_energy == 0.0) return kSdrCapDb;
  return std::min(kSdrCapDb, 10.0 * std::log10(ref_energy / residual_energy));
}

double sdri(const AudioClip& est, const AudioClip& ref, const AudioClip& mix) {
  return sdr(est, ref) - sdr(mix, ref);
}

std::vector<SpectroConfig> default_mel_resolutions() {
  // Mel counts are the largest per window for which every triangular
  // filter keeps a nonzero bin at 44.1/48 kHz material.
  const std::size_t windows[] = {64, 128, 256, 512, 1024, 2048};
  const std::size_t mels[] = {8, 16, 24, 48, 96, 128};
  std::vector<SpectroConfig> out;
  for (std::size_t i = 0; i < 6; ++i) {
    SpectroConfig cfg;
    cfg.window_len = windows[i];
    cfg.hop_len = windows[i] / 4;
    cfg.n_mels = mels[i];
    cfg.log_floor = 1e-5;
    out.push_back(cfg);
  }
  return out;
}

double mel_l2_multires(const AudioClip& a, const AudioClip& b,
                       const std::vector<SpectroConfig>& resolutions) {
  require_comparable(a, b);
  require(!resolutions.empty(), Errc::kPrecondition,
          "at least one resolution is required");
  double total = 0.0;
  for (const auto& cfg : resolutions) {
    const MelMatrix ma = mel_spectrogram(a, cfg);
    const MelMatrix mb = mel_spectrogram(b, cfg);
    double acc = 0.0;
    for (std::size_t i = 0; i < ma.data.size(); ++i) {
      const double d = ma.data[i] - mb.data[i];
      acc += d * d;
    }
    total += ma.data.empty()
                 ? 0.0
                 : std::sqrt(acc / static_cast<double>(ma.data.size()));
  }
  return total / static_cast<double>(resolutions.size());
}

ActivitySequence activity_sequence(const AudioClip& clip, double threshold,
                                   std::size_t frame_len,
                                   std::size_t hop_len) {
  require(clip.mono(), Errc::kPrecondition, "activity expects a mono clip");
  ActivitySequence seq;
  seq.frame_len = frame_len;
  seq.hop_len = hop_len;
  seq.threshold = threshold;
  const std::vector<double> rms = rms_frames(clip, frame_len, hop_len);
  seq.frames.resize(rms.size());
  for (std::size_t i = 0; i < rms.size(); ++i) {
    seq.frames[i] =
        static_cast<float>(rms[i]) >= static_cast<float>(threshold);
  }
  return seq;
}

double f1_decision_error(const AudioClip& est, const AudioClip& ref,
                         double threshold, std::size_t frame_len,
                         std::size_t hop_len) {
  require(est.samples.size() == ref.samples.size(), Errc::kShape,
          "clip lengths differ");
  const ActivitySequence a = activity_sequence(est, threshold, frame_len, hop_len);
  const ActivitySequence b = activity_sequence(ref, threshold, frame_len, hop_len);
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    if (a.frames[i] && b.frames[i]) ++tp;
    if (a.frames[i] && !b.frames[i]) ++fp;
    if (!a.frames[i] && b.frames[i]) ++fn;
  }
  if (tp + fp + fn == 0) return 1.0;  // agreement on total silence
  return 2.0 * static_cast<double>(tp) /
         (2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
          static_cast<double>(fn));
}

EmbeddingSet load_embeddings(const std::string& path) {
  std::ifstream meta(path + ".json");
  require(meta.good(), Errc::kIo, "missing embedding sidecar: " + path + ".json");
  json sidecar;
  try {
    meta >> sidecar;
  } catch (const json::exception& e) {
    throw_error(Errc::kFormat,
                std::string("bad embedding sidecar: ") + e.what());
  }
  const auto shape = sidecar.at("shape").get<std::vector<std::size_t>>();
  require(shape.size() == 2 && shape[0] >= 1 && shape[1] >= 1, Errc::kFormat,
          "embedding shape must be [N, D]");
  require(sidecar.value("dtype", "f32") == "f32", Errc::kFormat,
          "only f32 embeddings are supported");

  EmbeddingSet set;
  set.count = shape[0];
  set.dim = shape[1];
  set.source_tag = sidecar.value("source_tag", "");

  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::kIo, "cannot open embedding file: " + path);
  in.seekg(0, std::ios::end);
  const std::size_t bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  require(bytes == set.count * set.dim * sizeof(float), Errc::kFormat,
          "embedding payload is " + std::to_string(bytes) +
              " bytes, expected " +
              std::to_string(set.count * set.dim * sizeof(float)));
  set.values.resize(set.count * set.dim);
  in.read(reinterpret_cast<char*>(set.values.data()),
          static_cast<std::streamsize>(bytes));
  for (const float v : set.values) {
    require(std::isfinite(v), Errc::kData,
            "embedding contains non-finite values: " + path);
  }
  return set;
}

void save_embeddings(const EmbeddingSet& set, const std::string& path) {
  require(set.values.size() == set.count * set.dim, Errc::kShape,
          "embedding buffer does not match its shape");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::kIo, "cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(set.values.data()),
            static_cast<std::streamsize>(set.values.size() * sizeof(float)));
  out.flush();
  require(out.good(), Errc::kIo, "write failed: " + path);

  json sidecar = {{"dtype", "f32"},
                  {"shape", {set.count, set.dim}},
                  {"layout", "row-major"},
                  {"endianness", "little"}};
  if (!set.source_tag.empty()) sidecar["source_tag"] = set.source_tag;
  std::ofstream meta(path + ".json", std::ios::trunc);
  require(meta.good(), Errc::kIo, "cannot write sidecar for " + path);
  meta << sidecar.dump() << '\n';
}

double cosine_score(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), Errc::kShape, "vector dimensions differ");
  require(!a.empty(), Errc::kShape, "empty vectors");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  require(na > 0.0 && nb > 0.0, Errc::kDegenerateVector,
          "cosine of a zero vector is undefined");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

Eigen::MatrixXd to_matrix(const EmbeddingSet& set) {
  Eigen::MatrixXd m(set.count, set.dim);
  for (std::size_t r = 0; r < set.count; ++r) {
    for (std::size_t c = 0; c < set.dim; ++c) m(r, c) = set.at(r, c);
  }
  return m;
}

// Symmetric PSD square root; clamps negative eigenvalues, retries once
// with a small diagonal load if the decomposition fails to converge.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    const Eigen::MatrixXd loaded =
        m + 1e-6 * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    solver.compute(loaded);
    require(solver.info() == Eigen::Success, Errc::kData,
            "eigendecomposition failed to converge");
  }
  Eigen::VectorXd roots = solver.eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    roots[i] = roots[i] > 0.0 ? std::sqrt(roots[i]) : 0.0;
  }
  return solver.eigenvectors() * roots.asDiagonal() *
         solver.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b) {
  require(a.dim == b.dim, Errc::kShape,
          "embedding dimensions differ (" + std::to_string(a.dim) + " vs " +
              std::to_string(b.dim) + ")");
  require(a.count >= 1 && b.count >= 1, Errc::kShape, "empty embedding set");
  if (a.count < a.dim + 1 || b.count < b.dim + 1) {
    std::cerr << "warning: frechet_distance with fewer than D+1 samples; "
                 "covariances are rank-deficient\n";
  }

  const Eigen::MatrixXd ma = to_matrix(a);
  const Eigen::MatrixXd mb = to_matrix(b);
  const Eigen::RowVectorXd mu_a = ma.colwise().mean();
  const Eigen::RowVectorXd mu_b = mb.colwise().mean();

  auto covariance = [](const Eigen::MatrixXd& m, const Eigen::RowVectorXd& mu) {
    if (m.rows() < 2) {
      return Eigen::MatrixXd::Zero(m.cols(), m.cols()).eval();
    }
    const Eigen::MatrixXd centered = m.rowwise() - mu;
    return ((centered.transpose() * centered) /
            static_cast<double>(m.rows() - 1))
        .eval();
  };
  const Eigen::MatrixXd cov_a = covariance(ma, mu_a);
  const Eigen::MatrixXd cov_b = covariance(mb, mu_b);

  const Eigen::MatrixXd sqrt_a = psd_sqrt(cov_a);
  const Eigen::MatrixXd inner = sqrt_a * cov_b * sqrt_a;
  const Eigen::MatrixXd sqrt_inner = psd_sqrt(inner);

  const double distance = (mu_a - mu_b).squaredNorm() + cov_a.trace() +
                          cov_b.trace() - 2.0 * sqrt_inner.trace();
  return std::max(0.0, distance);
}

namespace {

// Mean-pooled row of the per-item embedding file <dir>/<id>.emb, or
// nullopt when the file is absent.
std::optional<std::vector<float>> item_embedding(const std::string& dir,
                                                 const std::string& id) {
  const fs::path path = fs::path(dir) / (id + ".emb");
  if (!fs::exists(path)) return std::nullopt;
  const EmbeddingSet set = load_embeddings(path.string());
  std::vector<float> mean(set.dim, 0.0f);
  for (std::size_t r = 0; r < set.count; ++r) {
    for (std::size_t c = 0; c < set.dim; ++c) {
      mean[c] += static_cast<float>(set.at(r, c) / set.count);
    }
  }
  return mean;
}

void append_rows(EmbeddingSet& pool, const EmbeddingSet& item) {
  if (pool.dim == 0) pool.dim = item.dim;
  require(pool.dim == item.dim, Errc::kShape,
          "embedding dimensions differ across files");
  pool.values.insert(pool.values.end(), item.values.begin(),
                     item.values.end());
  pool.count += item.count;
}

}  // namespace

EvalReport evaluate_manifest(const Manifest& manifest,
                             const EvaluateOptions& options) {
  EvalReport report;
  if (options.metrics.empty() || manifest.entries.empty()) return report;

  const bool want_fad = options.metrics.count("fad") > 0;
  const bool want_clap = options.metrics.count("clap") > 0;
  const bool want_clapa = options.metrics.count("clapa") > 0;

  struct SceneResult {
    std::map<std::string, double> values;
    bool skipped = false;
    std::string skip_reason;
  };
  std::vector<SceneResult> results(manifest.entries.size());

  parallel_for(
      static_cast<std::int64_t>(manifest.entries.size()),
      [&](std::int64_t index) {
        const ManifestEntry& entry =
            manifest.entries[static_cast<std::size_t>(index)];
        SceneResult& result = results[static_cast<std::size_t>(index)];
        const std::string est_path =
            (fs::path(options.estimates_dir) / (entry.scene.id + ".wav"))
                .string();
        if (!fs::exists(est_path)) {
          result.skipped = true;
          result.skip_reason = "missing estimate";
          return;
        }
        try {
          const AudioClip est = downmix_mono(read_wav(est_path));
          const std::string ref_rel =
              entry.scene.op == SeparationOp::kExtract
                  ? entry.extract_path
                  : entry.remove_path.value_or(entry.extract_path);
          const AudioClip ref =
              downmix_mono(read_wav(resolve_path(manifest, ref_rel)));

          if (options.metrics.count("sdri")) {
            const AudioClip mix = downmix_mono(
                read_wav(resolve_path(manifest, entry.mixture_path)));
            result.values["sdri"] = sdri(est, ref, mix);
          }
          if (options.metrics.count("mel")) {
            result.values["mel"] = mel_l2_multires(est, ref);
          }
          if (options.metrics.count("f1")) {
            result.values["f1"] = f1_decision_error(est, ref);
          }
          if (want_clap && !options.text_embeddings.empty() &&
              !options.est_embeddings.empty()) {
            const auto text =
                item_embedding(options.text_embeddings, entry.scene.id);
            const auto est_emb =
                item_embedding(options.est_embeddings, entry.scene.id);
            if (text && est_emb) {
              result.values["clap"] = cosine_score(*text, *est_emb);
            }
          }
          if (want_clapa && !options.ref_embeddings.empty() &&
              !options.est_embeddings.empty()) {
            const auto ref_emb =
                item_embedding(options.ref_embeddings, entry.scene.id);
            const auto est_emb =
                item_embedding(options.est_embeddings, entry.scene.id);
            if (ref_emb && est_emb) {
              result.values["clapa"] = cosine_score(*ref_emb, *est_emb);
            }
          }
        } catch (const Error& e) {
          result.skipped = true;
          result.skip_reason = e.what();
        }
      });

  // Aggregation is serial and ordered by scene index.
  std::map<std::string, std::vector<double>> columns;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& entry = manifest.entries[i];
    const auto& result = results[i];
    if (result.skipped) {
      report.skipped.push_back(entry.scene.id + " (" + result.skip_reason +
                               ")");
      continue;
    }
    report.per_item[entry.scene.id] = result.values;
    for (const auto& [name, value] : result.values) {
      columns[name].push_back(value);
    }
  }
  for (const auto& [name, values] : columns) {
    EvalReport::Aggregate agg;
    double sum = 0.0;
    for (const double v : values) {
      if (std::isfinite(v)) {
        sum += v;
        ++agg.count;
      } else {
        ++agg.nonfinite;
      }
    }
    agg.mean = agg.count > 0 ? sum / static_cast<double>(agg.count) : 0.0;
    report.aggregates[name] = agg;
  }

  // FAD is a set-level metric: rows are pooled across scenes.
  if (want_fad && !options.ref_embeddings.empty() &&
      !options.est_embeddings.empty()) {
    EmbeddingSet ref_pool;
    EmbeddingSet est_pool;
    std::size_t contributing = 0;
    if (fs::is_regular_file(options.ref_embeddings) &&
        fs::is_regular_file(options.est_embeddings)) {
      append_rows(ref_pool, load_embeddings(options.ref_embeddings));
      append_rows(est_pool, load_embeddings(options.est_embeddings));
      contributing = 1;
    } else {
      for (const auto& entry : manifest.entries) {
        const fs::path ref_path =
            fs::path(options.ref_embeddings) / (entry.scene.id + ".emb");
        const fs::path est_path =
            fs::path(options.est_embeddings) / (entry.scene.id + ".emb");
        if (!fs::exists(ref_path) || !fs::exists(est_path)) continue;
        append_rows(ref_pool, load_embeddings(ref_path.string()));
        append_rows(est_pool, load_embeddings(est_path.string()));
        ++contributing;
      }
    }
    if (contributing > 0) {
      EvalReport::Aggregate agg;
      agg.mean = frechet_distance(ref_pool, est_pool);
      agg.count = contributing;
      report.aggregates["fad"] = agg;
    }
  }
  return report;
}

namespace {

json report_to_json_object(const EvalReport& report) {
  json aggregates = json::object();
  for (const auto& [name, agg] : report.aggregates) {
    aggregates[name] = {{"mean", agg.mean},
                        {"count", agg.count},
                        {"nonfinite", agg.nonfinite}};
  }
  json per_item = json::object();
  for (const auto& [id, values] : report.per_item) {
    per_item[id] = values;
  }
  return {{"aggregates", aggregates},
          {"per_item", per_item},
          {"skipped", report.skipped}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  return report_to_json_object(report).dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  EvalReport report;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw_error(Errc::kFormat, std::string("bad report JSON: ") + e.what());
  }
  const json aggregates = root.value("aggregates", json::object());
  for (const auto& [name, agg] : aggregates.items()) {
    EvalReport::Aggregate a;
    a.mean = agg.at("mean").get<double>();
    a.count = agg.at("count").get<std::size_t>();
    a.nonfinite = agg.value("nonfinite", std::size_t{0});
    report.aggregates[name] = a;
  }
  const json per_item = root.value("per_item", json::object());
  for (const auto& [id, values] : per_item.items()) {
    for (const auto& [metric, value] : values.items()) {
      report.per_item[id][metric] = value.get<double>();
    }
  }
  report.skipped = root.value("skipped", std::vector<std::string>{});
  return report;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "scene_id,metric,value\n";
  char buf[64];
  for (const auto& [id, values] : report.per_item) {
    for (const auto& [metric, value] : values) {
      std::snprintf(buf, sizeof buf, "%.17g", value);
      out += id + "," + metric + "," + buf + "\n";
    }
  }
  return out;
}

}  // namespace sepbench
