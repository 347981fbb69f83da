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

// sepbench: simulate prompt-driven separation scenes, build conditioning
// curves, run oracle separators, and evaluate estimates.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepbench/audio.hpp"
#include "sepbench/baseline.hpp"
#include "sepbench/curves.hpp"
#include "sepbench/diffusion.hpp"
#include "sepbench/errors.hpp"
#include "sepbench/metrics.hpp"
#include "sepbench/parallel.hpp"
#include "sepbench/prompts.hpp"
#include "sepbench/rng.hpp"
#include "sepbench/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "sepbench 0.1.0";

// 0 success, 1 validation/precondition problems, 2 I/O problems.
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct GlobalFlags {
  int threads = -1;  // -1 = unset; fall back to SEPBENCH_THREADS, then all
  std::string log_level = "info";
};

void apply_globals(const GlobalFlags& flags) {
  int threads = 0;
  if (flags.threads >= 0) {
    threads = flags.threads;
  } else if (const char* env = std::getenv("SEPBENCH_THREADS")) {
    threads = std::max(0, std::atoi(env));
  }
  sepbench::set_threads(threads);
}

bool verbose(const GlobalFlags& flags) { return flags.log_level != "quiet"; }

std::vector<std::string> split_captions(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    if (raw.size() == 1 && item.find(',') != std::string::npos) {
      std::stringstream ss(item);
      std::string piece;
      while (std::getline(ss, piece, ',')) {
        const auto begin = piece.find_first_not_of(" \t");
        const auto end = piece.find_last_not_of(" \t");
        if (begin != std::string::npos) {
          out.push_back(piece.substr(begin, end - begin + 1));
        }
      }
    } else {
      out.push_back(item);
    }
  }
  return out;
}

std::set<std::string> parse_metric_list(const std::string& csv) {
  std::set<std::string> metrics;
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    if (name != "sdri" && name != "mel" && name != "f1" && name != "clap" &&
        name != "clapa" && name != "fad") {
      sepbench::throw_error(sepbench::Errc::kInvalidArgument,
                            "unknown metric: " + name);
    }
    metrics.insert(name);
  }
  return metrics;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  sepbench::require(out.good(), sepbench::Errc::kIo,
                    "cannot open for writing: " + path);
  out << content;
  out.flush();
  sepbench::require(out.good(), sepbench::Errc::kIo, "write failed: " + path);
}

int run_simulate(const GlobalFlags& globals, const std::string& preset_name,
                 std::size_t count, std::uint64_t seed,
                 const std::string& pool_path, const std::string& out_dir,
                 std::optional<double> duration,
                 std::optional<double> perturb_snr) {
  const sepbench::DatasetPreset preset = sepbench::preset_by_name(preset_name);
  const sepbench::EventPool pool = sepbench::EventPool::load(pool_path);
  sepbench::SimulateOptions options;
  options.duration_s = duration;
  if (perturb_snr) options.perturb_snr_db = *perturb_snr;
  const std::string manifest =
      sepbench::simulate_dataset(pool, preset, count, seed, out_dir, options);
  if (verbose(globals)) {
    std::cerr << "wrote " << count << " scenes to " << out_dir << " ("
              << manifest << ")\n";
  }
  return 0;
}

int run_prompt(const std::string& operator_name,
               const std::vector<std::string>& captions_raw, int template_id,
               std::uint64_t seed, const std::string& templates_path) {
  const sepbench::TemplateLibrary library =
      templates_path.empty() ? sepbench::TemplateLibrary::builtin()
                             : sepbench::TemplateLibrary::load(templates_path);
  const sepbench::SeparationOp op = sepbench::parse_operator(operator_name);
  const std::vector<std::string> captions = split_captions(captions_raw);
  sepbench::require(!captions.empty(), sepbench::Errc::kPrecondition,
                    "at least one caption is required");
  sepbench::PromptSpec spec;
  if (template_id >= 0) {
    spec = sepbench::compose_prompt(library, op, captions, template_id);
  } else {
    sepbench::Rng rng(seed);
    spec = sepbench::compose_prompt(library, op, captions, rng);
  }
  std::cout << spec.text << "\n";
  return 0;
}

int run_curves(const GlobalFlags& globals, const std::string& input,
               int median, const std::string& out, double f_lo, double f_hi) {
  const sepbench::AudioClip clip =
      sepbench::downmix_mono(sepbench::read_wav(input));
  const sepbench::ControlCurves curves =
      sepbench::extract_curves(clip, median, f_lo, f_hi);
  sepbench::write_curves(curves, out);
  if (verbose(globals)) {
    std::cerr << "wrote " << curves.rms.size() << " curve frames to " << out
              << "\n";
  }
  return 0;
}

int run_oracle_separate(const GlobalFlags& globals,
                        const std::string& manifest_path,
                        const std::string& operator_name,
                        const std::string& out_dir,
                        const std::string& method_name) {
  const sepbench::Manifest manifest = sepbench::load_manifest(manifest_path);
  const sepbench::SeparationOp op = sepbench::parse_operator(operator_name);
  const sepbench::SeparateMethod method =
      method_name == "gate" ? sepbench::SeparateMethod::kGate
                            : sepbench::SeparateMethod::kIrm;
  sepbench::require(method_name == "irm" || method_name == "gate",
                    sepbench::Errc::kInvalidArgument,
                    "method must be irm or gate");
  fs::create_directories(out_dir);

  sepbench::parallel_for(
      static_cast<std::int64_t>(manifest.entries.size()),
      [&](std::int64_t index) {
        const sepbench::ManifestEntry& entry =
            manifest.entries[static_cast<std::size_t>(index)];
        const sepbench::AudioClip mixture = sepbench::read_wav(
            sepbench::resolve_path(manifest, entry.mixture_path));
        std::vector<sepbench::AudioClip> stems;
        for (const auto& rel : entry.stem_paths) {
          stems.push_back(
              sepbench::read_wav(sepbench::resolve_path(manifest, rel)));
        }
        const sepbench::AudioClip estimate = sepbench::oracle_separate_rendered(
            mixture, stems, entry.scene.target_indices, op, method);
        sepbench::write_wav(
            estimate, (fs::path(out_dir) / (entry.scene.id + ".wav")).string());
      });
  if (verbose(globals)) {
    std::cerr << "separated " << manifest.entries.size() << " scenes into "
              << out_dir << "\n";
  }
  return 0;
}

int run_evaluate(const GlobalFlags& globals, const std::string& manifest_path,
                 const std::string& estimates_dir, const std::string& metrics,
                 const std::string& ref_emb, const std::string& est_emb,
                 const std::string& text_emb, const std::string& report_path,
                 const std::string& csv_path) {
  const sepbench::Manifest manifest = sepbench::load_manifest(manifest_path);
  sepbench::EvaluateOptions options;
  options.metrics = parse_metric_list(metrics);
  options.estimates_dir = estimates_dir;
  options.ref_embeddings = ref_emb;
  options.est_embeddings = est_emb;
  options.text_embeddings = text_emb;
  const sepbench::EvalReport report =
      sepbench::evaluate_manifest(manifest, options);

  const std::string rendered = sepbench::report_to_json(report);
  if (report_path.empty()) {
    std::cout << rendered;
  } else if (report_path.size() > 4 &&
             report_path.substr(report_path.size() - 4) == ".csv") {
    write_text_file(report_path, sepbench::report_to_csv(report));
  } else {
    write_text_file(report_path, rendered);
  }
  if (!csv_path.empty()) {
    write_text_file(csv_path, sepbench::report_to_csv(report));
  }
  if (verbose(globals)) {
    for (const auto& [name, agg] : report.aggregates) {
      std::cerr << name << ": mean " << agg.mean << " over " << agg.count
                << " scenes";
      if (agg.nonfinite > 0) {
        std::cerr << " (" << agg.nonfinite << " non-finite excluded)";
      }
      std::cerr << "\n";
    }
    if (!report.skipped.empty()) {
      std::cerr << report.skipped.size() << " scenes skipped\n";
    }
  }
  return 0;
}

int run_embed_metrics(const std::string& ref_emb, const std::string& est_emb,
                      const std::string& text_emb,
                      const std::string& metrics_csv) {
  const std::set<std::string> metrics = parse_metric_list(metrics_csv);
  json result = json::object();

  const sepbench::EmbeddingSet est = sepbench::load_embeddings(est_emb);
  if (metrics.count("fad") || metrics.count("clapa")) {
    sepbench::require(!ref_emb.empty(), sepbench::Errc::kInvalidArgument,
                      "--ref-emb is required for fad/clapa");
  }
  if (!ref_emb.empty()) {
    const sepbench::EmbeddingSet ref = sepbench::load_embeddings(ref_emb);
    if (metrics.count("fad")) {
      result["fad"] = sepbench::frechet_distance(ref, est);
    }
    if (metrics.count("clapa")) {
      sepbench::require(ref.count == est.count && ref.dim == est.dim,
                        sepbench::Errc::kShape,
                        "clapa needs matching ref/est embedding shapes");
      double sum = 0.0;
      for (std::size_t r = 0; r < ref.count; ++r) {
        sum += sepbench::cosine_score(
            std::span<const float>(ref.values).subspan(r * ref.dim, ref.dim),
            std::span<const float>(est.values).subspan(r * est.dim, est.dim));
      }
      result["clapa"] = sum / static_cast<double>(ref.count);
    }
  }
  if (metrics.count("clap")) {
    sepbench::require(!text_emb.empty(), sepbench::Errc::kInvalidArgument,
                      "--text-emb is required for clap");
    const sepbench::EmbeddingSet text = sepbench::load_embeddings(text_emb);
    sepbench::require(text.count == est.count && text.dim == est.dim,
                      sepbench::Errc::kShape,
                      "clap needs matching text/est embedding shapes");
    double sum = 0.0;
    for (std::size_t r = 0; r < text.count; ++r) {
      sum += sepbench::cosine_score(
          std::span<const float>(text.values).subspan(r * text.dim, text.dim),
          std::span<const float>(est.values).subspan(r * est.dim, est.dim));
    }
    result["clap"] = sum / static_cast<double>(text.count);
  }
  std::cout << result.dump() << "\n";
  return 0;
}

int run_diffusion_demo(const GlobalFlags& globals, double mu, double stddev,
                       int steps, int order, std::size_t samples,
                       std::uint64_t seed, const std::string& dump_path) {
  sepbench::require(stddev > 0.0, sepbench::Errc::kPrecondition,
                    "--std must be positive");
  sepbench::GaussianDataModel model;
  model.mu = {mu};
  model.s = {stddev};
  const sepbench::DenoiserFn denoiser = model.denoiser();
  sepbench::SampleOptions options;
  options.steps = steps;
  options.order = order;

  std::vector<double> values(samples);
  sepbench::parallel_for(
      static_cast<std::int64_t>(samples), [&](std::int64_t i) {
        sepbench::Rng rng =
            sepbench::Rng::derive(seed, static_cast<std::uint64_t>(i));
        values[static_cast<std::size_t>(i)] =
            sepbench::sample_chain(denoiser, 1, rng, options)[0];
      });

  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const double v : values) var += (v - mean) * (v - mean);
  var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;
  const double w2 = sepbench::wasserstein2_to_gaussian(values, mu, stddev);

  const json out = {{"mean", mean},
                    {"std", std::sqrt(var)},
                    {"w2", w2},
                    {"target_mean", mu},
                    {"target_std", stddev},
                    {"samples", samples},
                    {"steps", steps},
                    {"order", order},
                    {"seed", seed}};
  std::cout << out.dump() << "\n";

  if (!dump_path.empty()) {
    sepbench::EmbeddingSet set;
    set.count = values.size();
    set.dim = 1;
    set.source_tag = "diffusion-demo";
    set.values.reserve(values.size());
    for (const double v : values) {
      set.values.push_back(static_cast<float>(v));
    }
    sepbench::save_embeddings(set, dump_path);
    if (verbose(globals)) {
      std::cerr << "dumped " << samples << " samples to " << dump_path << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt-driven sound-separation benchmark toolkit"};
  app.set_version_flag("--version", kVersion);
  app.fallthrough();
  app.require_subcommand(0, 1);

  GlobalFlags globals;
  app.add_option("--threads", globals.threads,
                 "worker threads (0 = all available; default from "
                 "SEPBENCH_THREADS)");
  app.add_option("--log-level", globals.log_level, "quiet|info")
      ->check(CLI::IsMember({"quiet", "info"}));

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "render mixture scenes and a JSON-lines manifest");
  std::string preset_name;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string pool_path;
  std::string out_dir;
  double duration = -1.0;
  double perturb_snr = std::numeric_limits<double>::quiet_NaN();
  simulate->add_option("--preset", preset_name, "train|audiocaps|esc50|fsdmix|asfx|imitation")
      ->required();
  simulate->add_option("--count", count, "number of scenes")->required();
  simulate->add_option("--seed", seed, "run seed (default 0)");
  simulate->add_option("--pool", pool_path, "pool.jsonl or a directory of WAVs")
      ->required();
  simulate->add_option("--out", out_dir, "output directory")->required();
  simulate->add_option("--duration", duration, "scene seconds (preset default)");
  simulate->add_option("--perturb-snr", perturb_snr,
                       "also write a noise-perturbed mixture at this SNR (dB)");

  // prompt
  auto* prompt = app.add_subcommand("prompt", "realize an operator prompt");
  std::string operator_name;
  std::vector<std::string> captions;
  int template_id = -1;
  std::uint64_t prompt_seed = 0;
  std::string templates_path;
  prompt->add_option("--operator", operator_name, "extract|remove")->required();
  prompt->add_option("--captions", captions,
                     "target captions (repeat the flag, or one "
                     "comma-separated value)")
      ->required();
  prompt->add_option("--template-id", template_id, "force a template id");
  prompt->add_option("--seed", prompt_seed, "template draw seed (default 0)");
  prompt->add_option("--templates", templates_path,
                     "external template TSV (default: built-in asset)");

  // curves
  auto* curves = app.add_subcommand(
      "curves", "extract 40 Hz RMS/pitch control curves from a WAV");
  std::string curves_input;
  int median = 0;
  std::string curves_out;
  double f_lo = 60.0;
  double f_hi = 1000.0;
  curves->add_option("--input", curves_input, "input WAV")->required();
  curves->add_option("--median", median, "median filter size (0,3,6,9,12,15,19)");
  curves->add_option("--out", curves_out, "output curve file")->required();
  curves->add_option("--f-lo", f_lo, "pitch search floor (Hz)");
  curves->add_option("--f-hi", f_hi, "pitch search ceiling (Hz)");

  // oracle-separate
  auto* oracle = app.add_subcommand(
      "oracle-separate", "ground-truth-driven separation over a manifest");
  std::string oracle_manifest;
  std::string oracle_operator = "extract";
  std::string oracle_out;
  std::string method = "irm";
  oracle->add_option("--manifest", oracle_manifest, "manifest.jsonl")->required();
  oracle->add_option("--operator", oracle_operator, "extract|remove");
  oracle->add_option("--out", oracle_out, "estimates directory")->required();
  oracle->add_option("--method", method, "irm|gate");

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "score estimates against a manifest");
  std::string eval_manifest;
  std::string estimates_dir;
  std::string metrics = "sdri,mel,f1";
  std::string ref_emb;
  std::string est_emb;
  std::string text_emb;
  std::string report_path;
  std::string csv_path;
  evaluate->add_option("--manifest", eval_manifest, "manifest.jsonl")->required();
  evaluate->add_option("--estimates", estimates_dir, "directory of <id>.wav")
      ->required();
  evaluate->add_option("--metrics", metrics, "sdri,mel,f1[,clap,clapa,fad]");
  evaluate->add_option("--ref-emb", ref_emb, "reference embeddings (dir or file)");
  evaluate->add_option("--est-emb", est_emb, "estimate embeddings (dir or file)");
  evaluate->add_option("--text-emb", text_emb, "text embeddings (dir)");
  evaluate->add_option("--report", report_path,
                       "report path (.json or .csv; stdout when omitted)");
  evaluate->add_option("--csv", csv_path, "also write per-scene CSV here");

  // embed-metrics
  auto* embed = app.add_subcommand(
      "embed-metrics", "cosine and Frechet metrics over embedding files");
  std::string em_ref;
  std::string em_est;
  std::string em_text;
  std::string em_metrics = "fad";
  embed->add_option("--est-emb", em_est, "estimate embeddings file")->required();
  embed->add_option("--ref-emb", em_ref, "reference embeddings file");
  embed->add_option("--text-emb", em_text, "text embeddings file");
  embed->add_option("--metrics", em_metrics, "clap,clapa,fad");

  // diffusion-demo
  auto* demo = app.add_subcommand(
      "diffusion-demo", "sample the analytic Gaussian model and report moments");
  double mu = 3.0;
  double stddev = 0.5;
  int steps = 50;
  int order = 2;
  std::size_t n_samples = 100000;
  std::uint64_t demo_seed = 1;
  std::string dump_path;
  demo->add_option("--mu", mu, "target mean");
  demo->add_option("--std", stddev, "target standard deviation");
  demo->add_option("--steps", steps, "solver steps");
  demo->add_option("--order", order, "solver order (1|2)");
  demo->add_option("--samples", n_samples, "number of chains");
  demo->add_option("--seed", demo_seed, "run seed");
  demo->add_option("--dump", dump_path, "write samples as an embedding file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kExitValidation;
  }

  apply_globals(globals);

  try {
    if (simulate->parsed()) {
      return run_simulate(globals, preset_name, count, seed, pool_path,
                          out_dir,
                          duration > 0 ? std::optional<double>(duration)
                                       : std::nullopt,
                          std::isnan(perturb_snr)
                              ? std::nullopt
                              : std::optional<double>(perturb_snr));
    }
    if (prompt->parsed()) {
      return run_prompt(operator_name, captions, template_id, prompt_seed,
                        templates_path);
    }
    if (curves->parsed()) {
      return run_curves(globals, curves_input, median, curves_out, f_lo, f_hi);
    }
    if (oracle->parsed()) {
      return run_oracle_separate(globals, oracle_manifest, oracle_operator,
                                 oracle_out, method);
    }
    if (evaluate->parsed()) {
      return run_evaluate(globals, eval_manifest, estimates_dir, metrics,
                          ref_emb, est_emb, text_emb, report_path, csv_path);
    }
    if (embed->parsed()) {
      return run_embed_metrics(em_ref, em_est, em_text, em_metrics);
    }
    if (demo->parsed()) {
      return run_diffusion_demo(globals, mu, stddev, steps, order, n_samples,
                                demo_seed, dump_path);
    }
  } catch (const sepbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_io() ? kExitIo : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  // No subcommand given.
  std::cerr << app.help() << "\n";
  return kExitValidation;
}
