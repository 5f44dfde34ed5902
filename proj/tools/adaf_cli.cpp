/*
 * Copyright 2026 The adaf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "adaf/analysis.hpp"
#include "adaf/gradcheck.hpp"
#include "adaf/run.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) adaf::fail(adaf::ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

fs::path output_dir(const std::string& out, const fs::path& checkpoint) {
  return out.empty() ? checkpoint.parent_path() : fs::path(out);
}

std::string run_label(const fs::path& log) {
  const auto cfg = log.parent_path() / "resolved-config.json";
  if (!fs::exists(cfg)) return log.stem().string();
  const auto j = adaf::read_json_file(cfg);
  const auto fe = adaf::frontend_config_from_json(j.at("frontend"));
  return adaf::frontend::to_string(fe.kind) + "-nf" + std::to_string(fe.n_filterbanks) + "-" +
         adaf::frontend::to_string(fe.pooling);
}

int cmd_synth(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  auto spec = adaf::io::load_synth_spec(config);
  if (seed) spec.seed = *seed;
  const auto set = adaf::io::generate_synthetic(spec);
  adaf::io::write_synthetic(set, out);
  std::printf("wrote %zu clips in %zu classes to %s\n", set.clips.size(), set.classes.size(),
              out.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out,
              std::optional<std::uint64_t> seed, const std::string& checkpoint) {
  auto config = adaf::load_run_config(config_path);
  if (!out.empty()) config.output_dir = out;
  if (seed) config.train.seed = *seed;
  adaf::run::TrainOptions opts;
  opts.resume_from = opt_path(checkpoint);
  opts.on_epoch = [](const adaf::training::EpochMetrics& m) {
    std::printf("epoch %4zu  lr %.3e  train %.5f  valid %.5f  map %.4f  top-k %.4f  acc %.4f\n",
                m.epoch, m.lr, m.train_loss, m.valid_loss, m.map, m.top_k_patch, m.clip_accuracy);
    std::fflush(stdout);
  };
  const auto result = adaf::run::train(config, opts);
  std::printf("output in %s\n", result.config.output_dir.string().c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest, const std::string& split,
             const std::string& out) {
  if (checkpoint.empty()) adaf::fail(adaf::ErrorKind::kValidation, "--checkpoint: required");
  const auto loaded = adaf::run::load_model(fs::path(checkpoint));
  const auto data = adaf::run::evaluation_data(loaded.config, opt_path(manifest), split);
  const auto& tc = loaded.config.train;
  const auto report = adaf::training::evaluate(loaded.model, data, {tc.batch_size, tc.huber_delta, tc.top_k});
  const auto dir = output_dir(out, checkpoint);
  const auto stem = fs::path(checkpoint).stem().string() + "-eval-" + data.split;
  write_file(dir / (stem + ".json"), adaf::training::to_json(report).dump(2) + "\n");
  write_file(dir / (stem + ".csv"), adaf::training::per_class_csv(report));
  std::printf("map %.6f  top-%zu patch %.6f  clip accuracy %.6f  (%zu clips, %s)\n", report.map,
              report.top_k, report.top_k_patch, report.clip_accuracy, report.n_clips,
              (dir / (stem + ".json")).string().c_str());
  return 0;
}

int cmd_analyze(const std::string& checkpoint, const std::string& manifest, const std::string& split,
                const std::string& which, const std::string& out, std::optional<std::size_t> bank) {
  namespace an = adaf::analysis;
  if (checkpoint.empty()) adaf::fail(adaf::ErrorKind::kValidation, "--checkpoint: required");
  const auto loaded = adaf::run::load_model(fs::path(checkpoint));
  const auto dir = output_dir(out, checkpoint);
  const auto stem = fs::path(checkpoint).stem().string() + "-" + which;
  json summary = {{"checkpoint", checkpoint}, {"analysis", which}};

  if (which == "filters") {
    const auto& fe = loaded.model.front_end();
    if (fe.config().kind != adaf::frontend::Kind::kBankOfFilterbanks) {
      adaf::fail(adaf::ErrorKind::kUnsupportedAnalysis, "filter export needs a bank-of-filterbanks model");
    }
    std::vector<std::size_t> banks;
    if (bank) banks.push_back(*bank);
    else for (std::size_t b = 0; b < fe.banks().size(); ++b) banks.push_back(b);
    json files = json::array();
    for (auto b : banks) {
      const auto f = an::export_filters(loaded.model, b);
      const auto base = stem + "-bank" + std::to_string(b);
      write_file(dir / (base + "-time.csv"), an::filters_time_csv(f));
      write_file(dir / (base + "-spectrum.csv"), an::filters_spectrum_csv(f));
      files.push_back(base + "-time.csv");
      files.push_back(base + "-spectrum.csv");
    }
    summary["files"] = files;
    summary["filters_per_bank"] = fe.config().filters_per_bank;
    summary["taps"] = fe.config().kernel_length;
  } else if (which == "routing" || which == "distance") {
    if (loaded.model.front_end().config().kind == adaf::frontend::Kind::kBaseline) {
      adaf::fail(adaf::ErrorKind::kUnsupportedAnalysis, "routing analysis needs a moe or bank-of-filterbanks model");
    }
    const auto data = adaf::run::evaluation_data(loaded.config, opt_path(manifest), split);
    const auto routes = an::route_weights(loaded.model, data, loaded.config.train.batch_size);
    const auto profiles = an::class_profiles(routes, data.classes);
    summary["split"] = data.split;
    if (which == "routing") {
      write_file(dir / (stem + "-classes.csv"), an::profiles_csv(profiles));
      write_file(dir / (stem + "-clips.csv"), an::profiles_csv(an::clip_profiles(routes)));
      json rows = json::array();
      for (const auto& p : profiles) {
        rows.push_back({{"class", p.name}, {"mean_weights", p.mean_weights}, {"n_patches", p.n_patches}});
      }
      summary["profiles"] = rows;
    } else {
      const auto m = an::distance_matrix(profiles);
      write_file(dir / (stem + ".csv"), an::to_csv(m));
      summary["labels"] = m.labels;
    }
  } else {
    adaf::fail(adaf::ErrorKind::kValidation, "--which: expected routing, filters or distance");
  }
  write_file(dir / (stem + ".json"), summary.dump(2) + "\n");
  std::printf("wrote %s\n", (dir / (stem + ".json")).string().c_str());
  return 0;
}

int cmd_gradcheck(std::size_t seeds, const std::string& out) {
  adaf::gradcheck::Options opts;
  opts.seeds = seeds;
  const auto rows = adaf::gradcheck::run_all(opts);
  bool ok = true;
  std::string csv = "name,seeds,coords,retried,max_rel_error,result\n";
  std::printf("%-24s %6s %8s %8s %14s  %s\n", "case", "seeds", "coords", "retried", "max rel err",
              "result");
  for (const auto& r : rows) {
    std::printf("%-24s %6zu %8zu %8zu %14.3e  %s\n", r.name.c_str(), r.seeds, r.coords, r.retried,
                r.max_rel_error, r.pass ? "pass" : "FAIL");
    csv += r.name + "," + std::to_string(r.seeds) + "," + std::to_string(r.coords) + "," +
           std::to_string(r.retried) + "," +
           adaf::analysis::format_number(r.max_rel_error) + "," + (r.pass ? "pass" : "fail") + "\n";
    ok = ok && r.pass;
  }
  if (!out.empty()) write_file(out, csv);
  if (!ok) adaf::fail(adaf::ErrorKind::kNumerical, "gradient check failed");
  return 0;
}

int cmd_compare(const std::vector<std::string>& logs, const std::string& metric, const std::string& out) {
  std::vector<adaf::analysis::RunCurve> runs;
  for (const auto& log : logs) runs.push_back({run_label(log), adaf::run::read_metrics_log(log)});
  const auto csv = adaf::analysis::to_csv(adaf::analysis::compare_runs(std::move(runs), metric));
  if (out.empty()) std::fputs(csv.c_str(), stdout);
  else write_file(out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaf: content-adaptive learnable audio front ends"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, manifest, split, which, metric = "top_k_patch";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> bank;
  std::size_t seeds = 20;
  std::vector<std::string> logs;

  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset (WAVs + manifests)");
  synth->add_option("--config", config, "Synthetic spec JSON")->required();
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--seed", seed, "Override the spec's seed");

  auto* train = app.add_subcommand("train", "Train a model from a run config");
  train->add_option("--config", config, "Run config JSON")->required();
  train->add_option("--out", out, "Override output_dir");
  train->add_option("--seed", seed, "Override train.seed");
  train->add_option("--checkpoint", checkpoint, "Resume from this checkpoint");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--manifest", manifest, "Manifest to evaluate (default: the run's own data)");
  eval->add_option("--split", split, "Split name (default: valid)");
  eval->add_option("--out", out, "Output directory (default: next to the checkpoint)");

  auto* analyze = app.add_subcommand("analyze", "Routing profiles, distance matrix or filter export");
  analyze->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  analyze->add_option("--which", which, "routing | filters | distance")
      ->required()
      ->check(CLI::IsMember({"routing", "filters", "distance"}));
  analyze->add_option("--manifest", manifest, "Manifest to analyze (default: the run's own data)");
  analyze->add_option("--split", split, "Split name (default: valid)");
  analyze->add_option("--bank", bank, "Filter bank index (filters only; default: all)");
  analyze->add_option("--out", out, "Output directory (default: next to the checkpoint)");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks in 64-bit");
  grad->add_option("--seeds", seeds, "Random instances per case")->check(CLI::PositiveNumber);
  grad->add_option("--out", out, "Also write the table as CSV");

  auto* compare = app.add_subcommand("compare", "Join metrics logs on the epoch axis");
  compare->add_option("logs", logs, "metrics.jsonl files")->required();
  compare->add_option("--metric", metric, "Column to compare")
      ->check(CLI::IsMember({"lr", "train_loss", "valid_loss", "map", "top_k_patch", "clip_accuracy"}));
  compare->add_option("--out", out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  }

  try {
    if (*synth) return cmd_synth(config, out, seed);
    if (*train) return cmd_train(config, out, seed, checkpoint);
    if (*eval) return cmd_eval(checkpoint, manifest, split, out);
    if (*analyze) return cmd_analyze(checkpoint, manifest, split, which, out, bank);
    if (*grad) return cmd_gradcheck(seeds, out);
    if (*compare) return cmd_compare(logs, metric, out);
  } catch (const adaf::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(adaf::kind_name(e.kind())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
