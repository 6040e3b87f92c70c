// SPDX-License-Identifier: Apache-2.0
// fdv: command-line front end.
//
//   gen-synthetic  write a synthetic signature corpus
//   validate       check a dataset layout and decode every image
//   train          train per-writer models (<writer>.fdv + telemetry CSV)
//   verify         score one image against one model
//   evaluate       full protocol: train, score, report
//   latent-plot    2-D feature scatter plot of one writer as SVG
//
// Exit codes: 0 ok, 1 usage, 2 data, 3 numeric.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fdv/config.hpp"
#include "fdv/container.hpp"
#include "fdv/dataset.hpp"
#include "fdv/errors.hpp"
#include "fdv/eval.hpp"
#include "fdv/image_io.hpp"
#include "fdv/latent.hpp"
#include "fdv/runtime.hpp"
#include "fdv/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void log(const std::string& msg) { std::cerr << "fdv: " << msg << "\n"; }

fdv::RunConfig config_from(const std::string& path) {
  fdv::RunConfig cfg = path.empty() ? fdv::RunConfig{} : fdv::load_run_config(path);
  fdv::apply_seed_override(cfg);
  cfg.validate();
  return cfg;
}

void check_jobs(int jobs) {
  if (jobs < 1) throw fdv::UsageError("--jobs must be >= 1");
}

int cmd_gen_synthetic(const std::string& spec_path, const std::string& out, bool force, int jobs) {
  check_jobs(jobs);
  const fdv::CorpusSpec spec = spec_path.empty() ? fdv::CorpusSpec{} : fdv::load_corpus_spec(spec_path);
  const fdv::CorpusSummary s = fdv::gen_corpus(spec, out, force, jobs);
  std::printf("wrote %d writers, %d genuine and %d skilled images to %s\n", s.writers, s.genuine_files,
              s.skilled_files, out.c_str());
  return 0;
}

int cmd_validate(const std::string& data, const std::string& config) {
  const fdv::RunConfig cfg = config_from(config);
  const fdv::Dataset ds = fdv::scan_dataset(data);
  const fdv::ValidationResult v = fdv::validate_dataset(ds, cfg.protocol);
  std::printf("%-16s %8s %8s\n", "writer", "genuine", "skilled");
  for (const auto& w : v.inventory) std::printf("%-16s %8zu %8zu\n", w.writer_id.c_str(), w.genuine, w.skilled);
  for (const auto& w : v.warnings) std::printf("warning: %s\n", w.c_str());
  for (const auto& e : v.errors) std::printf("error: %s\n", e.c_str());
  if (!v.ok()) throw fdv::DataError(std::to_string(v.errors.size()) + " error(s) in dataset " + data);
  std::printf("ok: %zu writers\n", v.inventory.size());
  return 0;
}

std::vector<fdv::SplitPlan> selected_splits(const fdv::ProtocolPlan& plan, const std::string& writer) {
  if (writer.empty()) return plan.splits;
  for (const auto& s : plan.splits) {
    if (s.writer_id == writer) return {s};
  }
  for (const auto& s : plan.skipped) {
    if (s.writer_id == writer) throw fdv::DataError("writer " + writer + " cannot be trained: " + s.reason);
  }
  throw fdv::DataError("unknown writer: " + writer);
}

int cmd_train(const std::string& data, const std::string& config, const std::string& out, const std::string& writer,
              int jobs) {
  check_jobs(jobs);
  const fdv::RunConfig cfg = config_from(config);
  const fdv::Dataset ds = fdv::scan_dataset(data);
  fdv::ProtocolPlan plan = fdv::plan_protocol(ds, cfg.protocol);
  for (const auto& s : plan.skipped) log("warning: skipping writer " + s.writer_id + ": " + s.reason);
  plan.splits = selected_splits(plan, writer);
  if (plan.splits.empty()) throw fdv::DataError("no trainable writers in " + data);
  const fdv::ImageCache cache = fdv::load_images(plan, cfg.preprocess, jobs);

  fs::create_directories(out);
  std::mutex mu;
  fdv::parallel_for(plan.splits.size(), jobs, [&](std::size_t i) {
    const fdv::WriterSplit split = fdv::materialize_split(plan.splits[i], cache);
    const fdv::TrainConfig tcfg = cfg.train_for(split.writer_id);
    fdv::TrainedWriter t = fdv::train_writer(split, tcfg, cfg.svm);
    fdv::ModelContainer c;
    c.writer_id = split.writer_id;
    c.preprocess = cfg.preprocess;
    c.train = tcfg;
    c.svm_config = cfg.svm;
    c.score_seed = cfg.seed;
    c.vae = std::move(t.vae);
    c.svm = std::move(t.svm);
    fdv::save_container(fs::path(out) / (split.writer_id + ".fdv"), c);
    fdv::write_file_atomic(fs::path(out) / (split.writer_id + ".telemetry.csv"), fdv::telemetry_csv(t.telemetry));
    std::lock_guard lock(mu);
    log("trained " + split.writer_id + (c.svm.converged ? "" : " (warning: SVM hit max_iter)"));
  });
  std::printf("trained %zu writer(s) into %s (seed %llu from %s)\n", plan.splits.size(), out.c_str(),
              static_cast<unsigned long long>(cfg.seed), cfg.seed_source.c_str());
  return 0;
}

int cmd_verify(const std::string& model_path, const std::string& image_path, const std::optional<std::uint64_t>& seed) {
  const fdv::ModelContainer c = fdv::load_container(model_path);
  const fdv::GrayImage img = fdv::read_image(image_path);
  const fdv::NormalizedImage x = fdv::preprocess(img, c.preprocess);
  const std::uint64_t s = seed.value_or(c.score_seed);
  const double score = fdv::score_image(c.vae, c.svm, x, s);
  json out = {{"writer_id", c.writer_id},
              {"image", image_path},
              {"score", score},
              {"decision", score >= 0.0 ? "genuine" : "forgery"},
              {"seed", s}};
  std::printf("%s\n", out.dump().c_str());
  return 0;
}

int cmd_evaluate(const std::string& data, const std::string& config, const std::string& out, int jobs, bool dry_run) {
  check_jobs(jobs);
  const fdv::RunConfig cfg = config_from(config);
  const fdv::Dataset ds = fdv::scan_dataset(data);
  const fdv::ProtocolPlan plan = fdv::plan_protocol(ds, cfg.protocol);
  fs::create_directories(out);
  fdv::write_file_atomic(fs::path(out) / "splits.json", fdv::split_dump(plan).dump(2) + "\n");
  if (dry_run) {
    std::printf("dry run: %zu writer split(s) written to %s\n", plan.splits.size(),
                (fs::path(out) / "splits.json").c_str());
    return 0;
  }
  if (plan.splits.empty()) throw fdv::DataError("no evaluable writers in " + data);

  fdv::ProtocolRun run = fdv::run_protocol(ds, cfg, jobs, log);
  const std::string text = fdv::report_text(run.report);
  fdv::write_file_atomic(fs::path(out) / "report.json", fdv::report_json(run.report).dump(2) + "\n");
  fdv::write_file_atomic(fs::path(out) / "writers.csv", fdv::writers_csv(run.report));
  fdv::write_file_atomic(fs::path(out) / "scores.csv", fdv::scores_csv(run.outcomes));
  fdv::write_file_atomic(fs::path(out) / "summary.txt", text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int cmd_latent_plot(const std::string& data, const std::string& config, const std::string& writer,
                    const std::string& out, bool without_fd) {
  const fdv::RunConfig cfg = config_from(config);
  if (cfg.train.latent_dim != 2) {
    throw fdv::UsageError("latent-plot needs model.latent_dim = 2 so the features can be drawn directly in the plane; got " +
                          std::to_string(cfg.train.latent_dim));
  }
  const fdv::Dataset ds = fdv::scan_dataset(data);
  fdv::ProtocolPlan plan = fdv::plan_protocol(ds, cfg.protocol);
  plan.splits = selected_splits(plan, writer);
  const fdv::ImageCache cache = fdv::load_images(plan, cfg.preprocess, 1);
  const fdv::WriterSplit split = fdv::materialize_split(plan.splits.front(), cache);
  const fdv::LatentPlot p = fdv::latent_plot(split, cfg, !without_fd);
  fdv::write_file_atomic(out, p.svg);
  json summary = {{"writer_id", writer},
                  {"feature_disentangling", !without_fd},
                  {"separation", p.separation},
                  {"seed", cfg.seed},
                  {"seed_source", cfg.seed_source},
                  {"svg", out}};
  std::printf("%s\n", summary.dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  fdv::tune_allocator();
  CLI::App app{"Writer-dependent offline signature verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fdv 1.0.0");

  std::string spec, out, data, config, writer, model, image;
  bool force = false, dry_run = false, without_fd = false;
  int jobs = 1;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic signature corpus");
  gen->add_option("--spec", spec, "Corpus spec (JSON); defaults apply when omitted")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_flag("--force", force, "Replace the writers/ tree of a nonempty output directory");
  gen->add_option("--jobs", jobs, "Worker threads");

  auto* val = app.add_subcommand("validate", "Check a dataset and print its inventory");
  val->add_option("--data", data, "Dataset root")->required();
  val->add_option("--config", config, "Run config whose protocol counts are checked")->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train per-writer models");
  train->add_option("--data", data, "Dataset root")->required();
  train->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Model directory")->required();
  train->add_option("--writer", writer, "Train only this writer");
  train->add_option("--jobs", jobs, "Writers trained in parallel");

  auto* verify = app.add_subcommand("verify", "Score one image against a trained model");
  verify->add_option("--model", model, "Model container (.fdv)")->required();
  verify->add_option("--image", image, "Signature image (.png or .pgm)")->required();
  verify->add_option("--seed", seed, "Feature draw seed (default: the model's scoring seed)");

  auto* eval = app.add_subcommand("evaluate", "Run the evaluation protocol");
  eval->add_option("--data", data, "Dataset root")->required();
  eval->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Report directory")->required();
  eval->add_option("--jobs", jobs, "Writers evaluated in parallel");
  eval->add_flag("--dry-run", dry_run, "Only write splits.json");

  auto* plot = app.add_subcommand("latent-plot", "Plot one writer's 2-D features as SVG");
  plot->add_option("--data", data, "Dataset root")->required();
  plot->add_option("--config", config, "Run config with model.latent_dim = 2")->required()->check(CLI::ExistingFile);
  plot->add_option("--writer", writer, "Writer id")->required();
  plot->add_option("--out", out, "Output SVG path")->required();
  plot->add_flag("--without-fd", without_fd, "Train with eta2 = 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_synthetic(spec, out, force, jobs);
    if (*val) return cmd_validate(data, config);
    if (*train) return cmd_train(data, config, out, writer, jobs);
    if (*verify) return cmd_verify(model, image, seed);
    if (*eval) return cmd_evaluate(data, config, out, jobs, dry_run);
    if (*plot) return cmd_latent_plot(data, config, writer, out, without_fd);
  } catch (const fdv::UsageError& e) {
    log(std::string("error: ") + e.what());
    return kExitUsage;
  } catch (const fdv::NumericError& e) {
    log(std::string("numeric failure: ") + e.what());
    return kExitNumeric;
  } catch (const fdv::DataError& e) {
    log(std::string("data error: ") + e.what());
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    log(std::string("data error: ") + e.what());
    return kExitData;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return kExitData;
  }
  return kExitUsage;
}
