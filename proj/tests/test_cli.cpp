// SPDX-License-Identifier: Apache-2.0
// End-to-end runs of the fdv binary on a tiny corpus.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "fdv/eval.hpp"
#include "fdv/image_io.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef FDV_CLI_PATH
#error "FDV_CLI_PATH must point at the fdv binary"
#endif

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(FDV_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// One corpus and config shared by the whole suite.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixtures::TempDir("cli");
    write_text(root() / "spec.json",
               R"({"n_writers": 4, "genuine_per_writer": 12, "skilled_per_writer": 3,
                   "canvas_width": 96, "canvas_height": 48, "seed": 3})");
    write_text(root() / "cfg.json", config(2));
    write_text(root() / "cfg16.json", config(4));
    const CliResult r = run("gen-synthetic --spec " + (root() / "spec.json").string() + " --out " + corpus().string());
    ASSERT_EQ(r.code, 0) << r.out;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string config(int latent) {
    return R"({"schema_version": 1, "seed": 11,
               "preprocess": {"height": 8, "width": 16},
               "model": {"hidden_dims": [12, 12, 12], "latent_dim": )" +
           std::to_string(latent) + R"(},
               "train": {"rounds": 30, "batch_size": 4, "eta1": 0.003, "eta2": 0.001, "margin": 2},
               "protocol": {"train_genuine": 10, "random_test_per_writer": 1}})";
  }
  static fs::path root() { return dir_->path(); }
  static fs::path corpus() { return root() / "corpus"; }
  static std::string data() { return " --data " + corpus().string(); }
  static std::string cfg(const char* name = "cfg.json") { return " --config " + (root() / name).string(); }

  static fixtures::TempDir* dir_;
};

fixtures::TempDir* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, ValidateListsWriters) {
  const CliResult r = run("validate" + data() + cfg());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("w000"), std::string::npos);
  EXPECT_NE(r.out.find("ok: 4 writers"), std::string::npos) << r.out;
}

TEST_F(Cli, GenSyntheticRefusesWithoutForce) {
  EXPECT_EQ(run("gen-synthetic --spec " + (root() / "spec.json").string() + " --out " + corpus().string()).code, 1);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("train" + data()).code, 1);
  EXPECT_EQ(run("evaluate" + data() + cfg() + " --out " + (root() / "x").string() + " --jobs 0").code, 1);
  write_text(root() / "bad.json", R"({"schema_version": 1, "trian": {}})");
  EXPECT_EQ(run("validate" + data() + " --config " + (root() / "bad.json").string()).code, 1);
}

TEST_F(Cli, TrainIsIndependentOfJobs) {
  const fs::path a = root() / "m1", b = root() / "m2";
  ASSERT_EQ(run("train" + data() + cfg() + " --out " + a.string() + " --jobs 1").code, 0);
  ASSERT_EQ(run("train" + data() + cfg() + " --out " + b.string() + " --jobs 3").code, 0);
  int n = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
    ++n;
  }
  EXPECT_EQ(n, 8);
  const std::string tel = slurp(a / "w001.telemetry.csv");
  EXPECT_EQ(tel.substr(0, tel.find('\n')), "round,loss_vae,loss_fd");
}

TEST_F(Cli, UnknownWriterExitsTwo) {
  EXPECT_EQ(run("train" + data() + cfg() + " --out " + (root() / "m3").string() + " --writer nobody").code, 2);
  EXPECT_EQ(run("validate --data " + (root() / "nowhere").string()).code, 2);
}

TEST_F(Cli, EvaluateThenVerifyAgree) {
  const fs::path rep = root() / "rep", models = root() / "m4";
  const CliResult r = run("evaluate" + data() + cfg() + " --out " + rep.string() + " --jobs 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("w000"), std::string::npos);
  for (const char* f : {"report.json", "writers.csv", "scores.csv", "summary.txt", "splits.json"}) {
    EXPECT_TRUE(fs::exists(rep / f)) << f;
  }

  // Aggregate recomputed from the per-writer table.
  const json report = json::parse(slurp(rep / "report.json"));
  const auto rows = csv_rows(slurp(rep / "writers.csv"));
  ASSERT_EQ(rows.size(), 5u);
  std::vector<double> eer_s, frr;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    frr.push_back(std::stod(rows[i][6]));
    eer_s.push_back(std::stod(rows[i][9]));
  }
  const fdv::Summary se = fdv::summarize(eer_s), sf = fdv::summarize(frr);
  EXPECT_NEAR(report["aggregate"]["eer_skilled"]["mean"].get<double>(), se.mean, 1e-12);
  EXPECT_NEAR(report["aggregate"]["eer_skilled"]["stddev"].get<double>(), se.stddev, 1e-12);
  EXPECT_NEAR(report["aggregate"]["frr"]["mean"].get<double>(), sf.mean, 1e-12);
  EXPECT_EQ(report["seed"].get<std::uint64_t>(), 11u);

  // A re-run with a different job count writes identical files.
  const fs::path rep2 = root() / "rep2";
  ASSERT_EQ(run("evaluate" + data() + cfg() + " --out " + rep2.string() + " --jobs 1").code, 0);
  for (const char* f : {"report.json", "writers.csv", "scores.csv"}) EXPECT_EQ(slurp(rep / f), slurp(rep2 / f)) << f;

  // verify reproduces the evaluation score of a held-out genuine.
  ASSERT_EQ(run("train" + data() + cfg() + " --out " + models.string() + " --writer w002").code, 0);
  std::string want;
  for (const auto& row : csv_rows(slurp(rep / "scores.csv"))) {
    if (row[0] == "w002" && row[1] == "w002/genuine/010.png") want = row[3];
  }
  ASSERT_FALSE(want.empty());
  const CliResult v = run("verify --model " + (models / "w002.fdv").string() + " --image " +
                    (corpus() / "writers/w002/genuine/010.png").string());
  ASSERT_EQ(v.code, 0);
  const json out = json::parse(v.out);
  EXPECT_EQ(out["score"].get<double>(), std::stod(want));
  EXPECT_EQ(out["decision"], out["score"].get<double>() >= 0 ? "genuine" : "forgery");
}

TEST_F(Cli, DryRunWritesSplitsOnly) {
  const fs::path rep = root() / "dry";
  ASSERT_EQ(run("evaluate" + data() + cfg() + " --out " + rep.string() + " --dry-run").code, 0);
  EXPECT_TRUE(fs::exists(rep / "splits.json"));
  EXPECT_FALSE(fs::exists(rep / "report.json"));
}

TEST_F(Cli, SeedOverrideIsReported) {
  const fs::path rep = root() / "lp_env.svg";
  const CliResult r = run("latent-plot" + data() + cfg() + " --writer w001 --out " + rep.string(), "FDV_SEED=5");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["seed_source"], "FDV_SEED");
}

TEST_F(Cli, LatentPlot) {
  EXPECT_EQ(run("latent-plot" + data() + cfg("cfg16.json") + " --writer w000 --out " + (root() / "x.svg").string())
                .code,
            1);
  const fs::path a = root() / "a.svg", b = root() / "b.svg", c = root() / "c.svg";
  ASSERT_EQ(run("latent-plot" + data() + cfg() + " --writer w000 --out " + a.string()).code, 0);
  ASSERT_EQ(run("latent-plot" + data() + cfg() + " --writer w000 --out " + b.string()).code, 0);
  const CliResult nofd = run("latent-plot" + data() + cfg() + " --writer w000 --without-fd --out " + c.string());
  ASSERT_EQ(nofd.code, 0);
  EXPECT_EQ(json::parse(nofd.out)["feature_disentangling"], false);
  const std::string svg = slurp(a);
  EXPECT_EQ(svg, slurp(b));
  EXPECT_NE(svg, slurp(c));
  std::size_t legends = 0;
  for (std::size_t p = svg.find("class=\"legend\""); p != std::string::npos; p = svg.find("class=\"legend\"", p + 1)) {
    ++legends;
  }
  EXPECT_EQ(legends, 3u);
  for (const char* label : {"genuine", "skilled forgery", "random forgery"}) {
    EXPECT_NE(svg.find(std::string(">") + label + "<"), std::string::npos) << label;
  }
}

TEST_F(Cli, CorruptImageNamesFile) {
  const fs::path copy = root() / "corrupt";
  fs::copy(corpus(), copy, fs::copy_options::recursive);
  write_text(copy / "writers/w001/genuine/003.png", "not an image");
  const fs::path err = root() / "err.txt";
  const std::string cmd = std::string(FDV_CLI_PATH) + " evaluate --data " + copy.string() + cfg() + " --out " +
                          (root() / "rep3").string() + " 2>" + err.string() + " >/dev/null";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(slurp(err).find("003.png"), std::string::npos) << slurp(err);
}
