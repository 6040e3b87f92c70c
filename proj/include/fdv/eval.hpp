// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fdv/config.hpp"
#include "fdv/container.hpp"
#include "fdv/dataset.hpp"
#include "fdv/trainer.hpp"

namespace fdv {

enum class ForgeryKind { Skilled, Random };

const char* to_string(ForgeryKind kind);

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<std::pair<double, ForgeryKind>> forgery;

  // Same genuine scores, forgeries restricted to one kind.
  ScoreSet only(ForgeryKind kind) const;
};

struct ErrorRates {
  double frr = 0.0;
  double far = 0.0;
};

// Accept when score >= t: frr = #{genuine < t} / #genuine,
// far = #{forgery >= t} / #forgery. Throws UsageError on an empty class.
ErrorRates frr_far(const ScoreSet& scores, double t);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Candidate thresholds are every distinct score, the midpoints between
// consecutive distinct scores, and max + 1. FRR - FAR is nondecreasing over
// them; the first candidate where it reaches zero is returned exactly,
// otherwise the crossing is linearly interpolated from its two neighbours.
EerResult eer(const ScoreSet& scores);

// Accumulates one writer's scores: the genuine/forgery ScoreSet plus the
// per-image rows dumped to CSV.
struct ScoreRow {
  std::string writer_id;
  std::string image_id;
  std::string cls;  // genuine | skilled | random
  double score = 0.0;
};

struct WriterReport {
  std::string writer_id;
  std::size_t n_train_genuine = 0;
  std::size_t n_random_train = 0;
  std::size_t n_test_genuine = 0;
  std::size_t n_test_skilled = 0;
  std::size_t n_test_random = 0;
  // At the classifier's own decision threshold (score >= 0).
  double frr = 0.0;
  double far_skilled = 0.0;
  std::optional<double> far_random;
  EerResult eer_skilled;
  std::optional<EerResult> eer_random;
  bool svm_converged = true;
  std::size_t support_vectors = 0;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single writer
  std::size_t count = 0;
};

Summary summarize(const std::vector<double>& values);

struct EvalReport {
  std::vector<WriterReport> writers;  // sorted by writer id
  std::vector<SkippedWriter> skipped;
  Summary frr, far_skilled, eer_skilled;
  std::optional<Summary> far_random, eer_random;
  // One threshold shared by all writers, computed on pooled scores.
  std::optional<EerResult> pooled_eer_skilled, pooled_eer_random;
  std::uint64_t seed = 0;
  std::string seed_source;
  nlohmann::json config;
  ProtocolConfig protocol;
};

// Builds the in-memory split for a planned writer from preprocessed images.
using ImageCache = std::map<std::string, NormalizedImage>;
WriterSplit materialize_split(const SplitPlan& plan, const ImageCache& cache);

// Loads and preprocesses every image referenced by the plan.
ImageCache load_images(const ProtocolPlan& plan, const PreprocessConfig& cfg, int jobs = 1);

// Feature draw for scoring uses a fresh stream seeded with score_seed, so a
// given (model, image, seed) always produces the same score.
double score_image(const VaeModel& vae, const SvmModel& svm, const NormalizedImage& image, std::uint64_t score_seed);

struct WriterOutcome {
  WriterReport report;
  std::vector<ScoreRow> scores;
  ScoreSet score_set;
  ModelContainer model;
  std::vector<RoundTelemetry> telemetry;
};

// Train one writer with its derived stream and score its test images.
WriterOutcome run_writer(const WriterSplit& split, const RunConfig& cfg);

// Assembles the aggregate report; writers are sorted by id first.
EvalReport assemble_report(std::vector<WriterOutcome>& outcomes, const std::vector<SkippedWriter>& skipped,
                           const RunConfig& cfg);

struct ProtocolRun {
  EvalReport report;
  std::vector<WriterOutcome> outcomes;  // sorted by writer id
};

using ProgressFn = std::function<void(const std::string&)>;

// Full protocol: plan splits, preprocess, train and score each writer
// (writers run on up to `jobs` threads), aggregate.
ProtocolRun run_protocol(const Dataset& data, const RunConfig& cfg, int jobs = 1, const ProgressFn& progress = {});

nlohmann::json split_dump(const ProtocolPlan& plan);
nlohmann::json report_json(const EvalReport& report);
std::string report_text(const EvalReport& report);
std::string writers_csv(const EvalReport& report);
std::string scores_csv(const std::vector<WriterOutcome>& outcomes);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace fdv
