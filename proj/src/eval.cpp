// SPDX-License-Identifier: Apache-2.0
#include "fdv/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fdv/errors.hpp"
#include "fdv/image_io.hpp"

namespace fdv {

using nlohmann::json;

const char* to_string(ForgeryKind kind) { return kind == ForgeryKind::Skilled ? "skilled" : "random"; }

ScoreSet ScoreSet::only(ForgeryKind kind) const {
  ScoreSet s;
  s.genuine = genuine;
  for (const auto& f : forgery) {
    if (f.second == kind) s.forgery.push_back(f);
  }
  return s;
}

ErrorRates frr_far(const ScoreSet& scores, double t) {
  if (scores.genuine.empty() || scores.forgery.empty()) throw UsageError("frr_far: both classes must be nonempty");
  std::size_t rejected = 0, accepted = 0;
  for (double g : scores.genuine) rejected += g < t ? 1 : 0;
  for (const auto& f : scores.forgery) accepted += f.first >= t ? 1 : 0;
  return {static_cast<double>(rejected) / static_cast<double>(scores.genuine.size()),
          static_cast<double>(accepted) / static_cast<double>(scores.forgery.size())};
}

EerResult eer(const ScoreSet& scores) {
  if (scores.genuine.empty() || scores.forgery.empty()) throw UsageError("eer: both classes must be nonempty");
  std::vector<double> g = scores.genuine;
  std::vector<double> f;
  f.reserve(scores.forgery.size());
  for (const auto& p : scores.forgery) f.push_back(p.first);
  std::sort(g.begin(), g.end());
  std::sort(f.begin(), f.end());

  std::vector<double> distinct;
  std::merge(g.begin(), g.end(), f.begin(), f.end(), std::back_inserter(distinct));
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> candidates;
  candidates.reserve(2 * distinct.size());
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    candidates.push_back(distinct[i]);
    if (i + 1 < distinct.size()) candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  }
  candidates.push_back(distinct.back() + 1.0);

  const double ng = static_cast<double>(g.size());
  const double nf = static_cast<double>(f.size());
  auto rates_at = [&](double t) {
    const auto below_g = static_cast<double>(std::lower_bound(g.begin(), g.end(), t) - g.begin());
    const auto below_f = static_cast<double>(std::lower_bound(f.begin(), f.end(), t) - f.begin());
    return ErrorRates{below_g / ng, (nf - below_f) / nf};
  };

  ErrorRates prev = rates_at(candidates.front());
  double prev_t = candidates.front();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double t = candidates[i];
    const ErrorRates r = rates_at(t);
    const double diff = r.frr - r.far;
    if (diff >= 0.0) {
      if (diff == 0.0 || i == 0) return {r.frr, t};
      const double prev_diff = prev.frr - prev.far;
      const double lambda = -prev_diff / (diff - prev_diff);
      return {prev.frr + lambda * (r.frr - prev.frr), prev_t + lambda * (t - prev_t)};
    }
    prev = r;
    prev_t = t;
  }
  // Unreachable: above the maximum score frr = 1 and far = 0.
  return {prev.frr, prev_t};
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs))));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ImageCache load_images(const ProtocolPlan& plan, const PreprocessConfig& cfg, int jobs) {
  std::map<std::string, std::filesystem::path> wanted;
  for (const auto& s : plan.splits) {
    for (const auto* list : {&s.genuine_train, &s.random_train, &s.genuine_test, &s.skilled_test, &s.random_test}) {
      for (const auto& ref : *list) wanted.emplace(ref.id, ref.path);
    }
  }
  std::vector<std::pair<std::string, std::filesystem::path>> items(wanted.begin(), wanted.end());
  std::vector<NormalizedImage> images(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) { images[i] = preprocess(read_image(items[i].second), cfg); });
  ImageCache cache;
  for (std::size_t i = 0; i < items.size(); ++i) cache.emplace(items[i].first, std::move(images[i]));
  return cache;
}

WriterSplit materialize_split(const SplitPlan& plan, const ImageCache& cache) {
  auto fill = [&](const std::vector<ImageRef>& refs) {
    std::vector<SampleImage> out;
    out.reserve(refs.size());
    for (const auto& r : refs) {
      auto it = cache.find(r.id);
      if (it == cache.end()) throw DataError("image not loaded: " + r.id);
      out.push_back({r.id, it->second});
    }
    return out;
  };
  WriterSplit s;
  s.writer_id = plan.writer_id;
  s.genuine_train = fill(plan.genuine_train);
  s.random_forgeries = fill(plan.random_train);
  s.genuine_test = fill(plan.genuine_test);
  s.skilled_test = fill(plan.skilled_test);
  s.random_test = fill(plan.random_test);
  return s;
}

double score_image(const VaeModel& vae, const SvmModel& svm, const NormalizedImage& image, std::uint64_t score_seed) {
  Rng rng(score_seed);
  const Vector f = extract_features(vae, image.values, rng);
  return decision_value(svm, std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
}

WriterOutcome run_writer(const WriterSplit& split, const RunConfig& cfg) {
  const TrainConfig tcfg = cfg.train_for(split.writer_id);
  TrainedWriter trained = train_writer(split, tcfg, cfg.svm);

  WriterOutcome out;
  out.model.writer_id = split.writer_id;
  out.model.preprocess = cfg.preprocess;
  out.model.train = tcfg;
  out.model.svm_config = cfg.svm;
  out.model.score_seed = cfg.seed;
  out.model.vae = std::move(trained.vae);
  out.model.svm = std::move(trained.svm);
  out.telemetry = std::move(trained.telemetry);

  auto score_all = [&](const std::vector<SampleImage>& pool, const char* cls, auto&& sink) {
    for (const auto& s : pool) {
      const double v = score_image(out.model.vae, out.model.svm, s.image, cfg.seed);
      out.scores.push_back({split.writer_id, s.id, cls, v});
      sink(v);
    }
  };
  score_all(split.genuine_test, "genuine", [&](double v) { out.score_set.genuine.push_back(v); });
  score_all(split.skilled_test, "skilled",
            [&](double v) { out.score_set.forgery.emplace_back(v, ForgeryKind::Skilled); });
  score_all(split.random_test, "random", [&](double v) { out.score_set.forgery.emplace_back(v, ForgeryKind::Random); });

  WriterReport& r = out.report;
  r.writer_id = split.writer_id;
  r.n_train_genuine = split.genuine_train.size();
  r.n_random_train = split.random_forgeries.size();
  r.n_test_genuine = split.genuine_test.size();
  r.n_test_skilled = split.skilled_test.size();
  r.n_test_random = split.random_test.size();
  r.svm_converged = out.model.svm.converged;
  r.support_vectors = out.model.svm.support_count();

  const ScoreSet skilled = out.score_set.only(ForgeryKind::Skilled);
  if (!skilled.genuine.empty() && !skilled.forgery.empty()) {
    const ErrorRates at_zero = frr_far(skilled, 0.0);
    r.frr = at_zero.frr;
    r.far_skilled = at_zero.far;
    r.eer_skilled = eer(skilled);
  }
  const ScoreSet random = out.score_set.only(ForgeryKind::Random);
  if (!random.genuine.empty() && !random.forgery.empty()) {
    r.far_random = frr_far(random, 0.0).far;
    r.eer_random = eer(random);
  }
  return out;
}

EvalReport assemble_report(std::vector<WriterOutcome>& outcomes, const std::vector<SkippedWriter>& skipped,
                           const RunConfig& cfg) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const WriterOutcome& a, const WriterOutcome& b) { return a.report.writer_id < b.report.writer_id; });
  EvalReport rep;
  rep.skipped = skipped;
  std::sort(rep.skipped.begin(), rep.skipped.end(),
            [](const SkippedWriter& a, const SkippedWriter& b) { return a.writer_id < b.writer_id; });
  rep.seed = cfg.seed;
  rep.seed_source = cfg.seed_source;
  rep.config = to_json(cfg);
  rep.protocol = cfg.protocol;

  std::vector<double> frr, far_s, eer_s, far_r, eer_r;
  ScoreSet pooled_s, pooled_r;
  for (const auto& o : outcomes) {
    rep.writers.push_back(o.report);
    frr.push_back(o.report.frr);
    far_s.push_back(o.report.far_skilled);
    eer_s.push_back(o.report.eer_skilled.eer);
    if (o.report.far_random) far_r.push_back(*o.report.far_random);
    if (o.report.eer_random) eer_r.push_back(o.report.eer_random->eer);
    const ScoreSet s = o.score_set.only(ForgeryKind::Skilled);
    const ScoreSet r = o.score_set.only(ForgeryKind::Random);
    pooled_s.genuine.insert(pooled_s.genuine.end(), s.genuine.begin(), s.genuine.end());
    pooled_s.forgery.insert(pooled_s.forgery.end(), s.forgery.begin(), s.forgery.end());
    pooled_r.genuine.insert(pooled_r.genuine.end(), r.genuine.begin(), r.genuine.end());
    pooled_r.forgery.insert(pooled_r.forgery.end(), r.forgery.begin(), r.forgery.end());
  }
  rep.frr = summarize(frr);
  rep.far_skilled = summarize(far_s);
  rep.eer_skilled = summarize(eer_s);
  if (!far_r.empty()) rep.far_random = summarize(far_r);
  if (!eer_r.empty()) rep.eer_random = summarize(eer_r);
  if (!pooled_s.genuine.empty() && !pooled_s.forgery.empty()) rep.pooled_eer_skilled = eer(pooled_s);
  if (!pooled_r.genuine.empty() && !pooled_r.forgery.empty()) rep.pooled_eer_random = eer(pooled_r);
  return rep;
}

ProtocolRun run_protocol(const Dataset& data, const RunConfig& cfg, int jobs, const ProgressFn& progress) {
  cfg.validate();
  const ProtocolPlan plan = plan_protocol(data, cfg.protocol);
  for (const auto& s : plan.skipped) {
    if (progress) progress("warning: skipping writer " + s.writer_id + ": " + s.reason);
  }
  const ImageCache cache = load_images(plan, cfg.preprocess, jobs);

  ProtocolRun run;
  run.outcomes.resize(plan.splits.size());
  std::mutex log_mutex;
  parallel_for(plan.splits.size(), jobs, [&](std::size_t i) {
    const WriterSplit split = materialize_split(plan.splits[i], cache);
    run.outcomes[i] = run_writer(split, cfg);
    if (progress) {
      std::lock_guard lock(log_mutex);
      progress("writer " + split.writer_id + " done");
    }
  });
  run.report = assemble_report(run.outcomes, plan.skipped, cfg);
  return run;
}

namespace {

json refs_json(const std::vector<ImageRef>& refs) {
  json a = json::array();
  for (const auto& r : refs) a.push_back(r.id);
  return a;
}

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}}; }

json eer_json(const EerResult& e) { return {{"eer", e.eer}, {"threshold", e.threshold}}; }

}  // namespace

json split_dump(const ProtocolPlan& plan) {
  json out;
  json writers = json::array();
  for (const auto& s : plan.splits) {
    writers.push_back({{"writer_id", s.writer_id},
                       {"counts",
                        {{"genuine_train", s.genuine_train.size()},
                         {"random_train", s.random_train.size()},
                         {"genuine_test", s.genuine_test.size()},
                         {"skilled_test", s.skilled_test.size()},
                         {"random_test", s.random_test.size()}}},
                       {"genuine_train", refs_json(s.genuine_train)},
                       {"random_train", refs_json(s.random_train)},
                       {"genuine_test", refs_json(s.genuine_test)},
                       {"skilled_test", refs_json(s.skilled_test)},
                       {"random_test", refs_json(s.random_test)}});
  }
  json skipped = json::array();
  for (const auto& s : plan.skipped) skipped.push_back({{"writer_id", s.writer_id}, {"reason", s.reason}});
  out["writers"] = writers;
  out["skipped"] = skipped;
  return out;
}

json report_json(const EvalReport& rep) {
  json j;
  j["seed"] = rep.seed;
  j["seed_source"] = rep.seed_source;
  j["config"] = rep.config;
  j["aggregation"] = "mean of per-writer values; pooled_* use one global threshold over all writers' scores";
  json writers = json::array();
  for (const auto& w : rep.writers) {
    json row = {{"writer_id", w.writer_id},
                {"counts",
                 {{"train_genuine", w.n_train_genuine},
                  {"random_train", w.n_random_train},
                  {"test_genuine", w.n_test_genuine},
                  {"test_skilled", w.n_test_skilled},
                  {"test_random", w.n_test_random}}},
                {"frr", w.frr},
                {"far_skilled", w.far_skilled},
                {"far_random", w.far_random ? json(*w.far_random) : json(nullptr)},
                {"eer_skilled", eer_json(w.eer_skilled)},
                {"eer_random", w.eer_random ? eer_json(*w.eer_random) : json(nullptr)},
                {"svm_converged", w.svm_converged},
                {"support_vectors", w.support_vectors}};
    writers.push_back(row);
  }
  j["writers"] = writers;
  json skipped = json::array();
  for (const auto& s : rep.skipped) skipped.push_back({{"writer_id", s.writer_id}, {"reason", s.reason}});
  j["skipped"] = skipped;
  j["skipped_count"] = rep.skipped.size();
  j["aggregate"] = {{"frr", summary_json(rep.frr)},
                    {"far_skilled", summary_json(rep.far_skilled)},
                    {"eer_skilled", summary_json(rep.eer_skilled)},
                    {"far_random", rep.far_random ? summary_json(*rep.far_random) : json(nullptr)},
                    {"eer_random", rep.eer_random ? summary_json(*rep.eer_random) : json(nullptr)},
                    {"pooled_eer_skilled", rep.pooled_eer_skilled ? eer_json(*rep.pooled_eer_skilled) : json(nullptr)},
                    {"pooled_eer_random", rep.pooled_eer_random ? eer_json(*rep.pooled_eer_random) : json(nullptr)}};
  return j;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%7.2f%%", 100.0 * v);
  return buf;
}

std::string pct_opt(const std::optional<double>& v) { return v ? pct(*v) : std::string("       -"); }

}  // namespace

std::string report_text(const EvalReport& rep) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s %6s %6s %6s %9s %9s %9s %9s %9s\n", "writer", "train", "rand", "gen",
                "skil", "FRR", "FAR_sk", "FAR_rd", "EER_sk", "EER_rd");
  out << line;
  for (const auto& w : rep.writers) {
    std::snprintf(line, sizeof line, "%-16s %6zu %6zu %6zu %6zu %9s %9s %9s %9s %9s\n", w.writer_id.c_str(),
                  w.n_train_genuine, w.n_random_train, w.n_test_genuine, w.n_test_skilled, pct(w.frr).c_str(),
                  pct(w.far_skilled).c_str(), pct_opt(w.far_random).c_str(), pct(w.eer_skilled.eer).c_str(),
                  pct_opt(w.eer_random ? std::optional<double>(w.eer_random->eer) : std::nullopt).c_str());
    out << line;
  }
  out << '\n';
  auto sum_line = [&](const char* name, const Summary& s) {
    std::snprintf(line, sizeof line, "%-22s mean %s  stddev %s  (n=%zu)\n", name, pct(s.mean).c_str(),
                  pct(s.stddev).c_str(), s.count);
    out << line;
  };
  sum_line("FRR", rep.frr);
  sum_line("FAR skilled", rep.far_skilled);
  if (rep.far_random) sum_line("FAR random", *rep.far_random);
  sum_line("EER skilled", rep.eer_skilled);
  if (rep.eer_random) sum_line("EER random", *rep.eer_random);
  if (rep.pooled_eer_skilled) out << "pooled EER skilled      " << pct(rep.pooled_eer_skilled->eer) << '\n';
  if (rep.pooled_eer_random) out << "pooled EER random       " << pct(rep.pooled_eer_random->eer) << '\n';
  out << "skipped writers: " << rep.skipped.size() << '\n';
  for (const auto& s : rep.skipped) out << "  " << s.writer_id << ": " << s.reason << '\n';
  out << "seed: " << rep.seed << " (" << rep.seed_source << ")\n";
  return out.str();
}

std::string writers_csv(const EvalReport& rep) {
  std::string csv =
      "writer_id,train_genuine,random_train,test_genuine,test_skilled,test_random,frr,far_skilled,far_random,"
      "eer_skilled,eer_skilled_threshold,eer_random,eer_random_threshold\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& w : rep.writers) {
    csv += w.writer_id + "," + std::to_string(w.n_train_genuine) + "," + std::to_string(w.n_random_train) + "," +
           std::to_string(w.n_test_genuine) + "," + std::to_string(w.n_test_skilled) + "," +
           std::to_string(w.n_test_random) + "," + num(w.frr) + "," + num(w.far_skilled) + "," +
           (w.far_random ? num(*w.far_random) : "") + "," + num(w.eer_skilled.eer) + "," +
           num(w.eer_skilled.threshold) + "," + (w.eer_random ? num(w.eer_random->eer) : "") + "," +
           (w.eer_random ? num(w.eer_random->threshold) : "") + "\n";
  }
  return csv;
}

std::string scores_csv(const std::vector<WriterOutcome>& outcomes) {
  std::string csv = "writer_id,image_id,class,score\n";
  char buf[64];
  for (const auto& o : outcomes) {
    for (const auto& s : o.scores) {
      std::snprintf(buf, sizeof buf, "%.17g", s.score);
      csv += s.writer_id + "," + s.image_id + "," + s.cls + "," + buf + "\n";
    }
  }
  return csv;
}

}  // namespace fdv
