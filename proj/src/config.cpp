// SPDX-License-Identifier: Apache-2.0
#include "fdv/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>

#include "fdv/errors.hpp"
#include "fdv/rng.hpp"

namespace fdv {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw UsageError("config: '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw UsageError("config: unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: bad value for " + section + "." + key);
  }
}

template <typename T>
void read_optional(const json& obj, const char* key, std::optional<T>& out, const std::string& section) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null() || (obj.at(key).is_string() && obj.at(key).get<std::string>() == "auto")) {
    out.reset();
    return;
  }
  T v{};
  read(obj, key, v, section);
  out = v;
}

}  // namespace

void RunConfig::validate() const {
  if (preprocess.target.height < 1 || preprocess.target.width < 1) {
    throw UsageError("config: preprocess height/width must be positive");
  }
  train.validate();
  svm.validate();
  protocol.validate();
  (void)train.vae_config(preprocess.target.height * preprocess.target.width);
}

TrainConfig RunConfig::train_for(const std::string& writer_id) const {
  TrainConfig t = train;
  t.seed = stream_seed(seed, writer_id);
  return t;
}

RunConfig parse_run_config(const json& doc) {
  reject_unknown(doc, "config", {"schema_version", "seed", "preprocess", "model", "train", "svm", "protocol"});
  if (!doc.contains("schema_version")) throw UsageError("config: missing schema_version");
  int version = 0;
  read(doc, "schema_version", version, "config");
  if (version != kRunConfigSchema) {
    throw UsageError("config: unsupported schema_version " + std::to_string(version) + " (expected " +
                     std::to_string(kRunConfigSchema) + ")");
  }

  RunConfig cfg;
  read(doc, "seed", cfg.seed, "config");

  if (doc.contains("preprocess")) {
    const json& p = doc.at("preprocess");
    reject_unknown(p, "preprocess", {"height", "width", "strict_binary"});
    read(p, "height", cfg.preprocess.target.height, "preprocess");
    read(p, "width", cfg.preprocess.target.width, "preprocess");
    read(p, "strict_binary", cfg.preprocess.strict_binary, "preprocess");
  }
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    reject_unknown(m, "model", {"hidden_dims", "latent_dim", "kl_weight"});
    read(m, "hidden_dims", cfg.train.hidden_dims, "model");
    read(m, "latent_dim", cfg.train.latent_dim, "model");
    read(m, "kl_weight", cfg.train.kl_weight, "model");
  }
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    reject_unknown(t, "train",
                   {"eta1", "eta2", "margin", "rounds", "batch_size", "optimizer", "adam_beta1", "adam_beta2", "adam_eps"});
    read(t, "eta1", cfg.train.eta1, "train");
    read(t, "eta2", cfg.train.eta2, "train");
    read(t, "margin", cfg.train.margin, "train");
    read(t, "rounds", cfg.train.rounds, "train");
    read(t, "batch_size", cfg.train.batch_size, "train");
    if (t.contains("optimizer")) {
      std::string name;
      read(t, "optimizer", name, "train");
      cfg.train.optimizer = parse_optimizer(name);
    }
    read(t, "adam_beta1", cfg.train.adam_beta1, "train");
    read(t, "adam_beta2", cfg.train.adam_beta2, "train");
    read(t, "adam_eps", cfg.train.adam_eps, "train");
  }
  if (doc.contains("svm")) {
    const json& s = doc.at("svm");
    reject_unknown(s, "svm", {"gamma", "C", "tol", "max_iter", "class_weight_neg"});
    read_optional(s, "gamma", cfg.svm.gamma, "svm");
    read(s, "C", cfg.svm.C, "svm");
    read(s, "tol", cfg.svm.tol, "svm");
    read(s, "max_iter", cfg.svm.max_iter, "svm");
    read_optional(s, "class_weight_neg", cfg.svm.class_weight_neg, "svm");
  }
  if (doc.contains("protocol")) {
    const json& p = doc.at("protocol");
    reject_unknown(p, "protocol",
                   {"train_genuine", "test_genuine", "test_skilled", "random_train_per_writer", "random_test_per_writer",
                    "evaluated_writers", "random_pool_writers"});
    read(p, "train_genuine", cfg.protocol.train_genuine, "protocol");
    read(p, "test_genuine", cfg.protocol.test_genuine, "protocol");
    read(p, "test_skilled", cfg.protocol.test_skilled, "protocol");
    read(p, "random_train_per_writer", cfg.protocol.random_train_per_writer, "protocol");
    read(p, "random_test_per_writer", cfg.protocol.random_test_per_writer, "protocol");
    read(p, "evaluated_writers", cfg.protocol.evaluated_writers, "protocol");
    read(p, "random_pool_writers", cfg.protocol.random_pool_writers, "protocol");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

void apply_seed_override(RunConfig& cfg) {
  const char* env = std::getenv("FDV_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw UsageError(std::string("FDV_SEED is not an unsigned integer: ") + env);
  cfg.seed = v;
  cfg.seed_source = "FDV_SEED";
}

json to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = kRunConfigSchema;
  j["seed"] = cfg.seed;
  j["preprocess"] = {{"height", cfg.preprocess.target.height},
                     {"width", cfg.preprocess.target.width},
                     {"strict_binary", cfg.preprocess.strict_binary}};
  j["model"] = {{"hidden_dims", cfg.train.hidden_dims},
                {"latent_dim", cfg.train.latent_dim},
                {"kl_weight", cfg.train.kl_weight}};
  j["train"] = {{"eta1", cfg.train.eta1},
                {"eta2", cfg.train.eta2},
                {"margin", cfg.train.margin},
                {"rounds", cfg.train.rounds},
                {"batch_size", cfg.train.batch_size},
                {"optimizer", to_string(cfg.train.optimizer)},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps}};
  j["svm"] = {{"gamma", cfg.svm.gamma ? json(*cfg.svm.gamma) : json(nullptr)},
              {"C", cfg.svm.C},
              {"tol", cfg.svm.tol},
              {"max_iter", cfg.svm.max_iter},
              {"class_weight_neg", cfg.svm.class_weight_neg ? json(*cfg.svm.class_weight_neg) : json(nullptr)}};
  j["protocol"] = {{"train_genuine", cfg.protocol.train_genuine},
                   {"test_genuine", cfg.protocol.test_genuine},
                   {"test_skilled", cfg.protocol.test_skilled},
                   {"random_train_per_writer", cfg.protocol.random_train_per_writer},
                   {"random_test_per_writer", cfg.protocol.random_test_per_writer},
                   {"evaluated_writers", cfg.protocol.evaluated_writers},
                   {"random_pool_writers", cfg.protocol.random_pool_writers}};
  return j;
}

}  // namespace fdv
