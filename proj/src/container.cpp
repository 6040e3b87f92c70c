// SPDX-License-Identifier: Apache-2.0
#include "fdv/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "fdv/errors.hpp"
#include "fdv/image_io.hpp"

namespace fdv {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'F', 'D', 'V', '1'};

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = static_cast<U>((out << 8) | (v & 0xff));
      v >>= 8;
    }
    return out;
  } else {
    return v;
  }
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    v = to_little(v);
    bytes(&v, sizeof v);
  }
  void f64(double d) {
    auto v = to_little(std::bit_cast<std::uint64_t>(d));
    bytes(&v, sizeof v);
  }
  void f64s(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(p[i]);
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw DataError("model container is truncated");
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    std::memcpy(&v, bytes(sizeof v).data(), sizeof v);
    return to_little(v);
  }
  double f64() {
    std::uint64_t v = 0;
    std::memcpy(&v, bytes(sizeof v).data(), sizeof v);
    return std::bit_cast<double>(to_little(v));
  }
  void f64s(double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = f64();
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json header_of(const ModelContainer& c) {
  json h;
  h["format"] = "FDV1";
  h["version"] = kContainerVersion;
  h["writer_id"] = c.writer_id;
  h["score_seed"] = c.score_seed;
  h["preprocess"] = {{"height", c.preprocess.target.height},
                     {"width", c.preprocess.target.width},
                     {"strict_binary", c.preprocess.strict_binary}};
  h["vae"] = {{"input_dim", c.vae.config.input_dim},
              {"hidden_dims", c.vae.config.hidden_dims},
              {"latent_dim", c.vae.config.latent_dim},
              {"kl_weight", c.vae.config.kl_weight}};
  json layers = json::array();
  for (const auto& l : c.vae.params.layers) layers.push_back({l.weight.rows(), l.weight.cols()});
  h["layers"] = layers;
  h["train"] = {{"eta1", c.train.eta1},
                {"eta2", c.train.eta2},
                {"margin", c.train.margin},
                {"rounds", c.train.rounds},
                {"batch_size", c.train.batch_size},
                {"seed", c.train.seed},
                {"optimizer", to_string(c.train.optimizer)},
                {"adam_beta1", c.train.adam_beta1},
                {"adam_beta2", c.train.adam_beta2},
                {"adam_eps", c.train.adam_eps}};
  h["svm"] = {{"support_count", c.svm.support_count()},
              {"dim", c.svm.dim()},
              {"converged", c.svm.converged},
              {"C", c.svm_config.C},
              {"tol", c.svm_config.tol},
              {"max_iter", c.svm_config.max_iter},
              {"gamma_config", optional_json(c.svm_config.gamma)},
              {"class_weight_neg", optional_json(c.svm_config.class_weight_neg)}};
  return h;
}

}  // namespace

std::string serialize_container(const ModelContainer& c) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  const std::string header = header_of(c).dump();
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header.data(), header.size());
  for (const auto& l : c.vae.params.layers) {
    w.f64s(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    w.f64s(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  w.f64(c.svm.bias);
  w.f64(c.svm.gamma);
  w.f64s(c.svm.dual_coeffs.data(), c.svm.dual_coeffs.size());
  w.f64s(c.svm.support_vectors.data(), static_cast<std::size_t>(c.svm.support_vectors.size()));
  return w.take();
}

ModelContainer parse_container(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw DataError("not an FDV1 model container (bad magic)");
  const std::uint32_t header_len = r.u32();
  json h;
  try {
    h = json::parse(r.bytes(header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("model container header is not valid JSON: ") + e.what());
  }

  ModelContainer c;
  try {
    if (h.at("version").get<int>() != kContainerVersion) throw DataError("unsupported model container version");
    c.writer_id = h.at("writer_id").get<std::string>();
    c.score_seed = h.at("score_seed").get<std::uint64_t>();
    const json& p = h.at("preprocess");
    c.preprocess.target.height = p.at("height").get<int>();
    c.preprocess.target.width = p.at("width").get<int>();
    c.preprocess.strict_binary = p.at("strict_binary").get<bool>();

    const json& v = h.at("vae");
    c.vae.config.input_dim = v.at("input_dim").get<int>();
    c.vae.config.hidden_dims = v.at("hidden_dims").get<std::vector<int>>();
    c.vae.config.latent_dim = v.at("latent_dim").get<int>();
    c.vae.config.kl_weight = v.at("kl_weight").get<double>();
    c.vae.config.validate();

    const json& t = h.at("train");
    c.train.eta1 = t.at("eta1").get<double>();
    c.train.eta2 = t.at("eta2").get<double>();
    c.train.margin = t.at("margin").get<double>();
    c.train.rounds = t.at("rounds").get<int>();
    c.train.batch_size = t.at("batch_size").get<int>();
    c.train.seed = t.at("seed").get<std::uint64_t>();
    c.train.optimizer = parse_optimizer(t.at("optimizer").get<std::string>());
    c.train.adam_beta1 = t.at("adam_beta1").get<double>();
    c.train.adam_beta2 = t.at("adam_beta2").get<double>();
    c.train.adam_eps = t.at("adam_eps").get<double>();
    c.train.latent_dim = c.vae.config.latent_dim;
    c.train.hidden_dims = c.vae.config.hidden_dims;
    c.train.kl_weight = c.vae.config.kl_weight;

    const json& s = h.at("svm");
    c.svm_config.C = s.at("C").get<double>();
    c.svm_config.tol = s.at("tol").get<double>();
    c.svm_config.max_iter = s.at("max_iter").get<long>();
    c.svm_config.gamma = optional_from(s.at("gamma_config"));
    c.svm_config.class_weight_neg = optional_from(s.at("class_weight_neg"));
    c.svm.converged = s.at("converged").get<bool>();
    const auto n_sv = s.at("support_count").get<std::size_t>();
    const auto dim = s.at("dim").get<Eigen::Index>();

    const json& layers = h.at("layers");
    for (const auto& shape : layers) {
      Dense d;
      d.weight.resize(shape.at(0).get<Eigen::Index>(), shape.at(1).get<Eigen::Index>());
      d.bias.resize(d.weight.cols());
      r.f64s(d.weight.data(), static_cast<std::size_t>(d.weight.size()));
      r.f64s(d.bias.data(), static_cast<std::size_t>(d.bias.size()));
      c.vae.params.layers.push_back(std::move(d));
    }
    if (c.vae.params.layers.size() != 2 * c.vae.hidden_count() + 3) {
      throw DataError("model container layer count does not match its architecture");
    }
    c.svm.bias = r.f64();
    c.svm.gamma = r.f64();
    c.svm.dual_coeffs.resize(n_sv);
    r.f64s(c.svm.dual_coeffs.data(), n_sv);
    c.svm.support_vectors.resize(static_cast<Eigen::Index>(n_sv), dim);
    r.f64s(c.svm.support_vectors.data(), static_cast<std::size_t>(c.svm.support_vectors.size()));
  } catch (const json::exception& e) {
    throw DataError(std::string("model container header is malformed: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("model container header is invalid: ") + e.what());
  }
  if (!r.done()) throw DataError("model container has trailing bytes");
  return c;
}

void save_container(const std::filesystem::path& path, const ModelContainer& c) {
  write_file_atomic(path, serialize_container(c));
}

ModelContainer load_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_container(bytes);
}

}  // namespace fdv
