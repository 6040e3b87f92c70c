// SPDX-License-Identifier: Apache-2.0
#include "fdv/dataset.hpp"

#include <algorithm>
#include <cctype>

#include "fdv/errors.hpp"
#include "fdv/image_io.hpp"

namespace fdv {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".pgm";
}

std::vector<ImageRef> list_images(const fs::path& dir, const std::string& prefix) {
  std::vector<ImageRef> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    out.push_back({prefix + entry.path().filename().string(), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const ImageRef& a, const ImageRef& b) { return a.id < b.id; });
  return out;
}

}  // namespace

const WriterEntry* Dataset::find(const std::string& writer_id) const {
  auto it = std::lower_bound(writers.begin(), writers.end(), writer_id,
                             [](const WriterEntry& w, const std::string& id) { return w.id < id; });
  return (it != writers.end() && it->id == writer_id) ? &*it : nullptr;
}

Dataset scan_dataset(const fs::path& root) {
  const fs::path writers_dir = root / "writers";
  if (!fs::is_directory(writers_dir)) throw DataError("dataset has no writers/ directory: " + root.string());
  Dataset data;
  data.root = root;
  for (const auto& entry : fs::directory_iterator(writers_dir)) {
    if (!entry.is_directory()) continue;
    WriterEntry w;
    w.id = entry.path().filename().string();
    w.genuine = list_images(entry.path() / "genuine", w.id + "/genuine/");
    w.skilled = list_images(entry.path() / "skilled", w.id + "/skilled/");
    data.writers.push_back(std::move(w));
  }
  std::sort(data.writers.begin(), data.writers.end(), [](const WriterEntry& a, const WriterEntry& b) { return a.id < b.id; });
  return data;
}

void ProtocolConfig::validate() const {
  if (train_genuine < 1) throw UsageError("protocol: train_genuine must be >= 1");
  if (test_genuine < 0 || test_skilled < 0 || random_test_per_writer < 0 || evaluated_writers < 0 ||
      random_pool_writers < 0) {
    throw UsageError("protocol: counts must be non-negative");
  }
  if (random_train_per_writer < 1) throw UsageError("protocol: random_train_per_writer must be >= 1");
}

ProtocolPlan plan_protocol(const Dataset& data, const ProtocolConfig& protocol) {
  protocol.validate();
  ProtocolPlan plan;
  const std::size_t n_writers = data.writers.size();
  const std::size_t n_eval = protocol.evaluated_writers == 0
                                 ? n_writers
                                 : std::min(n_writers, static_cast<std::size_t>(protocol.evaluated_writers));
  const std::size_t pool_begin = protocol.random_pool_writers == 0
                                     ? 0
                                     : n_writers - std::min(n_writers, static_cast<std::size_t>(protocol.random_pool_writers));
  const auto n_train = static_cast<std::size_t>(protocol.train_genuine);
  const auto n_rand_train = static_cast<std::size_t>(protocol.random_train_per_writer);
  const auto n_rand_test = static_cast<std::size_t>(protocol.random_test_per_writer);
  const std::size_t held_out_from = std::max(n_train, n_rand_train);

  for (std::size_t w = 0; w < n_eval; ++w) {
    const WriterEntry& writer = data.writers[w];
    const std::size_t need_genuine = n_train + std::max<std::size_t>(1, static_cast<std::size_t>(protocol.test_genuine));
    if (writer.genuine.size() < need_genuine) {
      plan.skipped.push_back({writer.id, "has " + std::to_string(writer.genuine.size()) + " genuine, needs " +
                                             std::to_string(need_genuine)});
      continue;
    }
    const std::size_t need_skilled = std::max<std::size_t>(1, static_cast<std::size_t>(protocol.test_skilled));
    if (writer.skilled.size() < need_skilled) {
      plan.skipped.push_back({writer.id, "has " + std::to_string(writer.skilled.size()) + " skilled, needs " +
                                             std::to_string(need_skilled)});
      continue;
    }

    SplitPlan split;
    split.writer_id = writer.id;
    split.genuine_train.assign(writer.genuine.begin(), writer.genuine.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::size_t test_end = protocol.test_genuine == 0
                                     ? writer.genuine.size()
                                     : n_train + static_cast<std::size_t>(protocol.test_genuine);
    split.genuine_test.assign(writer.genuine.begin() + static_cast<std::ptrdiff_t>(n_train),
                              writer.genuine.begin() + static_cast<std::ptrdiff_t>(test_end));
    const std::size_t skilled_end = protocol.test_skilled == 0 ? writer.skilled.size()
                                                               : static_cast<std::size_t>(protocol.test_skilled);
    split.skilled_test.assign(writer.skilled.begin(), writer.skilled.begin() + static_cast<std::ptrdiff_t>(skilled_end));

    for (std::size_t o = pool_begin; o < n_writers; ++o) {
      if (o == w) continue;
      const WriterEntry& other = data.writers[o];
      const std::size_t take = std::min(n_rand_train, other.genuine.size());
      split.random_train.insert(split.random_train.end(), other.genuine.begin(),
                                other.genuine.begin() + static_cast<std::ptrdiff_t>(take));
      if (n_rand_test > 0 && other.genuine.size() > held_out_from) {
        const std::size_t end = std::min(other.genuine.size(), held_out_from + n_rand_test);
        split.random_test.insert(split.random_test.end(),
                                 other.genuine.begin() + static_cast<std::ptrdiff_t>(held_out_from),
                                 other.genuine.begin() + static_cast<std::ptrdiff_t>(end));
      }
    }
    if (split.random_train.empty()) {
      plan.skipped.push_back({writer.id, "random forgery pool is empty"});
      continue;
    }
    plan.splits.push_back(std::move(split));
  }
  return plan;
}

ValidationResult validate_dataset(const Dataset& data, const ProtocolConfig& protocol) {
  ValidationResult r;
  if (data.writers.empty()) r.errors.push_back("no writer directories under " + (data.root / "writers").string());
  const auto need_genuine = static_cast<std::size_t>(protocol.train_genuine) +
                            std::max<std::size_t>(1, static_cast<std::size_t>(protocol.test_genuine));
  for (const auto& w : data.writers) {
    r.inventory.push_back({w.id, w.genuine.size(), w.skilled.size()});
    if (w.genuine.size() < need_genuine) {
      r.warnings.push_back("writer " + w.id + " has " + std::to_string(w.genuine.size()) +
                           " genuine signatures; the protocol needs " + std::to_string(need_genuine));
    }
    if (w.skilled.empty()) r.warnings.push_back("writer " + w.id + " has no skilled forgeries");
    for (const auto* list : {&w.genuine, &w.skilled}) {
      for (const auto& img : *list) {
        try {
          (void)read_image(img.path);
        } catch (const DataError& e) {
          r.errors.push_back(e.what());
        }
      }
    }
  }
  return r;
}

}  // namespace fdv
