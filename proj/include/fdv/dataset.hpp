// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fdv {

// root/writers/<id>/{genuine,skilled}/*.{png,pgm}; writers and files are
// kept sorted by name.
struct ImageRef {
  std::string id;  // "<writer>/<genuine|skilled>/<file name>"
  std::filesystem::path path;
};

struct WriterEntry {
  std::string id;
  std::vector<ImageRef> genuine;
  std::vector<ImageRef> skilled;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<WriterEntry> writers;

  const WriterEntry* find(const std::string& writer_id) const;
};

// Throws DataError when root/writers is missing.
Dataset scan_dataset(const std::filesystem::path& root);

// How each writer's data is split. By default the first 10 genuine train,
// the remaining genuine plus all skilled forgeries test, and the first
// genuine of every other writer forms the random-forgery training pool.
struct ProtocolConfig {
  int train_genuine = 10;
  int test_genuine = 0;             // 0 = all remaining genuine
  int test_skilled = 0;             // 0 = all skilled
  int random_train_per_writer = 1;  // leading genuine taken from each pool writer
  int random_test_per_writer = 0;   // held-out genuine of each pool writer used as random test
  int evaluated_writers = 0;        // 0 = every writer; N = the first N
  int random_pool_writers = 0;      // 0 = every other writer; N = the last N writers

  void validate() const;
};

struct SplitPlan {
  std::string writer_id;
  std::vector<ImageRef> genuine_train;
  std::vector<ImageRef> random_train;
  std::vector<ImageRef> genuine_test;
  std::vector<ImageRef> skilled_test;
  std::vector<ImageRef> random_test;
};

struct SkippedWriter {
  std::string writer_id;
  std::string reason;
};

struct ProtocolPlan {
  std::vector<SplitPlan> splits;
  std::vector<SkippedWriter> skipped;
};

ProtocolPlan plan_protocol(const Dataset& data, const ProtocolConfig& protocol);

struct WriterInventory {
  std::string writer_id;
  std::size_t genuine = 0;
  std::size_t skilled = 0;
};

struct ValidationResult {
  std::vector<WriterInventory> inventory;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;  // unreadable files, layout violations

  bool ok() const { return errors.empty(); }
};

// Decodes every image and checks counts against the protocol.
ValidationResult validate_dataset(const Dataset& data, const ProtocolConfig& protocol);

}  // namespace fdv
