#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgaze/records.hpp"

namespace lgaze {

enum class SplitMode { SubjectRanges, RandomBySubject, SubjectLists };

std::string_view to_string(SplitMode m);
SplitMode split_mode_from_string(std::string_view s);

// Inclusive subject id range.
struct SubjectRange {
  int first = 0;
  int last = -1;
  bool contains(int s) const { return s >= first && s <= last; }
};

struct SplitSpec {
  SplitMode mode = SplitMode::SubjectRanges;

  // SubjectRanges
  SubjectRange train_range{1, 46};
  SubjectRange val_range{47, 51};
  SubjectRange test_range{52, 56};

  // RandomBySubject: explicit counts win when any is nonzero; otherwise
  // val/test get round(fraction * n) subjects and train the rest.
  int train_count = 0;
  int val_count = 0;
  int test_count = 0;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  // SubjectLists (the "file-list" mode): subjects named in none are dropped.
  std::vector<int> train_subjects;
  std::vector<int> val_subjects;
  std::vector<int> test_subjects;

  void validate() const;
  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& j);
};

struct SplitResult {
  std::vector<GazeRecord> train;
  std::vector<GazeRecord> val;
  std::vector<GazeRecord> test;
};

// Subject-disjoint partition preserving the input record order within each
// part. Throws EmptySplitProduced if any part ends up empty.
SplitResult split_records(std::span<const GazeRecord> records, const SplitSpec& spec);

// Sorted distinct subject ids.
std::vector<int> subjects_of(std::span<const GazeRecord> records);

}  // namespace lgaze
