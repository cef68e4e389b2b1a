#include "lgaze/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "lgaze/error.hpp"
#include "lgaze/random.hpp"

namespace lgaze {

namespace {

nlohmann::json range_json(const SubjectRange& r) { return {r.first, r.last}; }

SubjectRange range_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorKind::InvalidArgument, "subject range must be [first, last]");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

std::string_view to_string(SplitMode m) {
  switch (m) {
    case SplitMode::SubjectRanges: return "subject-ranges";
    case SplitMode::RandomBySubject: return "random-by-subject";
    case SplitMode::SubjectLists: return "file-list";
  }
  return "unknown";
}

SplitMode split_mode_from_string(std::string_view s) {
  if (s == "subject-ranges") return SplitMode::SubjectRanges;
  if (s == "random-by-subject") return SplitMode::RandomBySubject;
  if (s == "file-list") return SplitMode::SubjectLists;
  throw Error(ErrorKind::InvalidArgument, "unknown split mode '" + std::string(s) + "'");
}

void SplitSpec::validate() const {
  switch (mode) {
    case SplitMode::SubjectRanges: {
      const SubjectRange rs[3] = {train_range, val_range, test_range};
      for (const auto& r : rs) {
        if (r.first > r.last) throw Error(ErrorKind::InvalidArgument, "empty subject range");
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
          if (rs[a].first <= rs[b].last && rs[b].first <= rs[a].last) {
            throw Error(ErrorKind::InvalidArgument, "subject ranges overlap");
          }
        }
      }
      break;
    }
    case SplitMode::RandomBySubject:
      if (train_count < 0 || val_count < 0 || test_count < 0 || val_fraction < 0.0 ||
          test_fraction < 0.0 || val_fraction + test_fraction >= 1.0) {
        throw Error(ErrorKind::InvalidArgument, "invalid random split proportions");
      }
      break;
    case SplitMode::SubjectLists: {
      std::set<int> seen;
      for (const auto* list : {&train_subjects, &val_subjects, &test_subjects}) {
        for (int s : *list) {
          if (!seen.insert(s).second) {
            throw Error(ErrorKind::InvalidArgument,
                        "subject " + std::to_string(s) + " listed in more than one split");
          }
        }
      }
      break;
    }
  }
}

nlohmann::json SplitSpec::to_json() const {
  nlohmann::json j = {{"mode", std::string(to_string(mode))}};
  switch (mode) {
    case SplitMode::SubjectRanges:
      j["train"] = range_json(train_range);
      j["val"] = range_json(val_range);
      j["test"] = range_json(test_range);
      break;
    case SplitMode::RandomBySubject:
      j["train_count"] = train_count;
      j["val_count"] = val_count;
      j["test_count"] = test_count;
      j["val_fraction"] = val_fraction;
      j["test_fraction"] = test_fraction;
      j["seed"] = seed;
      break;
    case SplitMode::SubjectLists:
      j["train"] = train_subjects;
      j["val"] = val_subjects;
      j["test"] = test_subjects;
      break;
  }
  return j;
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.mode = split_mode_from_string(j.at("mode").get<std::string>());
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") continue;
    const bool lists = s.mode == SplitMode::SubjectLists;
    if (key == "train" && lists) s.train_subjects = v.get<std::vector<int>>();
    else if (key == "val" && lists) s.val_subjects = v.get<std::vector<int>>();
    else if (key == "test" && lists) s.test_subjects = v.get<std::vector<int>>();
    else if (key == "train") s.train_range = range_from_json(v);
    else if (key == "val") s.val_range = range_from_json(v);
    else if (key == "test") s.test_range = range_from_json(v);
    else if (key == "train_count") s.train_count = v.get<int>();
    else if (key == "val_count") s.val_count = v.get<int>();
    else if (key == "test_count") s.test_count = v.get<int>();
    else if (key == "val_fraction") s.val_fraction = v.get<double>();
    else if (key == "test_fraction") s.test_fraction = v.get<double>();
    else if (key == "seed") s.seed = v.get<std::uint64_t>();
    else throw Error(ErrorKind::InvalidArgument, "unknown split key '" + key + "'");
  }
  s.validate();
  return s;
}

std::vector<int> subjects_of(std::span<const GazeRecord> records) {
  std::set<int> s;
  for (const auto& r : records) s.insert(r.subject);
  return {s.begin(), s.end()};
}

SplitResult split_records(std::span<const GazeRecord> records, const SplitSpec& spec) {
  spec.validate();
  // 0 train, 1 val, 2 test; subjects absent from the map are dropped.
  std::map<int, int> assignment;
  switch (spec.mode) {
    case SplitMode::SubjectRanges:
      for (int s : subjects_of(records)) {
        if (spec.train_range.contains(s)) assignment[s] = 0;
        else if (spec.val_range.contains(s)) assignment[s] = 1;
        else if (spec.test_range.contains(s)) assignment[s] = 2;
      }
      break;
    case SplitMode::RandomBySubject: {
      std::vector<int> subjects = subjects_of(records);
      const auto n = static_cast<int>(subjects.size());
      int n_train = 0;
      int n_val = 0;
      int n_test = 0;
      if (spec.train_count > 0 || spec.val_count > 0 || spec.test_count > 0) {
        n_train = spec.train_count;
        n_val = spec.val_count;
        n_test = spec.test_count;
        if (n_train + n_val + n_test > n) {
          throw Error(ErrorKind::EmptySplitProduced,
                      "requested " + std::to_string(n_train + n_val + n_test) +
                          " subjects but only " + std::to_string(n) + " exist");
        }
      } else {
        n_val = static_cast<int>(std::lround(spec.val_fraction * n));
        n_test = static_cast<int>(std::lround(spec.test_fraction * n));
        n_train = n - n_val - n_test;
      }
      Rng rng(derive_seed(spec.seed, "split"));
      shuffle(subjects.begin(), subjects.end(), rng);
      for (int i = 0; i < n_train + n_val + n_test; ++i) {
        assignment[subjects[static_cast<std::size_t>(i)]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
      }
      break;
    }
    case SplitMode::SubjectLists:
      for (int s : spec.train_subjects) assignment[s] = 0;
      for (int s : spec.val_subjects) assignment[s] = 1;
      for (int s : spec.test_subjects) assignment[s] = 2;
      break;
  }

  SplitResult out;
  for (const auto& r : records) {
    const auto it = assignment.find(r.subject);
    if (it == assignment.end()) continue;
    (it->second == 0 ? out.train : it->second == 1 ? out.val : out.test).push_back(r);
  }
  const char* names[3] = {"train", "validation", "test"};
  const std::vector<GazeRecord>* parts[3] = {&out.train, &out.val, &out.test};
  for (int k = 0; k < 3; ++k) {
    if (parts[k]->empty()) {
      throw Error(ErrorKind::EmptySplitProduced, std::string(names[k]) + " split is empty");
    }
  }
  return out;
}

}  // namespace lgaze
