#include "lgaze/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "lgaze/error.hpp"
#include "lgaze/loss.hpp"
#include "lgaze/random.hpp"

namespace lgaze {

namespace {

double mean_of(const Eigen::VectorXd& v) { return v.sum() / static_cast<double>(v.size()); }

double population_sd(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double mae_deg(const GazeRegressor& model, const Eigen::MatrixXd& x, const Eigen::Matrix3Xd& y) {
  return mean_of(angular_errors_deg(model.predict(x), y));
}

std::string cell_text(const EvalReport& r) { return fmt::format("{:.2f} ({:.2f})", r.mae_deg, r.sd_deg); }

}  // namespace

nlohmann::json EvalReport::to_json() const {
  return {{"mae_deg", mae_deg},         {"sd_deg", sd_deg},
          {"n", n},                     {"model", model_tag},
          {"train_dataset", train_dataset}, {"test_dataset", test_dataset}};
}

EvalReport summarize_errors(const Eigen::VectorXd& errors_deg) {
  if (errors_deg.size() == 0) throw Error(ErrorKind::EmptySet, "no samples to evaluate");
  EvalReport r;
  r.n = static_cast<std::size_t>(errors_deg.size());
  r.mae_deg = mean_of(errors_deg);
  r.sd_deg = population_sd({errors_deg.data(), r.n}, r.mae_deg);
  return r;
}

EvalReport evaluate(const GazeRegressor& model, const LabeledFeatures& data) {
  if (data.size() == 0) throw Error(ErrorKind::EmptySet, "no samples to evaluate");
  EvalReport r = summarize_errors(angular_errors_deg(model.predict(data.features), data.targets));
  r.model_tag = model.kind();
  return r;
}

EvalReport evaluate(const GazeRegressor& model, std::span<const GazeRecord> records) {
  if (records.empty()) throw Error(ErrorKind::EmptySet, "no records to evaluate");
  EvalReport r = evaluate(model, make_labeled_features(records, model.layout(), model.head_anchor_mode()));
  r.test_dataset = records.front().dataset;
  return r;
}

nlohmann::json CrossDomainGrid::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < cells.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : cells[r]) row.push_back(c.to_json());
    rows.push_back(std::move(row));
  }
  return {{"train", train_tags}, {"test", test_tags}, {"cells", std::move(rows)}};
}

std::string CrossDomainGrid::table() const {
  std::size_t w0 = std::string("train \\ test").size();
  for (const auto& t : train_tags) w0 = std::max(w0, t.size());
  std::vector<std::size_t> widths;
  for (std::size_t c = 0; c < test_tags.size(); ++c) {
    std::size_t w = test_tags[c].size();
    for (const auto& row : cells) w = std::max(w, cell_text(row[c]).size());
    widths.push_back(w);
  }
  std::ostringstream os;
  os << fmt::format("{:<{}}", "train \\ test", w0);
  for (std::size_t c = 0; c < test_tags.size(); ++c) os << fmt::format("  {:>{}}", test_tags[c], widths[c]);
  os << '\n';
  for (std::size_t r = 0; r < cells.size(); ++r) {
    os << fmt::format("{:<{}}", train_tags[r], w0);
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      os << fmt::format("  {:>{}}", cell_text(cells[r][c]), widths[c]);
    }
    os << '\n';
  }
  return os.str();
}

CrossDomainGrid cross_domain_matrix(const std::map<std::string, const GazeRegressor*>& models,
                                    std::span<const DomainData> domains) {
  CrossDomainGrid grid;
  for (const auto& d : domains) {
    grid.train_tags.push_back(d.tag);
    grid.test_tags.push_back(d.tag);
  }
  for (std::size_t r = 0; r < domains.size(); ++r) {
    const auto it = models.find(domains[r].tag);
    if (it == models.end() || it->second == nullptr) {
      throw Error(ErrorKind::MissingModel, "no model trained on '" + domains[r].tag + "'");
    }
    std::vector<EvalReport> row;
    for (std::size_t c = 0; c < domains.size(); ++c) {
      const auto& records = r == c ? domains[c].test : domains[c].all;
      EvalReport rep = evaluate(*it->second, records);
      rep.train_dataset = domains[r].tag;
      rep.test_dataset = domains[c].tag;
      row.push_back(std::move(rep));
    }
    grid.cells.push_back(std::move(row));
  }
  return grid;
}

std::vector<FeatureGroup> default_feature_groups(FeatureLayout layout) {
  auto span_of = [](std::size_t first, std::size_t count) {
    std::vector<std::size_t> v(count);
    std::iota(v.begin(), v.end(), first);
    return v;
  };
  std::vector<FeatureGroup> g = {
      {"iris", "left", span_of(0, 10)},
      {"eye contour", "left", span_of(10, 8)},
      {"iris", "right", span_of(18, 10)},
      {"eye contour", "right", span_of(28, 8)},
  };
  if (layout == FeatureLayout::Global) {
    g.push_back({"head anchors", "", span_of(36, 4)});
  } else {
    g.push_back({"relative position", "", span_of(kSiameseDeltaOffset, kDeltaFeatureDim)});
    g.push_back({"head anchors", "", span_of(kSiameseHeadOffset, kHeadFeatureDim)});
  }
  return g;
}

void validate_groups(std::span<const FeatureGroup> groups, std::size_t dim) {
  std::vector<int> seen(dim, 0);
  for (const auto& g : groups) {
    if (g.indices.empty()) throw Error(ErrorKind::InvalidArgument, "feature group '" + g.label() + "' is empty");
    for (std::size_t i : g.indices) {
      if (i >= dim) throw Error(ErrorKind::InvalidArgument, "feature index out of range in '" + g.label() + "'");
      if (seen[i]++ > 0) throw Error(ErrorKind::InvalidArgument, "feature groups overlap at index " + std::to_string(i));
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorKind::InvalidArgument, "feature groups do not cover every input");
  }
}

nlohmann::json ImportanceReport::to_json() const {
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& g : groups) {
    gs.push_back({{"group", g.group.name},
                  {"side", g.group.side},
                  {"indices", g.group.indices},
                  {"mean_deg", g.mean_deg},
                  {"sd_deg", g.sd_deg}});
  }
  return {{"baseline_mae_deg", baseline_mae_deg}, {"n_repeats", n_repeats}, {"groups", std::move(gs)}};
}

std::string ImportanceReport::table() const {
  std::size_t w = 5;
  for (const auto& g : groups) w = std::max(w, g.group.label().size());
  std::string out = fmt::format("baseline MAE {:.3f} deg, {} repeats\n", baseline_mae_deg, n_repeats);
  out += fmt::format("{:<{}}  {:>10}  {:>10}\n", "group", w, "mean I", "SD");
  for (const auto& g : groups) {
    out += fmt::format("{:<{}}  {:>10.4f}  {:>10.4f}\n", g.group.label(), w, g.mean_deg, g.sd_deg);
  }
  return out;
}

void ImportanceReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "group,repeat,importance_deg\n";
  for (const auto& g : groups) {
    for (std::size_t k = 0; k < g.per_repeat.size(); ++k) {
      out << '"' << g.group.label() << "\"," << k << ',' << fmt::format("{:.17g}", g.per_repeat[k]) << '\n';
    }
  }
}

ImportanceReport permutation_importance(const GazeRegressor& model, const LabeledFeatures& data,
                                        std::span<const FeatureGroup> groups,
                                        const PfiConfig& cfg) {
  if (data.size() < 2) throw Error(ErrorKind::EmptySet, "permutation importance needs >= 2 samples");
  if (cfg.n_repeats < 1) throw Error(ErrorKind::InvalidArgument, "n_repeats must be >= 1");
  validate_groups(groups, static_cast<std::size_t>(data.features.rows()));

  ImportanceReport rep;
  rep.n_repeats = cfg.n_repeats;
  rep.baseline_mae_deg = mae_deg(model, data.features, data.targets);

  const auto n = static_cast<std::size_t>(data.size());
  std::vector<Eigen::Index> perm(n);
  Eigen::MatrixXd permuted = data.features;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const FeatureGroup& g = groups[gi];
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(gi)));
    GroupImportance gr;
    gr.group = g;
    gr.per_repeat.reserve(static_cast<std::size_t>(cfg.n_repeats));
    for (int k = 0; k < cfg.n_repeats; ++k) {
      std::iota(perm.begin(), perm.end(), Eigen::Index{0});
      if (!cfg.identity_permutation) shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t f : g.indices) {
          const auto row = static_cast<Eigen::Index>(f);
          permuted(row, static_cast<Eigen::Index>(j)) = data.features(row, perm[j]);
        }
      }
      gr.per_repeat.push_back(mae_deg(model, permuted, data.targets) - rep.baseline_mae_deg);
    }
    for (std::size_t f : g.indices) {
      const auto row = static_cast<Eigen::Index>(f);
      permuted.row(row) = data.features.row(row);
    }
    gr.mean_deg = std::accumulate(gr.per_repeat.begin(), gr.per_repeat.end(), 0.0) /
                  static_cast<double>(gr.per_repeat.size());
    gr.sd_deg = population_sd(gr.per_repeat, gr.mean_deg);
    rep.groups.push_back(std::move(gr));
  }
  return rep;
}

std::string eval_table(std::span<const EvalReport> reports) {
  std::vector<std::string> labels;
  std::size_t w = 5;
  for (const auto& r : reports) {
    std::string l = r.model_tag;
    if (!r.train_dataset.empty() || !r.test_dataset.empty()) {
      l += " [" + r.train_dataset + " -> " + r.test_dataset + "]";
    }
    w = std::max(w, l.size());
    labels.push_back(std::move(l));
  }
  std::string out = fmt::format("{:<{}}  {:>16}  {:>8}\n", "model", w, "MAE (SD) deg", "n");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out += fmt::format("{:<{}}  {:>16}  {:>8}\n", labels[i], w, cell_text(reports[i]), reports[i].n);
  }
  return out;
}

}  // namespace lgaze
