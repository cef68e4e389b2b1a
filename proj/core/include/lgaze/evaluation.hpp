#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "lgaze/features.hpp"
#include "lgaze/records.hpp"
#include "lgaze/regressor.hpp"

namespace lgaze {

struct EvalReport {
  double mae_deg = 0.0;
  double sd_deg = 0.0;  // population SD across samples
  std::size_t n = 0;
  std::string model_tag;
  std::string train_dataset;
  std::string test_dataset;

  nlohmann::json to_json() const;
};

// Mean and population SD of per-sample angular errors. Throws EmptySet.
EvalReport summarize_errors(const Eigen::VectorXd& errors_deg);

// Eval-mode predictions against unit targets. Throws EmptySet.
EvalReport evaluate(const GazeRegressor& model, const LabeledFeatures& data);
// Featurizes normalized records in the model's own layout first.
EvalReport evaluate(const GazeRegressor& model, std::span<const GazeRecord> records);

struct DomainData {
  std::string tag;
  std::vector<GazeRecord> test;  // held-out split, used on the diagonal
  std::vector<GazeRecord> all;   // whole dataset, used off the diagonal
};

struct CrossDomainGrid {
  std::vector<std::string> train_tags;  // rows
  std::vector<std::string> test_tags;   // columns
  std::vector<std::vector<EvalReport>> cells;

  nlohmann::json to_json() const;
  // Aligned text table of "MAE (SD)" cells.
  std::string table() const;
};

// Row r evaluates the model trained on domains[r]: the diagonal uses that
// domain's test split, every other cell the entire foreign dataset. Throws
// MissingModel if a domain has no model.
CrossDomainGrid cross_domain_matrix(const std::map<std::string, const GazeRegressor*>& models,
                                    std::span<const DomainData> domains);

struct FeatureGroup {
  std::string name;
  std::string side;  // "left", "right" or empty
  std::vector<std::size_t> indices;

  std::string label() const { return side.empty() ? name : side + " " + name; }
};

// Frozen group tables.
//   Global (40): left iris 0-9, left eye contour 10-17, right iris 18-27,
//     right eye contour 28-35, head anchors 36-39.
//   Siamese (42): left iris 0-9, left eye contour 10-17, right iris 18-27,
//     right eye contour 28-35, relative position 36-37, head anchors 38-41.
std::vector<FeatureGroup> default_feature_groups(FeatureLayout layout);

// Throws InvalidArgument unless groups are disjoint, non-empty, in range and
// together cover [0, dim).
void validate_groups(std::span<const FeatureGroup> groups, std::size_t dim);

struct PfiConfig {
  int n_repeats = 1000;
  std::uint64_t seed = 0;
  bool identity_permutation = false;  // diagnostic: every permutation is the identity
};

struct GroupImportance {
  FeatureGroup group;
  double mean_deg = 0.0;
  double sd_deg = 0.0;  // population SD over repeats
  std::vector<double> per_repeat;
};

struct ImportanceReport {
  double baseline_mae_deg = 0.0;
  int n_repeats = 0;
  std::vector<GroupImportance> groups;

  nlohmann::json to_json() const;
  std::string table() const;
  // Long format: group,repeat,importance_deg.
  void write_csv(const std::filesystem::path& path) const;
};

// Grouped permutation importance: each repeat draws one permutation of the
// sample axis per group and applies it jointly to the group's columns;
// I = MAE(permuted) - MAE(baseline), reported unclamped. Throws EmptySet for
// fewer than 2 samples.
ImportanceReport permutation_importance(const GazeRegressor& model, const LabeledFeatures& data,
                                        std::span<const FeatureGroup> groups,
                                        const PfiConfig& cfg);

// Rows of "label | MAE (SD) | n" for several reports.
std::string eval_table(std::span<const EvalReport> reports);

}  // namespace lgaze
