#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgaze/boosted_trees.hpp"
#include "lgaze/evaluation.hpp"
#include "lgaze/gradcheck.hpp"
#include "lgaze/neural.hpp"
#include "lgaze/normalize.hpp"
#include "lgaze/pnp.hpp"
#include "lgaze/split.hpp"
#include "lgaze/synthetic.hpp"
#include "lgaze/training.hpp"

namespace lgaze::cli {

enum class ModelKind { Holistic, Siamese, Gbt };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

struct NormalizeSettings {
  PoseSource pose_source = PoseSource::Solve;
  NormalizedCamera camera;
  std::string face_model;    // canonical model JSON; empty selects the built-in model
  double max_rms_px = 10.0;  // records whose pose fits worse are counted as failures
};

// Fully resolved configuration for one command invocation.
struct RunConfig {
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::Siamese;
  std::string data_root;
  int threads = 1;
  std::string output_dir = ".";
  SplitSpec split;
  MlpConfig mlp = MlpConfig::siamese();
  TrainConfig train;
  GbtConfig gbt;
  PnpConfig pnp;
  NormalizeSettings normalize;
  SynthConfig synth;
  PfiConfig pfi;
  GradCheckConfig gradcheck;

  nlohmann::json to_json() const;
  NormalizeOptions normalize_options() const;
};

// Layers, lowest precedence first: built-in defaults, the config file, the
// data-root environment value, then dotted `key.path=value` overrides.
// Component seeds not given explicitly are derived from the root seed.
RunConfig resolve_config(const nlohmann::json& file, const std::vector<std::string>& overrides,
                         const char* env_data_root);

nlohmann::json load_config_file(const std::filesystem::path& path);

// Relative dataset paths are taken from data_root when it is set.
std::filesystem::path resolve_data_path(const RunConfig& cfg, const std::string& path);

}  // namespace lgaze::cli
