#include "lgaze_cli/run_config.hpp"

#include <fstream>
#include <set>

#include "lgaze/error.hpp"
#include "lgaze/random.hpp"
#include "lgaze/records.hpp"

namespace lgaze::cli {

namespace {

[[noreturn]] void usage(const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); }

nlohmann::json parse_override_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return text;
  }
}

void apply_override(nlohmann::json& j, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) usage("override '" + item + "' is not key=value");
  std::string pointer = "/" + item.substr(0, eq);
  for (char& c : pointer) {
    if (c == '.') c = '/';
  }
  j[nlohmann::json::json_pointer(pointer)] = parse_override_value(item.substr(eq + 1));
}

nlohmann::json section(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) return nlohmann::json::object();
  if (!j[name].is_object()) usage(std::string("config section '") + name + "' must be an object");
  return j[name];
}

nlohmann::json patched(nlohmann::json base, const nlohmann::json& patch) {
  base.merge_patch(patch);
  return base;
}

void seed_if_absent(nlohmann::json& s, std::uint64_t root, const char* name) {
  if (!s.contains("seed")) s["seed"] = derive_seed(root, name);
}

NormalizeSettings normalize_from_json(const nlohmann::json& j) {
  NormalizeSettings n;
  for (const auto& [key, v] : j.items()) {
    if (key == "pose_source") n.pose_source = pose_source_from_string(v.get<std::string>());
    else if (key == "camera") n.camera = normalized_camera_from_json(v);
    else if (key == "face_model") n.face_model = v.get<std::string>();
    else if (key == "max_rms_px") n.max_rms_px = v.get<double>();
    else usage("unknown normalize key '" + key + "'");
  }
  if (!(n.max_rms_px > 0.0)) usage("normalize.max_rms_px must be positive");
  return n;
}

PfiConfig pfi_from_json(const nlohmann::json& j) {
  PfiConfig p;
  for (const auto& [key, v] : j.items()) {
    if (key == "n_repeats") p.n_repeats = v.get<int>();
    else if (key == "seed") p.seed = v.get<std::uint64_t>();
    else if (key == "identity_permutation") p.identity_permutation = v.get<bool>();
    else usage("unknown pfi key '" + key + "'");
  }
  if (p.n_repeats < 1) usage("pfi.n_repeats must be >= 1");
  return p;
}

GradCheckConfig gradcheck_from_json(const nlohmann::json& j) {
  GradCheckConfig g;
  for (const auto& [key, v] : j.items()) {
    if (key == "n_params") g.n_params = v.get<int>();
    else if (key == "batch") g.batch = v.get<int>();
    else if (key == "step") g.step = v.get<double>();
    else if (key == "perturb_buffers") g.perturb_buffers = v.get<bool>();
    else if (key == "seed") g.seed = v.get<std::uint64_t>();
    else usage("unknown gradcheck key '" + key + "'");
  }
  if (g.n_params < 1 || g.batch < 2 || !(g.step > 0.0)) usage("invalid gradcheck settings");
  return g;
}

}  // namespace

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Holistic: return "holistic";
    case ModelKind::Siamese: return "siamese";
    case ModelKind::Gbt: return "gbt";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
  for (ModelKind k : {ModelKind::Holistic, ModelKind::Siamese, ModelKind::Gbt}) {
    if (s == to_string(k)) return k;
  }
  usage("unknown model kind '" + std::string(s) + "' (holistic, siamese, gbt)");
}

nlohmann::json RunConfig::to_json() const {
  return {{"seed", seed},
          {"model", to_string(model)},
          {"data_root", data_root},
          {"threads", threads},
          {"output_dir", output_dir},
          {"split", split.to_json()},
          {"mlp", mlp.to_json()},
          {"train", train.to_json()},
          {"gbt", gbt.to_json()},
          {"pnp", pnp.to_json()},
          {"normalize",
           {{"pose_source", lgaze::to_string(normalize.pose_source)},
            {"camera", normalized_camera_to_json(normalize.camera)},
            {"face_model", normalize.face_model},
            {"max_rms_px", normalize.max_rms_px}}},
          {"synth", synth.to_json()},
          {"pfi",
           {{"n_repeats", pfi.n_repeats},
            {"seed", pfi.seed},
            {"identity_permutation", pfi.identity_permutation}}},
          {"gradcheck",
           {{"n_params", gradcheck.n_params},
            {"batch", gradcheck.batch},
            {"step", gradcheck.step},
            {"perturb_buffers", gradcheck.perturb_buffers},
            {"seed", gradcheck.seed}}}};
}

NormalizeOptions RunConfig::normalize_options() const {
  NormalizeOptions o;
  o.pose_source = normalize.pose_source;
  o.camera = normalize.camera;
  o.pnp = pnp;
  if (!normalize.face_model.empty()) {
    o.model = CanonicalFaceModel::load(resolve_data_path(*this, normalize.face_model));
  }
  return o;
}

RunConfig resolve_config(const nlohmann::json& file, const std::vector<std::string>& overrides,
                         const char* env_data_root) {
  nlohmann::json j = file.is_null() ? nlohmann::json::object() : file;
  if (!j.is_object()) usage("config must be a JSON object");
  if (env_data_root != nullptr && *env_data_root != '\0') j["data_root"] = env_data_root;
  for (const auto& o : overrides) apply_override(j, o);

  static const std::set<std::string> known = {"seed", "model", "data_root", "threads", "output_dir",
                                              "split", "mlp", "train", "gbt", "pnp", "normalize",
                                              "synth", "pfi", "gradcheck"};
  for (const auto& [key, v] : j.items()) {
    if (!known.contains(key)) usage("unknown config key '" + key + "'");
  }

  RunConfig c;
  c.seed = j.value("seed", std::uint64_t{0});
  c.model = model_kind_from_string(j.value("model", std::string("siamese")));
  c.data_root = j.value("data_root", std::string());
  c.threads = j.value("threads", 1);
  if (c.threads < 1) usage("threads must be >= 1");
  c.output_dir = j.value("output_dir", std::string("."));

  const Architecture arch =
      c.model == ModelKind::Holistic ? Architecture::Holistic : Architecture::Siamese;
  const MlpConfig preset = arch == Architecture::Holistic ? MlpConfig::holistic() : MlpConfig::siamese();
  c.mlp = MlpConfig::from_json(patched(preset.to_json(), section(j, "mlp")));
  if (c.mlp.architecture != arch && c.model != ModelKind::Gbt) {
    usage("mlp.architecture disagrees with model '" + std::string(to_string(c.model)) + "'");
  }

  auto s = section(j, "train");
  seed_if_absent(s, c.seed, "train");
  c.train = TrainConfig::from_json(s, TrainConfig::for_architecture(arch));
  c.train.validate();

  s = section(j, "gbt");
  seed_if_absent(s, c.seed, "gbt");
  c.gbt = GbtConfig::from_json(patched(GbtConfig{}.to_json(), s));
  c.gbt.validate();

  s = section(j, "split");
  seed_if_absent(s, c.seed, "split");
  c.split = SplitSpec::from_json(patched(SplitSpec{}.to_json(), s));
  c.split.validate();

  c.pnp = PnpConfig::from_json(section(j, "pnp"));
  c.normalize = normalize_from_json(section(j, "normalize"));

  s = section(j, "synth");
  seed_if_absent(s, c.seed, "synth");
  c.synth = SynthConfig::from_json(s);
  c.synth.validate();

  s = section(j, "pfi");
  seed_if_absent(s, c.seed, "pfi");
  c.pfi = pfi_from_json(s);

  s = section(j, "gradcheck");
  seed_if_absent(s, c.seed, "gradcheck");
  c.gradcheck = gradcheck_from_json(s);
  return c;
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    usage("config " + path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_data_path(const RunConfig& cfg, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || cfg.data_root.empty()) return p;
  return std::filesystem::path(cfg.data_root) / p;
}

}  // namespace lgaze::cli
