#include "lgaze_cli/app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lgaze/evaluation.hpp"
#include "lgaze/records.hpp"
#include "lgaze_cli/convert.hpp"
#include "lgaze_cli/run_config.hpp"

namespace lgaze::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kGradCheckLimit = 1e-4;

std::shared_ptr<spdlog::logger> logger() {
  static const auto log = [] {
    auto l = std::make_shared<spdlog::logger>("lgaze", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
    l->set_pattern("[%H:%M:%S] %v");
    return l;
  }();
  return log;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ' ' || c == '=') c = '-';
  }
  return s.empty() ? "none" : s;
}

// Artifact names carry model kind, dataset tags and root seed.
fs::path artifact(const RunConfig& cfg, std::string_view kind, const std::vector<std::string>& tags,
                  std::string_view suffix) {
  std::vector<std::string> clean;
  for (const auto& t : tags) clean.push_back(sanitize(t));
  fs::create_directories(cfg.output_dir);
  return fs::path(cfg.output_dir) / fmt::format("{}_{}_s{}{}", kind, fmt::join(clean, "+"), cfg.seed, suffix);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

nlohmann::json envelope(const RunConfig& cfg, std::string_view command) {
  return {{"command", command}, {"config", cfg.to_json()}};
}

std::string dataset_tag(std::span<const GazeRecord> records, const std::string& fallback) {
  return records.empty() ? fallback : records.front().dataset;
}

std::vector<GazeRecord> load_dataset(const RunConfig& cfg, const std::string& path) {
  const fs::path p = resolve_data_path(cfg, path);
  auto records = load_records(p);
  logger()->info("loaded {} records from {}", records.size(), p.string());
  return records;
}

std::unique_ptr<GazeRegressor> load_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, "checkpoint " + path.string() + ": " + e.what());
  }
  const std::string format = j.is_object() ? j.value("format", "") : "";
  if (format == "lgaze-mlp") return std::make_unique<MlpModel>(MlpModel::from_json(j));
  if (format == "lgaze-gbt") return std::make_unique<GbtModel>(GbtModel::from_json(j));
  throw Error(ErrorKind::ParseError, path.string() + " is not an lgaze checkpoint");
}

std::vector<GazeRecord> select_split(const RunConfig& cfg, std::vector<GazeRecord> records,
                                     const std::string& which) {
  if (which == "all") return records;
  SplitResult s = split_records(records, cfg.split);
  if (which == "train") return std::move(s.train);
  if (which == "val") return std::move(s.val);
  if (which == "test") return std::move(s.test);
  throw Error(ErrorKind::InvalidArgument, "unknown split '" + which + "' (train, val, test, all)");
}

std::pair<std::string, std::string> tagged_path(const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
    throw Error(ErrorKind::InvalidArgument, "expected TAG=PATH, got '" + item + "'");
  }
  return {item.substr(0, eq), item.substr(eq + 1)};
}

// ---- commands -----------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::optional<std::string> output, std::ostream& out) {
  const auto records = generate_synthetic(cfg.synth);
  const fs::path path = output ? fs::path(*output) : artifact(cfg, "synth", {cfg.synth.dataset}, ".jsonl");
  save_records(path, records);
  auto meta = envelope(cfg, "synth");
  meta["output"] = path.string();
  meta["records"] = records.size();
  meta["subjects"] = subjects_of(records);
  write_json(path.string() + ".meta.json", meta);
  out << fmt::format("wrote {} synthetic records ({} subjects) to {}\n", records.size(),
                     subjects_of(records).size(), path.string());
  return kExitOk;
}

int cmd_normalize(const RunConfig& cfg, const std::string& input, std::optional<std::string> output,
                  std::ostream& out) {
  const fs::path in_path = resolve_data_path(cfg, input);
  const auto records = load_records(in_path, RecordReadOptions{false});
  const NormalizeOptions opts = cfg.normalize_options();
  std::vector<GazeRecord> kept;
  std::map<std::string, std::size_t> reasons;
  for (const auto& r : records) {
    if (!r.raw) {
      ++reasons["no raw observation"];
      continue;
    }
    try {
      NormalizationResult d;
      GazeRecord n = normalize_record(r, opts, &d);
      if (d.rms_residual > cfg.normalize.max_rms_px) {
        ++reasons["pose residual above limit"];
        continue;
      }
      kept.push_back(std::move(n));
    } catch (const Error& e) {
      ++reasons[std::string(to_string(e.kind()))];
    }
  }
  const std::string tag = dataset_tag(records, in_path.stem().string());
  const fs::path path = output ? fs::path(*output) : artifact(cfg, "normalized", {tag}, ".jsonl");
  save_records(path, kept);

  const std::size_t failures = records.size() - kept.size();
  const double retention = records.empty() ? 0.0 : static_cast<double>(kept.size()) / records.size();
  auto summary = envelope(cfg, "normalize");
  summary["input"] = in_path.string();
  summary["output"] = path.string();
  summary["records_in"] = records.size();
  summary["records_out"] = kept.size();
  summary["failures"] = failures;
  summary["retention"] = retention;
  summary["failure_reasons"] = reasons;
  write_json(path.string() + ".summary.json", summary);

  out << fmt::format("records in {}  out {}  failures {}  retention {:.2f}%\n", records.size(),
                     kept.size(), failures, 100.0 * retention);
  for (const auto& [reason, n] : reasons) out << fmt::format("  {}: {}\n", reason, n);
  return kExitOk;
}

int cmd_convert(const RunConfig& cfg, const std::string& input, const std::string& output,
                const std::string& dataset, std::ostream& out) {
  const fs::path in_path = resolve_data_path(cfg, input);
  std::ifstream in(in_path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + in_path.string());
  const auto records = convert_mesh_stream(in, dataset);
  save_records(output, records);
  auto meta = envelope(cfg, "convert");
  meta["input"] = in_path.string();
  meta["output"] = output;
  meta["records"] = records.size();
  write_json(output + ".meta.json", meta);
  out << fmt::format("converted {} records to {}\n", records.size(), output);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const std::string& data, std::ostream& out) {
  const auto records = load_dataset(cfg, data);
  const SplitResult split = split_records(records, cfg.split);
  const std::string tag = dataset_tag(records, "data");
  const std::string kind(to_string(cfg.model));
  const fs::path ckpt = artifact(cfg, kind, {tag}, ".model.json");

  auto report = envelope(cfg, "train");
  report["dataset"] = tag;
  report["checkpoint"] = ckpt.string();
  report["split_sizes"] = {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}};

  std::unique_ptr<GazeRegressor> model;
  if (cfg.model == ModelKind::Gbt) {
    const LabeledFeatures tr = make_labeled_features(split.train, FeatureLayout::Global);
    logger()->info("fitting {} trees x 3 components on {} samples", cfg.gbt.n_trees, tr.size());
    auto gbt = std::make_unique<GbtModel>(fit_multi(tr.features, tr.targets, cfg.gbt));
    gbt->save(ckpt);
    model = std::move(gbt);
  } else {
    const LabeledFeatures tr = make_labeled_features(split.train, cfg.mlp.layout(), cfg.mlp.head_anchor_mode);
    const LabeledFeatures va = make_labeled_features(split.val, cfg.mlp.layout(), cfg.mlp.head_anchor_mode);
    auto log = logger();
    TrainResult res = train(cfg.mlp, tr, va, cfg.train, [&](const EpochRecord& e) {
      log->info("epoch {:>3}  train {:.3f}  val {:.3f}  lr {:.2e}", e.epoch, e.train_mae_deg,
                e.val_mae_deg, e.lr);
    });
    res.model.save(ckpt);
    report["train_report"] = res.report.to_json();
    out << fmt::format("best val MAE {:.3f} deg at epoch {} ({}, {:.1f} s)\n", res.report.best_val_mae_deg,
                       res.report.best_epoch, res.report.stop_reason, res.report.wall_seconds);
    model = std::make_unique<MlpModel>(std::move(res.model));
  }

  std::vector<EvalReport> reps;
  for (const auto& [name, part] : {std::pair{"val", &split.val}, std::pair{"test", &split.test}}) {
    EvalReport r = evaluate(*model, *part);
    r.train_dataset = tag;
    r.test_dataset = fmt::format("{} {}", tag, name);
    report[name] = r.to_json();
    reps.push_back(std::move(r));
  }
  write_json(artifact(cfg, kind, {tag}, ".train.json"), report);
  out << eval_table(reps);
  out << fmt::format("checkpoint {}\n", ckpt.string());
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& data,
             const std::string& which, std::ostream& out) {
  const auto model = load_model(checkpoint);
  const auto records = load_dataset(cfg, data);
  const std::string tag = dataset_tag(records, "data");
  const auto subset = select_split(cfg, records, which);
  EvalReport r = evaluate(*model, subset);
  r.train_dataset = fs::path(checkpoint).stem().string();
  r.test_dataset = fmt::format("{} {}", tag, which);
  auto j = envelope(cfg, "eval");
  j["checkpoint"] = checkpoint;
  j["dataset"] = tag;
  j["split"] = which;
  j["report"] = r.to_json();
  write_json(artifact(cfg, model->kind(), {tag, which}, ".eval.json"), j);
  out << eval_table(std::vector<EvalReport>{r});
  return kExitOk;
}

int cmd_cross(const RunConfig& cfg, const std::vector<std::string>& model_items,
              const std::vector<std::string>& data_items, std::ostream& out) {
  std::map<std::string, std::unique_ptr<GazeRegressor>> owned;
  std::map<std::string, const GazeRegressor*> models;
  std::set<std::string> kinds;
  for (const auto& item : model_items) {
    auto [tag, path] = tagged_path(item);
    owned[tag] = load_model(path);
    models[tag] = owned[tag].get();
    kinds.insert(owned[tag]->kind());
  }
  std::vector<DomainData> domains;
  std::vector<std::string> tags;
  for (const auto& item : data_items) {
    auto [tag, path] = tagged_path(item);
    DomainData d;
    d.tag = tag;
    d.all = load_dataset(cfg, path);
    d.test = split_records(d.all, cfg.split).test;
    tags.push_back(tag);
    domains.push_back(std::move(d));
  }
  if (domains.empty()) throw Error(ErrorKind::InvalidArgument, "cross needs at least one --data TAG=PATH");
  const CrossDomainGrid grid = cross_domain_matrix(models, domains);
  auto j = envelope(cfg, "cross");
  j["grid"] = grid.to_json();
  const std::string kind = kinds.size() == 1 ? *kinds.begin() : "mixed";
  write_json(artifact(cfg, kind, tags, ".cross.json"), j);
  out << grid.table();
  return kExitOk;
}

int cmd_pfi(const RunConfig& cfg, const std::string& checkpoint, const std::string& data,
            const std::string& which, std::ostream& out) {
  const auto model = load_model(checkpoint);
  const auto records = load_dataset(cfg, data);
  const std::string tag = dataset_tag(records, "data");
  const auto subset = select_split(cfg, records, which);
  const LabeledFeatures feats = make_labeled_features(subset, model->layout(), model->head_anchor_mode());
  const auto groups = default_feature_groups(model->layout());
  logger()->info("permutation importance: {} groups x {} repeats on {} samples", groups.size(),
                 cfg.pfi.n_repeats, feats.size());
  const ImportanceReport rep = permutation_importance(*model, feats, groups, cfg.pfi);
  auto j = envelope(cfg, "pfi");
  j["checkpoint"] = checkpoint;
  j["dataset"] = tag;
  j["split"] = which;
  j["importance"] = rep.to_json();
  write_json(artifact(cfg, model->kind(), {tag, which}, ".pfi.json"), j);
  rep.write_csv(artifact(cfg, model->kind(), {tag, which}, ".pfi.csv"));
  out << rep.table();
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, const std::string& arch_name, std::ostream& out) {
  std::vector<Architecture> archs;
  if (arch_name == "both") archs = {Architecture::Holistic, Architecture::Siamese};
  else archs = {architecture_from_string(arch_name)};

  bool ok = true;
  auto j = envelope(cfg, "gradcheck");
  j["limit"] = kGradCheckLimit;
  j["results"] = nlohmann::json::array();
  out << fmt::format("{:<9} {:<5} {:>8} {:>12} {:>12}  {}\n", "arch", "mode", "checked", "max rel",
                     "mean rel", "worst tensor");
  for (Architecture a : archs) {
    const MlpConfig mc = cfg.mlp.architecture == a ? cfg.mlp
                         : a == Architecture::Holistic ? MlpConfig::holistic()
                                                       : MlpConfig::siamese();
    const MlpModel model = MlpModel::init(mc, derive_seed(cfg.gradcheck.seed, to_string(a)));
    for (Mode mode : {Mode::Eval, Mode::Train}) {
      GradCheckConfig gc = cfg.gradcheck;
      gc.mode = mode;
      const GradCheckResult r = gradient_check(model, gc);
      const char* mode_name = mode == Mode::Eval ? "eval" : "train";
      ok = ok && r.max_rel_error < kGradCheckLimit;
      out << fmt::format("{:<9} {:<5} {:>8} {:>12.3e} {:>12.3e}  {}\n", to_string(a), mode_name,
                         r.n_checked, r.max_rel_error, r.mean_rel_error, r.worst_tensor);
      j["results"].push_back({{"architecture", to_string(a)},
                              {"mode", mode_name},
                              {"n_checked", r.n_checked},
                              {"max_rel_error", r.max_rel_error},
                              {"mean_rel_error", r.mean_rel_error},
                              {"worst_tensor", r.worst_tensor}});
    }
  }
  j["passed"] = ok;
  write_json(artifact(cfg, "gradcheck", {arch_name}, ".json"), j);
  out << (ok ? "gradient check passed\n" : fmt::format("gradient check FAILED (limit {:.0e})\n", kGradCheckLimit));
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return kExitUsage;
    case ErrorKind::ParseError:
    case ErrorKind::SchemaVersionMismatch:
    case ErrorKind::IoError:
    case ErrorKind::EmptyData:
    case ErrorKind::EmptySet:
    case ErrorKind::EmptySplit:
    case ErrorKind::EmptySplitProduced:
    case ErrorKind::MissingModel:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::RejectionLimit:
    case ErrorKind::TooFewPoints:
      return kExitData;
    default:
      return kExitNumerical;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Landmark-based gaze estimation: normalization, training and evaluation", "lgaze"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model_kind, out_dir, data_root;
  std::optional<int> threads;
  std::string log_level = "info";
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--set", sets, "Override one config value, e.g. train.max_epochs=20 (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--seed", seed, "Root seed; component seeds derive from it");
  app.add_option("--model", model_kind, "Model kind: holistic, siamese or gbt");
  app.add_option("--threads", threads, "Upper bound on worker threads");
  app.add_option("--out-dir", out_dir, "Directory for output artifacts");
  app.add_option("--data-root", data_root, "Base directory for relative dataset paths");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  std::optional<std::string> output;
  std::string input, data, checkpoint, which, dataset, arch = "both";
  std::vector<std::string> model_items, data_items;
  bool identity = false;
  std::optional<int> repeats;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic landmark dataset");
  synth->add_option("--out", output, "Output JSONL path");

  auto* normalize = app.add_subcommand("normalize", "Normalize raw landmark records");
  normalize->add_option("--input", input, "Raw-landmark JSONL")->required();
  normalize->add_option("--out", output, "Output JSONL path");

  auto* convert = app.add_subcommand("convert", "Import a dense-mesh landmark export as raw records");
  convert->add_option("--input", input, "Mesh JSONL")->required();
  convert->add_option("--out", output, "Output JSONL path")->required();
  convert->add_option("--dataset", dataset, "Dataset tag for lines without one")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model on a normalized dataset");
  train_cmd->add_option("--data", data, "Normalized JSONL")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eval->add_option("--data", data, "Normalized JSONL")->required();
  eval->add_option("--split", which, "train, val, test or all")->default_val("test");

  auto* cross = app.add_subcommand("cross", "Cross-dataset evaluation grid");
  cross->add_option("--checkpoint", model_items, "TAG=PATH, one per training dataset")->required()
      ->allow_extra_args(false);
  cross->add_option("--data", data_items, "TAG=PATH, one per dataset")->required()->allow_extra_args(false);

  auto* pfi = app.add_subcommand("pfi", "Grouped permutation feature importance");
  pfi->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  pfi->add_option("--data", data, "Normalized JSONL")->required();
  pfi->add_option("--split", which, "train, val, test or all")->default_val("val");
  pfi->add_option("--repeats", repeats, "Permutations per group");
  pfi->add_flag("--identity", identity, "Use identity permutations (diagnostic)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of backpropagation");
  gradcheck->add_option("--arch", arch, "holistic, siamese or both")->default_val("both");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto level = spdlog::level::from_str(log_level);
    if (level == spdlog::level::off && log_level != "off") {
      throw Error(ErrorKind::InvalidArgument, "unknown log level '" + log_level + "'");
    }
    logger()->set_level(level);

    if (seed) sets.push_back(fmt::format("seed={}", *seed));
    if (model_kind) sets.push_back("model=" + nlohmann::json(*model_kind).dump());
    if (threads) sets.push_back(fmt::format("threads={}", *threads));
    if (out_dir) sets.push_back("output_dir=" + nlohmann::json(*out_dir).dump());
    if (data_root) sets.push_back("data_root=" + nlohmann::json(*data_root).dump());
    if (repeats) sets.push_back(fmt::format("pfi.n_repeats={}", *repeats));
    if (identity) sets.push_back("pfi.identity_permutation=true");

    const nlohmann::json file = config_path.empty() ? nlohmann::json::object() : load_config_file(config_path);
    const RunConfig cfg = resolve_config(file, sets, std::getenv("LGAZE_DATA_ROOT"));
    Eigen::setNbThreads(cfg.threads);

    if (*synth) return cmd_synth(cfg, output, out);
    if (*normalize) return cmd_normalize(cfg, input, output, out);
    if (*convert) return cmd_convert(cfg, input, *output, dataset, out);
    if (*train_cmd) return cmd_train(cfg, data, out);
    if (*eval) return cmd_eval(cfg, checkpoint, data, which, out);
    if (*cross) return cmd_cross(cfg, model_items, data_items, out);
    if (*pfi) return cmd_pfi(cfg, checkpoint, data, which, out);
    if (*gradcheck) return cmd_gradcheck(cfg, arch, out);
    err << "no command given\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: invalid configuration value: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace lgaze::cli
