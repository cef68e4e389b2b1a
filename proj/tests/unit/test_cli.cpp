#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lgaze/records.hpp"
#include "lgaze/synthetic.hpp"
#include "lgaze_cli/app.hpp"
#include "lgaze_cli/convert.hpp"
#include "lgaze_cli/run_config.hpp"
#include "test_support.hpp"

namespace lgaze::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lgaze_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("LGAZE_DATA_ROOT");
  }
  void TearDown() override {
    unsetenv("LGAZE_DATA_ROOT");
    fs::remove_all(dir_);
  }

  Outcome lgaze(std::vector<std::string> args) {
    args.insert(args.end(), {"--log-level", "off", "--out-dir", dir_.string()});
    std::ostringstream out, err;
    Outcome o;
    o.code = run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
  }

  // Normalized synthetic dataset with a subject split that fits 12 subjects.
  fs::path make_dataset(const std::string& tag, std::uint64_t seed, int n = 600) {
    const auto raw = path(tag + "_raw.jsonl");
    const auto norm = path(tag + ".jsonl");
    EXPECT_EQ(lgaze({"synth", "--out", raw.string(), "--set", "synth.n_samples=" + std::to_string(n),
                     "--set", "synth.n_subjects=12", "--set", "synth.dataset=\"" + tag + "\"", "--seed",
                     std::to_string(seed)})
                  .code,
              0);
    EXPECT_EQ(lgaze({"normalize", "--input", raw.string(), "--out", norm.string()}).code, 0);
    return norm;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  static std::vector<std::string> split_flags() {
    return {"--set", "split.mode=\"random-by-subject\"", "--set", "split.val_fraction=0.2", "--set",
            "split.test_fraction=0.2"};
  }

  static std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(lgaze({}).code, kExitUsage);
  EXPECT_EQ(lgaze({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(lgaze({"synth", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(lgaze({"synth", "--set", "nonsense.key=1"}).code, kExitUsage);
  EXPECT_EQ(lgaze({"synth", "--set", "train.bogus=1"}).code, kExitUsage);
  EXPECT_EQ(lgaze({"synth", "--set", "no-equals-sign"}).code, kExitUsage);
  EXPECT_EQ(lgaze({"synth", "--model", "forest"}).code, kExitUsage);
  EXPECT_EQ(lgaze({"synth", "--set", "train.max_epochs=\"many\""}).code, kExitUsage);
  std::ofstream(path("bad.json")) << R"({"train": {"max_epochs": 3}, "extra": true})";
  const Outcome o = lgaze({"synth", "--config", path("bad.json").string()});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("extra"), std::string::npos);
  EXPECT_EQ(lgaze({"--help"}).code, kExitOk);
}

TEST_F(Cli, MissingFilesAreDataErrors) {
  EXPECT_EQ(lgaze({"synth", "--config", path("absent.json").string()}).code, kExitData);
  EXPECT_EQ(lgaze({"normalize", "--input", path("absent.jsonl").string()}).code, kExitData);
  EXPECT_EQ(lgaze({"eval", "--checkpoint", path("absent.json").string(), "--data", "x"}).code, kExitData);
  std::ofstream(path("not_a_model.json")) << R"({"format": "other"})";
  const auto data = make_dataset("d", 1, 100);
  EXPECT_EQ(lgaze({"eval", "--checkpoint", path("not_a_model.json").string(), "--data", data.string()}).code,
            kExitData);
}

TEST_F(Cli, NormalizeEmptyInput) {
  std::ofstream(path("empty.jsonl")).close();
  const Outcome o = lgaze({"normalize", "--input", path("empty.jsonl").string(), "--out", path("n.jsonl").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(load_records(path("n.jsonl")).empty());
  const auto summary = read_json(path("n.jsonl.summary.json"));
  EXPECT_EQ(summary.at("records_in"), 0);
  EXPECT_EQ(summary.at("records_out"), 0);
  EXPECT_EQ(summary.at("failures"), 0);
}

TEST_F(Cli, NormalizeSyntheticRetainsEverythingWithoutTouchingInput) {
  const auto raw = path("raw.jsonl");
  ASSERT_EQ(lgaze({"synth", "--out", raw.string(), "--set", "synth.n_samples=200", "--set",
                   "synth.pixel_noise_px=1.0"})
                .code,
            0);
  const std::string before = slurp(raw);
  const Outcome o = lgaze({"normalize", "--input", raw.string(), "--out", path("n.jsonl").string(), "--set",
                           "normalize.pose_source=\"provided-as-init\""});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(slurp(raw), before);
  const auto summary = read_json(path("n.jsonl.summary.json"));
  EXPECT_EQ(summary.at("records_in"), 200);
  EXPECT_EQ(summary.at("records_out"), 200);
  EXPECT_EQ(summary.at("retention"), 1.0);
  EXPECT_EQ(summary.at("config").at("normalize").at("pose_source"), "provided-as-init");
  EXPECT_EQ(load_records(path("n.jsonl")).size(), 200u);
}

TEST_F(Cli, CorruptLineNamesTheLine) {
  const auto raw = path("raw.jsonl");
  ASSERT_EQ(lgaze({"synth", "--out", raw.string(), "--set", "synth.n_samples=3"}).code, 0);
  std::string text = slurp(raw);
  const auto second = text.find('\n') + 1;
  text.insert(second + 10, "#garbage#");
  std::ofstream(raw) << text;
  const Outcome o = lgaze({"normalize", "--input", raw.string()});
  EXPECT_EQ(o.code, kExitData);
  EXPECT_NE(o.err.find("line 2"), std::string::npos) << o.err;
}

TEST_F(Cli, DataRootFromEnvironment) {
  const auto raw = path("raw.jsonl");
  ASSERT_EQ(lgaze({"synth", "--out", raw.string(), "--set", "synth.n_samples=5"}).code, 0);
  setenv("LGAZE_DATA_ROOT", dir_.c_str(), 1);
  const Outcome o = lgaze({"normalize", "--input", "raw.jsonl", "--out", path("n.jsonl").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(read_json(path("n.jsonl.summary.json")).at("config").at("data_root"), dir_.string());
  // A flag outranks the environment.
  EXPECT_EQ(lgaze({"normalize", "--input", "raw.jsonl", "--data-root", "/nonexistent"}).code, kExitData);
}

TEST_F(Cli, TrainThenEvalReproducesBestValidationError) {
  const auto data = make_dataset("syn", 3);
  const auto train_args = with({"train", "--data", data.string(), "--seed", "5", "--set", "train.max_epochs=3"},
                               split_flags());
  const Outcome t = lgaze(train_args);
  ASSERT_EQ(t.code, 0) << t.err;
  const auto ckpt = path("siamese_syn_s5.model.json");
  const auto report_path = path("siamese_syn_s5.train.json");
  ASSERT_TRUE(fs::exists(ckpt));
  ASSERT_TRUE(fs::exists(report_path));
  const auto report = read_json(report_path);
  EXPECT_EQ(report.at("config").at("train").at("max_epochs"), 3);
  EXPECT_EQ(report.at("config").at("seed"), 5);
  EXPECT_EQ(report.at("config").at("model"), "siamese");

  const Outcome e = lgaze(with({"eval", "--checkpoint", ckpt.string(), "--data", data.string(), "--split", "val",
                                "--seed", "5"},
                               split_flags()));
  ASSERT_EQ(e.code, 0) << e.err;
  const auto eval = read_json(path("siamese_syn+val_s5.eval.json"));
  EXPECT_NEAR(eval.at("report").at("mae_deg").get<double>(),
              report.at("train_report").at("best_val_mae_deg").get<double>(), 1e-9);

  // Same seed and config give the same training history.
  ASSERT_EQ(lgaze(train_args).code, 0);
  const auto again = read_json(report_path);
  EXPECT_EQ(again.at("train_report").at("epochs"), report.at("train_report").at("epochs"));
}

TEST_F(Cli, GbtTrainAndCrossGrid) {
  const auto a = make_dataset("alpha", 1);
  const auto b = make_dataset("beta", 2);
  for (const auto& [tag, file] : {std::pair{"alpha", a}, std::pair{"beta", b}}) {
    const Outcome o = lgaze(with({"train", "--model", "gbt", "--set", "gbt.n_trees=20", "--data", file.string()},
                                 split_flags()));
    ASSERT_EQ(o.code, 0) << o.err;
    ASSERT_TRUE(fs::exists(path(std::string("gbt_") + tag + "_s0.model.json")));
  }
  const Outcome c = lgaze(with({"cross", "--checkpoint", "alpha=" + path("gbt_alpha_s0.model.json").string(),
                                "--checkpoint", "beta=" + path("gbt_beta_s0.model.json").string(), "--data",
                                "alpha=" + a.string(), "--data", "beta=" + b.string()},
                               split_flags()));
  ASSERT_EQ(c.code, 0) << c.err;
  const auto grid = read_json(path("gbt_alpha+beta_s0.cross.json")).at("grid");
  ASSERT_EQ(grid.at("cells").size(), 2u);
  EXPECT_EQ(grid.at("cells")[0][1].at("n"), 600);
  EXPECT_LT(grid.at("cells")[0][0].at("n").get<int>(), 600);
  EXPECT_NE(c.out.find("train \\ test"), std::string::npos);

  const Outcome missing = lgaze(with({"cross", "--checkpoint", "alpha=" + path("gbt_alpha_s0.model.json").string(),
                                      "--data", "alpha=" + a.string(), "--data", "beta=" + b.string()},
                                     split_flags()));
  EXPECT_EQ(missing.code, kExitData);
}

TEST_F(Cli, PfiIdentityGivesZeroImportance) {
  const auto data = make_dataset("syn", 4);
  ASSERT_EQ(lgaze(with({"train", "--data", data.string(), "--set", "train.max_epochs=1"}, split_flags())).code, 0);
  const Outcome o = lgaze(with({"pfi", "--checkpoint", path("siamese_syn_s0.model.json").string(), "--data",
                                data.string(), "--repeats", "1", "--identity"},
                               split_flags()));
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rep = read_json(path("siamese_syn+val_s0.pfi.json"));
  EXPECT_EQ(rep.at("config").at("pfi").at("identity_permutation"), true);
  for (const auto& g : rep.at("importance").at("groups")) EXPECT_EQ(g.at("mean_deg").get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(path("siamese_syn+val_s0.pfi.csv")));
}

TEST_F(Cli, GradcheckPassesOnFreshSeeds) {
  for (const char* seed : {"1", "2"}) {
    const Outcome o = lgaze({"gradcheck", "--seed", seed, "--set", "gradcheck.n_params=40"});
    EXPECT_EQ(o.code, 0) << o.out << o.err;
    EXPECT_NE(o.out.find("passed"), std::string::npos);
  }
  const auto j = read_json(path("gradcheck_both_s2.json"));
  EXPECT_EQ(j.at("results").size(), 4u);
  EXPECT_EQ(j.at("passed"), true);
}

TEST_F(Cli, ConvertMeshExportThenNormalize) {
  SynthConfig sc;
  sc.n_samples = 20;
  const auto records = generate_synthetic(sc);
  {
    std::ofstream mesh(path("mesh.jsonl"));
    for (const auto& r : records) {
      nlohmann::json pts = nlohmann::json::array();
      for (int i = 0; i < 478; ++i) pts.push_back({0.0, 0.0, 0.0});
      for (std::size_t s = 0; s < kNumLandmarks; ++s) {
        pts[static_cast<std::size_t>(kMeshIndex[s])] = {r.raw->landmarks[s].x(), r.raw->landmarks[s].y(), 1.0};
      }
      mesh << nlohmann::json{{"subject", r.subject},
                             {"frame", r.frame},
                             {"mesh", pts},
                             {"intrinsics", intrinsics_to_json(r.raw->intrinsics)},
                             {"gaze", {r.raw->gaze->x(), r.raw->gaze->y(), r.raw->gaze->z()}}}
                  .dump()
           << '\n';
    }
  }
  const Outcome c = lgaze({"convert", "--input", path("mesh.jsonl").string(), "--out",
                           path("raw.jsonl").string(), "--dataset", "meshy"});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto raw = load_records(path("raw.jsonl"), RecordReadOptions{false});
  ASSERT_EQ(raw.size(), records.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_EQ(raw[i].dataset, "meshy");
    EXPECT_FALSE(raw[i].normalized);
    EXPECT_TRUE(raw[i].raw->landmarks == records[i].raw->landmarks);
  }
  ASSERT_EQ(lgaze({"normalize", "--input", path("raw.jsonl").string(), "--out", path("n.jsonl").string()}).code, 0);
  EXPECT_EQ(read_json(path("n.jsonl.summary.json")).at("records_out"), 20);

  std::ofstream(path("bad.jsonl")) << slurp(path("mesh.jsonl")).substr(0, slurp(path("mesh.jsonl")).find('\n') + 1)
                                   << R"({"subject": 1, "colour": "red"})" << '\n';
  const Outcome bad = lgaze({"convert", "--input", path("bad.jsonl").string(), "--out",
                             path("x.jsonl").string(), "--dataset", "m"});
  EXPECT_EQ(bad.code, kExitData);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);
  EXPECT_NE(bad.err.find("colour"), std::string::npos);
}

TEST(RunConfig, SeedsDeriveFromRootUnlessGiven) {
  const RunConfig a = resolve_config({{"seed", 9}}, {}, nullptr);
  const RunConfig b = resolve_config({{"seed", 9}, {"train", {{"seed", 4}}}}, {}, nullptr);
  const RunConfig c = resolve_config({{"seed", 10}}, {}, nullptr);
  EXPECT_NE(a.train.seed, a.gbt.seed);
  EXPECT_NE(a.train.seed, c.train.seed);
  EXPECT_EQ(b.train.seed, 4u);
  EXPECT_EQ(b.gbt.seed, a.gbt.seed);
  // The echoed configuration resolves to itself.
  EXPECT_EQ(resolve_config(a.to_json(), {}, nullptr).to_json(), a.to_json());
}

TEST(RunConfig, PrecedenceAndModelPresets) {
  const nlohmann::json file = {{"data_root", "/from/file"}, {"model", "holistic"}};
  EXPECT_EQ(resolve_config(file, {}, nullptr).data_root, "/from/file");
  EXPECT_EQ(resolve_config(file, {}, "/from/env").data_root, "/from/env");
  EXPECT_EQ(resolve_config(file, {"data_root=\"/from/flag\""}, "/from/env").data_root, "/from/flag");
  const RunConfig h = resolve_config(file, {}, nullptr);
  EXPECT_EQ(h.mlp.architecture, Architecture::Holistic);
  EXPECT_EQ(h.train.lr0, 1e-1);
  EXPECT_EQ(resolve_config({}, {}, nullptr).train.lr0, 1e-3);
  EXPECT_EQ(resolve_config({}, {"mlp.hidden=32"}, nullptr).mlp.hidden, 32);
  EXPECT_EQ(testing::kind_of([] { resolve_config({{"model", "holistic"}, {"mlp", {{"architecture", "siamese"}}}}, {}, nullptr); }),
            ErrorKind::InvalidArgument);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::InvalidArgument), kExitUsage);
  EXPECT_EQ(exit_code_for(ErrorKind::ParseError), kExitData);
  EXPECT_EQ(exit_code_for(ErrorKind::IoError), kExitData);
  EXPECT_EQ(exit_code_for(ErrorKind::DivergedLoss), kExitNumerical);
  EXPECT_EQ(exit_code_for(ErrorKind::ZeroPrediction), kExitNumerical);
}

}  // namespace
}  // namespace lgaze::cli
