#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "lgaze/boosted_trees.hpp"
#include "lgaze/evaluation.hpp"
#include "lgaze/records.hpp"
#include "lgaze/synthetic.hpp"
#include "test_support.hpp"

namespace lgaze {
namespace {

using testing::kind_of;

struct ToyData {
  Eigen::MatrixXd x;
  std::vector<double> y;
};

// y = sin(3 x0) + x1^2 - 0.5 x2 plus optional noise; x3 is pure noise.
ToyData toy(std::uint64_t seed, Eigen::Index n, double noise = 0.05) {
  Rng rng(seed);
  ToyData d{Eigen::MatrixXd(4, n), std::vector<double>(static_cast<std::size_t>(n))};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < 4; ++i) d.x(i, j) = uniform(rng, -1, 1);
    d.y[static_cast<std::size_t>(j)] = std::sin(3 * d.x(0, j)) + d.x(1, j) * d.x(1, j) -
                                       0.5 * d.x(2, j) + gaussian(rng, 0, noise);
  }
  return d;
}

GbtConfig small_config() {
  GbtConfig c;
  c.n_trees = 60;
  c.max_depth = 4;
  c.learning_rate = 0.1;
  c.min_samples_leaf = 5;
  c.n_bins = 64;
  c.seed = 3;
  return c;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

TEST(GbtConfig, DefaultsValidationAndJson) {
  const GbtConfig d;
  EXPECT_EQ(d.n_trees, 1000);
  EXPECT_EQ(d.max_depth, 6);
  EXPECT_EQ(d.learning_rate, 0.05);
  EXPECT_EQ(d.row_subsample, 0.8);
  EXPECT_EQ(d.feature_subsample, 0.8);
  EXPECT_EQ(d.n_bins, 256);
  EXPECT_EQ(d.min_samples_leaf, 20);
  EXPECT_EQ(d.lambda_l2, 1.0);
  EXPECT_EQ(GbtConfig::from_json(small_config().to_json()).to_json(), small_config().to_json());
  auto j = d.to_json();
  j["extra"] = true;
  EXPECT_EQ(kind_of([&] { GbtConfig::from_json(j); }), ErrorKind::InvalidArgument);
  for (auto mutate : std::vector<void (*)(GbtConfig&)>{
           [](GbtConfig& c) { c.n_trees = 0; }, [](GbtConfig& c) { c.max_depth = -1; },
           [](GbtConfig& c) { c.row_subsample = 0.0; }, [](GbtConfig& c) { c.feature_subsample = 1.5; }}) {
    GbtConfig c;
    mutate(c);
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::InvalidArgument);
  }
}

TEST(FitComponent, DepthZeroSingleTreeIsTargetMean) {
  const ToyData d = toy(1, 200);
  GbtConfig c = small_config();
  c.n_trees = 1;
  c.max_depth = 0;
  c.row_subsample = 1.0;
  const TreeEnsemble e = fit_component(d.x, d.y, c);
  const double mean = mean_of(d.y);
  EXPECT_DOUBLE_EQ(e.base_prediction, mean);
  for (Eigen::Index j = 0; j < d.x.cols(); ++j) EXPECT_NEAR(e.predict(d.x.col(j).data()), mean, 1e-12);
}

TEST(FitComponent, OverfitsTinyDataset) {
  const ToyData d = toy(2, 8, 0.0);
  GbtConfig c;
  c.n_trees = 3;
  c.max_depth = 8;
  c.learning_rate = 1.0;
  c.row_subsample = 1.0;
  c.feature_subsample = 1.0;
  c.min_samples_leaf = 1;
  c.lambda_l2 = 0.0;
  const TreeEnsemble exact = fit_component(d.x, d.y, c);
  EXPECT_LT(exact.train_mse[1], 1e-24);
  c.lambda_l2 = 1.0;
  c.n_trees = 60;
  const TreeEnsemble shrunk = fit_component(d.x, d.y, c);
  // Splits stop once their gain drops below the 1e-12 floor, so the residual
  // halves per round only down to about 1e-6.
  EXPECT_LT(shrunk.train_mse.back(), 1e-10);
  for (Eigen::Index j = 0; j < 8; ++j) {
    EXPECT_NEAR(shrunk.predict(d.x.col(j).data()), d.y[static_cast<std::size_t>(j)], 1e-5);
  }
}

TEST(FitComponent, TrainMseNonIncreasingWithFullSampling) {
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    const ToyData d = toy(seed, 500, 0.2);
    GbtConfig c = small_config();
    c.row_subsample = 1.0;
    c.feature_subsample = 1.0;
    const TreeEnsemble e = fit_component(d.x, d.y, c);
    ASSERT_EQ(e.train_mse.size(), static_cast<std::size_t>(c.n_trees + 1));
    for (std::size_t k = 1; k < e.train_mse.size(); ++k) EXPECT_LE(e.train_mse[k], e.train_mse[k - 1]);
    EXPECT_LT(e.train_mse.back(), 0.2 * e.train_mse.front());
  }
}

TEST(FitComponent, TreeStructureIsWellFormed) {
  const ToyData d = toy(7, 400);
  const TreeEnsemble e = fit_component(d.x, d.y, small_config());
  for (const auto& t : e.trees) {
    for (std::size_t i = 0; i < t.node_count(); ++i) {
      if (t.feature[i] < 0) {
        EXPECT_TRUE(std::isfinite(t.value[i]));
        continue;
      }
      EXPECT_GT(t.left[i], static_cast<int>(i));
      EXPECT_GT(t.right[i], static_cast<int>(i));
      EXPECT_LT(t.left[i], static_cast<int>(t.node_count()));
      EXPECT_LT(t.right[i], static_cast<int>(t.node_count()));
    }
  }
}

TEST(FitComponent, DeterministicPerSeed) {
  const ToyData d = toy(8, 300);
  const TreeEnsemble a = fit_component(d.x, d.y, small_config());
  const TreeEnsemble b = fit_component(d.x, d.y, small_config());
  GbtConfig other = small_config();
  other.seed = 99;
  const TreeEnsemble c = fit_component(d.x, d.y, other);
  EXPECT_EQ(a.train_mse, b.train_mse);
  EXPECT_NE(a.train_mse, c.train_mse);
}

TEST(FitComponent, RowOrderInvariantWithFullSampling) {
  const ToyData d = toy(9, 300);
  GbtConfig c = small_config();
  c.row_subsample = 1.0;
  c.feature_subsample = 1.0;
  std::vector<Eigen::Index> perm(300);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(1);
  shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd xp(4, 300);
  std::vector<double> yp(300);
  for (std::size_t j = 0; j < 300; ++j) {
    xp.col(static_cast<Eigen::Index>(j)) = d.x.col(perm[j]);
    yp[j] = d.y[static_cast<std::size_t>(perm[j])];
  }
  const TreeEnsemble a = fit_component(d.x, d.y, c);
  const TreeEnsemble b = fit_component(xp, yp, c);
  const ToyData probe = toy(10, 100);
  for (Eigen::Index j = 0; j < 100; ++j) {
    EXPECT_NEAR(a.predict(probe.x.col(j).data()), b.predict(probe.x.col(j).data()), 1e-9);
  }
}

TEST(FitComponent, ConstantFeaturesGiveBaseOnly) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(3, 50, 2.5);
  std::vector<double> y(50);
  std::iota(y.begin(), y.end(), 0.0);
  const TreeEnsemble e = fit_component(x, y, small_config());
  EXPECT_TRUE(e.trees.empty());
  EXPECT_DOUBLE_EQ(e.predict(x.col(0).data()), 24.5);
}

TEST(FitComponent, InputErrors) {
  const ToyData d = toy(11, 10);
  EXPECT_EQ(kind_of([&] { fit_component(d.x.leftCols(1), std::span(d.y).first(1), small_config()); }),
            ErrorKind::EmptyData);
  EXPECT_EQ(kind_of([&] { fit_component(d.x, std::span(d.y).first(5), small_config()); }),
            ErrorKind::EmptyData);
  Eigen::MatrixXd bad = d.x;
  bad(2, 3) = std::nan("");
  EXPECT_EQ(kind_of([&] { fit_component(bad, d.y, small_config()); }), ErrorKind::InvalidArgument);
}

TEST(GbtModel, EmptyEnsemblePredictsBase) {
  std::array<TreeEnsemble, 3> comps;
  comps[0].base_prediction = 0.1;
  comps[1].base_prediction = -0.2;
  comps[2].base_prediction = -0.9;
  const GbtModel m(GbtConfig{}, comps, 40);
  const Eigen::Matrix3Xd y = m.predict(Eigen::MatrixXd::Random(40, 3));
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(y.col(j), Vec3(0.1, -0.2, -0.9));
  std::vector<double> short_row(39, 0.0);
  EXPECT_EQ(kind_of([&] { m.predict_one(short_row); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { m.predict(Eigen::MatrixXd::Zero(41, 2)); }), ErrorKind::DimensionMismatch);
}

TEST(FitMulti, SharedSeedIdenticalTargetsGiveIdenticalComponents) {
  const ToyData d = toy(12, 300);
  Eigen::Matrix3Xd t(3, 300);
  for (Eigen::Index j = 0; j < 300; ++j) t.col(j).setConstant(d.y[static_cast<std::size_t>(j)]);
  const GbtModel m = fit_multi(d.x, t, small_config(), true);
  const Eigen::Matrix3Xd y = m.predict(d.x);
  EXPECT_LT((y.row(0) - y.row(1)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((y.row(0) - y.row(2)).cwiseAbs().maxCoeff(), 1e-12);
  const GbtModel derived = fit_multi(d.x, t, small_config());
  EXPECT_NE(derived.components()[0].train_mse, derived.components()[1].train_mse);
}

TEST(FitMulti, BatchPredictMatchesRowsAndComponents) {
  const ToyData d = toy(13, 200);
  Eigen::Matrix3Xd t(3, 200);
  for (Eigen::Index j = 0; j < 200; ++j) t.col(j) = Vec3(d.x(0, j), d.x(1, j), -1.0).normalized();
  const GbtModel m = fit_multi(d.x, t, small_config());
  const Eigen::Matrix3Xd batch = m.predict(d.x);
  for (Eigen::Index j = 0; j < 200; ++j) {
    const Eigen::Vector3d one = m.predict_one(std::span<const double>(d.x.col(j).data(), 4));
    EXPECT_EQ(batch.col(j), one);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(one(c), m.components()[static_cast<std::size_t>(c)].predict(d.x.col(j).data()));
  }
}

TEST(FitMulti, SyntheticGazeBeatsBasePrediction) {
  SynthConfig sc;
  sc.n_samples = 1000;
  sc.seed = 5;
  const auto records = generate_synthetic(sc);
  const LabeledFeatures data = make_labeled_features(records, FeatureLayout::Global);
  GbtConfig c = small_config();
  c.n_trees = 200;
  const GbtModel m = fit_multi(data.features, data.targets, c);
  std::array<TreeEnsemble, 3> base = m.components();
  for (auto& e : base) e.trees.clear();
  const GbtModel base_only(c, base, m.input_dim());
  const double fitted = evaluate(m, data).mae_deg;
  const double baseline = evaluate(base_only, data).mae_deg;
  EXPECT_LT(fitted, baseline);
  EXPECT_LT(fitted, 0.5 * baseline);
}

TEST(GbtModel, SerializationRoundTripIsBitExact) {
  const ToyData d = toy(14, 300);
  Eigen::Matrix3Xd t(3, 300);
  for (Eigen::Index j = 0; j < 300; ++j) t.col(j) = Vec3(d.y[static_cast<std::size_t>(j)], d.x(1, j), -1.0);
  const GbtModel m = fit_multi(d.x, t, small_config());
  const auto path = std::filesystem::temp_directory_path() / "lgaze_gbt_test.json";
  m.save(path);
  const GbtModel back = GbtModel::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.input_dim(), 4u);
  EXPECT_EQ(back.config().to_json(), m.config().to_json());
  const ToyData probe = toy(15, 200);
  EXPECT_EQ(m.predict(probe.x), back.predict(probe.x));

  auto j = m.to_json();
  j["version"] = 2;
  EXPECT_EQ(kind_of([&] { GbtModel::from_json(j); }), ErrorKind::SchemaVersionMismatch);
  j = m.to_json();
  j["components"][0]["trees"][0]["left"][0] = 1000;
  EXPECT_TRUE(kind_of([&] { GbtModel::from_json(j); }).has_value());
}

}  // namespace
}  // namespace lgaze
