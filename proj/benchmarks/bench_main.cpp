#include <benchmark/benchmark.h>

#include <vector>

#include <Eigen/Core>

#include "lgaze/boosted_trees.hpp"
#include "lgaze/geometry.hpp"
#include "lgaze/loss.hpp"
#include "lgaze/neural.hpp"
#include "lgaze/normalize.hpp"
#include "lgaze/random.hpp"
#include "lgaze/records.hpp"
#include "lgaze/synthetic.hpp"

namespace {

using namespace lgaze;

const std::vector<GazeRecord>& sample_records() {
  static const std::vector<GazeRecord> records = [] {
    SynthConfig cfg;
    cfg.n_samples = 2048;
    cfg.n_subjects = 8;
    cfg.seed = 1;
    return generate_synthetic(cfg);
  }();
  return records;
}

Eigen::Matrix3Xd random_directions(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::Matrix3Xd m(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.col(i) = pitchyaw_to_vector(uniform(rng, -0.6, 0.6), uniform(rng, -0.8, 0.8));
  }
  return m;
}

void BM_NormalizationRotation(benchmark::State& state) {
  HeadPose pose;
  pose.rotation = rotation_y(0.3) * rotation_x(-0.2);
  pose.translation = Vec3(20.0, -10.0, 550.0);
  for (auto _ : state) benchmark::DoNotOptimize(build_normalization_rotation(pose));
}
BENCHMARK(BM_NormalizationRotation);

void BM_NormalizeRecord(benchmark::State& state) {
  const auto& records = sample_records();
  NormalizeOptions opts;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize_record(records[i], opts));
    i = (i + 1) % records.size();
  }
}
BENCHMARK(BM_NormalizeRecord);

void BM_AngularLoss(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Matrix3Xd pred = 2.0 * random_directions(n, 1);
  const Eigen::Matrix3Xd target = random_directions(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(angular_loss(pred, target));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_AngularLoss)->Arg(256)->Arg(4096);

void mlp_predict(benchmark::State& state, const MlpConfig& cfg) {
  const LabeledFeatures data = make_labeled_features(sample_records(), cfg.layout());
  const MlpModel model = MlpModel::init(cfg, 3);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(data.features));
  state.SetItemsProcessed(state.iterations() * data.size());
}

void mlp_train_step(benchmark::State& state, const MlpConfig& cfg) {
  const LabeledFeatures data = make_labeled_features(sample_records(), cfg.layout());
  const Eigen::MatrixXd x = data.features.leftCols(256);
  const Eigen::Matrix3Xd y = data.targets.leftCols(256);
  MlpModel model = MlpModel::init(cfg, 3);
  Rng rng(4);
  for (auto _ : state) {
    ForwardTape tape;
    const Eigen::Matrix3Xd out = model.forward(x, Mode::Train, &tape, &rng);
    const LossResult loss = angular_loss(out, y);
    benchmark::DoNotOptimize(model.backward(tape, loss.gradient));
  }
  state.SetItemsProcessed(state.iterations() * x.cols());
}

void BM_PredictHolistic(benchmark::State& s) { mlp_predict(s, MlpConfig::holistic()); }
void BM_PredictSiamese(benchmark::State& s) { mlp_predict(s, MlpConfig::siamese()); }
void BM_TrainStepHolistic(benchmark::State& s) { mlp_train_step(s, MlpConfig::holistic()); }
void BM_TrainStepSiamese(benchmark::State& s) { mlp_train_step(s, MlpConfig::siamese()); }
BENCHMARK(BM_PredictHolistic)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictSiamese)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainStepHolistic)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainStepSiamese)->Unit(benchmark::kMillisecond);

void BM_GbtFit(benchmark::State& state) {
  const LabeledFeatures data = make_labeled_features(sample_records(), FeatureLayout::Global);
  GbtConfig cfg;
  cfg.n_trees = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_multi(data.features, data.targets, cfg));
}
BENCHMARK(BM_GbtFit)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_GbtPredict(benchmark::State& state) {
  const LabeledFeatures data = make_labeled_features(sample_records(), FeatureLayout::Global);
  GbtConfig cfg;
  cfg.n_trees = 200;
  const GbtModel model = fit_multi(data.features, data.targets, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(data.features));
  state.SetItemsProcessed(state.iterations() * data.size());
}
BENCHMARK(BM_GbtPredict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
