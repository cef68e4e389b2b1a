#include <gtest/gtest.h>

#include "lgaze/loss.hpp"
#include "test_support.hpp"

namespace lgaze {
namespace {

using testing::kind_of;
using testing::random_unit;

Eigen::Matrix3Xd random_batch(Rng& rng, Eigen::Index n, double lo, double hi) {
  Eigen::Matrix3Xd m(3, n);
  for (Eigen::Index j = 0; j < n; ++j) m.col(j) = random_unit(rng) * uniform(rng, lo, hi);
  return m;
}

TEST(AngularLoss, PerfectPredictionHasZeroLossAndGradient) {
  Rng rng(1);
  const Eigen::Matrix3Xd t = random_batch(rng, 8, 1, 1);
  const LossResult r = angular_loss(t, t);
  EXPECT_LT(r.mean_loss, 1e-15);
  EXPECT_LT(r.gradient.norm(), 1e-8);
  const LossResult scaled = angular_loss(5.0 * t, t);
  EXPECT_LT(scaled.mean_loss, 1e-15);
}

TEST(AngularLoss, KnownAngles) {
  Eigen::Matrix3Xd p(3, 2);
  Eigen::Matrix3Xd t(3, 2);
  p << 1, 1, 0, 1, 0, 0;
  t << 0, 1, 1, 0, 0, 0;
  const LossResult r = angular_loss(p, t);
  EXPECT_NEAR(r.per_sample(0), kPi / 2, 1e-15);
  EXPECT_NEAR(r.per_sample(1), kPi / 4, 1e-15);
  EXPECT_NEAR(r.mean_loss, 3 * kPi / 8, 1e-15);
}

TEST(AngularLoss, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3Xd t = random_batch(rng, 6, 1, 1);
    const Eigen::Matrix3Xd p = random_batch(rng, 6, 0.5, 3);
    const LossResult r = angular_loss(p, t);
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      for (int c = 0; c < 3; ++c) {
        Eigen::Matrix3Xd hi = p;
        Eigen::Matrix3Xd lo = p;
        hi(c, j) += h;
        lo(c, j) -= h;
        const double fd = (angular_loss(hi, t).mean_loss - angular_loss(lo, t).mean_loss) / (2 * h);
        EXPECT_LT(testing::rel_err(fd, r.gradient(c, j), 1e-3), 1e-6) << fd << " " << r.gradient(c, j);
      }
    }
  }
}

TEST(AngularLoss, RangeAndFiniteGradientAtAntipode) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const LossResult r = angular_loss(random_batch(rng, 4, 0.1, 10), random_batch(rng, 4, 1, 1));
    for (Eigen::Index j = 0; j < 4; ++j) {
      EXPECT_GE(r.per_sample(j), 0.0);
      EXPECT_LE(r.per_sample(j), kPi);
    }
  }
  Eigen::Matrix3Xd t(3, 1);
  t << 0, 0, 1;
  const LossResult anti = angular_loss(-t, t);
  EXPECT_NEAR(anti.mean_loss, kPi, 1e-15);
  EXPECT_TRUE(anti.gradient.allFinite());
}

TEST(AngularLoss, Errors) {
  Eigen::Matrix3Xd t(3, 1);
  t << 0, 0, 1;
  EXPECT_EQ(kind_of([&] { angular_loss(Eigen::Matrix3Xd::Zero(3, 1), t); }), ErrorKind::ZeroPrediction);
  EXPECT_EQ(kind_of([&] { angular_loss(Eigen::Matrix3Xd::Ones(3, 2), t); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { angular_errors_deg(Eigen::Matrix3Xd::Zero(3, 1), t); }),
            ErrorKind::ZeroPrediction);
}

TEST(AngularErrorsDeg, MatchesLossInDegrees) {
  Rng rng(4);
  const Eigen::Matrix3Xd p = random_batch(rng, 10, 0.5, 2);
  const Eigen::Matrix3Xd t = random_batch(rng, 10, 1, 1);
  const Eigen::VectorXd deg = angular_errors_deg(p, t);
  const LossResult r = angular_loss(p, t);
  for (Eigen::Index j = 0; j < 10; ++j) EXPECT_DOUBLE_EQ(deg(j), rad2deg(r.per_sample(j)));
}

}  // namespace
}  // namespace lgaze
