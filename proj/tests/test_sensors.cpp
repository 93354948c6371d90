#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "common/test_support.hpp"
#include "se3ppf/sensors.hpp"

namespace se3ppf {
namespace {

using testing::Rng;

SensorSuite sim_suite() {
  SensorSuite s;
  s.reference_vectors = {
      {Vector3(1.0, -1.0, 1.0) / std::sqrt(3.0), 1.0, 0.1 * Vector3(-1.0, 1.0, 0.5)},
      {Vector3(0.0, 0.0, 1.0), 1.0, 0.1 * Vector3(0.0, 0.0, 1.0)},
  };
  s.landmarks = {{Vector3(0.5, std::sqrt(2.0), 1.0), 1.0, 0.1 * Vector3(0.3, 0.2, -0.2)}};
  s.gyro_bias = 0.1 * Vector3(1.0, -1.0, 1.0);
  s.velocity_bias = 0.1 * Vector3(2.0, 5.0, 1.0);
  s.noise = {0.15, 0.3, 0.1, 0.1};
  return s;
}

SensorSuite clean_suite() {
  SensorSuite s = sim_suite();
  for (auto& r : s.reference_vectors) r.bias.setZero();
  for (auto& l : s.landmarks) l.bias.setZero();
  s.gyro_bias.setZero();
  s.velocity_bias.setZero();
  s.noise = {};
  return s;
}

/// Closed-form exponential of the constant twist [w; v] over time t.
HomogeneousTransform screw(const HomogeneousTransform& T0, const Vector3& w, const Vector3& v,
                           double t) {
  const Vector3 th = w * t;
  const double a = th.norm();
  const Matrix3 K = testing::skew_oracle(th);
  Matrix3 J = Matrix3::Identity();
  if (a > 1e-12) {
    J += (1.0 - std::cos(a)) / (a * a) * K + (a - std::sin(a)) / (a * a * a) * K * K;
  }
  const Matrix3 dR = Eigen::AngleAxisd(a, a > 0 ? Vector3(th / a) : Vector3::UnitX())
                         .toRotationMatrix();
  return {T0.rotation * dR, T0.position + T0.rotation * J * v * t};
}

TEST(PropagateTruth, AtRestIsUnchanged) {
  Rng rng(51);
  TruthState s;
  s.pose = {rng.rotation(), rng.vec3()};
  const TruthState n = propagate_truth(s, Vector3::Zero(), Vector3::Zero(), 0.1);
  EXPECT_LT((n.pose.rotation - s.pose.rotation).norm(), 1e-12);
  EXPECT_EQ(n.pose.position, s.pose.position);
  EXPECT_DOUBLE_EQ(n.t, 0.1);
}

TEST(PropagateTruth, HalfTurnAboutZ) {
  TruthState s;
  s.pose.position = Vector3(1, 2, 3);
  const TruthState n = propagate_truth(s, Vector3(0, 0, std::numbers::pi), Vector3::Zero(), 1.0);
  EXPECT_LT((n.pose.rotation - testing::axis_rotation(2, std::numbers::pi)).norm(), 1e-12);
  EXPECT_EQ(n.pose.position, s.pose.position);
}

TEST(PropagateTruth, MatchesScrewMotion) {
  Rng rng(52);
  for (int trial = 0; trial < 5; ++trial) {
    TruthState s;
    s.pose = {rng.rotation(), rng.vec3()};
    const HomogeneousTransform T0 = s.pose;
    const Vector3 w = rng.vec3();
    const Vector3 v = rng.vec3();
    for (int k = 0; k < 1000; ++k) s = propagate_truth(s, w, v, 1e-3);
    const HomogeneousTransform expected = screw(T0, w, v, 1.0);
    EXPECT_LT((s.pose.rotation - expected.rotation).norm(), 1e-8);
    EXPECT_LT((s.pose.position - expected.position).norm(), 1e-8);
    EXPECT_TRUE(is_rotation(s.pose.rotation));
  }
}

TEST(PropagateTruth, RejectsNonPositiveStep) {
  EXPECT_THROW(propagate_truth(TruthState{}, Vector3::Zero(), Vector3::Zero(), 0.0),
               InvalidArgument);
}

TEST(Measure, IdentityPoseCleanSuite) {
  const SensorSuite suite = clean_suite();
  const MeasurementFrame f = measure(TruthState{}, suite, nullptr);
  for (std::size_t i = 0; i < suite.reference_vectors.size(); ++i) {
    EXPECT_EQ(f.body_ref_vectors[i], suite.reference_vectors[i].inertial);
  }
  EXPECT_EQ(f.body_landmarks[0], suite.landmarks[0].inertial);
}

TEST(Measure, BiasesWithoutNoise) {
  const SensorSuite suite = sim_suite();
  TruthState s;
  s.omega = Vector3(0.1, 0.2, 0.3);
  s.velocity = Vector3(-1, 0, 1);
  const MeasurementFrame f = measure(s, suite, nullptr);
  EXPECT_LT((f.body_ref_vectors[0] -
             (Vector3(1, -1, 1) / std::sqrt(3.0) + 0.1 * Vector3(-1, 1, 0.5)))
                .norm(),
            1e-15);
  EXPECT_LT((f.omega_m - (s.omega + 0.1 * Vector3(1, -1, 1))).norm(), 1e-15);
  EXPECT_LT((f.v_m - (s.velocity + 0.1 * Vector3(2, 5, 1))).norm(), 1e-15);
}

TEST(Measure, GeneralPose) {
  Rng rng(53);
  const SensorSuite suite = clean_suite();
  TruthState s;
  s.pose = {rng.rotation(), rng.vec3()};
  const MeasurementFrame f = measure(s, suite, nullptr);
  EXPECT_LT((s.pose.rotation * f.body_landmarks[0] + s.pose.position -
             suite.landmarks[0].inertial)
                .norm(),
            1e-12);
}

TEST(Measure, GyroNoiseStatistics) {
  SensorSuite suite = clean_suite();
  suite.noise.omega = 0.15;
  NoiseStream noise(2024);
  const int n = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = measure(TruthState{}, suite, &noise).omega_m.x();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  EXPECT_LT(std::abs(mean), 3.0 * 0.15 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sd, 0.15, 0.02 * 0.15);
}

TEST(NoiseStream, SameSeedSameStream) {
  NoiseStream a(7);
  NoiseStream b(7);
  NoiseStream c(8);
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const Vector3 x = a.draw(1.0);
    EXPECT_EQ(x, b.draw(1.0));
    differs = differs || x != c.draw(1.0);
  }
  EXPECT_TRUE(differs);
}

TEST(DeriveSeed, DistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 0), derive_seed(1, 0));
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(NormalizePairs, UnitInputsUnchangedAndAugmented) {
  const SensorSuite suite = clean_suite();
  const MeasurementFrame f = measure(TruthState{}, suite, nullptr);
  const NormalizedPairs p = normalize_pairs(f, suite);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_LT((p.inertial[0] - suite.reference_vectors[0].inertial).norm(), 1e-15);
  EXPECT_LT((p.body[1] - Vector3::UnitZ()).norm(), 1e-15);
  EXPECT_LT((p.inertial[2] - Vector3(-1, -1, 0) / std::sqrt(2.0)).norm(), 1e-15);
  EXPECT_EQ(p.weights, (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(NormalizePairs, CollinearPairRejected) {
  SensorSuite suite = clean_suite();
  suite.reference_vectors[1].inertial = 2.0 * suite.reference_vectors[0].inertial;
  const MeasurementFrame f = measure(TruthState{}, suite, nullptr);
  EXPECT_THROW(normalize_pairs(f, suite), NonCollinearityFailure);
  EXPECT_THROW(suite.validate(), NonCollinearityFailure);
}

TEST(NormalizePairs, ZeroMeasurementRejected) {
  const SensorSuite suite = clean_suite();
  MeasurementFrame f = measure(TruthState{}, suite, nullptr);
  f.body_ref_vectors[0].setZero();
  EXPECT_THROW(normalize_pairs(f, suite), DegenerateVector);
}

TEST(SensorSuite, Validation) {
  EXPECT_NO_THROW(sim_suite().validate());
  SensorSuite s = sim_suite();
  s.landmarks.clear();
  EXPECT_THROW(s.validate(), NoLandmarks);
  s = sim_suite();
  s.reference_vectors[0].weight = 2.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = sim_suite();
  s.reference_vectors.pop_back();
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(WeightedCenters, SingleAndTwoLandmarks) {
  LandmarkPairs one{{Vector3(1, 2, 3)}, {Vector3(4, 5, 6)}, {2.0}};
  auto [gi, gb] = weighted_centers(one);
  EXPECT_EQ(gi, Vector3(1, 2, 3));
  EXPECT_EQ(gb, Vector3(4, 5, 6));

  LandmarkPairs two{{Vector3(1, 0, 0), Vector3(0, 1, 0)},
                    {Vector3(0, 0, 2), Vector3(2, 0, 0)},
                    {1.0, 1.0}};
  std::tie(gi, gb) = weighted_centers(two);
  EXPECT_LT((gi - Vector3(0.5, 0.5, 0)).norm(), 1e-15);
  EXPECT_LT((gb - Vector3(1, 0, 1)).norm(), 1e-15);
  EXPECT_THROW(weighted_centers(LandmarkPairs{}), NoLandmarks);
}

TEST(WeightedCenters, CleanBodyCenterIsTransformed) {
  Rng rng(54);
  SensorSuite suite = clean_suite();
  suite.landmarks.push_back({Vector3(-2, 1, 0.5), 0.5, Vector3::Zero()});
  TruthState s;
  s.pose = {rng.rotation(), rng.vec3()};
  const LandmarkPairs lp = landmark_pairs(measure(s, suite, nullptr), suite);
  const auto [gi, gb] = weighted_centers(lp);
  EXPECT_LT((gb - s.pose.rotation.transpose() * (gi - s.pose.position)).norm(), 1e-12);
}

TEST(BuildAggregates, OrthonormalSet) {
  NormalizedPairs p{{Vector3::UnitX(), Vector3::UnitY(), Vector3::UnitZ()},
                    {Vector3::UnitX(), Vector3::UnitY(), Vector3::UnitZ()},
                    {1.0, 1.0, 1.0}};
  LandmarkPairs lp{{Vector3(1, 2, 3)}, {Vector3(1, 2, 3)}, {1.0}};
  const AggregateMatrices a = build_aggregates(p, lp);
  EXPECT_LT((a.M_R - Matrix3::Identity()).norm(), 1e-15);
  EXPECT_NEAR(a.lambda_min, 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(a.m_c, 1.0);
}

TEST(BuildAggregates, SimulationSetProperties) {
  const SensorSuite suite = clean_suite();
  const MeasurementFrame f = measure(TruthState{}, suite, nullptr);
  const AggregateMatrices a = build_aggregates(normalize_pairs(f, suite), landmark_pairs(f, suite));
  EXPECT_LT((a.M_R - a.M_R.transpose()).norm(), 1e-15);
  EXPECT_NEAR(a.M_R.trace(), 3.0, 1e-12);
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(a.M_R);
  const Vector3 l = eig.eigenvalues();
  EXPECT_GT(l.minCoeff(), 0.0);
  // eigenvalues of Tr(M) I - M are the pairwise sums of those of M
  const double pair_min = std::min({l(0) + l(1), l(0) + l(2), l(1) + l(2)});
  EXPECT_NEAR(a.lambda_min, pair_min, 1e-9);
}

TEST(BuildAggregates, MeasurementFormOfAttitudeError) {
  // R_hat sum k v_B v_I^T = R~ M_R on clean data
  Rng rng(55);
  const SensorSuite suite = clean_suite();
  for (int k = 0; k < 50; ++k) {
    TruthState s;
    s.pose = {rng.rotation(), rng.vec3()};
    const Matrix3 Rh = rng.rotation();
    const MeasurementFrame f = measure(s, suite, nullptr);
    const AggregateMatrices a =
        build_aggregates(normalize_pairs(f, suite), landmark_pairs(f, suite));
    EXPECT_LT((Rh * a.K_R - Rh * s.pose.rotation.transpose() * a.M_R).norm(), 1e-12);
  }
}

TEST(BuildAggregates, RankDeficient) {
  NormalizedPairs p{{Vector3::UnitX(), Vector3::UnitY()}, {Vector3::UnitX(), Vector3::UnitY()},
                    {1.5, 1.5}};
  LandmarkPairs lp{{Vector3::Zero()}, {Vector3::Zero()}, {1.0}};
  EXPECT_THROW(build_aggregates(p, lp), RankDeficient);
}

}  // namespace
}  // namespace se3ppf
