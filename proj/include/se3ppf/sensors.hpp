#pragma once

// Ground truth propagation, synthetic measurements and the weighted
// observation aggregates used by the direct filter.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "se3ppf/liegroup.hpp"

namespace se3ppf {

struct TruthState {
  HomogeneousTransform pose = HomogeneousTransform::identity();
  Vector3 omega = Vector3::Zero();     ///< body angular velocity, rad/s
  Vector3 velocity = Vector3::Zero();  ///< body translational velocity, m/s
  double t = 0.0;
};

/// Inertial direction observed in the body frame (e.g. gravity, magnetic field).
struct ReferenceVector {
  Vector3 inertial = Vector3::UnitZ();
  double weight = 1.0;
  Vector3 bias = Vector3::Zero();

  bool operator==(const ReferenceVector&) const = default;
};

/// Feature point with known inertial position (m).
struct Landmark {
  Vector3 inertial = Vector3::Zero();
  double weight = 1.0;
  Vector3 bias = Vector3::Zero();

  bool operator==(const Landmark&) const = default;
};

struct NoiseLevels {
  double omega = 0.0;     ///< rad/s
  double velocity = 0.0;  ///< m/s
  double vector = 0.0;
  double landmark = 0.0;  ///< m

  bool operator==(const NoiseLevels&) const = default;
};

struct SensorSuite {
  std::vector<ReferenceVector> reference_vectors;
  std::vector<Landmark> landmarks;
  Vector3 gyro_bias = Vector3::Zero();
  Vector3 velocity_bias = Vector3::Zero();
  NoiseLevels noise;
  /// Weight of the synthetic third direction added when only two reference
  /// vectors are supplied.
  double augmented_weight = 1.0;

  /// Checks observability requirements (two non-collinear directions, at
  /// least one landmark, positive weights, reference weights summing to 3).
  void validate() const;

  bool operator==(const SensorSuite&) const = default;
};

struct MeasurementFrame {
  double t = 0.0;
  Vector3 omega_m = Vector3::Zero();
  Vector3 v_m = Vector3::Zero();
  std::vector<Vector3> body_ref_vectors;  ///< not normalized
  std::vector<Vector3> body_landmarks;
};

/// Normalized inertial/body direction pairs with their confidence weights.
struct NormalizedPairs {
  std::vector<Vector3> inertial;
  std::vector<Vector3> body;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

struct LandmarkPairs {
  std::vector<Vector3> inertial;
  std::vector<Vector3> body;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

struct AggregateMatrices {
  Matrix3 M_R = Matrix3::Zero();
  Matrix3 M_L = Matrix3::Zero();
  Matrix3 M_T = Matrix3::Zero();
  Vector3 m_v = Vector3::Zero();
  double m_c = 0.0;
  /// Direction-only part of K_T; R_hat * K_R equals R~ M_R on clean data.
  Matrix3 K_R = Matrix3::Zero();
  Matrix3 K_T = Matrix3::Zero();
  Vector3 k_v = Vector3::Zero();
  /// Smallest eigenvalue of Tr(M_R) I - M_R.
  double lambda_min = 0.0;
};

/// Gaussian noise source owned by one run. Draw order is fixed, so a given
/// seed always produces the same measurement stream.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : engine_(seed) {}

  Vector3 draw(double stddev);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// One draw of every measurement noise term, in the fixed order gyro,
/// velocity, reference vectors, landmarks.
struct MeasurementNoise {
  Vector3 omega = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
  std::vector<Vector3> vectors;
  std::vector<Vector3> landmarks;
};

MeasurementNoise draw_noise(const SensorSuite& suite, NoiseStream& stream);

/// Derives an independent seed for run `index` from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Advances the true pose over dt with constant body velocities:
/// rotation by the exact exponential, position by RK4 on P' = R V.
TruthState propagate_truth(const TruthState& state, const Vector3& omega, const Vector3& v,
                           double dt);

/// Synthesizes one measurement frame from the truth. Uses the velocities stored
/// in `state`. When `noise` is null every noise term is zero.
MeasurementFrame measure(const TruthState& state, const SensorSuite& suite, NoiseStream* noise);

/// Same with a pre-drawn noise sample (null means noise free), so that one
/// draw can be applied to several truth states.
MeasurementFrame measure_with(const TruthState& state, const SensorSuite& suite,
                              const MeasurementNoise* noise);

NormalizedPairs normalize_pairs(const MeasurementFrame& frame, const SensorSuite& suite);

LandmarkPairs landmark_pairs(const MeasurementFrame& frame, const SensorSuite& suite);

/// Weighted landmark centers (G_c^I, G_c^B).
std::pair<Vector3, Vector3> weighted_centers(const LandmarkPairs& landmarks);

AggregateMatrices build_aggregates(const NormalizedPairs& pairs, const LandmarkPairs& landmarks);

}  // namespace se3ppf
