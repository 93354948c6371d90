#include "se3ppf/sensors.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "se3ppf/errors.hpp"

namespace se3ppf {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr double kCollinearity = 1e-6;
constexpr double kRankTolerance = 1e-9;
constexpr double kWeightSumTolerance = 1e-9;

Vector3 unit(const Vector3& v, const char* what) {
  const double n = v.norm();
  if (!(n >= kDegenerateNorm)) {
    throw DegenerateVector(std::string(what) + " has (near) zero norm");
  }
  return v / n;
}

}  // namespace

void SensorSuite::validate() const {
  if (reference_vectors.size() < 2) {
    throw InvalidArgument("at least two reference vectors are required");
  }
  if (landmarks.empty()) {
    throw NoLandmarks("at least one landmark is required");
  }
  double sum = 0.0;
  for (const auto& r : reference_vectors) {
    if (!(r.weight > 0.0)) throw InvalidArgument("reference vector weights must be positive");
    sum += r.weight;
  }
  if (reference_vectors.size() == 2) {
    if (!(augmented_weight > 0.0)) throw InvalidArgument("augmented weight must be positive");
    sum += augmented_weight;
  }
  if (std::abs(sum - 3.0) > kWeightSumTolerance) {
    throw InvalidArgument("reference vector weights must sum to 3");
  }
  for (const auto& l : landmarks) {
    if (!(l.weight > 0.0)) throw InvalidArgument("landmark weights must be positive");
  }
  const Vector3 a = unit(reference_vectors[0].inertial, "reference vector 1");
  const Vector3 b = unit(reference_vectors[1].inertial, "reference vector 2");
  if (a.cross(b).norm() < kCollinearity) {
    throw NonCollinearityFailure("first two reference vectors are collinear");
  }
  if (!(noise.omega >= 0.0 && noise.velocity >= 0.0 && noise.vector >= 0.0 &&
        noise.landmark >= 0.0)) {
    throw InvalidArgument("noise standard deviations must be non-negative");
  }
}

Vector3 NoiseStream::draw(double stddev) {
  Vector3 out;
  for (int i = 0; i < 3; ++i) out(i) = stddev * normal_(engine_);
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over (master, index)
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TruthState propagate_truth(const TruthState& state, const Vector3& omega, const Vector3& v,
                           double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("propagate_truth: dt must be positive");
  const Matrix3& R0 = state.pose.rotation;
  const Matrix3 R_half = R0 * exp_so3(omega, 0.5 * dt);
  const Matrix3 R_full = R0 * exp_so3(omega, dt);

  TruthState next = state;
  next.pose.position += dt / 6.0 * (R0 * v + 4.0 * (R_half * v) + R_full * v);
  next.pose.rotation = project_to_so3(R_full);
  next.omega = omega;
  next.velocity = v;
  next.t = state.t + dt;
  return next;
}

MeasurementNoise draw_noise(const SensorSuite& suite, NoiseStream& stream) {
  MeasurementNoise n;
  n.omega = stream.draw(suite.noise.omega);
  n.velocity = stream.draw(suite.noise.velocity);
  for (std::size_t i = 0; i < suite.reference_vectors.size(); ++i) {
    n.vectors.push_back(stream.draw(suite.noise.vector));
  }
  for (std::size_t j = 0; j < suite.landmarks.size(); ++j) {
    n.landmarks.push_back(stream.draw(suite.noise.landmark));
  }
  return n;
}

MeasurementFrame measure(const TruthState& state, const SensorSuite& suite, NoiseStream* noise) {
  if (noise == nullptr) return measure_with(state, suite, nullptr);
  const MeasurementNoise n = draw_noise(suite, *noise);
  return measure_with(state, suite, &n);
}

MeasurementFrame measure_with(const TruthState& state, const SensorSuite& suite,
                              const MeasurementNoise* noise) {
  if (noise != nullptr && (noise->vectors.size() != suite.reference_vectors.size() ||
                           noise->landmarks.size() != suite.landmarks.size())) {
    throw InvalidArgument("noise sample does not match the sensor suite");
  }
  const Matrix3& R = state.pose.rotation;
  const Vector3& P = state.pose.position;

  MeasurementFrame f;
  f.t = state.t;
  f.omega_m = state.omega + suite.gyro_bias;
  f.v_m = state.velocity + suite.velocity_bias;
  if (noise != nullptr) {
    f.omega_m += noise->omega;
    f.v_m += noise->velocity;
  }
  f.body_ref_vectors.reserve(suite.reference_vectors.size());
  for (std::size_t i = 0; i < suite.reference_vectors.size(); ++i) {
    const auto& r = suite.reference_vectors[i];
    Vector3 b = R.transpose() * r.inertial + r.bias;
    if (noise != nullptr) b += noise->vectors[i];
    f.body_ref_vectors.push_back(b);
  }
  f.body_landmarks.reserve(suite.landmarks.size());
  for (std::size_t j = 0; j < suite.landmarks.size(); ++j) {
    const auto& l = suite.landmarks[j];
    Vector3 b = R.transpose() * (l.inertial - P) + l.bias;
    if (noise != nullptr) b += noise->landmarks[j];
    f.body_landmarks.push_back(b);
  }
  return f;
}

NormalizedPairs normalize_pairs(const MeasurementFrame& frame, const SensorSuite& suite) {
  const std::size_t n = suite.reference_vectors.size();
  if (frame.body_ref_vectors.size() != n) {
    throw InvalidArgument("measurement frame does not match the sensor suite");
  }
  if (n < 2) throw InvalidArgument("at least two reference vectors are required");

  NormalizedPairs out;
  out.inertial.reserve(n + 1);
  out.body.reserve(n + 1);
  out.weights.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    out.inertial.push_back(unit(suite.reference_vectors[i].inertial, "inertial reference vector"));
    out.body.push_back(unit(frame.body_ref_vectors[i], "body reference vector"));
    out.weights.push_back(suite.reference_vectors[i].weight);
  }

  const Vector3 cross_i = out.inertial[0].cross(out.inertial[1]);
  const Vector3 cross_b = out.body[0].cross(out.body[1]);
  if (cross_i.norm() < kCollinearity || cross_b.norm() < kCollinearity) {
    throw NonCollinearityFailure("first two reference directions are collinear");
  }
  if (n == 2) {
    out.inertial.push_back(cross_i.normalized());
    out.body.push_back(cross_b.normalized());
    out.weights.push_back(suite.augmented_weight);
  }
  return out;
}

LandmarkPairs landmark_pairs(const MeasurementFrame& frame, const SensorSuite& suite) {
  if (frame.body_landmarks.size() != suite.landmarks.size()) {
    throw InvalidArgument("measurement frame does not match the sensor suite");
  }
  LandmarkPairs out;
  for (std::size_t j = 0; j < suite.landmarks.size(); ++j) {
    out.inertial.push_back(suite.landmarks[j].inertial);
    out.body.push_back(frame.body_landmarks[j]);
    out.weights.push_back(suite.landmarks[j].weight);
  }
  return out;
}

std::pair<Vector3, Vector3> weighted_centers(const LandmarkPairs& landmarks) {
  if (landmarks.size() == 0) throw NoLandmarks("weighted_centers: no landmarks");
  Vector3 gi = Vector3::Zero();
  Vector3 gb = Vector3::Zero();
  double m_c = 0.0;
  for (std::size_t j = 0; j < landmarks.size(); ++j) {
    gi += landmarks.weights[j] * landmarks.inertial[j];
    gb += landmarks.weights[j] * landmarks.body[j];
    m_c += landmarks.weights[j];
  }
  if (!(m_c > 0.0)) throw NoLandmarks("weighted_centers: landmark weights sum to zero");
  return {gi / m_c, gb / m_c};
}

AggregateMatrices build_aggregates(const NormalizedPairs& pairs, const LandmarkPairs& landmarks) {
  AggregateMatrices a;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double k = pairs.weights[i];
    a.M_R += k * pairs.inertial[i] * pairs.inertial[i].transpose();
    a.K_R += k * pairs.body[i] * pairs.inertial[i].transpose();
  }
  a.K_T = a.K_R;
  for (std::size_t j = 0; j < landmarks.size(); ++j) {
    const double k = landmarks.weights[j];
    a.M_L += k * landmarks.inertial[j] * landmarks.inertial[j].transpose();
    a.m_v += k * landmarks.inertial[j];
    a.m_c += k;
    a.K_T += k * landmarks.body[j] * landmarks.inertial[j].transpose();
    a.k_v += k * landmarks.body[j];
  }
  a.M_T = a.M_R + a.M_L;

  Eigen::SelfAdjointEigenSolver<Matrix3> eig_r(a.M_R, Eigen::EigenvaluesOnly);
  if (eig_r.eigenvalues().minCoeff() < kRankTolerance) {
    throw RankDeficient("M_R is rank deficient");
  }
  const Matrix3 M_bar = a.M_R.trace() * Matrix3::Identity() - a.M_R;
  Eigen::SelfAdjointEigenSolver<Matrix3> eig_bar(M_bar, Eigen::EigenvaluesOnly);
  a.lambda_min = eig_bar.eigenvalues().minCoeff();
  return a;
}

}  // namespace se3ppf
