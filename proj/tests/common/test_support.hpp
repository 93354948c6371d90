#pragma once

// Random generators and independent oracles shared by the unit tests and the
// acceptance binary. Nothing here calls into the filters; the oracles are
// written from the definitions so they can check the library.

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "se3ppf/liegroup.hpp"

namespace se3ppf::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  Vector3 vec3() { return {normal(), normal(), normal()}; }
  Vector3 unit3() { return vec3().normalized(); }

  Matrix3 mat3() {
    Matrix3 m;
    for (int i = 0; i < 9; ++i) m(i) = normal();
    return m;
  }

  /// Uniformly distributed rotation (normalized Gaussian quaternion).
  Matrix3 rotation() {
    Eigen::Quaterniond q(normal(), normal(), normal(), normal());
    q.normalize();
    return q.toRotationMatrix();
  }

  UnitQuaternion quaternion() {
    Vector4 c(normal(), normal(), normal(), normal());
    c.normalize();
    return UnitQuaternion::from_coeffs(c);
  }

  /// Symmetric positive definite matrix with trace `trace`.
  Matrix3 spd(double trace) {
    Vector3 l(uniform(0.01, 1.0), uniform(0.01, 1.0), uniform(0.01, 1.0));
    l *= trace / l.sum();
    const Matrix3 Q = rotation();
    return Q * l.asDiagonal() * Q.transpose();
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Cross product matrix written out from the component definition.
inline Matrix3 skew_oracle(const Vector3& a) {
  Matrix3 m = Matrix3::Zero();
  m(0, 1) = -a.z();
  m(0, 2) = a.y();
  m(1, 0) = a.z();
  m(1, 2) = -a.x();
  m(2, 0) = -a.y();
  m(2, 1) = a.x();
  return m;
}

/// Rotation about a principal axis (0 = x, 1 = y, 2 = z).
inline Matrix3 axis_rotation(int axis, double angle) {
  return Eigen::AngleAxisd(angle, Vector3::Unit(axis)).toRotationMatrix();
}

/// Largest residual of the cross-product / trace identities over `n` random
/// inputs. Residuals are relative to the magnitude of the terms involved.
struct IdentityResiduals {
  double cross_outer = 0.0;    // [a x b]_x = b a^T - a b^T
  double conjugation = 0.0;    // [R a]_x = R [a]_x R^T
  double square = 0.0;         // [a]_x^2 = -a^T a I + a a^T
  double trace_symmetric = 0.0;  // Tr{B [a]_x} = 0 for symmetric B
  double trace_general = 0.0;  // Tr{A [a]_x} = -2 vex(Pa(A))^T a
  double vex_pa_distance = 0.0;  // |vex(Pa(R))|^2 = 4 (1 - |R|_I) |R|_I
  double max() const {
    return std::max({cross_outer, conjugation, square, trace_symmetric, trace_general,
                     vex_pa_distance});
  }
};

inline IdentityResiduals identity_residuals(Rng& rng, int n) {
  IdentityResiduals r;
  auto rel = [](double err, double scale) { return err / std::max(1.0, scale); };
  for (int k = 0; k < n; ++k) {
    const Vector3 a = rng.vec3();
    const Vector3 b = rng.vec3();
    const Matrix3 R = rng.rotation();
    const Matrix3 A = rng.mat3();
    const Matrix3 S = A + A.transpose();

    const Matrix3 lhs1 = hat(a.cross(b));
    const Matrix3 rhs1 = b * a.transpose() - a * b.transpose();
    r.cross_outer = std::max(r.cross_outer, rel((lhs1 - rhs1).cwiseAbs().maxCoeff(),
                                                a.norm() * b.norm()));

    const Matrix3 lhs2 = hat(R * a);
    const Matrix3 rhs2 = R * hat(a) * R.transpose();
    r.conjugation = std::max(r.conjugation, rel((lhs2 - rhs2).cwiseAbs().maxCoeff(), a.norm()));

    const Matrix3 lhs3 = hat(a) * hat(a);
    const Matrix3 rhs3 = -a.dot(a) * Matrix3::Identity() + a * a.transpose();
    r.square = std::max(r.square, rel((lhs3 - rhs3).cwiseAbs().maxCoeff(), a.squaredNorm()));

    r.trace_symmetric = std::max(r.trace_symmetric,
                                 rel(std::abs((S * hat(a)).trace()), S.norm() * a.norm()));

    const double lhs5 = (A * hat(a)).trace();
    const double rhs5 = -2.0 * vex(pa(A)).dot(a);
    r.trace_general =
        std::max(r.trace_general, rel(std::abs(lhs5 - rhs5), A.norm() * a.norm()));

    const double d = normalized_distance(R);
    r.vex_pa_distance = std::max(
        r.vex_pa_distance, std::abs(vex_pa(R).squaredNorm() - 4.0 * (1.0 - d) * d));
  }
  return r;
}

/// Smallest slack of (2/lambda) |vex(Pa(R M))|^2 / (1 + Tr{R}) - ||R M||_I over
/// `n` random (R, M) pairs with Tr{M} = 3, skipping 1 + Tr{R} within 1e-6 of 0.
/// lambda is the smallest eigenvalue of Tr{M} I - M.
inline double weighted_distance_bound_slack(Rng& rng, int n) {
  double worst = INFINITY;
  for (int k = 0; k < n; ++k) {
    const Matrix3 R = rng.rotation();
    const Matrix3 M = rng.spd(3.0);
    const double upsilon = (R * M * M.inverse()).trace();
    if (std::abs(1.0 + upsilon) < 1e-6) continue;
    const Eigen::SelfAdjointEigenSolver<Matrix3> eig(M.trace() * Matrix3::Identity() - M);
    const double lambda = eig.eigenvalues().minCoeff();
    const double lhs = 2.0 / lambda * vex_pa(Matrix3(R * M)).squaredNorm() / (1.0 + upsilon);
    const double rhs = 0.25 * ((Matrix3::Identity() - R) * M).trace();
    worst = std::min(worst, lhs - rhs);
  }
  return worst;
}

/// Weighted Wahba cost sum k |b - R^T r|^2.
template <typename Pairs>
double wahba_cost(const Pairs& p, const Matrix3& R) {
  double c = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c += p.weights[i] * (p.body[i] - R.transpose() * p.inertial[i]).squaredNorm();
  }
  return c;
}

/// Brute-force minimum of the Wahba cost over a ZYX Euler grid with the given
/// step (degrees). Uses the unit-vector form sum k (2 - 2 r^T R b).
template <typename Pairs>
double wahba_grid_minimum(const Pairs& p, double step_deg) {
  Matrix3 Bt = Matrix3::Zero();  // sum k b r^T
  double k_sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    Bt += p.weights[i] * p.body[i] * p.inertial[i].transpose();
    k_sum += p.weights[i];
  }
  const double deg = std::acos(-1.0) / 180.0;
  const int nz = static_cast<int>(std::lround(360.0 / step_deg));
  const int ny = static_cast<int>(std::lround(180.0 / step_deg));
  std::vector<Matrix3> rx(static_cast<std::size_t>(nz));
  for (int i = 0; i < nz; ++i) rx[static_cast<std::size_t>(i)] = axis_rotation(0, i * step_deg * deg);
  double best = -INFINITY;
  for (int iz = 0; iz < nz; ++iz) {
    const Matrix3 Rz = axis_rotation(2, -180.0 * deg + iz * step_deg * deg);
    for (int iy = 0; iy <= ny; ++iy) {
      const Matrix3 G = Bt * Rz * axis_rotation(1, -90.0 * deg + iy * step_deg * deg);
      for (const Matrix3& Rx : rx) {
        // Tr{R B^T} with R = Rz Ry Rx equals Tr{Rx (B^T Rz Ry)}
        best = std::max(best, (Rx * G).trace());
      }
    }
  }
  return 2.0 * k_sum - 2.0 * best;
}

}  // namespace se3ppf::testing
