#pragma once

// SO(3) / SE(3) / unit-quaternion algebra shared by every other module.
//
// Everything here is a free function over small fixed-size Eigen types and is
// templated on the scalar type. Rotations are plain Matrix3 values; validity
// (R^T R = I, det R = +1) is checked at the boundaries that accept external
// input, and restored with project_to_so3() after integration.

#include <cmath>

#include <Eigen/Dense>

#include "se3ppf/errors.hpp"

namespace se3ppf {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Mat4 = Eigen::Matrix<Scalar, 4, 4>;

using Vector3 = Vec3<double>;
using Vector4 = Vec4<double>;
using Vector6 = Vec6<double>;
using Matrix3 = Mat3<double>;
using Matrix4 = Mat4<double>;

inline constexpr double kOrthoTolerance = 1e-9;
inline constexpr double kSkewTolerance = 1e-9;
inline constexpr double kQuatNormTolerance = 1e-6;

// ---------------------------------------------------------------------------
// so(3) maps

/// [a]_x such that hat(a) * b = a x b.
template <typename Derived>
Mat3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& a) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  Mat3<S> m;
  m << S(0), -a(2), a(1),
       a(2), S(0), -a(0),
       -a(1), a(0), S(0);
  return m;
}

/// Inverse of hat(). Rejects inputs whose symmetric part exceeds `tol`.
template <typename Derived>
Vec3<typename Derived::Scalar> vex(const Eigen::MatrixBase<Derived>& A,
                                   typename Derived::Scalar tol = kSkewTolerance) {
  EIGEN_STATIC_ASSERT_MATRIX_SPECIFIC_SIZE(Derived, 3, 3);
  using S = typename Derived::Scalar;
  const S sym = (A + A.transpose()).cwiseAbs().maxCoeff();
  if (sym > tol) {
    throw InvalidArgument("vex: matrix is not antisymmetric");
  }
  return Vec3<S>(A(2, 1), A(0, 2), A(1, 0));
}

/// Anti-symmetric projection 1/2 (M - M^T).
template <typename Derived>
Mat3<typename Derived::Scalar> pa(const Eigen::MatrixBase<Derived>& M) {
  EIGEN_STATIC_ASSERT_MATRIX_SPECIFIC_SIZE(Derived, 3, 3);
  using S = typename Derived::Scalar;
  return S(0.5) * (M - M.transpose());
}

/// vex(pa(M)) without the antisymmetry check.
template <typename Derived>
Vec3<typename Derived::Scalar> vex_pa(const Eigen::MatrixBase<Derived>& M) {
  EIGEN_STATIC_ASSERT_MATRIX_SPECIFIC_SIZE(Derived, 3, 3);
  using S = typename Derived::Scalar;
  return S(0.5) * Vec3<S>(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1));
}

/// se(3) wedge of a group velocity [Omega; V].
template <typename Derived>
Mat4<typename Derived::Scalar> wedge(const Eigen::MatrixBase<Derived>& y) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 6);
  using S = typename Derived::Scalar;
  Mat4<S> m = Mat4<S>::Zero();
  m.template topLeftCorner<3, 3>() = hat(y.template head<3>());
  m.template topRightCorner<3, 1>() = y.template tail<3>();
  return m;
}

// ---------------------------------------------------------------------------
// SO(3)

/// ||R||_I = 1/4 Tr{I - R}, in [0, 1] for proper rotations.
template <typename Derived>
typename Derived::Scalar normalized_distance(const Eigen::MatrixBase<Derived>& R) {
  using S = typename Derived::Scalar;
  return S(0.25) * (S(3) - R.trace());
}

template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& R,
                 typename Derived::Scalar tol = kOrthoTolerance) {
  using S = typename Derived::Scalar;
  const Mat3<S> gram = R.transpose() * R;
  return (gram - Mat3<S>::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - S(1)) <= tol;
}

/// Nearest proper rotation in the Frobenius sense (polar factor via SVD).
template <typename Derived>
Mat3<typename Derived::Scalar> project_to_so3(const Eigen::MatrixBase<Derived>& M) {
  using S = typename Derived::Scalar;
  Eigen::JacobiSVD<Mat3<S>> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3<S>& U = svd.matrixU();
  const Mat3<S>& V = svd.matrixV();
  Mat3<S> D = Mat3<S>::Identity();
  D(2, 2) = (U * V.transpose()).determinant() < S(0) ? S(-1) : S(1);
  return U * D * V.transpose();
}

/// Rotation by `angle` (rad) about `axis`; the axis is normalized here.
template <typename Scalar, typename Derived>
Mat3<Scalar> from_angle_axis(Scalar angle, const Eigen::MatrixBase<Derived>& axis) {
  const Scalar n = axis.norm();
  if (!(n > Scalar(0))) {
    throw InvalidArgument("from_angle_axis: zero rotation axis");
  }
  const Mat3<Scalar> K = hat(Vec3<Scalar>(axis / n));
  return Mat3<Scalar>::Identity() + std::sin(angle) * K +
         (Scalar(1) - std::cos(angle)) * K * K;
}

/// Rodriguez (Gibbs) vector to rotation.
template <typename Derived>
Mat3<typename Derived::Scalar> from_rodriguez(const Eigen::MatrixBase<Derived>& rho) {
  using S = typename Derived::Scalar;
  const S n2 = rho.squaredNorm();
  return ((S(1) - n2) * Mat3<S>::Identity() + S(2) * rho * rho.transpose() +
          S(2) * hat(rho)) /
         (S(1) + n2);
}

/// exp([omega * dt]_x). Second-order Taylor below |omega| dt = 1e-8.
template <typename Derived>
Mat3<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& omega,
                                       typename Derived::Scalar dt) {
  using S = typename Derived::Scalar;
  const Vec3<S> theta = omega * dt;
  const S angle = theta.norm();
  const Mat3<S> K = hat(theta);
  if (angle < S(1e-8)) {
    return Mat3<S>::Identity() + K + S(0.5) * K * K;
  }
  return Mat3<S>::Identity() + (std::sin(angle) / angle) * K +
         ((S(1) - std::cos(angle)) / (angle * angle)) * K * K;
}

/// Inverse right Jacobian of SO(3): for R = R0 exp([theta]_x) and
/// dR/dt = R [w]_x, d(theta)/dt = right_jacobian_inverse(theta) * w.
template <typename Derived>
Mat3<typename Derived::Scalar> right_jacobian_inverse(const Eigen::MatrixBase<Derived>& theta) {
  using S = typename Derived::Scalar;
  const S a = theta.norm();
  const Mat3<S> K = hat(theta);
  S c;
  if (a < S(1e-4)) {
    c = S(1) / S(12) + a * a / S(720);
  } else {
    c = S(1) / (a * a) - (S(1) + std::cos(a)) / (S(2) * a * std::sin(a));
  }
  return Mat3<S>::Identity() + S(0.5) * K + c * K * K;
}

// ---------------------------------------------------------------------------
// SE(3)

template <typename Scalar>
struct Pose {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> position = Vec3<Scalar>::Zero();

  static Pose identity() { return Pose{}; }

  /// 4x4 homogeneous matrix [R P; 0 1].
  Mat4<Scalar> matrix() const {
    Mat4<Scalar> T = Mat4<Scalar>::Identity();
    T.template topLeftCorner<3, 3>() = rotation;
    T.template topRightCorner<3, 1>() = position;
    return T;
  }

  bool operator==(const Pose&) const = default;
};

using HomogeneousTransform = Pose<double>;

template <typename Scalar>
Pose<Scalar> se3_compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return {a.rotation * b.rotation, a.rotation * b.position + a.position};
}

template <typename Scalar>
Pose<Scalar> se3_inverse(const Pose<Scalar>& T) {
  const Mat3<Scalar> Rt = T.rotation.transpose();
  return {Rt, -Rt * T.position};
}

/// T_hat * T^-1, i.e. R~ = R_hat R^T and P~ = P_hat - R~ P.
template <typename Scalar>
Pose<Scalar> se3_error(const Pose<Scalar>& estimate, const Pose<Scalar>& truth) {
  return se3_compose(estimate, se3_inverse(truth));
}

// ---------------------------------------------------------------------------
// Unit quaternions, Q = [q0, q] with Hamilton product.

template <typename Scalar>
struct Quaternion {
  Scalar w = Scalar(1);
  Vec3<Scalar> v = Vec3<Scalar>::Zero();

  static Quaternion identity() { return Quaternion{}; }

  Vec4<Scalar> coeffs() const { return Vec4<Scalar>(w, v(0), v(1), v(2)); }
  static Quaternion from_coeffs(const Vec4<Scalar>& c) {
    return Quaternion{c(0), c.template tail<3>()};
  }
  Scalar norm() const { return std::sqrt(w * w + v.squaredNorm()); }
};

using UnitQuaternion = Quaternion<double>;

template <typename Scalar>
Quaternion<Scalar> quat_multiply(const Quaternion<Scalar>& a, const Quaternion<Scalar>& b) {
  return {a.w * b.w - a.v.dot(b.v), a.w * b.v + b.w * a.v + a.v.cross(b.v)};
}

template <typename Scalar>
Quaternion<Scalar> quat_inverse(const Quaternion<Scalar>& q) {
  return {q.w, -q.v};
}

/// Renormalizes and applies the q0 >= 0 sign convention.
template <typename Scalar>
Quaternion<Scalar> quat_normalize(const Quaternion<Scalar>& q) {
  const Scalar n = q.norm();
  if (!(n > Scalar(0))) {
    throw InvalidArgument("quat_normalize: zero quaternion");
  }
  Quaternion<Scalar> out{q.w / n, q.v / n};
  if (out.w < Scalar(0)) {
    out.w = -out.w;
    out.v = -out.v;
  }
  return out;
}

template <typename Scalar>
void check_unit(const Quaternion<Scalar>& q) {
  if (std::abs(q.norm() - Scalar(1)) > Scalar(kQuatNormTolerance)) {
    throw InvalidArgument("quaternion is not unit norm");
  }
}

template <typename Scalar>
Mat3<Scalar> quat_to_rotation(const Quaternion<Scalar>& q) {
  check_unit(q);
  return (q.w * q.w - q.v.squaredNorm()) * Mat3<Scalar>::Identity() +
         Scalar(2) * q.v * q.v.transpose() + Scalar(2) * q.w * hat(q.v);
}

/// Vector part of Q (.) [0, x] (.) Q^-1, equal to quat_to_rotation(Q) x.
template <typename Scalar, typename Derived>
Vec3<Scalar> quat_sandwich(const Quaternion<Scalar>& q, const Eigen::MatrixBase<Derived>& x) {
  check_unit(q);
  const Quaternion<Scalar> px{Scalar(0), Vec3<Scalar>(x)};
  return quat_multiply(quat_multiply(q, px), quat_inverse(q)).v;
}

/// Unit quaternion of the rotation vector theta; maps to exp_so3(theta, 1).
template <typename Derived>
Quaternion<typename Derived::Scalar> quat_exp(const Eigen::MatrixBase<Derived>& theta) {
  using S = typename Derived::Scalar;
  const S a = theta.norm();
  // sin(a/2)/a, Taylor expanded near zero
  const S k = a < S(1e-8) ? S(0.5) - a * a / S(48) : std::sin(S(0.5) * a) / a;
  return {std::cos(S(0.5) * a), k * theta};
}

/// Shepperd's method; result follows the q0 >= 0 convention.
template <typename Derived>
Quaternion<typename Derived::Scalar> rotation_to_quat(const Eigen::MatrixBase<Derived>& R) {
  using S = typename Derived::Scalar;
  const S tr = R.trace();
  Quaternion<S> q;
  if (tr >= R(0, 0) && tr >= R(1, 1) && tr >= R(2, 2)) {
    const S s = std::sqrt(S(1) + tr) * S(2);
    q.w = S(0.25) * s;
    q.v = Vec3<S>(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) >= R(1, 1) && R(0, 0) >= R(2, 2)) {
    const S s = std::sqrt(S(1) + R(0, 0) - R(1, 1) - R(2, 2)) * S(2);
    q.w = (R(2, 1) - R(1, 2)) / s;
    q.v = Vec3<S>(S(0.25) * s, (R(0, 1) + R(1, 0)) / s, (R(0, 2) + R(2, 0)) / s);
  } else if (R(1, 1) >= R(2, 2)) {
    const S s = std::sqrt(S(1) + R(1, 1) - R(0, 0) - R(2, 2)) * S(2);
    q.w = (R(0, 2) - R(2, 0)) / s;
    q.v = Vec3<S>((R(0, 1) + R(1, 0)) / s, S(0.25) * s, (R(1, 2) + R(2, 1)) / s);
  } else {
    const S s = std::sqrt(S(1) + R(2, 2) - R(0, 0) - R(1, 1)) * S(2);
    q.w = (R(1, 0) - R(0, 1)) / s;
    q.v = Vec3<S>((R(0, 2) + R(2, 0)) / s, (R(1, 2) + R(2, 1)) / s, S(0.25) * s);
  }
  return quat_normalize(q);
}

}  // namespace se3ppf
