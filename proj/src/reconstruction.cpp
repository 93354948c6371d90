#include "se3ppf/reconstruction.hpp"

#include <Eigen/SVD>

#include "se3ppf/errors.hpp"

namespace se3ppf {

Matrix3 solve_wahba(const NormalizedPairs& pairs) {
  Matrix3 B = Matrix3::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    B += pairs.weights[i] * pairs.inertial[i] * pairs.body[i].transpose();
  }
  Eigen::JacobiSVD<Matrix3> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // singular values are sorted in decreasing order
  if (svd.singularValues()(1) < 1e-9) {
    throw RankDeficient("solve_wahba: attitude unobservable from the given pairs");
  }
  const Matrix3& U = svd.matrixU();
  const Matrix3& V = svd.matrixV();
  const Vector3 d(1.0, 1.0, U.determinant() * V.determinant());
  return U * d.asDiagonal() * V.transpose();
}

Vector3 reconstruct_position(const Matrix3& R_y, const LandmarkPairs& landmarks) {
  const auto [gi, gb] = weighted_centers(landmarks);
  return gi - R_y * gb;
}

ReconstructedPose reconstruct(const NormalizedPairs& pairs, const LandmarkPairs& landmarks) {
  ReconstructedPose out;
  out.R_y = solve_wahba(pairs);
  out.P_y = reconstruct_position(out.R_y, landmarks);
  return out;
}

}  // namespace se3ppf
