#pragma once

// Static pose reconstruction from one measurement frame.

#include "se3ppf/liegroup.hpp"
#include "se3ppf/sensors.hpp"

namespace se3ppf {

struct ReconstructedPose {
  Matrix3 R_y = Matrix3::Identity();
  Vector3 P_y = Vector3::Zero();
};

/// Weighted Wahba solution: the rotation R minimizing
/// sum k_i |b_i - R^T r_i|^2 over the supplied pairs, via SVD of
/// B = sum k_i r_i b_i^T. Throws RankDeficient when B has rank below 2.
Matrix3 solve_wahba(const NormalizedPairs& pairs);

/// P_y = G_c^I - R_y G_c^B.
Vector3 reconstruct_position(const Matrix3& R_y, const LandmarkPairs& landmarks);

ReconstructedPose reconstruct(const NormalizedPairs& pairs, const LandmarkPairs& landmarks);

}  // namespace se3ppf
