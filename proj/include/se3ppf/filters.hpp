#pragma once

// Semi-direct and direct pose filters with prescribed performance, in
// rotation-matrix and unit-quaternion form.

#include <optional>

#include "se3ppf/liegroup.hpp"
#include "se3ppf/ppf.hpp"
#include "se3ppf/reconstruction.hpp"
#include "se3ppf/sensors.hpp"

namespace se3ppf {

enum class FilterMode { semidirect, direct };
enum class FilterForm { matrix, quaternion };

/// How correction terms are treated inside one integration step.
enum class CorrectionHold {
  per_stage,        ///< recomputed from the stage state at every RK stage
  zero_order_hold,  ///< evaluated once at the start of the step
};

/// Guard on 1 - ||R~||_I (semi-direct) and 1 + Upsilon (direct).
inline constexpr double kSingularityGuard = 1e-6;
/// Largest accepted condition number of the direct filter's inner matrix.
inline constexpr double kMaxInnerCondition = 1e12;

struct FilterGains {
  double gamma = 1.0;
  double k_w = 5.0;

  void validate() const;
  bool operator==(const FilterGains&) const = default;
};

struct FilterState {
  HomogeneousTransform pose = HomogeneousTransform::identity();
  /// Same attitude as pose.rotation; advanced directly by the quaternion form.
  UnitQuaternion attitude = UnitQuaternion::identity();
  Vector3 b_hat_omega = Vector3::Zero();
  Vector3 b_hat_v = Vector3::Zero();
  double t = 0.0;

  static FilterState from_pose(const HomogeneousTransform& pose,
                               const Vector3& b_hat_omega = Vector3::Zero(),
                               const Vector3& b_hat_v = Vector3::Zero(), double t = 0.0);
};

struct FilterOptions {
  FilterMode mode = FilterMode::semidirect;
  FilterForm form = FilterForm::matrix;
  CorrectionHold hold = CorrectionHold::per_stage;
  bool clamp = false;
};

/// Everything a filter needs from one measurement frame.
struct MeasurementContext {
  Vector3 omega_m = Vector3::Zero();
  Vector3 v_m = Vector3::Zero();
  NormalizedPairs pairs;
  LandmarkPairs landmarks;
  ReconstructedPose recon;  ///< semi-direct input
  AggregateMatrices agg;    ///< direct input
};

MeasurementContext prepare_measurements(const MeasurementFrame& frame, const SensorSuite& suite,
                                        FilterMode mode);

struct SemidirectErrors {
  Matrix3 R_tilde = Matrix3::Identity();
  Vector3 P_tilde = Vector3::Zero();
  Vector4 e = Vector4::Zero();
};

/// R~ = R_hat R_y^T, P~ = P_hat - R~ P_y, e = [||R~||_I, P~].
SemidirectErrors semidirect_errors(const HomogeneousTransform& estimate,
                                   const ReconstructedPose& recon);

struct Correction {
  Vector3 W_omega = Vector3::Zero();
  Vector3 W_v = Vector3::Zero();
};

struct BiasRates {
  Vector3 b_omega_dot = Vector3::Zero();
  Vector3 b_v_dot = Vector3::Zero();
};

Correction semidirect_correction(const TransformedError& E, const Matrix3& R_tilde,
                                 const Vector3& P_tilde, const HomogeneousTransform& estimate,
                                 double k_w);

BiasRates semidirect_bias_dot(const TransformedError& E, const Matrix3& R_tilde,
                              const Vector3& P_tilde, const HomogeneousTransform& estimate,
                              const FilterGains& gains);

/// Attitude and position error terms of the direct filter, computed from
/// normalized vector and landmark measurements only.
struct DirectForms {
  Vector3 vex_pa = Vector3::Zero();  ///< vex(Pa(R~ M_R))
  double ri_mr = 0.0;                ///< ||R~ M_R||_I
  double upsilon = 3.0;              ///< Tr{R~ M_R M_R^-1}
  Vector3 P_tilde = Vector3::Zero();

  Vector4 e() const { return Vector4(ri_mr, P_tilde(0), P_tilde(1), P_tilde(2)); }
};

DirectForms direct_measurement_forms(const NormalizedPairs& pairs, const AggregateMatrices& agg,
                                     const HomogeneousTransform& estimate);

Correction direct_correction(const TransformedError& E, const DirectForms& forms,
                             const HomogeneousTransform& estimate, double lambda_min, double k_w);

BiasRates direct_bias_dot(const TransformedError& E, const DirectForms& forms,
                          const HomogeneousTransform& estimate, const FilterGains& gains);

/// V = 1/2 |E|^2 + 1/(2 gamma) |b~|^2 with b~ = [b_omega - b_hat_omega; b_v - b_hat_v].
double lyapunov(const TransformedError& E, const Vector6& b_tilde, double gamma);

struct ErrorDiagnostics {
  Vector4 e = Vector4::Zero();
  TransformedError E;
  Matrix3 R_tilde = Matrix3::Identity();  ///< semi-direct only
  Vector3 P_tilde = Vector3::Zero();
  double upsilon = 0.0;                   ///< direct only
  Vector3 vex_pa = Vector3::Zero();       ///< vex(Pa(R~)) or vex(Pa(R~ M_R))
  Correction W;
  BiasRates rates;
  std::optional<Vector6> b_tilde;
  std::optional<double> lyapunov_V;
};

/// Errors, transformed errors, corrections and bias rates at time t.
/// Uses the quaternion algebra when options.form is quaternion.
ErrorDiagnostics diagnose(const FilterState& state, const MeasurementContext& ctx, double t,
                          const FilterOptions& options, const PPFConfig& cfg,
                          const FilterGains& gains);

/// Same, plus bias error and Lyapunov value against the true biases.
ErrorDiagnostics diagnose(const FilterState& state, const MeasurementContext& ctx, double t,
                          const FilterOptions& options, const PPFConfig& cfg,
                          const FilterGains& gains, const Vector3& true_gyro_bias,
                          const Vector3& true_velocity_bias);

/// Measurements at the start, midpoint and end of one step, used by the
/// corresponding Runge-Kutta stages.
struct StepInputs {
  MeasurementContext start;
  MeasurementContext mid;
  MeasurementContext end;
};

/// Advances the filter by dt with the measurements held over the step.
FilterState step(const FilterState& state, const MeasurementContext& ctx,
                 const FilterOptions& options, const PPFConfig& cfg, const FilterGains& gains,
                 double dt);

/// Advances the filter by dt with stage-time measurements. With
/// zero_order_hold the corrections come from `inputs.start` only.
FilterState step(const FilterState& state, const StepInputs& inputs,
                 const FilterOptions& options, const PPFConfig& cfg, const FilterGains& gains,
                 double dt);

}  // namespace se3ppf
