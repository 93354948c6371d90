#include "se3ppf/filters.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "se3ppf/errors.hpp"

namespace se3ppf {

void FilterGains::validate() const {
  if (!(gamma > 0.0) || !(k_w > 0.0)) {
    throw InvalidArgument("filter gains gamma and k_w must be positive");
  }
}

FilterState FilterState::from_pose(const HomogeneousTransform& pose, const Vector3& b_hat_omega,
                                   const Vector3& b_hat_v, double t) {
  FilterState s;
  s.pose = pose;
  s.attitude = rotation_to_quat(pose.rotation);
  s.b_hat_omega = b_hat_omega;
  s.b_hat_v = b_hat_v;
  s.t = t;
  return s;
}

MeasurementContext prepare_measurements(const MeasurementFrame& frame, const SensorSuite& suite,
                                        FilterMode mode) {
  MeasurementContext ctx;
  ctx.omega_m = frame.omega_m;
  ctx.v_m = frame.v_m;
  ctx.pairs = normalize_pairs(frame, suite);
  ctx.landmarks = landmark_pairs(frame, suite);
  if (mode == FilterMode::semidirect) {
    ctx.recon = reconstruct(ctx.pairs, ctx.landmarks);
  } else {
    ctx.agg = build_aggregates(ctx.pairs, ctx.landmarks);
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Semi-direct

SemidirectErrors semidirect_errors(const HomogeneousTransform& estimate,
                                   const ReconstructedPose& recon) {
  SemidirectErrors out;
  out.R_tilde = estimate.rotation * recon.R_y.transpose();
  out.P_tilde = estimate.position - out.R_tilde * recon.P_y;
  out.e << normalized_distance(out.R_tilde), out.P_tilde;
  return out;
}

namespace {

Vector3 position_correction(const TransformedError& E, const Vector3& P_tilde,
                            const Vector3& P_hat, const Vector3& W_omega, double k_w) {
  return k_w * E.Psi_P.cwiseProduct(E.E_P) + (P_tilde - P_hat).cross(W_omega) -
         E.Lambda_P.cwiseProduct(P_tilde);
}

BiasRates bias_rates(const TransformedError& E, const Vector3& attitude_term,
                     const Vector3& P_tilde, const HomogeneousTransform& estimate,
                     double gamma) {
  const Matrix3 Rt = estimate.rotation.transpose();
  const Vector3 psi_e = E.Psi_P.cwiseProduct(E.E_P);
  BiasRates r;
  r.b_omega_dot = 0.5 * gamma * E.Psi_R * E.E_R * (Rt * attitude_term) +
                  gamma * Rt * (P_tilde - estimate.position).cross(psi_e);
  r.b_v_dot = gamma * Rt * psi_e;
  return r;
}

}  // namespace

Correction semidirect_correction(const TransformedError& E, const Matrix3& R_tilde,
                                 const Vector3& P_tilde, const HomogeneousTransform& estimate,
                                 double k_w) {
  const double denom = 1.0 - normalized_distance(R_tilde);
  if (!(denom >= kSingularityGuard)) {
    throw NearSingularAttitude("semi-direct correction: 1 - ||R~||_I below guard");
  }
  Correction c;
  c.W_omega = 2.0 * (k_w * E.Psi_R * E.E_R - E.Lambda_R / 4.0) / denom * vex_pa(R_tilde);
  c.W_v = estimate.rotation.transpose() *
          position_correction(E, P_tilde, estimate.position, c.W_omega, k_w);
  return c;
}

BiasRates semidirect_bias_dot(const TransformedError& E, const Matrix3& R_tilde,
                              const Vector3& P_tilde, const HomogeneousTransform& estimate,
                              const FilterGains& gains) {
  return bias_rates(E, vex_pa(R_tilde), P_tilde, estimate, gains.gamma);
}

// ---------------------------------------------------------------------------
// Direct

namespace {

/// (sum k_i v_hat_i v_i^I^T)^-1 with a conditioning check.
Matrix3 inner_inverse(const Matrix3& inner) {
  Eigen::JacobiSVD<Matrix3> svd(inner);
  const Vector3& s = svd.singularValues();
  if (!(s(2) > 0.0) || s(0) / s(2) > kMaxInnerCondition) {
    throw SingularAggregate("direct filter: inner measurement matrix is singular");
  }
  return inner.inverse();
}

}  // namespace

DirectForms direct_measurement_forms(const NormalizedPairs& pairs, const AggregateMatrices& agg,
                                     const HomogeneousTransform& estimate) {
  if (!(agg.m_c > 0.0)) throw NoLandmarks("direct filter: m_c must be positive");
  const Matrix3& Rh = estimate.rotation;
  Vector3 cross_sum = Vector3::Zero();
  Matrix3 inner = Matrix3::Zero();
  DirectForms f;
  f.ri_mr = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double k = pairs.weights[i];
    const Vector3 v_hat = Rh.transpose() * pairs.inertial[i];
    cross_sum += 0.5 * k * v_hat.cross(pairs.body[i]);
    f.ri_mr += 0.25 * k * (1.0 - v_hat.dot(pairs.body[i]));
    inner += k * v_hat * pairs.inertial[i].transpose();
  }
  f.vex_pa = Rh * cross_sum;
  f.upsilon = (agg.K_R * inner_inverse(inner)).trace();
  const Vector3 MR_inv_mv = agg.M_R.ldlt().solve(agg.m_v);
  f.P_tilde = estimate.position + (Rh * agg.k_v - Rh * agg.K_R * MR_inv_mv) / agg.m_c;
  return f;
}

Correction direct_correction(const TransformedError& E, const DirectForms& forms,
                             const HomogeneousTransform& estimate, double lambda_min, double k_w) {
  const double denom = 1.0 + forms.upsilon;
  if (!(denom >= kSingularityGuard)) {
    throw NearSingularAttitude("direct correction: 1 + Upsilon below guard");
  }
  Correction c;
  c.W_omega = (4.0 / lambda_min) * (k_w * E.Psi_R * E.E_R - E.Lambda_R) / denom * forms.vex_pa;
  c.W_v = estimate.rotation.transpose() *
          position_correction(E, forms.P_tilde, estimate.position, c.W_omega, k_w);
  return c;
}

BiasRates direct_bias_dot(const TransformedError& E, const DirectForms& forms,
                          const HomogeneousTransform& estimate, const FilterGains& gains) {
  return bias_rates(E, forms.vex_pa, forms.P_tilde, estimate, gains.gamma);
}

double lyapunov(const TransformedError& E, const Vector6& b_tilde, double gamma) {
  return 0.5 * E.E().squaredNorm() + 0.5 / gamma * b_tilde.squaredNorm();
}

// ---------------------------------------------------------------------------
// Evaluation in matrix and quaternion algebra

namespace {

ErrorDiagnostics diagnose_matrix(const FilterState& s, const MeasurementContext& ctx, double t,
                                 const FilterOptions& opt, const PPFConfig& cfg,
                                 const FilterGains& gains) {
  ErrorDiagnostics d;
  if (opt.mode == FilterMode::semidirect) {
    const SemidirectErrors se = semidirect_errors(s.pose, ctx.recon);
    d.e = se.e;
    d.R_tilde = se.R_tilde;
    d.P_tilde = se.P_tilde;
    d.vex_pa = vex_pa(se.R_tilde);
    d.E = build_transformed(d.e, t, cfg, opt.clamp);
    d.W = semidirect_correction(d.E, se.R_tilde, se.P_tilde, s.pose, gains.k_w);
    d.rates = semidirect_bias_dot(d.E, se.R_tilde, se.P_tilde, s.pose, gains);
  } else {
    const DirectForms f = direct_measurement_forms(ctx.pairs, ctx.agg, s.pose);
    d.e = f.e();
    d.P_tilde = f.P_tilde;
    d.upsilon = f.upsilon;
    d.vex_pa = f.vex_pa;
    d.E = build_transformed(d.e, t, cfg, opt.clamp);
    d.W = direct_correction(d.E, f, s.pose, ctx.agg.lambda_min, gains.k_w);
    d.rates = direct_bias_dot(d.E, f, s.pose, gains);
  }
  return d;
}

ErrorDiagnostics diagnose_quaternion(const FilterState& s, const MeasurementContext& ctx,
                                     double t, const FilterOptions& opt, const PPFConfig& cfg,
                                     const FilterGains& gains) {
  const UnitQuaternion& Qh = s.attitude;
  const UnitQuaternion Qh_inv = quat_inverse(Qh);
  const Vector3& Ph = s.pose.position;
  ErrorDiagnostics d;
  Vector3 attitude_term;  // enters the gyro bias rate as Y(Qh^-1, .) scaled by gamma/2 Psi E

  if (opt.mode == FilterMode::semidirect) {
    const UnitQuaternion Qy = rotation_to_quat(ctx.recon.R_y);
    const UnitQuaternion Qt = quat_multiply(Qh, quat_inverse(Qy));
    const double q0 = Qt.w;
    d.R_tilde = quat_to_rotation(Qt);
    d.P_tilde = Ph - quat_sandwich(Qt, ctx.recon.P_y);
    d.e << 1.0 - q0 * q0, d.P_tilde;
    d.E = build_transformed(d.e, t, cfg, opt.clamp);
    if (!(q0 * q0 >= kSingularityGuard)) {
      throw NearSingularAttitude("semi-direct correction: q~0^2 below guard");
    }
    d.W.W_omega = 4.0 * (gains.k_w * d.E.Psi_R * d.E.E_R - d.E.Lambda_R / 4.0) / q0 * Qt.v;
    d.vex_pa = 2.0 * q0 * Qt.v;
    attitude_term = d.vex_pa;
  } else {
    if (!(ctx.agg.m_c > 0.0)) throw NoLandmarks("direct filter: m_c must be positive");
    Vector3 cross_sum = Vector3::Zero();
    Matrix3 inner = Matrix3::Zero();
    double ri = 0.0;
    for (std::size_t i = 0; i < ctx.pairs.size(); ++i) {
      const double k = ctx.pairs.weights[i];
      const Vector3 v_hat = quat_sandwich(Qh_inv, ctx.pairs.inertial[i]);
      cross_sum += 0.5 * k * v_hat.cross(ctx.pairs.body[i]);
      ri += 0.25 * k * (1.0 - v_hat.dot(ctx.pairs.body[i]));
      inner += k * v_hat * ctx.pairs.inertial[i].transpose();
    }
    d.vex_pa = quat_sandwich(Qh, cross_sum);
    const Matrix3& M1 = ctx.agg.K_R;
    const Matrix3 M2 = inner_inverse(inner);
    d.upsilon = (M1 * M2).trace();
    const Vector3 MR_inv_mv = ctx.agg.M_R.ldlt().solve(ctx.agg.m_v);
    d.P_tilde = Ph + (quat_sandwich(Qh, ctx.agg.k_v) - quat_sandwich(Qh, M1 * MR_inv_mv)) /
                         ctx.agg.m_c;
    d.e << ri, d.P_tilde;
    d.E = build_transformed(d.e, t, cfg, opt.clamp);
    const double denom = 1.0 + d.upsilon;
    if (!(denom >= kSingularityGuard)) {
      throw NearSingularAttitude("direct correction: 1 + Upsilon below guard");
    }
    d.W.W_omega = (4.0 / ctx.agg.lambda_min) *
                  (gains.k_w * d.E.Psi_R * d.E.E_R - d.E.Lambda_R) / denom * d.vex_pa;
    attitude_term = d.vex_pa;
  }

  const Vector3 psi_e = d.E.Psi_P.cwiseProduct(d.E.E_P);
  d.W.W_v = quat_sandwich(Qh_inv, position_correction(d.E, d.P_tilde, Ph, d.W.W_omega, gains.k_w));
  d.rates.b_omega_dot =
      0.5 * gains.gamma * d.E.Psi_R * d.E.E_R * quat_sandwich(Qh_inv, attitude_term) +
      gains.gamma * quat_sandwich(Qh_inv, Vector3(d.P_tilde - Ph))
                        .cross(quat_sandwich(Qh_inv, psi_e));
  d.rates.b_v_dot = gains.gamma * quat_sandwich(Qh_inv, psi_e);
  return d;
}

}  // namespace

ErrorDiagnostics diagnose(const FilterState& state, const MeasurementContext& ctx, double t,
                          const FilterOptions& options, const PPFConfig& cfg,
                          const FilterGains& gains) {
  return options.form == FilterForm::matrix
             ? diagnose_matrix(state, ctx, t, options, cfg, gains)
             : diagnose_quaternion(state, ctx, t, options, cfg, gains);
}

ErrorDiagnostics diagnose(const FilterState& state, const MeasurementContext& ctx, double t,
                          const FilterOptions& options, const PPFConfig& cfg,
                          const FilterGains& gains, const Vector3& true_gyro_bias,
                          const Vector3& true_velocity_bias) {
  ErrorDiagnostics d = diagnose(state, ctx, t, options, cfg, gains);
  Vector6 bt;
  bt << true_gyro_bias - state.b_hat_omega, true_velocity_bias - state.b_hat_v;
  d.b_tilde = bt;
  d.lyapunov_V = lyapunov(d.E, bt, gains.gamma);
  return d;
}

// ---------------------------------------------------------------------------
// Integration

namespace {

struct StageRates {
  Vector3 omega;  ///< body rate driving the attitude estimate
  Vector3 p_dot;
  Vector3 bw_dot;
  Vector3 bv_dot;
};

StageRates stage_rates(const FilterState& s, const MeasurementContext& ctx, double t,
                       const FilterOptions& opt, const PPFConfig& cfg, const FilterGains& gains,
                       const std::optional<ErrorDiagnostics>& held) {
  const ErrorDiagnostics d = held ? *held : diagnose(s, ctx, t, opt, cfg, gains);
  StageRates r;
  if (opt.form == FilterForm::matrix) {
    const Matrix3& R = s.pose.rotation;
    r.omega = ctx.omega_m - s.b_hat_omega - R.transpose() * d.W.W_omega;
    r.p_dot = R * (ctx.v_m - s.b_hat_v - d.W.W_v);
  } else {
    const UnitQuaternion Q_inv = quat_inverse(s.attitude);
    r.omega = ctx.omega_m - s.b_hat_omega - quat_sandwich(Q_inv, d.W.W_omega);
    r.p_dot = quat_sandwich(s.attitude, Vector3(ctx.v_m - s.b_hat_v - d.W.W_v));
  }
  r.bw_dot = d.rates.b_omega_dot;
  r.bv_dot = d.rates.b_v_dot;
  return r;
}

FilterState with_translational(const FilterState& base, const StageRates& k, double h) {
  FilterState s = base;
  s.pose.position += h * k.p_dot;
  s.b_hat_omega += h * k.bw_dot;
  s.b_hat_v += h * k.bv_dot;
  return s;
}

/// Runge-Kutta-Munthe-Kaas: attitude = A0 exp([theta]_x) with
/// theta' = Jr^-1(theta) omega, translational and bias states by plain RK4.
/// Both forms share the scheme so that they differ only in the algebra used
/// to evaluate the corrections.
FilterState step_rkmk(const FilterState& s0, const StepInputs& in, const FilterOptions& opt,
                      const PPFConfig& cfg, const FilterGains& gains, double h,
                      const std::optional<ErrorDiagnostics>& held) {
  const bool matrix = opt.form == FilterForm::matrix;
  auto set_attitude = [&](FilterState& s, const Vector3& theta) {
    if (matrix) {
      s.pose.rotation = s0.pose.rotation * exp_so3(theta, 1.0);
    } else {
      s.attitude = quat_normalize(quat_multiply(s0.attitude, quat_exp(theta)));
      s.pose.rotation = quat_to_rotation(s.attitude);
    }
  };
  auto at = [&](const Vector3& theta, const StageRates& k, double a) {
    FilterState s = with_translational(s0, k, a);
    set_attitude(s, theta);
    return s;
  };

  const StageRates k1 = stage_rates(s0, in.start, s0.t, opt, cfg, gains, held);
  const Vector3 th1 = k1.omega;

  const Vector3 theta2 = 0.5 * h * th1;
  const StageRates k2 =
      stage_rates(at(theta2, k1, 0.5 * h), in.mid, s0.t + 0.5 * h, opt, cfg, gains, held);
  const Vector3 th2 = right_jacobian_inverse(theta2) * k2.omega;

  const Vector3 theta3 = 0.5 * h * th2;
  const StageRates k3 =
      stage_rates(at(theta3, k2, 0.5 * h), in.mid, s0.t + 0.5 * h, opt, cfg, gains, held);
  const Vector3 th3 = right_jacobian_inverse(theta3) * k3.omega;

  const Vector3 theta4 = h * th3;
  const StageRates k4 = stage_rates(at(theta4, k3, h), in.end, s0.t + h, opt, cfg, gains, held);
  const Vector3 th4 = right_jacobian_inverse(theta4) * k4.omega;

  FilterState out = s0;
  const Vector3 theta = h / 6.0 * (th1 + 2.0 * th2 + 2.0 * th3 + th4);
  if (matrix) {
    out.pose.rotation = project_to_so3(s0.pose.rotation * exp_so3(theta, 1.0));
    out.attitude = rotation_to_quat(out.pose.rotation);
  } else {
    set_attitude(out, theta);
  }
  out.pose.position += h / 6.0 * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot);
  out.b_hat_omega += h / 6.0 * (k1.bw_dot + 2.0 * k2.bw_dot + 2.0 * k3.bw_dot + k4.bw_dot);
  out.b_hat_v += h / 6.0 * (k1.bv_dot + 2.0 * k2.bv_dot + 2.0 * k3.bv_dot + k4.bv_dot);
  out.t = s0.t + h;
  return out;
}

}  // namespace

FilterState step(const FilterState& state, const MeasurementContext& ctx,
                 const FilterOptions& options, const PPFConfig& cfg, const FilterGains& gains,
                 double dt) {
  return step(state, StepInputs{ctx, ctx, ctx}, options, cfg, gains, dt);
}

FilterState step(const FilterState& state, const StepInputs& inputs,
                 const FilterOptions& options, const PPFConfig& cfg, const FilterGains& gains,
                 double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");
  std::optional<ErrorDiagnostics> held;
  if (options.hold == CorrectionHold::zero_order_hold) {
    held = diagnose(state, inputs.start, state.t, options, cfg, gains);
  }
  return step_rkmk(state, inputs, options, cfg, gains, dt, held);
}

}  // namespace se3ppf
