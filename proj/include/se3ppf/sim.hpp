#pragma once

// Scenario configuration and the simulation run loop: truth, sensors and one
// or both filters advanced in lockstep on a shared measurement stream.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "se3ppf/filters.hpp"
#include "se3ppf/liegroup.hpp"
#include "se3ppf/ppf.hpp"
#include "se3ppf/sensors.hpp"

namespace se3ppf {

inline constexpr int kCsvSchemaVersion = 1;

enum class FilterSelection { semidirect, direct, both };

/// When measurements are synthesised inside a step. per_stage samples the
/// truth at the Runge-Kutta stage times (start, midpoint, end) with one noise
/// draw per step; per_step holds the start-of-step frame over the whole step.
enum class MeasurementSampling { per_stage, per_step };

struct VelocityProfile {
  enum class Kind { paper_sv, constant };
  Kind kind = Kind::paper_sv;
  Vector3 omega = Vector3::Zero();     ///< constant profile only
  Vector3 velocity = Vector3::Zero();  ///< constant profile only

  /// True body velocities (Omega, V) at time t.
  std::pair<Vector3, Vector3> at(double t) const;

  bool operator==(const VelocityProfile&) const = default;
};

struct AngleAxis {
  double angle_deg = 0.0;
  Vector3 axis = Vector3::UnitZ();

  bool operator==(const AngleAxis&) const = default;
};

/// Initial pose estimate, given either as angle-axis or as an explicit matrix.
struct InitialEstimate {
  std::optional<AngleAxis> angle_axis;
  Matrix3 rotation = Matrix3::Identity();  ///< used when angle_axis is empty
  Vector3 position = Vector3::Zero();

  HomogeneousTransform pose() const;
  bool operator==(const InitialEstimate&) const = default;
};

struct ScenarioConfig {
  std::string name = "paper-sv";
  double duration = 30.0;  ///< s
  double dt = 1e-3;        ///< s
  VelocityProfile profile;
  HomogeneousTransform initial_truth = HomogeneousTransform::identity();
  SensorSuite suite;
  PPFConfig ppf;
  FilterGains gains;
  InitialEstimate initial_estimate;
  Vector3 initial_b_hat_omega = Vector3::Zero();
  Vector3 initial_b_hat_v = Vector3::Zero();
  FilterSelection filter = FilterSelection::both;
  FilterForm form = FilterForm::matrix;
  CorrectionHold hold = CorrectionHold::per_stage;
  MeasurementSampling sampling = MeasurementSampling::per_stage;
  bool noise = true;
  /// When false, reference-vector and landmark biases are not applied.
  bool vector_bias = true;
  bool clamp = false;
  std::uint64_t seed = 1;
  std::string output = "out";
  double window_start = 5.0;  ///< summary averaging window, s
  double window_end = 30.0;

  /// Number of samples written per filter: floor(duration/dt) + 1.
  std::size_t sample_count() const;
  void validate() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// The built-in simulation scenario (named "paper-sv").
ScenarioConfig paper_sv_scenario();

std::string to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const std::string& text);
/// Resolves a built-in scenario name or loads a JSON file.
ScenarioConfig load_scenario(const std::string& name_or_path);

/// ZYX (yaw-pitch-roll) Euler angles (phi, theta, psi) with R = Rz(psi) Ry(theta) Rx(phi).
/// At gimbal lock psi is set to 0.
Vector3 euler_from_rotation(const Matrix3& R);

struct TimeSeriesRecord {
  double t = 0.0;
  Vector3 euler_true = Vector3::Zero();
  Vector3 euler_est = Vector3::Zero();
  Vector3 p_true = Vector3::Zero();
  Vector3 p_est = Vector3::Zero();
  Vector4 e = Vector4::Zero();
  Vector4 xi = Vector4::Zero();
  Vector4 E = Vector4::Zero();
  Vector3 b_hat_omega = Vector3::Zero();
  Vector3 b_hat_v = Vector3::Zero();
  double lyapunov_V = 0.0;
  /// ||R_hat R^T||_I against the truth (not written to CSV).
  double true_attitude_error = 0.0;
  /// P_hat - R_hat R^T P against the truth (not written to CSV).
  Vector3 true_position_error = Vector3::Zero();
};

struct FatalEvent {
  std::string kind;  ///< "envelope" or the error class
  std::string message;
  double time = 0.0;
  int channel = -1;  ///< zero-based, envelope events only
};

struct RunSummary {
  std::size_t samples = 0;
  std::array<double, 4> max_ratio{};          ///< max |e_i| / xi_i
  std::array<double, 4> first_band_entry{};   ///< first t with |e_i| <= xi_inf_i, -1 if never
  double window_start = 0.0;
  double window_end = 0.0;
  double mean_attitude_error = 0.0;  ///< mean true ||R~||_I over the window, NaN if not covered
  double std_attitude_error = 0.0;
  std::size_t envelope_violations = 0;  ///< samples failing the delta = 1 envelope check
  double first_violation_time = -1.0;
  int first_violation_channel = -1;
  /// max over steps of V(t_k+1) - V(t_k); negative when V strictly decreases
  double max_lyapunov_increase = 0.0;
  Vector4 final_e = Vector4::Zero();
  Vector3 final_b_hat_omega = Vector3::Zero();
  Vector3 final_b_hat_v = Vector3::Zero();
  double final_true_attitude_error = 0.0;
  Vector3 final_true_position_error = Vector3::Zero();
};

/// Summary statistics of one filter's series. `sign_e0` selects the envelope
/// branch per channel.
RunSummary summarize(const std::vector<TimeSeriesRecord>& series, const PPFConfig& ppf,
                     const std::array<int, 4>& sign_e0, double window_start, double window_end);

struct FilterRun {
  FilterMode mode = FilterMode::semidirect;
  std::vector<TimeSeriesRecord> series;
  RunSummary summary;
  std::optional<FatalEvent> fatal;
};

struct RunResult {
  std::vector<FilterRun> runs;
  std::uint64_t seed = 0;

  bool ok() const;
};

/// Observer hook called once per sample with the diagnostics used for the
/// record; lets tests inspect intermediate quantities.
using SampleObserver = std::function<void(FilterMode, const TruthState&, const FilterState&,
                                          const MeasurementContext&, const ErrorDiagnostics&)>;

/// Validates the config (including that the funnels strictly contain e(0))
/// and runs the selected filters. Filter failures are recorded in the result.
RunResult run_scenario(const ScenarioConfig& cfg, const SampleObserver& observer = {});

/// `runs` independent Monte-Carlo runs with seeds derived from cfg.seed,
/// spread across up to `threads` workers. Results are in run order.
std::vector<RunResult> run_monte_carlo(const ScenarioConfig& cfg, std::size_t runs,
                                       unsigned threads);

const char* mode_name(FilterMode mode);

void write_csv(const std::filesystem::path& path, const std::vector<TimeSeriesRecord>& series);
std::string summary_json(const RunResult& result, const ScenarioConfig& cfg);
/// Writes <mode>.csv per filter and summary.json into `dir`.
void write_outputs(const std::filesystem::path& dir, const RunResult& result,
                   const ScenarioConfig& cfg);

}  // namespace se3ppf
