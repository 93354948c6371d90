#include "se3ppf/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>

#include "se3ppf/errors.hpp"

namespace se3ppf {

std::pair<Vector3, Vector3> VelocityProfile::at(double t) const {
  if (kind == Kind::constant) return {omega, velocity};
  using std::numbers::pi;
  const Vector3 w(std::sin(0.5 * t), 0.7 * std::sin(0.4 * t + pi), 0.5 * std::sin(0.35 * t + pi / 3));
  const Vector3 v(0.3 * std::sin(0.6 * t), 0.18 * std::sin(0.4 * t + pi / 2),
                  0.3 * std::sin(0.1 * t + pi / 4));
  return {w, v};
}

HomogeneousTransform InitialEstimate::pose() const {
  HomogeneousTransform T;
  T.rotation = angle_axis ? from_angle_axis(angle_axis->angle_deg * std::numbers::pi / 180.0,
                                            angle_axis->axis)
                          : rotation;
  T.position = position;
  return T;
}

std::size_t ScenarioConfig::sample_count() const {
  return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
}

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw InvalidArgument("duration must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (dt > duration) throw InvalidArgument("dt must not exceed duration");
  if (!(window_end >= window_start)) throw InvalidArgument("summary window is empty");
  suite.validate();
  ppf.validate();
  gains.validate();
  if (!is_rotation(initial_truth.rotation)) {
    throw InvalidArgument("initial truth rotation is not a rotation matrix");
  }
  if (!is_rotation(initial_estimate.pose().rotation)) {
    throw InvalidArgument("initial estimate rotation is not a rotation matrix");
  }
}

ScenarioConfig paper_sv_scenario() {
  ScenarioConfig c;
  c.name = "paper-sv";
  c.duration = 30.0;
  c.dt = 1e-3;
  c.profile.kind = VelocityProfile::Kind::paper_sv;

  c.suite.reference_vectors = {
      {Vector3(1.0, -1.0, 1.0) / std::sqrt(3.0), 1.0, 0.1 * Vector3(-1.0, 1.0, 0.5)},
      {Vector3(0.0, 0.0, 1.0), 1.0, 0.1 * Vector3(0.0, 0.0, 1.0)},
  };
  c.suite.augmented_weight = 1.0;
  c.suite.landmarks = {{Vector3(0.5, std::sqrt(2.0), 1.0), 1.0, 0.1 * Vector3(0.3, 0.2, -0.2)}};
  c.suite.gyro_bias = 0.1 * Vector3(1.0, -1.0, 1.0);
  c.suite.velocity_bias = 0.1 * Vector3(2.0, 5.0, 1.0);
  c.suite.noise = {0.15, 0.3, 0.1, 0.1};

  const double xi0[4] = {1.3, 5.0, 4.0, 6.0};  // third entry printed with a negative sign
  const double xi_inf[4] = {0.07, 0.3, 0.3, 0.3};
  const double delta[4] = {1.3, 5.0, 4.0, 6.0};
  for (std::size_t i = 0; i < 4; ++i) {
    c.ppf.channels[i] = {xi0[i], xi_inf[i], 4.0, delta[i], delta[i]};
  }
  c.gains = {1.0, 5.0};
  c.initial_estimate.angle_axis = AngleAxis{175.0, Vector3(3.0, 10.0, 8.0)};
  c.initial_estimate.position = Vector3(4.0, -3.0, 5.0);
  return c;
}

Vector3 euler_from_rotation(const Matrix3& R) {
  const double s = std::clamp(-R(2, 0), -1.0, 1.0);
  const double theta = std::asin(s);
  if (std::abs(R(2, 0)) < 1.0 - 1e-12) {
    return {std::atan2(R(2, 1), R(2, 2)), theta, std::atan2(R(1, 0), R(0, 0))};
  }
  // gimbal lock: only phi - psi (or phi + psi) is observable
  const double phi = s > 0.0 ? std::atan2(R(0, 1), R(0, 2)) : std::atan2(-R(0, 1), -R(0, 2));
  return {phi, s > 0.0 ? std::numbers::pi / 2 : -std::numbers::pi / 2, 0.0};
}

RunSummary summarize(const std::vector<TimeSeriesRecord>& series, const PPFConfig& ppf,
                     const std::array<int, 4>& sign_e0, double window_start, double window_end) {
  RunSummary s;
  s.samples = series.size();
  s.window_start = window_start;
  s.window_end = window_end;
  s.first_band_entry.fill(-1.0);
  s.mean_attitude_error = std::numeric_limits<double>::quiet_NaN();
  s.std_attitude_error = std::numeric_limits<double>::quiet_NaN();
  if (series.empty()) return s;
  if (series.size() > 1) s.max_lyapunov_increase = -std::numeric_limits<double>::infinity();

  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const TimeSeriesRecord& r = series[k];
    bool violated = false;
    for (int i = 0; i < 4; ++i) {
      const auto& ch = ppf.channels[static_cast<std::size_t>(i)];
      s.max_ratio[i] = std::max(s.max_ratio[i], std::abs(r.e(i)) / r.xi(i));
      if (s.first_band_entry[i] < 0.0 && std::abs(r.e(i)) <= ch.xi_inf) {
        s.first_band_entry[i] = r.t;
      }
      if (!check_envelope(r.e(i), r.xi(i), sign_e0[i]) && !violated) {
        violated = true;
        if (s.first_violation_channel < 0) {
          s.first_violation_time = r.t;
          s.first_violation_channel = i;
        }
      }
    }
    if (violated) ++s.envelope_violations;
    if (k > 0) {
      s.max_lyapunov_increase =
          std::max(s.max_lyapunov_increase, r.lyapunov_V - series[k - 1].lyapunov_V);
    }
    if (r.t >= window_start - 1e-12 && r.t <= window_end + 1e-12) {
      sum += r.true_attitude_error;
      sum_sq += r.true_attitude_error * r.true_attitude_error;
      ++n;
    }
  }
  // A run that stopped early does not cover the window; report no statistic.
  if (n > 0 && series.back().t >= window_end - 1e-9) {
    s.mean_attitude_error = sum / static_cast<double>(n);
    s.std_attitude_error =
        std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) -
                                    s.mean_attitude_error * s.mean_attitude_error));
  }
  const TimeSeriesRecord& last = series.back();
  s.final_e = last.e;
  s.final_b_hat_omega = last.b_hat_omega;
  s.final_b_hat_v = last.b_hat_v;
  s.final_true_attitude_error = last.true_attitude_error;
  s.final_true_position_error = last.true_position_error;
  return s;
}

bool RunResult::ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const FilterRun& r) {
    return !r.fatal && r.summary.envelope_violations == 0;
  });
}

const char* mode_name(FilterMode mode) {
  return mode == FilterMode::semidirect ? "semidirect" : "direct";
}

namespace {

struct ActiveFilter {
  FilterRun run;
  FilterOptions options;
  FilterState state;
  std::array<int, 4> sign_e0{1, 1, 1, 1};
  bool alive = true;
};

TimeSeriesRecord make_record(double t, const TruthState& truth, const FilterState& est,
                             const ErrorDiagnostics& d) {
  TimeSeriesRecord r;
  r.t = t;
  r.euler_true = euler_from_rotation(truth.pose.rotation);
  r.euler_est = euler_from_rotation(est.pose.rotation);
  r.p_true = truth.pose.position;
  r.p_est = est.pose.position;
  r.e = d.e;
  r.xi = d.E.xi;
  r.E = d.E.E();
  r.b_hat_omega = est.b_hat_omega;
  r.b_hat_v = est.b_hat_v;
  r.lyapunov_V = d.lyapunov_V.value_or(0.0);
  const Matrix3 R_tilde = est.pose.rotation * truth.pose.rotation.transpose();
  r.true_attitude_error = normalized_distance(R_tilde);
  r.true_position_error = est.pose.position - R_tilde * truth.pose.position;
  return r;
}

FatalEvent fatal_from(const EnvelopeViolation& ex) {
  return {"envelope", ex.what(), ex.time(), ex.channel()};
}

/// Truth advanced over [t, t + h] along the velocity profile with a
/// Runge-Kutta-Munthe-Kaas step. Rates are taken at t + c h.
TruthState advance_truth(const TruthState& x, const VelocityProfile& profile, double h) {
  const double t = x.t;
  const auto [w1, v1] = profile.at(t);
  const auto [w2, v2] = profile.at(t + 0.5 * h);
  const auto [w4, v4] = profile.at(t + h);
  const Matrix3& R0 = x.pose.rotation;

  const Vector3 th1 = w1;
  const Vector3 p1 = R0 * v1;
  const Vector3 a2 = 0.5 * h * th1;
  const Vector3 th2 = right_jacobian_inverse(a2) * w2;
  const Vector3 p2 = R0 * exp_so3(a2, 1.0) * v2;
  const Vector3 a3 = 0.5 * h * th2;
  const Vector3 th3 = right_jacobian_inverse(a3) * w2;
  const Vector3 p3 = R0 * exp_so3(a3, 1.0) * v2;
  const Vector3 a4 = h * th3;
  const Vector3 th4 = right_jacobian_inverse(a4) * w4;
  const Vector3 p4 = R0 * exp_so3(a4, 1.0) * v4;

  TruthState out = x;
  const Vector3 theta = h / 6.0 * (th1 + 2.0 * th2 + 2.0 * th3 + th4);
  out.pose.rotation = project_to_so3(R0 * exp_so3(theta, 1.0));
  out.pose.position += h / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
  out.t = t + h;
  out.omega = w4;
  out.velocity = v4;
  return out;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const SampleObserver& observer) {
  cfg.validate();
  RunResult result;
  result.seed = cfg.seed;

  std::vector<ActiveFilter> filters;
  auto add = [&](FilterMode mode) {
    ActiveFilter f;
    f.run.mode = mode;
    f.options = {mode, cfg.form, cfg.hold, cfg.clamp};
    f.state = FilterState::from_pose(cfg.initial_estimate.pose(), cfg.initial_b_hat_omega,
                                     cfg.initial_b_hat_v, 0.0);
    filters.push_back(std::move(f));
  };
  if (cfg.filter != FilterSelection::direct) add(FilterMode::semidirect);
  if (cfg.filter != FilterSelection::semidirect) add(FilterMode::direct);

  SensorSuite suite = cfg.suite;
  if (!cfg.vector_bias) {
    for (auto& r : suite.reference_vectors) r.bias.setZero();
    for (auto& l : suite.landmarks) l.bias.setZero();
  }

  NoiseStream noise(cfg.seed);
  NoiseStream* noise_ptr = cfg.noise ? &noise : nullptr;
  TruthState truth;
  truth.pose = cfg.initial_truth;

  const std::size_t n = cfg.sample_count();
  for (auto& f : filters) f.run.series.reserve(n);

  const bool staged = cfg.sampling == MeasurementSampling::per_stage;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const bool last = k + 1 == n;
    const auto [omega, velocity] = cfg.profile.at(t);

    truth.t = t;
    truth.omega = omega;
    truth.velocity = velocity;
    std::optional<MeasurementNoise> sample;
    if (noise_ptr) sample = draw_noise(suite, *noise_ptr);
    const MeasurementNoise* np = sample ? &*sample : nullptr;
    const MeasurementFrame frame = measure_with(truth, suite, np);

    MeasurementFrame frame_mid = frame;
    MeasurementFrame frame_end = frame;
    if (staged && !last) {
      const TruthState mid = advance_truth(truth, cfg.profile, 0.5 * cfg.dt);
      const TruthState end = advance_truth(truth, cfg.profile, cfg.dt);
      frame_mid = measure_with(mid, suite, np);
      frame_end = measure_with(end, suite, np);
    }

    for (auto& f : filters) {
      if (!f.alive) continue;
      try {
        const MeasurementContext ctx = prepare_measurements(frame, suite, f.options.mode);
        if (k == 0) {
          // The funnels must strictly contain the initial error.
          const ErrorDiagnostics d0 =
              diagnose(f.state, ctx, t, FilterOptions{f.options.mode, f.options.form,
                                                      f.options.hold, true},
                       cfg.ppf, cfg.gains);
          for (int i = 0; i < 4; ++i) {
            f.sign_e0[static_cast<std::size_t>(i)] = d0.e(i) >= 0.0 ? 1 : -1;
            if (!check_envelope(d0.e(i), cfg.ppf.channels[static_cast<std::size_t>(i)].xi0,
                                f.sign_e0[static_cast<std::size_t>(i)])) {
              throw InvalidArgument(std::string(mode_name(f.options.mode)) +
                                    ": initial error lies outside the funnel on channel " +
                                    std::to_string(i + 1));
            }
          }
        }
        const ErrorDiagnostics d = diagnose(f.state, ctx, t, f.options, cfg.ppf, cfg.gains,
                                            cfg.suite.gyro_bias, cfg.suite.velocity_bias);
        f.run.series.push_back(make_record(t, truth, f.state, d));
        if (observer) observer(f.options.mode, truth, f.state, ctx, d);
        if (!last) {
          const StepInputs inputs{
              ctx, staged ? prepare_measurements(frame_mid, suite, f.options.mode) : ctx,
              staged ? prepare_measurements(frame_end, suite, f.options.mode) : ctx};
          f.state = step(f.state, inputs, f.options, cfg.ppf, cfg.gains, cfg.dt);
          f.state.t = static_cast<double>(k + 1) * cfg.dt;
        }
      } catch (const EnvelopeViolation& ex) {
        f.run.fatal = fatal_from(ex);
        f.alive = false;
      } catch (const InvalidArgument&) {
        throw;
      } catch (const Error& ex) {
        f.run.fatal = FatalEvent{"numerical", ex.what(), t, -1};
        f.alive = false;
      }
    }
    if (!last) {
      truth = staged ? advance_truth(truth, cfg.profile, cfg.dt)
                     : propagate_truth(truth, omega, velocity, cfg.dt);
    }
  }

  for (auto& f : filters) {
    f.run.summary = summarize(f.run.series, cfg.ppf, f.sign_e0, cfg.window_start, cfg.window_end);
    result.runs.push_back(std::move(f.run));
  }
  return result;
}

std::vector<RunResult> run_monte_carlo(const ScenarioConfig& cfg, std::size_t runs,
                                       unsigned threads) {
  std::vector<RunResult> results(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      ScenarioConfig c = cfg;
      c.seed = derive_seed(cfg.seed, i);
      try {
        results[i] = run_scenario(c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(runs, 1))));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Output

namespace {

void append(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<TimeSeriesRecord>& series) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "t,phi_true,theta_true,psi_true,phi_est,theta_est,psi_est,"
        "px_true,py_true,pz_true,px_est,py_est,pz_est,e1,e2,e3,e4,xi1,xi2,xi3,xi4,"
        "ER,EP1,EP2,EP3,bw1,bw2,bw3,bv1,bv2,bv3,V_lyap\n";
  std::string line;
  for (const auto& r : series) {
    line.clear();
    auto put = [&line](double v) {
      if (!line.empty()) line += ',';
      append(line, v);
    };
    put(r.t);
    for (int i = 0; i < 3; ++i) put(r.euler_true(i));
    for (int i = 0; i < 3; ++i) put(r.euler_est(i));
    for (int i = 0; i < 3; ++i) put(r.p_true(i));
    for (int i = 0; i < 3; ++i) put(r.p_est(i));
    for (int i = 0; i < 4; ++i) put(r.e(i));
    for (int i = 0; i < 4; ++i) put(r.xi(i));
    for (int i = 0; i < 4; ++i) put(r.E(i));
    for (int i = 0; i < 3; ++i) put(r.b_hat_omega(i));
    for (int i = 0; i < 3; ++i) put(r.b_hat_v(i));
    put(r.lyapunov_V);
    line += '\n';
    os << line;
  }
}

void write_outputs(const std::filesystem::path& dir, const RunResult& result,
                   const ScenarioConfig& cfg) {
  std::filesystem::create_directories(dir);
  for (const auto& run : result.runs) {
    write_csv(dir / (std::string(mode_name(run.mode)) + ".csv"), run.series);
  }
  std::ofstream os(dir / "summary.json", std::ios::binary);
  if (!os) throw Error("cannot write summary to " + dir.string());
  os << summary_json(result, cfg) << '\n';
}

}  // namespace se3ppf
