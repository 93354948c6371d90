#include <fstream>
#include <sstream>

#include <json.hpp>

#include "se3ppf/errors.hpp"
#include "se3ppf/sim.hpp"

namespace se3ppf {

using nlohmann::json;

namespace {

json vec(const Vector3& v) { return json::array({v(0), v(1), v(2)}); }
json vec(const Vector4& v) { return json::array({v(0), v(1), v(2), v(3)}); }

json mat(const Matrix3& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return rows;
}

Vector3 read_vec(const json& j, const char* key) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw InvalidArgument(std::string("config: '") + key + "' must be a 3-vector");
  }
  return Vector3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

Matrix3 read_mat(const json& j, const char* key) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw InvalidArgument(std::string("config: '") + key + "' must be a 3x3 matrix");
  }
  Matrix3 m;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_array() || a[i].size() != 3) {
      throw InvalidArgument(std::string("config: '") + key + "' must be a 3x3 matrix");
    }
    for (int k = 0; k < 3; ++k) m(i, k) = a[i][k].get<double>();
  }
  return m;
}

const char* selection_name(FilterSelection s) {
  switch (s) {
    case FilterSelection::semidirect: return "semidirect";
    case FilterSelection::direct: return "direct";
    case FilterSelection::both: return "both";
  }
  return "both";
}

FilterSelection parse_selection(const std::string& s) {
  if (s == "semidirect") return FilterSelection::semidirect;
  if (s == "direct") return FilterSelection::direct;
  if (s == "both") return FilterSelection::both;
  throw InvalidArgument("config: unknown filter '" + s + "'");
}

FilterForm parse_form(const std::string& s) {
  if (s == "matrix") return FilterForm::matrix;
  if (s == "quaternion") return FilterForm::quaternion;
  throw InvalidArgument("config: unknown form '" + s + "'");
}

CorrectionHold parse_hold(const std::string& s) {
  if (s == "per_stage") return CorrectionHold::per_stage;
  if (s == "zero_order_hold") return CorrectionHold::zero_order_hold;
  throw InvalidArgument("config: unknown correction_hold '" + s + "'");
}

MeasurementSampling parse_sampling(const std::string& s) {
  if (s == "per_stage") return MeasurementSampling::per_stage;
  if (s == "per_step") return MeasurementSampling::per_step;
  throw InvalidArgument("config: unknown measurement_sampling '" + s + "'");
}

}  // namespace

std::string to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["duration"] = c.duration;
  j["dt"] = c.dt;
  if (c.profile.kind == VelocityProfile::Kind::paper_sv) {
    j["profile"] = {{"kind", "paper-sv"}};
  } else {
    j["profile"] = {{"kind", "constant"}, {"omega", vec(c.profile.omega)},
                    {"velocity", vec(c.profile.velocity)}};
  }
  j["initial_truth"] = {{"rotation", mat(c.initial_truth.rotation)},
                        {"position", vec(c.initial_truth.position)}};

  json est;
  if (c.initial_estimate.angle_axis) {
    est["angle_axis"] = {{"angle_deg", c.initial_estimate.angle_axis->angle_deg},
                         {"axis", vec(c.initial_estimate.angle_axis->axis)}};
  } else {
    est["rotation"] = mat(c.initial_estimate.rotation);
  }
  est["position"] = vec(c.initial_estimate.position);
  j["initial_estimate"] = est;
  j["initial_bias_estimate"] = {{"gyro", vec(c.initial_b_hat_omega)},
                                {"velocity", vec(c.initial_b_hat_v)}};

  json refs = json::array();
  for (const auto& r : c.suite.reference_vectors) {
    refs.push_back({{"inertial", vec(r.inertial)}, {"weight", r.weight}, {"bias", vec(r.bias)}});
  }
  json lms = json::array();
  for (const auto& l : c.suite.landmarks) {
    lms.push_back({{"inertial", vec(l.inertial)}, {"weight", l.weight}, {"bias", vec(l.bias)}});
  }
  j["sensors"] = {
      {"reference_vectors", refs},
      {"augmented_weight", c.suite.augmented_weight},
      {"landmarks", lms},
      {"gyro_bias", vec(c.suite.gyro_bias)},
      {"velocity_bias", vec(c.suite.velocity_bias)},
      {"noise",
       {{"omega", c.suite.noise.omega},
        {"velocity", c.suite.noise.velocity},
        {"vector", c.suite.noise.vector},
        {"landmark", c.suite.noise.landmark}}},
  };

  json chans = json::array();
  for (const auto& ch : c.ppf.channels) {
    chans.push_back({{"xi0", ch.xi0},
                     {"xi_inf", ch.xi_inf},
                     {"ell", ch.ell},
                     {"delta_bar", ch.delta_bar},
                     {"delta_under", ch.delta_under}});
  }
  j["ppf"] = {{"channels", chans}};
  j["gains"] = {{"gamma", c.gains.gamma}, {"k_w", c.gains.k_w}};
  j["filter"] = selection_name(c.filter);
  j["form"] = c.form == FilterForm::matrix ? "matrix" : "quaternion";
  j["correction_hold"] = c.hold == CorrectionHold::per_stage ? "per_stage" : "zero_order_hold";
  j["measurement_sampling"] =
      c.sampling == MeasurementSampling::per_stage ? "per_stage" : "per_step";
  j["noise"] = c.noise;
  j["vector_bias"] = c.vector_bias;
  j["clamp"] = c.clamp;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["summary_window"] = json::array({c.window_start, c.window_end});
  return j.dump(2);
}

ScenarioConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw InvalidArgument(std::string("config: ") + ex.what());
  }
  try {
    ScenarioConfig c;
    c.name = j.value("name", c.name);
    c.duration = j.at("duration").get<double>();
    c.dt = j.at("dt").get<double>();

    const json& prof = j.at("profile");
    const std::string kind = prof.at("kind").get<std::string>();
    if (kind == "paper-sv") {
      c.profile.kind = VelocityProfile::Kind::paper_sv;
    } else if (kind == "constant") {
      c.profile.kind = VelocityProfile::Kind::constant;
      c.profile.omega = read_vec(prof, "omega");
      c.profile.velocity = read_vec(prof, "velocity");
    } else {
      throw InvalidArgument("config: unknown profile kind '" + kind + "'");
    }

    if (j.contains("initial_truth")) {
      c.initial_truth.rotation = read_mat(j["initial_truth"], "rotation");
      c.initial_truth.position = read_vec(j["initial_truth"], "position");
    }
    const json& est = j.at("initial_estimate");
    if (est.contains("angle_axis")) {
      c.initial_estimate.angle_axis =
          AngleAxis{est["angle_axis"].at("angle_deg").get<double>(), read_vec(est["angle_axis"], "axis")};
    } else {
      c.initial_estimate.rotation = read_mat(est, "rotation");
    }
    c.initial_estimate.position = read_vec(est, "position");
    if (j.contains("initial_bias_estimate")) {
      c.initial_b_hat_omega = read_vec(j["initial_bias_estimate"], "gyro");
      c.initial_b_hat_v = read_vec(j["initial_bias_estimate"], "velocity");
    }

    const json& s = j.at("sensors");
    for (const auto& r : s.at("reference_vectors")) {
      c.suite.reference_vectors.push_back(
          {read_vec(r, "inertial"), r.value("weight", 1.0),
           r.contains("bias") ? read_vec(r, "bias") : Vector3::Zero().eval()});
    }
    for (const auto& l : s.at("landmarks")) {
      c.suite.landmarks.push_back(
          {read_vec(l, "inertial"), l.value("weight", 1.0),
           l.contains("bias") ? read_vec(l, "bias") : Vector3::Zero().eval()});
    }
    c.suite.augmented_weight = s.value("augmented_weight", 1.0);
    c.suite.gyro_bias = read_vec(s, "gyro_bias");
    c.suite.velocity_bias = read_vec(s, "velocity_bias");
    if (s.contains("noise")) {
      const json& n = s["noise"];
      c.suite.noise = {n.value("omega", 0.0), n.value("velocity", 0.0), n.value("vector", 0.0),
                       n.value("landmark", 0.0)};
    }

    const json& chans = j.at("ppf").at("channels");
    if (!chans.is_array() || chans.size() != 4) {
      throw InvalidArgument("config: ppf.channels must list exactly 4 channels");
    }
    for (std::size_t i = 0; i < 4; ++i) {
      const json& ch = chans[i];
      c.ppf.channels[i] = {ch.at("xi0").get<double>(), ch.at("xi_inf").get<double>(),
                           ch.at("ell").get<double>(), ch.at("delta_bar").get<double>(),
                           ch.at("delta_under").get<double>()};
    }
    if (j.contains("gains")) {
      c.gains = {j["gains"].at("gamma").get<double>(), j["gains"].at("k_w").get<double>()};
    }
    c.filter = parse_selection(j.value("filter", std::string("both")));
    c.form = parse_form(j.value("form", std::string("matrix")));
    c.hold = parse_hold(j.value("correction_hold", std::string("per_stage")));
    c.sampling = parse_sampling(j.value("measurement_sampling", std::string("per_stage")));
    c.noise = j.value("noise", true);
    c.vector_bias = j.value("vector_bias", true);
    c.clamp = j.value("clamp", false);
    c.seed = j.value("seed", std::uint64_t{1});
    c.output = j.value("output", std::string("out"));
    if (j.contains("summary_window")) {
      c.window_start = j["summary_window"].at(0).get<double>();
      c.window_end = j["summary_window"].at(1).get<double>();
    }
    return c;
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("config: ") + ex.what());
  }
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
  if (name_or_path == "paper-sv") return paper_sv_scenario();
  std::ifstream is(name_or_path, std::ios::binary);
  if (!is) throw InvalidArgument("unknown scenario '" + name_or_path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

std::string summary_json(const RunResult& result, const ScenarioConfig& cfg) {
  json j;
  j["csv_schema_version"] = kCsvSchemaVersion;
  j["scenario"] = cfg.name;
  j["seed"] = result.seed;
  j["noise"] = cfg.noise;
  j["vector_bias"] = cfg.vector_bias;
  j["form"] = cfg.form == FilterForm::matrix ? "matrix" : "quaternion";
  j["dt"] = cfg.dt;
  j["duration"] = cfg.duration;
  j["ok"] = result.ok();
  json runs = json::array();
  for (const auto& r : result.runs) {
    const RunSummary& s = r.summary;
    json o;
    o["filter"] = mode_name(r.mode);
    o["samples"] = s.samples;
    o["max_ratio"] = s.max_ratio;
    o["first_band_entry"] = s.first_band_entry;
    o["attitude_error_window"] = json::array({s.window_start, s.window_end});
    o["mean_attitude_error"] = s.mean_attitude_error;
    o["std_attitude_error"] = s.std_attitude_error;
    o["envelope_violations"] = s.envelope_violations;
    if (s.first_violation_channel >= 0) {
      o["first_violation"] = {{"time", s.first_violation_time},
                              {"channel", s.first_violation_channel + 1}};
    }
    o["max_lyapunov_increase"] = s.max_lyapunov_increase;
    o["final_e"] = vec(s.final_e);
    o["final_b_hat_omega"] = vec(s.final_b_hat_omega);
    o["final_b_hat_v"] = vec(s.final_b_hat_v);
    o["final_true_attitude_error"] = s.final_true_attitude_error;
    o["final_true_position_error"] = vec(s.final_true_position_error);
    if (r.fatal) {
      o["fatal"] = {{"kind", r.fatal->kind},
                    {"message", r.fatal->message},
                    {"time", r.fatal->time},
                    {"channel", r.fatal->channel >= 0 ? r.fatal->channel + 1 : 0}};
    }
    runs.push_back(o);
  }
  j["runs"] = runs;
  return j.dump(2);
}

}  // namespace se3ppf
