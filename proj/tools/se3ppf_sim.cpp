// Command-line driver for the pose filter simulations.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "se3ppf/errors.hpp"
#include "se3ppf/sim.hpp"

namespace {

using namespace se3ppf;

void print_result(const RunResult& result) {
  for (const auto& run : result.runs) {
    const RunSummary& s = run.summary;
    std::printf("%-10s samples=%zu violations=%zu mean||R~||_I=%.6g final_e=[%.4g %.4g %.4g %.4g]\n",
                mode_name(run.mode), s.samples, s.envelope_violations, s.mean_attitude_error,
                s.final_e(0), s.final_e(1), s.final_e(2), s.final_e(3));
    if (run.fatal) {
      std::printf("%-10s FAILED: %s\n", mode_name(run.mode), run.fatal->message.c_str());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose filters on SE(3) with prescribed performance: simulation harness"};
  app.require_subcommand(1);

  std::string scenario = "paper-sv";
  std::string filter;
  std::string form;
  std::string noise;
  std::string vector_bias;
  std::string hold;
  std::string sampling;
  double dt = 0.0;
  double duration = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  bool clamp = false;
  std::size_t runs = 1;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Run a scenario and write CSV + summary.json");
  run->add_option("--scenario", scenario, "Built-in scenario name or JSON config path")
      ->capture_default_str();
  run->add_option("--filter", filter, "Filters to run")
      ->check(CLI::IsMember({"semidirect", "direct", "both"}));
  run->add_option("--form", form, "Filter realization")
      ->check(CLI::IsMember({"matrix", "quaternion"}));
  run->add_option("--noise", noise, "Measurement noise")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--vector-bias", vector_bias, "Biases on reference vectors and landmarks")
      ->check(CLI::IsMember({"on", "off"}));
  run->add_option("--hold", hold, "Correction terms inside a step")
      ->check(CLI::IsMember({"per_stage", "zero_order_hold"}));
  run->add_option("--sampling", sampling, "When measurements are taken inside a step")
      ->check(CLI::IsMember({"per_stage", "per_step"}));
  run->add_option("--dt", dt, "Integration step, s")->check(CLI::PositiveNumber);
  run->add_option("--duration", duration, "Simulated time, s")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Noise seed (master seed with --runs)");
  run->add_option("--out", out, "Output directory");
  run->add_flag("--clamp", clamp, "Clamp e/xi inside the funnel instead of failing");
  run->add_option("--runs", runs, "Monte-Carlo runs")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads for --runs")->check(CLI::PositiveNumber);
  run->footer("Euler angles in the CSV use the ZYX convention: R = Rz(psi) Ry(theta) Rx(phi).");

  auto* dump = app.add_subcommand("dump-config", "Print a scenario as JSON");
  dump->add_option("--scenario", scenario, "Built-in scenario name or JSON config path")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    ScenarioConfig cfg = load_scenario(scenario);
    if (*dump) {
      std::cout << to_json(cfg) << '\n';
      return 0;
    }

    if (!filter.empty()) {
      const std::map<std::string, FilterSelection> m{{"semidirect", FilterSelection::semidirect},
                                                     {"direct", FilterSelection::direct},
                                                     {"both", FilterSelection::both}};
      cfg.filter = m.at(filter);
    }
    if (!form.empty()) cfg.form = form == "matrix" ? FilterForm::matrix : FilterForm::quaternion;
    if (!noise.empty()) cfg.noise = noise == "on";
    if (!vector_bias.empty()) cfg.vector_bias = vector_bias == "on";
    if (!sampling.empty()) {
      cfg.sampling =
          sampling == "per_stage" ? MeasurementSampling::per_stage : MeasurementSampling::per_step;
    }
    if (!hold.empty()) {
      cfg.hold = hold == "per_stage" ? CorrectionHold::per_stage : CorrectionHold::zero_order_hold;
    }
    if (run->count("--dt")) cfg.dt = dt;
    if (run->count("--duration")) {
      cfg.duration = duration;
      cfg.window_end = std::min(cfg.window_end, duration);
      cfg.window_start = std::min(cfg.window_start, cfg.window_end);
    }
    if (run->count("--seed")) cfg.seed = seed;
    if (!out.empty()) cfg.output = out;
    if (clamp) cfg.clamp = true;

    const std::filesystem::path dir = cfg.output;
    bool ok = true;
    if (runs == 1) {
      const RunResult result = run_scenario(cfg);
      write_outputs(dir, result, cfg);
      print_result(result);
      ok = result.ok();
    } else {
      const auto results = run_monte_carlo(cfg, runs, threads);
      for (std::size_t i = 0; i < results.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "run_%04zu", i);
        ScenarioConfig c = cfg;
        c.seed = results[i].seed;
        write_outputs(dir / name, results[i], c);
        std::printf("[%s seed=%llu]\n", name, static_cast<unsigned long long>(results[i].seed));
        print_result(results[i]);
        ok = ok && results[i].ok();
      }
    }
    return ok ? 0 : 1;
  } catch (const InvalidArgument& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 3;
  }
}
