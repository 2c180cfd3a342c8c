// Command-line front end for the inertial parameter identification library.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "inertiaid/errors.hpp"
#include "inertiaid/io.hpp"
#include "inertiaid/presets.hpp"
#include "inertiaid/rng.hpp"

using namespace inertiaid;
using nlohmann::json;

namespace {

struct InputOptions {
  std::string kind = "sine";  // sine | pure-translation | translation-rotation | orbit | csv
  std::string csv_path;
  double amplitude = 25.0 * kGramForceToNewton;  // [N]
  double omega = 1.0;                            // [rad/s]
  double phase_step = kPi / 4.0;                 // [rad]
  std::string sine_mode = "signed";
  double half_duration = 7.0;        // [s], translation-rotation profile
  double orbit_amplitude = 0.1;      // [m]
  double orbit_period = 60.0;        // [s]
  double orbit_heading = 0.1;        // [rad]
  double duration = 120.0;
  double dt = 0.01;

  void attach(CLI::App* cmd) {
    cmd->add_option("--input", kind,
                    "input kind: sine | pure-translation | translation-rotation "
                    "| orbit | csv")
        ->check(CLI::IsMember({"sine", "pure-translation", "translation-rotation",
                               "orbit", "csv"}));
    cmd->add_option("--input-csv", csv_path, "input CSV when --input csv");
    cmd->add_option("--amplitude", amplitude, "per-thruster amplitude [N]");
    cmd->add_option("--omega", omega, "excitation frequency [rad/s]");
    cmd->add_option("--phase-step", phase_step, "per-thruster phase step [rad]");
    cmd->add_option("--sine-mode", sine_mode, "signed | offset")
        ->check(CLI::IsMember({"signed", "offset"}));
    cmd->add_option("--half-duration", half_duration,
                    "translation-rotation half duration [s]");
    cmd->add_option("--orbit-amplitude", orbit_amplitude, "orbit setpoint [m]");
    cmd->add_option("--orbit-period", orbit_period, "orbit period [s]");
    cmd->add_option("--orbit-heading", orbit_heading,
                    "orbit heading setpoint amplitude [rad]");
    cmd->add_option("--duration", duration, "input duration [s]");
    cmd->add_option("--dt", dt, "input sample step [s]");
  }

  InputSequence build(const PlantModel& plant, const Vec8& initial_state,
                      std::uint64_t seed) const {
    if (kind == "sine")
      return phase_shifted_sine(amplitude, omega, phase_step, duration, dt,
                                sine_mode == "offset" ? SineMode::kOffset
                                                      : SineMode::kSigned);
    if (kind == "pure-translation")
      return pure_translation(amplitude, omega, duration, dt);
    if (kind == "translation-rotation")
      return translation_then_rotation(half_duration, amplitude, omega, dt);
    if (kind == "orbit") {
      OrbitFollowerSpec spec;
      spec.setpoint_amplitude = orbit_amplitude;
      spec.heading_amplitude = orbit_heading;
      spec.period = orbit_period;
      spec.duration = duration;
      spec.dt = dt;
      spec.noise_seed = SeededRng::derive(seed, 11);
      return pd_orbit_follower(spec, plant, initial_state);
    }
    if (csv_path.empty())
      throw ConfigurationError("--input csv requires --input-csv");
    return load_input_csv(csv_path);
  }
};

struct PlantOptions {
  double side_length = 0.1;
  double moment_arm = 0.0;  // 0 -> L/2
  std::string kinematics = "direct";
  bool friction = false;
  double c_translation = 0.0;
  double c_rotation = 0.0;
  double bias_cross = 0.0;
  double dt = 0.01;

  void attach(CLI::App* cmd) {
    cmd->add_option("--side-length", side_length, "module side length L [m]");
    cmd->add_option("--moment-arm", moment_arm, "nozzle moment arm d [m] (default L/2)");
    cmd->add_option("--kinematics", kinematics, "direct | rotated")
        ->check(CLI::IsMember({"direct", "rotated"}));
    cmd->add_flag("--friction", friction, "enable the surface model");
    cmd->add_option("--c-translation", c_translation, "translation drag [N per m/s]");
    cmd->add_option("--c-rotation", c_rotation, "rotational drag [N m per rad/s]");
    cmd->add_option("--bias-cross", bias_cross,
                    "translation-to-rotation bias [N m per m/s]");
    cmd->add_option("--integrator-dt", dt, "integration step [s]");
  }

  PlantConfig build() const {
    PlantConfig plant;
    plant.model.geometry = moment_arm > 0.0
                               ? ModuleGeometry(side_length, moment_arm)
                               : ModuleGeometry(side_length);
    plant.model.kinematics = kinematics == "rotated" ? KinematicsMode::kRotated
                                                     : KinematicsMode::kDirect;
    plant.model.friction.enabled = friction;
    plant.model.friction.c_translation = c_translation;
    plant.model.friction.c_rotation = c_rotation;
    plant.model.friction.bias_cross = bias_cross;
    plant.model.friction.validate();
    plant.dt = dt;
    return plant;
  }
};

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw ConfigurationError("cannot write " + out_path);
    out << j.dump(2) << '\n';
  }
}

// Loads a dataset and converts a duty-domain input through the named curve
// set ("tpods-60psi" or a JSON file with an array of curves).
DatasetBundle load_ready_dataset(const std::string& dir, const std::string& curves) {
  DatasetBundle bundle = load_dataset(dir);
  if (bundle.input.domain == InputDomain::kDuty) {
    if (curves == "tpods-60psi") {
      bundle.input = to_force_domain(bundle.input, tpods_60psi_curves());
    } else {
      ThrustCurveSet set;
      std::ifstream in(curves);
      if (!in) throw ConfigurationError("cannot open curve set " + curves);
      json j;
      in >> j;
      for (const auto& item : j) {
        ThrustCurve curve;
        curve.order = item.at("order").get<int>();
        curve.active_nozzles = item.at("active_nozzles").get<int>();
        curve.coefficients = item.at("coefficients").get<std::vector<double>>();
        set.insert(curve);
      }
      bundle.input = to_force_domain(bundle.input, set);
    }
  }
  return bundle;
}

PriorInfo prior_from(double prior_mass, double prior_izz) {
  PriorInfo prior;
  prior.x0_ref = Vec8::Zero();
  prior.x0_ref[kMass] = prior_mass;
  prior.x0_ref[kIzz] = prior_izz;
  prior.p0_bar = benchmark_initial_std().cwiseAbs2().asDiagonal();
  return prior;
}

json batch_result_json(const BatchResult& result) {
  const ResidualStats stats = residual_analysis(result);
  json j;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["final_correction_norm"] = result.final_correction_norm;
  j["estimate"] = {{"x_m", result.x0_hat[kX]},
                   {"y_m", result.x0_hat[kY]},
                   {"psi_rad", result.x0_hat[kPsi]},
                   {"u_mps", result.x0_hat[kU]},
                   {"v_mps", result.x0_hat[kV]},
                   {"r_radps", result.x0_hat[kR]},
                   {"mass_kg", result.x0_hat[kMass]},
                   {"izz_kgm2", result.x0_hat[kIzz]}};
  j["sigma"] = {{"mass_kg", std::sqrt(result.p0(kMass, kMass))},
                {"izz_kgm2", std::sqrt(result.p0(kIzz, kIzz))}};
  j["residuals"] = {{"mean", {stats.mean[0], stats.mean[1], stats.mean[2]}},
                    {"std", {stats.stddev[0], stats.stddev[1], stats.stddev[2]}},
                    {"zscore", {stats.zscore[0], stats.zscore[1], stats.zscore[2]}},
                    {"zero_mean", {stats.zero_mean[0], stats.zero_mean[1],
                                   stats.zero_mean[2]}}};
  return j;
}

json ekf_result_json(const EkfResult& result, const DatasetMeta& meta) {
  const auto last = result.times.size() - 1;
  json j;
  j["steps"] = result.times.size();
  j["final"] = {{"mass_kg", result.means(kMass, last)},
                {"izz_kgm2", result.means(kIzz, last)},
                {"sigma_mass_kg",
                 std::sqrt(result.covs.back()(kMass, kMass))},
                {"sigma_izz_kgm2", std::sqrt(result.covs.back()(kIzz, kIzz))}};
  if (std::isfinite(result.rmse_mass)) {
    j["rmse_mass_kg"] = result.rmse_mass;
    j["rmse_izz_kgm2"] = result.rmse_izz;
  }
  if (meta.true_mass > 0.0) {
    j["true"] = {{"mass_kg", meta.true_mass}, {"izz_kgm2", meta.true_izz}};
    j["final_rel_error"] = {
        {"mass", std::abs(result.means(kMass, last) - meta.true_mass) /
                     meta.true_mass},
        {"izz", std::abs(result.means(kIzz, last) - meta.true_izz) /
                    meta.true_izz}};
  }
  return j;
}

void write_residuals_csv(const BatchResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigurationError("cannot write " + path);
  out << "time_s,res_x_m,res_y_m,res_psi_rad\n";
  for (Eigen::Index l = 0; l < result.residual_times.size(); ++l)
    out << format_double(result.residual_times[l]) << ','
        << format_double(result.residuals(0, l)) << ','
        << format_double(result.residuals(1, l)) << ','
        << format_double(result.residuals(2, l)) << '\n';
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Planar thruster-module mass and inertia identification"};
  app.require_subcommand(1);

  // --- simulate ---
  auto* simulate = app.add_subcommand(
      "simulate", "generate a synthetic dataset bundle (truth + measurements)");
  InputOptions sim_input;
  PlantOptions sim_plant;
  std::string sim_out;
  double sim_mass = kNominalMass, sim_izz = kNominalIzz;
  double sim_rate = 50.0, noise_x = 0.01, noise_y = 0.01, noise_psi_deg = 1.0;
  std::uint64_t sim_seed = 0;
  simulate->add_option("--out", sim_out, "output dataset directory")->required();
  simulate->add_option("--mass", sim_mass, "true mass [kg]");
  simulate->add_option("--izz", sim_izz, "true moment of inertia [kg m^2]");
  simulate->add_option("--rate", sim_rate, "measurement rate [Hz]");
  simulate->add_option("--noise-x", noise_x, "x noise std [m]");
  simulate->add_option("--noise-y", noise_y, "y noise std [m]");
  simulate->add_option("--noise-psi-deg", noise_psi_deg, "heading noise std [deg]");
  simulate->add_option("--seed", sim_seed, "RNG seed");
  sim_plant.attach(simulate);
  sim_input.attach(simulate);
  simulate->callback([&] {
    ScenarioConfig scenario;
    scenario.plant = sim_plant.build();
    scenario.true_mass = sim_mass;
    scenario.true_izz = sim_izz;
    scenario.noise_std = Vec3(noise_x, noise_y, deg2rad(noise_psi_deg));
    scenario.meas_rate_hz = sim_rate;
    scenario.seed = sim_seed;
    Vec8 x0 = Vec8::Zero();
    x0[kMass] = sim_mass;
    x0[kIzz] = sim_izz;
    scenario.initial_state = x0;
    scenario.input = sim_input.build(scenario.plant.model, x0, sim_seed);
    const DatasetBundle bundle = generate_synthetic(scenario);
    save_dataset(bundle, sim_out);
    json j;
    j["dataset"] = sim_out;
    j["measurements"] = bundle.measurements.size();
    j["duration_s"] = bundle.measurements.back().t;
    emit(j, "");
  });

  // --- fit-thrust ---
  auto* fit = app.add_subcommand(
      "fit-thrust", "fit a duty-to-thrust polynomial from bench data");
  std::string fit_bench, fit_out;
  int fit_order = 3, fit_nozzles = 1;
  std::vector<int> fit_compare;
  fit->add_option("--bench", fit_bench, "bench CSV (time_s,duty_pct,thrust_gf)")
      ->required();
  fit->add_option("--order", fit_order, "polynomial order");
  fit->add_option("--active-nozzles", fit_nozzles, "simultaneously active nozzles");
  fit->add_option("--out", fit_out, "output curve JSON");
  fit->add_option("--compare-orders", fit_compare,
                  "orders to compare by residual RMS");
  fit->callback([&] {
    auto samples = load_thrust_samples_csv(fit_bench);
    std::vector<ThrustSample> in_band;
    for (const auto& s : samples)
      if (s.duty >= 10.0 && s.duty <= 90.0) in_band.push_back(s);
    json j;
    j["samples_total"] = samples.size();
    j["samples_in_band"] = in_band.size();
    const ThrustCurve curve = fit_thrust_curve(in_band, fit_order, fit_nozzles);
    j["curve"] = {{"order", curve.order},
                  {"active_nozzles", curve.active_nozzles},
                  {"coefficients", curve.coefficients}};
    if (!fit_compare.empty()) {
      const FitOrderReport report = compare_fit_orders(in_band, fit_compare,
                                                       fit_nozzles);
      json orders = json::array();
      for (const auto& entry : report.entries)
        orders.push_back({{"order", entry.order}, {"rms_gf", entry.rms}});
      j["order_comparison"] = orders;
      j["flagged_order"] = report.flagged_order;
    }
    if (!fit_out.empty()) save_thrust_curve_json(curve, fit_out);
    emit(j, "");
  });

  // --- sensitivity ---
  auto* sens = app.add_subcommand(
      "sensitivity", "propagate parameter sensitivities and score observability");
  InputOptions sens_input;
  PlantOptions sens_plant;
  std::string sens_csv;
  double sens_mass = kNominalMass, sens_izz = kNominalIzz, sens_threshold = 10.0;
  double sens_noise_x = 0.01, sens_noise_y = 0.01, sens_noise_psi_deg = 1.0;
  std::uint64_t sens_seed = 0;
  sens->add_option("--mass", sens_mass, "reference mass [kg]");
  sens->add_option("--izz", sens_izz, "reference inertia [kg m^2]");
  sens->add_option("--threshold", sens_threshold, "observability threshold");
  sens->add_option("--noise-x", sens_noise_x, "x noise std [m]");
  sens->add_option("--noise-y", sens_noise_y, "y noise std [m]");
  sens->add_option("--noise-psi-deg", sens_noise_psi_deg, "heading noise std [deg]");
  sens->add_option("--out-csv", sens_csv, "sensitivity history CSV");
  sens->add_option("--seed", sens_seed, "seed for orbit feedback noise");
  sens_plant.attach(sens);
  sens_input.attach(sens);
  sens->callback([&] {
    const PlantConfig plant = sens_plant.build();
    Vec8 x0 = Vec8::Zero();
    x0[kMass] = sens_mass;
    x0[kIzz] = sens_izz;
    const InputSequence input = sens_input.build(plant.model, x0, sens_seed);
    const SensitivityHistory history =
        propagate_sensitivity(x0, input, plant.model, plant.dt);
    const Vec3 noise(sens_noise_x, sens_noise_y, deg2rad(sens_noise_psi_deg));
    const ObservabilityReport rep =
        observability_score(history, noise, sens_threshold);
    if (!sens_csv.empty()) save_sensitivity_csv(history, sens_csv);
    json j;
    j["scores"] = {{"mass", rep.scores[0]}, {"izz", rep.scores[1]}};
    j["threshold"] = rep.threshold;
    j["verdict"] = {
        {"mass", rep.observable[0] ? "observable" : "weakly observable"},
        {"izz", rep.observable[1] ? "observable" : "weakly observable"}};
    emit(j, "");
  });

  // --- estimate-batch ---
  auto* batch = app.add_subcommand("estimate-batch",
                                   "iterated batch least squares on a dataset");
  std::string batch_dir, batch_out, batch_res_csv, batch_curves = "tpods-60psi";
  std::string batch_plant = "ideal";
  double batch_prior_mass = kPriorMass, batch_prior_izz = kPriorIzz;
  double batch_threshold = 1e-8;
  int batch_max_iter = 25;
  batch->add_option("--dataset", batch_dir, "dataset directory")->required();
  batch->add_option("--prior-mass", batch_prior_mass, "prior mass [kg]");
  batch->add_option("--prior-izz", batch_prior_izz, "prior inertia [kg m^2]");
  batch->add_option("--threshold", batch_threshold, "correction exit threshold");
  batch->add_option("--max-iter", batch_max_iter, "iteration cap");
  batch->add_option("--curves", batch_curves,
                    "curve set for duty inputs: tpods-60psi or JSON path");
  batch->add_option("--plant", batch_plant,
                    "estimation model: ideal | meta (attach the dataset's "
                    "surface model)")
      ->check(CLI::IsMember({"ideal", "meta"}));
  batch->add_option("--out", batch_out, "result JSON path (default stdout)");
  batch->add_option("--residuals-csv", batch_res_csv, "per-measurement residual CSV");
  batch->callback([&] {
    const DatasetBundle bundle = load_ready_dataset(batch_dir, batch_curves);
    PlantConfig plant;
    plant.dt = bundle.meta.integrator_dt;
    plant.model.geometry = bundle.meta.geometry;
    if (batch_plant == "meta") {
      plant.model.friction = bundle.meta.friction;
      plant.model.kinematics = bundle.meta.kinematics;
    }
    BatchOptions options;
    options.threshold = batch_threshold;
    options.max_iter = batch_max_iter;
    json j;
    BatchResult result;
    try {
      result = batch_least_squares(bundle.measurements, bundle.input,
                                   prior_from(batch_prior_mass, batch_prior_izz),
                                   plant, options);
    } catch (const NonConvergenceError& err) {
      result = err.last;
      j["error"] = err.what();
    }
    j.update(batch_result_json(result));
    if (bundle.meta.true_mass > 0.0) {
      j["true"] = {{"mass_kg", bundle.meta.true_mass},
                   {"izz_kgm2", bundle.meta.true_izz}};
      j["rel_error"] = {
          {"mass", std::abs(result.x0_hat[kMass] - bundle.meta.true_mass) /
                       bundle.meta.true_mass},
          {"izz", std::abs(result.x0_hat[kIzz] - bundle.meta.true_izz) /
                      bundle.meta.true_izz}};
    }
    if (!batch_res_csv.empty()) write_residuals_csv(result, batch_res_csv);
    emit(j, batch_out);
    if (!result.converged) throw ValidationError("batch did not converge");
  });

  // --- estimate-ekf / estimate-seeded (shared options) ---
  struct EkfCliOptions {
    std::string dir, out, steps_csv, curves = "tpods-60psi", plant = "ideal";
    std::string wrap = "auto";
    double init_mass = kPriorMass, init_izz = kPriorIzz;
    double q_mass = 1e-4;
    bool draw_init = false;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
      cmd->add_option("--dataset", dir, "dataset directory")->required();
      cmd->add_option("--init-mass", init_mass, "initial mass mean [kg]");
      cmd->add_option("--init-izz", init_izz, "initial inertia mean [kg m^2]");
      cmd->add_option("--q-mass", q_mass, "mass process noise [kg^2/Hz]");
      cmd->add_flag("--draw-init", draw_init,
                    "sample the initial mean from the benchmark distribution");
      cmd->add_option("--seed", seed, "seed for --draw-init");
      cmd->add_option("--curves", curves,
                      "curve set for duty inputs: tpods-60psi or JSON path");
      cmd->add_option("--plant", plant, "estimation model: ideal | meta")
          ->check(CLI::IsMember({"ideal", "meta"}));
      cmd->add_option("--wrap", wrap,
                      "heading innovation wrapping: auto | on | off")
          ->check(CLI::IsMember({"auto", "on", "off"}));
      cmd->add_option("--out", out, "result JSON path (default stdout)");
      cmd->add_option("--steps-csv", steps_csv, "per-step mean/sigma CSV");
    }

    std::pair<DatasetBundle, EkfConfig> prepare(PlantConfig* plant_out) const {
      DatasetBundle bundle = load_ready_dataset(dir, curves);
      PlantConfig pc;
      pc.dt = bundle.meta.integrator_dt;
      pc.model.geometry = bundle.meta.geometry;
      if (plant == "meta") {
        pc.model.friction = bundle.meta.friction;
        pc.model.kinematics = bundle.meta.kinematics;
      }
      EkfConfig config = benchmark_ekf_config();
      config.measurement_cov.reset();  // use per-record covariances
      config.process_noise_q(kMass, kMass) = q_mass;
      config.initial_mean[kMass] = init_mass;
      config.initial_mean[kIzz] = init_izz;
      if (draw_init) {
        SeededRng rng(SeededRng::derive(seed, 12));
        const Vec8 std = benchmark_initial_std();
        for (int k = 0; k < kStateDim; ++k)
          config.initial_mean[k] += std[k] * rng.gaussian();
        while (config.initial_mean[kMass] <= 0.05)
          config.initial_mean[kMass] = init_mass + std[kMass] * rng.gaussian();
        while (config.initial_mean[kIzz] <= 1e-4)
          config.initial_mean[kIzz] = init_izz + std[kIzz] * rng.gaussian();
      }
      config.wrap_heading_innovation =
          wrap == "auto" ? bundle.meta.angles_wrapped : wrap == "on";
      *plant_out = pc;
      return {std::move(bundle), config};
    }
  };

  auto* ekf = app.add_subcommand("estimate-ekf",
                                 "extended Kalman filter over a dataset");
  EkfCliOptions ekf_opts;
  ekf_opts.attach(ekf);
  ekf->callback([&] {
    PlantConfig plant;
    auto [bundle, config] = ekf_opts.prepare(&plant);
    const EkfResult result =
        ekf_run(bundle.measurements, bundle.input, config, plant,
                bundle.truth.empty() ? nullptr : &bundle.truth);
    if (!ekf_opts.steps_csv.empty())
      save_ekf_steps_csv(result, bundle.truth.empty() ? nullptr : &bundle.truth,
                         ekf_opts.steps_csv);
    emit(ekf_result_json(result, bundle.meta), ekf_opts.out);
  });

  auto* seeded = app.add_subcommand(
      "estimate-seeded", "20 s batch seed followed by a full-run EKF");
  EkfCliOptions seeded_opts;
  double seed_duration = 20.0, seeded_q_mass = 0.0;
  seeded_opts.attach(seeded);
  seeded->add_option("--seed-duration", seed_duration, "batch window [s]");
  seeded->add_option("--seeded-q-mass", seeded_q_mass,
                     "mass process noise for the seeded filter [kg^2/Hz]");
  seeded->callback([&] {
    PlantConfig plant;
    auto [bundle, config] = seeded_opts.prepare(&plant);
    config.process_noise_q(kMass, kMass) = seeded_q_mass;
    const SeededEkfResult result = ls_seeded_ekf(
        bundle.measurements, bundle.input, seed_duration, config, plant,
        prior_from(seeded_opts.init_mass, seeded_opts.init_izz),
        bundle.truth.empty() ? nullptr : &bundle.truth);
    if (!seeded_opts.steps_csv.empty())
      save_ekf_steps_csv(result.filter,
                         bundle.truth.empty() ? nullptr : &bundle.truth,
                         seeded_opts.steps_csv);
    json j = ekf_result_json(result.filter, bundle.meta);
    j["seed_window"] = {{"duration_s", seed_duration},
                        {"iterations", result.seed.iterations},
                        {"mass_kg", result.seed.x0_hat[kMass]},
                        {"izz_kgm2", result.seed.x0_hat[kIzz]}};
    emit(j, seeded_opts.out);
  });

  // --- montecarlo ---
  auto* mc = app.add_subcommand("montecarlo",
                                "randomized-parameter filter consistency campaign");
  int mc_runs = 500, mc_threads = 0;
  std::uint64_t mc_seed = 42;
  double mc_variation = 0.5;
  std::string mc_csv, mc_out;
  mc->add_option("--runs", mc_runs, "number of runs");
  mc->add_option("--seed", mc_seed, "campaign seed");
  mc->add_option("--threads", mc_threads, "worker threads (0 = auto)");
  mc->add_option("--variation", mc_variation, "parameter variation fraction");
  mc->add_option("--out-csv", mc_csv, "per-step aggregate CSV");
  mc->add_option("--out", mc_out, "summary JSON path (default stdout)");
  mc->callback([&] {
    McConfig cfg = mc500_config(mc_seed, mc_runs, mc_threads);
    cfg.param_variation = mc_variation;
    const McReport rep = run_monte_carlo(cfg);
    const ConsistencySeries series = consistency_stats(rep);
    if (!mc_csv.empty()) save_mc_report_csv(rep, mc_csv);
    const auto last = rep.times.size() - 1;
    double min_containment = 1.0;
    for (Eigen::Index l = 0; l < rep.times.size(); ++l)
      min_containment = std::min(min_containment, rep.containment_mass[l]);
    json j;
    j["requested_runs"] = rep.requested_runs;
    j["effective_runs"] = rep.effective_runs;
    j["failed_runs"] = rep.failed_runs;
    j["final"] = {{"mean_err_mass_kg", rep.mean_err_mass[last]},
                  {"mean_err_izz_kgm2", rep.mean_err_izz[last]},
                  {"avg_sigma_mass_kg", std::sqrt(rep.avg_var_mass[last])},
                  {"avg_sigma_izz_kgm2", std::sqrt(rep.avg_var_izz[last])}};
    j["containment_mass_min"] = min_containment;
    j["consistency_flags"] = {{"mass", series.flagged_mass.size()},
                              {"izz", series.flagged_izz.size()},
                              {"steps", rep.times.size()}};
    emit(j, mc_out);
  });

  // --- ingest-pose ---
  auto* ingest = app.add_subcommand(
      "ingest-pose",
      "assemble a dataset bundle from a motion-capture pose log and an input CSV");
  PlantOptions ingest_plant;
  std::string ingest_pose, ingest_input, ingest_out;
  double ingest_noise_x = 0.01, ingest_noise_y = 0.01, ingest_noise_psi_deg = 1.0;
  double ingest_true_mass = 0.0, ingest_true_izz = 0.0;
  bool ingest_no_unwrap = false;
  ingest->add_option("--pose", ingest_pose, "pose CSV (time_s,x_m,y_m,psi,unit_psi)")
      ->required();
  ingest->add_option("--input", ingest_input, "applied input CSV")->required();
  ingest->add_option("--out", ingest_out, "output dataset directory")->required();
  ingest->add_option("--noise-x", ingest_noise_x, "x noise std [m]");
  ingest->add_option("--noise-y", ingest_noise_y, "y noise std [m]");
  ingest->add_option("--noise-psi-deg", ingest_noise_psi_deg,
                     "heading noise std [deg]");
  ingest->add_option("--true-mass", ingest_true_mass,
                     "reference mass from the scale [kg]");
  ingest->add_option("--true-izz", ingest_true_izz,
                     "reference inertia from the swing test [kg m^2]");
  ingest->add_flag("--no-unwrap", ingest_no_unwrap,
                   "keep the heading series wrapped");
  ingest_plant.attach(ingest);
  ingest->callback([&] {
    const PoseLog log = ingest_pose_log(ingest_pose);
    for (const auto& warning : log.warnings)
      std::fprintf(stderr, "warning: %s\n", warning.c_str());
    DatasetBundle bundle;
    bundle.measurements = log.records;
    const Vec3 noise(ingest_noise_x, ingest_noise_y, deg2rad(ingest_noise_psi_deg));
    const Mat3 r_cov = noise.cwiseAbs2().asDiagonal();
    for (auto& rec : bundle.measurements) rec.r_cov = r_cov;
    // Batch replay needs a continuous heading series; undo sensor wrapping.
    if (!ingest_no_unwrap) {
      double offset = 0.0;
      for (std::size_t l = 1; l < bundle.measurements.size(); ++l) {
        const double step = log.records[l].z[2] - log.records[l - 1].z[2];
        if (step > kPi) offset -= 2.0 * kPi;
        if (step < -kPi) offset += 2.0 * kPi;
        bundle.measurements[l].z[2] = log.records[l].z[2] + offset;
      }
    }
    bundle.input = load_input_csv(ingest_input);
    const PlantConfig plant = ingest_plant.build();
    bundle.meta.geometry = plant.model.geometry;
    bundle.meta.friction = plant.model.friction;
    bundle.meta.kinematics = plant.model.kinematics;
    bundle.meta.integrator_dt = plant.dt;
    bundle.meta.noise_std = noise;
    bundle.meta.true_mass = ingest_true_mass;
    bundle.meta.true_izz = ingest_true_izz;
    bundle.meta.meas_rate_hz = log.rate_hz;
    bundle.meta.angles_wrapped = ingest_no_unwrap;
    save_dataset(bundle, ingest_out);
    json j;
    j["dataset"] = ingest_out;
    j["records"] = bundle.measurements.size();
    j["rate_hz"] = log.rate_hz;
    j["warnings"] = log.warnings.size();
    emit(j, "");
  });

  // --- swing-moi ---
  auto* swing = app.add_subcommand(
      "swing-moi", "moment of inertia from a bifilar swing test");
  swing->set_help_flag("--help", "print help");  // frees -h / --h for the length
  double swing_m = 0.0, swing_d = 0.0, swing_h = 0.0, swing_t = 0.0;
  double swing_g = 9.80665, swing_m_unc = 0.0025;
  int swing_cycles = 10;
  std::vector<double> swing_obs;
  swing->add_option("--m", swing_m, "module mass [kg]")->required();
  swing->add_option("--D", swing_d, "string separation [m]")->required();
  swing->add_option("--h", swing_h, "unsupported string length [m]")->required();
  swing->add_option("--T", swing_t, "one full oscillation period [s]");
  swing->add_option("--observations", swing_obs,
                    "stopwatch times for --cycles oscillations each [s]");
  swing->add_option("--cycles", swing_cycles, "oscillations per observation");
  swing->add_option("--g", swing_g, "gravity [m/s^2]");
  swing->add_option("--m-uncertainty", swing_m_unc, "scale accuracy [kg]");
  swing->callback([&] {
    SwingTestConfig cfg;
    cfg.mass = swing_m;
    cfg.gravity = swing_g;
    cfg.string_separation = swing_d;
    cfg.string_length = swing_h;
    cfg.period = !swing_obs.empty() ? average_period(swing_obs, swing_cycles)
                                    : swing_t;
    const double izz = swing_test_moi(cfg);
    json j;
    j["izz_kgm2"] = izz;
    j["period_s"] = cfg.period;
    j["mass_uncertainty_kg"] = swing_m_unc;
    j["izz_uncertainty_from_mass_kgm2"] = izz * swing_m_unc / cfg.mass;
    emit(j, "");
  });

  // --- replicate ---
  auto* rep = app.add_subcommand(
      "replicate", "run a named benchmark end to end and report the numbers");
  std::string preset;
  std::uint64_t rep_seed = 7;
  int rep_seeds = 1, rep_runs = 500, rep_threads = 0;
  std::string rep_out;
  rep->add_option("preset", preset,
                  "table4-sine | table4-orbit | ekf-rmse | seeded-ekf | mc500")
      ->required()
      ->check(CLI::IsMember(
          {"table4-sine", "table4-orbit", "ekf-rmse", "seeded-ekf", "mc500"}));
  rep->add_option("--seed", rep_seed, "first seed");
  rep->add_option("--seeds", rep_seeds, "number of consecutive seeds");
  rep->add_option("--runs", rep_runs, "Monte Carlo runs (mc500 only)");
  rep->add_option("--threads", rep_threads, "worker threads (mc500 only)");
  rep->add_option("--out", rep_out, "output JSON path (default stdout)");
  rep->callback([&] {
    json j;
    j["preset"] = preset;
    if (preset == "mc500") {
      const McConfig cfg = mc500_config(rep_seed, rep_runs, rep_threads);
      const McReport report = run_monte_carlo(cfg);
      const auto last = report.times.size() - 1;
      double min_containment = 1.0;
      for (Eigen::Index l = 0; l < report.times.size(); ++l)
        min_containment = std::min(min_containment, report.containment_mass[l]);
      j["effective_runs"] = report.effective_runs;
      j["final_mean_err_mass_kg"] = report.mean_err_mass[last];
      j["final_mean_err_izz_kgm2"] = report.mean_err_izz[last];
      j["final_avg_sigma_mass_kg"] = std::sqrt(report.avg_var_mass[last]);
      j["final_avg_sigma_izz_kgm2"] = std::sqrt(report.avg_var_izz[last]);
      j["containment_mass_min"] = min_containment;
    } else {
      json runs = json::array();
      double sum_a = 0.0, sum_b = 0.0;
      for (int k = 0; k < rep_seeds; ++k) {
        const std::uint64_t seed = rep_seed + static_cast<std::uint64_t>(k);
        json entry;
        entry["seed"] = seed;
        if (preset == "table4-sine") {
          const BatchBenchmarkResult r = run_table4_sine(seed);
          entry.update(to_json(r));
          sum_a += (r.mass_estimate - kNominalMass) / kNominalMass;
          sum_b += (r.izz_estimate - kNominalIzz) / kNominalIzz;
        } else if (preset == "table4-orbit") {
          const BatchBenchmarkResult r = run_table4_orbit(seed);
          entry.update(to_json(r));
          sum_a += r.mass_rel_error;
          sum_b += r.izz_rel_error;
        } else if (preset == "ekf-rmse") {
          const EkfBenchmarkResult r = run_ekf_rmse(seed);
          entry.update(to_json(r));
          sum_a += r.rmse_mass;
          sum_b += r.rmse_izz;
        } else {
          const SeededEkfBenchmarkResult r = run_seeded_ekf(seed);
          entry.update(to_json(r));
          sum_a += r.seeded.rmse_mass;
          sum_b += r.seeded.rmse_izz;
        }
        runs.push_back(entry);
      }
      j["runs"] = runs;
      const double n = static_cast<double>(rep_seeds);
      if (preset == "table4-sine") {
        j["mean_signed_rel_error"] = {{"mass", sum_a / n}, {"izz", sum_b / n}};
      } else if (preset == "table4-orbit") {
        j["mean_rel_error"] = {{"mass", sum_a / n}, {"izz", sum_b / n}};
      } else {
        j["mean_rmse"] = {{"mass_kg", sum_a / n}, {"izz_kgm2", sum_b / n}};
      }
    }
    emit(j, rep_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
