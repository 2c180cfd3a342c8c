#include "inertiaid/presets.hpp"

#include <cmath>

#include "inertiaid/rng.hpp"

namespace inertiaid {

namespace {

constexpr std::uint64_t kStreamController = 11;
constexpr std::uint64_t kStreamInitialDraw = 12;

PlantConfig estimation_plant() {
  PlantConfig plant;
  plant.model.kinematics = KinematicsMode::kDirect;
  plant.dt = 0.01;
  return plant;
}

PriorInfo benchmark_prior() {
  PriorInfo prior;
  prior.x0_ref = Vec8::Zero();
  prior.x0_ref[kMass] = kPriorMass;
  prior.x0_ref[kIzz] = kPriorIzz;
  prior.dx0_bar = Vec8::Zero();
  prior.p0_bar = benchmark_initial_std().cwiseAbs2().asDiagonal();
  return prior;
}

BatchBenchmarkResult summarize_batch(const BatchResult& batch, bool converged) {
  BatchBenchmarkResult out;
  out.mass_estimate = batch.x0_hat[kMass];
  out.izz_estimate = batch.x0_hat[kIzz];
  out.mass_rel_error = std::abs(out.mass_estimate - kNominalMass) / kNominalMass;
  out.izz_rel_error = std::abs(out.izz_estimate - kNominalIzz) / kNominalIzz;
  out.converged = converged;
  out.iterations = batch.iterations;
  out.residuals = residual_analysis(batch);
  out.any_channel_biased = !out.residuals.zero_mean[0] ||
                           !out.residuals.zero_mean[1] ||
                           !out.residuals.zero_mean[2];
  return out;
}

Vec8 draw_initial_mean(std::uint64_t seed) {
  SeededRng rng(SeededRng::derive(seed, kStreamInitialDraw));
  const Vec8 std = benchmark_initial_std();
  Vec8 mean = Vec8::Zero();
  mean[kMass] = kPriorMass;
  mean[kIzz] = kPriorIzz;
  Vec8 drawn;
  for (int k = 0; k < kStateDim; ++k) drawn[k] = mean[k] + std[k] * rng.gaussian();
  // The filter mean must stay physical; redraw the rare nonpositive samples.
  while (drawn[kMass] <= 0.05) drawn[kMass] = mean[kMass] + std[kMass] * rng.gaussian();
  while (drawn[kIzz] <= 1e-4) drawn[kIzz] = mean[kIzz] + std[kIzz] * rng.gaussian();
  return drawn;
}

}  // namespace

Vec8 benchmark_initial_std() {
  Vec8 std;
  std << 0.1, 0.1, deg2rad(5.0), 0.1, 0.1, deg2rad(2.0), 1.0, 2e-3;
  return std;
}

EkfConfig benchmark_ekf_config() {
  EkfConfig config;
  config.initial_mean = Vec8::Zero();
  config.initial_mean[kMass] = kPriorMass;
  config.initial_mean[kIzz] = kPriorIzz;
  config.initial_cov = benchmark_initial_std().cwiseAbs2().asDiagonal();
  config.process_noise_q = Mat8::Zero();
  config.process_noise_q(kMass, kMass) = 1e-4;  // [kg^2/Hz]
  // Physical projection bounds for this module class; the benchmark draws
  // can start far enough off that unguarded linearization ratchets izz
  // toward zero and destroys the covariance.
  config.mass_floor = 0.05;  // [kg]
  config.izz_floor = 5e-4;   // [kg m^2]
  Mat3 r = Mat3::Zero();
  r(0, 0) = 1e-4;
  r(1, 1) = 1e-4;
  r(2, 2) = deg2rad(1.0) * deg2rad(1.0);
  config.measurement_cov = r;
  return config;
}

ScenarioConfig sine_benchmark_scenario(std::uint64_t seed, double meas_rate_hz) {
  ScenarioConfig scenario;
  scenario.plant = estimation_plant();
  scenario.true_mass = kNominalMass;
  scenario.true_izz = kNominalIzz;
  scenario.initial_state = Vec8::Zero();
  scenario.noise_std = Vec3(0.01, 0.01, deg2rad(1.0));
  scenario.meas_rate_hz = meas_rate_hz;
  // The benchmark sine amplitude: 25 gram-force per thruster, the unit
  // family of the thrust bench.
  scenario.input =
      phase_shifted_sine(25.0 * kGramForceToNewton, 1.0, kPi / 4.0, 120.0, 0.01);
  scenario.seed = seed;
  return scenario;
}

ScenarioConfig orbit_benchmark_scenario(std::uint64_t seed, double meas_rate_hz) {
  ScenarioConfig scenario;
  scenario.plant = estimation_plant();
  // The closed-loop plant behaves like the physical rig: frame-consistent
  // kinematics plus surface friction and the contact-asymmetry moment that
  // couples translation into rotation. The estimators keep the ideal
  // frictionless direct model, so this dataset carries unmodeled effects.
  scenario.plant.model.kinematics = KinematicsMode::kRotated;
  scenario.plant.model.friction.enabled = true;
  scenario.plant.model.friction.c_translation = 0.05;  // [N per m/s]
  scenario.plant.model.friction.c_rotation = 1e-4;     // [N m per rad/s]
  scenario.plant.model.friction.bias_cross = 5e-4;     // [N m per m/s]
  scenario.true_mass = kNominalMass;
  scenario.true_izz = kNominalIzz;
  scenario.initial_state = Vec8::Zero();
  scenario.noise_std = Vec3(0.01, 0.01, deg2rad(1.0));
  scenario.meas_rate_hz = meas_rate_hz;
  scenario.seed = seed;

  OrbitFollowerSpec spec;
  spec.setpoint_amplitude = 0.1;
  spec.heading_amplitude = 0.1;
  spec.period = 60.0;
  spec.duration = 120.0;
  spec.dt = 0.01;
  spec.noise_seed = SeededRng::derive(seed, kStreamController);

  Vec8 x0 = scenario.initial_state;
  x0[kMass] = scenario.true_mass;
  x0[kIzz] = scenario.true_izz;
  scenario.input = pd_orbit_follower(spec, scenario.plant.model, x0);
  return scenario;
}

BatchBenchmarkResult run_table4_sine(std::uint64_t seed) {
  const DatasetBundle bundle = generate_synthetic(sine_benchmark_scenario(seed));
  const BatchResult batch = batch_least_squares(bundle.measurements, bundle.input,
                                                benchmark_prior(), estimation_plant());
  return summarize_batch(batch, batch.converged);
}

BatchBenchmarkResult run_table4_orbit(std::uint64_t seed) {
  const DatasetBundle bundle = generate_synthetic(orbit_benchmark_scenario(seed));
  try {
    const BatchResult batch = batch_least_squares(
        bundle.measurements, bundle.input, benchmark_prior(), estimation_plant());
    return summarize_batch(batch, batch.converged);
  } catch (const NonConvergenceError& err) {
    return summarize_batch(err.last, false);
  }
}

namespace {

EkfBenchmarkResult summarize_ekf(const EkfResult& result) {
  EkfBenchmarkResult out;
  out.rmse_mass = result.rmse_mass;
  out.rmse_izz = result.rmse_izz;
  const auto last = result.times.size() - 1;
  out.final_mass_rel_error =
      std::abs(result.means(kMass, last) - kNominalMass) / kNominalMass;
  out.final_izz_rel_error =
      std::abs(result.means(kIzz, last) - kNominalIzz) / kNominalIzz;
  return out;
}

}  // namespace

EkfBenchmarkResult run_ekf_rmse(std::uint64_t seed) {
  const DatasetBundle bundle = generate_synthetic(sine_benchmark_scenario(seed));
  EkfConfig config = benchmark_ekf_config();
  config.initial_mean = draw_initial_mean(seed);
  config.wrap_heading_innovation = bundle.meta.angles_wrapped;
  const EkfResult result = ekf_run(bundle.measurements, bundle.input, config,
                                   estimation_plant(), &bundle.truth);
  return summarize_ekf(result);
}

SeededEkfBenchmarkResult run_seeded_ekf(std::uint64_t seed) {
  const DatasetBundle bundle = generate_synthetic(sine_benchmark_scenario(seed));
  EkfConfig config = benchmark_ekf_config();
  config.initial_mean = draw_initial_mean(seed);
  config.wrap_heading_innovation = bundle.meta.angles_wrapped;

  SeededEkfBenchmarkResult out;
  const EkfResult alone = ekf_run(bundle.measurements, bundle.input, config,
                                  estimation_plant(), &bundle.truth);
  out.ekf_alone = summarize_ekf(alone);

  // The batch seed supplies the full prior covariance, which removes the
  // reason to keep forgetting mass information; the seeded pass runs
  // without process noise.
  EkfConfig seeded_config = config;
  seeded_config.process_noise_q = Mat8::Zero();
  const SeededEkfResult seeded =
      ls_seeded_ekf(bundle.measurements, bundle.input, 20.0, seeded_config,
                    estimation_plant(), benchmark_prior(), &bundle.truth);
  out.seeded = summarize_ekf(seeded.filter);

  double max_corr = 0.0;
  for (int i = 0; i < kStateDim; ++i)
    for (int j = 0; j < i; ++j) {
      const double denom =
          std::sqrt(seeded.seed.p0(i, i) * seeded.seed.p0(j, j));
      if (denom > 0.0)
        max_corr = std::max(max_corr, std::abs(seeded.seed.p0(i, j)) / denom);
    }
  out.seed_max_abs_correlation = max_corr;
  return out;
}

McConfig mc500_config(std::uint64_t seed, int n_runs, int threads) {
  McConfig cfg;
  cfg.n_runs = n_runs;
  cfg.param_variation = 0.5;
  cfg.nominal_mass = kNominalMass;
  cfg.nominal_izz = kNominalIzz;
  cfg.initial_state = Vec8::Zero();
  // Translation for the first half, rotation for the second; a 60 s campaign
  // window keeps the prior-dominated transient below a tenth of the steps.
  cfg.input = translation_then_rotation(30.0, 0.2, kPi, 0.01);
  cfg.plant = estimation_plant();
  cfg.noise_std = Vec3(0.01, 0.01, deg2rad(1.0));
  cfg.meas_rate_hz = 50.0;
  cfg.accel_noise_std = 1e-3;
  cfg.alpha_noise_std = 1e-3;
  cfg.seed = seed;
  cfg.threads = threads;

  cfg.base = benchmark_ekf_config();
  cfg.base.measurement_cov.reset();  // per-record covariances
  // The campaign filter is exactly matched to the campaign truth model: the
  // parameters really are constant (no parameter process noise) and each run
  // starts at its drawn true values, so the claimed initial parameter
  // uncertainty is kept modest. Larger settings leave the sample-to-filter
  // variance ratio prior-dominated for most of the window and push the
  // linearized parameter updates into their nonlinear-bias regime.
  cfg.base.process_noise_q(kMass, kMass) = 0.0;
  cfg.base.initial_cov(kMass, kMass) = 0.25 * 0.25;
  cfg.base.initial_cov(kIzz, kIzz) = 2e-5 * 2e-5;
  // Match the truth-simulation disturbance level: a constant acceleration
  // over one measurement interval contributes sigma^2 dt of velocity
  // variance rate.
  const double q_vel = cfg.accel_noise_std * cfg.accel_noise_std / cfg.meas_rate_hz;
  cfg.base.process_noise_q(kU, kU) = q_vel;
  cfg.base.process_noise_q(kV, kV) = q_vel;
  cfg.base.process_noise_q(kR, kR) =
      cfg.alpha_noise_std * cfg.alpha_noise_std / cfg.meas_rate_hz;
  return cfg;
}

nlohmann::json to_json(const BatchBenchmarkResult& r) {
  nlohmann::json j;
  j["mass_estimate_kg"] = r.mass_estimate;
  j["izz_estimate_kgm2"] = r.izz_estimate;
  j["true_mass_kg"] = kNominalMass;
  j["true_izz_kgm2"] = kNominalIzz;
  j["mass_rel_error"] = r.mass_rel_error;
  j["izz_rel_error"] = r.izz_rel_error;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["residual_mean"] = {r.residuals.mean[0], r.residuals.mean[1], r.residuals.mean[2]};
  j["residual_std"] = {r.residuals.stddev[0], r.residuals.stddev[1],
                       r.residuals.stddev[2]};
  j["residual_zscore"] = {r.residuals.zscore[0], r.residuals.zscore[1],
                          r.residuals.zscore[2]};
  j["any_channel_biased"] = r.any_channel_biased;
  return j;
}

nlohmann::json to_json(const EkfBenchmarkResult& r) {
  nlohmann::json j;
  j["rmse_mass_kg"] = r.rmse_mass;
  j["rmse_izz_kgm2"] = r.rmse_izz;
  j["final_mass_rel_error"] = r.final_mass_rel_error;
  j["final_izz_rel_error"] = r.final_izz_rel_error;
  return j;
}

nlohmann::json to_json(const SeededEkfBenchmarkResult& r) {
  nlohmann::json j;
  j["seeded"] = to_json(r.seeded);
  j["ekf_alone"] = to_json(r.ekf_alone);
  j["seed_max_abs_correlation"] = r.seed_max_abs_correlation;
  return j;
}

}  // namespace inertiaid
