#pragma once

#include <cstdint>
#include <vector>

#include "inertiaid/estimators.hpp"
#include "inertiaid/excitation.hpp"
#include "inertiaid/input_sequence.hpp"
#include "inertiaid/types.hpp"

namespace inertiaid {

// Randomized-parameter campaign: each run draws true (mass, izz) uniformly
// within +-param_variation of the nominal values, simulates the truth with
// process noise, synthesizes measurements and runs the EKF initialized at
// the drawn true values.
struct McConfig {
  int n_runs = 500;
  double param_variation = 0.5;  // fraction of nominal, uniform band
  double nominal_mass = 2.268;   // [kg]
  double nominal_izz = 0.00378;  // [kg m^2]
  Vec8 initial_state = Vec8::Zero();  // pose/velocity part of the truth start
  EkfConfig base;                // initial covariance, Q, R template
  InputSequence input;           // force-domain excitation
  PlantConfig plant;
  Vec3 noise_std{0.01, 0.01, deg2rad(1.0)};
  double meas_rate_hz = 50.0;
  // Truth-simulation disturbance: per-interval constant random accelerations.
  double accel_noise_std = 1e-3;       // [m/s^2]
  double alpha_noise_std = 1e-3;       // [rad/s^2]
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
};

struct McReport {
  Eigen::VectorXd times;
  // Per-time-step aggregates across successful runs.
  Eigen::VectorXd mean_err_mass, mean_err_izz;
  Eigen::VectorXd avg_var_mass, avg_var_izz;       // filter-reported
  Eigen::VectorXd sample_var_mass, sample_var_izz;  // across runs
  Eigen::VectorXd containment_mass, containment_izz;  // 3-sigma fraction
  // Final-time estimation error per successful run (columns: mass, izz).
  Eigen::Matrix<double, Eigen::Dynamic, 2> final_errors;
  std::vector<int> failed_runs;
  int requested_runs = 0;
  int effective_runs = 0;
};

/// Runs the campaign; reproducible bit-for-bit from the seed regardless of
/// the number of worker threads. Failed runs are excluded from aggregates
/// and listed in the report.
McReport run_monte_carlo(const McConfig& config);

struct ConsistencySeries {
  Eigen::VectorXd times;
  Eigen::VectorXd ratio_mass, ratio_izz;  // sample var / average filter var
  std::vector<int> flagged_mass, flagged_izz;  // steps with ratio >2 or <0.5
};

/// Sample-to-filter variance ratio per step; near 1 signals a statistically
/// consistent filter. Requires at least 30 effective runs.
ConsistencySeries consistency_stats(const McReport& report);

}  // namespace inertiaid
