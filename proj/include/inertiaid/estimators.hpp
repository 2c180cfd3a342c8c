#pragma once

#include <array>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inertiaid/dynamics.hpp"
#include "inertiaid/input_sequence.hpp"
#include "inertiaid/types.hpp"

namespace inertiaid {

// Timestamped planar pose measurement with its noise covariance.
struct MeasurementRecord {
  double t = 0.0;
  Vec3 z = Vec3::Zero();        // x [m], y [m], psi [rad]
  Mat3 r_cov = Mat3::Identity();  // symmetric positive definite
};

// Truth trajectory attached to synthetic datasets (same grid as the
// measurements) for error/RMSE evaluation.
struct TruthTrajectory {
  Eigen::VectorXd times;
  Eigen::Matrix<double, kStateDim, Eigen::Dynamic> states;

  bool empty() const { return times.size() == 0; }
};

// Prior for the batch estimator: reference state x0*, prior deviation
// estimate dx0_bar and prior covariance P_bar.
struct PriorInfo {
  Vec8 x0_ref = Vec8::Zero();
  Vec8 dx0_bar = Vec8::Zero();
  Mat8 p0_bar = Mat8::Identity();
};

// Propagation setup shared by the estimators.
struct PlantConfig {
  PlantModel model{};
  double dt = 0.01;  // integrator step [s]
};

struct BatchOptions {
  double threshold = 1e-8;        // exit when max|dx0_hat| falls below
  int max_iter = 25;
  double divergence_factor = 10.;  // abort when the correction re-grows this much
};

struct BatchResult {
  Vec8 x0_hat = Vec8::Zero();
  Mat8 p0 = Mat8::Zero();
  int iterations = 0;
  double final_correction_norm = 0.0;  // max-abs of the last correction
  bool converged = false;
  Eigen::Matrix<double, kOutputDim, Eigen::Dynamic> residuals;  // at final reference
  Eigen::VectorXd residual_times;
  std::vector<double> cost_history;  // weighted cost J per iteration
};

// Batch iteration ran out of iterations or started re-diverging; carries the
// last iterate so callers can still inspect it.
struct NonConvergenceError : std::runtime_error {
  NonConvergenceError(const std::string& what, BatchResult last_iterate)
      : std::runtime_error(what), last(std::move(last_iterate)) {}
  BatchResult last;
};

/// Iterated batch nonlinear least squares over a measurement arc.
/// Each pass integrates the reference state and STM to every measurement
/// time, accumulates the normal equations
///   Lambda = P_bar^-1 + sum H_l^T R_l^-1 H_l,
///   lambda = P_bar^-1 dx0_bar + sum H_l^T R_l^-1 (z_l - h(x_l*)),
/// solves Lambda dx0_hat = lambda and shifts the reference until the
/// correction falls below the threshold. p0 = Lambda^-1 at convergence.
BatchResult batch_least_squares(const std::vector<MeasurementRecord>& measurements,
                                const InputSequence& input, const PriorInfo& prior,
                                const PlantConfig& plant,
                                const BatchOptions& options = {});

struct ResidualStats {
  Vec3 mean = Vec3::Zero();
  Vec3 stddev = Vec3::Zero();
  Vec3 zscore = Vec3::Zero();  // |mean| sqrt(N) / std
  std::array<bool, kOutputDim> zero_mean{true, true, true};
};

/// Per-channel residual statistics; a channel is zero-mean iff its
/// z-score |mean| sqrt(N) / std stays below 3.
ResidualStats residual_analysis(const BatchResult& result);

struct EkfConfig {
  static Mat8 default_process_noise() {
    Mat8 q = Mat8::Zero();
    q(kMass, kMass) = 1e-4;  // [kg^2/Hz]
    return q;
  }

  Vec8 initial_mean = Vec8::Zero();
  Mat8 initial_cov = Mat8::Identity();
  // Continuous-time process noise spectral densities; discretized as Q*dt.
  // Zero except the mass channel by default.
  Mat8 process_noise_q = default_process_noise();
  // Used for every update when set; otherwise each record's covariance.
  std::optional<Mat3> measurement_cov;
  // Wrap the heading innovation to (-pi, pi]; disable for unwrapped logs.
  bool wrap_heading_innovation = true;
  // Parameter means are projected onto their positive domain after each
  // update; a linearized correction can otherwise cross zero when the
  // initial mass guess is far below the truth.
  double mass_floor = 1e-3;  // [kg]
  double izz_floor = 1e-6;   // [kg m^2]
};

struct EkfResult {
  Eigen::VectorXd times;
  Eigen::Matrix<double, kStateDim, Eigen::Dynamic> means;  // post-update
  std::vector<Mat8> covs;
  Eigen::Matrix<double, kOutputDim, Eigen::Dynamic> innovations;
  double rmse_mass = std::numeric_limits<double>::quiet_NaN();
  double rmse_izz = std::numeric_limits<double>::quiet_NaN();
};

/// Extended Kalman filter over the augmented state. Means propagate through
/// the dynamics, covariances through Phi P Phi^T + Q dt (Joseph-form update,
/// symmetrized every step). RMSE fields are filled when truth is provided.
EkfResult ekf_run(const std::vector<MeasurementRecord>& measurements,
                  const InputSequence& input, const EkfConfig& config,
                  const PlantConfig& plant,
                  const TruthTrajectory* truth = nullptr);

struct SeededEkfResult {
  BatchResult seed;
  EkfResult filter;
};

/// Batch solution over the first seed_duration seconds of data, then an EKF
/// over the entire dataset initialized with the batch mean and full
/// covariance.
SeededEkfResult ls_seeded_ekf(const std::vector<MeasurementRecord>& measurements,
                              const InputSequence& input, double seed_duration,
                              const EkfConfig& config, const PlantConfig& plant,
                              const PriorInfo& seed_prior,
                              const TruthTrajectory* truth = nullptr);

/// Root-mean-square mass / izz errors of an estimate history against an
/// aligned truth trajectory; timestamps must match.
std::pair<double, double> parameter_rmse(
    const Eigen::VectorXd& times,
    const Eigen::Matrix<double, kStateDim, Eigen::Dynamic>& means,
    const TruthTrajectory& truth);

}  // namespace inertiaid
