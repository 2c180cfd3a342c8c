#include "inertiaid/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "inertiaid/errors.hpp"

namespace inertiaid {

namespace {

using OutputJacobian = Eigen::Matrix<double, kOutputDim, kStateDim>;

OutputJacobian pose_selection() {
  OutputJacobian h = OutputJacobian::Zero();
  h(0, kX) = 1.0;
  h(1, kY) = 1.0;
  h(2, kPsi) = 1.0;
  return h;
}

void require_sorted(const std::vector<MeasurementRecord>& measurements) {
  if (measurements.empty()) throw std::invalid_argument("no measurements");
  for (std::size_t i = 1; i < measurements.size(); ++i)
    if (!(measurements[i].t > measurements[i - 1].t))
      throw std::invalid_argument("measurements must be strictly time-sorted");
}

Mat3 inverse_spd3(const Mat3& m, const char* what) {
  Eigen::LLT<Mat3> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) +
                                " covariance is not positive definite");
  return llt.solve(Mat3::Identity());
}

// Solve A x = b for symmetric A with Jacobi pre-scaling; the state mixes
// meters with kg m^2 so raw conditioning can be poor.
Vec8 solve_scaled_spd(const Mat8& a, const Vec8& b, Mat8* inverse_out) {
  Vec8 d;
  for (int i = 0; i < kStateDim; ++i) {
    const double aii = a(i, i);
    if (!(aii > 0.0) || !std::isfinite(aii))
      throw UnobservableProblemError(
          "information matrix has a non-positive diagonal");
    d[i] = 1.0 / std::sqrt(aii);
  }
  const Mat8 scaled = d.asDiagonal() * a * d.asDiagonal();
  Eigen::LDLT<Mat8> ldlt(scaled);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw UnobservableProblemError("information matrix is singular");
  const Vec8 x = d.asDiagonal() * Vec8(ldlt.solve(Vec8(d.asDiagonal() * b)));
  if (inverse_out) {
    const Mat8 inv_scaled = ldlt.solve(Mat8::Identity());
    *inverse_out = d.asDiagonal() * inv_scaled * d.asDiagonal();
  }
  return x;
}

// Step count so that substeps never exceed the integrator step.
Eigen::Index substeps(double span, double dt) {
  return std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(span / dt - 1e-9)));
}

void advance(Vec8& x, Mat8& phi, double t_from, double t_to,
             const InputSequence& input, const PlantConfig& plant) {
  const double span = t_to - t_from;
  if (span <= 0.0) return;
  const Eigen::Index n = substeps(span, plant.dt);
  const double h = span / static_cast<double>(n);
  double t = t_from;
  for (Eigen::Index k = 0; k < n; ++k) {
    detail::step_state_stm(x, phi, t, h, input, plant.model);
    t = t_from + h * static_cast<double>(k + 1);
  }
}

struct AccumulationPass {
  Mat8 info = Mat8::Zero();
  Vec8 rhs = Vec8::Zero();
  double measurement_cost = 0.0;
  Eigen::Matrix<double, kOutputDim, Eigen::Dynamic> residuals;
};

// One forward pass: integrate the reference and STM through the measurement
// arc, accumulating the normal equations.
AccumulationPass accumulate(const std::vector<MeasurementRecord>& measurements,
                            const InputSequence& input, const Vec8& x0_ref,
                            const PlantConfig& plant, double epoch) {
  const OutputJacobian h_pose = pose_selection();
  AccumulationPass pass;
  pass.residuals.resize(kOutputDim, static_cast<Eigen::Index>(measurements.size()));

  Vec8 x = x0_ref;
  Mat8 phi = Mat8::Identity();
  double t_prev = epoch;
  for (std::size_t l = 0; l < measurements.size(); ++l) {
    const auto& rec = measurements[l];
    advance(x, phi, t_prev, rec.t, input, plant);
    t_prev = rec.t;

    Vec3 res = rec.z - x.head<kOutputDim>();
    const Mat3 w = inverse_spd3(rec.r_cov, "measurement");
    const Eigen::Matrix<double, kOutputDim, kStateDim> h_l = h_pose * phi;
    pass.info.noalias() += h_l.transpose() * w * h_l;
    pass.rhs.noalias() += h_l.transpose() * (w * res);
    pass.measurement_cost += res.dot(w * res);
    pass.residuals.col(static_cast<Eigen::Index>(l)) = res;
  }
  return pass;
}

}  // namespace

BatchResult batch_least_squares(const std::vector<MeasurementRecord>& measurements,
                                const InputSequence& input, const PriorInfo& prior,
                                const PlantConfig& plant, const BatchOptions& options) {
  require_sorted(measurements);
  input.require_force_domain("batch_least_squares");
  if (!(options.threshold > 0.0))
    throw std::invalid_argument("convergence threshold must be positive");
  const double epoch = measurements.front().t;
  if (!input.covers(epoch, measurements.back().t))
    throw ConfigurationError("input does not cover the measurement arc");

  const Mat8 p_bar_inv = [&] {
    Eigen::LDLT<Mat8> ldlt(prior.p0_bar);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw std::invalid_argument("prior covariance is not positive definite");
    return Mat8(ldlt.solve(Mat8::Identity()));
  }();

  Vec8 x0_ref = prior.x0_ref;
  Vec8 dx_bar = prior.dx0_bar;

  BatchResult result;
  double min_correction = std::numeric_limits<double>::infinity();

  auto finalize = [&](int iterations, double correction, bool converged) {
    const AccumulationPass pass =
        accumulate(measurements, input, x0_ref, plant, epoch);
    const Mat8 info = pass.info + p_bar_inv;
    Mat8 p0;
    solve_scaled_spd(info, Vec8(pass.rhs + p_bar_inv * dx_bar), &p0);
    result.x0_hat = x0_ref;
    result.p0 = 0.5 * (p0 + p0.transpose());
    result.iterations = iterations;
    result.final_correction_norm = correction;
    result.converged = converged;
    result.residuals = pass.residuals;
    result.residual_times.resize(static_cast<Eigen::Index>(measurements.size()));
    for (std::size_t l = 0; l < measurements.size(); ++l)
      result.residual_times[static_cast<Eigen::Index>(l)] = measurements[l].t;
    result.cost_history.push_back(pass.measurement_cost +
                                  dx_bar.dot(p_bar_inv * dx_bar));
  };

  double last_correction = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const AccumulationPass pass =
        accumulate(measurements, input, x0_ref, plant, epoch);
    result.cost_history.push_back(pass.measurement_cost +
                                  dx_bar.dot(p_bar_inv * dx_bar));

    const Mat8 info = pass.info + p_bar_inv;
    const Vec8 rhs = pass.rhs + p_bar_inv * dx_bar;
    Vec8 correction = solve_scaled_spd(info, rhs, nullptr);
    if (!correction.allFinite())
      throw UnobservableProblemError("normal-equation solution is not finite");

    // Keep the reference physical; halve the step if it would cross zero
    // mass or inertia.
    int halvings = 0;
    while (x0_ref[kMass] + correction[kMass] <= 0.0 ||
           x0_ref[kIzz] + correction[kIzz] <= 0.0) {
      correction *= 0.5;
      if (++halvings > 60) {
        finalize(iter, correction.cwiseAbs().maxCoeff(), false);
        throw NonConvergenceError("correction cannot stay physical", result);
      }
    }

    const double corr_norm = correction.cwiseAbs().maxCoeff();
    last_correction = corr_norm;
    x0_ref += correction;
    dx_bar -= correction;

    if (corr_norm <= options.threshold) {
      finalize(iter, corr_norm, true);
      return result;
    }
    if (corr_norm > options.divergence_factor * min_correction) {
      finalize(iter, corr_norm, false);
      throw NonConvergenceError(
          "batch iteration diverged (correction grew from its minimum)", result);
    }
    min_correction = std::min(min_correction, corr_norm);
  }

  finalize(options.max_iter, last_correction, false);
  throw NonConvergenceError("batch iteration exceeded max_iter", result);
}

ResidualStats residual_analysis(const BatchResult& result) {
  const Eigen::Index n = result.residuals.cols();
  if (n == 0) throw std::invalid_argument("no residuals to analyze");
  ResidualStats stats;
  for (int ch = 0; ch < kOutputDim; ++ch) {
    const auto row = result.residuals.row(ch);
    const double mean = row.mean();
    const double var =
        (row.array() - mean).square().sum() / std::max<double>(1.0, double(n - 1));
    const double std = std::sqrt(var);
    stats.mean[ch] = mean;
    stats.stddev[ch] = std;
    stats.zscore[ch] =
        std > 0.0 ? std::abs(mean) * std::sqrt(static_cast<double>(n)) / std : 0.0;
    stats.zero_mean[static_cast<std::size_t>(ch)] = stats.zscore[ch] < 3.0;
  }
  return stats;
}

EkfResult ekf_run(const std::vector<MeasurementRecord>& measurements,
                  const InputSequence& input, const EkfConfig& config,
                  const PlantConfig& plant, const TruthTrajectory* truth) {
  require_sorted(measurements);
  input.require_force_domain("ekf_run");
  if (!input.covers(measurements.front().t, measurements.back().t))
    throw ConfigurationError("input does not cover the measurement arc");

  const OutputJacobian h_pose = pose_selection();
  const auto n = static_cast<Eigen::Index>(measurements.size());

  EkfResult result;
  result.times.resize(n);
  result.means.resize(kStateDim, n);
  result.covs.resize(static_cast<std::size_t>(n));
  result.innovations.resize(kOutputDim, n);

  Vec8 x = config.initial_mean;
  Mat8 p = 0.5 * (config.initial_cov + config.initial_cov.transpose());
  double t_prev = measurements.front().t;

  for (Eigen::Index l = 0; l < n; ++l) {
    const auto& rec = measurements[static_cast<std::size_t>(l)];

    // Time update: mean through the dynamics, covariance through
    // Phi P Phi^T + Q h per substep.
    const double span = rec.t - t_prev;
    if (span > 0.0) {
      const Eigen::Index nsub = substeps(span, plant.dt);
      const double h = span / static_cast<double>(nsub);
      double t = t_prev;
      for (Eigen::Index k = 0; k < nsub; ++k) {
        Mat8 phi = Mat8::Identity();
        detail::step_state_stm(x, phi, t, h, input, plant.model);
        p = phi * p * phi.transpose() + config.process_noise_q * h;
        p = 0.5 * (p + p.transpose());
        t = t_prev + h * static_cast<double>(k + 1);
      }
    }
    t_prev = rec.t;

    // Measurement update (Joseph form).
    const Mat3 r_cov = config.measurement_cov ? *config.measurement_cov : rec.r_cov;
    Vec3 innovation = rec.z - x.head<kOutputDim>();
    if (config.wrap_heading_innovation)
      innovation[2] = wrap_angle(innovation[2]);
    const Mat3 s = h_pose * p * h_pose.transpose() + r_cov;
    Eigen::LLT<Mat3> llt(s);
    if (llt.info() != Eigen::Success)
      throw NumericalFailureError("innovation covariance not positive definite",
                                  static_cast<int>(l));
    const Eigen::Matrix<double, kStateDim, kOutputDim> gain =
        p * h_pose.transpose() * llt.solve(Mat3::Identity());
    x += gain * innovation;
    const Mat8 a = Mat8::Identity() - gain * h_pose;
    p = a * p * a.transpose() + gain * r_cov * gain.transpose();
    p = 0.5 * (p + p.transpose());

    // Constrained update: parameters are physically positive.
    x[kMass] = std::max(x[kMass], config.mass_floor);
    x[kIzz] = std::max(x[kIzz], config.izz_floor);
    if (!x.allFinite())
      throw NumericalFailureError("filter mean left the physical domain",
                                  static_cast<int>(l));
    Eigen::SelfAdjointEigenSolver<Mat8> es(p, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, p.trace()))
      throw NumericalFailureError("covariance lost positive semidefiniteness",
                                  static_cast<int>(l));

    result.times[l] = rec.t;
    result.means.col(l) = x;
    result.covs[static_cast<std::size_t>(l)] = p;
    result.innovations.col(l) = innovation;
  }

  if (truth && !truth->empty()) {
    const auto [rm, ri] = parameter_rmse(result.times, result.means, *truth);
    result.rmse_mass = rm;
    result.rmse_izz = ri;
  }
  return result;
}

SeededEkfResult ls_seeded_ekf(const std::vector<MeasurementRecord>& measurements,
                              const InputSequence& input, double seed_duration,
                              const EkfConfig& config, const PlantConfig& plant,
                              const PriorInfo& seed_prior,
                              const TruthTrajectory* truth) {
  require_sorted(measurements);
  if (!(seed_duration > 0.0))
    throw std::invalid_argument("seed duration must be positive");
  const double t0 = measurements.front().t;
  std::vector<MeasurementRecord> window;
  for (const auto& rec : measurements)
    if (rec.t <= t0 + seed_duration + 1e-12) window.push_back(rec);
  if (window.size() < 2)
    throw ConfigurationError("seed window contains too few measurements");

  SeededEkfResult out;
  out.seed = batch_least_squares(window, input, seed_prior, plant);

  EkfConfig seeded = config;
  seeded.initial_mean = out.seed.x0_hat;
  seeded.initial_cov = out.seed.p0;
  out.filter = ekf_run(measurements, input, seeded, plant, truth);
  return out;
}

std::pair<double, double> parameter_rmse(
    const Eigen::VectorXd& times,
    const Eigen::Matrix<double, kStateDim, Eigen::Dynamic>& means,
    const TruthTrajectory& truth) {
  if (truth.times.size() != times.size())
    throw std::invalid_argument("truth and estimate timelines differ in length");
  double ss_mass = 0.0, ss_izz = 0.0;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (std::abs(truth.times[i] - times[i]) > 1e-9)
      throw std::invalid_argument("truth and estimate timestamps are misaligned");
    const double em = means(kMass, i) - truth.states(kMass, i);
    const double ei = means(kIzz, i) - truth.states(kIzz, i);
    ss_mass += em * em;
    ss_izz += ei * ei;
  }
  const auto n = static_cast<double>(times.size());
  return {std::sqrt(ss_mass / n), std::sqrt(ss_izz / n)};
}

}  // namespace inertiaid
