#include "inertiaid/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "inertiaid/errors.hpp"
#include "inertiaid/rng.hpp"

namespace inertiaid {

namespace {

struct RunOutcome {
  bool failed = false;
  Eigen::VectorXd err_mass, err_izz;    // estimate - drawn truth
  Eigen::VectorXd var_mass, var_izz;    // filter-reported
  Eigen::VectorXd within3_mass, within3_izz;  // 0/1 per step
};

// Truth propagation with a per-interval constant random acceleration
// disturbance on (udot, vdot, rdot).
Vec8 step_truth(const Vec8& x, double t, double h, const InputSequence& input,
                const PlantModel& plant, const Vec3& disturbance) {
  const GeneralizedForced force = detail::step_force(input, plant.geometry, t, h);
  auto f = [&](double, const Vec8& xs) {
    Vec8 dx = state_derivative(xs, force, plant.friction, plant.kinematics);
    dx[kU] += disturbance[0];
    dx[kV] += disturbance[1];
    dx[kR] += disturbance[2];
    return dx;
  };
  return rk4_step(f, t, x, h);
}

RunOutcome simulate_run(const McConfig& cfg, const Eigen::VectorXd& times, int run) {
  SeededRng rng(SeededRng::derive(cfg.seed, static_cast<std::uint64_t>(run)));

  const double f = cfg.param_variation;
  const double true_mass = cfg.nominal_mass * rng.uniform(1.0 - f, 1.0 + f);
  const double true_izz = cfg.nominal_izz * rng.uniform(1.0 - f, 1.0 + f);

  Vec8 truth0 = cfg.initial_state;
  truth0[kMass] = true_mass;
  truth0[kIzz] = true_izz;

  const Mat3 r_cov = cfg.noise_std.cwiseAbs2().asDiagonal();
  const auto n = times.size();
  std::vector<MeasurementRecord> measurements(static_cast<std::size_t>(n));

  Vec8 x = truth0;
  for (Eigen::Index l = 0; l < n; ++l) {
    if (l > 0) {
      const double span = times[l] - times[l - 1];
      const Vec3 w(cfg.accel_noise_std * rng.gaussian(),
                   cfg.accel_noise_std * rng.gaussian(),
                   cfg.alpha_noise_std * rng.gaussian());
      const auto nsub = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::ceil(span / cfg.plant.dt - 1e-9)));
      const double h = span / static_cast<double>(nsub);
      double t = times[l - 1];
      for (Eigen::Index k = 0; k < nsub; ++k) {
        x = step_truth(x, t, h, cfg.input, cfg.plant.model, w);
        t = times[l - 1] + h * static_cast<double>(k + 1);
      }
    }
    auto& rec = measurements[static_cast<std::size_t>(l)];
    rec.t = times[l];
    rec.r_cov = r_cov;
    for (int ch = 0; ch < kOutputDim; ++ch)
      rec.z[ch] = x[ch] + cfg.noise_std[ch] * rng.gaussian();
  }

  // Filter initialized at the drawn true values.
  EkfConfig ekf = cfg.base;
  ekf.initial_mean = truth0;

  RunOutcome out;
  out.err_mass.resize(n);
  out.err_izz.resize(n);
  out.var_mass.resize(n);
  out.var_izz.resize(n);
  out.within3_mass.resize(n);
  out.within3_izz.resize(n);
  try {
    const EkfResult res = ekf_run(measurements, cfg.input, ekf, cfg.plant);
    for (Eigen::Index l = 0; l < n; ++l) {
      const double em = res.means(kMass, l) - true_mass;
      const double ei = res.means(kIzz, l) - true_izz;
      const double vm = res.covs[static_cast<std::size_t>(l)](kMass, kMass);
      const double vi = res.covs[static_cast<std::size_t>(l)](kIzz, kIzz);
      out.err_mass[l] = em;
      out.err_izz[l] = ei;
      out.var_mass[l] = vm;
      out.var_izz[l] = vi;
      out.within3_mass[l] = std::abs(em) <= 3.0 * std::sqrt(std::max(vm, 0.0)) ? 1.0 : 0.0;
      out.within3_izz[l] = std::abs(ei) <= 3.0 * std::sqrt(std::max(vi, 0.0)) ? 1.0 : 0.0;
    }
  } catch (const NumericalFailureError&) {
    out.failed = true;
  } catch (const std::domain_error&) {
    out.failed = true;
  }
  return out;
}

}  // namespace

McReport run_monte_carlo(const McConfig& cfg) {
  if (cfg.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  if (!(cfg.param_variation >= 0.0) || !(cfg.param_variation < 1.0))
    throw std::invalid_argument("param_variation must lie in [0, 1)");
  cfg.input.require_force_domain("run_monte_carlo");
  if (cfg.input.empty()) throw ConfigurationError("campaign input is empty");

  const double span = cfg.input.t_end() - cfg.input.t0;
  const auto n_meas =
      static_cast<Eigen::Index>(std::floor(span * cfg.meas_rate_hz + 1e-9)) + 1;
  Eigen::VectorXd times(n_meas);
  for (Eigen::Index l = 0; l < n_meas; ++l)
    times[l] = cfg.input.t0 + static_cast<double>(l) / cfg.meas_rate_hz;

  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(cfg.n_runs));
  const unsigned n_threads =
      cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                      : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int run = next.fetch_add(1);
      if (run >= cfg.n_runs) return;
      outcomes[static_cast<std::size_t>(run)] = simulate_run(cfg, times, run);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Deterministic reduction in run order.
  McReport report;
  report.times = times;
  report.requested_runs = cfg.n_runs;
  report.mean_err_mass = Eigen::VectorXd::Zero(n_meas);
  report.mean_err_izz = Eigen::VectorXd::Zero(n_meas);
  report.avg_var_mass = Eigen::VectorXd::Zero(n_meas);
  report.avg_var_izz = Eigen::VectorXd::Zero(n_meas);
  report.sample_var_mass = Eigen::VectorXd::Zero(n_meas);
  report.sample_var_izz = Eigen::VectorXd::Zero(n_meas);
  report.containment_mass = Eigen::VectorXd::Zero(n_meas);
  report.containment_izz = Eigen::VectorXd::Zero(n_meas);

  int effective = 0;
  for (int run = 0; run < cfg.n_runs; ++run) {
    const auto& oc = outcomes[static_cast<std::size_t>(run)];
    if (oc.failed) {
      report.failed_runs.push_back(run);
      continue;
    }
    ++effective;
    report.mean_err_mass += oc.err_mass;
    report.mean_err_izz += oc.err_izz;
    report.avg_var_mass += oc.var_mass;
    report.avg_var_izz += oc.var_izz;
    report.containment_mass += oc.within3_mass;
    report.containment_izz += oc.within3_izz;
  }
  report.effective_runs = effective;
  if (effective == 0) throw NumericalFailureError("all Monte Carlo runs failed", 0);

  const double inv_n = 1.0 / static_cast<double>(effective);
  report.mean_err_mass *= inv_n;
  report.mean_err_izz *= inv_n;
  report.avg_var_mass *= inv_n;
  report.avg_var_izz *= inv_n;
  report.containment_mass *= inv_n;
  report.containment_izz *= inv_n;

  report.final_errors.resize(effective, 2);
  int row = 0;
  for (int run = 0; run < cfg.n_runs; ++run) {
    const auto& oc = outcomes[static_cast<std::size_t>(run)];
    if (oc.failed) continue;
    report.sample_var_mass.array() +=
        (oc.err_mass - report.mean_err_mass).array().square();
    report.sample_var_izz.array() +=
        (oc.err_izz - report.mean_err_izz).array().square();
    report.final_errors(row, 0) = oc.err_mass[n_meas - 1];
    report.final_errors(row, 1) = oc.err_izz[n_meas - 1];
    ++row;
  }
  const double ddof = effective > 1 ? static_cast<double>(effective - 1) : 1.0;
  report.sample_var_mass /= ddof;
  report.sample_var_izz /= ddof;
  return report;
}

ConsistencySeries consistency_stats(const McReport& report) {
  if (report.effective_runs < 30)
    throw std::invalid_argument("consistency statistics need at least 30 runs");
  ConsistencySeries series;
  series.times = report.times;
  const auto n = report.times.size();
  series.ratio_mass.resize(n);
  series.ratio_izz.resize(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    series.ratio_mass[l] = report.avg_var_mass[l] > 0.0
                               ? report.sample_var_mass[l] / report.avg_var_mass[l]
                               : 0.0;
    series.ratio_izz[l] = report.avg_var_izz[l] > 0.0
                              ? report.sample_var_izz[l] / report.avg_var_izz[l]
                              : 0.0;
    if (series.ratio_mass[l] > 2.0 || series.ratio_mass[l] < 0.5)
      series.flagged_mass.push_back(static_cast<int>(l));
    if (series.ratio_izz[l] > 2.0 || series.ratio_izz[l] < 0.5)
      series.flagged_izz.push_back(static_cast<int>(l));
  }
  return series;
}

}  // namespace inertiaid
