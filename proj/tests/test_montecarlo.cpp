#include <doctest.h>

#include <cmath>

#include "inertiaid/montecarlo.hpp"
#include "inertiaid/presets.hpp"

using namespace inertiaid;

namespace {

// Small fast campaign derived from the standard one.
McConfig small_campaign(std::uint64_t seed, int runs, int threads) {
  McConfig cfg = mc500_config(seed, runs, threads);
  cfg.input = translation_then_rotation(7.0, 0.2, kPi, 0.01);
  return cfg;
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("single run with no noise tracks exactly") {
  McConfig cfg = small_campaign(5, 1, 1);
  cfg.accel_noise_std = 0.0;
  cfg.alpha_noise_std = 0.0;
  cfg.noise_std = Vec3::Zero();
  cfg.base.measurement_cov = Mat3(Vec3(1e-4, 1e-4, 1e-4).asDiagonal());
  const McReport rep = run_monte_carlo(cfg);
  CHECK(rep.effective_runs == 1);
  CHECK(rep.mean_err_mass.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rep.mean_err_izz.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical seeds give bit-identical reports, regardless of threads") {
  const McReport a = run_monte_carlo(small_campaign(9, 24, 1));
  const McReport b = run_monte_carlo(small_campaign(9, 24, 2));
  CHECK((a.mean_err_mass - b.mean_err_mass).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.mean_err_izz - b.mean_err_izz).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.sample_var_mass - b.sample_var_mass).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.avg_var_izz - b.avg_var_izz).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.final_errors - b.final_errors).cwiseAbs().maxCoeff() == 0.0);

  const McReport c = run_monte_carlo(small_campaign(10, 24, 2));
  CHECK((a.final_errors - c.final_errors).cwiseAbs().maxCoeff() != 0.0);
}

TEST_CASE("report aggregates are well-formed") {
  const McReport rep = run_monte_carlo(small_campaign(4, 40, 2));
  CHECK(rep.effective_runs + static_cast<int>(rep.failed_runs.size()) ==
        rep.requested_runs);
  CHECK(rep.times.size() == 701);  // 14 s at 50 Hz
  for (Eigen::Index l = 0; l < rep.times.size(); ++l) {
    CHECK(rep.containment_mass[l] >= 0.0);
    CHECK(rep.containment_mass[l] <= 1.0);
    CHECK(rep.sample_var_mass[l] >= 0.0);
    CHECK(rep.avg_var_mass[l] >= 0.0);
  }
  CHECK(rep.final_errors.rows() == rep.effective_runs);
}

TEST_CASE("average mass variance only shrinks once data flows") {
  const McReport rep = run_monte_carlo(small_campaign(6, 30, 2));
  for (Eigen::Index l = 2; l < rep.times.size(); ++l)
    CHECK(rep.avg_var_mass[l] <= rep.avg_var_mass[l - 1] * (1.0 + 1e-9));
}

TEST_CASE("consistency ratio is one when sample equals filter variance") {
  McReport rep;
  rep.effective_runs = 100;
  rep.times = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
  rep.avg_var_mass = Eigen::VectorXd::Constant(11, 0.02);
  rep.sample_var_mass = rep.avg_var_mass;
  rep.avg_var_izz = Eigen::VectorXd::Constant(11, 1e-6);
  rep.sample_var_izz = rep.avg_var_izz;
  const ConsistencySeries series = consistency_stats(rep);
  for (Eigen::Index l = 0; l < 11; ++l) {
    CHECK(series.ratio_mass[l] == doctest::Approx(1.0));
    CHECK(series.ratio_izz[l] == doctest::Approx(1.0));
  }
  CHECK(series.flagged_mass.empty());
  CHECK(series.flagged_izz.empty());
}

TEST_CASE("consistency stats demand a real ensemble") {
  McReport rep;
  rep.effective_runs = 10;
  CHECK_THROWS_AS(consistency_stats(rep), std::invalid_argument);
}

TEST_CASE("izz inconsistency concentrates around the excitation handover") {
  McConfig cfg = small_campaign(3, 60, 2);
  const McReport rep = run_monte_carlo(cfg);
  const ConsistencySeries series = consistency_stats(rep);
  REQUIRE_FALSE(series.flagged_izz.empty());
  // Before the handover there is no rotational information at all, so the
  // flags all sit at or before the switch plus a short settling window.
  int late = 0;
  for (int idx : series.flagged_izz)
    if (rep.times[idx] > 7.5) ++late;
  CHECK(static_cast<double>(late) <=
        0.1 * static_cast<double>(series.flagged_izz.size()));
}

TEST_CASE("invalid configurations are rejected") {
  McConfig cfg = small_campaign(1, 10, 1);
  cfg.n_runs = 0;
  CHECK_THROWS_AS(run_monte_carlo(cfg), std::invalid_argument);
  cfg = small_campaign(1, 10, 1);
  cfg.param_variation = 1.0;
  CHECK_THROWS_AS(run_monte_carlo(cfg), std::invalid_argument);
  cfg = small_campaign(1, 10, 1);
  cfg.input = InputSequence{};
  CHECK_THROWS_AS(run_monte_carlo(cfg), ConfigurationError);
}

}  // TEST_SUITE
