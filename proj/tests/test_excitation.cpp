#include <doctest.h>

#include <cmath>

#include "inertiaid/errors.hpp"
#include "inertiaid/excitation.hpp"
#include "inertiaid/rng.hpp"

using namespace inertiaid;

namespace {

Vec8 nominal_state() { return make_state(0, 0, 0, 0, 0, 0, 2.268, 0.00378); }

// Finite-difference oracle for the output sensitivity: perturb one parameter
// of the initial state and difference the propagated pose histories.
Eigen::MatrixXd fd_output_sensitivity(const Vec8& state0, const InputSequence& input,
                                      const PlantModel& plant, double dt,
                                      int param_index) {
  const double theta = state0[param_index];
  const double h = 1e-6 * theta;
  Vec8 xp = state0, xm = state0;
  xp[param_index] += h;
  xm[param_index] -= h;
  const Trajectory tp = propagate(xp, input, plant, dt, input.t0, input.t_end());
  const Trajectory tm = propagate(xm, input, plant, dt, input.t0, input.t_end());
  Eigen::MatrixXd s(kOutputDim, tp.size());
  for (Eigen::Index i = 0; i < tp.size(); ++i)
    s.col(i) = (tp.states.col(i).head<kOutputDim>() -
                tm.states.col(i).head<kOutputDim>()) /
               (2.0 * h);
  return s;
}

}  // namespace

TEST_SUITE("excitation") {

TEST_CASE("phase-shifted sine sample values") {
  const InputSequence seq = phase_shifted_sine(0.025, 1.0, kPi / 4.0, 10.0, 0.01);
  CHECK(seq.commands(0, 0) == doctest::Approx(0.0));
  CHECK(seq.commands(1, 0) == doctest::Approx(0.025 * std::sin(kPi / 4.0)));
  CHECK(seq.commands(2, 0) == doctest::Approx(0.025));
  CHECK(seq.commands(3, 0) == doctest::Approx(0.025 * std::sin(3.0 * kPi / 4.0)));
}

TEST_CASE("zero-phase sine crosses zero together") {
  const double omega = 2.0;
  const InputSequence seq =
      phase_shifted_sine(0.5, omega, 0.0, 10.0, kPi / omega / 100.0);
  const Vec4 at_crossing = seq.at(kPi / omega);
  CHECK(at_crossing.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("offset mode is non-negative everywhere") {
  const InputSequence seq =
      phase_shifted_sine(0.025, 1.0, kPi / 4.0, 30.0, 0.01, SineMode::kOffset);
  CHECK(seq.commands.minCoeff() >= 0.0);
  CHECK(seq.commands.maxCoeff() <= 0.025 + 1e-12);
}

TEST_CASE("generators are deterministic") {
  const InputSequence a = phase_shifted_sine(0.025, 1.0, kPi / 4.0, 5.0, 0.01);
  const InputSequence b = phase_shifted_sine(0.025, 1.0, kPi / 4.0, 5.0, 0.01);
  CHECK((a.commands - b.commands).norm() == 0.0);
}

TEST_CASE("translation half produces pure y-force, rotation half pure moment") {
  const ModuleGeometry geom(0.1, 0.05);
  const InputSequence seq = translation_then_rotation(7.0, 0.2, kPi, 0.01);
  REQUIRE(seq.size() == 1401);
  for (Eigen::Index c = 0; c < seq.size(); ++c) {
    const auto f = resolve_thrust(Vec4(seq.commands.col(c)), geom);
    if (seq.time_at(c) < 7.0) {
      CHECK(std::abs(f.fx) < 1e-12);
      CHECK(std::abs(f.mz) < 1e-12);
    } else {
      CHECK(std::abs(f.fx) < 1e-12);
      CHECK(std::abs(f.fy) < 1e-12);
    }
  }
  CHECK(seq.commands.minCoeff() >= 0.0);  // realizable commands
}

TEST_CASE("zero-gain orbit follower outputs nothing") {
  OrbitFollowerSpec spec;
  spec.gains = PdGains{0, 0, 0, 0};
  spec.duration = 5.0;
  const InputSequence seq = pd_orbit_follower(spec, PlantModel{}, nominal_state());
  CHECK(seq.commands.norm() == 0.0);
}

TEST_CASE("default-gain orbit follower tracks within the setpoint amplitude") {
  OrbitFollowerSpec spec;
  spec.duration = 120.0;
  const PlantModel plant;
  const Vec8 x0 = nominal_state();
  const InputSequence seq = pd_orbit_follower(spec, plant, x0);

  // Replay the recorded input open loop and compare against the setpoints.
  const Trajectory traj = propagate(x0, seq, plant, spec.dt, 0.0, spec.duration);
  const double omega = 2.0 * kPi / spec.period;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    const double ex =
        traj.states(kX, i) - spec.setpoint_amplitude * std::sin(omega * t);
    const double ey = traj.states(kY, i) -
                      spec.setpoint_amplitude * std::sin(omega * t + kPi / 4.0);
    worst = std::max({worst, std::abs(ex), std::abs(ey)});
  }
  CHECK(worst < spec.setpoint_amplitude);
}

TEST_CASE("unstable gains raise a divergence error") {
  OrbitFollowerSpec spec;
  spec.gains.kp_pos = 1e6;
  spec.gains.kd_pos = 0.0;
  spec.duration = 30.0;
  CHECK_THROWS_AS(pd_orbit_follower(spec, PlantModel{}, nominal_state()),
                  DivergenceError);
}

TEST_CASE("sensitivity starts at exactly zero and stays zero without input") {
  const InputSequence input = make_uniform_input(InputDomain::kForce, 0.0, 0.01, 5.0);
  const SensitivityHistory history =
      propagate_sensitivity(nominal_state(), input, PlantModel{}, 0.01);
  CHECK(history.states.front().s_x.norm() == 0.0);
  for (const auto& s : history.states) CHECK(s.s_y.norm() == 0.0);
}

TEST_CASE("pure translation leaves izz unobservable but excites mass") {
  const InputSequence input = pure_translation(0.1, 1.0, 20.0, 0.01);
  const SensitivityHistory history =
      propagate_sensitivity(nominal_state(), input, PlantModel{}, 0.01);
  double izz_col = 0.0, mass_col = 0.0;
  for (const auto& s : history.states) {
    izz_col = std::max(izz_col, s.s_y.col(1).cwiseAbs().maxCoeff());
    mass_col = std::max(mass_col, s.s_y.col(0).cwiseAbs().maxCoeff());
  }
  CHECK(izz_col == 0.0);
  CHECK(mass_col > 1e-4);
}

TEST_CASE("sensitivity matches finite differences over random parameters") {
  SeededRng rng(17);
  const InputSequence input = phase_shifted_sine(0.025, 1.0, kPi / 4.0, 8.0, 0.01);
  const PlantModel plant;
  for (int trial = 0; trial < 10; ++trial) {
    Vec8 x0 = nominal_state();
    x0[kMass] = rng.uniform(1.0, 4.0);
    x0[kIzz] = rng.uniform(2e-3, 8e-3);
    const SensitivityHistory history = propagate_sensitivity(x0, input, plant, 0.01);
    for (int j = 0; j < kParamCount; ++j) {
      const Eigen::MatrixXd fd =
          fd_output_sensitivity(x0, input, plant, 0.01, kMass + j);
      double worst = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < history.states.size(); ++i) {
        const Eigen::Vector3d diff =
            history.states[i].s_y.col(j) - fd.col(static_cast<Eigen::Index>(i));
        worst = std::max(worst, diff.norm());
        scale = std::max(scale, fd.col(static_cast<Eigen::Index>(i)).norm());
      }
      CHECK(worst <= 1e-4 * (1.0 + scale));
    }
  }
}

TEST_CASE("sensitivity is near-linear in the input amplitude") {
  const PlantModel plant;
  const auto run = [&](double amplitude) {
    const InputSequence input =
        phase_shifted_sine(amplitude, 1.0, kPi / 4.0, 20.0, 0.01);
    return propagate_sensitivity(nominal_state(), input, plant, 0.01);
  };
  const SensitivityHistory base = run(0.025);
  const SensitivityHistory twice = run(0.05);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < base.states.size(); ++i) {
    num += twice.states[i].s_y.norm();
    den += base.states[i].s_y.norm();
  }
  const double ratio = num / den;
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
}

TEST_CASE("observability scores: zero history") {
  SensitivityHistory history;
  history.times = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
  history.states.assign(11, SensitivityState{});
  const ObservabilityReport report =
      observability_score(history, Vec3(0.01, 0.01, deg2rad(1.0)));
  CHECK(report.scores[0] == 0.0);
  CHECK(report.scores[1] == 0.0);
  CHECK_FALSE(report.observable[0]);
  CHECK_FALSE(report.observable[1]);
}

TEST_CASE("observability dichotomy between inputs") {
  const Vec3 noise(0.01, 0.01, deg2rad(1.0));
  const PlantModel plant;

  const SensitivityHistory translation = propagate_sensitivity(
      nominal_state(), pure_translation(0.1, 1.0, 120.0, 0.01), plant, 0.01);
  const ObservabilityReport rep_tr = observability_score(translation, noise);
  CHECK(rep_tr.scores[1] < 1e-6 * rep_tr.scores[0]);

  const SensitivityHistory sine = propagate_sensitivity(
      nominal_state(), phase_shifted_sine(0.025, 1.0, kPi / 4.0, 120.0, 0.01),
      plant, 0.01);
  const ObservabilityReport rep_sine = observability_score(sine, noise);
  CHECK(rep_sine.observable[0]);
  CHECK(rep_sine.observable[1]);
  CHECK(rep_sine.scores.minCoeff() > rep_sine.threshold);
}

}  // TEST_SUITE
