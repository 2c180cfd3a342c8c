#include "inertiaid/excitation.hpp"

#include <cmath>

#include "inertiaid/errors.hpp"
#include "inertiaid/rng.hpp"

namespace inertiaid {

InputSequence phase_shifted_sine(double amplitude, double omega, double phase_step,
                                 double duration, double dt, SineMode mode) {
  if (!(amplitude > 0.0)) throw std::invalid_argument("amplitude must be positive");
  InputSequence seq = make_uniform_input(InputDomain::kForce, 0.0, dt, duration);
  for (Eigen::Index c = 0; c < seq.size(); ++c) {
    const double t = seq.time_at(c);
    for (int i = 0; i < kThrusterCount; ++i) {
      const double s = std::sin(omega * t + static_cast<double>(i) * phase_step);
      seq.commands(i, c) =
          mode == SineMode::kSigned ? amplitude * s : 0.5 * amplitude * (1.0 + s);
    }
  }
  return seq;
}

InputSequence pure_translation(double amplitude, double omega, double duration,
                               double dt) {
  if (!(amplitude > 0.0)) throw std::invalid_argument("amplitude must be positive");
  InputSequence seq = make_uniform_input(InputDomain::kForce, 0.0, dt, duration);
  for (Eigen::Index c = 0; c < seq.size(); ++c) {
    const double s = amplitude * std::sin(omega * seq.time_at(c));
    // T1=T2 push +y, T3=T4 push -y; opposite pairs cancel in fx and mz.
    seq.commands(0, c) = seq.commands(1, c) = std::max(s, 0.0);
    seq.commands(2, c) = seq.commands(3, c) = std::max(-s, 0.0);
  }
  return seq;
}

InputSequence translation_then_rotation(double half_duration, double amplitude,
                                        double omega, double dt) {
  if (!(half_duration > 0.0))
    throw std::invalid_argument("half_duration must be positive");
  if (!(amplitude > 0.0)) throw std::invalid_argument("amplitude must be positive");
  InputSequence seq =
      make_uniform_input(InputDomain::kForce, 0.0, dt, 2.0 * half_duration);
  for (Eigen::Index c = 0; c < seq.size(); ++c) {
    const double t = seq.time_at(c);
    const double s = amplitude * std::sin(omega * t);
    if (t < half_duration) {
      // Pure oscillatory body-y force.
      seq.commands(0, c) = seq.commands(1, c) = std::max(s, 0.0);
      seq.commands(2, c) = seq.commands(3, c) = std::max(-s, 0.0);
    } else {
      // Pure oscillatory moment: T1=T3 against T2=T4.
      seq.commands(0, c) = seq.commands(2, c) = std::max(s, 0.0);
      seq.commands(1, c) = seq.commands(3, c) = std::max(-s, 0.0);
    }
  }
  return seq;
}

namespace {

// Minimum-norm thrust allocation for a desired body wrench. The wrench map
// has WW^T = diag(2, 2, 4 d^2), so the pseudo-inverse is explicit.
Vec4 allocate_thrusts(const GeneralizedForced& wrench, const ModuleGeometry& geom) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double fx = wrench.fx / 2.0;
  const double fy = wrench.fy / 2.0;
  const double mz = wrench.mz / (4.0 * geom.moment_arm);
  Vec4 t;
  t[0] = (-fx + fy) * inv_sqrt2 + mz;
  t[1] = (fx + fy) * inv_sqrt2 - mz;
  t[2] = (fx - fy) * inv_sqrt2 + mz;
  t[3] = (-fx - fy) * inv_sqrt2 - mz;
  return t;
}

}  // namespace

InputSequence pd_orbit_follower(const OrbitFollowerSpec& spec,
                                const PlantModel& plant, const Vec8& initial_state) {
  const PdGains& g = spec.gains;
  if (g.kp_pos < 0 || g.kd_pos < 0 || g.kp_heading < 0 || g.kd_heading < 0)
    throw std::invalid_argument("PD gains must be non-negative");

  InputSequence seq =
      make_uniform_input(InputDomain::kForce, 0.0, spec.dt, spec.duration);
  const double omega = 2.0 * kPi / spec.period;
  const auto refresh_every = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(1.0 / (spec.feedback_rate_hz * spec.dt))));

  SeededRng rng(SeededRng::derive(spec.noise_seed, 0x0b17));
  Vec8 state = initial_state;
  Vec3 sensed = Vec3::Zero();

  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    if (i % refresh_every == 0) {
      sensed = state.head<3>();
      for (int k = 0; k < 3; ++k) sensed[k] += spec.feedback_noise_std[k] * rng.gaussian();
    }
    const double t = seq.time_at(i);
    const double xd = spec.setpoint_amplitude * std::sin(omega * t);
    const double yd = spec.setpoint_amplitude * std::sin(omega * t + kPi / 4.0);
    const double psid = spec.heading_amplitude * std::sin(omega * t + kPi / 2.0);
    const double xd_dot = spec.setpoint_amplitude * omega * std::cos(omega * t);
    const double yd_dot = spec.setpoint_amplitude * omega * std::cos(omega * t + kPi / 4.0);
    const double psid_dot = spec.heading_amplitude * omega * std::cos(omega * t + kPi / 2.0);

    // World-frame velocity of the module (true state feedback).
    double vx = state[kU], vy = state[kV];
    if (plant.kinematics == KinematicsMode::kRotated) {
      const double c = std::cos(state[kPsi]), s = std::sin(state[kPsi]);
      vx = state[kU] * c - state[kV] * s;
      vy = state[kU] * s + state[kV] * c;
    }

    const double fwx = g.kp_pos * (xd - sensed[0]) + g.kd_pos * (xd_dot - vx);
    const double fwy = g.kp_pos * (yd - sensed[1]) + g.kd_pos * (yd_dot - vy);

    GeneralizedForced wrench;
    if (plant.kinematics == KinematicsMode::kRotated) {
      const double c = std::cos(sensed[2]), s = std::sin(sensed[2]);
      wrench.fx = fwx * c + fwy * s;
      wrench.fy = -fwx * s + fwy * c;
    } else {
      wrench.fx = fwx;
      wrench.fy = fwy;
    }
    wrench.mz =
        g.kp_heading * (psid - sensed[2]) + g.kd_heading * (psid_dot - state[kR]);

    seq.commands.col(i) = allocate_thrusts(wrench, plant.geometry);

    if (i + 1 < seq.size()) {
      state = detail::step_state(state, t, spec.dt, seq, plant);
      if (!state.head<6>().allFinite() || state.head<6>().norm() > 1e3)
        throw DivergenceError("closed-loop simulation diverged at t=" +
                              std::to_string(t));
    }
  }
  return seq;
}

SensitivityHistory propagate_sensitivity(const Vec8& state0,
                                         const InputSequence& input,
                                         const PlantModel& plant, double dt) {
  input.require_force_domain("propagate_sensitivity");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double t0 = input.t0;
  const double tf = input.t_end();
  const auto n_steps = static_cast<Eigen::Index>(std::ceil((tf - t0) / dt - 1e-9));

  SensitivityHistory history;
  history.times.resize(n_steps + 1);
  history.states.resize(static_cast<std::size_t>(n_steps) + 1);

  // The parameter columns of the augmented STM are exactly the sensitivity
  // states: dPhi[0:6, 6:8]/dt = (dF/dx) S + dF/dtheta with Phi(t0) = I.
  Vec8 x = state0;
  Mat8 phi = Mat8::Identity();
  double t = t0;
  auto record = [&](Eigen::Index idx) {
    history.times[idx] = t;
    SensitivityState s;
    s.s_x = phi.block<6, kParamCount>(0, kMass);
    s.s_y = phi.block<kOutputDim, kParamCount>(0, kMass);
    history.states[static_cast<std::size_t>(idx)] = s;
  };
  record(0);
  for (Eigen::Index i = 0; i < n_steps; ++i) {
    const double t_next = (i + 1 == n_steps) ? tf : t0 + dt * static_cast<double>(i + 1);
    detail::step_state_stm(x, phi, t, t_next - t, input, plant);
    t = t_next;
    record(i + 1);
  }
  return history;
}

ObservabilityReport observability_score(const SensitivityHistory& history,
                                        const Vec3& noise_std, double threshold) {
  if (history.states.empty())
    throw std::invalid_argument("sensitivity history is empty");
  for (int k = 0; k < kOutputDim; ++k)
    if (!(noise_std[k] > 0.0))
      throw std::invalid_argument("noise stds must be positive");

  ObservabilityReport report;
  report.threshold = threshold;
  for (std::size_t i = 0; i < history.states.size(); ++i) {
    const double dt = i + 1 < history.states.size()
                          ? history.times[static_cast<Eigen::Index>(i + 1)] -
                                history.times[static_cast<Eigen::Index>(i)]
                          : 0.0;
    const auto& s_y = history.states[i].s_y;
    for (int j = 0; j < kParamCount; ++j)
      for (int out = 0; out < kOutputDim; ++out) {
        const double normalized = s_y(out, j) / noise_std[out];
        report.scores[j] += normalized * normalized * dt;
      }
  }
  for (int j = 0; j < kParamCount; ++j)
    report.observable[static_cast<std::size_t>(j)] = report.scores[j] > threshold;
  return report;
}

}  // namespace inertiaid
