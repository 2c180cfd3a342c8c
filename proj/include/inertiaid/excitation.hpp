#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "inertiaid/dynamics.hpp"
#include "inertiaid/input_sequence.hpp"
#include "inertiaid/types.hpp"

namespace inertiaid {

// Signed sine commands excite the model directly; Offset remaps each channel
// to amplitude*(1+sin)/2 so commands stay non-negative (realizable).
enum class SineMode { kSigned, kOffset };

/// Per-thruster sine commands, thruster i phased by (i-1)*phase_step:
///   T_i(t) = amplitude * sin(omega t + (i-1) phase_step)
InputSequence phase_shifted_sine(double amplitude, double omega, double phase_step,
                                 double duration, double dt,
                                 SineMode mode = SineMode::kSigned);

/// Oscillatory pure body-y force (zero net moment) realized with
/// non-negative half-wave commands: T1=T2=A sin+, T3=T4=A sin-.
InputSequence pure_translation(double amplitude, double omega, double duration,
                               double dt);

/// Oscillatory translation for the first half, oscillatory pure moment for
/// the second; each half produces zero cross-coupling through the thrust
/// resolution by construction.
InputSequence translation_then_rotation(double half_duration, double amplitude,
                                        double omega, double dt);

struct PdGains {
  double kp_pos = 2.0;       // [N/m]
  double kd_pos = 3.0;       // [N s/m]
  // Heading gains sized for the small moment of inertia; the translation
  // gains would make the rotational loop stiffer than the integrator step.
  double kp_heading = 0.02;  // [N m/rad]
  double kd_heading = 0.02;  // [N m s/rad]
};

// Closed-loop tracking experiment: phase-shifted sinusoidal position
// setpoints fed to a PD tracker; the realized thruster history is recorded.
struct OrbitFollowerSpec {
  double setpoint_amplitude = 0.1;   // [m]
  double heading_amplitude = 0.1;    // [rad]; the third phase-shifted channel
  double period = 60.0;              // [s]
  PdGains gains{};
  double duration = 120.0;
  double dt = 0.01;
  // Optional sensed-pose noise in the feedback path (x [m], y [m], psi [rad]);
  // zero std gives a fully deterministic sequence.
  Vec3 feedback_noise_std = Vec3::Zero();
  double feedback_rate_hz = 50.0;
  std::uint64_t noise_seed = 0;
};

/// Simulates the plant under the PD tracker and returns the realized
/// force-domain input history. Throws DivergenceError if the closed loop
/// blows up (state norm > 1e3).
InputSequence pd_orbit_follower(const OrbitFollowerSpec& spec,
                                const PlantModel& plant,
                                const Vec8& initial_state);

// Sensitivity of the dynamic states / measured outputs to the two unknown
// parameters theta = (mass, izz).
struct SensitivityState {
  Eigen::Matrix<double, 6, kParamCount> s_x = Eigen::Matrix<double, 6, kParamCount>::Zero();
  Eigen::Matrix<double, kOutputDim, kParamCount> s_y =
      Eigen::Matrix<double, kOutputDim, kParamCount>::Zero();
};

struct SensitivityHistory {
  Eigen::VectorXd times;
  std::vector<SensitivityState> states;
};

/// Integrates dS/dt = (dF/dx) S + dF/dtheta alongside the reference state
/// (shared RK4 steps); S(t0) = 0 and S_y = (dH/dx) S.
SensitivityHistory propagate_sensitivity(const Vec8& state0,
                                         const InputSequence& input,
                                         const PlantModel& plant, double dt);

struct ObservabilityReport {
  // Time-integral of the squared, noise-normalized output sensitivity,
  // one score per parameter (mass, izz).
  Eigen::Vector2d scores = Eigen::Vector2d::Zero();
  std::array<bool, kParamCount> observable{false, false};
  double threshold = 10.0;
};

ObservabilityReport observability_score(const SensitivityHistory& history,
                                        const Vec3& noise_std,
                                        double threshold = 10.0);

}  // namespace inertiaid
