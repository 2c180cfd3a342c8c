#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "inertiaid/errors.hpp"
#include "inertiaid/input_sequence.hpp"
#include "inertiaid/types.hpp"

namespace inertiaid {

// Square module actuated by four canted nozzles. The moment arm defaults to
// half the side length.
struct ModuleGeometry {
  double side_length = 0.1;  // L [m]
  double moment_arm = 0.05;  // d [m]

  ModuleGeometry() = default;
  explicit ModuleGeometry(double side_length_l)
      : ModuleGeometry(side_length_l, side_length_l / 2.0) {}
  ModuleGeometry(double side_length_l, double moment_arm_d)
      : side_length(side_length_l), moment_arm(moment_arm_d) {
    if (!(side_length > 0.0) || !(moment_arm > 0.0))
      throw std::invalid_argument("module geometry lengths must be positive");
  }
};

// Velocity-dependent surface losses, plus a cross term that converts
// translation speed into a parasitic yaw moment (contact-point asymmetry).
struct FrictionModel {
  double c_translation = 0.0;  // [N per m/s]
  double c_rotation = 0.0;     // [N m per rad/s]
  double bias_cross = 0.0;     // [N m per m/s], signed
  bool enabled = false;

  void validate() const {
    if (c_translation < 0.0 || c_rotation < 0.0)
      throw std::invalid_argument("friction coefficients must be non-negative");
  }
};

// kDirect uses pose rates equal to the body velocities (the estimator's model
// form). kRotated applies the body-to-inertial rotation to (u, v).
enum class KinematicsMode { kDirect, kRotated };

// Geometry + surface model + kinematics convention for one propagation setup.
struct PlantModel {
  ModuleGeometry geometry{};
  FrictionModel friction{};
  KinematicsMode kinematics = KinematicsMode::kDirect;
};

/// Net body-frame force/moment of the four nozzle thrusts [N]:
///   fx = (T2 + T3 - T1 - T4)/sqrt(2)
///   fy = (T1 + T2 - T3 - T4)/sqrt(2)
///   mz = d (T1 + T3 - T2 - T4)
template <typename Derived>
GeneralizedForce<typename Derived::Scalar> resolve_thrust(
    const Eigen::MatrixBase<Derived>& thrusts, const ModuleGeometry& geometry) {
  using Scalar = typename Derived::Scalar;
  static_assert(Derived::SizeAtCompileTime == kThrusterCount ||
                Derived::SizeAtCompileTime == Eigen::Dynamic);
  if (thrusts.size() != kThrusterCount)
    throw std::invalid_argument("expected 4 thrust values");
  if (!thrusts.allFinite())
    throw std::invalid_argument("thrust values must be finite");
  const Scalar t1 = thrusts(0), t2 = thrusts(1), t3 = thrusts(2), t4 = thrusts(3);
  const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
  GeneralizedForce<Scalar> f;
  f.fx = (t2 + t3 - t1 - t4) * inv_sqrt2;
  f.fy = (t1 + t2 - t3 - t4) * inv_sqrt2;
  f.mz = Scalar(geometry.moment_arm) * (t1 + t3 - t2 - t4);
  return f;
}

/// Time derivative of the augmented state. Planar 3-DOF body-frame dynamics
/// with Coriolis coupling; mass and inertia are constant states.
template <typename Scalar>
StateVector<Scalar> state_derivative(const StateVector<Scalar>& x,
                                     const GeneralizedForce<Scalar>& force,
                                     const FrictionModel& friction = {},
                                     KinematicsMode mode = KinematicsMode::kDirect) {
  const Scalar m = x[kMass];
  const Scalar izz = x[kIzz];
  if (!(m > Scalar(0)) || !(izz > Scalar(0)))
    throw std::domain_error("mass and izz must be positive");

  const Scalar u = x[kU], v = x[kV], r = x[kR];
  StateVector<Scalar> dx;
  if (mode == KinematicsMode::kDirect) {
    dx[kX] = u;
    dx[kY] = v;
  } else {
    const Scalar c = std::cos(x[kPsi]);
    const Scalar s = std::sin(x[kPsi]);
    dx[kX] = u * c - v * s;
    dx[kY] = u * s + v * c;
  }
  dx[kPsi] = r;
  dx[kU] = force.fx / m + r * v;
  dx[kV] = force.fy / m - r * u;
  dx[kR] = force.mz / izz;
  if (friction.enabled) {
    dx[kU] -= friction.c_translation * u / m;
    dx[kV] -= friction.c_translation * v / m;
    const Scalar speed = std::sqrt(u * u + v * v);
    dx[kR] += (-friction.c_rotation * r + friction.bias_cross * speed) / izz;
  }
  dx[kMass] = Scalar(0);
  dx[kIzz] = Scalar(0);
  return dx;
}

/// Analytic Jacobian of state_derivative with respect to the full augmented
/// state, including the parameter columns d(udot)/dm = -fx/m^2 etc.
template <typename Scalar>
StateMatrix<Scalar> dynamics_jacobian(const StateVector<Scalar>& x,
                                      const GeneralizedForce<Scalar>& force,
                                      const FrictionModel& friction = {},
                                      KinematicsMode mode = KinematicsMode::kDirect) {
  const Scalar m = x[kMass];
  const Scalar izz = x[kIzz];
  if (!(m > Scalar(0)) || !(izz > Scalar(0)))
    throw std::domain_error("mass and izz must be positive");

  const Scalar u = x[kU], v = x[kV], r = x[kR];
  StateMatrix<Scalar> jac = StateMatrix<Scalar>::Zero();

  if (mode == KinematicsMode::kDirect) {
    jac(kX, kU) = Scalar(1);
    jac(kY, kV) = Scalar(1);
  } else {
    const Scalar c = std::cos(x[kPsi]);
    const Scalar s = std::sin(x[kPsi]);
    jac(kX, kPsi) = -u * s - v * c;
    jac(kX, kU) = c;
    jac(kX, kV) = -s;
    jac(kY, kPsi) = u * c - v * s;
    jac(kY, kU) = s;
    jac(kY, kV) = c;
  }
  jac(kPsi, kR) = Scalar(1);

  jac(kU, kV) = r;
  jac(kU, kR) = v;
  jac(kU, kMass) = -force.fx / (m * m);

  jac(kV, kU) = -r;
  jac(kV, kR) = -u;
  jac(kV, kMass) = -force.fy / (m * m);

  jac(kR, kIzz) = -force.mz / (izz * izz);

  if (friction.enabled) {
    jac(kU, kU) -= friction.c_translation / m;
    jac(kV, kV) -= friction.c_translation / m;
    jac(kU, kMass) += friction.c_translation * u / (m * m);
    jac(kV, kMass) += friction.c_translation * v / (m * m);
    jac(kR, kR) = -friction.c_rotation / izz;
    const Scalar speed = std::sqrt(u * u + v * v);
    if (speed > Scalar(0)) {
      jac(kR, kU) = friction.bias_cross * u / (speed * izz);
      jac(kR, kV) = friction.bias_cross * v / (speed * izz);
    }
    jac(kR, kIzz) =
        -(force.mz - friction.c_rotation * r + friction.bias_cross * speed) /
        (izz * izz);
  }
  return jac;
}

/// One classical 4th-order Runge-Kutta step of dx/dt = f(t, x).
template <typename F, typename X>
X rk4_step(F&& f, double t, const X& x, double h) {
  const X k1 = f(t, x);
  const X k2 = f(t + 0.5 * h, X(x + 0.5 * h * k1));
  const X k3 = f(t + 0.5 * h, X(x + 0.5 * h * k2));
  const X k4 = f(t + h, X(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct Trajectory {
  Eigen::VectorXd times;
  Eigen::Matrix<double, kStateDim, Eigen::Dynamic> states;

  Eigen::Index size() const { return times.size(); }
};

namespace detail {

// Command governing an integrator step [t, t+h). Looked up mid-step so the
// sample active on the interval drives all four RK4 stages; the stage at t+h
// must not see the next zero-order-hold sample.
inline GeneralizedForced step_force(const InputSequence& input,
                                    const ModuleGeometry& geometry, double t,
                                    double h) {
  return resolve_thrust(input.at(t + 0.5 * h), geometry);
}

// RK4 step of the state alone under a constant commanded force.
inline Vec8 step_state(const Vec8& x, double t, double h, const InputSequence& input,
                       const PlantModel& plant) {
  const GeneralizedForced force = step_force(input, plant.geometry, t, h);
  auto f = [&](double, const Vec8& xs) {
    return state_derivative(xs, force, plant.friction, plant.kinematics);
  };
  return rk4_step(f, t, x, h);
}

// Joint RK4 step of the state and the state transition matrix,
// d(Phi)/dt = J(x) Phi, sharing stage states.
inline void step_state_stm(Vec8& x, Mat8& phi, double t, double h,
                           const InputSequence& input, const PlantModel& plant) {
  const GeneralizedForced force = step_force(input, plant.geometry, t, h);
  const auto f = [&](const Vec8& xs) {
    return state_derivative(xs, force, plant.friction, plant.kinematics);
  };
  const auto jac = [&](const Vec8& xs) {
    return dynamics_jacobian(xs, force, plant.friction, plant.kinematics);
  };

  const Vec8 k1 = f(x);
  const Mat8 l1 = jac(x) * phi;
  const Vec8 x2 = x + 0.5 * h * k1;
  const Vec8 k2 = f(x2);
  const Mat8 l2 = jac(x2) * (phi + 0.5 * h * l1);
  const Vec8 x3 = x + 0.5 * h * k2;
  const Vec8 k3 = f(x3);
  const Mat8 l3 = jac(x3) * (phi + 0.5 * h * l2);
  const Vec8 x4 = x + h * k3;
  const Vec8 k4 = f(x4);
  const Mat8 l4 = jac(x4) * (phi + h * l3);

  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  phi += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
}

}  // namespace detail

/// Fixed-step RK4 propagation over [t0, tf]; the trajectory is sampled at
/// t0, t0+dt, ..., tf (the last step is shortened when tf is off-grid).
/// The input must cover the whole span and must be in the force domain.
inline Trajectory propagate(const Vec8& state0, const InputSequence& input,
                            const PlantModel& plant, double dt, double t0,
                            double tf) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(tf > t0)) throw std::invalid_argument("tf must exceed t0");
  input.require_force_domain("propagate");
  if (!input.covers(t0, tf))
    throw ConfigurationError("input sequence does not cover the requested span");

  const auto n_steps = static_cast<Eigen::Index>(std::ceil((tf - t0) / dt - 1e-9));
  Trajectory traj;
  traj.times.resize(n_steps + 1);
  traj.states.resize(kStateDim, n_steps + 1);

  Vec8 x = state0;
  double t = t0;
  traj.times[0] = t;
  traj.states.col(0) = x;
  for (Eigen::Index i = 0; i < n_steps; ++i) {
    const double t_next = (i + 1 == n_steps) ? tf : t0 + dt * static_cast<double>(i + 1);
    x = detail::step_state(x, t, t_next - t, input, plant);
    t = t_next;
    traj.times[i + 1] = t;
    traj.states.col(i + 1) = x;
  }
  return traj;
}

/// Propagates the state together with the state transition matrix
/// Phi(t1, t0); Phi(t0, t0) = I.
inline std::pair<Vec8, Mat8> propagate_stm(const Vec8& state0,
                                           const InputSequence& input,
                                           const PlantModel& plant, double dt,
                                           double t0, double t1) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (t1 < t0) throw std::invalid_argument("t1 must not precede t0");
  input.require_force_domain("propagate_stm");
  Vec8 x = state0;
  Mat8 phi = Mat8::Identity();
  if (t1 == t0) return {x, phi};
  if (!input.covers(t0, t1))
    throw ConfigurationError("input sequence does not cover the requested span");

  const auto n_steps = static_cast<Eigen::Index>(std::ceil((t1 - t0) / dt - 1e-9));
  double t = t0;
  for (Eigen::Index i = 0; i < n_steps; ++i) {
    const double t_next = (i + 1 == n_steps) ? t1 : t0 + dt * static_cast<double>(i + 1);
    detail::step_state_stm(x, phi, t, t_next - t, input, plant);
    t = t_next;
  }
  return {x, phi};
}

}  // namespace inertiaid
