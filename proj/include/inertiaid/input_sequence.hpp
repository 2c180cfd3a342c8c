#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "inertiaid/errors.hpp"
#include "inertiaid/types.hpp"

namespace inertiaid {

// Whether the four per-thruster commands are PWM duty cycles [%] or nozzle
// forces [N]. Force-domain sequences may be signed (synthetic studies).
enum class InputDomain { kDuty, kForce };

// Time-indexed thruster commands on a uniform grid, held constant between
// samples (zero-order hold).
struct InputSequence {
  InputDomain domain = InputDomain::kForce;
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::Matrix<double, kThrusterCount, Eigen::Dynamic> commands;

  Eigen::Index size() const { return commands.cols(); }
  bool empty() const { return commands.cols() == 0; }

  double time_at(Eigen::Index i) const { return t0 + dt * static_cast<double>(i); }
  double t_end() const {
    return empty() ? t0 : time_at(commands.cols() - 1);
  }

  // Zero-order-hold lookup; clamps outside the grid.
  Vec4 at(double t) const {
    if (empty()) throw ConfigurationError("input sequence is empty");
    const double raw = (t - t0) / dt;
    auto idx = static_cast<Eigen::Index>(std::floor(raw + 1e-9));
    if (idx < 0) idx = 0;
    if (idx >= commands.cols()) idx = commands.cols() - 1;
    return commands.col(idx);
  }

  bool covers(double from, double to) const {
    if (empty()) return false;
    constexpr double slack = 1e-9;
    return t0 <= from + slack && t_end() >= to - slack;
  }

  void require_force_domain(const char* who) const {
    if (domain != InputDomain::kForce)
      throw ConfigurationError(std::string(who) +
                               " requires a force-domain input sequence");
  }
};

// Allocates an input sequence spanning [t0, t0+duration] inclusive.
inline InputSequence make_uniform_input(InputDomain domain, double t0, double dt,
                                        double duration) {
  if (dt <= 0.0) throw std::invalid_argument("input dt must be positive");
  if (duration < 0.0) throw std::invalid_argument("duration must be non-negative");
  InputSequence seq;
  seq.domain = domain;
  seq.t0 = t0;
  seq.dt = dt;
  const auto n = static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;
  seq.commands.setZero(kThrusterCount, n);
  return seq;
}

}  // namespace inertiaid
