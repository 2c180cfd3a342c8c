#pragma once

#include <array>
#include <optional>
#include <vector>

#include "inertiaid/dynamics.hpp"
#include "inertiaid/input_sequence.hpp"
#include "inertiaid/types.hpp"

namespace inertiaid {

// One bench measurement: commanded PWM duty cycle and the (pre-averaged)
// thrust read off the scale.
struct ThrustSample {
  double duty = 0.0;    // [%], 0..100
  double thrust = 0.0;  // [gram-force]
};

// Treatment of commands above the upper deadband edge: hold the 90% value or
// produce nothing.
enum class HighDutyMode { kClamp, kZero };

// Polynomial duty->thrust map for a given number of simultaneously active
// nozzles. Coefficients are in gram-force per percent^k (a0 first).
struct ThrustCurve {
  std::vector<double> coefficients;
  int order = 0;
  int active_nozzles = 1;
  double duty_min = 10.0;  // valid / actuatable duty range [%]
  double duty_max = 90.0;

  void validate() const;

  // Raw polynomial value in gram-force, no deadband or clamping.
  double poly_gram_force(double duty) const;
};

// Curves keyed by simultaneous-nozzle count (1..4).
struct ThrustCurveSet {
  std::array<std::optional<ThrustCurve>, kThrusterCount> by_count;

  const ThrustCurve& require(int active_nozzles) const;
  void insert(ThrustCurve curve);
};

// Duty-cycle command for the four thrusters.
struct DutyCommand {
  Vec4 duties = Vec4::Zero();  // [%], each 0..100

  void validate() const;
};

/// Least-squares polynomial fit of thrust [gf] against duty cycle [%].
/// Requires more samples than coefficients and duties inside [10, 90].
ThrustCurve fit_thrust_curve(const std::vector<ThrustSample>& samples, int order,
                             int active_nozzles);

struct FitOrderEntry {
  int order = 0;
  double rms = 0.0;  // residual RMS [gf]
};

struct FitOrderReport {
  std::vector<FitOrderEntry> entries;
  // Smallest order beyond which the fit stops improving by at least 5%
  // (or that already fits the data to numerical precision).
  int flagged_order = 0;
};

FitOrderReport compare_fit_orders(const std::vector<ThrustSample>& samples,
                                  const std::vector<int>& orders,
                                  int active_nozzles = 1);

/// Thrust in newtons for one nozzle at the given duty cycle. Below 10% the
/// valve cannot actuate (0 N); above 90% the output is clamped (or zeroed,
/// per mode); negative polynomial values clamp to zero.
double eval_thrust(const ThrustCurve& curve, double duty,
                   HighDutyMode high_mode = HighDutyMode::kClamp);

/// Maps a 4-thruster duty command to a body-frame generalized force, using
/// the curve matching the number of active (>= 10% duty) nozzles.
GeneralizedForced duty_to_force(const DutyCommand& command,
                                const ThrustCurveSet& curves,
                                const ModuleGeometry& geometry,
                                HighDutyMode high_mode = HighDutyMode::kClamp);

/// Converts a duty-domain input sequence to per-thruster forces [N].
InputSequence to_force_domain(const InputSequence& duty_sequence,
                              const ThrustCurveSet& curves,
                              HighDutyMode high_mode = HighDutyMode::kClamp);

/// Built-in characterization of the pneumatic bench at 60 PSI; cubic curves
/// for 1-4 active nozzles.
const ThrustCurveSet& tpods_60psi_curves();

}  // namespace inertiaid
