#include "inertiaid/thrust_model.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "inertiaid/errors.hpp"

namespace inertiaid {

void ThrustCurve::validate() const {
  if (order < 1) throw std::invalid_argument("curve order must be >= 1");
  if (coefficients.size() != static_cast<std::size_t>(order) + 1)
    throw std::invalid_argument("coefficient count must equal order+1");
  if (active_nozzles < 1 || active_nozzles > kThrusterCount)
    throw std::invalid_argument("active_nozzles must be in 1..4");
}

double ThrustCurve::poly_gram_force(double duty) const {
  // Horner, highest order first.
  double value = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
    value = value * duty + *it;
  return value;
}

const ThrustCurve& ThrustCurveSet::require(int active_nozzles) const {
  if (active_nozzles < 1 || active_nozzles > kThrusterCount)
    throw std::invalid_argument("active_nozzles must be in 1..4");
  const auto& slot = by_count[static_cast<std::size_t>(active_nozzles - 1)];
  if (!slot)
    throw ConfigurationError("no thrust curve registered for " +
                             std::to_string(active_nozzles) + " active nozzles");
  return *slot;
}

void ThrustCurveSet::insert(ThrustCurve curve) {
  curve.validate();
  by_count[static_cast<std::size_t>(curve.active_nozzles - 1)] = std::move(curve);
}

void DutyCommand::validate() const {
  for (int i = 0; i < kThrusterCount; ++i)
    if (!(duties[i] >= 0.0) || !(duties[i] <= 100.0))
      throw std::invalid_argument("duty cycles must lie in [0, 100]");
}

ThrustCurve fit_thrust_curve(const std::vector<ThrustSample>& samples, int order,
                             int active_nozzles) {
  if (order < 1) throw std::invalid_argument("fit order must be >= 1");
  const auto q = static_cast<Eigen::Index>(samples.size());
  if (q <= order + 1)
    throw std::invalid_argument("need more samples than coefficients");
  for (const auto& s : samples) {
    if (s.duty < 10.0 || s.duty > 90.0)
      throw std::invalid_argument("bench duties must lie in [10, 90]");
    if (!std::isfinite(s.thrust))
      throw std::invalid_argument("thrust samples must be finite");
  }

  // Vandermonde regression on duty/100 to keep the columns comparably
  // scaled; coefficients are mapped back to percent^k units afterwards.
  Eigen::MatrixXd h(q, order + 1);
  Eigen::VectorXd z(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const double s = samples[static_cast<std::size_t>(i)].duty / 100.0;
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
      h(i, k) = p;
      p *= s;
    }
    z[i] = samples[static_cast<std::size_t>(i)].thrust;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(h);
  if (qr.rank() < order + 1)
    throw SingularSystemError(
        "thrust fit normal equations are rank deficient (degenerate duties)");
  const Eigen::VectorXd scaled = qr.solve(z);

  ThrustCurve curve;
  curve.order = order;
  curve.active_nozzles = active_nozzles;
  curve.coefficients.resize(static_cast<std::size_t>(order) + 1);
  double scale = 1.0;
  for (int k = 0; k <= order; ++k) {
    curve.coefficients[static_cast<std::size_t>(k)] = scaled[k] / scale;
    scale *= 100.0;
  }
  curve.validate();
  return curve;
}

FitOrderReport compare_fit_orders(const std::vector<ThrustSample>& samples,
                                  const std::vector<int>& orders,
                                  int active_nozzles) {
  if (orders.empty()) throw std::invalid_argument("no fit orders given");
  std::vector<int> sorted = orders;
  std::sort(sorted.begin(), sorted.end());

  double thrust_scale = 0.0;
  for (const auto& s : samples) thrust_scale = std::max(thrust_scale, std::abs(s.thrust));

  FitOrderReport report;
  for (int order : sorted) {
    const ThrustCurve curve = fit_thrust_curve(samples, order, active_nozzles);
    double ss = 0.0;
    for (const auto& s : samples) {
      const double res = s.thrust - curve.poly_gram_force(s.duty);
      ss += res * res;
    }
    report.entries.push_back({order, std::sqrt(ss / static_cast<double>(samples.size()))});
  }

  // Flag the smallest order after which the residual stops improving by at
  // least 5%. An order already at numerical-noise level fits exactly and is
  // flagged outright.
  const double exact_floor = 1e-9 * std::max(thrust_scale, 1.0);
  report.flagged_order = report.entries.back().order;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const double rms = report.entries[i].rms;
    if (rms < exact_floor) {
      report.flagged_order = report.entries[i].order;
      break;
    }
    if (i + 1 < report.entries.size()) {
      const double next = report.entries[i + 1].rms;
      if ((rms - next) / rms < 0.05) {
        report.flagged_order = report.entries[i].order;
        break;
      }
    }
  }
  return report;
}

double eval_thrust(const ThrustCurve& curve, double duty, HighDutyMode high_mode) {
  if (!(duty >= 0.0) || !(duty <= 100.0))
    throw std::invalid_argument("duty must lie in [0, 100]");
  if (duty < curve.duty_min) return 0.0;
  if (duty > curve.duty_max) {
    if (high_mode == HighDutyMode::kZero) return 0.0;
    duty = curve.duty_max;
  }
  const double gf = curve.poly_gram_force(duty);
  return std::max(gf, 0.0) * kGramForceToNewton;
}

GeneralizedForced duty_to_force(const DutyCommand& command,
                                const ThrustCurveSet& curves,
                                const ModuleGeometry& geometry,
                                HighDutyMode high_mode) {
  command.validate();
  int active = 0;
  for (int i = 0; i < kThrusterCount; ++i)
    if (command.duties[i] >= 10.0) ++active;
  Vec4 thrusts = Vec4::Zero();
  if (active > 0) {
    const ThrustCurve& curve = curves.require(active);
    for (int i = 0; i < kThrusterCount; ++i)
      thrusts[i] = eval_thrust(curve, command.duties[i], high_mode);
  }
  return resolve_thrust(thrusts, geometry);
}

InputSequence to_force_domain(const InputSequence& duty_sequence,
                              const ThrustCurveSet& curves,
                              HighDutyMode high_mode) {
  if (duty_sequence.domain != InputDomain::kDuty)
    throw ConfigurationError("input sequence is not duty-domain");
  InputSequence out = duty_sequence;
  out.domain = InputDomain::kForce;
  for (Eigen::Index c = 0; c < duty_sequence.size(); ++c) {
    int active = 0;
    for (int i = 0; i < kThrusterCount; ++i)
      if (duty_sequence.commands(i, c) >= 10.0) ++active;
    for (int i = 0; i < kThrusterCount; ++i) {
      out.commands(i, c) =
          active > 0 ? eval_thrust(curves.require(active),
                                   duty_sequence.commands(i, c), high_mode)
                     : 0.0;
    }
  }
  return out;
}

const ThrustCurveSet& tpods_60psi_curves() {
  static const ThrustCurveSet set = [] {
    ThrustCurveSet s;
    auto cubic = [](int nozzles, double a0, double a1, double a2, double a3) {
      ThrustCurve c;
      c.order = 3;
      c.active_nozzles = nozzles;
      c.coefficients = {a0, a1, a2, a3};
      return c;
    };
    s.insert(cubic(1, -9.0692, 1.0439, -0.0128, 7.88e-5));
    s.insert(cubic(2, -7.4315, 0.8516, -0.0104, 6.35e-5));
    s.insert(cubic(3, -6.6022, 0.7555, -0.0096, 6.11e-5));
    s.insert(cubic(4, -6.6791, 0.7700, -0.0104, 6.34e-5));
    return s;
  }();
  return set;
}

}  // namespace inertiaid
