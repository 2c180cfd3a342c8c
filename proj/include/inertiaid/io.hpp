#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inertiaid/estimators.hpp"
#include "inertiaid/excitation.hpp"
#include "inertiaid/input_sequence.hpp"
#include "inertiaid/montecarlo.hpp"
#include "inertiaid/thrust_model.hpp"
#include "inertiaid/types.hpp"

namespace inertiaid {

// Scenario for synthetic data generation. Internal units are SI + radians.
struct ScenarioConfig {
  PlantConfig plant;
  double true_mass = 2.268;      // [kg]
  double true_izz = 0.00378;     // [kg m^2]
  Vec8 initial_state = Vec8::Zero();  // mass/izz entries filled from the above
  Vec3 noise_std{0.01, 0.01, deg2rad(1.0)};  // x [m], y [m], psi [rad]
  double meas_rate_hz = 50.0;
  InputSequence input;
  std::uint64_t seed = 0;
};

struct DatasetMeta {
  ModuleGeometry geometry{};
  FrictionModel friction{};
  KinematicsMode kinematics = KinematicsMode::kDirect;
  double integrator_dt = 0.01;
  Vec3 noise_std{0.01, 0.01, deg2rad(1.0)};
  double true_mass = 0.0;  // 0 when unknown
  double true_izz = 0.0;
  double meas_rate_hz = 0.0;
  std::uint64_t seed = 0;
  bool angles_wrapped = false;  // true for ingested wrapped pose logs
};

// In-memory dataset: measurements + the applied input + (for synthetic data)
// the truth trajectory on the measurement grid.
struct DatasetBundle {
  std::vector<MeasurementRecord> measurements;
  InputSequence input;
  TruthTrajectory truth;  // empty for experimental data
  DatasetMeta meta;
};

/// Propagates the truth under the scenario input and samples noisy pose
/// measurements at the configured rate. Deterministic given the seed.
DatasetBundle generate_synthetic(const ScenarioConfig& scenario);

/// Writes measurements.csv, input.csv, truth.csv (if present) and meta.json
/// under dir. Deterministic byte-for-byte for a given bundle.
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_dataset(const std::filesystem::path& dir);

// Motion-capture pose log (no covariance; attached later from config).
struct PoseLog {
  double rate_hz = 0.0;
  std::vector<MeasurementRecord> records;  // r_cov left identity
  std::vector<std::string> warnings;       // e.g. gaps in the timeline
};

/// Reads a pose CSV with header time_s,x_m,y_m,psi,unit_psi (unit_psi in
/// {rad, deg}). Validates monotone unique timestamps; gaps longer than five
/// nominal sample periods are reported as warnings.
PoseLog ingest_pose_log(const std::filesystem::path& path);

// Bifilar swing test: two parallel strings, oscillation about the vertical.
struct SwingTestConfig {
  double mass = 0.0;         // [kg]
  double gravity = 9.80665;  // [m/s^2]
  double string_separation = 0.0;  // D [m]
  double string_length = 0.0;      // unsupported length h [m]
  double period = 0.0;             // one full oscillation T [s]

  void validate() const;
};

/// Moment of inertia from the swing test: m g D^2 T^2 / (16 pi^2 h).
double swing_test_moi(const SwingTestConfig& config);

/// Reduces repeated m-cycle stopwatch observations to a single period by
/// averaging each observation's per-cycle time, then averaging those.
double average_period(const std::vector<double>& multi_cycle_durations,
                      int cycles_per_observation = 10);

// --- CSV / JSON helpers used by the CLI and the dataset bundle ---

void save_input_csv(const InputSequence& input, const std::filesystem::path& path);
InputSequence load_input_csv(const std::filesystem::path& path);

void save_measurements_csv(const std::vector<MeasurementRecord>& records,
                           const std::filesystem::path& path);

std::vector<ThrustSample> load_thrust_samples_csv(const std::filesystem::path& path);

void save_thrust_curve_json(const ThrustCurve& curve,
                            const std::filesystem::path& path);
ThrustCurve load_thrust_curve_json(const std::filesystem::path& path);

void save_sensitivity_csv(const SensitivityHistory& history,
                          const std::filesystem::path& path);

void save_ekf_steps_csv(const EkfResult& result, const TruthTrajectory* truth,
                        const std::filesystem::path& path);

void save_mc_report_csv(const McReport& report,
                        const std::filesystem::path& path);

/// Canonical shortest-roundtrip text for a double (%.17g); used everywhere a
/// number is persisted so that re-ingestion is bit-exact.
std::string format_double(double value);

}  // namespace inertiaid
