#include "inertiaid/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "inertiaid/errors.hpp"
#include "inertiaid/rng.hpp"

namespace inertiaid {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || !std::isfinite(value))
    throw ParseError("cannot parse number '" + text + "'", line_no);
  return value;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path.string());
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  return out;
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' '))
    s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

}  // namespace

DatasetBundle generate_synthetic(const ScenarioConfig& scenario) {
  if (scenario.input.empty())
    throw ConfigurationError("scenario has no input sequence");
  scenario.input.require_force_domain("generate_synthetic");
  for (int k = 0; k < kOutputDim; ++k)
    if (!(scenario.noise_std[k] >= 0.0))
      throw std::invalid_argument("noise stds must be non-negative");
  if (!(scenario.meas_rate_hz > 0.0))
    throw std::invalid_argument("measurement rate must be positive");

  Vec8 truth0 = scenario.initial_state;
  truth0[kMass] = scenario.true_mass;
  truth0[kIzz] = scenario.true_izz;
  if (!(truth0[kMass] > 0.0) || !(truth0[kIzz] > 0.0))
    throw std::invalid_argument("true mass and izz must be positive");

  const double t0 = scenario.input.t0;
  const double span = scenario.input.t_end() - t0;
  const auto n =
      static_cast<Eigen::Index>(std::floor(span * scenario.meas_rate_hz + 1e-9)) + 1;

  DatasetBundle bundle;
  bundle.input = scenario.input;
  bundle.truth.times.resize(n);
  bundle.truth.states.resize(kStateDim, n);
  bundle.measurements.resize(static_cast<std::size_t>(n));

  const Mat3 r_cov = scenario.noise_std.cwiseAbs2().asDiagonal();
  SeededRng rng(SeededRng::derive(scenario.seed, 0xda7a));

  Vec8 x = truth0;
  double t_prev = t0;
  for (Eigen::Index l = 0; l < n; ++l) {
    const double t_l = t0 + static_cast<double>(l) / scenario.meas_rate_hz;
    if (l > 0) {
      const double step_span = t_l - t_prev;
      const auto nsub = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::ceil(step_span / scenario.plant.dt - 1e-9)));
      const double h = step_span / static_cast<double>(nsub);
      double t = t_prev;
      for (Eigen::Index k = 0; k < nsub; ++k) {
        x = detail::step_state(x, t, h, scenario.input, scenario.plant.model);
        t = t_prev + h * static_cast<double>(k + 1);
      }
    }
    t_prev = t_l;
    bundle.truth.times[l] = t_l;
    bundle.truth.states.col(l) = x;

    auto& rec = bundle.measurements[static_cast<std::size_t>(l)];
    rec.t = t_l;
    rec.r_cov = r_cov;
    for (int ch = 0; ch < kOutputDim; ++ch)
      rec.z[ch] = x[ch] + scenario.noise_std[ch] * rng.gaussian();
  }

  bundle.meta.geometry = scenario.plant.model.geometry;
  bundle.meta.friction = scenario.plant.model.friction;
  bundle.meta.kinematics = scenario.plant.model.kinematics;
  bundle.meta.integrator_dt = scenario.plant.dt;
  bundle.meta.noise_std = scenario.noise_std;
  bundle.meta.true_mass = scenario.true_mass;
  bundle.meta.true_izz = scenario.true_izz;
  bundle.meta.meas_rate_hz = scenario.meas_rate_hz;
  bundle.meta.seed = scenario.seed;
  bundle.meta.angles_wrapped = false;
  return bundle;
}

void save_measurements_csv(const std::vector<MeasurementRecord>& records,
                           const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "time_s,x_m,y_m,psi_rad\n";
  for (const auto& rec : records)
    out << format_double(rec.t) << ',' << format_double(rec.z[0]) << ','
        << format_double(rec.z[1]) << ',' << format_double(rec.z[2]) << '\n';
}

namespace {

std::vector<MeasurementRecord> load_measurements_csv(
    const std::filesystem::path& path, const Mat3& r_cov) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trimmed(line) != "time_s,x_m,y_m,psi_rad")
    throw ParseError("expected header time_s,x_m,y_m,psi_rad", line_no);
  std::vector<MeasurementRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(trimmed(line));
    if (fields.size() != 4) throw ParseError("expected 4 columns", line_no);
    MeasurementRecord rec;
    rec.t = parse_double(fields[0], line_no);
    for (int ch = 0; ch < kOutputDim; ++ch)
      rec.z[ch] = parse_double(fields[static_cast<std::size_t>(ch + 1)], line_no);
    rec.r_cov = r_cov;
    records.push_back(rec);
  }
  return records;
}

constexpr const char* kTruthHeader =
    "time_s,x_m,y_m,psi_rad,u_mps,v_mps,r_radps,mass_kg,izz_kgm2";

void save_truth_csv(const TruthTrajectory& truth, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << kTruthHeader << '\n';
  for (Eigen::Index l = 0; l < truth.times.size(); ++l) {
    out << format_double(truth.times[l]);
    for (int k = 0; k < kStateDim; ++k)
      out << ',' << format_double(truth.states(k, l));
    out << '\n';
  }
}

TruthTrajectory load_truth_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trimmed(line) != kTruthHeader)
    throw ParseError("unexpected truth header", line_no);
  std::vector<std::array<double, kStateDim + 1>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(trimmed(line));
    if (fields.size() != kStateDim + 1)
      throw ParseError("expected 9 columns", line_no);
    std::array<double, kStateDim + 1> row{};
    for (std::size_t k = 0; k < fields.size(); ++k)
      row[k] = parse_double(fields[k], line_no);
    rows.push_back(row);
  }
  TruthTrajectory truth;
  truth.times.resize(static_cast<Eigen::Index>(rows.size()));
  truth.states.resize(kStateDim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t l = 0; l < rows.size(); ++l) {
    truth.times[static_cast<Eigen::Index>(l)] = rows[l][0];
    for (int k = 0; k < kStateDim; ++k)
      truth.states(k, static_cast<Eigen::Index>(l)) = rows[l][static_cast<std::size_t>(k + 1)];
  }
  return truth;
}

}  // namespace

void save_input_csv(const InputSequence& input, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "time_s,t1,t2,t3,t4,domain\n";
  const char* domain = input.domain == InputDomain::kDuty ? "duty" : "force";
  for (Eigen::Index c = 0; c < input.size(); ++c) {
    out << format_double(input.time_at(c));
    for (int i = 0; i < kThrusterCount; ++i)
      out << ',' << format_double(input.commands(i, c));
    out << ',' << domain << '\n';
  }
}

InputSequence load_input_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trimmed(line) != "time_s,t1,t2,t3,t4,domain")
    throw ParseError("expected header time_s,t1,t2,t3,t4,domain", line_no);

  std::vector<double> times;
  std::vector<Vec4> commands;
  InputDomain domain = InputDomain::kForce;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(trimmed(line));
    if (fields.size() != 6) throw ParseError("expected 6 columns", line_no);
    times.push_back(parse_double(fields[0], line_no));
    Vec4 cmd;
    for (int i = 0; i < kThrusterCount; ++i)
      cmd[i] = parse_double(fields[static_cast<std::size_t>(i + 1)], line_no);
    commands.push_back(cmd);
    const std::string dom = trimmed(fields[5]);
    if (dom == "duty")
      domain = InputDomain::kDuty;
    else if (dom == "force")
      domain = InputDomain::kForce;
    else
      throw ParseError("domain must be duty or force", line_no);
  }
  if (times.size() < 2) throw ValidationError("input CSV needs at least 2 samples");

  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw ValidationError("input times must be increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (std::abs(step - dt) > 1e-6 * std::max(1.0, dt))
      throw ValidationError("input times must be uniformly spaced");
  }

  InputSequence seq;
  seq.domain = domain;
  seq.t0 = times[0];
  seq.dt = dt;
  seq.commands.resize(kThrusterCount, static_cast<Eigen::Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i)
    seq.commands.col(static_cast<Eigen::Index>(i)) = commands[i];
  return seq;
}

namespace {

json meta_to_json(const DatasetMeta& meta, bool has_truth_file) {
  json j;
  j["format"] = "inertiaid-dataset-v1";
  j["geometry"] = {{"side_length_l_m", meta.geometry.side_length},
                   {"moment_arm_d_m", meta.geometry.moment_arm}};
  j["friction"] = {{"c_translation", meta.friction.c_translation},
                   {"c_rotation", meta.friction.c_rotation},
                   {"bias_cross", meta.friction.bias_cross},
                   {"enabled", meta.friction.enabled}};
  j["kinematics"] =
      meta.kinematics == KinematicsMode::kDirect ? "direct" : "rotated";
  j["integrator_dt_s"] = meta.integrator_dt;
  j["noise_std"] = {{"x_m", meta.noise_std[0]},
                    {"y_m", meta.noise_std[1]},
                    {"psi_rad", meta.noise_std[2]}};
  j["truth"] = {{"mass_kg", meta.true_mass}, {"izz_kgm2", meta.true_izz}};
  j["meas_rate_hz"] = meta.meas_rate_hz;
  j["seed"] = meta.seed;
  j["angles_wrapped"] = meta.angles_wrapped;
  j["files"] = {{"measurements", "measurements.csv"}, {"input", "input.csv"}};
  if (has_truth_file) j["files"]["truth"] = "truth.csv";
  return j;
}

DatasetMeta meta_from_json(const json& j) {
  DatasetMeta meta;
  meta.geometry = ModuleGeometry(j.at("geometry").at("side_length_l_m").get<double>(),
                                 j.at("geometry").at("moment_arm_d_m").get<double>());
  const auto& fr = j.at("friction");
  meta.friction.c_translation = fr.at("c_translation").get<double>();
  meta.friction.c_rotation = fr.at("c_rotation").get<double>();
  meta.friction.bias_cross = fr.at("bias_cross").get<double>();
  meta.friction.enabled = fr.at("enabled").get<bool>();
  meta.kinematics = j.at("kinematics").get<std::string>() == "rotated"
                        ? KinematicsMode::kRotated
                        : KinematicsMode::kDirect;
  meta.integrator_dt = j.at("integrator_dt_s").get<double>();
  meta.noise_std[0] = j.at("noise_std").at("x_m").get<double>();
  meta.noise_std[1] = j.at("noise_std").at("y_m").get<double>();
  meta.noise_std[2] = j.at("noise_std").at("psi_rad").get<double>();
  meta.true_mass = j.at("truth").at("mass_kg").get<double>();
  meta.true_izz = j.at("truth").at("izz_kgm2").get<double>();
  meta.meas_rate_hz = j.at("meas_rate_hz").get<double>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.angles_wrapped = j.at("angles_wrapped").get<bool>();
  return meta;
}

}  // namespace

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_measurements_csv(bundle.measurements, dir / "measurements.csv");
  save_input_csv(bundle.input, dir / "input.csv");
  const bool has_truth = !bundle.truth.empty();
  if (has_truth) save_truth_csv(bundle.truth, dir / "truth.csv");
  auto out = open_for_write(dir / "meta.json");
  out << meta_to_json(bundle.meta, has_truth).dump(2) << '\n';
}

DatasetBundle load_dataset(const std::filesystem::path& dir) {
  auto in = open_for_read(dir / "meta.json");
  json j;
  in >> j;
  DatasetBundle bundle;
  bundle.meta = meta_from_json(j);
  const Mat3 r_cov = bundle.meta.noise_std.cwiseAbs2().asDiagonal();
  bundle.measurements = load_measurements_csv(
      dir / j.at("files").at("measurements").get<std::string>(), r_cov);
  bundle.input = load_input_csv(dir / j.at("files").at("input").get<std::string>());
  if (j.at("files").contains("truth"))
    bundle.truth = load_truth_csv(dir / j.at("files").at("truth").get<std::string>());
  return bundle;
}

PoseLog ingest_pose_log(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trimmed(line) != "time_s,x_m,y_m,psi,unit_psi")
    throw ParseError("expected header time_s,x_m,y_m,psi,unit_psi", line_no);

  PoseLog log;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(trimmed(line));
    if (fields.size() != 5) throw ParseError("expected 5 columns", line_no);
    MeasurementRecord rec;
    rec.t = parse_double(fields[0], line_no);
    rec.z[0] = parse_double(fields[1], line_no);
    rec.z[1] = parse_double(fields[2], line_no);
    const double psi = parse_double(fields[3], line_no);
    const std::string unit = trimmed(fields[4]);
    if (unit == "rad")
      rec.z[2] = psi;
    else if (unit == "deg")
      rec.z[2] = deg2rad(psi);
    else
      throw ParseError("unit_psi must be rad or deg", line_no);
    log.records.push_back(rec);
  }
  if (log.records.empty()) throw ValidationError("pose log has no records");

  for (std::size_t i = 1; i < log.records.size(); ++i) {
    const double dt = log.records[i].t - log.records[i - 1].t;
    if (dt == 0.0)
      throw ValidationError("duplicate timestamp at t=" +
                            format_double(log.records[i].t));
    if (dt < 0.0)
      throw ValidationError("non-monotone timestamp at t=" +
                            format_double(log.records[i].t));
  }

  if (log.records.size() > 1) {
    // Nominal period from the median spacing; report long gaps.
    std::vector<double> gaps;
    gaps.reserve(log.records.size() - 1);
    for (std::size_t i = 1; i < log.records.size(); ++i)
      gaps.push_back(log.records[i].t - log.records[i - 1].t);
    std::vector<double> sorted = gaps;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double period = sorted[sorted.size() / 2];
    log.rate_hz = period > 0.0 ? 1.0 / period : 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i)
      if (gaps[i] > 5.0 * period)
        log.warnings.push_back("gap of " + format_double(gaps[i]) + " s after t=" +
                               format_double(log.records[i].t));
  }
  return log;
}

void SwingTestConfig::validate() const {
  if (!(mass > 0.0) || !(gravity > 0.0) || !(string_separation > 0.0) ||
      !(string_length > 0.0) || !(period > 0.0))
    throw std::invalid_argument("swing-test parameters must be positive");
}

double swing_test_moi(const SwingTestConfig& config) {
  config.validate();
  const double d = config.string_separation;
  const double t = config.period;
  return config.mass * config.gravity * d * d * t * t /
         (16.0 * kPi * kPi * config.string_length);
}

double average_period(const std::vector<double>& multi_cycle_durations,
                      int cycles_per_observation) {
  if (multi_cycle_durations.empty())
    throw std::invalid_argument("no oscillation observations");
  if (cycles_per_observation < 1)
    throw std::invalid_argument("cycles per observation must be >= 1");
  // Average each observation's per-cycle time first, then average the
  // observations.
  double sum = 0.0;
  for (double duration : multi_cycle_durations) {
    if (!(duration > 0.0))
      throw std::invalid_argument("oscillation durations must be positive");
    sum += duration / static_cast<double>(cycles_per_observation);
  }
  return sum / static_cast<double>(multi_cycle_durations.size());
}

std::vector<ThrustSample> load_thrust_samples_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trimmed(line) != "time_s,duty_pct,thrust_gf")
    throw ParseError("expected header time_s,duty_pct,thrust_gf", line_no);
  std::vector<ThrustSample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(trimmed(line));
    if (fields.size() != 3) throw ParseError("expected 3 columns", line_no);
    ThrustSample s;
    s.duty = parse_double(fields[1], line_no);
    s.thrust = parse_double(fields[2], line_no);
    samples.push_back(s);
  }
  return samples;
}

void save_thrust_curve_json(const ThrustCurve& curve,
                            const std::filesystem::path& path) {
  json j;
  j["order"] = curve.order;
  j["active_nozzles"] = curve.active_nozzles;
  j["coefficients"] = curve.coefficients;
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
}

ThrustCurve load_thrust_curve_json(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  json j;
  in >> j;
  ThrustCurve curve;
  curve.order = j.at("order").get<int>();
  curve.active_nozzles = j.at("active_nozzles").get<int>();
  curve.coefficients = j.at("coefficients").get<std::vector<double>>();
  curve.validate();
  return curve;
}

void save_sensitivity_csv(const SensitivityHistory& history,
                          const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "time_s,dx_dm,dy_dm,dpsi_dm,dx_dizz,dy_dizz,dpsi_dizz\n";
  for (std::size_t i = 0; i < history.states.size(); ++i) {
    const auto& s_y = history.states[i].s_y;
    out << format_double(history.times[static_cast<Eigen::Index>(i)]);
    for (int j = 0; j < kParamCount; ++j)
      for (int out_ch = 0; out_ch < kOutputDim; ++out_ch)
        out << ',' << format_double(s_y(out_ch, j));
    out << '\n';
  }
}

void save_ekf_steps_csv(const EkfResult& result, const TruthTrajectory* truth,
                        const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "time_s,x_m,y_m,psi_rad,u_mps,v_mps,r_radps,mass_kg,izz_kgm2,"
         "std_x,std_y,std_psi,std_u,std_v,std_r,std_mass,std_izz";
  const bool with_truth = truth && !truth->empty();
  if (with_truth) out << ",err_mass,err_izz";
  out << '\n';
  for (Eigen::Index l = 0; l < result.times.size(); ++l) {
    out << format_double(result.times[l]);
    for (int k = 0; k < kStateDim; ++k)
      out << ',' << format_double(result.means(k, l));
    const auto& p = result.covs[static_cast<std::size_t>(l)];
    for (int k = 0; k < kStateDim; ++k)
      out << ',' << format_double(std::sqrt(std::max(0.0, p(k, k))));
    if (with_truth) {
      out << ',' << format_double(result.means(kMass, l) - truth->states(kMass, l));
      out << ',' << format_double(result.means(kIzz, l) - truth->states(kIzz, l));
    }
    out << '\n';
  }
}

void save_mc_report_csv(const McReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "time_s,mean_err_mass,mean_err_izz,avg_var_mass,avg_var_izz,"
         "sample_var_mass,sample_var_izz,containment_mass,containment_izz\n";
  for (Eigen::Index l = 0; l < report.times.size(); ++l) {
    out << format_double(report.times[l]) << ','
        << format_double(report.mean_err_mass[l]) << ','
        << format_double(report.mean_err_izz[l]) << ','
        << format_double(report.avg_var_mass[l]) << ','
        << format_double(report.avg_var_izz[l]) << ','
        << format_double(report.sample_var_mass[l]) << ','
        << format_double(report.sample_var_izz[l]) << ','
        << format_double(report.containment_mass[l]) << ','
        << format_double(report.containment_izz[l]) << '\n';
  }
}

}  // namespace inertiaid
