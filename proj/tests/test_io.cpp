#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "inertiaid/errors.hpp"
#include "inertiaid/io.hpp"
#include "inertiaid/presets.hpp"
#include "inertiaid/rng.hpp"

using namespace inertiaid;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("inertiaid_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig small_scenario(std::uint64_t seed) {
  ScenarioConfig scenario = sine_benchmark_scenario(seed);
  scenario.input = phase_shifted_sine(25.0 * kGramForceToNewton, 1.0, kPi / 4.0,
                                      5.0, 0.01);
  return scenario;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round-trips bit-exactly") {
  SeededRng rng(77);
  for (int i = 0; i < 2000; ++i) {
    double v;
    switch (i % 4) {
      case 0: v = rng.uniform(-1e6, 1e6); break;
      case 1: v = rng.gaussian() * 1e-9; break;
      case 2: v = rng.gaussian() * 1e12; break;
      default: v = static_cast<double>(static_cast<int>(rng.uniform(-100, 100)));
    }
    const std::string text = format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
}

TEST_CASE("zero noise reproduces the truth exactly") {
  ScenarioConfig scenario = small_scenario(1);
  scenario.noise_std = Vec3::Zero();
  const DatasetBundle bundle = generate_synthetic(scenario);
  for (std::size_t l = 0; l < bundle.measurements.size(); ++l) {
    const auto& rec = bundle.measurements[l];
    const auto truth = bundle.truth.states.col(static_cast<Eigen::Index>(l));
    CHECK(rec.z[0] == truth[kX]);
    CHECK(rec.z[1] == truth[kY]);
    CHECK(rec.z[2] == truth[kPsi]);
  }
}

TEST_CASE("measurement count and empirical noise level") {
  const DatasetBundle bundle = generate_synthetic(sine_benchmark_scenario(2));
  CHECK(bundle.measurements.size() == 6001);  // 120 s at 50 Hz

  Vec3 ss = Vec3::Zero();
  for (std::size_t l = 0; l < bundle.measurements.size(); ++l) {
    const Vec3 diff = bundle.measurements[l].z -
                      bundle.truth.states.col(static_cast<Eigen::Index>(l)).head<3>();
    ss += diff.cwiseAbs2();
  }
  const Vec3 std = (ss / static_cast<double>(bundle.measurements.size())).cwiseSqrt();
  CHECK(std[0] == doctest::Approx(0.01).epsilon(0.05));
  CHECK(std[1] == doctest::Approx(0.01).epsilon(0.05));
  CHECK(std[2] == doctest::Approx(deg2rad(1.0)).epsilon(0.05));
}

TEST_CASE("dataset save is deterministic and reload is bit-exact") {
  const DatasetBundle bundle = generate_synthetic(small_scenario(3));
  TempDir a("bundle_a"), b("bundle_b");
  save_dataset(bundle, a.path);
  save_dataset(bundle, b.path);
  for (const char* name : {"measurements.csv", "input.csv", "truth.csv", "meta.json"})
    CHECK(slurp(a.path / name) == slurp(b.path / name));

  const DatasetBundle loaded = load_dataset(a.path);
  REQUIRE(loaded.measurements.size() == bundle.measurements.size());
  for (std::size_t l = 0; l < bundle.measurements.size(); ++l) {
    CHECK(loaded.measurements[l].t == bundle.measurements[l].t);
    CHECK((loaded.measurements[l].z - bundle.measurements[l].z).norm() == 0.0);
    CHECK((loaded.measurements[l].r_cov - bundle.measurements[l].r_cov).norm() == 0.0);
  }
  CHECK(loaded.input.domain == bundle.input.domain);
  CHECK((loaded.input.commands - bundle.input.commands).norm() == 0.0);
  CHECK((loaded.truth.states - bundle.truth.states).norm() == 0.0);
  CHECK(loaded.meta.true_mass == bundle.meta.true_mass);
  CHECK(loaded.meta.seed == bundle.meta.seed);

  // Regenerating from the same seed gives the same bytes.
  const DatasetBundle again = generate_synthetic(small_scenario(3));
  TempDir c("bundle_c");
  save_dataset(again, c.path);
  CHECK(slurp(a.path / "measurements.csv") == slurp(c.path / "measurements.csv"));
}

TEST_CASE("missing dataset directory is a configuration error") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/inertiaid"), ConfigurationError);
}

TEST_CASE("pose log ingestion") {
  TempDir dir("pose");
  SUBCASE("well-formed rows with degree conversion") {
    std::ofstream out(dir.path / "log.csv");
    out << "time_s,x_m,y_m,psi,unit_psi\n";
    out << "0.0,0.1,0.2,90,deg\n";
    out << "0.1,0.2,0.3,0.5,rad\n";
    out << "0.2,0.3,0.4,-45,deg\n";
    out.close();
    const PoseLog log = ingest_pose_log(dir.path / "log.csv");
    REQUIRE(log.records.size() == 3);
    CHECK(log.records[0].z[2] == doctest::Approx(kPi / 2.0));
    CHECK(log.records[1].z[2] == doctest::Approx(0.5));
    CHECK(log.records[2].z[2] == doctest::Approx(-kPi / 4.0));
    CHECK(log.rate_hz == doctest::Approx(10.0));
    CHECK(log.warnings.empty());
  }
  SUBCASE("duplicate timestamps rejected") {
    std::ofstream out(dir.path / "dup.csv");
    out << "time_s,x_m,y_m,psi,unit_psi\n0,0,0,0,rad\n0,1,1,0,rad\n";
    out.close();
    CHECK_THROWS_AS(ingest_pose_log(dir.path / "dup.csv"), ValidationError);
  }
  SUBCASE("non-monotone time rejected") {
    std::ofstream out(dir.path / "rev.csv");
    out << "time_s,x_m,y_m,psi,unit_psi\n0,0,0,0,rad\n1,0,0,0,rad\n0.5,0,0,0,rad\n";
    out.close();
    CHECK_THROWS_AS(ingest_pose_log(dir.path / "rev.csv"), ValidationError);
  }
  SUBCASE("malformed row reports the line") {
    std::ofstream out(dir.path / "bad.csv");
    out << "time_s,x_m,y_m,psi,unit_psi\n0,0,0,0,rad\nnot-a-number,0,0,0,rad\n";
    out.close();
    try {
      ingest_pose_log(dir.path / "bad.csv");
      FAIL("expected ParseError");
    } catch (const ParseError& err) {
      CHECK(err.line == 3);
    }
  }
  SUBCASE("gap warning") {
    std::ofstream out(dir.path / "gap.csv");
    out << "time_s,x_m,y_m,psi,unit_psi\n";
    for (int i = 0; i < 10; ++i)
      out << 0.1 * i << ",0,0,0,rad\n";
    out << "2.0,0,0,0,rad\n";  // ten periods of silence
    out.close();
    const PoseLog log = ingest_pose_log(dir.path / "gap.csv");
    CHECK(log.warnings.size() == 1);
  }
  SUBCASE("high-rate log at the hardware rate") {
    std::ofstream out(dir.path / "vicon.csv");
    out << "time_s,x_m,y_m,psi,unit_psi\n";
    const int n = static_cast<int>(std::llround(14.0 * 120.0)) + 1;
    for (int i = 0; i < n; ++i)
      out << format_double(i / 120.0) << ",0.1,0.2,10,deg\n";
    out.close();
    const PoseLog log = ingest_pose_log(dir.path / "vicon.csv");
    CHECK(std::abs(static_cast<long long>(log.records.size()) - 1681) <= 1);
    CHECK(log.rate_hz == doctest::Approx(120.0).epsilon(1e-6));
  }
}

TEST_CASE("swing test moment of inertia") {
  SwingTestConfig cfg;
  cfg.mass = 0.720;
  cfg.string_separation = 0.1;
  cfg.string_length = 0.5;
  cfg.period = 1.0;

  // Independent hand evaluation of m g D^2 T^2 / (16 pi^2 h).
  const double by_hand =
      0.720 * 9.80665 * 0.1 * 0.1 * 1.0 * 1.0 / (16.0 * kPi * kPi * 0.5);
  CHECK(swing_test_moi(cfg) == doctest::Approx(by_hand).epsilon(1e-12));
  CHECK(swing_test_moi(cfg) == doctest::Approx(8.9426e-4).epsilon(1e-4));

  SwingTestConfig wide = cfg;
  wide.string_separation *= 2.0;
  CHECK(swing_test_moi(wide) == doctest::Approx(4.0 * swing_test_moi(cfg)));

  SwingTestConfig bad = cfg;
  bad.period = 0.0;
  CHECK_THROWS_AS(swing_test_moi(bad), std::invalid_argument);
}

TEST_CASE("swing period averaging") {
  // Ten stopwatch observations, each spanning ten full cycles.
  std::vector<double> obs{10.1, 9.9, 10.05, 10.0, 9.95, 10.1, 10.0, 9.9, 10.05, 9.95};
  double expect = 0.0;
  for (double o : obs) expect += o / 10.0;
  expect /= static_cast<double>(obs.size());
  CHECK(average_period(obs) == doctest::Approx(expect));
  CHECK_THROWS_AS(average_period({}), std::invalid_argument);
  CHECK_THROWS_AS(average_period({-1.0}), std::invalid_argument);
}

TEST_CASE("input sequences round-trip through CSV") {
  TempDir dir("input");
  InputSequence duty = make_uniform_input(InputDomain::kDuty, 0.0, 0.02, 0.5);
  SeededRng rng(321);
  for (Eigen::Index c = 0; c < duty.size(); ++c)
    for (int i = 0; i < kThrusterCount; ++i)
      duty.commands(i, c) = rng.uniform(0.0, 100.0);
  save_input_csv(duty, dir.path / "in.csv");
  const InputSequence back = load_input_csv(dir.path / "in.csv");
  CHECK(back.domain == InputDomain::kDuty);
  CHECK(back.dt == duty.dt);
  CHECK((back.commands - duty.commands).norm() == 0.0);
}

TEST_CASE("thrust curves round-trip through JSON") {
  TempDir dir("curve");
  const ThrustCurve& curve = tpods_60psi_curves().require(2);
  save_thrust_curve_json(curve, dir.path / "curve.json");
  const ThrustCurve back = load_thrust_curve_json(dir.path / "curve.json");
  CHECK(back.order == curve.order);
  CHECK(back.active_nozzles == curve.active_nozzles);
  REQUIRE(back.coefficients.size() == curve.coefficients.size());
  for (std::size_t k = 0; k < curve.coefficients.size(); ++k)
    CHECK(back.coefficients[k] == curve.coefficients[k]);
}

TEST_CASE("bench samples load from CSV") {
  TempDir dir("bench");
  std::ofstream out(dir.path / "bench.csv");
  out << "time_s,duty_pct,thrust_gf\n";
  out << "0.0,10,0.17\n5.0,20,7.32\n10.0,30,12.86\n";
  out.close();
  const auto samples = load_thrust_samples_csv(dir.path / "bench.csv");
  REQUIRE(samples.size() == 3);
  CHECK(samples[1].duty == 20.0);
  CHECK(samples[1].thrust == doctest::Approx(7.32));
}

}  // TEST_SUITE
