#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "sliw/eval.hpp"

using namespace sliw;

namespace {

std::vector<PoseLogEntry> linear_track(double t0, double t1, double dt, const Vec3& v,
                                       double yaw = 0.0) {
  std::vector<PoseLogEntry> out;
  const Eigen::Quaterniond q(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  for (double t = t0; t <= t1 + 1e-12; t += dt) {
    PoseLogEntry e;
    e.t = t;
    e.p = t * v;
    e.q = q;
    e.v = v;
    out.push_back(e);
  }
  return out;
}

}  // namespace

TEST_CASE("a perfect estimate has zero error everywhere") {
  const auto gt = linear_track(0.0, 10.0, 0.02, Vec3(2.0, 0.5, 0.0));
  const auto est = linear_track(0.0, 10.0, 0.1, Vec3(2.0, 0.5, 0.0));
  const auto assoc = associate(est, gt);
  CHECK(assoc.dropped == 0);
  const auto report = compute_errors(assoc.pairs);
  CHECK(report.max_abs == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report.mean_abs == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report.max_lat == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report.max_lon == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("interpolation is exact on a linear trajectory despite offset timestamps") {
  const auto gt = linear_track(0.0, 10.0, 0.02, Vec3(1.0, -1.0, 0.2));
  auto est = linear_track(0.0, 10.0, 0.1, Vec3(1.0, -1.0, 0.2));
  for (auto& e : est) {
    if (e.t > 0.05 && e.t < 9.95) {
      e.t += 0.007;  // off-grid timestamps force interpolation
      e.p = e.t * Vec3(1.0, -1.0, 0.2);
    }
  }
  const auto report = compute_errors(associate(est, gt).pairs);
  CHECK(report.max_abs < 1e-9);
}

TEST_CASE("a 3-4-5 offset decomposes in the ground-truth yaw frame") {
  // gt heading +90 deg: world error (3, 4) -> longitudinal 4 (along heading),
  // lateral -3; abs error 5
  const double yaw = M_PI / 2.0;
  auto gt = linear_track(0.0, 5.0, 0.05, Vec3(0.0, 1.0, 0.0), yaw);
  auto est = gt;
  for (auto& e : est) e.p += Vec3(3.0, 4.0, 0.0);
  const auto report = compute_errors(associate(est, gt).pairs);
  CHECK(report.max_abs == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(report.mean_abs == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(report.max_lon == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(report.max_lat == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("planar decomposition never exceeds the absolute error") {
  std::mt19937_64 rng(80);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto gt = linear_track(0.0, 10.0, 0.02, Vec3(2.0, 0.0, 0.0), 0.7);
  auto est = gt;
  for (auto& e : est) e.p += Vec3(u(rng), u(rng), u(rng));
  const auto report = compute_errors(associate(est, gt).pairs);
  for (size_t i = 0; i < report.abs_err.size(); ++i) {
    const double planar = std::hypot(report.lat_err[i], report.lon_err[i]);
    CHECK(planar <= report.abs_err[i] + 1e-12);
  }
  CHECK(report.max_abs > 0.5);
}

TEST_CASE("mileage integrates the ground-truth path length") {
  const auto gt = linear_track(0.0, 100.0, 0.02, Vec3(2.0, 0.0, 0.0));
  const auto est = linear_track(0.0, 100.0, 0.1, Vec3(2.0, 0.0, 0.0));
  const auto report = compute_errors(associate(est, gt).pairs);
  CHECK(report.mileage_km == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("estimates outside the truth span are dropped") {
  const auto gt = linear_track(2.0, 8.0, 0.02, Vec3(1.0, 0.0, 0.0));
  const auto est = linear_track(0.0, 10.0, 0.5, Vec3(1.0, 0.0, 0.0));
  const auto assoc = associate(est, gt);
  CHECK(assoc.dropped > 0);
  for (const auto& pair : assoc.pairs) {
    CHECK(pair.t >= 2.0 - 0.05);
    CHECK(pair.t <= 8.0 + 0.05);
  }
}

TEST_CASE("associate throws when there is no temporal overlap") {
  const auto gt = linear_track(0.0, 5.0, 0.02, Vec3(1.0, 0.0, 0.0));
  const auto est = linear_track(100.0, 105.0, 0.1, Vec3(1.0, 0.0, 0.0));
  CHECK_THROWS_AS(associate(est, gt), std::runtime_error);
  CHECK_THROWS_AS(associate({}, gt), std::runtime_error);
}

TEST_CASE("comparison table carries the documented header and one row per run") {
  auto gt = linear_track(0.0, 10.0, 0.02, Vec3(2.0, 0.0, 0.0));
  auto est = gt;
  for (auto& e : est) e.p += Vec3(0.1, 0.0, 0.0);
  NamedReport a{"baseline", compute_errors(associate(gt, gt).pairs)};
  NamedReport b{"offset", compute_errors(associate(est, gt).pairs)};
  const std::string table = comparison_table({a, b});

  std::istringstream is(table);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "run,mileage_km,max_abs_m,mean_abs_m,max_lat_m,mean_lat_m,max_lon_m,mean_lon_m");
  REQUIRE(std::getline(is, line));
  CHECK(line.rfind("baseline,", 0) == 0);
  REQUIRE(std::getline(is, line));
  CHECK(line.rfind("offset,", 0) == 0);
}

TEST_CASE("compare_runs writes the CSV and the plot-data JSON") {
  auto gt = linear_track(0.0, 10.0, 0.02, Vec3(2.0, 0.0, 0.0));
  NamedReport a{"only", compute_errors(associate(gt, gt).pairs)};
  const std::string csv_path = "eval_cmp.csv";
  const std::string plot_path = "eval_plot.json";
  compare_runs({a}, csv_path, plot_path);

  std::ifstream csv(csv_path);
  REQUIRE(csv);
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "run,mileage_km,max_abs_m,mean_abs_m,max_lat_m,mean_lat_m,max_lon_m,mean_lon_m");
  std::ifstream plot(plot_path);
  REQUIRE(plot);
  std::stringstream buf;
  buf << plot.rdbuf();
  CHECK(buf.str().find("\"only\"") != std::string::npos);
  std::remove(csv_path.c_str());
  std::remove(plot_path.c_str());
}
