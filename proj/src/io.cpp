#include "sliw/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sliw {

void write_pose_log(const std::string& path, const std::vector<PoseLogEntry>& entries) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("write_pose_log: cannot open " + path);
  std::fputs("t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,sx,sy,sz\n", f);
  for (const PoseLogEntry& e : entries) {
    std::fprintf(f,
                 "%.9f,%.9f,%.9f,%.9f,%.12f,%.12f,%.12f,%.12f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n",
                 e.t, e.p.x(), e.p.y(), e.p.z(), e.q.w(), e.q.x(), e.q.y(), e.q.z(),
                 e.v.x(), e.v.y(), e.v.z(), e.scale.x(), e.scale.y(), e.scale.z());
  }
  std::fclose(f);
}

std::vector<PoseLogEntry> read_pose_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_pose_log: cannot open " + path);
  std::vector<PoseLogEntry> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line.rfind("t,px", 0) != 0) {
        throw std::runtime_error(path + ":1: expected pose log header");
      }
      continue;
    }
    if (line.empty()) continue;
    PoseLogEntry e;
    double qw, qx, qy, qz;
    const int n = std::sscanf(line.c_str(),
                              "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf",
                              &e.t, &e.p.x(), &e.p.y(), &e.p.z(), &qw, &qx, &qy, &qz,
                              &e.v.x(), &e.v.y(), &e.v.z(), &e.scale.x(), &e.scale.y(),
                              &e.scale.z());
    if (n != 14) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed pose row");
    }
    e.q = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
    out.push_back(e);
  }
  return out;
}

std::vector<PoseLogEntry> truth_to_pose_log(const std::vector<GroundTruthPose>& truth) {
  std::vector<PoseLogEntry> out;
  out.reserve(truth.size());
  for (const GroundTruthPose& g : truth) {
    PoseLogEntry e;
    e.t = g.t;
    e.p = g.p;
    e.q = Eigen::Quaterniond(g.R);
    if (e.q.w() < 0.0) e.q.coeffs() = -e.q.coeffs();
    e.v = g.v;
    out.push_back(e);
  }
  return out;
}

void write_dataset_jsonl(const std::string& path, const std::vector<MeasurementRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_dataset_jsonl: cannot open " + path);
  for (const MeasurementRecord& r : records) {
    nlohmann::json j;
    j["t"] = r.t;
    switch (r.kind) {
      case RecordKind::kImu:
        j["kind"] = "imu";
        j["omega"] = {r.omega.x(), r.omega.y(), r.omega.z()};
        j["accel"] = {r.accel_or_vel.x(), r.accel_or_vel.y(), r.accel_or_vel.z()};
        break;
      case RecordKind::kWheel:
        j["kind"] = "wheel";
        j["v"] = {r.accel_or_vel.x(), r.accel_or_vel.y(), r.accel_or_vel.z()};
        j["omega"] = {r.omega.x(), r.omega.y(), r.omega.z()};
        break;
      case RecordKind::kLidar: {
        j["kind"] = "lidar";
        std::vector<double> flat;
        flat.reserve(r.points.size() * 4);
        for (const LidarPoint& p : r.points) {
          flat.push_back(p.p.x());
          flat.push_back(p.p.y());
          flat.push_back(p.p.z());
          flat.push_back(static_cast<double>(p.ring));
        }
        j["points"] = flat;
        break;
      }
    }
    os << j.dump() << '\n';
  }
}

std::vector<MeasurementRecord> read_dataset_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_dataset_jsonl: cannot open " + path);
  std::vector<MeasurementRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& ex) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
    MeasurementRecord r;
    r.t = j.at("t").get<double>();
    const std::string kind = j.at("kind").get<std::string>();
    auto vec3 = [&](const char* key) {
      const auto& a = j.at(key);
      return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
    };
    if (kind == "imu") {
      r.kind = RecordKind::kImu;
      r.omega = vec3("omega");
      r.accel_or_vel = vec3("accel");
    } else if (kind == "wheel") {
      r.kind = RecordKind::kWheel;
      r.accel_or_vel = vec3("v");
      r.omega = vec3("omega");
    } else if (kind == "lidar") {
      r.kind = RecordKind::kLidar;
      const auto& flat = j.at("points");
      if (flat.size() % 4 != 0) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": lidar points length not a multiple of 4");
      }
      r.points.reserve(flat.size() / 4);
      for (size_t i = 0; i < flat.size(); i += 4) {
        LidarPoint p;
        p.p = Vec3(flat.at(i).get<double>(), flat.at(i + 1).get<double>(),
                   flat.at(i + 2).get<double>());
        p.ring = static_cast<int>(flat.at(i + 3).get<double>());
        r.points.push_back(p);
      }
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unknown record kind '" + kind + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sliw
