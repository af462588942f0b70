#include "sliw/config.hpp"

#include <fstream>

namespace sliw {

namespace {

using nlohmann::json;

double get_num(const json& j, const std::string& path, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
  return j.at(key).get<bool>();
}

Vec3 get_vec3(const json& j, const std::string& path, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw ConfigError(path + "." + key + ": expected an array of 3 numbers");
  }
  return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void check_range(double v, double lo, double hi, const std::string& field) {
  if (!(v >= lo && v <= hi)) {
    throw ConfigError(field + ": value " + std::to_string(v) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

WorldModel WorldConfig::build(uint64_t seed) const {
  WorldModel w = build_port_world(length, width, pillar_spacing, seed);
  w.walls = walls;
  w.boxes = dynamic_boxes;
  w.slip_zones = slip_zones;
  return w;
}

TrajectorySpec TrajectoryConfig::build(double height) const {
  return TrajectorySpec(segments, height, start);
}

CovMatrix InitCovarianceConfig::to_matrix() const {
  ErrorVector d;
  d.segment<3>(blk::kPos).setConstant(position);
  d.segment<3>(blk::kVel).setConstant(velocity);
  d.segment<3>(blk::kRot).setConstant(rotation);
  d.segment<3>(blk::kBa).setConstant(bias);
  d.segment<3>(blk::kBw).setConstant(bias);
  d.segment<3>(blk::kAccB).setConstant(body_accel);
  d.segment<3>(blk::kRateB).setConstant(body_rate);
  d.segment<3>(blk::kScale).setConstant(scale);
  d.segment<3>(blk::kGrav).setConstant(gravity);
  d.segment<3>(blk::kRotIL).setConstant(extrinsic);
  d.segment<3>(blk::kPosIL).setConstant(extrinsic);
  d.segment<3>(blk::kRotIB).setConstant(extrinsic);
  d.segment<3>(blk::kPosIB).setConstant(extrinsic);
  return d.asDiagonal();
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();

  if (j.contains("world")) {
    const json& w = j.at("world");
    c.world.length = get_num(w, "world", "length", c.world.length);
    c.world.width = get_num(w, "world", "width", c.world.width);
    c.world.pillar_spacing = get_num(w, "world", "pillar_spacing", c.world.pillar_spacing);
    c.world.sensor_height = get_num(w, "world", "sensor_height", c.world.sensor_height);
    check_range(c.world.pillar_spacing, 1.0, 1000.0, "world.pillar_spacing");
    for (const json& wj : w.value("walls", json::array())) {
      PlanePatch p;
      p.anchor = get_vec3(wj, "world.walls[]", "anchor", p.anchor);
      p.normal = get_vec3(wj, "world.walls[]", "normal", p.normal).normalized();
      p.half_u = get_num(wj, "world.walls[]", "half_u", p.half_u);
      p.half_v = get_num(wj, "world.walls[]", "half_v", p.half_v);
      c.world.walls.push_back(p);
    }
    for (const json& bj : w.value("dynamic_boxes", json::array())) {
      DynamicBox b;
      b.half_sizes = get_vec3(bj, "world.dynamic_boxes[]", "half_sizes", b.half_sizes);
      for (const json& tj : bj.value("times", json::array())) b.times.push_back(tj.get<double>());
      for (const json& cj : bj.value("centers", json::array())) {
        b.centers.push_back(Vec3(cj.at(0).get<double>(), cj.at(1).get<double>(),
                                 cj.at(2).get<double>()));
      }
      if (b.times.size() != b.centers.size() || b.times.size() < 2) {
        throw ConfigError("world.dynamic_boxes[].times: need matching times/centers, >= 2");
      }
      c.world.dynamic_boxes.push_back(b);
    }
    for (const json& zj : w.value("slip_zones", json::array())) {
      SlipZone z;
      for (const json& vj : zj.value("polygon", json::array())) {
        z.polygon.emplace_back(vj.at(0).get<double>(), vj.at(1).get<double>());
      }
      if (z.polygon.size() < 3) {
        throw ConfigError("world.slip_zones[].polygon: need at least 3 vertices");
      }
      z.factor = get_vec3(zj, "world.slip_zones[]", "factor", z.factor);
      for (int i = 0; i < 3; ++i) {
        check_range(z.factor(i), 0.5, 1.5, "world.slip_zones[].factor");
      }
      c.world.slip_zones.push_back(z);
    }
  }

  if (!j.contains("trajectory")) throw ConfigError("trajectory: missing required section");
  {
    const json& t = j.at("trajectory");
    c.trajectory.start = get_vec3(t, "trajectory", "start", c.trajectory.start);
    if (!t.contains("segments") || !t.at("segments").is_array() || t.at("segments").empty()) {
      throw ConfigError("trajectory.segments: missing required field");
    }
    for (const json& sj : t.at("segments")) {
      TrajectorySegment s;
      const std::string type = sj.value("type", "");
      if (type == "straight") {
        s.type = TrajectorySegment::Type::kStraight;
        if (!sj.contains("length")) throw ConfigError("trajectory.segments[].length: missing");
        s.length = sj.at("length").get<double>();
      } else if (type == "arc") {
        s.type = TrajectorySegment::Type::kArc;
        if (!sj.contains("radius")) throw ConfigError("trajectory.segments[].radius: missing");
        s.radius = sj.at("radius").get<double>();
        if (!sj.contains("angle")) throw ConfigError("trajectory.segments[].angle: missing");
        s.angle = sj.at("angle").get<double>();
      } else if (type == "stop") {
        s.type = TrajectorySegment::Type::kStop;
        s.duration = get_num(sj, "trajectory.segments[]", "duration", 1.0);
      } else {
        throw ConfigError("trajectory.segments[].type: expected straight|arc|stop");
      }
      s.v_entry = get_num(sj, "trajectory.segments[]", "v_entry", 0.0);
      s.v_exit = get_num(sj, "trajectory.segments[]", "v_exit", s.v_entry);
      c.trajectory.segments.push_back(s);
    }
  }

  if (j.contains("rates")) {
    const json& r = j.at("rates");
    c.rates.imu_hz = get_num(r, "rates", "imu_hz", c.rates.imu_hz);
    c.rates.wheel_hz = get_num(r, "rates", "wheel_hz", c.rates.wheel_hz);
    c.rates.lidar_hz = get_num(r, "rates", "lidar_hz", c.rates.lidar_hz);
    c.rates.truth_hz = get_num(r, "rates", "truth_hz", c.rates.truth_hz);
    check_range(c.rates.imu_hz, 1e-3, 1e4, "rates.imu_hz");
    check_range(c.rates.wheel_hz, 1e-3, 1e4, "rates.wheel_hz");
    check_range(c.rates.lidar_hz, 1e-3, 1e4, "rates.lidar_hz");
    check_range(c.rates.truth_hz, 1e-3, 1e4, "rates.truth_hz");
  }

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    c.noise.imu.sigma_a = get_num(n, "noise", "imu_sigma_a", c.noise.imu.sigma_a);
    c.noise.imu.sigma_w = get_num(n, "noise", "imu_sigma_w", c.noise.imu.sigma_w);
    c.noise.lidar_range_sigma = get_num(n, "noise", "lidar_range_sigma", c.noise.lidar_range_sigma);
    c.noise.wheel_sigma_v = get_num(n, "noise", "wheel_sigma_v", c.noise.wheel_sigma_v);
    c.noise.wheel_sigma_w = get_num(n, "noise", "wheel_sigma_w", c.noise.wheel_sigma_w);
    c.noise.imu_bias_a = get_vec3(n, "noise", "imu_bias_a", c.noise.imu_bias_a);
    c.noise.imu_bias_w = get_vec3(n, "noise", "imu_bias_w", c.noise.imu_bias_w);
  }

  if (j.contains("lidar")) {
    const json& l = j.at("lidar");
    c.lidar.rings = static_cast<int>(get_num(l, "lidar", "rings", c.lidar.rings));
    c.lidar.elev_min = get_num(l, "lidar", "elev_min_deg", c.lidar.elev_min * 180.0 / M_PI) * M_PI / 180.0;
    c.lidar.elev_step = get_num(l, "lidar", "elev_step_deg", c.lidar.elev_step * 180.0 / M_PI) * M_PI / 180.0;
    c.lidar.azimuth_step = get_num(l, "lidar", "azimuth_step_deg", c.lidar.azimuth_step * 180.0 / M_PI) * M_PI / 180.0;
    c.lidar.max_range = get_num(l, "lidar", "max_range", c.lidar.max_range);
  }

  if (j.contains("filter")) {
    const json& f = j.at("filter");
    c.filter.process.sigma_a = get_num(f, "filter", "sigma_a", c.filter.process.sigma_a);
    c.filter.process.sigma_w = get_num(f, "filter", "sigma_w", c.filter.process.sigma_w);
    c.filter.process.sigma_ba = get_num(f, "filter", "sigma_ba", c.filter.process.sigma_ba);
    c.filter.process.sigma_bw = get_num(f, "filter", "sigma_bw", c.filter.process.sigma_bw);
    c.filter.process.sigma_S = get_num(f, "filter", "sigma_S", c.filter.process.sigma_S);
    c.filter.wheel.sigma_v = get_num(f, "filter", "wheel_sigma_v", c.filter.wheel.sigma_v);
    c.filter.wheel.sigma_w = get_num(f, "filter", "wheel_sigma_w", c.filter.wheel.sigma_w);
    c.filter.weights.w_cylinder = get_num(f, "filter", "w_cylinder", c.filter.weights.w_cylinder);
    c.filter.weights.w_plane = get_num(f, "filter", "w_plane", c.filter.weights.w_plane);
    c.filter.weights.w_other = get_num(f, "filter", "w_other", c.filter.weights.w_other);
    if (!(c.filter.weights.w_cylinder > c.filter.weights.w_plane &&
          c.filter.weights.w_plane > c.filter.weights.w_other &&
          c.filter.weights.w_other > 0.0)) {
      throw ConfigError("filter.w_cylinder/w_plane/w_other: ordering must be cyl > plane > other > 0");
    }
    c.filter.classify.theta_thc =
        get_num(f, "filter", "theta_thc_deg", c.filter.classify.theta_thc * 180.0 / M_PI) * M_PI / 180.0;
    c.filter.classify.theta_thp =
        get_num(f, "filter", "theta_thp_deg", c.filter.classify.theta_thp * 180.0 / M_PI) * M_PI / 180.0;
    c.filter.classify.ratio_big = get_num(f, "filter", "ratio_big", c.filter.classify.ratio_big);
    c.filter.classify.ratio_close = get_num(f, "filter", "ratio_close", c.filter.classify.ratio_close);
    check_range(c.filter.classify.theta_thc, 0.0, M_PI / 2, "filter.theta_thc_deg");
    check_range(c.filter.classify.theta_thp, 0.0, M_PI / 2, "filter.theta_thp_deg");
    c.filter.map_update.iters_max =
        static_cast<int>(get_num(f, "filter", "iters_max", c.filter.map_update.iters_max));
    c.filter.map_update.convergence_norm =
        get_num(f, "filter", "convergence_norm", c.filter.map_update.convergence_norm);
    auto& cp = c.filter.map_update.constraints;
    cp.global_gate = get_num(f, "filter", "global_gate", cp.global_gate);
    cp.local_gate = get_num(f, "filter", "local_gate", cp.local_gate);
    cp.local_knn = static_cast<int>(get_num(f, "filter", "local_knn", cp.local_knn));
    cp.local_search_radius = get_num(f, "filter", "local_search_radius", cp.local_search_radius);
    cp.planarity_threshold = get_num(f, "filter", "planarity_threshold", cp.planarity_threshold);
    cp.p2p_sigma = get_num(f, "filter", "p2p_sigma", cp.p2p_sigma);
    cp.min_constraints = static_cast<int>(get_num(f, "filter", "min_constraints", cp.min_constraints));
    c.filter.local_map.keyframe_translation =
        get_num(f, "filter", "keyframe_translation", c.filter.local_map.keyframe_translation);
    c.filter.local_map.keyframe_rotation =
        get_num(f, "filter", "keyframe_rotation_deg",
                c.filter.local_map.keyframe_rotation * 180.0 / M_PI) * M_PI / 180.0;
    c.filter.local_map.sliding_radius =
        get_num(f, "filter", "sliding_radius", c.filter.local_map.sliding_radius);
    c.filter.voxel_resolution = get_num(f, "filter", "voxel_resolution", c.filter.voxel_resolution);
    check_range(c.filter.voxel_resolution, 0.01, 100.0, "filter.voxel_resolution");
    c.filter.scan_fallback_sigma =
        get_num(f, "filter", "scan_fallback_sigma", c.filter.scan_fallback_sigma);
    c.filter.local_stride =
        static_cast<int>(get_num(f, "filter", "local_stride", c.filter.local_stride));
    check_range(c.filter.local_stride, 1, 1000, "filter.local_stride");
    c.filter.divergence_limit = get_num(f, "filter", "divergence_limit", c.filter.divergence_limit);
    const json& ic = f.contains("init_cov") ? f.at("init_cov") : json::object();
    auto& iv = c.filter.init_cov;
    iv.position = get_num(ic, "filter.init_cov", "position", iv.position);
    iv.rotation = get_num(ic, "filter.init_cov", "rotation", iv.rotation);
    iv.velocity = get_num(ic, "filter.init_cov", "velocity", iv.velocity);
    iv.bias = get_num(ic, "filter.init_cov", "bias", iv.bias);
    iv.scale = get_num(ic, "filter.init_cov", "scale", iv.scale);
    iv.body_accel = get_num(ic, "filter.init_cov", "body_accel", iv.body_accel);
    iv.body_rate = get_num(ic, "filter.init_cov", "body_rate", iv.body_rate);
    iv.gravity = get_num(ic, "filter.init_cov", "gravity", iv.gravity);
    iv.extrinsic = get_num(ic, "filter.init_cov", "extrinsic", iv.extrinsic);
  }

  c.semantic_weighting = get_bool(j, "", "semantic_weighting", c.semantic_weighting);
  c.adaptive_scale = get_bool(j, "", "adaptive_scale", c.adaptive_scale);
  c.dynamic_boxes_in_dataset = get_bool(j, "", "dynamic_boxes_in_dataset", c.dynamic_boxes_in_dataset);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const std::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;

  json w;
  w["length"] = c.world.length;
  w["width"] = c.world.width;
  w["pillar_spacing"] = c.world.pillar_spacing;
  w["sensor_height"] = c.world.sensor_height;
  w["walls"] = json::array();
  for (const auto& p : c.world.walls) {
    w["walls"].push_back({{"anchor", vec3_json(p.anchor)},
                          {"normal", vec3_json(p.normal)},
                          {"half_u", p.half_u},
                          {"half_v", p.half_v}});
  }
  w["dynamic_boxes"] = json::array();
  for (const auto& b : c.world.dynamic_boxes) {
    json bj;
    bj["half_sizes"] = vec3_json(b.half_sizes);
    bj["times"] = b.times;
    bj["centers"] = json::array();
    for (const auto& cc : b.centers) bj["centers"].push_back(vec3_json(cc));
    w["dynamic_boxes"].push_back(bj);
  }
  w["slip_zones"] = json::array();
  for (const auto& z : c.world.slip_zones) {
    json zj;
    zj["polygon"] = json::array();
    for (const auto& v : z.polygon) zj["polygon"].push_back(json::array({v.x(), v.y()}));
    zj["factor"] = vec3_json(z.factor);
    w["slip_zones"].push_back(zj);
  }
  j["world"] = w;

  json t;
  t["start"] = vec3_json(c.trajectory.start);
  t["segments"] = json::array();
  for (const auto& s : c.trajectory.segments) {
    json sj;
    switch (s.type) {
      case TrajectorySegment::Type::kStraight:
        sj["type"] = "straight";
        sj["length"] = s.length;
        break;
      case TrajectorySegment::Type::kArc:
        sj["type"] = "arc";
        sj["radius"] = s.radius;
        sj["angle"] = s.angle;
        break;
      case TrajectorySegment::Type::kStop:
        sj["type"] = "stop";
        sj["duration"] = s.duration;
        break;
    }
    sj["v_entry"] = s.v_entry;
    sj["v_exit"] = s.v_exit;
    t["segments"].push_back(sj);
  }
  j["trajectory"] = t;

  j["rates"] = {{"imu_hz", c.rates.imu_hz},
                {"wheel_hz", c.rates.wheel_hz},
                {"lidar_hz", c.rates.lidar_hz},
                {"truth_hz", c.rates.truth_hz}};
  j["noise"] = {{"imu_sigma_a", c.noise.imu.sigma_a},
                {"imu_sigma_w", c.noise.imu.sigma_w},
                {"lidar_range_sigma", c.noise.lidar_range_sigma},
                {"wheel_sigma_v", c.noise.wheel_sigma_v},
                {"wheel_sigma_w", c.noise.wheel_sigma_w},
                {"imu_bias_a", vec3_json(c.noise.imu_bias_a)},
                {"imu_bias_w", vec3_json(c.noise.imu_bias_w)}};
  j["lidar"] = {{"rings", c.lidar.rings},
                {"elev_min_deg", c.lidar.elev_min * 180.0 / M_PI},
                {"elev_step_deg", c.lidar.elev_step * 180.0 / M_PI},
                {"azimuth_step_deg", c.lidar.azimuth_step * 180.0 / M_PI},
                {"max_range", c.lidar.max_range}};

  json f;
  f["sigma_a"] = c.filter.process.sigma_a;
  f["sigma_w"] = c.filter.process.sigma_w;
  f["sigma_ba"] = c.filter.process.sigma_ba;
  f["sigma_bw"] = c.filter.process.sigma_bw;
  f["sigma_S"] = c.filter.process.sigma_S;
  f["wheel_sigma_v"] = c.filter.wheel.sigma_v;
  f["wheel_sigma_w"] = c.filter.wheel.sigma_w;
  f["w_cylinder"] = c.filter.weights.w_cylinder;
  f["w_plane"] = c.filter.weights.w_plane;
  f["w_other"] = c.filter.weights.w_other;
  f["theta_thc_deg"] = c.filter.classify.theta_thc * 180.0 / M_PI;
  f["theta_thp_deg"] = c.filter.classify.theta_thp * 180.0 / M_PI;
  f["ratio_big"] = c.filter.classify.ratio_big;
  f["ratio_close"] = c.filter.classify.ratio_close;
  f["iters_max"] = c.filter.map_update.iters_max;
  f["convergence_norm"] = c.filter.map_update.convergence_norm;
  f["global_gate"] = c.filter.map_update.constraints.global_gate;
  f["local_gate"] = c.filter.map_update.constraints.local_gate;
  f["local_knn"] = c.filter.map_update.constraints.local_knn;
  f["local_search_radius"] = c.filter.map_update.constraints.local_search_radius;
  f["planarity_threshold"] = c.filter.map_update.constraints.planarity_threshold;
  f["p2p_sigma"] = c.filter.map_update.constraints.p2p_sigma;
  f["min_constraints"] = c.filter.map_update.constraints.min_constraints;
  f["keyframe_translation"] = c.filter.local_map.keyframe_translation;
  f["keyframe_rotation_deg"] = c.filter.local_map.keyframe_rotation * 180.0 / M_PI;
  f["sliding_radius"] = c.filter.local_map.sliding_radius;
  f["voxel_resolution"] = c.filter.voxel_resolution;
  f["scan_fallback_sigma"] = c.filter.scan_fallback_sigma;
  f["local_stride"] = c.filter.local_stride;
  f["divergence_limit"] = c.filter.divergence_limit;
  f["init_cov"] = {{"position", c.filter.init_cov.position},
                   {"rotation", c.filter.init_cov.rotation},
                   {"velocity", c.filter.init_cov.velocity},
                   {"bias", c.filter.init_cov.bias},
                   {"scale", c.filter.init_cov.scale},
                   {"body_accel", c.filter.init_cov.body_accel},
                   {"body_rate", c.filter.init_cov.body_rate},
                   {"gravity", c.filter.init_cov.gravity},
                   {"extrinsic", c.filter.init_cov.extrinsic}};
  j["filter"] = f;

  j["semantic_weighting"] = c.semantic_weighting;
  j["adaptive_scale"] = c.adaptive_scale;
  j["dynamic_boxes_in_dataset"] = c.dynamic_boxes_in_dataset;
  return j;
}

void save_config(const ExperimentConfig& c, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write config file " + path);
  os << to_json(c).dump(2) << '\n';
}

}  // namespace sliw
