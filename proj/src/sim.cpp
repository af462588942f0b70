#include "sliw/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Geometry>

namespace sliw {

// --- world -------------------------------------------------------------------

Vec3 DynamicBox::center_at(double t) const {
  if (times.empty()) return Vec3::Zero();
  if (t <= times.front()) return centers.front();
  if (t >= times.back()) return centers.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const size_t i = static_cast<size_t>(it - times.begin());
  const double u = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return centers[i - 1] + u * (centers[i] - centers[i - 1]);
}

bool SlipZone::contains(const Eigen::Vector2d& p) const {
  // standard even-odd ray crossing
  bool inside = false;
  const size_t n = polygon.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = polygon[i];
    const auto& b = polygon[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

Vec3 WorldModel::slip_at(const Eigen::Vector2d& p) const {
  for (const SlipZone& z : slip_zones) {
    if (z.contains(p)) return z.factor;
  }
  return Vec3::Ones();
}

WorldModel build_port_world(double length, double width, double pillar_spacing,
                            uint64_t /*seed*/) {
  if (pillar_spacing <= 0.0) {
    throw std::invalid_argument("build_port_world: pillar spacing must be positive");
  }
  WorldModel w;
  PlanePatch ground;
  ground.anchor = Vec3(length / 2.0, 0.0, 0.0);
  ground.normal = Vec3::UnitZ();
  ground.half_u = length / 2.0 + 30.0;
  ground.half_v = width / 2.0 + 30.0;
  w.ground.push_back(ground);

  // each site is a lamp mast on a concrete bollard: the wide base anchors
  // coarse scans, the thin mast yields tall-thin (cylinder-like) voxels
  const int n = static_cast<int>(std::floor(length / pillar_spacing + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) {
    for (double side : {-width / 2.0, width / 2.0}) {
      Pillar base;
      base.center = Eigen::Vector2d(i * pillar_spacing, side);
      base.radius = 0.15;
      base.height = 1.2;
      w.pillars.push_back(base);
      Pillar mast;
      mast.center = base.center;
      mast.radius = 0.05;
      mast.height = 4.0;
      w.pillars.push_back(mast);
    }
  }
  return w;
}

// --- trajectory --------------------------------------------------------------

namespace {
double segment_path_length(const TrajectorySegment& s) {
  switch (s.type) {
    case TrajectorySegment::Type::kStraight: return s.length;
    case TrajectorySegment::Type::kArc: return std::abs(s.angle) * s.radius;
    default: return 0.0;
  }
}

double segment_duration(const TrajectorySegment& s) {
  if (s.type == TrajectorySegment::Type::kStop) return s.duration;
  const double vsum = s.v_entry + s.v_exit;
  if (vsum <= 0.0) {
    throw std::invalid_argument("trajectory: moving segment needs positive speed");
  }
  return 2.0 * segment_path_length(s) / vsum;
}
}  // namespace

TrajectorySpec::TrajectorySpec(std::vector<TrajectorySegment> segments, double height,
                               const Vec3& start_xyyaw)
    : height_(height) {
  if (segments.empty()) {
    throw std::invalid_argument("trajectory: no segments");
  }
  double t = 0.0, x = start_xyyaw.x(), y = start_xyyaw.y(), yaw = start_xyyaw.z();
  double prev_exit = segments.front().v_entry;
  for (const TrajectorySegment& s : segments) {
    const double entry = s.type == TrajectorySegment::Type::kStop ? 0.0 : s.v_entry;
    if (std::abs(entry - prev_exit) > 1e-9) {
      throw std::invalid_argument("trajectory: segment speeds not continuous");
    }
    Piece p;
    p.seg = s;
    p.t0 = t;
    p.t1 = t + segment_duration(s);
    p.x0 = x;
    p.y0 = y;
    p.yaw0 = yaw;
    pieces_.push_back(p);

    // advance pose to the segment end
    switch (s.type) {
      case TrajectorySegment::Type::kStraight:
        x += s.length * std::cos(yaw);
        y += s.length * std::sin(yaw);
        break;
      case TrajectorySegment::Type::kArc: {
        const double sign = s.angle >= 0.0 ? 1.0 : -1.0;
        // center = p0 + sign * radius * left, left = (-sin yaw, cos yaw)
        const double ccx = x + sign * s.radius * (-std::sin(yaw));
        const double ccy = y + sign * s.radius * (std::cos(yaw));
        const double yaw1 = yaw + s.angle;
        x = ccx - sign * s.radius * (-std::sin(yaw1));
        y = ccy - sign * s.radius * (std::cos(yaw1));
        yaw = yaw1;
        break;
      }
      case TrajectorySegment::Type::kStop:
        break;
    }
    t = p.t1;
    prev_exit = s.type == TrajectorySegment::Type::kStop ? 0.0 : s.v_exit;
  }
  total_time_ = t;
}

TrajectorySample TrajectorySpec::sample(double t) const {
  if (t < -1e-9 || t > total_time_ + 1e-9) {
    throw std::out_of_range("trajectory: time outside span");
  }
  t = std::clamp(t, 0.0, total_time_);
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double tv, const Piece& p) { return tv < p.t1; });
  if (it == pieces_.end()) it = pieces_.end() - 1;
  const Piece& pc = *it;
  const TrajectorySegment& s = pc.seg;
  const double tau = t - pc.t0;

  TrajectorySample out;
  if (s.type == TrajectorySegment::Type::kStop) {
    out.p = Vec3(pc.x0, pc.y0, height_);
    out.yaw = pc.yaw0;
    out.R = exp_so3(Vec3(0, 0, pc.yaw0));
    return out;
  }

  const double T = pc.t1 - pc.t0;
  const double a_t = (s.v_exit - s.v_entry) / T;
  const double v = s.v_entry + a_t * tau;
  const double dist = s.v_entry * tau + 0.5 * a_t * tau * tau;
  out.speed = v;

  if (s.type == TrajectorySegment::Type::kStraight) {
    out.yaw = pc.yaw0;
    const Vec3 h(std::cos(out.yaw), std::sin(out.yaw), 0.0);
    out.p = Vec3(pc.x0, pc.y0, height_) + dist * h;
    out.v = v * h;
    out.a = a_t * h;
  } else {
    const double sign = s.angle >= 0.0 ? 1.0 : -1.0;
    const double cx = pc.x0 + sign * s.radius * (-std::sin(pc.yaw0));
    const double cy = pc.y0 + sign * s.radius * (std::cos(pc.yaw0));
    out.yaw = pc.yaw0 + sign * dist / s.radius;
    const Vec3 h(std::cos(out.yaw), std::sin(out.yaw), 0.0);
    const Vec3 left(-std::sin(out.yaw), std::cos(out.yaw), 0.0);
    out.p = Vec3(cx, cy, height_) - sign * s.radius * left;
    out.v = v * h;
    const double yaw_rate = sign * v / s.radius;
    out.a = a_t * h + v * yaw_rate * left;
    out.body_rate = Vec3(0, 0, yaw_rate);
  }
  out.R = exp_so3(Vec3(0, 0, out.yaw));
  return out;
}

// --- raycasting --------------------------------------------------------------

namespace {

void plane_axes(const PlanePatch& pl, Vec3& u_axis, Vec3& v_axis) {
  const Vec3 n = pl.normal.normalized();
  Vec3 u = n.cross(Vec3::UnitZ());
  if (u.norm() < 1e-9) u = Vec3::UnitX();
  u_axis = u.normalized();
  v_axis = n.cross(u_axis);
}

double hit_plane(const PlanePatch& pl, const Vec3& o, const Vec3& d) {
  const Vec3 n = pl.normal.normalized();
  const double denom = d.dot(n);
  if (std::abs(denom) < 1e-12) return -1.0;
  const double t = (pl.anchor - o).dot(n) / denom;
  if (t <= 1e-6) return -1.0;
  Vec3 u_axis, v_axis;
  plane_axes(pl, u_axis, v_axis);
  const Vec3 rel = o + t * d - pl.anchor;
  if (std::abs(rel.dot(u_axis)) > pl.half_u || std::abs(rel.dot(v_axis)) > pl.half_v) {
    return -1.0;
  }
  return t;
}

double hit_pillar(const Pillar& p, const Vec3& o, const Vec3& d) {
  const double ox = o.x() - p.center.x();
  const double oy = o.y() - p.center.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a < 1e-14) return -1.0;
  const double b = 2.0 * (ox * d.x() + oy * d.y());
  const double c = ox * ox + oy * oy - p.radius * p.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -1.0;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t <= 1e-6) continue;
    const double z = o.z() + t * d.z();
    if (z >= p.base_z && z <= p.base_z + p.height) return t;
  }
  return -1.0;
}

double hit_box(const DynamicBox& box, double time, const Vec3& o, const Vec3& d) {
  const Vec3 c = box.center_at(time);
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double lo = c(i) - box.half_sizes(i);
    const double hi = c(i) + box.half_sizes(i);
    if (std::abs(d(i)) < 1e-12) {
      if (o(i) < lo || o(i) > hi) return -1.0;
      continue;
    }
    double t0 = (lo - o(i)) / d(i);
    double t1 = (hi - o(i)) / d(i);
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return -1.0;
  }
  return tmin > 1e-6 ? tmin : -1.0;
}

double nearest_hit(const WorldModel& world, double time, const Vec3& o, const Vec3& d,
                   double max_range, bool include_dynamic) {
  double best = max_range;
  bool found = false;
  auto take = [&](double t) {
    if (t > 0.0 && t < best) {
      best = t;
      found = true;
    }
  };
  for (const auto& g : world.ground) take(hit_plane(g, o, d));
  for (const auto& wall : world.walls) take(hit_plane(wall, o, d));
  for (const auto& p : world.pillars) take(hit_pillar(p, o, d));
  if (include_dynamic) {
    for (const auto& b : world.boxes) take(hit_box(b, time, o, d));
  }
  return found ? best : -1.0;
}

template <bool Parallel>
std::vector<LidarPoint> simulate_lidar_impl(const WorldModel& world, const Mat3& R_WS,
                                            const Vec3& t_WS, const LidarPattern& pattern,
                                            double sigma, double t, std::mt19937_64& rng,
                                            bool include_dynamic) {
  const int n_az = static_cast<int>(std::round(2.0 * M_PI / pattern.azimuth_step));
  const long n_rays = static_cast<long>(pattern.rings) * n_az;
  std::vector<double> ranges(n_rays);
  std::vector<Vec3> dirs(n_rays);

#pragma omp parallel for schedule(static) if (Parallel)
  for (long i = 0; i < n_rays; ++i) {
    const int ring = static_cast<int>(i / n_az);
    const int az_i = static_cast<int>(i % n_az);
    const double elev = pattern.elev_min + ring * pattern.elev_step;
    const double az = az_i * pattern.azimuth_step;
    const Vec3 dir_s(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az),
                     std::sin(elev));
    dirs[i] = dir_s;
    ranges[i] = nearest_hit(world, t, t_WS, R_WS * dir_s, pattern.max_range, include_dynamic);
  }

  // noise in fixed ray order, independent of the parallel schedule
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<LidarPoint> points;
  points.reserve(n_rays / 2);
  for (long i = 0; i < n_rays; ++i) {
    if (ranges[i] < 0.0) continue;
    double r = ranges[i];
    if (sigma > 0.0) r += sigma * gauss(rng);
    points.push_back({r * dirs[i], static_cast<int>(i / n_az)});
  }
  return points;
}

}  // namespace

std::vector<LidarPoint> simulate_lidar(const WorldModel& world, const Mat3& R_WS,
                                       const Vec3& t_WS, const LidarPattern& pattern,
                                       double range_noise_sigma, double t,
                                       std::mt19937_64& rng, bool include_dynamic) {
  return simulate_lidar_impl<true>(world, R_WS, t_WS, pattern, range_noise_sigma, t, rng,
                                   include_dynamic);
}

std::vector<LidarPoint> simulate_lidar_serial(const WorldModel& world, const Mat3& R_WS,
                                              const Vec3& t_WS, const LidarPattern& pattern,
                                              double range_noise_sigma, double t,
                                              std::mt19937_64& rng, bool include_dynamic) {
  return simulate_lidar_impl<false>(world, R_WS, t_WS, pattern, range_noise_sigma, t, rng,
                                    include_dynamic);
}

// --- imu / wheel -------------------------------------------------------------

void simulate_imu(const TrajectorySpec& traj, double t, const Vec3& bias_a,
                  const Vec3& bias_w, const ImuSigmas& sigmas, const Vec3& g_W,
                  std::mt19937_64& rng, Vec3& omega_m, Vec3& accel_m) {
  const TrajectorySample s = traj.sample(t);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 n_w = Vec3::Zero(), n_a = Vec3::Zero();
  for (int i = 0; i < 3; ++i) n_w(i) = sigmas.sigma_w * gauss(rng);
  for (int i = 0; i < 3; ++i) n_a(i) = sigmas.sigma_a * gauss(rng);
  omega_m = s.body_rate + bias_w + n_w;
  accel_m = s.R.transpose() * (s.a - g_W) + bias_a + n_a;
}

void simulate_wheel(const TrajectorySpec& traj, const WorldModel& world, double t,
                    double noise_sigma_v, double noise_sigma_w, std::mt19937_64& rng,
                    Vec3& v_m, Vec3& omega_m) {
  const TrajectorySample s = traj.sample(t);
  const Vec3 v_body(s.speed, 0.0, 0.0);  // nonholonomic platform
  const Vec3 slip = world.slip_at(Eigen::Vector2d(s.p.x(), s.p.y()));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 n_v = Vec3::Zero(), n_w = Vec3::Zero();
  for (int i = 0; i < 3; ++i) n_v(i) = noise_sigma_v * gauss(rng);
  for (int i = 0; i < 3; ++i) n_w(i) = noise_sigma_w * gauss(rng);
  v_m = v_body.cwiseProduct(slip) + n_v;
  omega_m = s.body_rate + n_w;
}

// --- dataset -----------------------------------------------------------------

Dataset generate_dataset(const WorldModel& world, const TrajectorySpec& traj,
                         const DatasetRates& rates, const DatasetNoise& noise,
                         const LidarPattern& pattern, uint64_t seed, bool include_dynamic) {
  if (rates.imu_hz <= 0 || rates.wheel_hz <= 0 || rates.lidar_hz <= 0 || rates.truth_hz <= 0) {
    throw std::invalid_argument("generate_dataset: rates must be positive");
  }
  const double span = traj.duration();

  struct Event {
    double t;
    RecordKind kind;
  };
  std::vector<Event> events;
  const double imu_dt = 1.0 / rates.imu_hz;
  const double wheel_dt = 1.0 / rates.wheel_hz;
  const double lidar_dt = 1.0 / rates.lidar_hz;
  for (long k = 0;; ++k) {
    const double t = 0.5 * imu_dt + k * imu_dt;
    if (t >= span) break;
    events.push_back({t, RecordKind::kImu});
  }
  for (long k = 0;; ++k) {
    const double t = 0.5 * wheel_dt + k * wheel_dt;
    if (t >= span) break;
    events.push_back({t, RecordKind::kWheel});
  }
  for (long k = 0;; ++k) {
    const double t = k * lidar_dt;
    if (t >= span) break;
    events.push_back({t, RecordKind::kLidar});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });

  std::mt19937_64 rng(seed);
  Dataset out;
  out.records.reserve(events.size());
  for (const Event& e : events) {
    MeasurementRecord rec;
    rec.t = e.t;
    rec.kind = e.kind;
    switch (e.kind) {
      case RecordKind::kImu:
        simulate_imu(traj, e.t, noise.imu_bias_a, noise.imu_bias_w, noise.imu,
                     Vec3(0, 0, -9.81), rng, rec.omega, rec.accel_or_vel);
        break;
      case RecordKind::kWheel:
        simulate_wheel(traj, world, e.t, noise.wheel_sigma_v, noise.wheel_sigma_w, rng,
                       rec.accel_or_vel, rec.omega);
        break;
      case RecordKind::kLidar: {
        const TrajectorySample s = traj.sample(e.t);
        rec.points = simulate_lidar(world, s.R, s.p, pattern, noise.lidar_range_sigma, e.t,
                                    rng, include_dynamic);
        break;
      }
    }
    out.records.push_back(std::move(rec));
  }

  const double truth_dt = 1.0 / rates.truth_hz;
  for (long k = 0;; ++k) {
    const double t = k * truth_dt;
    if (t > span + 1e-12) break;
    const TrajectorySample s = traj.sample(std::min(t, span));
    out.truth.push_back({t, s.R, s.p, s.v});
  }
  return out;
}

}  // namespace sliw
