#include "sliw/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sliw {

const char* to_string(SemanticLabel label) {
  switch (label) {
    case SemanticLabel::kCylinder: return "cylinder";
    case SemanticLabel::kPlane: return "plane";
    default: return "other";
  }
}

void VoxelCell::add(const Vec3& p) {
  // Welford update on mean and deviation outer-product sum.
  has_cov_cache = false;
  count += 1;
  const Vec3 delta = p - mean;
  mean += delta / static_cast<double>(count);
  const Vec3 delta2 = p - mean;
  m2 += delta * delta2.transpose();
}

void VoxelCell::merge(const VoxelCell& other) {
  if (other.count == 0) return;
  has_cov_cache = false;
  if (count == 0) {
    *this = other;
    return;
  }
  // Chan's parallel combination.
  const double na = count, nb = other.count;
  const Vec3 delta = other.mean - mean;
  const double n = na + nb;
  mean += delta * (nb / n);
  m2 += other.m2 + (delta * delta.transpose()) * (na * nb / n);
  count += other.count;
}

Mat3 VoxelCell::covariance() const {
  if (has_cov_cache) return cov_cache;
  if (count < 2) return Mat3::Zero();
  Mat3 cov = m2 / static_cast<double>(count - 1);
  return 0.5 * (cov + cov.transpose());
}

VoxelMap::VoxelMap(double resolution, MapKind kind) : resolution_(resolution), kind_(kind) {
  if (resolution <= 0.0) {
    throw std::invalid_argument("VoxelMap: resolution must be positive");
  }
}

VoxelKey VoxelMap::key_of(const Vec3& p) const {
  return VoxelKey{static_cast<int32_t>(std::floor(p.x() / resolution_)),
                  static_cast<int32_t>(std::floor(p.y() / resolution_)),
                  static_cast<int32_t>(std::floor(p.z() / resolution_))};
}

void VoxelMap::touch_bounds(const VoxelKey& key) {
  const int32_t kv[3] = {key.x, key.y, key.z};
  if (!has_bounds_) {
    for (int i = 0; i < 3; ++i) bounds_lo_[i] = bounds_hi_[i] = kv[i];
    has_bounds_ = true;
    return;
  }
  for (int i = 0; i < 3; ++i) {
    bounds_lo_[i] = std::min(bounds_lo_[i], kv[i]);
    bounds_hi_[i] = std::max(bounds_hi_[i], kv[i]);
  }
}

void VoxelMap::insert_points(const std::vector<Vec3>& points) {
  for (const Vec3& p : points) {
    if (!p.allFinite()) {
      throw std::invalid_argument("insert_points: non-finite point");
    }
    const VoxelKey key = key_of(p);
    touch_bounds(key);
    cells_[key].add(p);
  }
}

const VoxelCell* VoxelMap::find(const VoxelKey& key) const {
  auto it = cells_.find(key);
  return it == cells_.end() ? nullptr : &it->second;
}

void VoxelMap::finalize(const ClassifyParams& params) {
  for (auto it = cells_.begin(); it != cells_.end();) {
    if (it->second.count < kMinPointsForCov) {
      it = cells_.erase(it);
      continue;
    }
    it->second.label = classify_voxel(it->second, params);
    it->second.classified = true;
    it->second = refine_covariance(it->second);
    ++it;
  }
}

namespace {

struct EigDescending {
  Vec3 sigma;   // sigma(0) >= sigma(1) >= sigma(2), floored at 0
  Mat3 u;       // matching columns
};

EigDescending eig_descending(const Mat3& cov) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (cov + cov.transpose()));
  EigDescending out;
  for (int i = 0; i < 3; ++i) {
    out.sigma(i) = std::max(0.0, es.eigenvalues()(2 - i));
    out.u.col(i) = es.eigenvectors().col(2 - i);
  }
  return out;
}

double angle_to_z(const Vec3& u) {
  return std::acos(std::min(1.0, std::abs(u.normalized().z())));
}

}  // namespace

SemanticLabel classify_voxel(const VoxelCell& cell, const ClassifyParams& params) {
  if (cell.count < kMinPointsForCov) {
    throw std::invalid_argument("classify_voxel: cell not finalized (count < 5)");
  }
  const EigDescending e = eig_descending(cell.covariance());
  constexpr double kTiny = 1e-15;
  const double s1 = std::max(e.sigma(0), kTiny);
  const double s2 = std::max(e.sigma(1), kTiny);
  const double s3 = std::max(e.sigma(2), kTiny);
  if (s1 / s2 >= params.ratio_big && s2 / s3 <= params.ratio_close &&
      angle_to_z(e.u.col(0)) < params.theta_thc) {
    return SemanticLabel::kCylinder;
  }
  if (s1 / s2 <= params.ratio_close && s1 / s3 >= params.ratio_big &&
      angle_to_z(e.u.col(2)) < params.theta_thp) {
    return SemanticLabel::kPlane;
  }
  return SemanticLabel::kOther;
}

VoxelCell refine_covariance(const VoxelCell& cell) {
  VoxelCell out = cell;
  const EigDescending e = eig_descending(cell.covariance());
  Vec3 d;
  if (cell.label == SemanticLabel::kCylinder) {
    d = e.sigma.cwiseMax(1e-3);
  } else {
    d = Vec3(1.0, 1.0, 1e-3);
  }
  Mat3 refined = e.u * d.asDiagonal() * e.u.transpose();
  out.refined_cov = 0.5 * (refined + refined.transpose());
  out.refined = true;
  return out;
}

std::vector<KnnResult> VoxelMap::knn_search(const Vec3& query, int k, uint32_t min_count,
                                            double max_distance) const {
  std::vector<KnnResult> best;
  if (k < 1 || cells_.empty()) return best;

  const VoxelKey qk = key_of(query);
  const int32_t qv[3] = {qk.x, qk.y, qk.z};
  int max_shell = 0;
  for (int i = 0; i < 3; ++i) {
    max_shell = std::max({max_shell, std::abs(qv[i] - bounds_lo_[i]),
                          std::abs(bounds_hi_[i] - qv[i])});
  }

  auto consider = [&](const VoxelKey& key) {
    auto it = cells_.find(key);
    if (it == cells_.end() || it->second.count < min_count) return;
    const double d = (it->second.mean - query).norm();
    if (static_cast<int>(best.size()) < k) {
      best.push_back({key, d});
      std::push_heap(best.begin(), best.end(),
                     [](const KnnResult& a, const KnnResult& b) { return a.distance < b.distance; });
    } else if (d < best.front().distance) {
      std::pop_heap(best.begin(), best.end(),
                    [](const KnnResult& a, const KnnResult& b) { return a.distance < b.distance; });
      best.back() = {key, d};
      std::push_heap(best.begin(), best.end(),
                     [](const KnnResult& a, const KnnResult& b) { return a.distance < b.distance; });
    }
  };

  // distance from the query to a cell's axis-aligned bounding box
  auto cell_lower_bound = [&](int dx, int dy, int dz) {
    const int32_t kv[3] = {qk.x + dx, qk.y + dy, qk.z + dz};
    double d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double lo_w = static_cast<double>(kv[i]) * resolution_;
      const double hi_w = lo_w + resolution_;
      const double q = query(i);
      const double gap = q < lo_w ? lo_w - q : (q > hi_w ? q - hi_w : 0.0);
      d2 += gap * gap;
    }
    return std::sqrt(d2);
  };

  for (int r = 0; r <= max_shell; ++r) {
    const double shell_min = static_cast<double>(r - 1) * resolution_;
    if (shell_min > max_distance) break;
    if (static_cast<int>(best.size()) == k && shell_min > best.front().distance) {
      break;
    }
    // clamp each axis to the occupied key range; skip cells provably farther
    // than the current bound
    const int x0 = std::max(-r, bounds_lo_[0] - qk.x), x1 = std::min(r, bounds_hi_[0] - qk.x);
    const int y0 = std::max(-r, bounds_lo_[1] - qk.y), y1 = std::min(r, bounds_hi_[1] - qk.y);
    const int z0 = std::max(-r, bounds_lo_[2] - qk.z), z1 = std::min(r, bounds_hi_[2] - qk.z);
    for (int dx = x0; dx <= x1; ++dx) {
      for (int dy = y0; dy <= y1; ++dy) {
        for (int dz = z0; dz <= z1; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          const double bound = static_cast<int>(best.size()) == k
                                   ? std::min(best.front().distance, max_distance)
                                   : max_distance;
          if (cell_lower_bound(dx, dy, dz) > bound) continue;
          consider(VoxelKey{qk.x + dx, qk.y + dy, qk.z + dz});
        }
      }
    }
  }
  std::sort(best.begin(), best.end(), [](const KnnResult& a, const KnnResult& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return std::tie(a.key.x, a.key.y, a.key.z) < std::tie(b.key.x, b.key.y, b.key.z);
  });
  return best;
}

std::vector<ScanVoxel> voxelize_scan(const std::vector<Vec3>& points, double resolution,
                                     double fallback_sigma) {
  if (resolution <= 0.0) {
    throw std::invalid_argument("voxelize_scan: resolution must be positive");
  }
  VoxelMap scratch(resolution, MapKind::kLocalDynamic);
  scratch.insert_points(points);
  std::vector<ScanVoxel> out;
  out.reserve(scratch.size());
  for (const auto& [key, cell] : scratch.cells()) {
    ScanVoxel v;
    v.key = key;
    v.mean = cell.mean;
    v.count = cell.count;
    v.covariance = cell.count >= kMinPointsForCov
                       ? cell.covariance()
                       : Mat3(fallback_sigma * fallback_sigma * Mat3::Identity());
    out.push_back(v);
  }
  // hash order is not stable across platforms; emit sorted by key
  std::sort(out.begin(), out.end(), [](const ScanVoxel& a, const ScanVoxel& b) {
    return std::tie(a.key.x, a.key.y, a.key.z) < std::tie(b.key.x, b.key.y, b.key.z);
  });
  return out;
}

PlaneFitResult fit_plane(const std::vector<Vec3>& neighbors, double planarity_threshold) {
  PlaneFitResult res;
  if (neighbors.size() < 4) {
    res.status = PlaneFitStatus::kInsufficientPoints;
    return res;
  }
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : neighbors) centroid += p;
  centroid /= static_cast<double>(neighbors.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : neighbors) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(neighbors.size() - 1);
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const double l_min = std::max(0.0, es.eigenvalues()(0));
  const double l_mid = es.eigenvalues()(1);
  if (l_mid < 1e-12) {
    res.status = PlaneFitStatus::kDegenerate;
    return res;
  }
  res.plane.normal = es.eigenvectors().col(0).normalized();
  res.plane.anchor = centroid;
  res.plane.planarity = l_min / l_mid;
  if (res.plane.planarity > planarity_threshold) {
    res.status = PlaneFitStatus::kNotPlanar;
  }
  return res;
}

bool VoxelMap::local_map_update(const std::vector<Vec3>& scan, const Mat3& R, const Vec3& p,
                                KeyframeState& kf, const LocalMapParams& params) {
  if (kind_ != MapKind::kLocalDynamic) {
    throw std::invalid_argument("local_map_update: map is not local-dynamic");
  }
  bool admitted = false;
  if (!kf.has_last ||
      (p - kf.last_p).norm() >= params.keyframe_translation ||
      log_so3(kf.last_R.transpose() * R).norm() >= params.keyframe_rotation) {
    std::vector<Vec3> world;
    world.reserve(scan.size());
    for (const Vec3& pt : scan) world.push_back(R * pt + p);
    insert_points(world);
    kf.has_last = true;
    kf.last_R = R;
    kf.last_p = p;
    admitted = true;
  }
  for (auto it = cells_.begin(); it != cells_.end();) {
    if ((it->second.mean - p).norm() > params.sliding_radius) {
      it = cells_.erase(it);
    } else {
      ++it;
    }
  }
  return admitted;
}

// --- serialization -----------------------------------------------------------
//
// Layout: 8-byte magic "SLIWVMAP", u32 version, u8 map kind, 3 pad bytes,
// f64 resolution, u64 cell count, then fixed-width records
// (key 3xi32, count u32, mean 3xf64, covariance upper triangle 6xf64, label u8).

namespace {
constexpr char kMagic[8] = {'S', 'L', 'I', 'W', 'V', 'M', 'A', 'P'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void VoxelMap::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("VoxelMap::save: cannot open " + path);
  os.write(kMagic, 8);
  write_raw(os, kVersion);
  write_raw(os, static_cast<uint8_t>(kind_));
  const char pad[3] = {0, 0, 0};
  os.write(pad, 3);
  write_raw(os, resolution_);
  write_raw(os, static_cast<uint64_t>(cells_.size()));

  std::vector<const std::pair<const VoxelKey, VoxelCell>*> ordered;
  ordered.reserve(cells_.size());
  for (const auto& kv : cells_) ordered.push_back(&kv);
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return std::tie(a->first.x, a->first.y, a->first.z) <
           std::tie(b->first.x, b->first.y, b->first.z);
  });

  for (const auto* kv : ordered) {
    const VoxelKey& key = kv->first;
    const VoxelCell& c = kv->second;
    write_raw(os, key.x);
    write_raw(os, key.y);
    write_raw(os, key.z);
    write_raw(os, c.count);
    for (int i = 0; i < 3; ++i) write_raw(os, c.mean(i));
    const Mat3 cov = c.covariance();
    const int idx[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
    for (const auto& ij : idx) write_raw(os, cov(ij[0], ij[1]));
    write_raw(os, static_cast<uint8_t>(c.label));
  }
  if (!os) throw std::runtime_error("VoxelMap::save: write failed for " + path);
}

VoxelMap VoxelMap::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("VoxelMap::load: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("VoxelMap::load: bad magic in " + path);
  }
  const uint32_t version = read_raw<uint32_t>(is);
  if (version != kVersion) throw std::runtime_error("VoxelMap::load: unsupported version");
  const auto kind = static_cast<MapKind>(read_raw<uint8_t>(is));
  char pad[3];
  is.read(pad, 3);
  const double resolution = read_raw<double>(is);
  const uint64_t count = read_raw<uint64_t>(is);

  VoxelMap map(resolution, kind);
  for (uint64_t i = 0; i < count; ++i) {
    VoxelKey key;
    key.x = read_raw<int32_t>(is);
    key.y = read_raw<int32_t>(is);
    key.z = read_raw<int32_t>(is);
    VoxelCell c;
    c.count = read_raw<uint32_t>(is);
    for (int j = 0; j < 3; ++j) c.mean(j) = read_raw<double>(is);
    Mat3 cov;
    const int idx[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
    for (const auto& ij : idx) {
      const double v = read_raw<double>(is);
      cov(ij[0], ij[1]) = v;
      cov(ij[1], ij[0]) = v;
    }
    c.label = static_cast<SemanticLabel>(read_raw<uint8_t>(is));
    // cache the stored covariance so save/load round-trips are bit-exact
    c.cov_cache = cov;
    c.has_cov_cache = true;
    if (c.count >= 2) c.m2 = cov * static_cast<double>(c.count - 1);
    if (c.count >= kMinPointsForCov) {
      c.classified = true;
      c = refine_covariance(c);
    }
    map.touch_bounds(key);
    map.cells_[key] = c;
  }
  if (!is) throw std::runtime_error("VoxelMap::load: truncated file " + path);
  return map;
}

}  // namespace sliw
