#include "sliw/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

namespace sliw {

AssociationResult associate(const std::vector<PoseLogEntry>& est,
                            const std::vector<PoseLogEntry>& gt, double max_dt) {
  if (gt.size() < 2) throw std::runtime_error("associate: ground truth too short");
  AssociationResult out;
  for (const PoseLogEntry& e : est) {
    // bracketing ground-truth interval
    auto it = std::lower_bound(gt.begin(), gt.end(), e.t,
                               [](const PoseLogEntry& g, double t) { return g.t < t; });
    if (it == gt.begin()) {
      if (it->t - e.t > max_dt) {
        ++out.dropped;
        continue;
      }
      it = gt.begin() + 1;
    } else if (it == gt.end()) {
      if (e.t - gt.back().t > max_dt) {
        ++out.dropped;
        continue;
      }
      it = gt.end() - 1;
    }
    const PoseLogEntry& g1 = *it;
    const PoseLogEntry& g0 = *(it - 1);
    const double u = std::clamp((e.t - g0.t) / (g1.t - g0.t), 0.0, 1.0);
    PosePair pair;
    pair.t = e.t;
    pair.p_est = e.p;
    pair.p_gt = g0.p + u * (g1.p - g0.p);
    pair.q_gt = g0.q.slerp(u, g1.q);
    out.pairs.push_back(pair);
  }
  if (out.pairs.empty()) {
    throw std::runtime_error("associate: no temporal overlap between logs");
  }
  return out;
}

TrajectoryErrorReport compute_errors(const std::vector<PosePair>& pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("compute_errors: need >= 2 pairs");
  TrajectoryErrorReport rep;
  double sum_abs = 0.0, sum_lat = 0.0, sum_lon = 0.0;
  Vec3 prev_gt = pairs.front().p_gt;
  double mileage = 0.0;
  for (const PosePair& pr : pairs) {
    const Vec3 e = pr.p_est - pr.p_gt;
    const double abs_err = e.norm();

    // planar heading frame from ground-truth yaw
    Vec3 fwd = pr.q_gt * Vec3::UnitX();
    fwd.z() = 0.0;
    if (fwd.norm() < 1e-9) fwd = Vec3::UnitX();
    fwd.normalize();
    const Vec3 left(-fwd.y(), fwd.x(), 0.0);
    const double lon = std::abs(e.x() * fwd.x() + e.y() * fwd.y());
    const double lat = std::abs(e.x() * left.x() + e.y() * left.y());

    rep.t.push_back(pr.t);
    rep.abs_err.push_back(abs_err);
    rep.lat_err.push_back(lat);
    rep.lon_err.push_back(lon);
    rep.max_abs = std::max(rep.max_abs, abs_err);
    rep.max_lat = std::max(rep.max_lat, lat);
    rep.max_lon = std::max(rep.max_lon, lon);
    sum_abs += abs_err;
    sum_lat += lat;
    sum_lon += lon;
    mileage += (pr.p_gt - prev_gt).norm();
    prev_gt = pr.p_gt;
  }
  const double n = static_cast<double>(pairs.size());
  rep.mean_abs = sum_abs / n;
  rep.mean_lat = sum_lat / n;
  rep.mean_lon = sum_lon / n;
  rep.mileage_km = mileage / 1000.0;
  return rep;
}

std::string comparison_table(const std::vector<NamedReport>& reports) {
  std::ostringstream os;
  os << "run,mileage_km,max_abs_m,mean_abs_m,max_lat_m,mean_lat_m,max_lon_m,mean_lon_m\n";
  os.precision(6);
  os << std::fixed;
  for (const NamedReport& r : reports) {
    os << r.name << ',' << r.report.mileage_km << ',' << r.report.max_abs << ','
       << r.report.mean_abs << ',' << r.report.max_lat << ',' << r.report.mean_lat << ','
       << r.report.max_lon << ',' << r.report.mean_lon << '\n';
  }
  return os.str();
}

void compare_runs(const std::vector<NamedReport>& reports, const std::string& csv_path,
                  const std::string& plot_path) {
  if (reports.empty()) throw std::invalid_argument("compare_runs: no reports");
  {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("compare_runs: cannot open " + csv_path);
    os << comparison_table(reports);
  }
  nlohmann::json plot = nlohmann::json::object();
  for (const NamedReport& r : reports) {
    plot[r.name] = {{"t", r.report.t},
                    {"abs", r.report.abs_err},
                    {"lat", r.report.lat_err},
                    {"lon", r.report.lon_err}};
  }
  std::ofstream os(plot_path);
  if (!os) throw std::runtime_error("compare_runs: cannot open " + plot_path);
  os << plot.dump() << '\n';
}

}  // namespace sliw
