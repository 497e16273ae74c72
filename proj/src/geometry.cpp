#include "hashct/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hashct {

std::string to_string(ScanMode mode) { return mode == ScanMode::fan2d ? "fan2d" : "cone3d"; }

ScanMode scan_mode_from_string(const std::string& name) {
  if (name == "fan2d") return ScanMode::fan2d;
  if (name == "cone3d") return ScanMode::cone3d;
  throw std::invalid_argument("unknown scan mode '" + name + "' (expected fan2d or cone3d)");
}

std::vector<std::string> ScanGeometry::violations() const {
  std::vector<std::string> out;
  if (!(source_to_isocenter_mm > 0.0)) out.push_back("geometry: source_to_isocenter_mm must be positive");
  if (!(source_to_detector_mm > source_to_isocenter_mm))
    out.push_back("geometry: source_to_detector_mm must exceed source_to_isocenter_mm");
  if (detector_rows < 1 || detector_cols < 1) out.push_back("geometry: detector must have at least one row and column");
  if (!(pitch_col_mm > 0.0) || !(pitch_row_mm > 0.0)) out.push_back("geometry: pixel pitch must be positive");
  if (n_views < 1) out.push_back("geometry: n_views must be >= 1");
  if (!(angle_range > 0.0)) out.push_back("geometry: angle_range must be positive");
  if (mode == ScanMode::fan2d && detector_rows != 1) out.push_back("geometry: fan2d mode requires detector_rows = 1");
  return out;
}

void ScanGeometry::validate() const {
  auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

Vec3 ScanGeometry::source_position(int view) const {
  const double phi = view_angle(view);
  return {source_to_isocenter_mm * std::cos(phi), source_to_isocenter_mm * std::sin(phi), 0.0};
}

Vec3 ScanGeometry::pixel_center(int view, int row, int col) const {
  const double phi = view_angle(view);
  const Vec3 axis(-std::cos(phi), -std::sin(phi), 0.0);
  const Vec3 s_dir(-std::sin(phi), std::cos(phi), 0.0);
  const Vec3 src = source_position(view);
  const double t = mode == ScanMode::fan2d ? 0.0 : pixel_t(row);
  return src + source_to_detector_mm * axis + pixel_s(col) * s_dir + t * Vec3::UnitZ();
}

double ScanGeometry::transaxial_fov_radius() const {
  const double half_width = 0.5 * detector_cols * pitch_col_mm;
  const double fan_half_angle = std::atan2(half_width, source_to_detector_mm);
  return source_to_isocenter_mm * std::sin(fan_half_angle);
}

std::vector<std::string> Domain::violations() const {
  std::vector<std::string> out;
  if (fov.degenerate()) out.push_back("domain: FOV box is degenerate");
  if (extended.degenerate()) out.push_back("domain: extended box is degenerate");
  if (!extended.contains(fov)) out.push_back("domain: FOV must be contained in the extended FOV");
  return out;
}

void Domain::validate() const {
  auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

std::vector<double> view_angles(const ScanGeometry& geom) {
  if (geom.n_views < 1) throw std::invalid_argument("view_angles: n_views must be >= 1");
  std::vector<double> angles(geom.n_views);
  for (int i = 0; i < geom.n_views; ++i) angles[i] = geom.view_angle(i);
  return angles;
}

Ray make_ray(const ScanGeometry& geom, int view, int row, int col) {
  if (view < 0 || view >= geom.n_views || row < 0 || row >= geom.detector_rows || col < 0 ||
      col >= geom.detector_cols) {
    std::ostringstream msg;
    msg << "make_ray: index (" << view << ", " << row << ", " << col << ") out of range";
    throw std::out_of_range(msg.str());
  }
  Ray ray;
  ray.origin = geom.source_position(view);
  ray.direction = (geom.pixel_center(view, row, col) - ray.origin).normalized();
  if (geom.mode == ScanMode::fan2d) {
    ray.origin.z() = 0.0;
    ray.direction.z() = 0.0;
  }
  ray.index = {view, row, col};
  return ray;
}

std::optional<Interval> clip_to_box(const Ray& ray, const Box& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < box.lo[a] || o > box.hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d;
    double ta = (box.lo[a] - o) * inv;
    double tb = (box.hi[a] - o) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (!(t1 > t0)) return std::nullopt;
  }
  return Interval{t0, t1};
}

}  // namespace hashct
