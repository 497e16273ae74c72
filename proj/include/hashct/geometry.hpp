#pragma once

#include <Eigen/Core>

#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hashct {

using Vec3 = Eigen::Vector3d;

enum class ScanMode { cone3d, fan2d };

std::string to_string(ScanMode mode);
ScanMode scan_mode_from_string(const std::string& name);

/// Axis-aligned box in millimetres. Closed on both ends.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  static Box centered(const Vec3& extent) { return {-0.5 * extent, 0.5 * extent}; }

  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  bool contains(const Box& inner) const {
    return (inner.lo.array() >= lo.array()).all() && (inner.hi.array() <= hi.array()).all();
  }
  bool degenerate() const { return !(hi.array() > lo.array()).all(); }
};

/// Circular source trajectory in the z=0 plane with a flat detector.
///
/// Source position at angle phi is SID * (cos phi, sin phi, 0). The detector
/// plane is orthogonal to the source-isocenter line at distance SDD from the
/// source; its column axis is (-sin phi, cos phi, 0) and its row axis is +z.
/// Pixel centers sit at (i + 0.5) * pitch from the detector corner, so the
/// principal point lies at the middle of the panel.
struct ScanGeometry {
  double source_to_detector_mm = 600.0;
  double source_to_isocenter_mm = 400.0;
  int detector_rows = 640;
  int detector_cols = 640;
  double pitch_col_mm = 0.2;  // along s
  double pitch_row_mm = 0.2;  // along t
  int n_views = 300;
  double angle_start = 0.0;
  double angle_range = 2.0 * std::numbers::pi;
  ScanMode mode = ScanMode::cone3d;

  /// Throws std::invalid_argument listing the first violated invariant.
  void validate() const;
  std::vector<std::string> violations() const;

  double angle_step() const { return angle_range / n_views; }
  double view_angle(int view) const { return angle_start + view * angle_step(); }
  Vec3 source_position(int view) const;

  /// Detector coordinate (s, t) of a pixel center, measured from the principal point.
  double pixel_s(int col) const { return (col + 0.5) * pitch_col_mm - 0.5 * detector_cols * pitch_col_mm; }
  double pixel_t(int row) const { return (row + 0.5) * pitch_row_mm - 0.5 * detector_rows * pitch_row_mm; }
  Vec3 pixel_center(int view, int row, int col) const;

  std::size_t n_rays() const {
    return static_cast<std::size_t>(n_views) * detector_rows * detector_cols;
  }

  /// Radius of the in-plane disc seen by every view (the scanner's transaxial FOV).
  double transaxial_fov_radius() const;

  bool full_scan(double tol = 1e-9) const {
    return std::abs(angle_range - 2.0 * std::numbers::pi) <= tol;
  }
};

struct DetectorIndex {
  int view = 0;
  int row = 0;
  int col = 0;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  DetectorIndex index;

  Vec3 at(double t) const { return origin + t * direction; }
};

struct Interval {
  double t_near = 0.0;
  double t_far = 0.0;
  double length() const { return t_far - t_near; }
};

/// Truncated FOV and the extended reconstruction domain. Both boxes are
/// centered on the rotation axis.
struct Domain {
  Box fov;
  Box extended;

  void validate() const;
  std::vector<std::string> violations() const;
  bool in_fov(const Vec3& p) const { return fov.contains(p); }
  bool in_outer(const Vec3& p) const { return extended.contains(p) && !fov.contains(p); }
};

std::vector<double> view_angles(const ScanGeometry& geom);

/// Ray from the source at view `view` through the center of detector pixel (row, col).
Ray make_ray(const ScanGeometry& geom, int view, int row, int col);

/// Slab-method intersection restricted to t >= 0. Empty when the ray misses
/// the box or only touches it in a single point.
std::optional<Interval> clip_to_box(const Ray& ray, const Box& box);

}  // namespace hashct
