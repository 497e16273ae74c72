#pragma once

#include "hashct/geometry.hpp"
#include "hashct/volume.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace hashct {

/// Constant-attenuation ellipsoid. `rotation` maps local axes to world axes.
struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double delta_mu = 0.0;

  /// Rotation from intrinsic Z-Y-X Euler angles in degrees.
  static Eigen::Matrix3d euler_zyx_deg(double yaw, double pitch, double roll);
};

/// Additive union of ellipsoids. In planar mode every ellipsoid is an
/// infinitely tall elliptic cylinder: the local z test is skipped.
class Phantom {
 public:
  Phantom() = default;
  explicit Phantom(std::vector<Ellipsoid> ellipsoids, bool planar = false);

  const std::vector<Ellipsoid>& ellipsoids() const { return ellipsoids_; }
  bool planar() const { return planar_; }
  const Box& support_box() const { return support_; }

  double mu_at(const Vec3& x) const;
  /// Exact line integral along the ray for t >= 0.
  double line_integral(const Ray& ray) const;

  Phantom scaled(double factor) const;
  /// Applies x -> R x to every ellipsoid.
  Phantom rotated(const Eigen::Matrix3d& R) const;

 private:
  std::vector<Ellipsoid> ellipsoids_;
  bool planar_ = false;
  Box support_;
};

/// Names accepted by `builtin_phantom`.
std::vector<std::string> builtin_phantom_names();

/// Built-in phantoms in millimetres. `planar` selects the 2D (fan-beam) variant.
///   empty         no ellipsoids
///   forbild_head  simplified head: skull shell, brain, sinuses, ear inserts and
///                 small inner structures; skull extends past a 64 mm FOV
///   shepp_logan   modified Shepp-Logan scaled to a 60 mm head radius
///   water_disk    uniform 0.02/mm cylinder/sphere of radius 40 mm
Phantom builtin_phantom(const std::string& name, bool planar);

/// Text format, one record per line:
///   planar <0|1>
///   ellipsoid cx cy cz  a b c  yaw pitch roll  delta_mu
/// Angles are intrinsic Z-Y-X Euler angles in degrees; '#' starts a comment.
Phantom read_phantom(std::istream& in);
Phantom load_phantom_file(const std::string& path);
void write_phantom(std::ostream& out, const Phantom& phantom);

double analytic_projection(const Phantom& phantom, const Ray& ray);

struct Sinogram;
Sinogram simulate_sinogram(const Phantom& phantom, const ScanGeometry& geom, int workers = 1);

/// Voxel value = mu at the voxel center, or the mean over k^d sub-samples.
VolumeGrid rasterize(const Phantom& phantom, const GridSpec& grid, int supersample = 1);

}  // namespace hashct
