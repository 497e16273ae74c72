#pragma once

#include "hashct/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>

namespace hashct {

/// Regular voxel lattice. `origin` is the center of voxel (0, 0, 0); x varies
/// fastest and z slowest in the linear index.
struct GridSpec {
  Eigen::Array3i dims = Eigen::Array3i::Ones();
  Vec3 pitch = Vec3::Ones();
  Vec3 origin = Vec3::Zero();

  /// Lattice of voxels of size `pitch` tiling `box`. Axes with `flat` set get a
  /// single voxel at the box center (used for 2D slices).
  static GridSpec covering(const Box& box, double pitch, bool flat_z = false);

  std::size_t size() const { return static_cast<std::size_t>(dims.prod()); }
  bool empty() const { return (dims <= 0).any(); }
  Vec3 voxel_center(int ix, int iy, int iz) const {
    return origin + Vec3(ix * pitch.x(), iy * pitch.y(), iz * pitch.z());
  }
  Vec3 voxel_center(std::size_t linear) const;
  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * dims.y() + iy) * dims.x() + ix;
  }
  /// Physical box spanned by the voxels (outer faces).
  Box bounds() const;
  bool same_lattice(const GridSpec& other, double tol = 1e-9) const;
};

struct VolumeGrid {
  GridSpec spec;
  Eigen::VectorXd values;  // attenuation, 1/mm

  VolumeGrid() = default;
  explicit VolumeGrid(const GridSpec& s) : spec(s), values(Eigen::VectorXd::Zero(s.size())) {}

  double& operator()(int ix, int iy, int iz) { return values[spec.index(ix, iy, iz)]; }
  double operator()(int ix, int iy, int iz) const { return values[spec.index(ix, iy, iz)]; }
  bool all_finite() const { return values.allFinite(); }
};

}  // namespace hashct
