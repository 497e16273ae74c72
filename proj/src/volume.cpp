#include "hashct/volume.hpp"

#include <cmath>
#include <stdexcept>

namespace hashct {

GridSpec GridSpec::covering(const Box& box, double pitch, bool flat_z) {
  if (!(pitch > 0.0)) throw std::invalid_argument("GridSpec::covering: pitch must be positive");
  GridSpec g;
  const Vec3 ext = box.extent();
  for (int a = 0; a < 3; ++a) {
    if (a == 2 && flat_z) {
      g.dims[a] = 1;
      g.pitch[a] = pitch;
      g.origin[a] = box.center()[a];
      continue;
    }
    g.dims[a] = std::max(1, static_cast<int>(std::lround(ext[a] / pitch)));
    g.pitch[a] = pitch;
    g.origin[a] = box.center()[a] - 0.5 * (g.dims[a] - 1) * pitch;
  }
  return g;
}

Vec3 GridSpec::voxel_center(std::size_t linear) const {
  const auto nx = static_cast<std::size_t>(dims.x());
  const auto ny = static_cast<std::size_t>(dims.y());
  const int ix = static_cast<int>(linear % nx);
  const int iy = static_cast<int>((linear / nx) % ny);
  const int iz = static_cast<int>(linear / (nx * ny));
  return voxel_center(ix, iy, iz);
}

Box GridSpec::bounds() const {
  Box b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = origin[a] - 0.5 * pitch[a];
    b.hi[a] = origin[a] + (dims[a] - 0.5) * pitch[a];
  }
  return b;
}

bool GridSpec::same_lattice(const GridSpec& other, double tol) const {
  return (dims == other.dims).all() && (pitch - other.pitch).cwiseAbs().maxCoeff() <= tol &&
         (origin - other.origin).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace hashct
