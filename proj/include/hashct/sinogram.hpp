#pragma once

#include "hashct/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>

namespace hashct {

/// Projections P(view, row, col), view-major with columns fastest.
struct Sinogram {
  ScanGeometry geometry;
  Eigen::VectorXd values;

  Sinogram() = default;
  explicit Sinogram(const ScanGeometry& g) : geometry(g), values(Eigen::VectorXd::Zero(g.n_rays())) {}

  std::size_t index(int view, int row, int col) const {
    return (static_cast<std::size_t>(view) * geometry.detector_rows + row) * geometry.detector_cols + col;
  }
  double& operator()(int view, int row, int col) { return values[index(view, row, col)]; }
  double operator()(int view, int row, int col) const { return values[index(view, row, col)]; }
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  DetectorIndex unravel(std::size_t linear) const {
    const auto cols = static_cast<std::size_t>(geometry.detector_cols);
    const auto rows = static_cast<std::size_t>(geometry.detector_rows);
    return {static_cast<int>(linear / (rows * cols)), static_cast<int>((linear / cols) % rows),
            static_cast<int>(linear % cols)};
  }
};

}  // namespace hashct
