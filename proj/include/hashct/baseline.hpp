#pragma once

#include "hashct/sinogram.hpp"
#include "hashct/volume.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace hashct {

/// Ram-Lak ramp filter applied in the frequency domain on zero-padded rows.
struct FilterSpec {
  bool cosine_window = false;
  int padding_factor = 2;  // power of two, >= 2

  std::vector<std::string> violations() const;
  void validate() const;
};

/// Frequency response (length `padded`, FFT bin order) of the band-limited
/// ramp for detector spacing `spacing`. Real, even, exactly zero at DC.
Eigen::VectorXd ramp_response(int padded, double spacing, const FilterSpec& spec);

/// Ramp-filters one detector row; output has the input length.
Eigen::VectorXd filter_row(const Eigen::Ref<const Eigen::VectorXd>& row, double spacing, const FilterSpec& spec);

/// Extends every detector row by `margin` columns on both sides. An edge whose
/// value is non-zero (truncated) is continued by the mirrored row times a
/// cosine roll-off that equals 1 at the first added column and reaches 0 past
/// the margin; an edge at zero is padded with zeros. Default margin is 25% of
/// the detector width.
Sinogram extrapolate_sinogram(const Sinogram& sino, double margin_fraction = 0.25);

struct ShortScanUnsupported : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Feldkamp-Davis-Kress reconstruction (cosine pre-weighting, row-wise ramp
/// filtering, distance-weighted voxel-driven backprojection with bilinear
/// detector interpolation). In fan2d mode this is fan-beam FBP.
VolumeGrid fdk_reconstruct(const Sinogram& sino, const GridSpec& grid, const FilterSpec& filter,
                           bool extrapolate = false, double margin_fraction = 0.25, int workers = 1);

/// Relative brightening of the annulus 0.9 R <= r < R against the disc r < 0.5 R
/// around the rotation axis: (mean_annulus - mean_interior) / mean_interior.
/// With a ground truth the error recon - gt is compared instead, normalised by
/// the ground-truth interior mean, so object structure does not count.
double rim_artifact_metric(const VolumeGrid& recon, const VolumeGrid* gt, double fov_radius);

}  // namespace hashct
