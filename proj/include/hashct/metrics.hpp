#pragma once

#include "hashct/geometry.hpp"
#include "hashct/volume.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hashct {

/// Returned by psnr() when the two volumes are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(range^2 / MSE) over the voxels whose centers lie in `region`
/// (all voxels when null). `data_range` defaults to max - min of `gt` over the
/// same voxels.
double psnr(const VolumeGrid& recon, const VolumeGrid& gt, std::optional<double> data_range = std::nullopt,
            const Box* region = nullptr);

struct SsimParams {
  double sigma = 1.5;
  int window = 11;
  double k1 = 0.01;
  double k2 = 0.03;
  std::optional<double> data_range;
};

/// Mean local SSIM with a Gaussian window, evaluated only where the window
/// fits inside the image.
double ssim_2d(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimParams& params, double data_range);

/// Slice-wise (xy) SSIM averaged over z.
double ssim(const VolumeGrid& recon, const VolumeGrid& gt, const SsimParams& params = {});

/// One xy/xz/yz slice as a matrix; `axis` is the normal of the slice.
Eigen::MatrixXd extract_slice(const VolumeGrid& vol, int axis, int index);

struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
  double window = 0.0;               // difference mapped to white
};

/// Signed difference recon - gt mapped to 8 bits: -window -> 0, 0 -> 128, +window -> 255.
Image8 diff_image(const VolumeGrid& recon, const VolumeGrid& gt, int axis, int index, double window);
double decode_diff(std::uint8_t value, double window);

/// Linear grayscale mapping of a slice onto [lo, hi].
Image8 slice_image(const VolumeGrid& vol, int axis, int index, double lo, double hi);

/// 8-bit grayscale PNG with a tEXt chunk recording the window.
void write_png(const std::string& path, const Image8& image);

}  // namespace hashct
