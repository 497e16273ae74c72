#include "hashct/baseline.hpp"

#include "hashct/parallel.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace hashct {

std::vector<std::string> FilterSpec::violations() const {
  std::vector<std::string> out;
  if (padding_factor < 2 || (padding_factor & (padding_factor - 1)) != 0)
    out.push_back("fdk: padding_factor must be a power of two >= 2");
  return out;
}

void FilterSpec::validate() const {
  auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

namespace {

int padded_length(int n, int factor) {
  int p = 1;
  while (p < n * factor) p <<= 1;
  return p;
}

}  // namespace

Eigen::VectorXd ramp_response(int padded, double spacing, const FilterSpec& spec) {
  // Spatial Ram-Lak kernel: h(0) = 1/(4 tau^2), h(n odd) = -1/(n pi tau)^2, 0 otherwise.
  const double pi = std::numbers::pi;
  std::vector<double> h(static_cast<std::size_t>(padded), 0.0);
  h[0] = 1.0 / (4.0 * spacing * spacing);
  for (int n = 1; n < padded / 2; n += 2) {
    const double v = -1.0 / (n * n * pi * pi * spacing * spacing);
    h[static_cast<std::size_t>(n)] = v;
    h[static_cast<std::size_t>(padded - n)] = v;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> H;
  fft.fwd(H, h);
  Eigen::VectorXd resp(padded);
  for (int k = 0; k < padded; ++k) {
    double v = H[static_cast<std::size_t>(k)].real() * spacing;
    if (spec.cosine_window) {
      const int kk = std::min(k, padded - k);
      v *= std::cos(pi * kk / padded);
    }
    resp[k] = v;
  }
  // The infinite kernel sums to zero; truncation leaves a small residue at DC.
  resp[0] = 0.0;
  return resp;
}

Eigen::VectorXd filter_row(const Eigen::Ref<const Eigen::VectorXd>& row, double spacing, const FilterSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(row.size());
  const int padded = padded_length(n, spec.padding_factor);
  const Eigen::VectorXd resp = ramp_response(padded, spacing, spec);
  std::vector<double> buf(static_cast<std::size_t>(padded), 0.0);
  for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = row[i];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec_row;
  fft.fwd(spec_row, buf);
  for (int k = 0; k < padded; ++k) spec_row[static_cast<std::size_t>(k)] *= resp[k];
  std::vector<double> out;
  fft.inv(out, spec_row);
  Eigen::VectorXd res(n);
  for (int i = 0; i < n; ++i) res[i] = out[static_cast<std::size_t>(i)];
  return res;
}

Sinogram extrapolate_sinogram(const Sinogram& sino, double margin_fraction) {
  if (!(margin_fraction >= 0.0)) throw std::invalid_argument("extrapolate_sinogram: margin must be >= 0");
  const auto& g = sino.geometry;
  const int cols = g.detector_cols;
  const int margin = static_cast<int>(std::lround(margin_fraction * cols));
  ScanGeometry eg = g;
  eg.detector_cols = cols + 2 * margin;
  Sinogram out(eg);
  const double peak = sino.values.size() ? sino.values.cwiseAbs().maxCoeff() : 0.0;
  const double threshold = 1e-6 * peak;
  const double pi = std::numbers::pi;
  auto rolloff = [&](int j) { return 0.5 * (1.0 + std::cos(pi * (j - 1) / margin)); };  // j = 1..margin
  auto mirror = [&](int j) {
    // Symmetric about the edge: first added column repeats the edge value.
    int k = j - 1;
    k %= 2 * cols;
    return k < cols ? k : 2 * cols - 1 - k;
  };
  for (int v = 0; v < g.n_views; ++v)
    for (int r = 0; r < g.detector_rows; ++r) {
      for (int c = 0; c < cols; ++c) out(v, r, c + margin) = sino(v, r, c);
      const bool left = std::abs(sino(v, r, 0)) > threshold;
      const bool right = std::abs(sino(v, r, cols - 1)) > threshold;
      for (int j = 1; j <= margin; ++j) {
        const double w = rolloff(j);
        const int k = mirror(j);
        out(v, r, margin - j) = left ? w * sino(v, r, k) : 0.0;
        out(v, r, margin + cols - 1 + j) = right ? w * sino(v, r, cols - 1 - k) : 0.0;
      }
    }
  return out;
}

VolumeGrid fdk_reconstruct(const Sinogram& input, const GridSpec& grid, const FilterSpec& filter, bool extrapolate,
                           double margin_fraction, int workers) {
  filter.validate();
  if (grid.empty()) throw std::invalid_argument("fdk_reconstruct: empty grid");
  if (!input.geometry.full_scan()) throw ShortScanUnsupported("fdk_reconstruct: short-scan data is not supported");
  const Sinogram sino = extrapolate ? extrapolate_sinogram(input, margin_fraction) : input;
  const auto& g = sino.geometry;
  const bool planar = g.mode == ScanMode::fan2d;
  const double D = g.source_to_isocenter_mm;
  const double mag = g.source_to_detector_mm / D;
  const double tau_s = g.pitch_col_mm / mag;  // virtual detector at the isocenter
  const double tau_t = g.pitch_row_mm / mag;
  const int rows = g.detector_rows;
  const int cols = g.detector_cols;

  // Cosine weighting and ramp filtering (the 1/2 accounts for the double coverage of a full scan).
  Sinogram q(g);
  parallel_for(static_cast<std::size_t>(g.n_views) * rows, workers, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) {
      const int v = static_cast<int>(i / rows);
      const int r = static_cast<int>(i % rows);
      const double t = planar ? 0.0 : g.pixel_t(r) / mag;
      Eigen::VectorXd row(cols);
      for (int c = 0; c < cols; ++c) {
        const double s = g.pixel_s(c) / mag;
        row[c] = sino(v, r, c) * D / std::sqrt(D * D + s * s + t * t);
      }
      const Eigen::VectorXd f = filter_row(row, tau_s, filter);
      for (int c = 0; c < cols; ++c) q(v, r, c) = 0.5 * f[c];
    }
  });

  VolumeGrid vol(grid);
  const double dbeta = g.angle_step();
  std::vector<double> cos_b(g.n_views), sin_b(g.n_views);
  for (int v = 0; v < g.n_views; ++v) {
    cos_b[v] = std::cos(g.view_angle(v));
    sin_b[v] = std::sin(g.view_angle(v));
  }
  parallel_for(grid.size(), workers, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) {
      const Vec3 x = grid.voxel_center(i);
      double acc = 0.0;
      for (int v = 0; v < g.n_views; ++v) {
        const double U = D - (x.x() * cos_b[v] + x.y() * sin_b[v]);
        const double along = -x.x() * sin_b[v] + x.y() * cos_b[v];
        const double a = D * along / U;
        const double cf = a / tau_s + 0.5 * cols - 0.5;
        const int c0 = static_cast<int>(std::floor(cf));
        const double fc = cf - c0;
        auto sample_row = [&](int r) {
          double val = 0.0;
          if (c0 >= 0 && c0 < cols) val += (1.0 - fc) * q(v, r, c0);
          if (c0 + 1 >= 0 && c0 + 1 < cols) val += fc * q(v, r, c0 + 1);
          return val;
        };
        double val;
        if (planar) {
          val = sample_row(0);
        } else {
          const double bcoord = D * x.z() / U;
          const double rf = bcoord / tau_t + 0.5 * rows - 0.5;
          const int r0 = static_cast<int>(std::floor(rf));
          const double fr = rf - r0;
          val = 0.0;
          if (r0 >= 0 && r0 < rows) val += (1.0 - fr) * sample_row(r0);
          if (r0 + 1 >= 0 && r0 + 1 < rows) val += fr * sample_row(r0 + 1);
        }
        acc += D * D / (U * U) * val;
      }
      vol.values[static_cast<Eigen::Index>(i)] = acc * dbeta;
    }
  });
  return vol;
}

double rim_artifact_metric(const VolumeGrid& recon, const VolumeGrid* gt, double fov_radius) {
  double ann = 0.0, inner = 0.0, gt_inner = 0.0;
  std::size_t n_ann = 0, n_inner = 0;
  for (std::size_t i = 0; i < recon.spec.size(); ++i) {
    const Vec3 p = recon.spec.voxel_center(i);
    const double r = std::hypot(p.x(), p.y());
    const auto k = static_cast<Eigen::Index>(i);
    const double value = gt ? recon.values[k] - gt->values[k] : recon.values[k];
    if (r >= 0.9 * fov_radius && r < fov_radius) {
      ann += value;
      ++n_ann;
    } else if (r < 0.5 * fov_radius) {
      inner += value;
      gt_inner += gt ? gt->values[k] : recon.values[k];
      ++n_inner;
    }
  }
  if (n_ann == 0 || n_inner == 0) throw std::invalid_argument("rim_artifact_metric: grid does not cover the FOV");
  ann /= static_cast<double>(n_ann);
  inner /= static_cast<double>(n_inner);
  gt_inner /= static_cast<double>(n_inner);
  if (gt_inner == 0.0) throw std::invalid_argument("rim_artifact_metric: zero interior mean");
  return (ann - inner) / gt_inner;
}

}  // namespace hashct
