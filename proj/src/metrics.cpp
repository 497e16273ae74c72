#include "hashct/metrics.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace hashct {

namespace {

void require_same(const VolumeGrid& a, const VolumeGrid& b) {
  if (!a.spec.same_lattice(b.spec) || a.values.size() != b.values.size())
    throw std::invalid_argument("metrics: volumes have different dims/pitch/origin");
}

// Valid-mode separable filtering of every row, then every column.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& img, const Eigen::VectorXd& k) {
  const Eigen::Index w = k.size();
  const Eigen::Index rows = img.rows() - w + 1;
  const Eigen::Index cols = img.cols() - w + 1;
  Eigen::MatrixXd tmp(rows, img.cols());
  for (Eigen::Index j = 0; j < img.cols(); ++j)
    for (Eigen::Index i = 0; i < rows; ++i) tmp(i, j) = k.dot(img.col(j).segment(i, w));
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = k.dot(tmp.row(i).segment(j, w).transpose());
  return out;
}

}  // namespace

double psnr(const VolumeGrid& recon, const VolumeGrid& gt, std::optional<double> data_range, const Box* region) {
  require_same(recon, gt);
  double sse = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.spec.size(); ++i) {
    if (region && !region->contains(gt.spec.voxel_center(i))) continue;
    const auto k = static_cast<Eigen::Index>(i);
    const double diff = recon.values[k] - gt.values[k];
    sse += diff * diff;
    lo = std::min(lo, gt.values[k]);
    hi = std::max(hi, gt.values[k]);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("psnr: no voxels in the evaluation region");
  const double range = data_range.value_or(hi - lo);
  if (!(range > 0.0)) throw std::invalid_argument("psnr: data range must be positive");
  const double mse = sse / static_cast<double>(n);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(range * range / mse);
}

double ssim_2d(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimParams& params, double data_range) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("ssim: image size mismatch");
  const int w = params.window;
  if (a.rows() < w || a.cols() < w) throw std::invalid_argument("ssim: image smaller than the window");
  Eigen::VectorXd k(w);
  for (int i = 0; i < w; ++i) {
    const double x = i - (w - 1) / 2.0;
    k[i] = std::exp(-x * x / (2.0 * params.sigma * params.sigma));
  }
  k /= k.sum();
  const double c1 = (params.k1 * data_range) * (params.k1 * data_range);
  const double c2 = (params.k2 * data_range) * (params.k2 * data_range);
  const Eigen::MatrixXd mu_a = filter_valid(a, k);
  const Eigen::MatrixXd mu_b = filter_valid(b, k);
  const Eigen::MatrixXd aa = filter_valid(a.cwiseProduct(a), k);
  const Eigen::MatrixXd bb = filter_valid(b.cwiseProduct(b), k);
  const Eigen::MatrixXd ab = filter_valid(a.cwiseProduct(b), k);
  const auto ma = mu_a.array();
  const auto mb = mu_b.array();
  const Eigen::ArrayXXd var_a = aa.array() - ma * ma;
  const Eigen::ArrayXXd var_b = bb.array() - mb * mb;
  const Eigen::ArrayXXd cov = ab.array() - ma * mb;
  const Eigen::ArrayXXd num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
  const Eigen::ArrayXXd den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
  return (num / den).mean();
}

Eigen::MatrixXd extract_slice(const VolumeGrid& vol, int axis, int index) {
  const auto& d = vol.spec.dims;
  if (axis < 0 || axis > 2) throw std::out_of_range("slice axis must be 0, 1 or 2");
  if (index < 0 || index >= d[axis]) throw std::out_of_range("slice index out of range");
  // Rows follow the slower in-plane axis so images read naturally (y down for xy).
  const int u = axis == 0 ? 1 : 0;
  const int v = axis == 2 ? 1 : 2;
  Eigen::MatrixXd img(d[v], d[u]);
  for (int j = 0; j < d[v]; ++j)
    for (int i = 0; i < d[u]; ++i) {
      int idx[3];
      idx[axis] = index;
      idx[u] = i;
      idx[v] = j;
      img(j, i) = vol(idx[0], idx[1], idx[2]);
    }
  return img;
}

double ssim(const VolumeGrid& recon, const VolumeGrid& gt, const SsimParams& params) {
  require_same(recon, gt);
  const double range = params.data_range.value_or(gt.values.maxCoeff() - gt.values.minCoeff());
  if (!(range > 0.0)) throw std::invalid_argument("ssim: data range must be positive");
  double acc = 0.0;
  const int nz = gt.spec.dims.z();
  for (int z = 0; z < nz; ++z) acc += ssim_2d(extract_slice(recon, 2, z), extract_slice(gt, 2, z), params, range);
  return acc / nz;
}

Image8 diff_image(const VolumeGrid& recon, const VolumeGrid& gt, int axis, int index, double window) {
  require_same(recon, gt);
  if (!(window > 0.0)) throw std::invalid_argument("diff_image: window must be positive");
  const Eigen::MatrixXd d = extract_slice(recon, axis, index) - extract_slice(gt, axis, index);
  Image8 img;
  img.width = static_cast<int>(d.cols());
  img.height = static_cast<int>(d.rows());
  img.window = window;
  img.pixels.resize(static_cast<std::size_t>(d.size()));
  for (Eigen::Index r = 0; r < d.rows(); ++r)
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      const double q = std::round((d(r, c) / window + 1.0) * 127.5);
      img.pixels[static_cast<std::size_t>(r * d.cols() + c)] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
    }
  return img;
}

double decode_diff(std::uint8_t value, double window) { return (value / 127.5 - 1.0) * window; }

Image8 slice_image(const VolumeGrid& vol, int axis, int index, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("slice_image: empty display window");
  const Eigen::MatrixXd s = extract_slice(vol, axis, index);
  Image8 img;
  img.width = static_cast<int>(s.cols());
  img.height = static_cast<int>(s.rows());
  img.window = hi - lo;
  img.pixels.resize(static_cast<std::size_t>(s.size()));
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      const double q = std::round((s(r, c) - lo) / (hi - lo) * 255.0);
      img.pixels[static_cast<std::size_t>(r * s.cols() + c)] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
    }
  return img;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

void put_chunk(std::ofstream& f, const char* type, const std::string& data) {
  std::string buf;
  put_u32(buf, static_cast<std::uint32_t>(data.size()));
  buf.append(type, 4);
  buf += data;
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data() + 4), static_cast<uInt>(buf.size() - 4));
  put_u32(buf, static_cast<std::uint32_t>(crc));
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

void write_png(const std::string& path, const Image8& image) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  f.write(reinterpret_cast<const char*>(sig), 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr += std::string{char(8), char(0), char(0), char(0), char(0)};  // 8-bit gray, no interlace
  put_chunk(f, "IHDR", ihdr);
  put_chunk(f, "tEXt", std::string("window") + '\0' + std::to_string(image.window));
  std::string raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width + 1));
  for (int r = 0; r < image.height; ++r) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(image.pixels.data()) + static_cast<std::size_t>(r) * image.width,
               static_cast<std::size_t>(image.width));
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  packed.resize(len);
  put_chunk(f, "IDAT", packed);
  put_chunk(f, "IEND", "");
}

}  // namespace hashct
