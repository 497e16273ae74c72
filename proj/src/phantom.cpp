#include "hashct/phantom.hpp"

#include "hashct/parallel.hpp"
#include "hashct/sinogram.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hashct {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Box ellipsoid_bounds(const Ellipsoid& e, bool planar) {
  // Half extent along world axis i is the norm of row i of R * diag(a).
  const Eigen::Matrix3d m = e.rotation * e.semi_axes.asDiagonal();
  Vec3 half = m.rowwise().norm();
  if (planar) half.z() = std::numeric_limits<double>::infinity();
  return {e.center - half, e.center + half};
}

void check_ellipsoid(const Ellipsoid& e) {
  if (!(e.semi_axes.array() > 0.0).all()) throw std::invalid_argument("ellipsoid semi-axes must be positive");
  const double err = (e.rotation.transpose() * e.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw std::invalid_argument("ellipsoid rotation is not orthonormal");
  if (!std::isfinite(e.delta_mu)) throw std::invalid_argument("ellipsoid delta_mu must be finite");
}

Ellipsoid make(double cx, double cy, double cz, double a, double b, double c, double yaw, double dmu) {
  Ellipsoid e;
  e.center = {cx, cy, cz};
  e.semi_axes = {a, b, c};
  e.rotation = Ellipsoid::euler_zyx_deg(yaw, 0.0, 0.0);
  e.delta_mu = dmu;
  return e;
}

std::vector<Ellipsoid> forbild_like_head() {
  // Skull shell 5 mm thick; everything else nests inside the brain.
  return {
      make(0, 0, 0, 56, 60, 44, 0, 0.045),      // skull outer
      make(0, 0, 0, 51, 55, 40, 0, -0.025),     // brain (net 0.020)
      make(-11, 30, 8, 6, 9, 7, 15, -0.020),    // left sinus (air)
      make(11, 30, 8, 6, 9, 7, -15, -0.020),    // right sinus (air)
      make(-44, 0, 0, 3.5, 3.5, 3.5, 0, 0.030), // left ear insert
      make(44, 0, 0, 3.5, 3.5, 3.5, 0, 0.030),  // right ear insert
      make(0, -4, 0, 7, 13, 10, 20, -0.004),    // ventricle
      make(0, -22, -5, 15, 5, 6, 0, 0.022),     // dense bone block
      make(-16, -12, 4, 3, 3, 3, 0, 0.012),
      make(18, -8, -6, 2.5, 2.5, 4, 0, 0.018),
      make(10, 14, 0, 9, 4, 6, -30, 0.006),
      make(-14, 10, 0, 5, 5, 5, 0, 0.002),
  };
}

std::vector<Ellipsoid> shepp_logan_modified() {
  // Toft's modified Shepp-Logan intensities, scaled to 0.02/mm and a 60 mm radius.
  struct Row {
    double amp, a, b, c, x0, y0, z0, phi;
  };
  static const Row rows[] = {
      {1.0, .69, .92, .81, 0, 0, 0, 0},          {-.8, .6624, .874, .78, 0, -.0184, 0, 0},
      {-.2, .11, .31, .22, .22, 0, 0, -18},      {-.2, .16, .41, .28, -.22, 0, 0, 18},
      {.1, .21, .25, .41, 0, .35, -.15, 0},      {.1, .046, .046, .05, 0, .1, .25, 0},
      {.1, .046, .046, .05, 0, -.1, .25, 0},     {.1, .046, .023, .05, -.08, -.605, 0, 0},
      {.1, .023, .023, .02, 0, -.606, 0, 0},     {.1, .023, .046, .02, .06, -.605, 0, 0},
  };
  constexpr double radius = 60.0;
  constexpr double scale_mu = 0.02;
  std::vector<Ellipsoid> out;
  for (const auto& r : rows)
    out.push_back(make(r.x0 * radius, r.y0 * radius, r.z0 * radius, r.a * radius, r.b * radius, r.c * radius,
                       r.phi, r.amp * scale_mu));
  return out;
}

}  // namespace

Eigen::Matrix3d Ellipsoid::euler_zyx_deg(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw * kDeg, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch * kDeg, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll * kDeg, Vec3::UnitX()))
      .toRotationMatrix();
}

Phantom::Phantom(std::vector<Ellipsoid> ellipsoids, bool planar)
    : ellipsoids_(std::move(ellipsoids)), planar_(planar) {
  support_ = Box{Vec3::Zero(), Vec3::Zero()};
  bool first = true;
  for (const auto& e : ellipsoids_) {
    check_ellipsoid(e);
    const Box b = ellipsoid_bounds(e, planar_);
    if (first) {
      support_ = b;
      first = false;
    } else {
      support_.lo = support_.lo.cwiseMin(b.lo);
      support_.hi = support_.hi.cwiseMax(b.hi);
    }
  }
}

double Phantom::mu_at(const Vec3& x) const {
  double mu = 0.0;
  for (const auto& e : ellipsoids_) {
    const Vec3 local = e.rotation.transpose() * (x - e.center);
    double q = (local.x() / e.semi_axes.x()) * (local.x() / e.semi_axes.x()) +
               (local.y() / e.semi_axes.y()) * (local.y() / e.semi_axes.y());
    if (!planar_) q += (local.z() / e.semi_axes.z()) * (local.z() / e.semi_axes.z());
    if (q <= 1.0) mu += e.delta_mu;
  }
  return mu;
}

double Phantom::line_integral(const Ray& ray) const {
  double total = 0.0;
  const int dims = planar_ ? 2 : 3;
  for (const auto& e : ellipsoids_) {
    const Vec3 o = e.rotation.transpose() * (ray.origin - e.center);
    const Vec3 d = e.rotation.transpose() * ray.direction;
    double A = 0.0, B = 0.0, C = -1.0;
    for (int i = 0; i < dims; ++i) {
      const double inv2 = 1.0 / (e.semi_axes[i] * e.semi_axes[i]);
      A += d[i] * d[i] * inv2;
      B += 2.0 * o[i] * d[i] * inv2;
      C += o[i] * o[i] * inv2;
    }
    if (A <= 0.0) continue;
    const double disc = B * B - 4.0 * A * C;
    if (disc <= 0.0) continue;
    const double root = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double qv = -0.5 * (B + std::copysign(root, B));
    double t1 = qv / A;
    double t2 = qv != 0.0 ? C / qv : -t1;
    if (t1 > t2) std::swap(t1, t2);
    t1 = std::max(t1, 0.0);
    if (t2 > t1) total += e.delta_mu * (t2 - t1);
  }
  return total;
}

Phantom Phantom::scaled(double factor) const {
  auto copy = ellipsoids_;
  for (auto& e : copy) e.delta_mu *= factor;
  return Phantom(std::move(copy), planar_);
}

Phantom Phantom::rotated(const Eigen::Matrix3d& R) const {
  auto copy = ellipsoids_;
  for (auto& e : copy) {
    e.center = R * e.center;
    e.rotation = R * e.rotation;
  }
  return Phantom(std::move(copy), planar_);
}

std::vector<std::string> builtin_phantom_names() { return {"empty", "forbild_head", "shepp_logan", "water_disk"}; }

Phantom builtin_phantom(const std::string& name, bool planar) {
  if (name == "empty") return Phantom({}, planar);
  if (name == "forbild_head") return Phantom(forbild_like_head(), planar);
  if (name == "shepp_logan") return Phantom(shepp_logan_modified(), planar);
  if (name == "water_disk") return Phantom({make(0, 0, 0, 40, 40, 40, 0, 0.02)}, planar);
  throw std::invalid_argument("unknown built-in phantom '" + name + "'");
}

Phantom read_phantom(std::istream& in) {
  std::vector<Ellipsoid> list;
  bool planar = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "planar") {
      int flag = 0;
      if (!(ss >> flag)) throw std::runtime_error("phantom line " + std::to_string(lineno) + ": expected 0 or 1");
      planar = flag != 0;
    } else if (key == "ellipsoid") {
      double v[10];
      for (double& x : v)
        if (!(ss >> x))
          throw std::runtime_error("phantom line " + std::to_string(lineno) + ": expected 10 numbers");
      Ellipsoid e;
      e.center = {v[0], v[1], v[2]};
      e.semi_axes = {v[3], v[4], v[5]};
      e.rotation = Ellipsoid::euler_zyx_deg(v[6], v[7], v[8]);
      e.delta_mu = v[9];
      list.push_back(e);
    } else {
      throw std::runtime_error("phantom line " + std::to_string(lineno) + ": unknown record '" + key + "'");
    }
  }
  return Phantom(std::move(list), planar);
}

Phantom load_phantom_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open phantom file " + path);
  return read_phantom(in);
}

void write_phantom(std::ostream& out, const Phantom& phantom) {
  out << "# ellipsoid cx cy cz a b c yaw pitch roll delta_mu\n";
  out << "planar " << (phantom.planar() ? 1 : 0) << '\n';
  out << std::setprecision(17);
  for (const auto& e : phantom.ellipsoids()) {
    const Vec3 ang = e.rotation.eulerAngles(2, 1, 0) / kDeg;
    out << "ellipsoid " << e.center.x() << ' ' << e.center.y() << ' ' << e.center.z() << ' ' << e.semi_axes.x()
        << ' ' << e.semi_axes.y() << ' ' << e.semi_axes.z() << ' ' << ang[0] << ' ' << ang[1] << ' ' << ang[2]
        << ' ' << e.delta_mu << '\n';
  }
}

double analytic_projection(const Phantom& phantom, const Ray& ray) { return phantom.line_integral(ray); }

Sinogram simulate_sinogram(const Phantom& phantom, const ScanGeometry& geom, int workers) {
  geom.validate();
  Sinogram sino(geom);
  parallel_for(sino.size(), workers, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      const DetectorIndex d = sino.unravel(i);
      sino.values[static_cast<Eigen::Index>(i)] = phantom.line_integral(make_ray(geom, d.view, d.row, d.col));
    }
  });
  return sino;
}

VolumeGrid rasterize(const Phantom& phantom, const GridSpec& grid, int supersample) {
  if (grid.empty()) throw std::invalid_argument("rasterize: empty grid");
  if (!(grid.pitch.array() > 0.0).all()) throw std::invalid_argument("rasterize: voxel pitch must be positive");
  if (supersample < 1) throw std::invalid_argument("rasterize: supersample must be >= 1");
  VolumeGrid vol(grid);
  const int kz = (phantom.planar() || grid.dims.z() == 1) ? 1 : supersample;
  const int k = supersample;
  const double inv = 1.0 / (static_cast<double>(k) * k * kz);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 c = grid.voxel_center(i);
    if (k == 1) {
      vol.values[static_cast<Eigen::Index>(i)] = phantom.mu_at(c);
      continue;
    }
    double acc = 0.0;
    for (int sz = 0; sz < kz; ++sz)
      for (int sy = 0; sy < k; ++sy)
        for (int sx = 0; sx < k; ++sx) {
          const Vec3 off((sx + 0.5) / k - 0.5, (sy + 0.5) / k - 0.5, kz == 1 ? 0.0 : (sz + 0.5) / kz - 0.5);
          acc += phantom.mu_at(c + off.cwiseProduct(grid.pitch));
        }
    vol.values[static_cast<Eigen::Index>(i)] = acc * inv;
  }
  return vol;
}

}  // namespace hashct
