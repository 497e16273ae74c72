#include "hashct/baseline.hpp"
#include "hashct/phantom.hpp"

#include <doctest.h>

#include <numbers>

using namespace hashct;

namespace {

ScanGeometry desk_fan() {
  ScanGeometry g;
  g.mode = ScanMode::fan2d;
  g.detector_rows = 1;
  g.detector_cols = 256;
  g.pitch_col_mm = 0.55;
  g.n_views = 180;
  return g;
}

Phantom disk(double radius, double mu = 0.02) {
  Ellipsoid e;
  e.semi_axes = Vec3::Constant(radius);
  e.delta_mu = mu;
  return Phantom({e}, true);
}

GridSpec slice(double half, double pitch) {
  return GridSpec::covering(Box{Vec3(-half, -half, -0.5), Vec3(half, half, 0.5)}, pitch, true);
}

}  // namespace

TEST_SUITE("baseline") {
  TEST_CASE("filter settings are validated") {
    FilterSpec f;
    CHECK(f.violations().empty());
    f.padding_factor = 3;
    CHECK_FALSE(f.violations().empty());
    f.padding_factor = 1;
    CHECK_THROWS_AS(filter_row(Eigen::VectorXd::Ones(8), 1.0, f), std::invalid_argument);
  }

  TEST_CASE("ramp response approximates |f| with zero DC") {
    const int P = 1024;
    const double tau = 0.37;
    const Eigen::VectorXd r = ramp_response(P, tau, FilterSpec{});
    CHECK(r[0] == 0.0);
    for (int k : {P / 16, P / 8, P / 4, 3 * P / 8}) {
      const double ideal = k / (P * tau);
      CHECK(std::abs(r[k] - ideal) < 0.01 * ideal);
      CHECK(r[P - k] == doctest::Approx(r[k]).epsilon(1e-12));
    }
    const Eigen::VectorXd w = ramp_response(P, tau, FilterSpec{true, 2});
    for (int k : {1, P / 8, P / 2 - 1}) CHECK(w[k] == doctest::Approx(r[k] * std::cos(std::numbers::pi * k / P)).epsilon(1e-12));
  }

  TEST_CASE("filtering is linear") {
    const Eigen::VectorXd a = Eigen::VectorXd::Random(100), b = Eigen::VectorXd::Random(100);
    const FilterSpec f;
    const Eigen::VectorXd lhs = filter_row(2.0 * a - 3.0 * b, 0.5, f);
    const Eigen::VectorXd rhs = 2.0 * filter_row(a, 0.5, f) - 3.0 * filter_row(b, 0.5, f);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(filter_row(Eigen::VectorXd::Zero(100), 0.5, f).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("zero sinogram reconstructs to zero") {
    const Sinogram sino(desk_fan());
    const VolumeGrid v = fdk_reconstruct(sino, slice(30, 2.0), FilterSpec{});
    CHECK(v.values.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("an untruncated disk reconstructs to its attenuation") {
    const Sinogram sino = simulate_sinogram(disk(20.0), desk_fan());
    const VolumeGrid v = fdk_reconstruct(sino, slice(10, 1.0), FilterSpec{});
    const double mean = v.values.mean();
    CHECK(std::abs(mean - 0.02) < 0.05 * 0.02);
    CHECK(std::abs(v.values.maxCoeff() - 0.02) < 0.05 * 0.02);
    CHECK(std::abs(v.values.minCoeff() - 0.02) < 0.05 * 0.02);
  }

  TEST_CASE("a cone-beam sphere reconstructs on its midplane") {
    ScanGeometry g;
    g.detector_rows = 48;
    g.detector_cols = 96;
    g.pitch_col_mm = g.pitch_row_mm = 1.5;
    g.n_views = 120;
    Ellipsoid e;
    e.semi_axes = Vec3::Constant(20.0);
    e.delta_mu = 0.02;
    const Sinogram sino = simulate_sinogram(Phantom({e}), g);
    const VolumeGrid v = fdk_reconstruct(sino, slice(8, 2.0), FilterSpec{});
    CHECK(std::abs(v.values.mean() - 0.02) < 0.05 * 0.02);
  }

  TEST_CASE("a disk wider than the FOV produces a bright rim") {
    const ScanGeometry g = desk_fan();
    const double R = g.transaxial_fov_radius();
    const Sinogram sino = simulate_sinogram(disk(1.4 * R), g);
    const VolumeGrid v = fdk_reconstruct(sino, slice(R, 0.5), FilterSpec{});
    const double rim = rim_artifact_metric(v, nullptr, R);
    CHECK(rim > 0.10);
    const VolumeGrid e = fdk_reconstruct(sino, slice(R, 0.5), FilterSpec{}, true);
    const double rim_e = rim_artifact_metric(e, nullptr, R);
    CHECK(std::abs(rim_e) < 0.5 * rim);
  }

  TEST_CASE("rim metric: exact reconstruction against its reference is zero") {
    const GridSpec grid = slice(40, 1.0);
    const VolumeGrid gt = rasterize(disk(30.0), grid);
    CHECK(rim_artifact_metric(gt, &gt, 40.0) == 0.0);
    VolumeGrid shifted = gt;
    shifted.values.array() += 0.002;
    CHECK(std::abs(rim_artifact_metric(shifted, &gt, 40.0)) < 1e-12);  // uniform offsets cancel
    CHECK_THROWS_AS(rim_artifact_metric(gt, &gt, 500.0), std::invalid_argument);
  }

  TEST_CASE("extrapolation pads truncated rows with a decaying mirror") {
    ScanGeometry g = desk_fan();
    g.detector_cols = 40;
    g.n_views = 2;
    Sinogram s(g);
    for (int c = 0; c < 40; ++c) {
      s(0, 0, c) = 1.0 + 0.1 * c;  // truncated on both sides
      s(1, 0, c) = (c > 5 && c < 30) ? 1.0 : 0.0;  // fully inside
    }
    const Sinogram e = extrapolate_sinogram(s);
    const int M = 10;
    REQUIRE(e.geometry.detector_cols == 60);
    for (int c = 0; c < 40; ++c) CHECK(e(0, 0, c + M) == s(0, 0, c));
    CHECK(e(0, 0, M - 1) == s(0, 0, 0));          // first added column repeats the edge
    CHECK(e(0, 0, M + 40) == s(0, 0, 39));
    CHECK(e(0, 0, M - 2) == doctest::Approx(0.5 * (1 + std::cos(std::numbers::pi / M)) * s(0, 0, 1)));
    CHECK(e(0, 0, 0) == doctest::Approx(0.5 * (1 - std::cos(std::numbers::pi / M)) * s(0, 0, M - 1)));  // nearly rolled off
    for (int j = 0; j < M; ++j) {
      CHECK(e(1, 0, j) == 0.0);
      CHECK(e(1, 0, M + 40 + j) == 0.0);
    }
    CHECK(extrapolate_sinogram(s, 0.0).values == s.values);
  }

  TEST_CASE("short scans are refused") {
    ScanGeometry g = desk_fan();
    g.angle_range = std::numbers::pi;
    const Sinogram sino(g);
    CHECK_THROWS_AS(fdk_reconstruct(sino, slice(10, 1.0), FilterSpec{}), ShortScanUnsupported);
  }

  TEST_CASE("multi-threaded reconstruction matches single-threaded") {
    const Sinogram sino = simulate_sinogram(builtin_phantom("forbild_head", true), desk_fan());
    const VolumeGrid a = fdk_reconstruct(sino, slice(30, 1.0), FilterSpec{}, true, 0.25, 1);
    const VolumeGrid b = fdk_reconstruct(sino, slice(30, 1.0), FilterSpec{}, true, 0.25, 4);
    CHECK(a.values == b.values);
  }
}
