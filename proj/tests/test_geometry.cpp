#include "hashct/geometry.hpp"
#include "testkit.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <numbers>
#include <random>

using namespace hashct;

namespace {

ScanGeometry paper_geometry() { return ScanGeometry{}; }

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("validation catches bad distances and fan2d rows") {
    ScanGeometry g;
    CHECK(g.violations().empty());
    g.source_to_isocenter_mm = 700.0;
    CHECK_FALSE(g.violations().empty());
    g = ScanGeometry{};
    g.mode = ScanMode::fan2d;
    g.detector_rows = 2;
    CHECK_FALSE(g.violations().empty());
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  }

  TEST_CASE("central ray points from the source to the isocenter") {
    const ScanGeometry g = paper_geometry();
    const Ray r = make_ray(g, 0, 319, 319);
    // Pixel 319 of 640 is half a pitch off center in both axes; the true central
    // ray uses the principal point, so check the pixel-pair average instead.
    const Ray r2 = make_ray(g, 0, 320, 320);
    const Vec3 mid = (r.direction + r2.direction).normalized();
    CHECK((mid - Vec3(-1, 0, 0)).norm() < 1e-12);
    CHECK(r.origin.isApprox(Vec3(400, 0, 0)));
  }

  TEST_CASE("odd detector has an exact central pixel") {
    ScanGeometry g;
    g.detector_rows = 5;
    g.detector_cols = 5;
    const Ray r = make_ray(g, 0, 2, 2);
    CHECK((r.direction - Vec3(-1, 0, 0)).norm() < 1e-15);
  }

  TEST_CASE("source at quarter turn") {
    ScanGeometry g;
    g.n_views = 4;
    const Vec3 s = g.source_position(1);
    CHECK(std::abs(s.x()) < 1e-12);
    CHECK(s.y() == doctest::Approx(400.0).epsilon(1e-15));
    CHECK(s.z() == 0.0);
  }

  TEST_CASE("fan2d rays stay in the plane") {
    ScanGeometry g;
    g.mode = ScanMode::fan2d;
    g.detector_rows = 1;
    g.detector_cols = 33;
    g.n_views = 9;
    for (int v = 0; v < g.n_views; ++v)
      for (int c = 0; c < g.detector_cols; ++c) {
        const Ray r = make_ray(g, v, 0, c);
        CHECK(r.origin.z() == 0.0);
        CHECK(r.direction.z() == 0.0);
      }
  }

  TEST_CASE("rays are unit length and hit their pixel center") {
    ScanGeometry g;
    g.detector_rows = 7;
    g.detector_cols = 11;
    g.n_views = 13;
    for (int v = 0; v < g.n_views; ++v)
      for (int row = 0; row < g.detector_rows; ++row)
        for (int c = 0; c < g.detector_cols; ++c) {
          const Ray r = make_ray(g, v, row, c);
          CHECK(std::abs(r.direction.norm() - 1.0) < 1e-12);
          CHECK(std::abs(r.origin.head<2>().norm() - g.source_to_isocenter_mm) < 1e-9);
          const Vec3 axis = -r.origin.normalized();
          const double t = g.source_to_detector_mm / r.direction.dot(axis);
          CHECK((r.at(t) - g.pixel_center(v, row, c)).norm() < 1e-9);
        }
  }

  TEST_CASE("out-of-range indices throw") {
    ScanGeometry g;
    CHECK_THROWS_AS(make_ray(g, g.n_views, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(make_ray(g, 0, -1, 0), std::out_of_range);
    CHECK_THROWS_AS(make_ray(g, 0, 0, g.detector_cols), std::out_of_range);
  }

  TEST_CASE("view angles are uniform and half-open") {
    ScanGeometry g;
    g.n_views = 4;
    const auto a = view_angles(g);
    REQUIRE(a.size() == 4);
    const double pi = std::numbers::pi;
    CHECK(a[0] == 0.0);
    CHECK(a[1] == doctest::Approx(pi / 2));
    CHECK(a[2] == doctest::Approx(pi));
    CHECK(a[3] == doctest::Approx(3 * pi / 2));
    g.n_views = 300;
    CHECK(view_angles(g)[1] == doctest::Approx(2 * pi / 300).epsilon(1e-15));
    g.n_views = 1;
    CHECK(view_angles(g) == std::vector<double>{0.0});
  }

  TEST_CASE("rotating by one view spacing permutes rays") {
    ScanGeometry g;
    g.detector_rows = 3;
    g.detector_cols = 5;
    g.n_views = 12;
    const Eigen::Matrix3d R = Eigen::AngleAxisd(g.angle_step(), Vec3::UnitZ()).toRotationMatrix();
    for (int v = 0; v + 1 < g.n_views; ++v)
      for (int c = 0; c < g.detector_cols; ++c) {
        const Ray a = make_ray(g, v, 1, c);
        const Ray b = make_ray(g, v + 1, 1, c);
        CHECK((R * a.origin - b.origin).norm() < 1e-10);
        CHECK((R * a.direction - b.direction).norm() < 1e-10);
      }
  }

  TEST_CASE("clip: axis-aligned chord") {
    Ray r;
    r.origin = Vec3(400, 0, 0);
    r.direction = Vec3(-1, 0, 0);
    const Box box = Box::centered(Vec3(160, 160, 120));
    const auto iv = clip_to_box(r, box);
    REQUIRE(iv);
    CHECK(iv->t_far - iv->t_near == doctest::Approx(160.0));
    CHECK(iv->t_near == doctest::Approx(320.0));
  }

  TEST_CASE("clip: parallel ray outside a face misses") {
    Ray r;
    r.origin = Vec3(400, 100, 0);
    r.direction = Vec3(-1, 0, 0);
    CHECK_FALSE(clip_to_box(r, Box::centered(Vec3(160, 160, 120))));
  }

  TEST_CASE("clip: box behind the origin misses") {
    Ray r;
    r.origin = Vec3(400, 0, 0);
    r.direction = Vec3(1, 0, 0);
    CHECK_FALSE(clip_to_box(r, Box::centered(Vec3(160, 160, 120))));
  }

  TEST_CASE("clip: oblique rays agree with a dense march") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    const Box box{Vec3(-80, -60, -70), Vec3(90, 75, 72)};
    int hits = 0;
    for (int k = 0; k < 40; ++k) {
      Ray r;
      r.origin = Vec3(400 * u(rng), 400 * u(rng), 100 * u(rng));
      if (box.contains(r.origin)) continue;
      const Vec3 target(60 * u(rng), 60 * u(rng), 60 * u(rng));
      r.direction = (target - r.origin).normalized();
      const auto iv = clip_to_box(r, box);
      const auto ref = testkit::march_clip(r, box, 1200.0, 1e-3);
      REQUIRE(iv.has_value() == ref.has_value());
      if (!iv) continue;
      ++hits;
      CHECK(std::abs(iv->t_near - ref->first) < 2e-3);
      CHECK(std::abs(iv->t_far - ref->second) < 2e-3);
    }
    CHECK(hits > 20);
  }

  TEST_CASE("FOV chord nests inside the extended chord") {
    ScanGeometry g;
    g.detector_rows = 9;
    g.detector_cols = 9;
    g.pitch_col_mm = g.pitch_row_mm = 16.0;
    g.n_views = 10;
    const Domain d{Box::centered(Vec3(160, 160, 120)), Box::centered(Vec3(300, 300, 145))};
    for (int v = 0; v < g.n_views; ++v)
      for (int row = 0; row < g.detector_rows; ++row)
        for (int c = 0; c < g.detector_cols; ++c) {
          const Ray r = make_ray(g, v, row, c);
          const auto in = clip_to_box(r, d.fov);
          const auto ext = clip_to_box(r, d.extended);
          if (!in) continue;
          REQUIRE(ext);
          CHECK(in->t_near >= ext->t_near - 1e-12);
          CHECK(in->t_far <= ext->t_far + 1e-12);
        }
  }

  TEST_CASE("domain requires containment") {
    Domain d{Box::centered(Vec3(160, 160, 120)), Box::centered(Vec3(300, 300, 100))};
    CHECK_FALSE(d.violations().empty());
    d.extended = Box::centered(Vec3(300, 300, 145));
    CHECK(d.violations().empty());
    CHECK(d.in_fov(Vec3(0, 0, 0)));
    CHECK(d.in_outer(Vec3(100, 0, 0)));
    CHECK_FALSE(d.in_outer(Vec3(200, 0, 0)));
  }

  TEST_CASE("transaxial FOV radius is the covered disc") {
    ScanGeometry g;
    g.mode = ScanMode::fan2d;
    g.detector_rows = 1;
    g.detector_cols = 256;
    g.pitch_col_mm = 0.55;
    const double R = g.transaxial_fov_radius();
    // The outermost ray's distance to the isocenter.
    Ray edge;
    edge.origin = Vec3(400, 0, 0);
    edge.direction = Vec3(-600, 0.5 * 256 * 0.55, 0).normalized();
    const double dist = (edge.origin - edge.origin.dot(edge.direction) * edge.direction).norm();
    CHECK(R == doctest::Approx(dist).epsilon(1e-12));
  }
}
