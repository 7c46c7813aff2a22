#include <doctest.h>

#include <cmath>
#include <random>

#include "geopipe/camera.hpp"
#include "geopipe/errors.hpp"
#include "support.hpp"

using namespace geopipe;

TEST_CASE("intrinsics_from_fov") {
  SUBCASE("90 degrees, 512px: fx = 256") {
    const Intrinsics k = intrinsics_from_fov(M_PI / 2, 512, 512);
    CHECK(k.fx == doctest::Approx(256.0).epsilon(1e-14));
    CHECK(k.fy == k.fx);
  }
  SUBCASE("60 degrees, 640px") {
    const Intrinsics k = intrinsics_from_fov(deg2rad(60.0), 640, 640);
    CHECK(k.fx == doctest::Approx(554.2562584220408).epsilon(1e-13));
  }
  SUBCASE("principal point at center") {
    const Intrinsics k = intrinsics_from_fov(deg2rad(60.0), 512, 512);
    CHECK(k.cx == 256.0);
    CHECK(k.cy == 256.0);
  }
  SUBCASE("fov round trip") {
    for (const double deg : {10.0, 60.0, 90.0, 119.0}) {
      const Intrinsics k = intrinsics_from_fov(deg2rad(deg), 640, 480);
      CHECK(k.hfov() == doctest::Approx(deg2rad(deg)).epsilon(1e-12));
    }
  }
  SUBCASE("rejects degenerate fov") {
    CHECK_THROWS_AS(intrinsics_from_fov(0.0, 64, 64), SchemaError);
    CHECK_THROWS_AS(intrinsics_from_fov(M_PI, 64, 64), SchemaError);
  }
}

TEST_CASE("pixel_to_ray") {
  const Intrinsics k = intrinsics_from_fov(M_PI / 2, 512, 512);
  SUBCASE("principal point looks down the optical axis") {
    const Eigen::Vector3d r = pixel_to_ray(k, k.cx, k.cy);
    CHECK(r.isApprox(Eigen::Vector3d(0, 0, 1), 1e-15));
  }
  SUBCASE("one focal length right of center") {
    const Eigen::Vector3d r = pixel_to_ray(k, k.cx + 256.0, k.cy);
    CHECK(r.x() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(r.y() == doctest::Approx(0.0));
    CHECK(r.z() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  }
  SUBCASE("unit norm everywhere, including off-image pixels") {
    auto g = testing::rng(3);
    std::uniform_real_distribution<double> px(-200.0, 712.0);
    for (int i = 0; i < 10000; ++i) {
      CHECK(std::abs(pixel_to_ray(k, px(g), px(g)).norm() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("project_to_pixel") {
  const Intrinsics k = intrinsics_from_fov(deg2rad(60.0), 640, 480);
  SUBCASE("optical axis hits the principal point") {
    const auto px = project_to_pixel(k, Eigen::Vector3d(0, 0, 1));
    REQUIRE(px.has_value());
    CHECK(px->x() == k.cx);
    CHECK(px->y() == k.cy);
  }
  SUBCASE("behind the camera") {
    CHECK(!project_to_pixel(k, Eigen::Vector3d(0, 0, -1)).has_value());
    CHECK(!project_to_pixel(k, Eigen::Vector3d(0.3, 0.1, 0.0)).has_value());
  }
  SUBCASE("inverse of pixel_to_ray on 10k random pixels") {
    auto g = testing::rng(4);
    std::uniform_real_distribution<double> ux(0.0, 640.0), uy(0.0, 480.0);
    for (int i = 0; i < 10000; ++i) {
      const double u = ux(g), v = uy(g);
      const auto px = project_to_pixel(k, pixel_to_ray(k, u, v));
      REQUIRE(px.has_value());
      CHECK(std::abs(px->x() - u) < 1e-9);
      CHECK(std::abs(px->y() - v) < 1e-9);
    }
  }
  SUBCASE("pixel_to_ray after projection reproduces forward directions") {
    auto g = testing::rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
      Eigen::Vector3d dir(n(g), n(g), std::abs(n(g)) + 0.2);
      dir.normalize();
      const auto px = project_to_pixel(k, dir);
      REQUIRE(px.has_value());
      const Eigen::Vector3d back = pixel_to_ray(k, px->x(), px->y());
      CHECK(back.isApprox(dir, 1e-12));
    }
  }
}

TEST_CASE("rotate_ray") {
  SUBCASE("identity") {
    Pose p;
    const Eigen::Vector3d d(0.6, 0.0, 0.8);
    CHECK(rotate_ray(p, d).isApprox(d, 1e-15));
  }
  SUBCASE("90 degree yaw about the vertical sends the optical axis east") {
    Pose p;
    p.rotation = Eigen::Quaterniond(
        Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitY()));
    const Eigen::Vector3d out = rotate_ray(p, Eigen::Vector3d(0, 0, 1));
    CHECK(out.isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));
  }
  SUBCASE("norm preserved on 10k random rays") {
    auto g = testing::rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
      Pose p;
      p.rotation = Eigen::Quaterniond(n(g), n(g), n(g), n(g)).normalized();
      const Eigen::Vector3d d = Eigen::Vector3d(n(g), n(g), n(g)).normalized();
      CHECK(std::abs(rotate_ray(p, d).norm() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("virtual_camera_for_frame") {
  const GeoPoint ego(42.336, -71.052);
  LocalPose ego_pose;

  SUBCASE("coincident positions give the fixed 2 m height") {
    const Pose p = virtual_camera_for_frame(ego, ego, ego_pose,
                                            Eigen::Quaterniond::Identity());
    CHECK(p.translation.x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(p.translation.y() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(p.translation.z() == 2.0);
  }

  SUBCASE("pano 5 m east of a north-facing ego lands at +x") {
    const GeoPoint pano = offset_to_geo(ego, 5.0, 0.0);
    const Pose p = virtual_camera_for_frame(ego, pano, ego_pose,
                                            Eigen::Quaterniond::Identity());
    CHECK(p.translation.x() == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(p.translation.y() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(p.translation.z() == 2.0);
  }

  SUBCASE("yawing the ego rotates the translation the opposite way") {
    const GeoPoint pano = offset_to_geo(ego, 3.0, 4.0);
    auto g = testing::rng(6);
    std::uniform_real_distribution<double> yaw(-M_PI, M_PI);
    const Pose base = virtual_camera_for_frame(ego, pano, ego_pose,
                                               Eigen::Quaterniond::Identity());
    for (int i = 0; i < 20; ++i) {
      const double psi = yaw(g);
      LocalPose rotated;
      rotated.rotation =
          Eigen::Quaterniond(Eigen::AngleAxisd(psi, Eigen::Vector3d::UnitZ()));
      const Pose p = virtual_camera_for_frame(ego, pano, rotated,
                                              Eigen::Quaterniond::Identity());
      Eigen::Vector3d expect = rotated.rotation.conjugate() * base.translation;
      expect.z() = 2.0;
      CHECK(p.translation.isApprox(expect, 1e-9));
    }
  }

  SUBCASE("north-looking camera maps to the panorama north axis") {
    // Camera mounted so +Z optical looks along map +y (north), +X stays east.
    Eigen::Matrix3d cam;
    cam.col(0) = Eigen::Vector3d(1, 0, 0);    // right -> east
    cam.col(1) = Eigen::Vector3d(0, 0, -1);   // down -> -up
    cam.col(2) = Eigen::Vector3d(0, 1, 0);    // optical -> north
    const Pose p = virtual_camera_for_frame(ego, ego, ego_pose,
                                            Eigen::Quaterniond(cam));
    const Eigen::Vector3d optical = p.rotation * Eigen::Vector3d(0, 0, 1);
    CHECK(optical.isApprox(Eigen::Vector3d(0, 0, 1), 1e-12));  // pano north
    const Eigen::Vector3d right = p.rotation * Eigen::Vector3d(1, 0, 0);
    CHECK(right.isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));  // pano east
  }
}

TEST_CASE("frustum_coords") {
  const FrustumBounds bounds{-50.0, 50.0, -50.0, 50.0, 0.0, 40.0};

  SUBCASE("center pixel at identity pose normalizes to the grid middle") {
    // Principal point on the center of pixel (2, 2) so its ray is (0, 0, 1).
    const Intrinsics k{1.0, 1.0, 2.5, 2.5, 5, 5};
    const FrustumGrid g = frustum_coords(k, Pose{}, {10.0}, bounds);
    CHECK(g.at(2, 2, 0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(g.at(2, 2, 0, 1) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(g.at(2, 2, 0, 2) == doctest::Approx(10.0 / 40.0).epsilon(1e-9));
  }

  SUBCASE("point at the bounds minimum maps to (0,0,0) and clamps below") {
    const Intrinsics k = intrinsics_from_fov(M_PI / 2, 4, 4);
    Pose pose;
    pose.translation = Eigen::Vector3d(-50.0, -50.0, 0.0);
    const FrustumGrid g = frustum_coords(k, pose, {1e-9}, bounds);
    CHECK(g.at(2, 2, 0, 0) < 1e-9);
    CHECK(g.at(2, 2, 0, 1) < 1e-9);
    CHECK(g.at(2, 2, 0, 2) < 1e-9);
  }

  SUBCASE("matches a scalar per-point evaluation bit for bit") {
    const Intrinsics k = intrinsics_from_fov(deg2rad(70.0), 4, 4);
    Pose pose;
    pose.rotation = Eigen::Quaterniond(
        Eigen::AngleAxisd(0.3, Eigen::Vector3d(0.2, 0.5, 0.8).normalized()));
    pose.translation = Eigen::Vector3d(1.5, -2.0, 0.7);
    const std::vector<double> depths{2.0, 7.5, 31.0};
    const FrustumGrid g = frustum_coords(k, pose, depths, bounds);

    const Eigen::Matrix3d r = pose.rotation.toRotationMatrix();
    for (int v = 0; v < 4; ++v) {
      for (int u = 0; u < 4; ++u) {
        const Eigen::Vector3d ray = pixel_to_ray(k, u + 0.5, v + 0.5);
        for (std::size_t d = 0; d < depths.size(); ++d) {
          const Eigen::Vector3d p = r * (ray * depths[d]) + pose.translation;
          const double mins[3] = {bounds.x_min, bounds.y_min, bounds.z_min};
          const double inv[3] = {1.0 / (bounds.x_max - bounds.x_min),
                                 1.0 / (bounds.y_max - bounds.y_min),
                                 1.0 / (bounds.z_max - bounds.z_min)};
          for (int axis = 0; axis < 3; ++axis) {
            const float expect = static_cast<float>(
                std::clamp((p[axis] - mins[axis]) * inv[axis], 0.0, 1.0));
            CHECK(g.at(u, v, static_cast<int>(d), axis) == expect);
          }
        }
      }
    }
  }

  SUBCASE("single planar depth slice is allowed") {
    const Intrinsics k = intrinsics_from_fov(M_PI / 2, 4, 4);
    const FrustumGrid g = frustum_coords(k, Pose{}, {5.0}, bounds);
    CHECK(g.depth_bins.size() == 1);
  }

  SUBCASE("all coordinates stay inside the unit cube") {
    const Intrinsics k = intrinsics_from_fov(deg2rad(100.0), 8, 6);
    Pose pose;
    pose.translation = Eigen::Vector3d(200.0, -300.0, 12.0);  // far outside
    const FrustumGrid g = frustum_coords(k, pose, {1.0, 60.0}, bounds);
    for (const float c : g.coords) {
      CHECK(c >= 0.0f);
      CHECK(c <= 1.0f);
    }
  }

  SUBCASE("input validation") {
    const Intrinsics k = intrinsics_from_fov(M_PI / 2, 4, 4);
    CHECK_THROWS_AS(frustum_coords(k, Pose{}, {}, bounds), SchemaError);
    CHECK_THROWS_AS(frustum_coords(k, Pose{}, {3.0, 2.0}, bounds), SchemaError);
    CHECK_THROWS_AS(frustum_coords(k, Pose{}, {1.0},
                                   FrustumBounds{1, 1, 0, 1, 0, 1}),
                    SchemaError);
  }
}
