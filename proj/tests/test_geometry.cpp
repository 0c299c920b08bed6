#include "gazebench/errors.hpp"
#include "gazebench/geometry.hpp"
#include "gazebench/rng.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/LU>

#include <cmath>

using namespace gazebench;
using namespace gazebench::geometry;

namespace {

const Intrinsics kCam{40.0, 40.0, 32.0, 32.0, 64, 64};

Pose random_pose(Rng& rng) {
    Pose p;
    p.rotation = oracle::random_rotation(rng);
    p.translation = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    return p;
}

} // namespace

TEST_CASE("projecting a point on the optical axis lands on the principal point") {
    const auto p = project(Vec3(0, 0, 2), kCam, Pose::identity());
    CHECK(p.pixel.x == doctest::Approx(32.0));
    CHECK(p.pixel.y == doctest::Approx(32.0));
    CHECK(p.pixel.in_bounds);
    CHECK(p.depth == doctest::Approx(2.0));
}

TEST_CASE("projection follows x right, y down") {
    const auto p = project(Vec3(0.5, -0.25, 1.0), kCam, Pose::identity());
    CHECK(p.pixel.x == doctest::Approx(52.0));
    CHECK(p.pixel.y == doctest::Approx(22.0));
}

TEST_CASE("points at or behind the camera plane throw BehindCamera") {
    CHECK_THROWS_AS(project(Vec3(0, 0, -1), kCam, Pose::identity()), BehindCamera);
    CHECK_THROWS_AS(project(Vec3(0, 0, 0), kCam, Pose::identity()), BehindCamera);
    CHECK_THROWS_AS(project(Vec3(0, 0, 5e-7), kCam, Pose::identity()), BehindCamera);
    CHECK_NOTHROW(project(Vec3(0, 0, 2e-6), kCam, Pose::identity()));
}

TEST_CASE("in-bounds test is half-open on the image rectangle") {
    CHECK(pixel_in_bounds(0.0, 0.0, kCam));
    CHECK(pixel_in_bounds(63.999, 63.999, kCam));
    CHECK_FALSE(pixel_in_bounds(64.0, 10.0, kCam));
    CHECK_FALSE(pixel_in_bounds(10.0, -0.001, kCam));
}

TEST_CASE("projection matches the component-wise oracle on random poses") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const Pose pose = random_pose(rng);
        const Vec3 x(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        const auto expect = oracle::pinhole(x, kCam, pose);
        if (!expect) {
            CHECK_THROWS_AS(project(x, kCam, pose), BehindCamera);
            continue;
        }
        const auto got = project(x, kCam, pose);
        CHECK(std::abs(got.pixel.x - expect->first) < 1e-9 * std::max(1.0, std::abs(expect->first)));
        CHECK(std::abs(got.pixel.y - expect->second) < 1e-9 * std::max(1.0, std::abs(expect->second)));
    }
}

TEST_CASE("back-projection then projection reproduces the pixel") {
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        const Pose pose = random_pose(rng);
        const double u = rng.uniform(0, 64);
        const double v = rng.uniform(0, 64);
        const double d = rng.uniform(0.1, 10);
        const auto p = project(back_project(u, v, d, kCam, pose), kCam, pose);
        CHECK(std::abs(p.pixel.x - u) < 1e-9);
        CHECK(std::abs(p.pixel.y - v) < 1e-9);
        CHECK(p.depth == doctest::Approx(d).epsilon(1e-12));
    }
}

TEST_CASE("relative extrinsics of identity head and offset neck") {
    Pose neck;
    neck.translation = Vec3(0, 0.3, 0);
    const Pose rel = relative_extrinsics(Pose::identity(), neck);
    CHECK((rel.rotation - Mat3::Identity()).norm() < 1e-15);
    CHECK((rel.translation - Vec3(0, 0.3, 0)).norm() < 1e-15);
}

TEST_CASE("relative extrinsics compose head to world to neck") {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const Pose head = random_pose(rng);
        const Pose neck = random_pose(rng);
        const Pose rel = relative_extrinsics(head, neck);
        const Vec3 p_head(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
        const Vec3 via_world = neck.to_camera(head.to_world(p_head));
        CHECK((rel.to_camera(p_head) - via_world).norm() < 1e-9);
        CHECK(rel.is_valid(1e-9));
    }
}

TEST_CASE("mapping between identical cameras is the identity") {
    Rng rng(14);
    for (int i = 0; i < 200; ++i) {
        const CameraView cam{kCam, random_pose(rng)};
        const PixelPoint g{rng.uniform(0, 64), rng.uniform(0, 64), true};
        const auto out = map_gaze_cross_view(g, rng.uniform(0.2, 5), cam, cam);
        CHECK(std::abs(out.x - g.x) < 1e-9);
        CHECK(std::abs(out.y - g.y) < 1e-9);
        CHECK(out.in_bounds);
    }
}

TEST_CASE("neck camera pitched up loses a target below it") {
    // Target straight ahead of the head at eye level; the neck camera sits
    // 0.25 m lower and looks up by more than its half field of view.
    const Vec3 target(0, 0, 1.0);
    const CameraView head{kCam, Pose::identity()};
    const auto hp = project(target, head);
    const double half_fov = std::atan(32.0 / 40.0);
    Pose neck_pose;
    neck_pose.rotation = rotation_from_ypr(0.0, half_fov + 0.4, 0.0);
    neck_pose.translation = -neck_pose.rotation * Vec3(0, 0.25, 0);
    const CameraView neck{kCam, neck_pose};
    const auto mapped = map_gaze_cross_view(hp.pixel, hp.depth, head, neck);
    CHECK_FALSE(mapped.in_bounds);
    const auto direct = project(target, neck);
    CHECK(std::abs(mapped.x - direct.pixel.x) < 1e-9);
    CHECK(std::abs(mapped.y - direct.pixel.y) < 1e-9);
}

TEST_CASE("cross-view mapping equals direct projection of the 3D point") {
    Rng rng(15);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const CameraView head{kCam, random_pose(rng)};
        const CameraView neck{Intrinsics{44.5, 44.5, 32, 32, 64, 64}, random_pose(rng)};
        const double u = rng.uniform(0, 64), v = rng.uniform(0, 64), d = rng.uniform(0.3, 3.0);
        const Vec3 world = back_project(u, v, d, head.intrinsics, head.pose);
        const auto expect = oracle::pinhole(world, neck.intrinsics, neck.pose);
        if (!expect) {
            CHECK_THROWS_AS(map_gaze_cross_view({u, v, true}, d, head, neck), BehindCamera);
            continue;
        }
        const auto got = map_gaze_cross_view({u, v, true}, d, head, neck);
        CHECK(std::abs(got.x - expect->first) / 64.0 < 1e-6);
        CHECK(std::abs(got.y - expect->second) / 64.0 < 1e-6);
        ++checked;
    }
    CHECK(checked > 300);
}

TEST_CASE("mapping rejects out-of-view gaze and non-positive depth") {
    const CameraView cam{kCam, Pose::identity()};
    CHECK_THROWS_AS(map_gaze_cross_view({70, 10, false}, 1.0, cam, cam), std::invalid_argument);
    CHECK_THROWS_AS(map_gaze_cross_view({10, 10, true}, 0.0, cam, cam), std::invalid_argument);
}

TEST_CASE("rotation helpers produce proper rotations") {
    Rng rng(16);
    for (int i = 0; i < 100; ++i) {
        const Mat3 r = rotation_from_ypr(rng.uniform(-3, 3), rng.uniform(-1.5, 1.5), rng.uniform(-3, 3));
        CHECK(orthonormality_error(r) < 1e-12);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
        const Mat3 l = look_rotation(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0));
        CHECK(orthonormality_error(l) < 1e-12);
        Mat3 noisy = oracle::random_rotation(rng);
        noisy(0, 1) += 0.01;
        const Mat3 fixed = project_to_so3(noisy);
        CHECK(orthonormality_error(fixed) < 1e-12);
        CHECK(fixed.determinant() > 0);
    }
}

TEST_CASE("positive pitch looks up") {
    // A point above the axis (negative y, since y is down) moves toward the
    // image center when the camera pitches up.
    Pose up;
    up.rotation = rotation_from_ypr(0.0, 0.2, 0.0);
    const auto level = project(Vec3(0, -0.3, 1.0), kCam, Pose::identity());
    const auto pitched = project(Vec3(0, -0.3, 1.0), kCam, up);
    CHECK(pitched.pixel.y > level.pixel.y);
}

TEST_CASE("intrinsics validation") {
    CHECK_NOTHROW(kCam.validate());
    CHECK_THROWS_AS((Intrinsics{0.0, 40, 32, 32, 64, 64}.validate()), ConfigInvalid);
    CHECK_THROWS_AS((Intrinsics{40, 40, 32, 32, 0, 64}.validate()), ConfigInvalid);
}
