#pragma once

#include <Eigen/Core>

namespace gazebench::geometry {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Points whose camera-frame depth is at or below this are treated as behind
// the image plane.
inline constexpr double kDepthEpsilon = 1e-6;

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    // Throws ConfigInvalid when focal lengths or principal point are out of range.
    void validate() const;

    friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

// World-to-camera rigid transform: p_cam = rotation * p_world + translation.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return {}; }
    Vec3 camera_center() const { return -rotation.transpose() * translation; }
    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
    Vec3 to_world(const Vec3& cam) const { return rotation.transpose() * (cam - translation); }

    bool is_valid(double tol = 1e-9) const;

    friend bool operator==(const Pose& a, const Pose& b) {
        return a.rotation == b.rotation && a.translation == b.translation;
    }
};

struct CameraView {
    Intrinsics intrinsics;
    Pose pose;
};

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
    bool in_bounds = false;
};

struct Projection {
    PixelPoint pixel;
    double depth = 0.0;
};

bool pixel_in_bounds(double x, double y, const Intrinsics& intr);

// Throws BehindCamera when the camera-frame depth is <= kDepthEpsilon.
Projection project(const Vec3& world, const Intrinsics& intr, const Pose& pose);
inline Projection project(const Vec3& world, const CameraView& cam) {
    return project(world, cam.intrinsics, cam.pose);
}

// Inverse of project for a known camera-frame depth.
Vec3 back_project(double x, double y, double depth, const Intrinsics& intr, const Pose& pose);

// Transform taking head-camera coordinates to neck-camera coordinates.
Pose relative_extrinsics(const Pose& head, const Pose& neck);

// Lifts an in-bounds head-view gaze pixel to 3D at `depth` and reprojects it
// into the neck camera. Out-of-bounds results are returned, not thrown.
PixelPoint map_gaze_cross_view(const PixelPoint& gaze, double depth,
                               const CameraView& head, const CameraView& neck);

// Rotation helpers used by the generator and tests.
Mat3 rotation_from_ypr(double yaw, double pitch, double roll);
// Camera axes are x right, y down, z forward. Positive pitch looks up.
Mat3 look_rotation(const Vec3& forward_world, const Vec3& down_hint_world = Vec3(0, 1, 0));
Mat3 project_to_so3(const Mat3& m);
double orthonormality_error(const Mat3& r);

} // namespace gazebench::geometry
