#include "gazebench/geometry.hpp"

#include "gazebench/errors.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace gazebench::geometry {

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw ConfigInvalid("focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw ConfigInvalid("image size must be positive");
    }
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        throw ConfigInvalid("principal point outside image");
    }
}

bool Pose::is_valid(double tol) const {
    return orthonormality_error(rotation) <= tol && std::abs(rotation.determinant() - 1.0) <= tol &&
           translation.allFinite();
}

bool pixel_in_bounds(double x, double y, const Intrinsics& intr) {
    return x >= 0.0 && x < intr.width && y >= 0.0 && y < intr.height;
}

Projection project(const Vec3& world, const Intrinsics& intr, const Pose& pose) {
    const Vec3 p = pose.to_camera(world);
    if (p.z() <= kDepthEpsilon) {
        std::ostringstream msg;
        msg << "camera-frame depth " << p.z() << " <= " << kDepthEpsilon;
        throw BehindCamera(msg.str());
    }
    Projection out;
    out.pixel.x = intr.fx * p.x() / p.z() + intr.cx;
    out.pixel.y = intr.fy * p.y() / p.z() + intr.cy;
    out.pixel.in_bounds = pixel_in_bounds(out.pixel.x, out.pixel.y, intr);
    out.depth = p.z();
    return out;
}

Vec3 back_project(double x, double y, double depth, const Intrinsics& intr, const Pose& pose) {
    const Vec3 cam((x - intr.cx) / intr.fx * depth, (y - intr.cy) / intr.fy * depth, depth);
    return pose.to_world(cam);
}

Pose relative_extrinsics(const Pose& head, const Pose& neck) {
    Pose rel;
    rel.rotation = neck.rotation * head.rotation.transpose();
    rel.translation = neck.translation - rel.rotation * head.translation;
    return rel;
}

PixelPoint map_gaze_cross_view(const PixelPoint& gaze, double depth,
                               const CameraView& head, const CameraView& neck) {
    if (!gaze.in_bounds) {
        throw std::invalid_argument("map_gaze_cross_view: head gaze must be in bounds");
    }
    if (!(depth > kDepthEpsilon)) {
        throw std::invalid_argument("map_gaze_cross_view: depth must exceed the depth epsilon");
    }
    const Vec3 world = back_project(gaze.x, gaze.y, depth, head.intrinsics, head.pose);
    return project(world, neck.intrinsics, neck.pose).pixel;
}

Mat3 rotation_from_ypr(double yaw, double pitch, double roll) {
    // Camera-to-world: yaw about +y (down), pitch about +x, roll about +z.
    // With y pointing down, a positive rotation about x tips +z towards -y (up).
    const Mat3 cam_to_world = (Eigen::AngleAxisd(yaw, Vec3::UnitY()) *
                               Eigen::AngleAxisd(pitch, Vec3::UnitX()) *
                               Eigen::AngleAxisd(roll, Vec3::UnitZ()))
                                  .toRotationMatrix();
    return cam_to_world.transpose();
}

Mat3 look_rotation(const Vec3& forward_world, const Vec3& down_hint_world) {
    const Vec3 z = forward_world.normalized();
    Vec3 x = down_hint_world.cross(z);
    if (x.norm() < 1e-12) {
        x = Vec3::UnitY().cross(z);
        if (x.norm() < 1e-12) {
            x = Vec3::UnitX();
        }
    }
    x.normalize();
    const Vec3 y = z.cross(x);
    Mat3 cam_to_world;
    cam_to_world.col(0) = x;
    cam_to_world.col(1) = y;
    cam_to_world.col(2) = z;
    return cam_to_world.transpose();
}

Mat3 project_to_so3(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

double orthonormality_error(const Mat3& r) {
    return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

} // namespace gazebench::geometry
