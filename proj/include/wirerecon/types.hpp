#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "wirerecon/errors.hpp"

namespace wirerecon {

using Vec2 = Eigen::Vector2d;   // pixels
using Vec3 = Eigen::Vector3d;   // millimeters
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

namespace calib {
struct LwmModel;
}

/// Point in spherical coordinates: radius (mm), polar angle theta in [0, pi],
/// azimuth phi in (-pi, pi].
struct SphericalPoint {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

/// One fluoroscope view: intrinsics K, extrinsics [R|t], composed projection
/// P = K [R|t], plus an optional undistortion field.
struct CameraParameters {
    Mat3 K = Mat3::Identity();
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();
    Mat34 P = Mat34::Identity();
    std::shared_ptr<const calib::LwmModel> distortion;

    /// Camera center in world coordinates (-R^T t).
    Vec3 center() const { return -R.transpose() * t; }
};

/// Builds CameraParameters from (K, R, t), composing P and checking the
/// invariants: R proper rotation, K upper-triangular with positive diagonal.
CameraParameters make_camera(const Mat3& K, const Mat3& R, const Vec3& t,
                             std::shared_ptr<const calib::LwmModel> distortion = nullptr);

/// Ordered tip-first pixel-space annotation of one guidewire in one view.
struct Polyline2D {
    std::vector<Vec2> points;
    char view_id = 'A';
    int frame_index = 0;
};

/// Ordered tip-first 3D point sequence in millimeters.
struct Curve3D {
    std::vector<Vec3> points;
};

/// Throws DegenerateCurve / NonFiniteInput / InvariantError when the
/// structural invariants do not hold (>= 2 points, finite, no repeats).
void validate(const Polyline2D& poly);
void validate(const Curve3D& curve);

inline bool is_finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }
inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace wirerecon
