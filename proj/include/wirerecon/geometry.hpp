#pragma once

#include <vector>

#include "wirerecon/types.hpp"

namespace wirerecon {

/// Pinhole projection of a world point through P, dehomogenized to pixels.
/// The point must lie in front of the camera (positive depth under [R|t]).
Vec2 project(const CameraParameters& camera, const Vec3& p);

/// Projection through a raw 3x4 matrix without a depth check. Scale-invariant
/// in P; throws PointBehindCamera when the homogeneous w vanishes.
Vec2 project_point(const Mat34& P, const Vec3& p);

/// x = r sin(theta) cos(phi), y = r sin(theta) sin(phi), z = r cos(theta).
Vec3 spherical_to_cartesian(const SphericalPoint& s);

/// Direction vector for possibly non-canonical angles (theta outside [0,pi]
/// is folded by the trigonometry itself). Used by the curve codec where
/// accumulated angles are not clamped.
Vec3 unit_from_angles(double theta, double phi);

/// Inverse transform; phi = 0 at the poles by convention.
SphericalPoint cartesian_to_spherical(const Vec3& v);

/// Sum of segment lengths.
double polyline_length(const std::vector<Vec3>& pts);
double polyline_length(const std::vector<Vec2>& pts);

/// Resamples the piecewise-linear curve so consecutive output points are
/// exactly delta_u apart (the final partial segment is retained as the last
/// point). The first point (tip) is preserved; every output point lies on the
/// input polyline.
Curve3D arclength_resample(const Curve3D& c, double delta_u);

/// Same stepping over a 2D polyline (pixel arclength).
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& pts, double delta_u);

/// Internal stepping kernel shared by the 2D/3D resamplers.
/// keep_tail=false drops the final partial segment instead of retaining it.
std::vector<Vec3> resample_points(const std::vector<Vec3>& pts, double delta_u,
                                  bool keep_tail);

/// Minimum Euclidean distance from p to the polyline (exact point-segment
/// distances, no densification).
double distance_to_polyline(const Vec2& p, const std::vector<Vec2>& poly);

}  // namespace wirerecon
