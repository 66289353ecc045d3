#pragma once

#include <vector>

#include "wirerecon/types.hpp"

namespace wirerecon::recon {

/// Calibrated bi-planar pair plus the fundamental matrix derived from it.
struct StereoRig {
    CameraParameters cam_a;
    CameraParameters cam_b;
    Mat3 fundamental;  // x_b^T F x_a = 0
};

StereoRig make_rig(const CameraParameters& cam_a, const CameraParameters& cam_b);

/// F from two projection matrices; rank 2 enforced by truncating the
/// smallest singular value, Frobenius-normalized with a deterministic sign.
Mat3 fundamental_from_projections(const Mat34& P_a, const Mat34& P_b);

/// One matched pixel pair (view A sample, view B intersection point).
struct MatchedPair {
    Vec2 a;
    Vec2 b;
};

struct MatchResult {
    std::vector<MatchedPair> pairs;
    int dropped = 0;  // A samples whose epipolar line missed poly_b
};

/// Local quadratic regression along arclength (Gaussian weights of scale
/// sigma_px) after a 1 px resampling. Suppresses annotation jitter; not for
/// exact polylines, where it would round corners.
std::vector<Vec2> smooth_polyline(const std::vector<Vec2>& pts, double sigma_px);

/// Epipolar correspondence: view A is sampled at arclength steps of at most
/// delta_u_px (original vertices retained), each sample's epipolar line is
/// intersected with poly_b, and a monotone dynamic-program alignment picks
/// one intersection per sample (ordering-consistent in the arclength of both
/// polylines, maximal match count, then minimal total triangulated path
/// length to resolve loop branches). smooth_px > 0 runs both annotations
/// through smooth_polyline first.
MatchResult match_polylines(const StereoRig& rig, const Polyline2D& poly_a,
                            const Polyline2D& poly_b, double delta_u_px,
                            double smooth_px = 0.0);

/// Linear (DLT) triangulation of one pixel pair; requires positive depth in
/// both cameras and a ray angle of at least 0.1 degrees.
Vec3 triangulate(const StereoRig& rig, const Vec2& x_a, const Vec2& x_b);

/// Full per-frame pipeline: match, triangulate tip-first, resample at
/// delta_u millimeters.
Curve3D reconstruct_curve(const StereoRig& rig, const Polyline2D& poly_a,
                          const Polyline2D& poly_b, double delta_u,
                          double delta_u_px = 2.0, double smooth_px = 0.0);

/// Pixel distance from each curve sample's projection to the nearest point
/// of the annotation polyline in each view.
struct ReprojectionProfile {
    std::vector<double> per_index_error_a;
    std::vector<double> per_index_error_b;
};

ReprojectionProfile reprojection_profile(const StereoRig& rig, const Curve3D& curve,
                                         const Polyline2D& poly_a, const Polyline2D& poly_b);

}  // namespace wirerecon::recon
