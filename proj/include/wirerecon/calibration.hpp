#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wirerecon/types.hpp"

namespace wirerecon::calib {

/// Pair of distorted and distortion-free pixel positions of one marker.
struct Correspondence2D2D {
    Vec2 distorted;
    Vec2 true_pos;
};

/// World (mm) to image (px) correspondence for projection estimation.
struct Correspondence3D2D {
    Vec3 world;
    Vec2 image;
};

/// One locally fitted map of the LWM field: a second-order bivariate
/// polynomial per output axis, valid within `radius` of `center`.
/// Coefficients are over the local basis [1, u, v, u^2, u*v, v^2] with
/// (u, v) = p - center.
struct LwmControlPoint {
    Vec2 center;
    Eigen::Matrix<double, 6, 1> coef_x;
    Eigen::Matrix<double, 6, 1> coef_y;
    double radius = 0.0;
};

/// Local weighted mean undistortion field.
struct LwmModel {
    std::vector<LwmControlPoint> control_points;
    int neighborhood = 0;
};

struct RansacConfig {
    int iterations = 1000;
    double inlier_threshold = 2.0;  // px
    int min_sample = 6;
    std::uint64_t seed = 0;
};

/// Fits one control point per correspondence: a least-squares second-order
/// polynomial over its n nearest neighbors (n >= 6), influence radius equal
/// to the n-th neighbor distance.
LwmModel fit_lwm(const std::vector<Correspondence2D2D>& correspondences, int neighborhood_n);

/// Inverse-distance-weighted blend of the local polynomials whose influence
/// region contains p; weight (1 - d/R)^2.
Vec2 undistort_point(const LwmModel& model, const Vec2& p);

/// Direct linear transformation with Hartley normalization. The result is
/// scaled so the norm of the last row's first three entries is 1.
Mat34 dlt(const std::vector<Correspondence3D2D>& correspondences);

/// Robust projection estimation: repeated minimal-sample DLT, inlier count
/// scoring at cfg.inlier_threshold, final DLT refit over the best consensus
/// set. Deterministic for a fixed seed.
std::pair<Mat34, std::vector<bool>> ransac_projection(
    const std::vector<Correspondence3D2D>& correspondences, const RansacConfig& cfg);

/// Levenberg-Marquardt minimization of summed squared pixel reprojection
/// error over the projection entries (gauge fixed by renormalization).
Mat34 refine_projection(const Mat34& P0, const std::vector<Correspondence3D2D>& correspondences,
                        int max_iters = 100, double tol = 1e-12);

/// RQ decomposition of the left 3x3 block into K (upper-triangular, positive
/// diagonal, K(2,2)=1) and a proper rotation R, with t = K^-1 * P.col(3).
struct DecomposedCamera {
    Mat3 K;
    Mat3 R;
    Vec3 t;
};
DecomposedCamera decompose_projection(const Mat34& P);

/// Per-coordinate root-mean-square pixel reprojection error of P over the
/// correspondences (two residuals per point).
double rms_reprojection_error(const Mat34& P, const std::vector<Correspondence3D2D>& correspondences);

}  // namespace wirerecon::calib
