#include "wirerecon/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wirerecon/geometry.hpp"
#include "wirerecon/rng.hpp"

namespace wirerecon::calib {

namespace {

Eigen::Matrix<double, 6, 1> quad_basis(double u, double v) {
    Eigen::Matrix<double, 6, 1> b;
    b << 1.0, u, v, u * u, u * v, v * v;
    return b;
}

// Reprojection residual with algebraic guard for points near the principal
// plane of a candidate P.
double reproj_error(const Mat34& P, const Correspondence3D2D& c) {
    Eigen::Vector4d X(c.world.x(), c.world.y(), c.world.z(), 1.0);
    const Vec3 x = P * X;
    if (std::abs(x.z()) < 1e-12) return std::numeric_limits<double>::infinity();
    return (Vec2(x.x() / x.z(), x.y() / x.z()) - c.image).norm();
}

}  // namespace

LwmModel fit_lwm(const std::vector<Correspondence2D2D>& correspondences, int neighborhood_n) {
    if (neighborhood_n < 6) throw DomainError("fit_lwm: neighborhood must be >= 6");
    const int n = static_cast<int>(correspondences.size());
    if (n < neighborhood_n) throw InsufficientPoints("fit_lwm: fewer correspondences than neighborhood size");
    for (const auto& c : correspondences) {
        if (!is_finite(c.distorted) || !is_finite(c.true_pos)) {
            throw NonFiniteInput("fit_lwm: non-finite correspondence");
        }
    }

    LwmModel model;
    model.neighborhood = neighborhood_n;
    model.control_points.reserve(n);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        const Vec2 center = correspondences[i].distorted;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return (correspondences[a].distorted - center).squaredNorm() <
                   (correspondences[b].distorted - center).squaredNorm();
        });

        Eigen::MatrixXd A(neighborhood_n, 6);
        Eigen::VectorXd bx(neighborhood_n), by(neighborhood_n);
        double radius = 0.0;
        for (int k = 0; k < neighborhood_n; ++k) {
            const auto& c = correspondences[order[k]];
            const Vec2 d = c.distorted - center;
            A.row(k) = quad_basis(d.x(), d.y()).transpose();
            bx(k) = c.true_pos.x();
            by(k) = c.true_pos.y();
            radius = std::max(radius, d.norm());
        }
        if (radius <= 0.0) throw RankDeficientNeighborhood("fit_lwm: coincident neighbors");

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.singularValues()(5) < 1e-10 * svd.singularValues()(0)) {
            throw RankDeficientNeighborhood("fit_lwm: degenerate neighborhood (collinear points)");
        }
        LwmControlPoint cp;
        cp.center = center;
        cp.coef_x = svd.solve(bx);
        cp.coef_y = svd.solve(by);
        cp.radius = radius;
        model.control_points.push_back(cp);
    }
    return model;
}

Vec2 undistort_point(const LwmModel& model, const Vec2& p) {
    if (!is_finite(p)) throw NonFiniteInput("undistort_point: non-finite point");
    double wsum = 0.0;
    Vec2 acc = Vec2::Zero();
    for (const auto& cp : model.control_points) {
        const double d = (p - cp.center).norm();
        if (d >= cp.radius) continue;
        const double w = (1.0 - d / cp.radius) * (1.0 - d / cp.radius);
        const Vec2 local = p - cp.center;
        const auto basis = quad_basis(local.x(), local.y());
        acc += w * Vec2(cp.coef_x.dot(basis), cp.coef_y.dot(basis));
        wsum += w;
    }
    if (wsum <= 0.0) throw OutsideSupport("undistort_point: no control point in range");
    return acc / wsum;
}

Mat34 dlt(const std::vector<Correspondence3D2D>& correspondences) {
    const int n = static_cast<int>(correspondences.size());
    if (n < 6) throw InsufficientPoints("dlt: need at least 6 correspondences");

    // Hartley normalization: centroid to the origin, mean distance sqrt(2)
    // in the image and sqrt(3) in the world.
    Vec2 c2 = Vec2::Zero();
    Vec3 c3 = Vec3::Zero();
    for (const auto& c : correspondences) {
        if (!is_finite(c.world) || !is_finite(c.image)) throw NonFiniteInput("dlt: non-finite input");
        c2 += c.image;
        c3 += c.world;
    }
    c2 /= n;
    c3 /= n;
    double m2 = 0.0, m3 = 0.0;
    for (const auto& c : correspondences) {
        m2 += (c.image - c2).norm();
        m3 += (c.world - c3).norm();
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0 || m3 <= 0.0) throw DegenerateConfiguration("dlt: coincident points");
    const double s2 = std::sqrt(2.0) / m2;
    const double s3 = std::sqrt(3.0) / m3;

    Mat3 T = Mat3::Identity();
    T(0, 0) = T(1, 1) = s2;
    T(0, 2) = -s2 * c2.x();
    T(1, 2) = -s2 * c2.y();
    Eigen::Matrix4d U = Eigen::Matrix4d::Identity();
    U(0, 0) = U(1, 1) = U(2, 2) = s3;
    U.block<3, 1>(0, 3) = -s3 * c3;

    Eigen::MatrixXd A(2 * n, 12);
    for (int i = 0; i < n; ++i) {
        const auto& c = correspondences[i];
        const Vec3 xw = s3 * (c.world - c3);
        const Vec2 xi = s2 * (c.image - c2);
        Eigen::RowVector4d X(xw.x(), xw.y(), xw.z(), 1.0);
        A.row(2 * i).setZero();
        A.row(2 * i + 1).setZero();
        A.block<1, 4>(2 * i, 0) = X;
        A.block<1, 4>(2 * i, 8) = -xi.x() * X;
        A.block<1, 4>(2 * i + 1, 4) = X;
        A.block<1, 4>(2 * i + 1, 8) = -xi.y() * X;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    // The smallest singular value is the solution residual; a vanishing
    // second-smallest means the solution is not unique (e.g. coplanar world
    // points).
    if (sv(10) < 1e-12 * sv(0)) {
        throw DegenerateConfiguration("dlt: degenerate correspondence configuration");
    }
    Eigen::Matrix<double, 12, 1> p = svd.matrixV().col(11);
    Mat34 Pn;
    Pn.row(0) = p.segment<4>(0).transpose();
    Pn.row(1) = p.segment<4>(4).transpose();
    Pn.row(2) = p.segment<4>(8).transpose();

    Mat34 P = T.inverse() * Pn * U;
    const double scale = P.block<1, 3>(2, 0).norm();
    if (scale <= 0.0) throw DegenerateConfiguration("dlt: zero rotation row");
    return P / scale;
}

std::pair<Mat34, std::vector<bool>> ransac_projection(
    const std::vector<Correspondence3D2D>& correspondences, const RansacConfig& cfg) {
    const int n = static_cast<int>(correspondences.size());
    if (n < cfg.min_sample) throw InsufficientPoints("ransac_projection: fewer than 6 correspondences");
    if (cfg.iterations < 1) throw DomainError("ransac_projection: iterations must be >= 1");
    if (!(cfg.inlier_threshold > 0.0)) throw DomainError("ransac_projection: threshold must be positive");

    Rng rng(cfg.seed);
    int best_count = -1;
    std::vector<bool> best_mask;

    std::vector<int> sample(cfg.min_sample);
    for (int it = 0; it < cfg.iterations; ++it) {
        // sample min_sample distinct indices
        for (int k = 0; k < cfg.min_sample; ++k) {
            int idx;
            bool fresh;
            do {
                idx = static_cast<int>(rng.index(n));
                fresh = true;
                for (int j = 0; j < k; ++j) fresh = fresh && sample[j] != idx;
            } while (!fresh);
            sample[k] = idx;
        }
        std::vector<Correspondence3D2D> subset;
        subset.reserve(cfg.min_sample);
        for (int idx : sample) subset.push_back(correspondences[idx]);

        Mat34 P;
        try {
            P = dlt(subset);
        } catch (const GeometryError&) {
            continue;  // degenerate sample
        }
        std::vector<bool> mask(n, false);
        int count = 0;
        for (int i = 0; i < n; ++i) {
            if (reproj_error(P, correspondences[i]) < cfg.inlier_threshold) {
                mask[i] = true;
                ++count;
            }
        }
        if (count > best_count) {
            best_count = count;
            best_mask = std::move(mask);
        }
    }

    if (best_count < cfg.min_sample) throw NoConsensus("ransac_projection: no consensus set of size >= 6");

    std::vector<Correspondence3D2D> inliers;
    inliers.reserve(best_count);
    for (int i = 0; i < n; ++i) {
        if (best_mask[i]) inliers.push_back(correspondences[i]);
    }
    return {dlt(inliers), best_mask};
}

double rms_reprojection_error(const Mat34& P, const std::vector<Correspondence3D2D>& cs) {
    if (cs.empty()) throw InsufficientPoints("rms_reprojection_error: empty correspondence list");
    double sum = 0.0;
    for (const auto& c : cs) {
        const double e = reproj_error(P, c);
        sum += e * e;
    }
    // per-coordinate RMS (2 residuals per correspondence)
    return std::sqrt(sum / (2.0 * static_cast<double>(cs.size())));
}

Mat34 refine_projection(const Mat34& P0, const std::vector<Correspondence3D2D>& cs,
                        int max_iters, double tol) {
    if (cs.size() < 6) throw InsufficientPoints("refine_projection: need at least 6 correspondences");
    {
        Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(P0);
        if (svd.singularValues()(2) < 1e-12 * svd.singularValues()(0)) {
            throw DomainError("refine_projection: P0 is rank-deficient");
        }
    }
    const int n = static_cast<int>(cs.size());

    // Optimize in Hartley-normalized coordinates: raw P entries span many
    // orders of magnitude and stall the normal equations. The normalized
    // residuals are a uniform rescale of the pixel residuals, so the
    // minimizer is unchanged.
    Vec2 c2 = Vec2::Zero();
    Vec3 c3 = Vec3::Zero();
    for (const auto& c : cs) {
        c2 += c.image;
        c3 += c.world;
    }
    c2 /= n;
    c3 /= n;
    double m2 = 0.0, m3 = 0.0;
    for (const auto& c : cs) {
        m2 += (c.image - c2).norm();
        m3 += (c.world - c3).norm();
    }
    const double s2 = m2 > 0.0 ? std::sqrt(2.0) * n / m2 : 1.0;
    const double s3 = m3 > 0.0 ? std::sqrt(3.0) * n / m3 : 1.0;

    Mat3 T = Mat3::Identity();
    T(0, 0) = T(1, 1) = s2;
    T(0, 2) = -s2 * c2.x();
    T(1, 2) = -s2 * c2.y();
    Eigen::Matrix4d Uinv = Eigen::Matrix4d::Identity();
    Uinv(0, 0) = Uinv(1, 1) = Uinv(2, 2) = 1.0 / s3;
    Uinv.block<3, 1>(0, 3) = c3;

    std::vector<Eigen::Vector4d> Xn(n);
    std::vector<Vec2> xn(n);
    for (int i = 0; i < n; ++i) {
        const Vec3 w = s3 * (cs[i].world - c3);
        Xn[i] = Eigen::Vector4d(w.x(), w.y(), w.z(), 1.0);
        xn[i] = s2 * (cs[i].image - c2);
    }

    Mat34 P = T * P0 * Uinv;
    P /= P.norm();

    auto residuals = [&](const Mat34& Pm, Eigen::VectorXd& r) {
        for (int i = 0; i < n; ++i) {
            const Vec3 x = Pm * Xn[i];
            r(2 * i) = x.x() / x.z() - xn[i].x();
            r(2 * i + 1) = x.y() / x.z() - xn[i].y();
        }
    };

    Eigen::VectorXd r(2 * n);
    residuals(P, r);
    double err = r.squaredNorm();

    // The objective is invariant along the scale direction of P (the
    // Jacobian has that null vector); LM damping keeps the normal equations
    // well posed, so P is optimized over its 11 effective parameters.
    double lambda = 1e-6;
    int escalation = 0;
    bool moved = false;
    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::MatrixXd J(2 * n, 12);
        for (int i = 0; i < n; ++i) {
            const Vec3 x = P * Xn[i];
            const double w = x.z();
            const double u = x.x() / w;
            const double v = x.y() / w;
            for (int j = 0; j < 4; ++j) {
                J(2 * i, j) = Xn[i](j) / w;
                J(2 * i, 4 + j) = 0.0;
                J(2 * i, 8 + j) = -u * Xn[i](j) / w;
                J(2 * i + 1, j) = 0.0;
                J(2 * i + 1, 4 + j) = Xn[i](j) / w;
                J(2 * i + 1, 8 + j) = -v * Xn[i](j) / w;
            }
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd H = JtJ;
            H.diagonal().array() += lambda;
            const Eigen::VectorXd step = H.ldlt().solve(-g);

            Mat34 Ptrial = P;
            for (int j = 0; j < 12; ++j) Ptrial(j / 4, j % 4) += step(j);
            Eigen::VectorXd rtrial(2 * n);
            residuals(Ptrial, rtrial);
            const double etrial = rtrial.squaredNorm();

            if (etrial <= err) {
                const double step_norm = step.norm();
                P = Ptrial;
                r = rtrial;
                err = etrial;
                lambda = std::max(lambda * 0.5, 1e-12);
                escalation = 0;
                accepted = true;
                if (step_norm > 0.0) moved = true;
                if (step_norm < tol) goto done;
            } else {
                // converged when no step can improve beyond roundoff
                if (step.norm() < tol || etrial - err < 1e-12 * err) goto done;
                lambda *= 10.0;
                if (++escalation >= 10) {
                    throw DivergedError("refine_projection: error increased through 10 damping escalations");
                }
            }
        }
        if (!std::isfinite(err)) throw DivergedError("refine_projection: non-finite objective");
    }
done:
    if (!moved) return P0;  // already at the optimum; keep the caller's scale
    Mat34 out = T.inverse() * P * Uinv.inverse();
    const double scale = out.block<1, 3>(2, 0).norm();
    if (scale > 0.0) out /= scale;
    return out;
}

DecomposedCamera decompose_projection(const Mat34& Pin) {
    Mat34 P = Pin;
    Mat3 M = P.leftCols<3>();
    const double det = M.determinant();
    if (std::abs(det) < 1e-12 * std::pow(M.norm(), 3)) {
        throw SingularLeftBlock("decompose_projection: left 3x3 block is singular");
    }
    if (det < 0.0) {
        P = -P;
        M = -M;
    }

    // RQ decomposition via QR of the axis-reversed transpose.
    Mat3 F = Mat3::Zero();
    F(0, 2) = F(1, 1) = F(2, 0) = 1.0;
    const Mat3 Mt = F * M;
    Eigen::HouseholderQR<Mat3> qr(Mt.transpose());
    Mat3 Q = qr.householderQ();
    Mat3 Rq = qr.matrixQR().triangularView<Eigen::Upper>();
    Mat3 K = F * Rq.transpose() * F;
    Mat3 R = F * Q.transpose();

    // Force positive diagonal on K; det(R) is then +1 because det(M) > 0.
    Vec3 sign;
    for (int i = 0; i < 3; ++i) sign(i) = K(i, i) < 0.0 ? -1.0 : 1.0;
    const Mat3 D = sign.asDiagonal();
    K = K * D;
    R = D * R;

    const double scale = K(2, 2);
    DecomposedCamera out;
    out.K = K / scale;
    out.R = R;
    out.t = out.K.inverse() * (P.col(3) / scale);
    return out;
}

}  // namespace wirerecon::calib
