#include "wirerecon/reconstruction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "wirerecon/geometry.hpp"

namespace wirerecon::recon {

namespace {

constexpr double kMinRayAngleRad = 0.1 * 3.14159265358979323846 / 180.0;

Eigen::Vector4d camera_center_h(const Mat34& P) {
    Eigen::JacobiSVD<Mat34> svd(P, Eigen::ComputeFullV);
    return svd.matrixV().col(3);
}

double depth_in_camera(const CameraParameters& cam, const Vec3& X) {
    return (cam.R * X + cam.t).z();
}

}  // namespace

Mat3 fundamental_from_projections(const Mat34& P_a, const Mat34& P_b) {
    const Eigen::Vector4d Ca = camera_center_h(P_a);
    const Eigen::Vector4d Cb = camera_center_h(P_b);
    if (std::abs(Ca(3)) > 1e-12 && std::abs(Cb(3)) > 1e-12) {
        if ((Ca.head<3>() / Ca(3) - Cb.head<3>() / Cb(3)).norm() < 1e-9) {
            throw CoincidentCenters("fundamental_from_projections: camera centers coincide");
        }
    }

    const Vec3 e_b = P_b * Ca;  // epipole in view B
    if (e_b.norm() < 1e-12) {
        throw CoincidentCenters("fundamental_from_projections: vanishing epipole");
    }
    Mat3 ex;
    ex << 0, -e_b.z(), e_b.y(), e_b.z(), 0, -e_b.x(), -e_b.y(), e_b.x(), 0;

    const Eigen::Matrix<double, 4, 3> Pa_pinv =
        P_a.completeOrthogonalDecomposition().pseudoInverse();
    Mat3 F = ex * P_b * Pa_pinv;

    // Enforce rank 2 and a canonical scale/sign.
    Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 s = svd.singularValues();
    s(2) = 0.0;
    F = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    F /= F.norm();
    int imax = 0, jmax = 0;
    F.cwiseAbs().maxCoeff(&imax, &jmax);
    if (F(imax, jmax) < 0.0) F = -F;
    return F;
}

StereoRig make_rig(const CameraParameters& cam_a, const CameraParameters& cam_b) {
    StereoRig rig;
    rig.cam_a = cam_a;
    rig.cam_b = cam_b;
    rig.fundamental = fundamental_from_projections(cam_a.P, cam_b.P);
    return rig;
}

Vec3 triangulate(const StereoRig& rig, const Vec2& x_a, const Vec2& x_b) {
    if (!is_finite(x_a) || !is_finite(x_b)) throw NonFiniteInput("triangulate: non-finite pixel");

    // Ray angle check from back-projected directions.
    const Vec3 da = (rig.cam_a.R.transpose() * rig.cam_a.K.inverse() * Vec3(x_a.x(), x_a.y(), 1.0)).normalized();
    const Vec3 db = (rig.cam_b.R.transpose() * rig.cam_b.K.inverse() * Vec3(x_b.x(), x_b.y(), 1.0)).normalized();
    const double angle = std::acos(std::clamp(da.dot(db), -1.0, 1.0));
    if (std::min(angle, 3.14159265358979323846 - angle) < kMinRayAngleRad) {
        throw IllConditioned("triangulate: viewing rays nearly parallel");
    }

    Eigen::Matrix4d A;
    A.row(0) = x_a.x() * rig.cam_a.P.row(2) - rig.cam_a.P.row(0);
    A.row(1) = x_a.y() * rig.cam_a.P.row(2) - rig.cam_a.P.row(1);
    A.row(2) = x_b.x() * rig.cam_b.P.row(2) - rig.cam_b.P.row(0);
    A.row(3) = x_b.y() * rig.cam_b.P.row(2) - rig.cam_b.P.row(1);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
    const Eigen::Vector4d Xh = svd.matrixV().col(3);
    if (std::abs(Xh(3)) < 1e-15) throw IllConditioned("triangulate: point at infinity");
    const Vec3 X = Xh.head<3>() / Xh(3);

    if (depth_in_camera(rig.cam_a, X) <= 0.0 || depth_in_camera(rig.cam_b, X) <= 0.0) {
        throw BehindCamera("triangulate: point behind a camera");
    }
    return X;
}

namespace {

struct Candidate {
    int sample;    // index of the resampled A point
    double s;      // arclength position along poly_b
    Vec2 point;    // intersection pixel in view B
    Vec3 world;    // triangulated 3D point
};

}  // namespace

namespace {

// Gaussian-weighted local polynomial regression of a point sequence against
// its arclength. Quadratic in the interior; linear where the window is
// one-sided (near the ends) to keep the endpoint variance down. `keep`
// optionally masks outliers out of the fit.
template <typename V>
std::vector<V> local_fit_smooth(const std::vector<V>& pts, double sigma,
                                const std::vector<bool>* keep = nullptr) {
    const int n = static_cast<int>(pts.size());
    if (n < 4) return pts;
    std::vector<double> s(n, 0.0);
    for (int i = 1; i < n; ++i) s[i] = s[i - 1] + (pts[i] - pts[i - 1]).norm();
    const double window = 3.0 * sigma;
    const int dims = static_cast<int>(V{}.size());

    std::vector<V> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        int lo = i, hi = i;
        while (lo > 0 && s[i] - s[lo - 1] <= window) --lo;
        while (hi + 1 < n && s[hi + 1] - s[i] <= window) ++hi;
        const bool one_sided = std::min(i - lo, hi - i) < 3;
        const int degree = one_sided ? 1 : 2;

        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Eigen::Matrix<double, 3, Eigen::Dynamic> atb(3, dims);
        atb.setZero();
        int used = 0;
        for (int j = lo; j <= hi; ++j) {
            if (keep && !(*keep)[j]) continue;
            const double ds = s[j] - s[i];
            const double w = std::exp(-0.5 * ds * ds / (sigma * sigma));
            const Eigen::Vector3d basis(1.0, ds, degree == 2 ? ds * ds : 0.0);
            ata += w * basis * basis.transpose();
            for (int d = 0; d < dims; ++d) atb.col(d) += w * basis * pts[j][d];
            ++used;
        }
        V q = pts[i];
        if (used >= degree + 1) {
            if (degree == 1) {
                const Eigen::Matrix2d a2 = ata.topLeftCorner<2, 2>();
                for (int d = 0; d < dims; ++d) {
                    q[d] = a2.ldlt().solve(atb.col(d).head<2>())(0);
                }
            } else {
                for (int d = 0; d < dims; ++d) {
                    q[d] = ata.ldlt().solve(atb.col(d))(0);
                }
            }
        }
        if (out.empty() || (q - out.back()).norm() > 1e-9) out.push_back(q);
    }
    return out;
}

}  // namespace

std::vector<Vec2> smooth_polyline(const std::vector<Vec2>& pts, double sigma_px) {
    if (!(sigma_px > 0.0)) return pts;
    return local_fit_smooth(resample_polyline(pts, 1.0), sigma_px);
}

MatchResult match_polylines(const StereoRig& rig, const Polyline2D& poly_a,
                            const Polyline2D& poly_b, double delta_u_px, double smooth_px) {
    validate(poly_a);
    validate(poly_b);
    if (!(delta_u_px > 0.0)) throw DomainError("match_polylines: delta_u_px must be positive");

    std::vector<Vec2> apts = poly_a.points;
    std::vector<Vec2> bpts_s = poly_b.points;
    if (smooth_px > 0.0) {
        // two passes: heavy jitter inflates the raw arclength and halves the
        // first pass's effective window; the second pass runs on an honest
        // parameterization
        apts = smooth_polyline(smooth_polyline(apts, smooth_px), smooth_px);
        bpts_s = smooth_polyline(smooth_polyline(bpts_s, smooth_px), smooth_px);
    }

    // Arclength samples along poly_a: per-segment subdivision at most
    // delta_u_px apart, always including the original vertices. Keeping the
    // vertices makes the noise-free reconstruction vertex-exact.
    std::vector<Vec2> samples;
    for (size_t k = 0; k + 1 < apts.size(); ++k) {
        const Vec2 a = apts[k];
        const Vec2 b = apts[k + 1];
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / delta_u_px)));
        for (int p = 0; p < pieces; ++p) {
            samples.push_back(a + (b - a) * (static_cast<double>(p) / pieces));
        }
    }
    samples.push_back(apts.back());

    const auto& bpts = bpts_s;

    // Cumulative arclength of poly_b for candidate ordering.
    std::vector<double> cum(bpts.size(), 0.0);
    for (size_t i = 1; i < bpts.size(); ++i) {
        cum[i] = cum[i - 1] + (bpts[i] - bpts[i - 1]).norm();
    }

    // Collect epipolar-line intersections per sample. The crossing test has
    // a small pixel tolerance so an intersection landing exactly on a
    // polyline vertex (tip included) survives roundoff.
    constexpr double kEdgeEps = 1e-7;  // px
    std::vector<std::vector<Candidate>> cands(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        Vec3 line = rig.fundamental * Vec3(samples[i].x(), samples[i].y(), 1.0);
        const double ln = line.head<2>().norm();
        if (ln < 1e-15) continue;
        line /= ln;  // signed pixel distances
        std::vector<Candidate>& list = cands[i];
        for (size_t k = 0; k + 1 < bpts.size(); ++k) {
            const double v0 = line.dot(Vec3(bpts[k].x(), bpts[k].y(), 1.0));
            const double v1 = line.dot(Vec3(bpts[k + 1].x(), bpts[k + 1].y(), 1.0));
            const bool crossing = (v0 <= 0.0 && v1 >= 0.0) || (v0 >= 0.0 && v1 <= 0.0) ||
                                  std::abs(v0) < kEdgeEps || std::abs(v1) < kEdgeEps;
            if (!crossing) continue;
            if (v0 == 0.0 && v1 == 0.0) continue;  // segment on the line; skip degenerate overlap
            double tau = std::abs(v0) < kEdgeEps && std::abs(v0 - v1) < kEdgeEps
                             ? 0.0
                             : v0 / (v0 - v1);
            tau = std::clamp(tau, 0.0, 1.0);
            const Vec2 q = bpts[k] + tau * (bpts[k + 1] - bpts[k]);
            const double s = cum[k] + tau * (bpts[k + 1] - bpts[k]).norm();
            if (!list.empty() && std::abs(list.back().s - s) < 1e-9) continue;  // shared vertex
            Candidate c;
            c.sample = static_cast<int>(i);
            c.s = s;
            c.point = q;
            try {
                c.world = triangulate(rig, samples[i], q);
            } catch (const GeometryError&) {
                continue;  // behind camera or ill-conditioned; not a usable pairing
            }
            list.push_back(c);
        }
    }

    if (smooth_px > 0.0) {
        // Both annotations are tip-first views of the same wire, so the
        // endpoints correspond outright. Anchoring them beats the epipolar
        // search there, which is fragile where the line grazes the polyline
        // end under noise.
        auto anchor = [&](size_t sample_idx, const Vec2& bpt, double s_anchor) {
            Candidate c;
            c.sample = static_cast<int>(sample_idx);
            c.s = s_anchor;
            c.point = bpt;
            try {
                c.world = triangulate(rig, samples[sample_idx], bpt);
            } catch (const GeometryError&) {
                return;  // keep the regular candidates
            }
            cands[sample_idx] = {c};
        };
        anchor(0, bpts.front(), -1e-9);
        anchor(samples.size() - 1, bpts.back(), cum.back() + 1e-9);
    }

    // Monotone alignment over the flattened candidate list: maximize the
    // number of matched samples, then minimize the total 3D path length of
    // the triangulated chain. Intersections sit exactly on the epipolar
    // line, so path length is the discriminating cost between loop branches.
    std::vector<Candidate> flat;
    for (const auto& list : cands) {
        for (const auto& c : list) flat.push_back(c);
    }
    if (flat.empty()) throw NoOverlap("match_polylines: no epipolar intersections");

    const int m = static_cast<int>(flat.size());
    std::vector<int> best_count(m, 1);
    std::vector<double> best_cost(m, 0.0);
    std::vector<int> parent(m, -1);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < j; ++i) {
            if (flat[i].sample >= flat[j].sample) continue;
            if (flat[i].s >= flat[j].s) continue;
            const int count = best_count[i] + 1;
            const double cost = best_cost[i] + (flat[j].world - flat[i].world).norm();
            if (count > best_count[j] ||
                (count == best_count[j] && cost < best_cost[j])) {
                best_count[j] = count;
                best_cost[j] = cost;
                parent[j] = i;
            }
        }
    }

    int end = 0;
    for (int j = 1; j < m; ++j) {
        if (best_count[j] > best_count[end] ||
            (best_count[j] == best_count[end] && best_cost[j] < best_cost[end])) {
            end = j;
        }
    }

    std::vector<int> chain;
    for (int j = end; j != -1; j = parent[j]) chain.push_back(j);
    std::reverse(chain.begin(), chain.end());

    MatchResult out;
    out.pairs.reserve(chain.size());
    for (int j : chain) {
        out.pairs.push_back({samples[flat[j].sample], flat[j].point});
    }
    // Samples that had candidates but were skipped by the alignment count as
    // dropped too.
    out.dropped = static_cast<int>(samples.size() - out.pairs.size());
    if (out.pairs.empty()) throw NoOverlap("match_polylines: empty alignment");
    size_t with_candidates = 0;
    for (const auto& list : cands) with_candidates += list.empty() ? 0 : 1;
    if (out.pairs.size() < 2 && with_candidates >= 2) {
        throw AmbiguousTopology("match_polylines: no ordering-consistent alignment");
    }
    return out;
}

namespace {

// Robust smoothing of the triangulated 3D chain: one pass flags outliers
// (epipolar slide spikes sit far off the local fit), a second pass smooths
// over the surviving points.
std::vector<Vec3> smooth_chain(const std::vector<Vec3>& pts, double sigma_mm) {
    const int n = static_cast<int>(pts.size());
    if (n < 5) return pts;
    const std::vector<Vec3> first = local_fit_smooth(pts, sigma_mm);
    if (static_cast<int>(first.size()) != n) return first;

    std::vector<double> resid(n);
    for (int i = 0; i < n; ++i) resid[i] = (pts[i] - first[i]).norm();
    std::vector<double> sorted = resid;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double mad = std::max(sorted[n / 2], 1e-12);
    std::vector<bool> keep(n);
    for (int i = 0; i < n; ++i) keep[i] = resid[i] < 6.0 * mad;
    return local_fit_smooth(pts, sigma_mm, &keep);
}

}  // namespace

Curve3D reconstruct_curve(const StereoRig& rig, const Polyline2D& poly_a,
                          const Polyline2D& poly_b, double delta_u, double delta_u_px,
                          double smooth_px) {
    const MatchResult match = match_polylines(rig, poly_a, poly_b, delta_u_px, smooth_px);
    std::vector<Vec3> raw;
    raw.reserve(match.pairs.size());
    for (const auto& pair : match.pairs) {
        const Vec3 X = triangulate(rig, pair.a, pair.b);
        if (!raw.empty() && (X - raw.back()).norm() < 1e-12) continue;
        raw.push_back(X);
    }
    if (raw.size() < 2) throw NoOverlap("reconstruct_curve: fewer than 2 triangulated points");
    if (smooth_px > 0.0) {
        // the same scale in mm is the right order on rigs where one pixel
        // subtends about a millimeter at the working depth
        raw = smooth_chain(raw, 3.0 * smooth_px);
        if (raw.size() < 2) throw NoOverlap("reconstruct_curve: smoothing collapsed the chain");
    }
    return arclength_resample(Curve3D{std::move(raw)}, delta_u);
}

ReprojectionProfile reprojection_profile(const StereoRig& rig, const Curve3D& curve,
                                         const Polyline2D& poly_a, const Polyline2D& poly_b) {
    if (curve.points.empty()) throw EmptyCurve("reprojection_profile: empty curve");
    validate(poly_a);
    validate(poly_b);
    ReprojectionProfile profile;
    profile.per_index_error_a.reserve(curve.points.size());
    profile.per_index_error_b.reserve(curve.points.size());
    for (const Vec3& X : curve.points) {
        profile.per_index_error_a.push_back(
            distance_to_polyline(project(rig.cam_a, X), poly_a.points));
        profile.per_index_error_b.push_back(
            distance_to_polyline(project(rig.cam_b, X), poly_b.points));
    }
    return profile;
}

}  // namespace wirerecon::recon
