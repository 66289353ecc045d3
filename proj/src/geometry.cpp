#include "wirerecon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wirerecon {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

CameraParameters make_camera(const Mat3& K, const Mat3& R, const Vec3& t,
                             std::shared_ptr<const calib::LwmModel> distortion) {
    if (!K.allFinite() || !R.allFinite() || !is_finite(t)) {
        throw NonFiniteInput("make_camera: non-finite input");
    }
    if ((R * R.transpose() - Mat3::Identity()).norm() > 1e-9 ||
        std::abs(R.determinant() - 1.0) > 1e-9) {
        throw InvariantError("make_camera: R is not a proper rotation");
    }
    if (std::abs(K(1, 0)) > 1e-12 || std::abs(K(2, 0)) > 1e-12 || std::abs(K(2, 1)) > 1e-12 ||
        K(0, 0) <= 0 || K(1, 1) <= 0 || K(2, 2) <= 0) {
        throw InvariantError("make_camera: K must be upper-triangular with positive diagonal");
    }
    CameraParameters cam;
    cam.K = K / K(2, 2);
    cam.R = R;
    cam.t = t;
    Mat34 Rt;
    Rt.leftCols<3>() = R;
    Rt.col(3) = t;
    cam.P = cam.K * Rt;
    cam.distortion = std::move(distortion);
    return cam;
}

void validate(const Polyline2D& poly) {
    if (poly.points.size() < 2) throw DegenerateCurve("polyline has fewer than 2 points");
    for (size_t i = 0; i < poly.points.size(); ++i) {
        if (!is_finite(poly.points[i])) throw NonFiniteInput("polyline point is non-finite");
        if (i > 0 && (poly.points[i] - poly.points[i - 1]).norm() == 0.0) {
            throw InvariantError("polyline has identical consecutive points");
        }
    }
}

void validate(const Curve3D& curve) {
    if (curve.points.size() < 2) throw DegenerateCurve("curve has fewer than 2 points");
    for (size_t i = 0; i < curve.points.size(); ++i) {
        if (!is_finite(curve.points[i])) throw NonFiniteInput("curve point is non-finite");
        if (i > 0 && (curve.points[i] - curve.points[i - 1]).norm() == 0.0) {
            throw InvariantError("curve arclength is not strictly increasing");
        }
    }
}

Vec2 project_point(const Mat34& P, const Vec3& p) {
    if (!is_finite(p) || !P.allFinite()) throw NonFiniteInput("project: non-finite input");
    Eigen::Vector4d ph(p.x(), p.y(), p.z(), 1.0);
    Vec3 x = P * ph;
    if (x.z() == 0.0) throw PointBehindCamera("project: point on the principal plane");
    return {x.x() / x.z(), x.y() / x.z()};
}

Vec2 project(const CameraParameters& camera, const Vec3& p) {
    if (!is_finite(p)) throw NonFiniteInput("project: non-finite point");
    const double depth = (camera.R * p + camera.t).z();
    if (depth <= 0.0) throw PointBehindCamera("project: depth <= 0");
    return project_point(camera.P, p);
}

Vec3 unit_from_angles(double theta, double phi) {
    const double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

Vec3 spherical_to_cartesian(const SphericalPoint& s) {
    if (!std::isfinite(s.r) || !std::isfinite(s.theta) || !std::isfinite(s.phi)) {
        throw NonFiniteInput("spherical_to_cartesian: non-finite input");
    }
    if (s.theta < 0.0 || s.theta > kPi) {
        throw DomainError("spherical_to_cartesian: theta outside [0, pi]");
    }
    return s.r * unit_from_angles(s.theta, s.phi);
}

SphericalPoint cartesian_to_spherical(const Vec3& v) {
    if (!is_finite(v)) throw NonFiniteInput("cartesian_to_spherical: non-finite input");
    const double r = v.norm();
    if (r == 0.0) throw ZeroVector("cartesian_to_spherical: zero vector");
    SphericalPoint s;
    s.r = r;
    s.theta = std::atan2(std::hypot(v.x(), v.y()), v.z());
    if (v.x() == 0.0 && v.y() == 0.0) {
        s.phi = 0.0;  // pole convention
    } else {
        s.phi = std::atan2(v.y(), v.x());
        if (s.phi <= -kPi) s.phi = kPi;
    }
    return s;
}

namespace {

template <typename V>
double length_of(const std::vector<V>& pts) {
    double total = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) total += (pts[i] - pts[i - 1]).norm();
    return total;
}

// Chord stepping: from the current point, walk forward and emit the first
// polyline point at Euclidean distance exactly delta_u. Guarantees
// |out[k+1]-out[k]| == delta_u, which the fixed-radius curve codec relies on.
template <typename V>
std::vector<V> chord_resample(const std::vector<V>& pts, double delta_u, bool keep_tail) {
    if (pts.size() < 2) throw DegenerateCurve("resample: fewer than 2 points");
    if (!(delta_u > 0.0)) throw DomainError("resample: delta_u must be positive");
    if (length_of(pts) < delta_u - 1e-9) throw DeltaTooLarge("resample: delta_u exceeds curve length");

    std::vector<V> out;
    out.push_back(pts.front());
    V cur = pts.front();
    size_t seg = 0;          // current segment index [seg, seg+1]
    V pos = pts.front();     // walk position on that segment

    while (seg + 1 < pts.size()) {
        const V a = pos;
        const V b = pts[seg + 1];
        const V d = b - a;
        const double seg_len2 = d.squaredNorm();
        // Solve |a + t d - cur|^2 = delta_u^2 for the first t in (0, 1].
        const V w = a - cur;
        const double qa = seg_len2;
        const double qb = 2.0 * w.dot(d);
        const double qc = w.squaredNorm() - delta_u * delta_u;
        bool crossed = false;
        if (qa > 0.0) {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                // Larger root first crosses outward (distance is below
                // delta_u at the walk position).
                const double t = (-qb + sq) / (2.0 * qa);
                if (t >= 0.0 && t <= 1.0) {
                    cur = a + t * d;
                    out.push_back(cur);
                    pos = cur;
                    crossed = true;
                }
            }
        }
        if (!crossed) {
            // A crossing that lands exactly on a vertex is a knife-edge when
            // the next segment turns sharply inward; emit the vertex when the
            // endpoint distance matches delta_u to within the contract's 1e-9.
            if (std::abs((b - cur).norm() - delta_u) <= 1e-9 && (b - cur).norm() > 0.0) {
                cur = b;
                out.push_back(cur);
                pos = cur;
                continue;
            }
            ++seg;
            if (seg + 1 < pts.size()) pos = pts[seg];
        }
    }
    if (keep_tail) {
        const V& last = pts.back();
        if ((last - out.back()).norm() > 1e-12) out.push_back(last);
    }
    if (out.size() < 2) throw DeltaTooLarge("resample: no complete step fits the curve");
    return out;
}

}  // namespace

double polyline_length(const std::vector<Vec3>& pts) { return length_of(pts); }
double polyline_length(const std::vector<Vec2>& pts) { return length_of(pts); }

std::vector<Vec3> resample_points(const std::vector<Vec3>& pts, double delta_u, bool keep_tail) {
    return chord_resample(pts, delta_u, keep_tail);
}

Curve3D arclength_resample(const Curve3D& c, double delta_u) {
    validate(c);
    return Curve3D{chord_resample(c.points, delta_u, /*keep_tail=*/true)};
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& pts, double delta_u) {
    return chord_resample(pts, delta_u, /*keep_tail=*/true);
}

double distance_to_polyline(const Vec2& p, const std::vector<Vec2>& poly) {
    if (poly.empty()) throw EmptyPolyline("distance_to_polyline: empty polyline");
    if (poly.size() == 1) return (p - poly[0]).norm();
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
        const Vec2 a = poly[i];
        const Vec2 d = poly[i + 1] - a;
        const double len2 = d.squaredNorm();
        double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, (p - (a + t * d)).norm());
    }
    return best;
}

}  // namespace wirerecon
