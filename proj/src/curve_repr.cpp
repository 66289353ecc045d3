#include "wirerecon/curve_repr.hpp"

#include <cmath>

#include "wirerecon/geometry.hpp"

namespace wirerecon::repr {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
    // into (-pi, pi]
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}
}  // namespace

SphericalCurve encode(const Curve3D& curve, double radius) {
    validate(curve);
    if (!(radius > 0.0)) throw DomainError("encode: radius must be positive");
    if (polyline_length(curve.points) < radius) {
        throw RadiusTooLarge("encode: radius exceeds curve arclength");
    }
    const std::vector<Vec3> pts =
        resample_points(curve.points, radius, /*keep_tail=*/false);

    SphericalCurve sc;
    sc.tip = pts.front();
    sc.radius = radius;
    sc.offsets.reserve(pts.size() - 1);
    double prev_theta = 0.0;
    double prev_phi = 0.0;
    for (size_t k = 0; k + 1 < pts.size(); ++k) {
        const SphericalPoint dir = cartesian_to_spherical(pts[k + 1] - pts[k]);
        sc.offsets.emplace_back(dir.theta - prev_theta, wrap_angle(dir.phi - prev_phi));
        prev_theta = dir.theta;
        prev_phi = dir.phi;
    }
    return sc;
}

Curve3D decode(const SphericalCurve& sc) {
    if (!(sc.radius > 0.0)) throw DomainError("decode: radius must be positive");
    Curve3D out;
    out.points.reserve(sc.offsets.size() + 1);
    out.points.push_back(sc.tip);
    double theta = 0.0;
    double phi = 0.0;
    Vec3 p = sc.tip;
    for (const auto& [dtheta, dphi] : sc.offsets) {
        theta += dtheta;
        phi += dphi;
        p += sc.radius * unit_from_angles(theta, phi);
        out.points.push_back(p);
    }
    return out;
}

}  // namespace wirerecon::repr
