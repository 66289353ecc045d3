#pragma once

#include <vector>

#include "wirerecon/types.hpp"

namespace wirerecon::repr {

/// Tip-anchored curve encoding: a fixed step radius and a sequence of
/// cumulative angular displacements (delta_theta, delta_phi). Each decoded
/// segment has Euclidean length exactly `radius`.
struct SphericalCurve {
    Vec3 tip = Vec3::Zero();
    double radius = 0.0;
    std::vector<std::pair<double, double>> offsets;  // (delta_theta, delta_phi)

    int length() const { return static_cast<int>(offsets.size()); }
};

/// Encodes a curve as tip + angular offsets at chord step `radius`.
/// The curve is resampled so consecutive points are exactly `radius` apart;
/// a final partial segment shorter than `radius` cannot be represented by the
/// fixed step and is dropped. The first offset carries the absolute
/// first-segment direction (the running angles start at (0, 0)).
SphericalCurve encode(const Curve3D& curve, double radius);

/// Rebuilds the point sequence: p0 = tip, p(k+1) = p(k) + radius * u(theta_k,
/// phi_k) with (theta_k, phi_k) the cumulative offset sums. Output has
/// length()+1 points.
Curve3D decode(const SphericalCurve& sc);

}  // namespace wirerecon::repr
