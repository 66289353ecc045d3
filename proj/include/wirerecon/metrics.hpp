#pragma once

#include <vector>

#include "wirerecon/types.hpp"

namespace wirerecon::metrics {

/// Shape-error summary between a predicted and a ground-truth curve, all in
/// millimeters over arclength-aligned samples.
struct ShapeMetrics {
    double max_ed = 0.0;   // max pointwise distance
    double mete = 0.0;     // distance at the tip sample
    double mers = 0.0;     // mean pointwise distance
    double frechet = 0.0;  // discrete Frechet distance
};

/// Resamples both curves at step delta_u, truncates the longer to the common
/// sample count, and reports pointwise metrics plus the discrete Frechet
/// distance over the aligned polylines.
ShapeMetrics compare_shapes(const Curve3D& pred, const Curve3D& truth, double delta_u);

/// Discrete Frechet distance by dynamic programming over the coupling table.
double frechet_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace wirerecon::metrics
