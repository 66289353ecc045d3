#include "wirerecon/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "wirerecon/geometry.hpp"

namespace wirerecon::metrics {

double frechet_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw EmptyPolyline("frechet_distance: empty polyline");
    const size_t n = a.size();
    const size_t m = b.size();
    std::vector<double> prev(m), row(m);
    for (size_t j = 0; j < m; ++j) {
        const double d = (a[0] - b[j]).norm();
        prev[j] = j == 0 ? d : std::max(prev[j - 1], d);
    }
    for (size_t i = 1; i < n; ++i) {
        for (size_t j = 0; j < m; ++j) {
            const double d = (a[i] - b[j]).norm();
            double reach = prev[j];
            if (j > 0) reach = std::min(reach, std::min(prev[j - 1], row[j - 1]));
            row[j] = std::max(reach, d);
        }
        std::swap(prev, row);
    }
    return prev[m - 1];
}

ShapeMetrics compare_shapes(const Curve3D& pred, const Curve3D& truth, double delta_u) {
    validate(pred);
    validate(truth);
    if (!(delta_u > 0.0)) throw DomainError("compare_shapes: delta_u must be positive");

    std::vector<Vec3> p = arclength_resample(pred, delta_u).points;
    std::vector<Vec3> t = arclength_resample(truth, delta_u).points;
    const size_t n = std::min(p.size(), t.size());
    p.resize(n);
    t.resize(n);

    ShapeMetrics out;
    double sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double d = (p[k] - t[k]).norm();
        out.max_ed = std::max(out.max_ed, d);
        sum += d;
    }
    out.mete = (p[0] - t[0]).norm();
    out.mers = sum / static_cast<double>(n);
    out.frechet = frechet_distance(p, t);
    return out;
}

}  // namespace wirerecon::metrics
