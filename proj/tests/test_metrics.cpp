#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "test_helpers.hpp"
#include "wirerecon/geometry.hpp"
#include "wirerecon/metrics.hpp"
#include "wirerecon/rng.hpp"
#include "wirerecon/synthetic.hpp"

using namespace wirerecon;

namespace {

// Independent discrete Frechet oracle: memoized recursion straight from the
// coupling definition.
double frechet_oracle(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    std::map<std::pair<int, int>, double> memo;
    std::function<double(int, int)> go = [&](int i, int j) -> double {
        const auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        const double d = (a[i] - b[j]).norm();
        double v;
        if (i == 0 && j == 0) {
            v = d;
        } else if (i == 0) {
            v = std::max(go(0, j - 1), d);
        } else if (j == 0) {
            v = std::max(go(i - 1, 0), d);
        } else {
            v = std::max(std::min({go(i - 1, j), go(i - 1, j - 1), go(i, j - 1)}), d);
        }
        memo[key] = v;
        return v;
    };
    return go(static_cast<int>(a.size()) - 1, static_cast<int>(b.size()) - 1);
}

Curve3D random_curve(std::uint64_t seed) {
    synth::CurveGenParams p;
    p.seed = seed;
    return synth::gen_curve(p);
}

}  // namespace

TEST_CASE("compare_shapes: identical curves give zeros") {
    const Curve3D c = random_curve(2);
    const metrics::ShapeMetrics m = metrics::compare_shapes(c, c, 2.0);
    CHECK(m.max_ed < 1e-9);
    CHECK(m.mete < 1e-9);
    CHECK(m.mers < 1e-9);
    CHECK(m.frechet < 1e-9);
}

TEST_CASE("compare_shapes: uniform translation gives the offset in all metrics") {
    const Curve3D truth = random_curve(3);
    Curve3D pred = truth;
    for (Vec3& p : pred.points) p += Vec3(0, 0, 1);
    const metrics::ShapeMetrics m = metrics::compare_shapes(pred, truth, 2.0);
    CHECK(m.max_ed == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.mete == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.mers == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.frechet == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compare_shapes: brute-force oracle over random pairs") {
    Rng rng(19);
    for (int trial = 0; trial < 25; ++trial) {
        const Curve3D a = random_curve(100 + trial);
        const Curve3D b = random_curve(200 + trial);
        const double du = 2.0;
        const metrics::ShapeMetrics m = metrics::compare_shapes(a, b, du);

        // independent pointwise loop over the same resampling
        std::vector<Vec3> pa = arclength_resample(a, du).points;
        std::vector<Vec3> pb = arclength_resample(b, du).points;
        const size_t n = std::min(pa.size(), pb.size());
        pa.resize(n);
        pb.resize(n);
        double maxd = 0.0, sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double d = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double diff = pa[i][k] - pb[i][k];
                d += diff * diff;
            }
            d = std::sqrt(d);
            maxd = std::max(maxd, d);
            sum += d;
        }
        CHECK(std::abs(m.max_ed - maxd) < 1e-9);
        CHECK(std::abs(m.mers - sum / n) < 1e-9);
        CHECK(std::abs(m.mete - (pa[0] - pb[0]).norm()) < 1e-9);
        CHECK(std::abs(m.frechet - frechet_oracle(pa, pb)) < 1e-9);
        CHECK(m.max_ed >= m.mers);
    }
}

TEST_CASE("frechet_distance: trivial and error cases") {
    std::vector<Vec3> a{{0, 0, 0}, {1, 0, 0}};
    std::vector<Vec3> b{{0, 1, 0}, {1, 1, 0}};
    CHECK(metrics::frechet_distance(a, a) == doctest::Approx(0.0));
    CHECK(metrics::frechet_distance(a, b) == doctest::Approx(1.0));
    CHECK_THROWS_AS(metrics::frechet_distance({}, a), EmptyPolyline);
}

TEST_CASE("frechet_distance: symmetric and matches the recursive oracle") {
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Vec3> a, b;
        for (int i = 0; i < 10; ++i) {
            a.push_back(Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)));
            b.push_back(Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)));
        }
        const double ab = metrics::frechet_distance(a, b);
        CHECK(ab == doctest::Approx(frechet_oracle(a, b)).epsilon(1e-12));
        CHECK(ab == doctest::Approx(metrics::frechet_distance(b, a)).epsilon(1e-12));
        // lower bound: every coupling includes the endpoints
        const double endpoint_bound =
            std::max((a.front() - b.front()).norm(), (a.back() - b.back()).norm());
        CHECK(ab >= endpoint_bound - 1e-12);
    }
}

TEST_CASE("metrics: invariant under joint rigid transform") {
    const Curve3D a = random_curve(31);
    const Curve3D b = random_curve(32);
    const metrics::ShapeMetrics m0 = metrics::compare_shapes(a, b, 2.0);

    const Mat3 rot = wrtest::rotation_xyz(0.3, -0.7, 1.1);
    const Vec3 shift(40, -20, 15);
    auto transform = [&](const Curve3D& c) {
        Curve3D out;
        for (const Vec3& p : c.points) out.points.push_back(rot * p + shift);
        return out;
    };
    const metrics::ShapeMetrics m1 = metrics::compare_shapes(transform(a), transform(b), 2.0);
    CHECK(std::abs(m0.max_ed - m1.max_ed) < 1e-9);
    CHECK(std::abs(m0.mete - m1.mete) < 1e-9);
    CHECK(std::abs(m0.mers - m1.mers) < 1e-9);
    CHECK(std::abs(m0.frechet - m1.frechet) < 1e-9);
}
