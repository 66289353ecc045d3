#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "wirerecon/curve_repr.hpp"
#include "wirerecon/geometry.hpp"
#include "wirerecon/synthetic.hpp"

using namespace wirerecon;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("encode: straight +z line gives all-zero offsets") {
    std::vector<Vec3> pts;
    for (int i = 0; i <= 10; ++i) pts.push_back(Vec3(0, 0, i));
    const repr::SphericalCurve sc = repr::encode(Curve3D{pts}, 2.0);
    REQUIRE(sc.length() == 5);
    for (const auto& [dt, dp] : sc.offsets) {
        CHECK(std::abs(dt) < 1e-12);
        CHECK(std::abs(dp) < 1e-12);
    }
    CHECK((sc.tip - Vec3(0, 0, 0)).norm() == 0.0);
}

TEST_CASE("encode: planar arc has constant delta_theta = chord angle") {
    // circle of radius R in the x-z plane; the tangent starts along +z and
    // tilts toward +x, so theta grows by one chord angle per step
    const double R = 40.0;
    const double r = 2.0;
    std::vector<Vec3> pts;
    for (int i = 0; i <= 4000; ++i) {
        const double a = 0.5 * kPi * i / 4000.0;  // quarter turn
        pts.push_back(Vec3(R - R * std::cos(a), 0.0, R * std::sin(a)));
    }
    const repr::SphericalCurve sc = repr::encode(Curve3D{pts}, r);
    REQUIRE(sc.length() >= 10);
    const double chord_angle = 2.0 * std::asin(r / (2.0 * R));
    for (int k = 1; k < sc.length(); ++k) {
        CHECK(sc.offsets[k].first == doctest::Approx(chord_angle).epsilon(1e-3));
        CHECK(std::abs(sc.offsets[k].second) < 1e-9);
    }
    CHECK(sc.offsets[0].first == doctest::Approx(chord_angle / 2.0).epsilon(1e-2));
}

TEST_CASE("decode: single-step examples") {
    repr::SphericalCurve a;
    a.tip = Vec3(0, 0, 0);
    a.radius = 1.0;
    a.offsets = {{0.0, 0.0}};
    const Curve3D ca = repr::decode(a);
    REQUIRE(ca.points.size() == 2);
    CHECK((ca.points[1] - Vec3(0, 0, 1)).norm() < 1e-15);

    repr::SphericalCurve b;
    b.tip = Vec3(1, 1, 1);
    b.radius = 2.0;
    b.offsets = {{kPi / 2, 0.0}};
    const Curve3D cb = repr::decode(b);
    REQUIRE(cb.points.size() == 2);
    CHECK((cb.points[1] - Vec3(3, 1, 1)).norm() < 1e-12);
}

TEST_CASE("round trip: decode(encode(c)) equals the chord resampling") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        synth::CurveGenParams params;
        params.seed = seed;
        const Curve3D curve = synth::gen_curve(params);
        const double r = 2.0;
        const std::vector<Vec3> expect = resample_points(curve.points, r, /*keep_tail=*/false);
        const Curve3D back = repr::decode(repr::encode(curve, r));
        REQUIRE(back.points.size() == expect.size());
        double worst = 0.0;
        for (size_t i = 0; i < expect.size(); ++i) {
            worst = std::max(worst, (back.points[i] - expect[i]).norm());
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("decode: consecutive points exactly radius apart") {
    synth::CurveGenParams params;
    params.seed = 123;
    const Curve3D curve = synth::gen_curve(params);
    const repr::SphericalCurve sc = repr::encode(curve, 2.0);
    const Curve3D dec = repr::decode(sc);
    for (size_t i = 0; i + 1 < dec.points.size(); ++i) {
        CHECK(std::abs((dec.points[i + 1] - dec.points[i]).norm() - sc.radius) < 1e-12);
    }
}

TEST_CASE("encode: errors") {
    std::vector<Vec3> tiny{Vec3(0, 0, 0), Vec3(0, 0, 1)};
    CHECK_THROWS_AS(repr::encode(Curve3D{tiny}, 5.0), RadiusTooLarge);
    CHECK_THROWS_AS(repr::encode(Curve3D{{Vec3(0, 0, 0)}}, 1.0), DegenerateCurve);
}

TEST_CASE("rigid rotation changes only the first offset for planar curves") {
    const double R = 50.0;
    const double r = 2.0;
    std::vector<Vec3> pts;
    for (int i = 0; i <= 4000; ++i) {
        const double a = 0.4 * kPi * i / 4000.0;
        pts.push_back(Vec3(R - R * std::cos(a), 0.0, R * std::sin(a)));
    }
    const repr::SphericalCurve sc0 = repr::encode(Curve3D{pts}, r);

    const Mat3 rot = wrtest::rotation_xyz(0.0, 0.35, 0.0);  // keeps the curve in the x-z plane
    std::vector<Vec3> rpts;
    for (const Vec3& p : pts) rpts.push_back(rot * p);
    const repr::SphericalCurve sc1 = repr::encode(Curve3D{rpts}, r);

    REQUIRE(sc0.length() == sc1.length());
    for (int k = 1; k < sc0.length(); ++k) {
        CHECK(sc0.offsets[k].first == doctest::Approx(sc1.offsets[k].first).epsilon(1e-6));
        CHECK(sc0.offsets[k].second == doctest::Approx(sc1.offsets[k].second).epsilon(1e-6));
    }
}

TEST_CASE("parameter count is below the Cartesian equivalent") {
    synth::CurveGenParams params;
    params.seed = 9;
    const repr::SphericalCurve sc = repr::encode(synth::gen_curve(params), 2.0);
    REQUIRE(sc.length() >= 2);
    const int spherical_params = 3 + 1 + 2 * sc.length();
    const int cartesian_params = 3 * (sc.length() + 1);
    CHECK(spherical_params < cartesian_params);
}
