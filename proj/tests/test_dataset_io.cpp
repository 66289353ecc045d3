#include <doctest.h>

#include <fstream>

#include "test_helpers.hpp"
#include "wirerecon/dataset_io.hpp"
#include "wirerecon/synthetic.hpp"

using namespace wirerecon;
using namespace wirerecon::io;

namespace {

VideoAnnotations sample_annotations() {
    VideoAnnotations va;
    va.video_id = "vid_001";
    va.guidewire_type = "angled";
    va.fluid = true;
    va.resolution = {1024, 1024};
    va.records.push_back({0, 'A', {Vec2(1.5, 2.25), Vec2(10.125, 20.5), Vec2(30, 40)}});
    va.records.push_back({0, 'B', {Vec2(5, 6), Vec2(7, 8)}});
    va.records.push_back({1, 'A', {Vec2(2, 3), Vec2(4, 5)}});
    return va;
}

}  // namespace

TEST_CASE("annotations: save/load round trip") {
    wrtest::TempDir dir("annotations_roundtrip");
    const auto path = dir.file("video.json");
    const VideoAnnotations va = sample_annotations();
    save_annotations(va, path);
    const VideoAnnotations back = load_annotations(path);
    CHECK(back.video_id == va.video_id);
    CHECK(back.guidewire_type == va.guidewire_type);
    CHECK(back.fluid == va.fluid);
    REQUIRE(back.records.size() == va.records.size());
    for (size_t i = 0; i < va.records.size(); ++i) {
        CHECK(back.records[i].frame_index == va.records[i].frame_index);
        CHECK(back.records[i].view_id == va.records[i].view_id);
        REQUIRE(back.records[i].polyline.size() == va.records[i].polyline.size());
        for (size_t k = 0; k < va.records[i].polyline.size(); ++k) {
            CHECK((back.records[i].polyline[k] - va.records[i].polyline[k]).norm() == 0.0);
        }
    }
}

TEST_CASE("annotations: records come back sorted by (frame, view)") {
    wrtest::TempDir dir("annotations_sorted");
    const auto path = dir.file("video.json");
    VideoAnnotations va = sample_annotations();
    std::swap(va.records[0], va.records[2]);  // scramble
    save_annotations(va, path);
    const VideoAnnotations back = load_annotations(path);
    CHECK(back.records[0].frame_index == 0);
    CHECK(back.records[0].view_id == 'A');
    CHECK(back.records[1].view_id == 'B');
    CHECK(back.records[2].frame_index == 1);
}

TEST_CASE("annotations: parse, schema, and invariant errors") {
    wrtest::TempDir dir("annotations_errors");
    const auto bad_json = dir.file("bad.json");
    {
        std::ofstream out(bad_json);
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_annotations(bad_json), ParseError);
    CHECK_THROWS_AS(load_annotations(dir.file("missing.json")), ParseError);

    const auto no_field = dir.file("nofield.json");
    {
        std::ofstream out(no_field);
        out << R"({"video_id":"v","guidewire_type":"angled","frames":[]})";
    }
    CHECK_THROWS_AS(load_annotations(no_field), SchemaError);

    const auto one_point = dir.file("onepoint.json");
    {
        std::ofstream out(one_point);
        out << R"({"video_id":"v","guidewire_type":"angled","fluid":false,
                   "frames":[{"frame":7,"view":"A","polyline":[[1,2]]}]})";
    }
    try {
        load_annotations(one_point);
        FAIL("expected InvariantError");
    } catch (const InvariantError& e) {
        // the message names the offending record
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
}

TEST_CASE("manifest: stats reproduce the dataset composition overview") {
    Manifest m;
    // composition: (angled, fluid) = 3664, (angled, dry) = 2472,
    // (straight, fluid) = 484, (straight, dry) = 2126
    auto add = [&](const std::string& id, const std::string& type, bool fluid, int frames) {
        m.videos.push_back({id, type, fluid, frames, id + ".json", "cams"});
    };
    add("v0", "angled", true, 2000);
    add("v1", "angled", true, 1664);
    add("v2", "angled", false, 2472);
    add("v3", "straight", true, 484);
    add("v4", "straight", false, 2000);
    add("v5", "straight", false, 126);

    const CompositionStats s = manifest_stats(m);
    CHECK(s.angled_fluid == 3664);
    CHECK(s.angled_dry == 2472);
    CHECK(s.straight_fluid == 484);
    CHECK(s.straight_dry == 2126);
    CHECK(s.total() == 8746);
    CHECK(s.angled() == 6136);
    CHECK(s.straight() == 2610);
    CHECK(s.fluid() == 4148);
    CHECK(s.dry() == 4598);
    CHECK(s.total() == s.angled_fluid + s.angled_dry + s.straight_fluid + s.straight_dry);
}

TEST_CASE("manifest: empty stats and validation errors") {
    const CompositionStats s = manifest_stats(Manifest{});
    CHECK(s.total() == 0);

    Manifest dup;
    dup.videos.push_back({"v0", "angled", true, 1, "a.json", "c"});
    dup.videos.push_back({"v0", "straight", false, 1, "b.json", "c"});
    CHECK_THROWS_AS(validate_manifest(dup, ".", false), InvariantError);

    wrtest::TempDir dir("manifest_paths");
    Manifest missing;
    missing.videos.push_back({"v0", "angled", true, 1, "nothere.json", "c"});
    CHECK_THROWS_AS(validate_manifest(missing, dir.path().string(), true), InvariantError);
}

TEST_CASE("manifest: save/load round trip") {
    wrtest::TempDir dir("manifest_roundtrip");
    Manifest m;
    m.videos.push_back({"v0", "angled", true, 20, "v0.json", "cams"});
    m.videos.push_back({"v1", "straight", false, 10, "v1.json", "cams"});
    const auto path = dir.file("manifest.json");
    save_manifest(m, path);
    const Manifest back = load_manifest(path);
    REQUIRE(back.videos.size() == 2);
    CHECK(back.videos[1].video_id == "v1");
    CHECK(back.videos[1].frame_count == 10);
    CHECK(back.videos[0].fluid);
    CHECK_FALSE(back.videos[1].fluid);
}

TEST_CASE("camera bundle: round trip preserves calibration and LWM field") {
    wrtest::TempDir dir("bundle_roundtrip");
    const auto tc = wrtest::make_test_camera();

    auto lwm = std::make_shared<calib::LwmModel>();
    lwm->neighborhood = 6;
    calib::LwmControlPoint cp;
    cp.center = Vec2(10, 20);
    cp.coef_x << 1, 2, 3, 4, 5, 6;
    cp.coef_y << 6, 5, 4, 3, 2, 1;
    cp.radius = 42.0;
    lwm->control_points.push_back(cp);

    const CameraParameters cam = make_camera(tc.K / tc.K(2, 2), tc.R, tc.t, lwm);
    const auto path = dir.file("camera_A.json");
    save_camera_bundle({"A", cam}, path);
    const CameraBundle back = load_camera_bundle(path);
    CHECK(back.view_id == "A");
    CHECK((back.camera.K - cam.K).norm() < 1e-12 * cam.K.norm());
    CHECK((back.camera.R - cam.R).norm() < 1e-12);
    CHECK((back.camera.t - cam.t).norm() < 1e-12 * cam.t.norm());
    CHECK((back.camera.P - cam.P).norm() < 1e-9 * cam.P.norm());
    REQUIRE(back.camera.distortion);
    CHECK((back.camera.distortion->control_points[0].coef_x - cp.coef_x).norm() == 0.0);
    CHECK(back.camera.distortion->control_points[0].radius == 42.0);
}

TEST_CASE("curve records: round trip") {
    wrtest::TempDir dir("curves_roundtrip");
    std::vector<CurveRecord> recs;
    recs.push_back({0, Curve3D{{Vec3(0, 0, 0), Vec3(1.25, 2.5, 3.75)}}});
    recs.push_back({1, Curve3D{{Vec3(4, 5, 6), Vec3(7, 8, 9), Vec3(10, 11, 12)}}});
    const auto path = dir.file("curves.json");
    save_curves(recs, path);
    const auto back = load_curves(path);
    REQUIRE(back.size() == 2);
    CHECK(back[1].frame == 1);
    CHECK((back[0].curve.points[1] - Vec3(1.25, 2.5, 3.75)).norm() == 0.0);
}

TEST_CASE("spherical curve records: round trip") {
    wrtest::TempDir dir("spherical_roundtrip");
    std::vector<SphericalCurveRecord> recs;
    repr::SphericalCurve sc;
    sc.tip = Vec3(1.5, -2.25, 3.0);
    sc.radius = 2.0;
    sc.offsets = {{0.1, -0.2}, {0.05, 0.3}};
    recs.push_back({4, sc});
    const auto path = dir.file("pred.json");
    save_spherical_curves(recs, path);
    const auto back = load_spherical_curves(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].frame == 4);
    CHECK((back[0].curve.tip - sc.tip).norm() == 0.0);
    CHECK(back[0].curve.radius == 2.0);
    REQUIRE(back[0].curve.offsets.size() == 2);
    CHECK(back[0].curve.offsets[1].second == 0.3);
    // identical decodes
    const Curve3D a = repr::decode(sc);
    const Curve3D b = repr::decode(back[0].curve);
    for (size_t i = 0; i < a.points.size(); ++i) {
        CHECK((a.points[i] - b.points[i]).norm() == 0.0);
    }
}

TEST_CASE("pgm: round trip at 8-bit resolution") {
    wrtest::TempDir dir("pgm_roundtrip");
    FrameTensor frame;
    frame.pixels.resize(16, 24);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 24; ++x) frame.pixels(y, x) = (y * 24 + x) % 256 / 255.0;
    }
    const auto path = dir.file("frame.pgm");
    save_pgm(frame, path);
    const FrameTensor back = load_pgm(path);
    REQUIRE(back.width() == 24);
    REQUIRE(back.height() == 16);
    CHECK((back.pixels - frame.pixels).cwiseAbs().maxCoeff() < 0.5 / 255.0 + 1e-12);
}

TEST_CASE("correspondences: round trip") {
    wrtest::TempDir dir("corr_roundtrip");
    CorrespondenceFile f;
    f.view_id = "B";
    f.undistortion.push_back({Vec2(1, 2), Vec2(1.1, 2.1)});
    f.projection.push_back({Vec3(10, 20, 30), Vec2(100.5, 200.25)});
    const auto path = dir.file("corr.json");
    save_correspondences(f, path);
    const CorrespondenceFile back = load_correspondences(path);
    CHECK(back.view_id == "B");
    REQUIRE(back.undistortion.size() == 1);
    REQUIRE(back.projection.size() == 1);
    CHECK((back.projection[0].image - Vec2(100.5, 200.25)).norm() == 0.0);
}
