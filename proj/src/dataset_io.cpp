#include "wirerecon/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace wirerecon::io {

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec2 json_vec2(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw SchemaError(what + ": expected [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 json_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw SchemaError(what + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(where + ": field '" + key + "' has the wrong type");
    }
}

json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    json arr = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
    }
    return arr;
}

void fill_matrix(const json& arr, Eigen::Ref<Eigen::MatrixXd> m, const std::string& what) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != m.rows() * m.cols()) {
        throw SchemaError(what + ": wrong element count");
    }
    int k = 0;
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) m(r, c) = arr[k++].get<double>();
    }
}

}  // namespace

VideoAnnotations load_annotations(const std::string& path) {
    const json j = read_json(path);
    VideoAnnotations va;
    va.video_id = require<std::string>(j, "video_id", path);
    va.guidewire_type = require<std::string>(j, "guidewire_type", path);
    if (va.guidewire_type != "angled" && va.guidewire_type != "straight") {
        throw SchemaError(path + ": guidewire_type must be angled|straight");
    }
    va.fluid = require<bool>(j, "fluid", path);
    if (j.contains("resolution")) {
        const auto r = j.at("resolution");
        if (!r.is_array() || r.size() != 2) throw SchemaError(path + ": bad resolution");
        va.resolution = {r[0].get<int>(), r[1].get<int>()};
    }
    if (!j.contains("frames") || !j.at("frames").is_array()) {
        throw SchemaError(path + ": missing frames array");
    }
    for (const auto& f : j.at("frames")) {
        AnnotationRecord rec;
        rec.frame_index = require<int>(f, "frame", path);
        const auto view = require<std::string>(f, "view", path);
        if (view != "A" && view != "B") {
            throw SchemaError(path + ": frame " + std::to_string(rec.frame_index) +
                              ": view must be A or B");
        }
        rec.view_id = view[0];
        if (!f.contains("polyline") || !f.at("polyline").is_array()) {
            throw SchemaError(path + ": frame " + std::to_string(rec.frame_index) +
                              ": missing polyline");
        }
        for (const auto& p : f.at("polyline")) {
            rec.polyline.push_back(json_vec2(p, path + ": polyline point"));
        }
        if (rec.polyline.size() < 2) {
            throw InvariantError(path + ": frame " + std::to_string(rec.frame_index) + " view " +
                                 view + ": polyline needs at least 2 points");
        }
        for (size_t i = 1; i < rec.polyline.size(); ++i) {
            if ((rec.polyline[i] - rec.polyline[i - 1]).norm() == 0.0) {
                throw InvariantError(path + ": frame " + std::to_string(rec.frame_index) +
                                     " view " + view + ": repeated consecutive point");
            }
        }
        for (const Vec2& p : rec.polyline) {
            if (!is_finite(p)) {
                throw InvariantError(path + ": frame " + std::to_string(rec.frame_index) +
                                     " view " + view + ": non-finite point");
            }
        }
        va.records.push_back(std::move(rec));
    }
    std::sort(va.records.begin(), va.records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.frame_index, a.view_id) < std::tie(b.frame_index, b.view_id);
    });
    return va;
}

void save_annotations(const VideoAnnotations& va, const std::string& path) {
    json j;
    j["schema"] = 1;
    j["video_id"] = va.video_id;
    j["guidewire_type"] = va.guidewire_type;
    j["fluid"] = va.fluid;
    j["resolution"] = {va.resolution[0], va.resolution[1]};
    json frames = json::array();
    for (const auto& rec : va.records) {
        json f;
        f["frame"] = rec.frame_index;
        f["view"] = std::string(1, rec.view_id);
        json poly = json::array();
        for (const Vec2& p : rec.polyline) poly.push_back(vec2_json(p));
        f["polyline"] = poly;
        frames.push_back(f);
    }
    j["frames"] = frames;
    write_json(j, path);
}

Manifest load_manifest(const std::string& path) {
    const json j = read_json(path);
    Manifest m;
    if (!j.contains("videos") || !j.at("videos").is_array()) {
        throw SchemaError(path + ": missing videos array");
    }
    for (const auto& v : j.at("videos")) {
        ManifestEntry e;
        e.video_id = require<std::string>(v, "video_id", path);
        e.guidewire_type = require<std::string>(v, "guidewire_type", path);
        if (e.guidewire_type != "angled" && e.guidewire_type != "straight") {
            throw SchemaError(path + ": video " + e.video_id + ": bad guidewire_type");
        }
        e.fluid = require<bool>(v, "fluid", path);
        e.frame_count = require<int>(v, "frame_count", path);
        if (e.frame_count < 0) throw InvariantError(path + ": video " + e.video_id + ": negative frame_count");
        e.annotation_path = require<std::string>(v, "annotation_path", path);
        e.camera_bundle_path = require<std::string>(v, "camera_bundle_path", path);
        m.videos.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
    json j;
    j["schema"] = 1;
    json vids = json::array();
    for (const auto& e : manifest.videos) {
        vids.push_back({{"video_id", e.video_id},
                        {"guidewire_type", e.guidewire_type},
                        {"fluid", e.fluid},
                        {"frame_count", e.frame_count},
                        {"annotation_path", e.annotation_path},
                        {"camera_bundle_path", e.camera_bundle_path}});
    }
    j["videos"] = vids;
    write_json(j, path);
}

void validate_manifest(const Manifest& manifest, const std::string& base_dir, bool check_paths) {
    std::set<std::string> ids;
    for (const auto& e : manifest.videos) {
        if (!ids.insert(e.video_id).second) {
            throw InvariantError("manifest: duplicate video_id " + e.video_id);
        }
        if (check_paths) {
            const auto ann = std::filesystem::path(base_dir) / e.annotation_path;
            if (!std::filesystem::exists(ann)) {
                throw InvariantError("manifest: video " + e.video_id + ": missing annotation file " +
                                     ann.string());
            }
        }
    }
}

CompositionStats manifest_stats(const Manifest& manifest) {
    CompositionStats s;
    for (const auto& e : manifest.videos) {
        const bool angled = e.guidewire_type == "angled";
        if (angled && e.fluid) s.angled_fluid += e.frame_count;
        if (angled && !e.fluid) s.angled_dry += e.frame_count;
        if (!angled && e.fluid) s.straight_fluid += e.frame_count;
        if (!angled && !e.fluid) s.straight_dry += e.frame_count;
    }
    return s;
}

CameraBundle load_camera_bundle(const std::string& path) {
    const json j = read_json(path);
    CameraBundle b;
    Mat3 K, R;
    Vec3 t;
    std::shared_ptr<const calib::LwmModel> lwm;
    try {
        b.view_id = require<std::string>(j, "view_id", path);
        fill_matrix(j.at("K"), K, path + ": K");
        fill_matrix(j.at("R"), R, path + ": R");
        t = json_vec3(j.at("t"), path + ": t");

        if (j.contains("lwm") && !j.at("lwm").is_null()) {
            auto model = std::make_shared<calib::LwmModel>();
            const auto& lj = j.at("lwm");
            model->neighborhood = require<int>(lj, "neighborhood", path);
            for (const auto& cj : lj.at("control_points")) {
                calib::LwmControlPoint cp;
                cp.center = json_vec2(cj.at("center"), path + ": lwm center");
                fill_matrix(cj.at("coef_x"), cp.coef_x, path + ": coef_x");
                fill_matrix(cj.at("coef_y"), cp.coef_y, path + ": coef_y");
                cp.radius = require<double>(cj, "radius", path);
                model->control_points.push_back(std::move(cp));
            }
            lwm = std::move(model);
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
    try {
        b.camera = make_camera(K, R, t, std::move(lwm));
    } catch (const Error& e) {
        throw InvariantError(path + ": " + e.what());
    }
    if (j.contains("P")) {
        Mat34 P;
        fill_matrix(j.at("P"), P, path + ": P");
        Mat34 diff = P / P.block<1, 3>(2, 0).norm() - b.camera.P / b.camera.P.block<1, 3>(2, 0).norm();
        Mat34 sum = P / P.block<1, 3>(2, 0).norm() + b.camera.P / b.camera.P.block<1, 3>(2, 0).norm();
        if (std::min(diff.norm(), sum.norm()) > 1e-6 * b.camera.P.norm()) {
            throw InvariantError(path + ": stored P is inconsistent with K[R|t]");
        }
    }
    return b;
}

void save_camera_bundle(const CameraBundle& bundle, const std::string& path) {
    json j;
    j["schema"] = 1;
    j["view_id"] = bundle.view_id;
    j["K"] = matrix_json(bundle.camera.K);
    j["R"] = matrix_json(bundle.camera.R);
    j["t"] = vec3_json(bundle.camera.t);
    j["P"] = matrix_json(bundle.camera.P);
    if (bundle.camera.distortion) {
        json lj;
        lj["neighborhood"] = bundle.camera.distortion->neighborhood;
        json cps = json::array();
        for (const auto& cp : bundle.camera.distortion->control_points) {
            cps.push_back({{"center", vec2_json(cp.center)},
                           {"coef_x", matrix_json(cp.coef_x)},
                           {"coef_y", matrix_json(cp.coef_y)},
                           {"radius", cp.radius}});
        }
        lj["control_points"] = cps;
        j["lwm"] = lj;
    } else {
        j["lwm"] = nullptr;
    }
    write_json(j, path);
}

CorrespondenceFile load_correspondences(const std::string& path) {
    const json j = read_json(path);
    CorrespondenceFile f;
    try {
        f.view_id = require<std::string>(j, "view_id", path);
        if (j.contains("undistortion")) {
            for (const auto& c : j.at("undistortion")) {
                f.undistortion.push_back({json_vec2(c.at("distorted"), path + ": distorted"),
                                          json_vec2(c.at("true"), path + ": true")});
            }
        }
        if (j.contains("projection")) {
            for (const auto& c : j.at("projection")) {
                f.projection.push_back({json_vec3(c.at("world"), path + ": world"),
                                        json_vec2(c.at("image"), path + ": image")});
            }
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return f;
}

void save_correspondences(const CorrespondenceFile& file, const std::string& path) {
    json j;
    j["schema"] = 1;
    j["view_id"] = file.view_id;
    json und = json::array();
    for (const auto& c : file.undistortion) {
        und.push_back({{"distorted", vec2_json(c.distorted)}, {"true", vec2_json(c.true_pos)}});
    }
    j["undistortion"] = und;
    json proj = json::array();
    for (const auto& c : file.projection) {
        proj.push_back({{"world", vec3_json(c.world)}, {"image", vec2_json(c.image)}});
    }
    j["projection"] = proj;
    write_json(j, path);
}

std::vector<CurveRecord> load_curves(const std::string& path) {
    const json j = read_json(path);
    if (!j.is_array()) throw SchemaError(path + ": expected an array of curve records");
    std::vector<CurveRecord> out;
    try {
        for (const auto& r : j) {
            CurveRecord rec;
            rec.frame = require<int>(r, "frame", path);
            for (const auto& p : r.at("points")) {
                rec.curve.points.push_back(json_vec3(p, path + ": point"));
            }
            out.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return out;
}

void save_curves(const std::vector<CurveRecord>& curves, const std::string& path) {
    json arr = json::array();
    for (const auto& rec : curves) {
        json pts = json::array();
        for (const Vec3& p : rec.curve.points) pts.push_back(vec3_json(p));
        arr.push_back({{"frame", rec.frame}, {"points", pts}});
    }
    write_json(arr, path);
}

CurveRecord load_curve(const std::string& path) {
    const json j = read_json(path);
    CurveRecord rec;
    try {
        rec.frame = require<int>(j, "frame", path);
        for (const auto& p : j.at("points")) {
            rec.curve.points.push_back(json_vec3(p, path + ": point"));
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return rec;
}

void save_curve(const CurveRecord& record, const std::string& path) {
    json pts = json::array();
    for (const Vec3& p : record.curve.points) pts.push_back(vec3_json(p));
    write_json(json{{"frame", record.frame}, {"points", pts}}, path);
}

std::vector<SphericalCurveRecord> load_spherical_curves(const std::string& path) {
    const json j = read_json(path);
    if (!j.is_array()) throw SchemaError(path + ": expected an array of prediction records");
    std::vector<SphericalCurveRecord> out;
    try {
        for (const auto& r : j) {
            SphericalCurveRecord rec;
            rec.frame = require<int>(r, "frame", path);
            rec.curve.tip = json_vec3(r.at("tip"), path + ": tip");
            rec.curve.radius = require<double>(r, "r", path);
            for (const auto& o : r.at("offsets")) {
                if (!o.is_array() || o.size() != 2) {
                    throw SchemaError(path + ": offsets entries must be [dtheta, dphi]");
                }
                rec.curve.offsets.emplace_back(o[0].get<double>(), o[1].get<double>());
            }
            out.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return out;
}

void save_spherical_curves(const std::vector<SphericalCurveRecord>& records,
                           const std::string& path) {
    json arr = json::array();
    for (const auto& rec : records) {
        json offs = json::array();
        for (const auto& [dtheta, dphi] : rec.curve.offsets) {
            offs.push_back(json::array({dtheta, dphi}));
        }
        arr.push_back({{"frame", rec.frame},
                       {"tip", vec3_json(rec.curve.tip)},
                       {"r", rec.curve.radius},
                       {"offsets", offs}});
    }
    write_json(arr, path);
}

void save_pgm(const FrameTensor& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("save_pgm: cannot open " + path);
    out << "P5\n" << frame.width() << " " << frame.height() << "\n255\n";
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            const double v = std::clamp(frame.pixels(y, x), 0.0, 1.0);
            out.put(static_cast<char>(std::lround(v * 255.0)));
        }
    }
}

FrameTensor load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("load_pgm: cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) {
        throw ParseError("load_pgm: unsupported PGM header in " + path);
    }
    in.get();  // single whitespace after header
    FrameTensor frame;
    frame.pixels.resize(h, w);
    std::vector<char> buf(static_cast<size_t>(w) * h);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in) throw ParseError("load_pgm: truncated pixel data in " + path);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            frame.pixels(y, x) = static_cast<unsigned char>(buf[y * w + x]) / 255.0;
        }
    }
    return frame;
}

}  // namespace wirerecon::io
