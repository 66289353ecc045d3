#include "wirerecon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wirerecon/dataset_io.hpp"
#include "wirerecon/rng.hpp"

namespace wirerecon::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

SynthParams load_synth_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_synth_params: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + std::string(e.what()));
    }
    SynthParams p;
    try {
        if (j.contains("curve")) {
            const auto& c = j.at("curve");
            if (c.contains("n_control")) p.curve.n_control = c.at("n_control").get<int>();
            if (c.contains("length_min")) p.curve.length_range.first = c.at("length_min").get<double>();
            if (c.contains("length_max")) p.curve.length_range.second = c.at("length_max").get<double>();
            if (c.contains("curvature_scale")) p.curve.curvature_scale = c.at("curvature_scale").get<double>();
            if (c.contains("loop_probability")) p.curve.loop_probability = c.at("loop_probability").get<double>();
        }
        if (j.contains("baseline_angle")) p.baseline_angle = j.at("baseline_angle").get<double>();
        if (j.contains("distance")) p.distance = j.at("distance").get<double>();
        if (j.contains("focal_px")) p.focal_px = j.at("focal_px").get<double>();
        if (j.contains("image_size")) p.image_size = j.at("image_size").get<int>();
        if (j.contains("window")) p.window = j.at("window").get<int>();
        if (j.contains("region_center")) {
            const auto& r = j.at("region_center");
            p.region_center = Vec3(r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>());
        }
        if (j.contains("region_jitter")) p.region_jitter = j.at("region_jitter").get<double>();
        if (j.contains("drift_per_frame")) p.drift_per_frame = j.at("drift_per_frame").get<double>();
        if (j.contains("annotation_noise_px")) p.annotation_noise_px = j.at("annotation_noise_px").get<double>();
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + std::string(e.what()));
    }
    return p;
}

void save_synth_params(const SynthParams& p, const std::string& path) {
    json j;
    j["curve"] = {{"n_control", p.curve.n_control},
                  {"length_min", p.curve.length_range.first},
                  {"length_max", p.curve.length_range.second},
                  {"curvature_scale", p.curve.curvature_scale},
                  {"loop_probability", p.curve.loop_probability}};
    j["baseline_angle"] = p.baseline_angle;
    j["distance"] = p.distance;
    j["focal_px"] = p.focal_px;
    j["image_size"] = p.image_size;
    j["window"] = p.window;
    j["region_center"] = {p.region_center.x(), p.region_center.y(), p.region_center.z()};
    j["region_jitter"] = p.region_jitter;
    j["drift_per_frame"] = p.drift_per_frame;
    j["annotation_noise_px"] = p.annotation_noise_px;
    std::ofstream out(path);
    if (!out) throw InputError("save_synth_params: cannot open " + path);
    out << j.dump(2) << "\n";
}

namespace {

std::string video_name(int v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "video_%04d", v);
    return buf;
}

std::string frame_name(const std::string& video, int f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_frame_%04d.pgm", f);
    return video + buf;
}

}  // namespace

void generate_dataset(const SynthParams& params, int n_videos, int n_frames,
                      std::uint64_t seed, const std::string& out_dir) {
    if (n_videos < 1 || n_frames < 1) {
        throw DomainError("generate_dataset: videos and frames must be >= 1");
    }
    fs::create_directories(out_dir);
    const Vec2 pp(params.image_size / 2.0, params.image_size / 2.0);
    const recon::StereoRig rig =
        synth::make_camera_pair(params.baseline_angle, params.distance, params.focal_px, pp);

    io::save_camera_bundle({"A", rig.cam_a}, (fs::path(out_dir) / "cameras_A.json").string());
    io::save_camera_bundle({"B", rig.cam_b}, (fs::path(out_dir) / "cameras_B.json").string());

    io::Manifest manifest;
    for (int v = 0; v < n_videos; ++v) {
        Rng place(seed * 1000003 + static_cast<std::uint64_t>(v) * 2 + 1);
        std::vector<synth::SyntheticSample> samples;
        // A draw occasionally projects outside the frame; redraw with a
        // derived seed until it fits.
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 64) throw OutOfBounds("generate_dataset: cannot fit curve in frame");
            synth::CurveGenParams cp = params.curve;
            cp.seed = seed * 7919 + static_cast<std::uint64_t>(v) * 131 + attempt;
            const Curve3D base = synth::gen_curve(cp);
            const Vec3 tip = params.region_center +
                             Vec3(place.uniform(-1, 1), place.uniform(-1, 1), place.uniform(-1, 1)) *
                                 params.region_jitter;
            Vec3 drift(place.normal(), place.normal(), place.normal());
            if (drift.norm() > 0) drift = drift.normalized() * params.drift_per_frame;
            const auto trajectory = synth::make_trajectory(base, n_frames, tip, drift);
            synth::RenderConfig rc;
            rc.image_size = params.image_size;
            rc.window = params.window;
            rc.annotation_noise_px = params.annotation_noise_px;
            rc.seed = cp.seed + 17;
            try {
                samples = synth::render_sequence(trajectory, rig, rc);
                break;
            } catch (const OutOfBounds&) {
                continue;
            }
        }

        const std::string vid = video_name(v);
        io::VideoAnnotations va;
        va.video_id = vid;
        va.guidewire_type = v % 2 == 0 ? "angled" : "straight";
        va.fluid = (v / 2) % 2 == 0;
        va.resolution = {params.image_size, params.image_size};
        std::vector<io::CurveRecord> truths;
        for (int f = 0; f < n_frames; ++f) {
            const auto& s = samples[f];
            io::AnnotationRecord ra{f, 'A', s.poly_a.points};
            io::AnnotationRecord rb{f, 'B', s.poly_b.points};
            va.records.push_back(std::move(ra));
            va.records.push_back(std::move(rb));
            truths.push_back({f, s.truth});
            io::save_pgm(s.frames_a.back(), (fs::path(out_dir) / frame_name(vid, f)).string());
        }
        io::save_annotations(va, (fs::path(out_dir) / (vid + ".json")).string());
        io::save_curves(truths, (fs::path(out_dir) / (vid + "_truth.json")).string());

        io::ManifestEntry entry;
        entry.video_id = vid;
        entry.guidewire_type = va.guidewire_type;
        entry.fluid = va.fluid;
        entry.frame_count = n_frames;
        entry.annotation_path = vid + ".json";
        entry.camera_bundle_path = "cameras";
        manifest.videos.push_back(std::move(entry));
    }
    io::save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    save_synth_params(params, (fs::path(out_dir) / "synth_params.json").string());
}

std::vector<DatasetSample> load_dataset(const std::string& dir, int window, Split split) {
    if (window < 1) throw DomainError("load_dataset: window must be >= 1");
    const io::Manifest manifest = io::load_manifest((fs::path(dir) / "manifest.json").string());
    io::validate_manifest(manifest, dir);

    std::vector<DatasetSample> out;
    const size_t n_videos = manifest.videos.size();
    for (size_t v = 0; v < n_videos; ++v) {
        // every fifth video is held out; tiny datasets hold out the last one
        const bool is_val = v % 5 == 4 || (n_videos < 5 && v + 1 == n_videos);
        if (split == Split::kTrain && is_val) continue;
        if (split == Split::kVal && !is_val) continue;

        const auto& entry = manifest.videos[v];
        const auto truths =
            io::load_curves((fs::path(dir) / (entry.video_id + "_truth.json")).string());
        if (static_cast<int>(truths.size()) != entry.frame_count) {
            throw InvariantError("load_dataset: truth count mismatch for " + entry.video_id);
        }
        std::vector<FrameTensor> frames;
        frames.reserve(entry.frame_count);
        for (int f = 0; f < entry.frame_count; ++f) {
            frames.push_back(io::load_pgm((fs::path(dir) / frame_name(entry.video_id, f)).string()));
        }
        for (int t = window - 1; t < entry.frame_count; ++t) {
            DatasetSample s;
            s.frames.assign(frames.begin() + (t - window + 1), frames.begin() + t + 1);
            s.truth = truths[t].curve;
            s.frame_index = t;
            s.video_id = entry.video_id;
            out.push_back(std::move(s));
        }
    }
    if (out.empty()) throw EmptyDataset("load_dataset: no samples in " + dir);
    return out;
}

}  // namespace wirerecon::pipeline
