#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "wirerecon/calibration.hpp"
#include "wirerecon/dataset_io.hpp"
#include "wirerecon/geometry.hpp"
#include "wirerecon/metrics.hpp"
#include "wirerecon/pipeline.hpp"
#include "wirerecon/predictor.hpp"
#include "wirerecon/reconstruction.hpp"
#include "wirerecon/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wirerecon;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 2 usage/input, 3 data/geometry, 4 numerical
constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

enum class LogLevel { kDebug = 0, kInfo, kWarn, kError };
LogLevel g_log_level = LogLevel::kInfo;

void log_msg(LogLevel level, const std::string& msg) {
    static const char* names[] = {"debug", "info", "warn", "error"};
    if (level >= g_log_level) {
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
    }
}

LogLevel parse_level(const std::string& s) {
    if (s == "debug") return LogLevel::kDebug;
    if (s == "info") return LogLevel::kInfo;
    if (s == "warn") return LogLevel::kWarn;
    if (s == "error") return LogLevel::kError;
    throw InputError("unknown log level: " + s);
}

void write_run_sidecar(const fs::path& dir, const std::string& command,
                       const std::vector<std::string>& args, std::uint64_t seed) {
    json j;
    j["tool"] = "wirerecon";
    j["version"] = kVersion;
    j["command"] = command;
    j["args"] = args;
    j["seed"] = seed;
    std::ofstream out(dir / "run.json");
    out << j.dump(2) << "\n";
}

Polyline2D undistorted(const Polyline2D& poly, const CameraParameters& cam) {
    if (!cam.distortion) return poly;
    Polyline2D out = poly;
    for (Vec2& p : out.points) p = calib::undistort_point(*cam.distortion, p);
    return out;
}

int run_calibrate(const std::string& corr_path, const std::string& view,
                  double ransac_threshold, int ransac_iterations, int lwm_neighborhood,
                  std::uint64_t seed, const fs::path& out_path) {
    const io::CorrespondenceFile file = io::load_correspondences(corr_path);
    if (file.view_id != view) {
        log_msg(LogLevel::kWarn, "correspondence file declares view " + file.view_id +
                                     ", requested " + view);
    }

    std::shared_ptr<const calib::LwmModel> lwm;
    if (!file.undistortion.empty()) {
        lwm = std::make_shared<calib::LwmModel>(
            calib::fit_lwm(file.undistortion, lwm_neighborhood));
        log_msg(LogLevel::kInfo, "fitted LWM field over " +
                                     std::to_string(file.undistortion.size()) + " markers");
    }

    std::vector<calib::Correspondence3D2D> cs = file.projection;
    if (cs.empty()) throw SchemaError(corr_path + ": no projection correspondences");
    if (lwm) {
        for (auto& c : cs) c.image = calib::undistort_point(*lwm, c.image);
    }

    calib::RansacConfig cfg;
    cfg.iterations = ransac_iterations;
    cfg.inlier_threshold = ransac_threshold;
    cfg.seed = seed;
    auto [P, mask] = calib::ransac_projection(cs, cfg);

    std::vector<calib::Correspondence3D2D> inliers;
    for (size_t i = 0; i < cs.size(); ++i) {
        if (mask[i]) inliers.push_back(cs[i]);
    }
    const Mat34 refined = calib::refine_projection(P, inliers);
    const calib::DecomposedCamera dec = calib::decompose_projection(refined);
    const CameraParameters cam = make_camera(dec.K, dec.R, dec.t, lwm);

    io::save_camera_bundle({view, cam}, out_path.string());
    const double rms = calib::rms_reprojection_error(refined, inliers);
    std::cout << "view=" << view << " inliers=" << inliers.size() << "/" << cs.size()
              << " rms_px=" << report::format_double(rms) << "\n";
    return kExitOk;
}

int run_reconstruct(const std::string& ann_path, const std::string& cam_a_path,
                    const std::string& cam_b_path, double delta_u, double delta_u_px,
                    double smooth_px, int jobs, const fs::path& out_dir) {
    const io::VideoAnnotations va = io::load_annotations(ann_path);
    const io::CameraBundle ba = io::load_camera_bundle(cam_a_path);
    const io::CameraBundle bb = io::load_camera_bundle(cam_b_path);
    const recon::StereoRig rig = recon::make_rig(ba.camera, bb.camera);

    std::map<int, const io::AnnotationRecord*> view_a, view_b;
    for (const auto& rec : va.records) {
        (rec.view_id == 'A' ? view_a : view_b)[rec.frame_index] = &rec;
    }
    std::vector<int> frames;
    for (const auto& [f, rec] : view_a) {
        if (view_b.count(f)) frames.push_back(f);
    }
    if (frames.empty()) {
        log_msg(LogLevel::kError, ann_path + ": no paired view");
        return kExitData;
    }

    fs::create_directories(out_dir);

    struct FrameResult {
        int frame;
        Curve3D curve;
        recon::ReprojectionProfile profile;
        std::string error;
    };
    auto process = [&](int f) {
        FrameResult r;
        r.frame = f;
        try {
            Polyline2D pa{view_a.at(f)->polyline, 'A', f};
            Polyline2D pb{view_b.at(f)->polyline, 'B', f};
            pa = undistorted(pa, rig.cam_a);
            pb = undistorted(pb, rig.cam_b);
            r.curve = recon::reconstruct_curve(rig, pa, pb, delta_u, delta_u_px, smooth_px);
            r.profile = recon::reprojection_profile(rig, r.curve, pa, pb);
        } catch (const Error& e) {
            r.error = e.what();
        }
        return r;
    };

    std::vector<FrameResult> results(frames.size());
    if (jobs <= 1) {
        for (size_t i = 0; i < frames.size(); ++i) results[i] = process(frames[i]);
    } else {
        std::vector<std::future<FrameResult>> futs(frames.size());
        size_t next = 0;
        while (next < frames.size()) {
            const size_t batch = std::min<size_t>(jobs, frames.size() - next);
            for (size_t k = 0; k < batch; ++k) {
                futs[next + k] = std::async(std::launch::async, process, frames[next + k]);
            }
            for (size_t k = 0; k < batch; ++k) results[next + k] = futs[next + k].get();
            next += batch;
        }
    }

    std::ostringstream csv;
    csv << "frame,index,err_a_px,err_b_px\n";
    std::vector<double> sum_a, sum_b, count;
    std::vector<int> failed;
    for (const auto& r : results) {
        if (!r.error.empty()) {
            failed.push_back(r.frame);
            log_msg(LogLevel::kWarn, "frame " + std::to_string(r.frame) + ": " + r.error);
            continue;
        }
        char name[32];
        std::snprintf(name, sizeof(name), "curve_%04d.json", r.frame);
        io::save_curve({r.frame, r.curve}, (out_dir / name).string());
        for (size_t i = 0; i < r.profile.per_index_error_a.size(); ++i) {
            csv << r.frame << "," << i << "," << report::format_double(r.profile.per_index_error_a[i])
                << "," << report::format_double(r.profile.per_index_error_b[i]) << "\n";
            if (sum_a.size() <= i) {
                sum_a.resize(i + 1, 0.0);
                sum_b.resize(i + 1, 0.0);
                count.resize(i + 1, 0.0);
            }
            sum_a[i] += r.profile.per_index_error_a[i];
            sum_b[i] += r.profile.per_index_error_b[i];
            count[i] += 1.0;
        }
    }
    report::write_text_file((out_dir / "profiles.csv").string(), csv.str());

    report::Series sa{"camera A", {}, {}}, sb{"camera B", {}, {}};
    for (size_t i = 0; i < sum_a.size(); ++i) {
        sa.x.push_back(static_cast<double>(i));
        sa.y.push_back(sum_a[i] / count[i]);
        sb.x.push_back(static_cast<double>(i));
        sb.y.push_back(sum_b[i] / count[i]);
    }
    report::write_text_file(
        (out_dir / "profile_summary.svg").string(),
        report::svg_line_plot("Mean reprojection error per arclength index", "sample index",
                              "error (px)", {sa, sb}));

    std::cout << "frames=" << frames.size() << " reconstructed=" << frames.size() - failed.size()
              << "\n";
    if (!failed.empty()) {
        std::ostringstream msg;
        msg << "failed frames:";
        for (int f : failed) msg << " " << f;
        log_msg(LogLevel::kError, msg.str());
        return kExitData;
    }
    return kExitOk;
}

pred::ModelConfig model_config_from_json(const json& j) {
    pred::ModelConfig mc;
    mc.max_segments = 16;  // desk-scale benchmark default
    if (j.contains("image_size")) mc.image_size = j.at("image_size").get<int>();
    if (j.contains("patch_size")) mc.patch_size = j.at("patch_size").get<int>();
    if (j.contains("feature_dim")) mc.feature_dim = j.at("feature_dim").get<int>();
    if (j.contains("hidden_dim")) mc.hidden_dim = j.at("hidden_dim").get<int>();
    if (j.contains("max_segments")) mc.max_segments = j.at("max_segments").get<int>();
    if (j.contains("radius")) mc.radius = j.at("radius").get<double>();
    if (j.contains("stop_threshold")) mc.stop_threshold = j.at("stop_threshold").get<double>();
    if (j.contains("window")) mc.window = j.at("window").get<int>();
    return mc;
}

pred::TrainingConfig training_config_from_json(const json& j) {
    pred::TrainingConfig tc;
    if (j.contains("lambda_tip")) tc.lambda_tip = j.at("lambda_tip").get<double>();
    if (j.contains("lambda_offset")) tc.lambda_offset = j.at("lambda_offset").get<double>();
    if (j.contains("lambda_stop")) tc.lambda_stop = j.at("lambda_stop").get<double>();
    if (j.contains("lr")) tc.lr = j.at("lr").get<double>();
    if (j.contains("scheduler_factor")) tc.scheduler_factor = j.at("scheduler_factor").get<double>();
    if (j.contains("scheduler_patience")) tc.scheduler_patience = j.at("scheduler_patience").get<int>();
    if (j.contains("max_epochs")) tc.max_epochs = j.at("max_epochs").get<int>();
    if (j.contains("early_stop_patience")) tc.early_stop_patience = j.at("early_stop_patience").get<int>();
    if (j.contains("batch_size")) tc.batch_size = j.at("batch_size").get<int>();
    if (j.contains("clip_norm")) tc.clip_norm = j.at("clip_norm").get<double>();
    return tc;
}

void validate_configs(const pred::ModelConfig& mc, const pred::TrainingConfig& tc) {
    if (mc.image_size <= 0 || mc.patch_size <= 0 || mc.image_size % mc.patch_size != 0) {
        throw InputError("config: image_size must be a positive multiple of patch_size");
    }
    if (mc.feature_dim < 1 || mc.hidden_dim < 1 || mc.max_segments < 1 || mc.window < 1) {
        throw InputError("config: dims must be positive");
    }
    if (!(mc.radius > 0.0)) throw InputError("config: radius must be positive");
    if (!(mc.stop_threshold > 0.0) || !(mc.stop_threshold < 1.0)) {
        throw InputError("config: stop_threshold must be in (0, 1)");
    }
    if (!(tc.lr > 0.0) || !(tc.scheduler_factor > 0.0) || !(tc.scheduler_factor < 1.0)) {
        throw InputError("config: lr > 0 and 0 < scheduler_factor < 1 required");
    }
    if (tc.lambda_tip < 0 || tc.lambda_offset < 0 || tc.lambda_stop < 0) {
        throw InputError("config: loss weights must be nonnegative");
    }
    if (tc.max_epochs < 0 || tc.scheduler_patience < 1 || tc.early_stop_patience < 1 ||
        tc.batch_size < 1) {
        throw InputError("config: bad schedule parameters");
    }
}

std::vector<pred::TrainSample> to_train_samples(const std::vector<pipeline::DatasetSample>& in,
                                                const pred::ModelConfig& mc) {
    std::vector<pred::TrainSample> out;
    out.reserve(in.size());
    for (const auto& s : in) {
        pred::TrainSample t;
        t.frames = s.frames;
        t.target = pred::target_from_curve(s.truth, mc.radius, mc.representation);
        out.push_back(std::move(t));
    }
    return out;
}

int run_train(const std::string& data_dir, const std::string& config_path,
              const std::string& representation, std::uint64_t seed, const fs::path& out_dir) {
    json config = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw InputError("cannot open config " + config_path);
        try {
            in >> config;
        } catch (const json::exception& e) {
            throw ParseError(config_path + ": " + std::string(e.what()));
        }
    }
    pred::ModelConfig mc = model_config_from_json(config);
    pred::TrainingConfig tc = training_config_from_json(config);
    tc.seed = seed;
    mc.representation =
        representation == "cartesian" ? pred::Representation::kCartesian : pred::Representation::kSpherical;
    validate_configs(mc, tc);

    const auto train_raw = pipeline::load_dataset(data_dir, mc.window, pipeline::Split::kTrain);
    const auto val_raw = pipeline::load_dataset(data_dir, mc.window, pipeline::Split::kVal);
    log_msg(LogLevel::kInfo, "train samples: " + std::to_string(train_raw.size()) +
                                 ", val samples: " + std::to_string(val_raw.size()));
    const auto train_set = to_train_samples(train_raw, mc);
    const auto val_set = to_train_samples(val_raw, mc);

    const pred::TrainResult result = pred::train(train_set, val_set, mc, tc);

    fs::create_directories(out_dir);
    pred::save_model(result.params, (out_dir / "model.json").string());
    std::ostringstream csv;
    csv << "epoch,train_loss,val_loss,lr\n";
    for (const auto& row : result.log) {
        csv << row.epoch << "," << report::format_double(row.train_loss) << ","
            << report::format_double(row.val_loss) << "," << report::format_double(row.lr) << "\n";
    }
    report::write_text_file((out_dir / "log.csv").string(), csv.str());
    if (!result.log.empty()) {
        std::cout << "epochs=" << result.log.size() << " best_epoch=" << result.best_epoch
                  << " best_val=" << report::format_double(result.log[result.best_epoch].val_loss)
                  << "\n";
    }
    return kExitOk;
}

int run_eval(const std::string& model_path, const std::string& data_dir, const std::string& split,
             double delta_u, const fs::path& out_path, const std::string& predictions_path) {
    const pred::ModelParams params = pred::load_model(model_path);
    const pipeline::Split sp = split == "all"    ? pipeline::Split::kAll
                               : split == "train" ? pipeline::Split::kTrain
                                                  : pipeline::Split::kVal;
    const auto samples = pipeline::load_dataset(data_dir, params.config.window, sp);
    const double du = delta_u > 0.0 ? delta_u : params.config.radius;
    const bool spherical = params.config.representation == pred::Representation::kSpherical;

    std::ostringstream csv;
    csv << "frame,max_ed_mm,mete_mm,mers_mm,frechet_mm\n";
    std::vector<io::SphericalCurveRecord> pred_spherical;
    std::vector<io::CurveRecord> pred_cartesian;
    double sum_mete = 0.0;
    int n = 0;
    for (const auto& s : samples) {
        const pred::PredictionOutput out = pred::forward(params, s.frames);
        const Curve3D decoded =
            pred::decode_prediction(out, params.config.radius, params.config.stop_threshold);
        metrics::ShapeMetrics m;
        try {
            m = metrics::compare_shapes(decoded, s.truth, du);
        } catch (const DeltaTooLarge&) {
            // a prediction shorter than the sampling step reduces to its tip
            const double d = (decoded.points.front() - s.truth.points.front()).norm();
            m = {d, d, d, d};
        }
        csv << n << "," << report::format_double(m.max_ed) << "," << report::format_double(m.mete)
            << "," << report::format_double(m.mers) << "," << report::format_double(m.frechet)
            << "\n";
        sum_mete += m.mete;
        if (!predictions_path.empty()) {
            if (spherical) {
                repr::SphericalCurve sc;
                sc.tip = out.tip;
                sc.radius = params.config.radius;
                const int segments = static_cast<int>(decoded.points.size()) - 1;
                for (int k = 0; k < segments; ++k) {
                    sc.offsets.emplace_back(out.offsets(2 * k), out.offsets(2 * k + 1));
                }
                pred_spherical.push_back({n, std::move(sc)});
            } else {
                pred_cartesian.push_back({n, decoded});
            }
        }
        ++n;
    }
    report::write_text_file(out_path.string(), csv.str());
    if (!predictions_path.empty()) {
        if (spherical) {
            io::save_spherical_curves(pred_spherical, predictions_path);
        } else {
            io::save_curves(pred_cartesian, predictions_path);
        }
    }
    std::cout << "samples=" << n << " mean_mete_mm=" << report::format_double(sum_mete / n) << "\n";
    return kExitOk;
}

int run_synth(const std::string& params_path, int videos, int frames, std::uint64_t seed,
              const fs::path& out_dir) {
    pipeline::SynthParams params;
    if (!params_path.empty()) params = pipeline::load_synth_params(params_path);
    pipeline::generate_dataset(params, videos, frames, seed, out_dir.string());
    std::cout << "videos=" << videos << " frames_per_video=" << frames << " dir=" << out_dir.string()
              << "\n";
    return kExitOk;
}

int run_stats(const std::string& manifest_path, const std::string& csv_out) {
    const io::Manifest manifest = io::load_manifest(manifest_path);
    io::validate_manifest(manifest, fs::path(manifest_path).parent_path().string(),
                          /*check_paths=*/false);
    const io::CompositionStats s = io::manifest_stats(manifest);

    char line[128];
    std::printf("%-10s %8s %9s %7s\n", "", "angled", "straight", "total");
    std::snprintf(line, sizeof(line), "%-10s %8d %9d %7d", "w fluid", s.angled_fluid,
                  s.straight_fluid, s.fluid());
    std::printf("%s\n", line);
    std::snprintf(line, sizeof(line), "%-10s %8d %9d %7d", "w/o fluid", s.angled_dry,
                  s.straight_dry, s.dry());
    std::printf("%s\n", line);
    std::snprintf(line, sizeof(line), "%-10s %8d %9d %7d", "total", s.angled(), s.straight(),
                  s.total());
    std::printf("%s\n", line);

    if (!csv_out.empty()) {
        std::ostringstream csv;
        csv << "sample_type,angled,straight,total\n";
        csv << "w_fluid," << s.angled_fluid << "," << s.straight_fluid << "," << s.fluid() << "\n";
        csv << "wo_fluid," << s.angled_dry << "," << s.straight_dry << "," << s.dry() << "\n";
        csv << "total," << s.angled() << "," << s.straight() << "," << s.total() << "\n";
        report::write_text_file(csv_out, csv.str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bi-planar guidewire 3D reconstruction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags (--seed, ...) may follow the subcommand

    std::uint64_t seed = 0;
    std::string output_dir = ".";
    std::string log_level = "info";
    app.add_option("--seed", seed, "global random seed");
    app.add_option("--output-dir", output_dir, "base directory for relative outputs");
    app.add_option("--log-level", log_level, "debug|info|warn|error");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit undistortion + projection for one view");
    std::string cal_corr, cal_view = "A", cal_out;
    double cal_thresh = 2.0;
    int cal_iters = 1000, cal_neigh = 12;
    cal->add_option("--correspondences", cal_corr, "correspondence JSON")->required();
    cal->add_option("--view", cal_view, "A|B")->check(CLI::IsMember({"A", "B"}));
    cal->add_option("--ransac-threshold", cal_thresh, "inlier threshold (px)")
        ->check(CLI::PositiveNumber);
    cal->add_option("--ransac-iterations", cal_iters, "RANSAC iterations")->check(CLI::PositiveNumber);
    cal->add_option("--lwm-neighborhood", cal_neigh, "LWM neighborhood size");
    cal->add_option("--out", cal_out, "camera bundle output path")->required();

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "triangulate annotated bi-planar polylines");
    std::string rec_ann, rec_cam_a, rec_cam_b, rec_out;
    double rec_delta_u = 2.0, rec_delta_px = 2.0, rec_smooth = 0.0;
    int rec_jobs = 1;
    rec->add_option("--annotations", rec_ann, "annotation JSON")->required();
    rec->add_option("--cam-a", rec_cam_a, "camera bundle for view A")->required();
    rec->add_option("--cam-b", rec_cam_b, "camera bundle for view B")->required();
    rec->add_option("--delta-u", rec_delta_u, "3D resample step (mm)")->check(CLI::PositiveNumber);
    rec->add_option("--delta-u-px", rec_delta_px, "view-A sampling step (px)")
        ->check(CLI::PositiveNumber);
    rec->add_option("--smooth-px", rec_smooth,
                    "annotation smoothing scale for noisy polylines (0 = off)")
        ->check(CLI::NonNegativeNumber);
    rec->add_option("--jobs", rec_jobs, "parallel frame workers")->check(CLI::PositiveNumber);
    rec->add_option("--out", rec_out, "output directory")->required();

    // train
    auto* trn = app.add_subcommand("train", "train the shape predictor");
    std::string trn_data, trn_config, trn_out, trn_repr = "spherical";
    trn->add_option("--data", trn_data, "dataset directory")->required();
    trn->add_option("--config", trn_config, "model/training config JSON");
    trn->add_option("--representation", trn_repr, "spherical|cartesian")
        ->check(CLI::IsMember({"spherical", "cartesian"}));
    trn->add_option("--out", trn_out, "output directory")->required();

    // eval
    auto* evl = app.add_subcommand("eval", "evaluate a checkpoint against ground truth");
    std::string evl_model, evl_data, evl_out, evl_split = "val", evl_pred;
    double evl_delta_u = 0.0;
    evl->add_option("--model", evl_model, "model checkpoint")->required();
    evl->add_option("--data", evl_data, "dataset directory")->required();
    evl->add_option("--split", evl_split, "all|train|val")
        ->check(CLI::IsMember({"all", "train", "val"}));
    evl->add_option("--delta-u", evl_delta_u, "metric resample step (mm), default model radius");
    evl->add_option("--predictions", evl_pred, "also dump decoded predictions as JSON");
    evl->add_option("--out", evl_out, "metrics CSV path")->required();

    // synth
    auto* syn = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string syn_params, syn_out;
    int syn_videos = 0, syn_frames = 0;
    syn->add_option("--params", syn_params, "generator params JSON");
    syn->add_option("--videos", syn_videos, "number of videos")->required()->check(CLI::PositiveNumber);
    syn->add_option("--frames", syn_frames, "frames per video")->required()->check(CLI::PositiveNumber);
    syn->add_option("--out", syn_out, "output directory")->required();

    // stats
    auto* sts = app.add_subcommand("stats", "dataset composition table");
    std::string sts_manifest, sts_out;
    sts->add_option("--manifest", sts_manifest, "manifest JSON")->required();
    sts->add_option("--out", sts_out, "also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    }

    if (const char* env = std::getenv("WIRERECON_LOG")) log_level = env;
    try {
        g_log_level = parse_level(log_level);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() ? path : fs::path(output_dir) / path;
    };

    try {
        if (cal->parsed()) {
            const auto out = resolve(cal_out);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            const int rc = run_calibrate(cal_corr, cal_view, cal_thresh, cal_iters, cal_neigh,
                                         seed, out);
            write_run_sidecar(out.parent_path().empty() ? "." : out.parent_path(), "calibrate",
                              args, seed);
            return rc;
        }
        if (rec->parsed()) {
            const auto out = resolve(rec_out);
            fs::create_directories(out);
            const int rc = run_reconstruct(rec_ann, rec_cam_a, rec_cam_b, rec_delta_u,
                                           rec_delta_px, rec_smooth, rec_jobs, out);
            write_run_sidecar(out, "reconstruct", args, seed);
            return rc;
        }
        if (trn->parsed()) {
            const auto out = resolve(trn_out);
            fs::create_directories(out);
            const int rc = run_train(trn_data, trn_config, trn_repr, seed, out);
            write_run_sidecar(out, "train", args, seed);
            return rc;
        }
        if (evl->parsed()) {
            const auto out = resolve(evl_out);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            const std::string pred_path = evl_pred.empty() ? "" : resolve(evl_pred).string();
            return run_eval(evl_model, evl_data, evl_split, evl_delta_u, out, pred_path);
        }
        if (syn->parsed()) {
            const auto out = resolve(syn_out);
            const int rc = run_synth(syn_params, syn_videos, syn_frames, seed, out);
            write_run_sidecar(out, "synth", args, seed);
            return rc;
        }
        if (sts->parsed()) {
            return run_stats(sts_manifest, sts_out);
        }
    } catch (const NumericError& e) {
        log_msg(LogLevel::kError, e.what());
        return kExitNumeric;
    } catch (const GeometryError& e) {
        log_msg(LogLevel::kError, e.what());
        return kExitData;
    } catch (const InputError& e) {
        log_msg(LogLevel::kError, e.what());
        return kExitInput;
    } catch (const Error& e) {
        log_msg(LogLevel::kError, e.what());
        return kExitInput;
    }
    return kExitOk;
}
