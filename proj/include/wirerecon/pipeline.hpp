#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wirerecon/synthetic.hpp"
#include "wirerecon/types.hpp"

namespace wirerecon::pipeline {

/// Parameters of the synthetic dataset builder (curve generator + rig +
/// trajectory placement + rendering).
struct SynthParams {
    synth::CurveGenParams curve{
        .n_control = 8,
        .length_range = {24.0, 30.0},
        .curvature_scale = 0.02,
        .loop_probability = 0.1,
        .seed = 0,
    };
    double baseline_angle = 1.5707963267948966;  // rad
    double distance = 1000.0;                    // mm
    double focal_px = 600.0;
    int image_size = 64;
    int window = 4;
    Vec3 region_center{12.0, 8.0, 5.0};  // mm, tip placement center
    double region_jitter = 6.0;          // mm, uniform tip scatter
    double drift_per_frame = 0.7;        // mm per frame along a random direction
    double annotation_noise_px = 0.0;
};

SynthParams load_synth_params(const std::string& path);
void save_synth_params(const SynthParams& params, const std::string& path);

/// Writes a full dataset under out_dir: manifest.json, per-video annotation
/// and truth-curve files, PGM frames, and the camera bundles. Deterministic
/// for a fixed seed.
void generate_dataset(const SynthParams& params, int n_videos, int n_frames,
                      std::uint64_t seed, const std::string& out_dir);

/// One supervised sequence loaded back from a dataset directory.
struct DatasetSample {
    std::vector<FrameTensor> frames;  // trailing window ending at frame_index
    Curve3D truth;
    int frame_index = 0;
    std::string video_id;
};

enum class Split { kAll, kTrain, kVal };

/// Sliding-window samples over every video; the validation split holds out
/// every fifth video.
std::vector<DatasetSample> load_dataset(const std::string& dir, int window, Split split);

}  // namespace wirerecon::pipeline
