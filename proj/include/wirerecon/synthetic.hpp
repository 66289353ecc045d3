#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wirerecon/frame.hpp"
#include "wirerecon/reconstruction.hpp"
#include "wirerecon/types.hpp"

namespace wirerecon::synth {

/// Parameters of the random guidewire-like curve generator.
struct CurveGenParams {
    int n_control = 8;
    std::pair<double, double> length_range{120.0, 180.0};  // mm
    double curvature_scale = 0.01;                         // 1/mm
    double loop_probability = 0.2;
    std::uint64_t seed = 0;
};

/// Random smooth curve (Catmull-Rom through perturbed control points,
/// resampled at 1 mm chords), tip at the origin, arclength inside
/// length_range. With probability loop_probability a full 360-degree planar
/// loop is inserted. Deterministic per seed.
Curve3D gen_curve(const CurveGenParams& params);

/// Two cameras at `distance` from the origin, both aimed at it, separated by
/// baseline_angle about the vertical axis. K has focal_px on the diagonal
/// and the given principal point.
recon::StereoRig make_camera_pair(double baseline_angle, double distance, double focal_px,
                                  const Vec2& principal_point = Vec2::Zero());

/// One rendered time step plus everything needed to supervise it.
struct SyntheticSample {
    Curve3D truth;
    Polyline2D poly_a;
    Polyline2D poly_b;
    std::vector<FrameTensor> frames_a;  // trailing window ending at this step
    recon::StereoRig rig;
};

struct RenderConfig {
    int image_size = 64;
    int window = 4;                   // frames_a length per sample
    double annotation_noise_px = 0.0; // Gaussian jitter on polylines
    std::uint64_t seed = 0;           // jitter seed
};

/// Rasterizes the projected view-A polyline of every trajectory step
/// (1-px-wide anti-aliased stroke, white on black) and packages per-step
/// samples. Polyline annotations are exact projections, optionally jittered.
/// Throws OutOfBounds when a projection exits the image.
std::vector<SyntheticSample> render_sequence(const std::vector<Curve3D>& trajectory,
                                             const recon::StereoRig& rig,
                                             const RenderConfig& cfg);

/// Anti-aliased rasterization of one pixel-space polyline.
FrameTensor render_frame(const std::vector<Vec2>& poly, int image_size);

/// Rigid translation of `base` so the tip starts at start_tip and advances
/// by drift_per_frame each step.
std::vector<Curve3D> make_trajectory(const Curve3D& base, int n_frames,
                                     const Vec3& start_tip, const Vec3& drift_per_frame);

}  // namespace wirerecon::synth
