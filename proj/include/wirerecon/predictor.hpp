#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wirerecon/curve_repr.hpp"
#include "wirerecon/frame.hpp"
#include "wirerecon/types.hpp"

namespace wirerecon::pred {

/// Output parameterization of the offset head.
enum class Representation { kSpherical, kCartesian };

struct ModelConfig {
    int image_size = 64;
    int patch_size = 8;
    int feature_dim = 32;   // D: patch embedding output
    int hidden_dim = 32;    // H: GRU state
    int max_segments = 64;  // M: offset/stop positions
    double radius = 2.0;    // mm, fixed step of the curve representation
    double stop_threshold = 0.5;
    int window = 4;  // frames per input sequence
    Representation representation = Representation::kSpherical;

    int offset_dims() const { return representation == Representation::kSpherical ? 2 : 3; }
    int patches_per_side() const { return image_size / patch_size; }
    int patch_count() const { return patches_per_side() * patches_per_side(); }
    int patch_pixels() const { return patch_size * patch_size; }
};

/// All weights in one flat vector; layout order is fixed (embedder, GRU
/// gates, heads) so checkpoints and optimizer state stay stable.
struct ModelParams {
    ModelConfig config;
    Eigen::VectorXd flat;
};

/// Seeded uniform init (biases zero).
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

int param_count(const ModelConfig& config);

/// Mean-pooled linear patch embedding with learned positional bias.
Eigen::VectorXd embed_frame(const ModelParams& params, const FrameTensor& frame);

/// Single GRU update: u = sig(Wu z + Uu h + bu), r = sig(Wr z + Ur h + br),
/// c = tanh(Wc z + Uc (r.h) + bc), h' = (1-u).h + u.c.
Eigen::VectorXd gru_step(const ModelParams& params, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& h_prev);

struct PredictionOutput {
    Vec3 tip;
    Eigen::VectorXd offsets;      // M * offset_dims, position-major
    Eigen::VectorXd stop_logits;  // M
    Eigen::VectorXd stop_probs;   // sigmoid(stop_logits)
    Representation representation = Representation::kSpherical;
};

/// Embed + GRU over the frame sequence (h0 = 0), heads on the final state.
PredictionOutput forward(const ModelParams& params, const std::vector<FrameTensor>& frames);

/// Supervision for one sequence: tip plus per-segment step parameters
/// (angles for spherical, displacement vectors for cartesian). The stop
/// label is one-hot at index length-1.
struct ShapeTarget {
    Vec3 tip = Vec3::Zero();
    Eigen::VectorXd steps;  // length * offset_dims
    int length = 0;
};

ShapeTarget target_from_spherical(const repr::SphericalCurve& sc);
/// Resamples the curve at chord step `radius` and extracts the target in
/// the requested representation.
ShapeTarget target_from_curve(const Curve3D& truth, double radius, Representation rep);

struct TrainingConfig {
    double lambda_tip = 1.0;
    double lambda_offset = 10.0;
    double lambda_stop = 1.0;
    double lr = 1e-4;
    double scheduler_factor = 0.1;
    int scheduler_patience = 10;
    int max_epochs = 400;
    int early_stop_patience = 25;
    int batch_size = 16;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
};

struct LossGrads {
    Vec3 d_tip;
    Eigen::VectorXd d_offsets;      // w.r.t. offset head outputs
    Eigen::VectorXd d_stop_logits;  // w.r.t. stop logits
};

/// Combined objective: lambda_tip |dtip|^2 + lambda_offset mean-over-valid
/// squared step error + lambda_stop mean BCE over the M stop positions.
double total_loss(const PredictionOutput& pred, const ShapeTarget& target,
                  const TrainingConfig& cfg, LossGrads* grads = nullptr);

struct TrainSample {
    std::vector<FrameTensor> frames;
    ShapeTarget target;
};

/// Loss of one sequence plus, optionally, the full analytic gradient
/// (backprop through heads, GRU steps, and embedder).
double sequence_loss(const ModelParams& params, const TrainSample& sample,
                     const TrainingConfig& cfg, Eigen::VectorXd* grad);

struct EpochLog {
    int epoch;
    double train_loss;
    double val_loss;
    double lr;
};

struct TrainResult {
    ModelParams params;  // best validation loss
    std::vector<EpochLog> log;
    int best_epoch = -1;
};

/// Deterministic mini-batch NAdam training with plateau lr scheduling and
/// early stopping; returns the best-validation parameters.
TrainResult train(const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, const ModelConfig& mconfig,
                  const TrainingConfig& cfg);

/// Stop rule (first probability >= threshold, argmax fallback) followed by
/// the representation decoder.
Curve3D decode_prediction(const PredictionOutput& out, double radius, double stop_threshold);

/// Checkpoint round trip (JSON document with a dims header).
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace wirerecon::pred
