#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "wirerecon/curve_repr.hpp"
#include "wirerecon/predictor.hpp"
#include "wirerecon/rng.hpp"
#include "wirerecon/synthetic.hpp"

using namespace wirerecon;
using namespace wirerecon::pred;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.image_size = 16;
    c.patch_size = 8;
    c.feature_dim = 6;
    c.hidden_dim = 7;
    c.max_segments = 5;
    c.radius = 1.0;
    c.window = 3;
    return c;
}

FrameTensor random_frame(int size, Rng& rng) {
    FrameTensor f;
    f.pixels.resize(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) f.pixels(y, x) = rng.u01();
    }
    return f;
}

TrainSample random_sample(const ModelConfig& c, Rng& rng, int length = 3) {
    TrainSample s;
    for (int t = 0; t < c.window; ++t) s.frames.push_back(random_frame(c.image_size, rng));
    s.target.tip = Vec3(rng.normal(), rng.normal(), rng.normal());
    s.target.length = length;
    s.target.steps.resize(c.offset_dims() * length);
    for (int i = 0; i < s.target.steps.size(); ++i) s.target.steps(i) = 0.3 * rng.normal();
    return s;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite differences of the sequence loss against the analytic
// gradient, across every parameter.
double max_grad_rel_err(const ModelConfig& c, std::uint64_t seed) {
    Rng rng(seed);
    ModelParams params = init_params(c, seed + 1);
    // nonzero positional bias so its gradient path is exercised
    for (int i = 0; i < params.flat.size(); ++i) params.flat(i) += 0.01 * rng.normal();
    const TrainSample sample = random_sample(c, rng);
    TrainingConfig tc;
    tc.lambda_tip = 0.7;
    tc.lambda_offset = 1.3;
    tc.lambda_stop = 0.9;

    Eigen::VectorXd grad;
    sequence_loss(params, sample, tc, &grad);

    const double eps = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < params.flat.size(); ++i) {
        ModelParams p = params;
        p.flat(i) += eps;
        const double up = sequence_loss(p, sample, tc, nullptr);
        p.flat(i) -= 2.0 * eps;
        const double down = sequence_loss(p, sample, tc, nullptr);
        const double fd = (up - down) / (2.0 * eps);
        worst = std::max(worst, rel_err(fd, grad(i)));
    }
    return worst;
}

}  // namespace

TEST_CASE("embed_frame: zero image with zero bias gives a zero feature") {
    const ModelConfig c = tiny_config();
    ModelParams params = init_params(c, 3);
    FrameTensor zero;
    zero.pixels = Eigen::MatrixXd::Zero(c.image_size, c.image_size);
    // positional bias is zero-initialized, so the embedding is linear
    const Eigen::VectorXd z = embed_frame(params, zero);
    CHECK(z.norm() == 0.0);
}

TEST_CASE("embed_frame: dimension mismatch") {
    const ModelConfig c = tiny_config();
    ModelParams params = init_params(c, 3);
    FrameTensor bad;
    bad.pixels = Eigen::MatrixXd::Zero(15, 15);
    CHECK_THROWS_AS(embed_frame(params, bad), DimensionMismatch);
}

TEST_CASE("embed_frame: gradient via the loss path matches finite differences") {
    // the embedder is linear, so the full-path check below covers it; this
    // case pins the direct z-component derivative too
    const ModelConfig c = tiny_config();
    Rng rng(5);
    ModelParams params = init_params(c, 6);
    const FrameTensor frame = random_frame(c.image_size, rng);
    const int k = 2;  // probe component
    const double eps = 1e-6;
    for (int i : {0, 7, 100, c.feature_dim * c.patch_pixels() + 3}) {
        ModelParams p = params;
        p.flat(i) += eps;
        const double up = embed_frame(p, frame)(k);
        p.flat(i) -= 2.0 * eps;
        const double down = embed_frame(p, frame)(k);
        const double fd = (up - down) / (2.0 * eps);
        // analytic: z = W * mean_patch + mean pos bias (linear in params)
        ModelParams base = params;
        base.flat(i) += 1.0;
        const double analytic = embed_frame(base, frame)(k) - embed_frame(params, frame)(k);
        CHECK(rel_err(fd, analytic) < 1e-4);
    }
}

TEST_CASE("gru_step: zero weights halve the previous state") {
    ModelConfig c = tiny_config();
    ModelParams params;
    params.config = c;
    params.flat = Eigen::VectorXd::Zero(param_count(c));
    Rng rng(9);
    Eigen::VectorXd z(c.feature_dim), h(c.hidden_dim);
    for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
    for (int i = 0; i < h.size(); ++i) h(i) = rng.normal();
    const Eigen::VectorXd out = gru_step(params, z, h);
    CHECK((out - 0.5 * h).norm() < 1e-12);
}

TEST_CASE("gru_step: dimension mismatch") {
    const ModelConfig c = tiny_config();
    ModelParams params = init_params(c, 3);
    CHECK_THROWS_AS(gru_step(params, Eigen::VectorXd::Zero(c.feature_dim + 1),
                             Eigen::VectorXd::Zero(c.hidden_dim)),
                    DimensionMismatch);
}

TEST_CASE("gradient check: full path over 20 random draws") {
    const ModelConfig c = tiny_config();
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 20; ++draw) {
        worst = std::max(worst, max_grad_rel_err(c, 100 + draw));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: cartesian head variant") {
    ModelConfig c = tiny_config();
    c.representation = Representation::kCartesian;
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
        worst = std::max(worst, max_grad_rel_err(c, 500 + draw));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("forward: shapes and sequence sensitivity") {
    ModelConfig c = tiny_config();
    c.max_segments = 16;
    ModelParams params = init_params(c, 11);
    Rng rng(12);
    std::vector<FrameTensor> frames;
    for (int t = 0; t < 3; ++t) frames.push_back(random_frame(c.image_size, rng));

    const PredictionOutput out = forward(params, frames);
    CHECK(out.offsets.size() == 2 * 16);
    CHECK(out.stop_probs.size() == 16);
    for (int j = 0; j < out.stop_probs.size(); ++j) {
        CHECK(out.stop_probs(j) > 0.0);
        CHECK(out.stop_probs(j) < 1.0);
    }

    // single frame == one GRU application
    const Eigen::VectorXd z = embed_frame(params, frames[0]);
    const Eigen::VectorXd h1 = gru_step(params, z, Eigen::VectorXd::Zero(c.hidden_dim));
    const PredictionOutput single = forward(params, {frames[0]});
    const Eigen::VectorXd z2 = embed_frame(params, frames[0]);
    CHECK((z - z2).norm() == 0.0);

    // permuting the frames changes the output
    std::vector<FrameTensor> permuted{frames[2], frames[0], frames[1]};
    const PredictionOutput out2 = forward(params, permuted);
    CHECK((out.tip - out2.tip).norm() + (out.offsets - out2.offsets).norm() > 1e-6);

    CHECK_THROWS_AS(forward(params, {}), EmptySequence);
}

TEST_CASE("total_loss: zero at an exact match, zero under zero weights") {
    ModelConfig c = tiny_config();
    Rng rng(21);
    TrainSample s;
    s.target.tip = Vec3(1, 2, 3);
    s.target.length = 3;
    s.target.steps.resize(6);
    for (int i = 0; i < 6; ++i) s.target.steps(i) = 0.1 * i;

    PredictionOutput out;
    out.representation = Representation::kSpherical;
    out.tip = s.target.tip;
    out.offsets = Eigen::VectorXd::Zero(2 * c.max_segments);
    out.offsets.head(6) = s.target.steps;
    out.stop_logits = Eigen::VectorXd::Constant(c.max_segments, -1000.0);
    out.stop_logits(2) = 1000.0;  // terminal at index length-1
    out.stop_probs = out.stop_logits.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });

    TrainingConfig tc;
    CHECK(total_loss(out, s.target, tc) == 0.0);

    // scrambled prediction with zero weights
    out.tip += Vec3(5, 5, 5);
    TrainingConfig zero;
    zero.lambda_tip = zero.lambda_offset = zero.lambda_stop = 0.0;
    CHECK(total_loss(out, s.target, zero) == 0.0);
}

TEST_CASE("total_loss: BCE term equals the direct expansion") {
    ModelConfig c = tiny_config();
    Rng rng(23);
    PredictionOutput out;
    out.representation = Representation::kSpherical;
    out.tip = Vec3::Zero();
    out.offsets = Eigen::VectorXd::Zero(2 * c.max_segments);
    out.stop_logits.resize(c.max_segments);
    for (int j = 0; j < c.max_segments; ++j) out.stop_logits(j) = rng.normal();
    out.stop_probs = out.stop_logits.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });

    ShapeTarget target;
    target.tip = Vec3::Zero();
    target.length = 2;
    target.steps = Eigen::VectorXd::Zero(4);

    TrainingConfig tc;
    tc.lambda_tip = 0.0;
    tc.lambda_offset = 0.0;
    tc.lambda_stop = 1.0;
    const double loss = total_loss(out, target, tc);

    double expect = 0.0;
    for (int j = 0; j < c.max_segments; ++j) {
        const double sj = j == target.length - 1 ? 1.0 : 0.0;
        const double p = out.stop_probs(j);
        expect += -sj * std::log(p) - (1.0 - sj) * std::log(1.0 - p);
    }
    expect /= c.max_segments;
    CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("total_loss: nonnegative over random inputs") {
    const ModelConfig c = tiny_config();
    Rng rng(67);
    for (int trial = 0; trial < 50; ++trial) {
        PredictionOutput out;
        out.representation = Representation::kSpherical;
        out.tip = Vec3(rng.normal(), rng.normal(), rng.normal());
        out.offsets.resize(2 * c.max_segments);
        for (int i = 0; i < out.offsets.size(); ++i) out.offsets(i) = rng.normal();
        out.stop_logits.resize(c.max_segments);
        for (int i = 0; i < c.max_segments; ++i) out.stop_logits(i) = 3.0 * rng.normal();
        out.stop_probs =
            out.stop_logits.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        ShapeTarget target;
        target.tip = Vec3(rng.normal(), rng.normal(), rng.normal());
        target.length = 1 + static_cast<int>(rng.index(c.max_segments));
        target.steps.resize(2 * target.length);
        for (int i = 0; i < target.steps.size(); ++i) target.steps(i) = rng.normal();
        CHECK(total_loss(out, target, TrainingConfig{}) >= 0.0);
    }
}

TEST_CASE("total_loss: length exceeding M") {
    ModelConfig c = tiny_config();
    PredictionOutput out;
    out.representation = Representation::kSpherical;
    out.tip = Vec3::Zero();
    out.offsets = Eigen::VectorXd::Zero(2 * c.max_segments);
    out.stop_logits = Eigen::VectorXd::Zero(c.max_segments);
    out.stop_probs = Eigen::VectorXd::Constant(c.max_segments, 0.5);
    ShapeTarget target;
    target.length = c.max_segments + 1;
    target.steps = Eigen::VectorXd::Zero(2 * (c.max_segments + 1));
    CHECK_THROWS_AS(total_loss(out, target, TrainingConfig{}), LengthExceedsM);
}

TEST_CASE("decode_prediction: stop rule and round trip") {
    PredictionOutput out;
    out.representation = Representation::kSpherical;
    out.tip = Vec3(0, 0, 0);
    out.offsets = Eigen::VectorXd::Zero(8);
    out.stop_probs.resize(4);
    out.stop_probs << 0.1, 0.9, 0.2, 0.3;
    out.stop_logits.resize(4);
    const Curve3D c = decode_prediction(out, 1.0, 0.5);
    CHECK(c.points.size() == 3);  // 2 segments

    // no probability reaches the threshold: argmax fallback
    out.stop_probs << 0.1, 0.2, 0.4, 0.3;
    const Curve3D c2 = decode_prediction(out, 1.0, 0.5);
    CHECK(c2.points.size() == 4);  // argmax at index 2 -> 3 segments

    CHECK_THROWS_AS(decode_prediction(out, 1.0, 0.0), DomainError);
}

TEST_CASE("decode_prediction: reproduces an encoded target") {
    synth::CurveGenParams gen;
    gen.length_range = {24.0, 30.0};
    gen.curvature_scale = 0.02;
    gen.loop_probability = 0.0;
    gen.seed = 77;
    const Curve3D truth = synth::gen_curve(gen);
    const repr::SphericalCurve sc = repr::encode(truth, 2.0);

    PredictionOutput out;
    out.representation = Representation::kSpherical;
    out.tip = sc.tip;
    const int M = 16;
    REQUIRE(sc.length() <= M);
    out.offsets = Eigen::VectorXd::Zero(2 * M);
    for (int k = 0; k < sc.length(); ++k) {
        out.offsets(2 * k) = sc.offsets[k].first;
        out.offsets(2 * k + 1) = sc.offsets[k].second;
    }
    out.stop_probs = Eigen::VectorXd::Zero(M);
    out.stop_probs(sc.length() - 1) = 1.0;
    out.stop_logits = Eigen::VectorXd::Zero(M);

    const Curve3D decoded = decode_prediction(out, sc.radius, 0.5);
    const Curve3D expect = repr::decode(sc);
    REQUIRE(decoded.points.size() == expect.points.size());
    for (size_t i = 0; i < expect.points.size(); ++i) {
        CHECK((decoded.points[i] - expect.points[i]).norm() < 1e-12);
    }
}

TEST_CASE("train: zero epochs returns the seeded initialization") {
    const ModelConfig c = tiny_config();
    Rng rng(31);
    std::vector<TrainSample> data{random_sample(c, rng), random_sample(c, rng)};
    TrainingConfig tc;
    tc.max_epochs = 0;
    const TrainResult r = train(data, data, c, tc);
    const ModelParams init = init_params(c, tc.seed);
    CHECK((r.params.flat - init.flat).norm() == 0.0);
    CHECK(r.log.empty());
}

TEST_CASE("train: empty dataset") {
    const ModelConfig c = tiny_config();
    CHECK_THROWS_AS(train({}, {}, c, TrainingConfig{}), EmptyDataset);
}

TEST_CASE("train: deterministic log for a fixed seed") {
    const ModelConfig c = tiny_config();
    Rng rng(41);
    std::vector<TrainSample> tr, va;
    for (int i = 0; i < 6; ++i) tr.push_back(random_sample(c, rng));
    for (int i = 0; i < 2; ++i) va.push_back(random_sample(c, rng));
    TrainingConfig tc;
    tc.max_epochs = 5;
    tc.batch_size = 3;
    tc.lr = 1e-3;
    const TrainResult a = train(tr, va, c, tc);
    const TrainResult b = train(tr, va, c, tc);
    REQUIRE(a.log.size() == b.log.size());
    for (size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].train_loss == b.log[i].train_loss);
        CHECK(a.log[i].val_loss == b.log[i].val_loss);
        CHECK(a.log[i].lr == b.log[i].lr);
    }
    CHECK((a.params.flat - b.params.flat).norm() == 0.0);
}

TEST_CASE("nadam: zero gradients leave parameters unchanged") {
    // train on a sample that already has zero loss gradient: impossible to
    // build exactly; instead check the optimizer invariant through a
    // zero-weight objective, which zeroes every gradient
    const ModelConfig c = tiny_config();
    Rng rng(51);
    std::vector<TrainSample> data{random_sample(c, rng), random_sample(c, rng)};
    TrainingConfig tc;
    tc.lambda_tip = tc.lambda_offset = tc.lambda_stop = 0.0;
    tc.max_epochs = 3;
    const TrainResult r = train(data, data, c, tc);
    const ModelParams init = init_params(c, tc.seed);
    CHECK((r.params.flat - init.flat).norm() == 0.0);
}

TEST_CASE("model checkpoint: save/load round trip") {
    wrtest::TempDir dir("model_roundtrip");
    const ModelConfig c = tiny_config();
    const ModelParams params = init_params(c, 77);
    const auto path = dir.file("model.json");
    save_model(params, path);
    const ModelParams back = load_model(path);
    CHECK(back.config.feature_dim == c.feature_dim);
    CHECK(back.config.hidden_dim == c.hidden_dim);
    CHECK(back.config.max_segments == c.max_segments);
    CHECK(back.config.representation == c.representation);
    CHECK((back.flat - params.flat).norm() == 0.0);
}

TEST_CASE("target_from_curve: spherical and cartesian targets agree with the codec") {
    synth::CurveGenParams gen;
    gen.length_range = {24.0, 30.0};
    gen.curvature_scale = 0.02;
    gen.loop_probability = 0.0;
    gen.seed = 91;
    const Curve3D truth = synth::gen_curve(gen);

    const ShapeTarget sph = target_from_curve(truth, 2.0, Representation::kSpherical);
    const repr::SphericalCurve sc = repr::encode(truth, 2.0);
    CHECK(sph.length == sc.length());
    CHECK((sph.tip - sc.tip).norm() == 0.0);

    const ShapeTarget cart = target_from_curve(truth, 2.0, Representation::kCartesian);
    CHECK(cart.length == sph.length);
    // every cartesian step has magnitude radius
    for (int k = 0; k < cart.length; ++k) {
        CHECK(cart.steps.segment<3>(3 * k).norm() == doctest::Approx(2.0).epsilon(1e-9));
    }
}
