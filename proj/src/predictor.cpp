#include "wirerecon/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "wirerecon/geometry.hpp"
#include "wirerecon/rng.hpp"

namespace wirerecon::pred {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Offsets of each parameter block inside the flat vector.
struct Layout {
    int embed_w, pos_bias;
    int w_u, u_u, b_u;
    int w_r, u_r, b_r;
    int w_c, u_c, b_c;
    int tip_w, tip_b;
    int off_w, off_b;
    int stop_w, stop_b;
    int total;
};

Layout make_layout(const ModelConfig& c) {
    const int D = c.feature_dim;
    const int H = c.hidden_dim;
    const int P = c.patch_count();
    const int pp = c.patch_pixels();
    const int od = c.max_segments * c.offset_dims();
    Layout l{};
    int o = 0;
    auto take = [&o](int n) {
        const int at = o;
        o += n;
        return at;
    };
    l.embed_w = take(D * pp);
    l.pos_bias = take(D * P);
    l.w_u = take(H * D);
    l.u_u = take(H * H);
    l.b_u = take(H);
    l.w_r = take(H * D);
    l.u_r = take(H * H);
    l.b_r = take(H);
    l.w_c = take(H * D);
    l.u_c = take(H * H);
    l.b_c = take(H);
    l.tip_w = take(3 * H);
    l.tip_b = take(3);
    l.off_w = take(od * H);
    l.off_b = take(od);
    l.stop_w = take(c.max_segments * H);
    l.stop_b = take(c.max_segments);
    l.total = o;
    return l;
}

template <bool IsConst>
struct ViewsT {
    using Scalar = std::conditional_t<IsConst, const double, double>;
    using Mat = Eigen::Map<std::conditional_t<IsConst, const MatrixXd, MatrixXd>>;
    using Vec = Eigen::Map<std::conditional_t<IsConst, const VectorXd, VectorXd>>;

    Mat embed_w, pos_bias;
    Mat w_u, u_u;
    Vec b_u;
    Mat w_r, u_r;
    Vec b_r;
    Mat w_c, u_c;
    Vec b_c;
    Mat tip_w;
    Vec tip_b;
    Mat off_w;
    Vec off_b;
    Mat stop_w;
    Vec stop_b;

    ViewsT(Scalar* p, const ModelConfig& c, const Layout& l)
        : embed_w(p + l.embed_w, c.feature_dim, c.patch_pixels()),
          pos_bias(p + l.pos_bias, c.feature_dim, c.patch_count()),
          w_u(p + l.w_u, c.hidden_dim, c.feature_dim),
          u_u(p + l.u_u, c.hidden_dim, c.hidden_dim),
          b_u(p + l.b_u, c.hidden_dim),
          w_r(p + l.w_r, c.hidden_dim, c.feature_dim),
          u_r(p + l.u_r, c.hidden_dim, c.hidden_dim),
          b_r(p + l.b_r, c.hidden_dim),
          w_c(p + l.w_c, c.hidden_dim, c.feature_dim),
          u_c(p + l.u_c, c.hidden_dim, c.hidden_dim),
          b_c(p + l.b_c, c.hidden_dim),
          tip_w(p + l.tip_w, 3, c.hidden_dim),
          tip_b(p + l.tip_b, 3),
          off_w(p + l.off_w, c.max_segments * c.offset_dims(), c.hidden_dim),
          off_b(p + l.off_b, c.max_segments * c.offset_dims()),
          stop_w(p + l.stop_w, c.max_segments, c.hidden_dim),
          stop_b(p + l.stop_b, c.max_segments) {}
};

using Views = ViewsT<false>;
using ConstViews = ViewsT<true>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VectorXd mean_patch_vector(const ModelConfig& c, const FrameTensor& frame) {
    if (frame.height() != c.image_size || frame.width() != c.image_size ||
        c.image_size % c.patch_size != 0) {
        throw DimensionMismatch("embed_frame: frame dims do not match config/patch size");
    }
    if (!frame.pixels.allFinite()) throw NonFiniteInput("embed_frame: non-finite pixels");
    const int ps = c.patch_size;
    const int side = c.patches_per_side();
    VectorXd mean = VectorXd::Zero(c.patch_pixels());
    for (int py = 0; py < side; ++py) {
        for (int px = 0; px < side; ++px) {
            for (int r = 0; r < ps; ++r) {
                for (int col = 0; col < ps; ++col) {
                    mean(r * ps + col) += frame.pixels(py * ps + r, px * ps + col);
                }
            }
        }
    }
    return mean / static_cast<double>(c.patch_count());
}

struct GruCache {
    VectorXd z, h_prev, u, r, c, rh;
};

VectorXd gru_forward(const ConstViews& v, const VectorXd& z, const VectorXd& h_prev,
                     GruCache* cache) {
    const VectorXd u = (v.w_u * z + v.u_u * h_prev + v.b_u).unaryExpr([](double x) { return sigmoid(x); });
    const VectorXd r = (v.w_r * z + v.u_r * h_prev + v.b_r).unaryExpr([](double x) { return sigmoid(x); });
    const VectorXd rh = r.cwiseProduct(h_prev);
    const VectorXd c = (v.w_c * z + v.u_c * rh + v.b_c).array().tanh();
    const VectorXd h = (VectorXd::Ones(u.size()) - u).cwiseProduct(h_prev) + u.cwiseProduct(c);
    if (cache) *cache = GruCache{z, h_prev, u, r, c, rh};
    return h;
}

// Accumulates parameter gradients for one GRU step and returns gradients
// w.r.t. its inputs.
void gru_backward(const ConstViews& v, Views& g, const GruCache& cc, const VectorXd& dh,
                  VectorXd* dz, VectorXd* dh_prev) {
    const VectorXd du = dh.cwiseProduct(cc.c - cc.h_prev);
    const VectorXd dc = dh.cwiseProduct(cc.u);
    VectorXd dhp = dh.cwiseProduct(VectorXd::Ones(cc.u.size()) - cc.u);

    const VectorXd da_c = dc.cwiseProduct(VectorXd::Ones(cc.c.size()) - cc.c.cwiseProduct(cc.c));
    g.w_c += da_c * cc.z.transpose();
    g.u_c += da_c * cc.rh.transpose();
    g.b_c += da_c;
    VectorXd dzv = v.w_c.transpose() * da_c;
    const VectorXd drh = v.u_c.transpose() * da_c;
    const VectorXd dr = drh.cwiseProduct(cc.h_prev);
    dhp += drh.cwiseProduct(cc.r);

    const VectorXd da_r = dr.cwiseProduct(cc.r).cwiseProduct(VectorXd::Ones(cc.r.size()) - cc.r);
    g.w_r += da_r * cc.z.transpose();
    g.u_r += da_r * cc.h_prev.transpose();
    g.b_r += da_r;
    dzv += v.w_r.transpose() * da_r;
    dhp += v.u_r.transpose() * da_r;

    const VectorXd da_u = du.cwiseProduct(cc.u).cwiseProduct(VectorXd::Ones(cc.u.size()) - cc.u);
    g.w_u += da_u * cc.z.transpose();
    g.u_u += da_u * cc.h_prev.transpose();
    g.b_u += da_u;
    dzv += v.w_u.transpose() * da_u;
    dhp += v.u_u.transpose() * da_u;

    *dz = std::move(dzv);
    *dh_prev = std::move(dhp);
}

PredictionOutput heads(const ConstViews& v, const ModelConfig& c, const VectorXd& h) {
    PredictionOutput out;
    out.representation = c.representation;
    out.tip = v.tip_w * h + v.tip_b;
    out.offsets = v.off_w * h + v.off_b;
    out.stop_logits = v.stop_w * h + v.stop_b;
    out.stop_probs = out.stop_logits.unaryExpr([](double x) { return sigmoid(x); });
    return out;
}

// Numerically stable binary cross-entropy from a logit.
double bce_from_logit(double logit, double label) {
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace

int param_count(const ModelConfig& config) { return make_layout(config).total; }

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    if (config.image_size % config.patch_size != 0) {
        throw DimensionMismatch("init_params: image size not divisible by patch size");
    }
    const Layout l = make_layout(config);
    ModelParams p;
    p.config = config;
    p.flat = VectorXd::Zero(l.total);
    Rng rng(seed);
    auto fill = [&](int offset, int rows, int cols, int fan_in) {
        const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < rows * cols; ++i) p.flat(offset + i) = rng.uniform(-a, a);
    };
    const int D = config.feature_dim;
    const int H = config.hidden_dim;
    const int pp = config.patch_pixels();
    fill(l.embed_w, D, pp, pp);
    // positional bias starts at zero
    fill(l.w_u, H, D, D);
    fill(l.u_u, H, H, H);
    fill(l.w_r, H, D, D);
    fill(l.u_r, H, H, H);
    fill(l.w_c, H, D, D);
    fill(l.u_c, H, H, H);
    fill(l.tip_w, 3, H, H);
    fill(l.off_w, config.max_segments * config.offset_dims(), H, H);
    fill(l.stop_w, config.max_segments, H, H);
    return p;
}

Eigen::VectorXd embed_frame(const ModelParams& params, const FrameTensor& frame) {
    const Layout l = make_layout(params.config);
    const ConstViews v(params.flat.data(), params.config, l);
    const VectorXd mean = mean_patch_vector(params.config, frame);
    return v.embed_w * mean + v.pos_bias.rowwise().mean();
}

Eigen::VectorXd gru_step(const ModelParams& params, const VectorXd& z, const VectorXd& h_prev) {
    if (z.size() != params.config.feature_dim || h_prev.size() != params.config.hidden_dim) {
        throw DimensionMismatch("gru_step: input dims do not match config");
    }
    const Layout l = make_layout(params.config);
    const ConstViews v(params.flat.data(), params.config, l);
    return gru_forward(v, z, h_prev, nullptr);
}

PredictionOutput forward(const ModelParams& params, const std::vector<FrameTensor>& frames) {
    if (frames.empty()) throw EmptySequence("forward: empty frame sequence");
    const Layout l = make_layout(params.config);
    const ConstViews v(params.flat.data(), params.config, l);
    VectorXd h = VectorXd::Zero(params.config.hidden_dim);
    for (const FrameTensor& frame : frames) {
        const VectorXd mean = mean_patch_vector(params.config, frame);
        const VectorXd z = v.embed_w * mean + v.pos_bias.rowwise().mean();
        h = gru_forward(v, z, h, nullptr);
    }
    return heads(v, params.config, h);
}

ShapeTarget target_from_spherical(const repr::SphericalCurve& sc) {
    ShapeTarget t;
    t.tip = sc.tip;
    t.length = sc.length();
    t.steps.resize(2 * t.length);
    for (int k = 0; k < t.length; ++k) {
        t.steps(2 * k) = sc.offsets[k].first;
        t.steps(2 * k + 1) = sc.offsets[k].second;
    }
    return t;
}

ShapeTarget target_from_curve(const Curve3D& truth, double radius, Representation rep) {
    if (rep == Representation::kSpherical) {
        return target_from_spherical(repr::encode(truth, radius));
    }
    const std::vector<Vec3> pts = resample_points(truth.points, radius, /*keep_tail=*/false);
    ShapeTarget t;
    t.tip = pts.front();
    t.length = static_cast<int>(pts.size()) - 1;
    t.steps.resize(3 * t.length);
    for (int k = 0; k < t.length; ++k) {
        const Vec3 d = pts[k + 1] - pts[k];
        t.steps.segment<3>(3 * k) = d;
    }
    return t;
}

double total_loss(const PredictionOutput& pred, const ShapeTarget& target,
                  const TrainingConfig& cfg, LossGrads* grads) {
    const int M = static_cast<int>(pred.stop_logits.size());
    const int od = pred.representation == Representation::kSpherical ? 2 : 3;
    if (target.length > M) throw LengthExceedsM("total_loss: target longer than max segments");
    if (target.length < 1) throw DomainError("total_loss: empty target");
    if (target.steps.size() != od * target.length) {
        throw DimensionMismatch("total_loss: target representation mismatch");
    }

    const Vec3 dtip = pred.tip - target.tip;
    const double tip_term = cfg.lambda_tip * dtip.squaredNorm();

    const int valid = od * target.length;
    double off_sq = 0.0;
    for (int i = 0; i < valid; ++i) {
        const double d = pred.offsets(i) - target.steps(i);
        off_sq += d * d;
    }
    const double off_term = cfg.lambda_offset * off_sq / target.length;

    double bce = 0.0;
    for (int j = 0; j < M; ++j) {
        const double label = j == target.length - 1 ? 1.0 : 0.0;
        bce += bce_from_logit(pred.stop_logits(j), label);
    }
    const double stop_term = cfg.lambda_stop * bce / M;

    if (grads) {
        grads->d_tip = 2.0 * cfg.lambda_tip * dtip;
        grads->d_offsets = VectorXd::Zero(pred.offsets.size());
        for (int i = 0; i < valid; ++i) {
            grads->d_offsets(i) =
                2.0 * cfg.lambda_offset * (pred.offsets(i) - target.steps(i)) / target.length;
        }
        grads->d_stop_logits.resize(M);
        for (int j = 0; j < M; ++j) {
            const double label = j == target.length - 1 ? 1.0 : 0.0;
            grads->d_stop_logits(j) = cfg.lambda_stop * (pred.stop_probs(j) - label) / M;
        }
    }
    return tip_term + off_term + stop_term;
}

double sequence_loss(const ModelParams& params, const TrainSample& sample,
                     const TrainingConfig& cfg, VectorXd* grad) {
    if (sample.frames.empty()) throw EmptySequence("sequence_loss: empty frame sequence");
    const ModelConfig& c = params.config;
    const Layout l = make_layout(c);
    const ConstViews v(params.flat.data(), c, l);

    const int T = static_cast<int>(sample.frames.size());
    std::vector<VectorXd> means(T);
    std::vector<GruCache> caches(T);
    VectorXd h = VectorXd::Zero(c.hidden_dim);
    for (int t = 0; t < T; ++t) {
        means[t] = mean_patch_vector(c, sample.frames[t]);
        const VectorXd z = v.embed_w * means[t] + v.pos_bias.rowwise().mean();
        h = gru_forward(v, z, h, &caches[t]);
    }
    const PredictionOutput out = heads(v, c, h);

    LossGrads lg;
    const double loss = total_loss(out, sample.target, cfg, grad ? &lg : nullptr);
    if (!grad) return loss;

    grad->setZero(l.total);
    Views g(grad->data(), c, l);

    g.tip_w += lg.d_tip * h.transpose();
    g.tip_b += lg.d_tip;
    g.off_w += lg.d_offsets * h.transpose();
    g.off_b += lg.d_offsets;
    g.stop_w += lg.d_stop_logits * h.transpose();
    g.stop_b += lg.d_stop_logits;

    VectorXd dh = v.tip_w.transpose() * lg.d_tip + v.off_w.transpose() * lg.d_offsets +
                  v.stop_w.transpose() * lg.d_stop_logits;

    const double inv_patches = 1.0 / static_cast<double>(c.patch_count());
    for (int t = T - 1; t >= 0; --t) {
        VectorXd dz, dh_prev;
        gru_backward(v, g, caches[t], dh, &dz, &dh_prev);
        g.embed_w += dz * means[t].transpose();
        const VectorXd dpos = dz * inv_patches;
        g.pos_bias.colwise() += dpos;
        dh = std::move(dh_prev);
    }
    return loss;
}

Curve3D decode_prediction(const PredictionOutput& out, double radius, double stop_threshold) {
    if (!(stop_threshold > 0.0) || !(stop_threshold < 1.0)) {
        throw DomainError("decode_prediction: threshold must be in (0, 1)");
    }
    const int M = static_cast<int>(out.stop_probs.size());
    int stop_index = -1;
    for (int j = 0; j < M; ++j) {
        if (out.stop_probs(j) >= stop_threshold) {
            stop_index = j;
            break;
        }
    }
    if (stop_index < 0) {
        out.stop_probs.maxCoeff(&stop_index);
    }
    const int segments = stop_index + 1;

    if (out.representation == Representation::kSpherical) {
        repr::SphericalCurve sc;
        sc.tip = out.tip;
        sc.radius = radius;
        sc.offsets.reserve(segments);
        for (int k = 0; k < segments; ++k) {
            sc.offsets.emplace_back(out.offsets(2 * k), out.offsets(2 * k + 1));
        }
        return repr::decode(sc);
    }
    Curve3D curve;
    curve.points.reserve(segments + 1);
    Vec3 p = out.tip;
    curve.points.push_back(p);
    for (int k = 0; k < segments; ++k) {
        p += Vec3(out.offsets(3 * k), out.offsets(3 * k + 1), out.offsets(3 * k + 2));
        curve.points.push_back(p);
    }
    return curve;
}

namespace {

// Nesterov-Adam step over the flat parameter vector.
struct NAdam {
    VectorXd m, v;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;

    explicit NAdam(int n) : m(VectorXd::Zero(n)), v(VectorXd::Zero(n)) {}

    void step(VectorXd& theta, const VectorXd& g, double lr) {
        ++t;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        const VectorXd m_hat = m / bc1;
        const VectorXd v_hat = v / bc2;
        const VectorXd m_bar = beta1 * m_hat + ((1.0 - beta1) / bc1) * g;
        theta -= lr * (m_bar.array() / (v_hat.array().sqrt() + eps)).matrix();
    }
};

}  // namespace

TrainResult train(const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, const ModelConfig& mconfig,
                  const TrainingConfig& cfg) {
    if (train_set.empty() || val_set.empty()) {
        throw EmptyDataset("train: empty train or validation split");
    }
    ModelParams params = init_params(mconfig, cfg.seed);
    const int n_params = static_cast<int>(params.flat.size());

    TrainResult result;
    result.params = params;
    if (cfg.max_epochs == 0) return result;

    NAdam opt(n_params);
    Rng rng(cfg.seed + 1);
    double lr = cfg.lr;
    double best_val = std::numeric_limits<double>::infinity();
    int stagnant_sched = 0;
    int stagnant_early = 0;

    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    VectorXd grad(n_params), batch_grad(n_params);

    auto eval_set = [&](const std::vector<TrainSample>& set) {
        double sum = 0.0;
        for (const auto& s : set) sum += sequence_loss(params, s, cfg, nullptr);
        return sum / static_cast<double>(set.size());
    };

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        // deterministic shuffle
        for (size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.index(i)]);
        }

        double train_sum = 0.0;
        size_t done = 0;
        while (done < order.size()) {
            const size_t take = std::min<size_t>(cfg.batch_size, order.size() - done);
            batch_grad.setZero();
            // fixed accumulation order inside the batch
            std::vector<int> batch(order.begin() + done, order.begin() + done + take);
            std::sort(batch.begin(), batch.end());
            for (int idx : batch) {
                train_sum += sequence_loss(params, train_set[idx], cfg, &grad);
                batch_grad += grad;
            }
            batch_grad /= static_cast<double>(take);
            const double gnorm = batch_grad.norm();
            if (!std::isfinite(gnorm)) throw NonFiniteLoss("train: non-finite gradient");
            if (cfg.clip_norm > 0.0 && gnorm > cfg.clip_norm) {
                batch_grad *= cfg.clip_norm / gnorm;
            }
            opt.step(params.flat, batch_grad, lr);
            done += take;
        }
        const double train_loss = train_sum / static_cast<double>(order.size());
        const double val_loss = eval_set(val_set);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw NonFiniteLoss("train: non-finite loss");
        }
        result.log.push_back({epoch, train_loss, val_loss, lr});

        if (val_loss < best_val) {
            best_val = val_loss;
            result.params = params;
            result.best_epoch = epoch;
            stagnant_sched = 0;
            stagnant_early = 0;
        } else {
            ++stagnant_sched;
            ++stagnant_early;
            if (stagnant_sched >= cfg.scheduler_patience) {
                lr *= cfg.scheduler_factor;
                stagnant_sched = 0;
            }
            if (stagnant_early >= cfg.early_stop_patience) break;
        }
    }
    return result;
}

void save_model(const ModelParams& params, const std::string& path) {
    nlohmann::json j;
    j["schema"] = 1;
    j["config"] = {
        {"image_size", params.config.image_size},
        {"patch_size", params.config.patch_size},
        {"feature_dim", params.config.feature_dim},
        {"hidden_dim", params.config.hidden_dim},
        {"max_segments", params.config.max_segments},
        {"radius", params.config.radius},
        {"stop_threshold", params.config.stop_threshold},
        {"window", params.config.window},
        {"representation",
         params.config.representation == Representation::kSpherical ? "spherical" : "cartesian"},
    };
    j["param_count"] = params.flat.size();
    std::vector<double> values(params.flat.data(), params.flat.data() + params.flat.size());
    j["params"] = values;
    std::ofstream out(path);
    if (!out) throw InputError("save_model: cannot open " + path);
    out << j.dump() << "\n";
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("load_model: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_model: " + std::string(e.what()));
    }
    ModelParams p;
    try {
        const auto& c = j.at("config");
        p.config.image_size = c.at("image_size").get<int>();
        p.config.patch_size = c.at("patch_size").get<int>();
        p.config.feature_dim = c.at("feature_dim").get<int>();
        p.config.hidden_dim = c.at("hidden_dim").get<int>();
        p.config.max_segments = c.at("max_segments").get<int>();
        p.config.radius = c.at("radius").get<double>();
        p.config.stop_threshold = c.at("stop_threshold").get<double>();
        p.config.window = c.at("window").get<int>();
        p.config.representation = c.at("representation").get<std::string>() == "spherical"
                                      ? Representation::kSpherical
                                      : Representation::kCartesian;
        const auto values = j.at("params").get<std::vector<double>>();
        if (static_cast<int>(values.size()) != param_count(p.config) ||
            j.at("param_count").get<int>() != static_cast<int>(values.size())) {
            throw SchemaError("load_model: parameter count does not match dims header");
        }
        p.flat = Eigen::Map<const VectorXd>(values.data(), values.size());
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("load_model: " + std::string(e.what()));
    }
    return p;
}

}  // namespace wirerecon::pred
