#include "wirerecon/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "wirerecon/geometry.hpp"
#include "wirerecon/rng.hpp"

namespace wirerecon::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 random_unit(Rng& rng) {
    // uniform on the sphere
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(-kPi, kPi);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

Vec3 any_orthogonal(const Vec3& n) {
    const Vec3 ref = std::abs(n.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    return n.cross(ref).normalized();
}

// Centripetal Catmull-Rom segment evaluation between p1 and p2.
Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double u) {
    auto knot = [](double t, const Vec3& a, const Vec3& b) {
        return t + std::sqrt((b - a).norm());
    };
    const double t0 = 0.0;
    const double t1 = knot(t0, p0, p1);
    const double t2 = knot(t1, p1, p2);
    const double t3 = knot(t2, p2, p3);
    const double t = t1 + u * (t2 - t1);
    auto lerp = [&](const Vec3& a, const Vec3& b, double ta, double tb) -> Vec3 {
        if (tb - ta <= 0.0) return a;
        return (tb - t) / (tb - ta) * a + (t - ta) / (tb - ta) * b;
    };
    const Vec3 a1 = lerp(p0, p1, t0, t1);
    const Vec3 a2 = lerp(p1, p2, t1, t2);
    const Vec3 a3 = lerp(p2, p3, t2, t3);
    const Vec3 b1 = lerp(a1, a2, t0, t2);
    const Vec3 b2 = lerp(a2, a3, t1, t3);
    return lerp(b1, b2, t1, t2);
}

}  // namespace

Curve3D gen_curve(const CurveGenParams& params) {
    if (params.n_control < 4) throw DomainError("gen_curve: n_control must be >= 4");
    if (!(params.length_range.first < params.length_range.second)) {
        throw DomainError("gen_curve: empty length range");
    }
    Rng rng(params.seed);

    // Control points along a randomly oriented spine with lateral
    // perturbations sized so the resulting curvature is roughly
    // curvature_scale; everything is rescaled to the target arclength below.
    const Vec3 spine_dir = random_unit(rng);
    const Vec3 lat_u = any_orthogonal(spine_dir);
    const Vec3 lat_v = spine_dir.cross(lat_u).normalized();
    const double spine_len = 160.0;
    const double spacing = spine_len / (params.n_control - 1);
    const double amp = 0.5 * params.curvature_scale * spacing * spacing;

    std::vector<Vec3> ctrl;
    ctrl.reserve(params.n_control + 8);
    for (int i = 0; i < params.n_control; ++i) {
        const Vec3 base = spine_dir * (spacing * i);
        ctrl.push_back(base + lat_u * rng.normal(0.0, amp) + lat_v * rng.normal(0.0, amp));
    }

    const bool insert_loop = rng.u01() < params.loop_probability;
    if (insert_loop) {
        const int j = 1 + static_cast<int>(rng.index(params.n_control - 2));
        const double rho = rng.uniform(0.12, 0.2) * spine_len;
        const Vec3 normal = random_unit(rng);
        const Vec3 u = any_orthogonal(normal);
        const Vec3 v = normal.cross(u).normalized();
        const Vec3 center = ctrl[j] + rho * u;
        // a bit over a full turn with a small out-of-plane pitch: the spline
        // keeps a genuine overlap after smoothing, so projections cross
        std::vector<Vec3> loop;
        const int segs = 8;
        const double total = 2.0 * kPi + 0.7;
        for (int k = 1; k <= segs; ++k) {
            const double alpha = total * k / segs;
            loop.push_back(center - rho * std::cos(alpha) * u + rho * std::sin(alpha) * v +
                           0.12 * rho * (alpha / total) * normal);
        }
        ctrl.insert(ctrl.begin() + j + 1, loop.begin(), loop.end());
    }

    // Phantom endpoints by reflection, then dense sampling.
    std::vector<Vec3> pts;
    const int n = static_cast<int>(ctrl.size());
    const Vec3 head = 2.0 * ctrl[0] - ctrl[1];
    const Vec3 tail = 2.0 * ctrl[n - 1] - ctrl[n - 2];
    for (int i = 0; i + 1 < n; ++i) {
        const Vec3& p0 = i == 0 ? head : ctrl[i - 1];
        const Vec3& p1 = ctrl[i];
        const Vec3& p2 = ctrl[i + 1];
        const Vec3& p3 = i + 2 < n ? ctrl[i + 2] : tail;
        const int steps = std::max(8, static_cast<int>(std::ceil((p2 - p1).norm() * 4.0)));
        for (int k = 0; k < steps; ++k) {
            const Vec3 q = catmull_rom(p0, p1, p2, p3, static_cast<double>(k) / steps);
            if (pts.empty() || (q - pts.back()).norm() > 1e-9) pts.push_back(q);
        }
    }
    pts.push_back(ctrl[n - 1]);

    // Scale to the target arclength (kept off the range edges so the 1 mm
    // chord resampling stays inside), then move the tip to the origin.
    const double margin = 0.02 * (params.length_range.second - params.length_range.first);
    const double target = rng.uniform(params.length_range.first + margin,
                                      params.length_range.second - margin);
    const double dense_len = polyline_length(pts);
    const double scale = target / dense_len;
    for (Vec3& p : pts) p *= scale;

    std::vector<Vec3> resampled = resample_points(pts, 1.0, /*keep_tail=*/true);
    const Vec3 tip = resampled.front();
    for (Vec3& p : resampled) p -= tip;
    return Curve3D{std::move(resampled)};
}

recon::StereoRig make_camera_pair(double baseline_angle, double distance, double focal_px,
                                  const Vec2& principal_point) {
    if (!(baseline_angle > 0.0) || !(baseline_angle < kPi)) {
        throw DegenerateAngle("make_camera_pair: baseline angle must be in (0, pi)");
    }
    if (!(distance > 0.0) || !(focal_px > 0.0)) {
        throw DomainError("make_camera_pair: distance and focal must be positive");
    }
    Mat3 K = Mat3::Identity();
    K(0, 0) = K(1, 1) = focal_px;
    K(0, 2) = principal_point.x();
    K(1, 2) = principal_point.y();

    auto look_at_origin = [&](double azimuth) {
        const Vec3 center(-distance * std::sin(azimuth), 0.0, -distance * std::cos(azimuth));
        const Vec3 z_cam = (-center).normalized();
        const Vec3 up(0.0, 1.0, 0.0);
        const Vec3 x_cam = up.cross(z_cam).normalized();
        const Vec3 y_cam = z_cam.cross(x_cam).normalized();
        Mat3 R;
        R.row(0) = x_cam;
        R.row(1) = y_cam;
        R.row(2) = z_cam;
        return make_camera(K, R, -R * center);
    };

    return recon::make_rig(look_at_origin(0.0), look_at_origin(baseline_angle));
}

FrameTensor render_frame(const std::vector<Vec2>& poly, int image_size) {
    FrameTensor frame;
    frame.pixels = Eigen::MatrixXd::Zero(image_size, image_size);
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[i + 1];
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()))) - 2);
        const int x1 = std::min(image_size - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()))) + 2);
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()))) - 2);
        const int y1 = std::min(image_size - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()))) + 2);
        const Vec2 d = b - a;
        const double len2 = d.squaredNorm();
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec2 p(x, y);
                double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double dist = (p - (a + t * d)).norm();
                const double cov = std::clamp(1.0 - dist, 0.0, 1.0);
                if (cov > frame.pixels(y, x)) frame.pixels(y, x) = cov;
            }
        }
    }
    return frame;
}

std::vector<Curve3D> make_trajectory(const Curve3D& base, int n_frames,
                                     const Vec3& start_tip, const Vec3& drift_per_frame) {
    validate(base);
    if (n_frames < 1) throw DomainError("make_trajectory: need at least 1 frame");
    std::vector<Curve3D> out;
    out.reserve(n_frames);
    for (int f = 0; f < n_frames; ++f) {
        const Vec3 offset = start_tip + static_cast<double>(f) * drift_per_frame - base.points.front();
        Curve3D c;
        c.points.reserve(base.points.size());
        for (const Vec3& p : base.points) c.points.push_back(p + offset);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<SyntheticSample> render_sequence(const std::vector<Curve3D>& trajectory,
                                             const recon::StereoRig& rig,
                                             const RenderConfig& cfg) {
    if (trajectory.empty()) throw DomainError("render_sequence: empty trajectory");
    if (cfg.image_size < 8) throw DomainError("render_sequence: image too small");
    if (cfg.window < 1) throw DomainError("render_sequence: window must be >= 1");
    Rng rng(cfg.seed);

    auto project_poly = [&](const Curve3D& c, const CameraParameters& cam, char view) {
        Polyline2D poly;
        poly.view_id = view;
        poly.points.reserve(c.points.size());
        for (const Vec3& p : c.points) {
            const Vec2 x = project(cam, p);
            if (x.x() < 0.0 || x.y() < 0.0 || x.x() > cfg.image_size - 1 ||
                x.y() > cfg.image_size - 1) {
                throw OutOfBounds("render_sequence: projection exits the image");
            }
            poly.points.push_back(x);
        }
        return poly;
    };

    std::vector<FrameTensor> frames;
    frames.reserve(trajectory.size());
    std::vector<SyntheticSample> samples;
    samples.reserve(trajectory.size());

    for (size_t f = 0; f < trajectory.size(); ++f) {
        validate(trajectory[f]);
        SyntheticSample s;
        s.truth = trajectory[f];
        s.rig = rig;
        s.poly_a = project_poly(trajectory[f], rig.cam_a, 'A');
        s.poly_b = project_poly(trajectory[f], rig.cam_b, 'B');
        s.poly_a.frame_index = static_cast<int>(f);
        s.poly_b.frame_index = static_cast<int>(f);

        frames.push_back(render_frame(s.poly_a.points, cfg.image_size));

        if (cfg.annotation_noise_px > 0.0) {
            for (Vec2& p : s.poly_a.points) {
                p += Vec2(rng.normal(0.0, cfg.annotation_noise_px),
                          rng.normal(0.0, cfg.annotation_noise_px));
            }
            for (Vec2& p : s.poly_b.points) {
                p += Vec2(rng.normal(0.0, cfg.annotation_noise_px),
                          rng.normal(0.0, cfg.annotation_noise_px));
            }
        }

        const size_t begin = f + 1 >= static_cast<size_t>(cfg.window) ? f + 1 - cfg.window : 0;
        s.frames_a.assign(frames.begin() + begin, frames.begin() + f + 1);
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace wirerecon::synth
