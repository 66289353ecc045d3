#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wirerecon/rng.hpp"
#include "wirerecon/types.hpp"

namespace wrtest {

using wirerecon::Mat3;
using wirerecon::Mat34;
using wirerecon::Vec2;
using wirerecon::Vec3;

/// Projection matrix of a plausible synthetic camera, plus its parts.
struct TestCamera {
    Mat3 K;
    Mat3 R;
    Vec3 t;
    Mat34 P;
};

inline Mat3 rotation_xyz(double ax, double ay, double az) {
    Mat3 rx, ry, rz;
    rx << 1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax), std::cos(ax);
    ry << std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0, std::cos(ay);
    rz << std::cos(az), -std::sin(az), 0, std::sin(az), std::cos(az), 0, 0, 0, 1;
    return rz * ry * rx;
}

inline TestCamera make_test_camera(double fx = 1200, double fy = 1150, double cx = 512,
                                   double cy = 500, double skew = 0.4) {
    TestCamera cam;
    cam.K << fx, skew, cx, 0, fy, cy, 0, 0, 1;
    cam.R = rotation_xyz(0.12, -0.25, 0.33);
    cam.t = Vec3(12.0, -6.0, 1100.0);
    Mat34 Rt;
    Rt.leftCols<3>() = cam.R;
    Rt.col(3) = cam.t;
    cam.P = cam.K * Rt;
    return cam;
}

/// Scratch directory unique to a test name, wiped on construction.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("wirerecon_test_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline double frobenius_up_to_sign(const Mat34& a, const Mat34& b) {
    return std::min((a - b).norm(), (a + b).norm());
}

}  // namespace wrtest
