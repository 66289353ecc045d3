#pragma once

#include <Eigen/Dense>

namespace wirerecon {

/// Grayscale frame, values normalized to [0, 1], row-major (row = image y).
struct FrameTensor {
    Eigen::MatrixXd pixels;

    int height() const { return static_cast<int>(pixels.rows()); }
    int width() const { return static_cast<int>(pixels.cols()); }
};

}  // namespace wirerecon
