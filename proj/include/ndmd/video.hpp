#pragma once

#include <vector>

#include "ndmd/common.hpp"

namespace ndmd {

// Dense T x H x W real field with uniform timestamps t_k = t0 + k dt.
// Values live in memory as doubles; the NVID container stores them as f32.
// The spatial domain maps to [-1,1]^2 with pixel centers at
// x_j = -1 + 2(j+0.5)/W, y_i = -1 + 2(i+0.5)/H (row-major frames).
struct VideoGrid {
    int T = 0, H = 0, W = 0;
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> data;  // frame-major, then row-major

    VideoGrid() = default;
    VideoGrid(int T_, int H_, int W_, double t0_, double dt_)
        : T(T_), H(H_), W(W_), t0(t0_), dt(dt_) {
        require(T >= 1 && H >= 1 && W >= 1, "video: T, H, W must be >= 1");
        require(dt > 0.0, "video: dt must be positive");
        data.assign(std::size_t(T) * H * W, 0.0);
    }

    std::size_t frame_size() const { return std::size_t(H) * W; }
    double time(int k) const { return t0 + k * dt; }

    double& at(int k, int i, int j) { return data[frame_size() * k + std::size_t(i) * W + j]; }
    double at(int k, int i, int j) const {
        return data[frame_size() * k + std::size_t(i) * W + j];
    }

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    frame(int k) const {
        return {data.data() + frame_size() * std::size_t(k), H, W};
    }

    void set_frame(int k, const Eigen::MatrixXd& f) {
        require(f.rows() == H && f.cols() == W, "video: frame shape mismatch");
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) at(k, i, j) = f(i, j);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double pixel_x(int j) const { return -1.0 + 2.0 * (j + 0.5) / W; }
    double pixel_y(int i) const { return -1.0 + 2.0 * (i + 0.5) / H; }
};

}  // namespace ndmd
