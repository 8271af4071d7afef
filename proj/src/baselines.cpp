#include "ndmd/baselines.hpp"

#include <cmath>

namespace ndmd {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    int radius = sigma > 0.0 ? int(std::ceil(4.0 * sigma)) : 0;
    std::vector<double> k(std::size_t(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = sigma > 0.0 ? std::exp(-0.5 * double(i) * i / (sigma * sigma)) : (i == 0);
        k[std::size_t(i + radius)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

// symmetric reflection: -1 -> 0, n -> n-1
inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace

double gaussian_blur_center_weight(double sigma) {
    auto k = gaussian_kernel(sigma);
    double c = k[k.size() / 2];
    return c * c;  // separable 2D kernel
}

Eigen::MatrixXd gaussian_blur(const Eigen::MatrixXd& img, double sigma) {
    auto k = gaussian_kernel(sigma);
    const int radius = int(k.size() / 2);
    const int H = int(img.rows()), W = int(img.cols());
    Eigen::MatrixXd tmp(H, W), out(H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d)
                acc += k[std::size_t(d + radius)] * img(i, reflect(j + d, W));
            tmp(i, j) = acc;
        }
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d)
                acc += k[std::size_t(d + radius)] * tmp(reflect(i + d, H), j);
            out(i, j) = acc;
        }
    return out;
}

Eigen::MatrixXd threedvar_step(const Eigen::MatrixXd& background,
                               const std::vector<PixelObservation>& obs, const AssimConfig& cfg) {
    require(cfg.blend_weight >= 0.0 && cfg.blend_weight <= 1.0,
            "threedvar: blend_weight must be in [0, 1]");
    const int H = int(background.rows()), W = int(background.cols());
    Eigen::MatrixXd innovation = Eigen::MatrixXd::Zero(H, W);
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(H, W);
    for (const auto& o : obs) {
        // nearest pixel center
        int j = int(std::lround((o.x + 1.0) * W / 2.0 - 0.5));
        int i = int(std::lround((o.y + 1.0) * H / 2.0 - 0.5));
        require(i >= 0 && i < H && j >= 0 && j < W,
                "threedvar: observation outside the analysis grid");
        innovation(i, j) += o.value - background(i, j);
        count(i, j) += 1.0;
    }
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            if (count(i, j) > 0.0) innovation(i, j) /= count(i, j);

    Eigen::MatrixXd spread = gaussian_blur(innovation, cfg.smooth_sigma);
    double k0 = gaussian_blur_center_weight(cfg.smooth_sigma);
    return background + (cfg.blend_weight / k0) * spread;
}

AssimSequence threedvar_run(const std::vector<std::vector<PixelObservation>>& obs_by_time,
                            const std::vector<double>& times, const Eigen::MatrixXd& background0,
                            const AssimConfig& cfg) {
    require(!obs_by_time.empty(), "threedvar_run: empty observation stream");
    require(obs_by_time.size() == times.size(), "threedvar_run: time/group count mismatch");
    for (std::size_t k = 1; k < times.size(); ++k)
        require(times[k] > times[k - 1], "threedvar_run: times must be strictly increasing");

    AssimSequence seq;
    seq.times = times;
    Eigen::MatrixXd background = background0;
    for (const auto& group : obs_by_time) {
        background = threedvar_step(background, group, cfg);
        seq.frames.push_back(background);
    }
    return seq;
}

VideoGrid assim_to_video(const AssimSequence& seq) {
    require(!seq.frames.empty(), "assim_to_video: empty sequence");
    double dt = seq.times.size() > 1 ? seq.times[1] - seq.times[0] : 1.0;
    VideoGrid video(int(seq.frames.size()), int(seq.frames[0].rows()),
                    int(seq.frames[0].cols()), seq.times[0], dt);
    for (int k = 0; k < video.T; ++k) video.set_frame(k, seq.frames[std::size_t(k)]);
    return video;
}

}  // namespace ndmd
