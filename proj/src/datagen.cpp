#include "ndmd/datagen.hpp"

#include <cmath>

#include "ndmd/rng.hpp"

namespace ndmd {

VideoGrid gen_hotspot(const HotspotSpec& spec, int T, int H, int W, double dt, double t0) {
    require(spec.orbit_radius > 0.0 && spec.gaussian_sigma > 0.0 && spec.total_flux > 0.0,
            "hotspot: radius, sigma, flux must be positive");
    require(spec.orbit_radius + 3.0 * spec.gaussian_sigma <= 1.0,
            "hotspot: orbit_radius + 3 sigma must fit inside the field of view");
    VideoGrid video(T, H, W, t0, dt);
    const double s2 = spec.gaussian_sigma * spec.gaussian_sigma;
    const double amp = spec.total_flux / (2.0 * M_PI * s2);
    const double dir = spec.clockwise ? -1.0 : 1.0;
    for (int k = 0; k < T; ++k) {
        double phi = spec.phi0 + dir * spec.angular_velocity * (k * dt);
        double cx = spec.orbit_radius * std::cos(phi);
        double cy = spec.orbit_radius * std::sin(phi);
        for (int i = 0; i < H; ++i) {
            double y = video.pixel_y(i);
            for (int j = 0; j < W; ++j) {
                double x = video.pixel_x(j);
                double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                video.at(k, i, j) = amp * std::exp(-0.5 * d2 / s2);
            }
        }
    }
    return video;
}

VideoGrid gen_linear_modal(const LinearModalSpec& spec, int T, int H, int W, double dt,
                           LinearModalTruth* truth, double t0) {
    require(spec.K >= 0, "linear_modal: K must be >= 0");
    require(int(spec.omega.size()) == spec.K && int(spec.b.size()) == spec.K,
            "linear_modal: omega and b must have K entries");
    for (const cplx& om : spec.omega)
        require(om.real() <= 0.0, "linear_modal: all alpha must be <= 0");

    // smooth random modes: low-order separable cosine series
    Rng rng(spec.mode_seed);
    const int D = spec.smooth_degree;
    auto smooth_field = [&](Eigen::MatrixXd& f) {
        f.setZero(H, W);
        for (int p = 0; p <= D; ++p)
            for (int q = 0; q <= D; ++q) {
                double c = rng.normal() / (1.0 + p + q);
                double px = rng.uniform(0.0, 2.0 * M_PI);
                double py = rng.uniform(0.0, 2.0 * M_PI);
                for (int i = 0; i < H; ++i) {
                    double y = -1.0 + 2.0 * (i + 0.5) / H;
                    for (int j = 0; j < W; ++j) {
                        double x = -1.0 + 2.0 * (j + 0.5) / W;
                        f(i, j) += c * std::cos(M_PI * p * x + px) * std::cos(M_PI * q * y + py);
                    }
                }
            }
    };

    ModalDecomposition d;
    d.pairs = true;
    d.H = H;
    d.W = W;
    d.time_scale = 1.0;
    d.omega.resize(spec.K + 1);
    d.b.resize(spec.K + 1);
    d.omega[0] = cplx(0.0, 0.0);
    d.b[0] = cplx(spec.b0, 0.0);
    d.modes.resize(std::size_t(spec.K) + 1);
    d.flagged.assign(std::size_t(spec.K) + 1, 0);

    Eigen::MatrixXd re, im;
    smooth_field(re);
    d.modes[0] = re.cast<cplx>();
    for (int k = 1; k <= spec.K; ++k) {
        d.omega[k] = spec.omega[std::size_t(k) - 1];
        d.b[k] = spec.b[std::size_t(k) - 1];
        smooth_field(re);
        smooth_field(im);
        d.modes[std::size_t(k)] = re.cast<cplx>() + cplx(0, 1) * im.cast<cplx>();
    }

    VideoGrid video(T, H, W, t0, dt);
    for (int k = 0; k < T; ++k) video.set_frame(k, d.frame(k * dt));
    if (truth) truth->decomp = std::move(d);
    return video;
}

double integrated_flux(const VideoGrid& video, int frame) {
    const double dA = 4.0 / (double(video.H) * video.W);
    double sum = 0.0;
    for (int i = 0; i < video.H; ++i)
        for (int j = 0; j < video.W; ++j) sum += video.at(frame, i, j);
    return sum * dA;
}

std::pair<double, double> frame_centroid(const VideoGrid& video, int frame) {
    double sum = 0.0, sx = 0.0, sy = 0.0;
    for (int i = 0; i < video.H; ++i)
        for (int j = 0; j < video.W; ++j) {
            double v = video.at(frame, i, j);
            sum += v;
            sx += v * video.pixel_x(j);
            sy += v * video.pixel_y(i);
        }
    require(sum != 0.0, "centroid: zero total intensity");
    return {sx / sum, sy / sum};
}

}  // namespace ndmd
