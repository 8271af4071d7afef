#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ndmd/common.hpp"
#include "ndmd/threading.hpp"
#include "ndmd/video.hpp"

namespace ndmd {

struct PixelObservation {
    double x = 0, y = 0;  // normalized field coordinates in [-1, 1]
    double t = 0;
    double value = 0;
    double sigma = 1;
};

struct VisibilityObservation {
    double u = 0, v = 0;  // cycles per field of view
    double t = 0;
    cplx vis;
    double sigma = 1;  // RMS of the complex noise, sigma^2 = E|n|^2
};

// Exactly one of the two vectors is populated.
struct ObservationSet {
    std::vector<PixelObservation> pixels;
    std::vector<VisibilityObservation> vis;

    bool is_pixel() const { return !pixels.empty(); }
    bool is_vis() const { return !vis.empty(); }
};

struct Station {
    std::string name;
    double x = 0, y = 0, z = 0;  // geocentric meters
};

struct StationTable {
    std::vector<Station> stations;
};

struct UVSample {
    double t = 0;
    int station_a = 0, station_b = 0;
    double u = 0, v = 0;
    double sigma = 0;
};

struct UVTrack {
    std::vector<UVSample> entries;
};

// Sparse pixel sampling of a video. fixed_mask reuses one random pixel
// subset for every frame; otherwise the subset is redrawn per frame. Values
// get zero-mean Gaussian noise of std noise_sigma; the recorded sigma is
// noise_sigma, or sigma_floor when noise_sigma = 0.
std::vector<PixelObservation> sample_pixels(const VideoGrid& video, double fraction,
                                            std::uint64_t seed, double noise_sigma,
                                            bool fixed_mask, double sigma_floor = 1e-3);

struct UVTrackConfig {
    double source_dec = 0.0;        // radians
    double ha_start = 0.0;          // hour angle, radians
    double ha_stop = 0.0;
    double ha_step = 0.0;           // radians, > 0
    double wavelength = 1.3e-3;     // meters
    double field_of_view = 1.0;     // radians; converts to cycles per FOV
    double elevation_cutoff = 10.0 * M_PI / 180.0;  // radians; < -pi/2 disables
};

// Earth-rotation synthesis from a station table. For baseline B = r_a - r_b:
//   u = (B_x sin H + B_y cos H) / lambda
//   v = (-B_x cos H sin dec + B_y sin H sin dec + B_z cos dec) / lambda
// then scaled by the field of view into cycles per FOV. Baselines with
// either station below the elevation cutoff are dropped.
UVTrack uv_track(const StationTable& stations, const UVTrackConfig& cfg);

// Direct-summation nonuniform DFT of a grid image over [-1,1]^2:
//   V(u,v) = sum_p I_p exp(-2 pi i (u x^_p + v y^_p)) dA
// with pixel centers (x^, y^) normalized to [-1/2, 1/2) and dA = 1/(H W).
template <class T>
void nudft(const MatX<T>& image, const std::vector<std::pair<double, double>>& points,
           std::vector<std::complex<T>>& out, int workers = 1) {
    const int H = int(image.rows());
    const int W = int(image.cols());
    require(H >= 1 && W >= 1, "nudft: empty image");
    if (!image.allFinite()) throw DataError("nudft: non-finite image");
    out.assign(points.size(), std::complex<T>(0, 0));
    const T dA = T(1) / (T(H) * T(W));
    parallel_chunks(points.size(), 16, workers, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t q = b; q < e; ++q) {
            const double u = points[q].first;
            const double v = points[q].second;
            std::complex<T> acc(0, 0);
            for (int i = 0; i < H; ++i) {
                const double yh = (-1.0 + 2.0 * (i + 0.5) / H) * 0.5;
                // row phasor: exp(-2 pi i v y^); column phasor advances by a
                // constant multiplier so the inner loop is one complex fma
                const double col_step = -2.0 * M_PI * u * (1.0 / W);
                const double col0 = -2.0 * M_PI * u * ((-1.0 + 1.0 / W) * 0.5);
                const std::complex<T> step(T(std::cos(col_step)), T(std::sin(col_step)));
                std::complex<T> phase(
                    T(std::cos(col0 - 2.0 * M_PI * v * yh)),
                    T(std::sin(col0 - 2.0 * M_PI * v * yh)));
                for (int j = 0; j < W; ++j) {
                    acc += image(i, j) * phase;
                    phase *= step;
                }
            }
            out[q] = acc * dA;
        }
    });
}

Eigen::VectorXcd nudft(const Eigen::MatrixXd& image,
                       const std::vector<std::pair<double, double>>& points, int workers = 1);

// Visibilities of a video along a uv track (nearest frame in time), with
// complex Gaussian thermal noise. The per-visibility sigma is
// max(frac_noise |V|, floor) with floor = floor_frac * max|V|; sigma is the
// RMS of the complex noise (per-component std sigma/sqrt(2)), so the
// chi-squared of Eq-style |V - V^|^2 / sigma^2 averages to 1 at truth.
std::vector<VisibilityObservation> observe_visibilities(const VideoGrid& video,
                                                        const UVTrack& track, double frac_noise,
                                                        std::uint64_t seed,
                                                        double floor_frac = 1e-3,
                                                        int workers = 1);

// Affine remap of track times onto [t_start, t_end] (e.g. a video's span),
// preserving entry order.
UVTrack retime_track(const UVTrack& track, double t_start, double t_end);

StationTable read_station_csv(const std::string& path);
void write_uv_track_csv(const std::string& path, const UVTrack& track);

}  // namespace ndmd
