#pragma once

#include <cstdint>
#include <vector>

#include "ndmd/common.hpp"
#include "ndmd/decomp.hpp"
#include "ndmd/video.hpp"

namespace ndmd {

struct HotspotSpec {
    double orbit_radius = 0.5;      // field units ([-1,1] half-width = 1)
    double angular_velocity = 1.0;  // radians per time unit, sign set by direction
    double total_flux = 1.0;        // integral over the field domain
    double gaussian_sigma = 0.15;   // field units
    bool clockwise = false;
    double phi0 = 0.0;
};

// Orbiting Gaussian hot spot: frame k carries a 2D Gaussian of integrated
// flux total_flux centered at orbit_radius * (cos phi_k, sin phi_k),
// phi_k = phi0 +/- angular_velocity * k * dt.
VideoGrid gen_hotspot(const HotspotSpec& spec, int T, int H, int W, double dt, double t0 = 0.0);

// Exact synthetic instance of the modal model, plus its ground truth.
struct LinearModalTruth {
    ModalDecomposition decomp;  // conjugate-pair grid modes, time_scale 1
};

struct LinearModalSpec {
    int K = 3;
    std::uint64_t mode_seed = 0;
    std::vector<cplx> omega;  // length K, alpha <= 0 (Omega_0 = 0 implied)
    std::vector<cplx> b;      // length K (b_0 supplied separately)
    double b0 = 1.0;
    int smooth_degree = 2;    // max spatial frequency of the random modes
};

// Smooth seeded modes combined with the given spectrum/initial state; frames
// are evaluated with the same conjugate-pair formula the model uses. The
// returned truth reconstructs the video to round-off via decomp.frame(t).
VideoGrid gen_linear_modal(const LinearModalSpec& spec, int T, int H, int W, double dt,
                           LinearModalTruth* truth = nullptr, double t0 = 0.0);

// Per-frame integral of the field over the [-1,1]^2 domain (midpoint rule).
double integrated_flux(const VideoGrid& video, int frame);

// Intensity centroid of one frame in field coordinates.
std::pair<double, double> frame_centroid(const VideoGrid& video, int frame);

}  // namespace ndmd
