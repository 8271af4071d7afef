#pragma once

#include <string>
#include <vector>

#include "ndmd/common.hpp"
#include "ndmd/decomp.hpp"
#include "ndmd/video.hpp"

namespace ndmd {

// ||a - b|| / ||b||, with b the ground truth.
double normalized_l2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct ErrorCurve {
    std::vector<double> times;
    std::vector<double> total_err;
    std::vector<double> dynamics_err;  // mean frame of each video removed
    double window_end = 0.0;           // data-fitting boundary
};

ErrorCurve error_curve(const VideoGrid& recon, const VideoGrid& truth, double window_end);

// Azimuthal unwrap: bilinear samples on the ring (radius, theta_i) per frame.
// Rows are angles (theta_i = 2 pi i / n_angles), columns are frames.
Eigen::MatrixXd cylinder_plot(const VideoGrid& video, double radius, int n_angles);

// Angular velocity of the brightest ring feature: phase-unwrapped per-frame
// argmax ridge, least-squares slope in radians per time unit.
double ring_slope(const Eigen::MatrixXd& cyl, double dt);

struct SpectrumRow {
    int k = 0;
    double alpha = 0.0;
    double omega = 0.0;
    double b_mod = 0.0;
    bool flagged = false;
};

// Sorted by alpha descending (slowest-decaying first); flags alpha < cutoff.
std::vector<SpectrumRow> spectrum_report(const ModalDecomposition& decomp,
                                         double cutoff = -0.05);

double bilinear_sample(const Eigen::MatrixXd& frame, double x, double y);

}  // namespace ndmd
