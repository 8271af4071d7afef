#pragma once

#include <vector>

#include "ndmd/common.hpp"

namespace ndmd {

// Grid-sampled modal decomposition, shared between the neural model export
// and the grid-based DMD fits.
//
// Two layouts:
//  - conjugate pairs: modes[0] is the real zero-frequency mode, modes[k]
//    (k>=1) one member of a conjugate pair; omega/b have 1+K entries and the
//    reconstruction is w0 b0 + 2 Re sum_k w_k exp(omega_k s t) b_k.
//  - free: every mode is an independent complex grid; reconstruction is the
//    real part of the full sum.
struct ModalDecomposition {
    bool pairs = true;
    int H = 0, W = 0;
    std::vector<Eigen::MatrixXcd> modes;  // each H x W
    Eigen::VectorXcd omega;
    Eigen::VectorXcd b;
    std::vector<char> flagged;  // decay below cutoff; safe to discard
    double time_scale = 1.0;    // s in exp(omega * s * t)

    int n_modes() const { return int(modes.size()); }
    int rank() const { return pairs ? 1 + 2 * (n_modes() - 1) : n_modes(); }

    Eigen::MatrixXd frame(double t) const {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(H, W);
        for (int k = 0; k < n_modes(); ++k) {
            cplx amp = std::exp(omega[k] * time_scale * t) * b[k];
            double scale = (pairs && k > 0) ? 2.0 : 1.0;
            acc += scale * (modes[std::size_t(k)] * amp);
        }
        return acc.real();
    }
};

}  // namespace ndmd
