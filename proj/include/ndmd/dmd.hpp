#pragma once

#include <cstdint>
#include <optional>

#include "ndmd/common.hpp"
#include "ndmd/decomp.hpp"
#include "ndmd/video.hpp"

namespace ndmd {

// Snapshot pair X, X' (columns shifted by one step) plus the frame spacing.
struct SnapshotMatrix {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Xp;
    double dt = 1.0;
};

SnapshotMatrix snapshots_from_video(const VideoGrid& video);

struct DiscreteSpectrum {
    Eigen::VectorXcd lambda;  // discrete eigenvalues
    Eigen::MatrixXcd modes;   // [n_pixels x r]
};

// Exact DMD: X = U S V^T truncated to rank r, A~ = U^T X' V S^{-1},
// eig(A~) -> (Lambda, W~), modes W = X' V S^{-1} W~.
// Singular values below 1e-12 of the largest count as zero; asking for more
// rank than that raises a rank-deficiency error naming the usable rank.
DiscreteSpectrum exact_dmd(const SnapshotMatrix& snap, int r);

// Omega_i = log(Lambda_i) / dt, principal branch. Lambda_i = 0 is an error.
Eigen::VectorXcd to_continuous(const Eigen::VectorXcd& lambda, double dt);

struct OptDmdConfig {
    int rank = 4;
    double tv_weight = 0.0;
    int iters = 200;
    std::uint64_t seed = 0;
    double init_step = 1e-2;      // initial line-search step
    double init_perturb = 0.0;    // relative seeded perturbation of the DMD init
    int batch_frames = 0;         // 0 = full batch
};

struct OptDmdResult {
    ModalDecomposition decomp;    // free complex grid modes
    double objective = 0.0;       // final full-batch objective incl. TV
    std::vector<double> objective_history;
};

// TV-regularized optimized DMD on a dense video: gradient descent with
// backtracking on (mode grids, Omega), alpha clamped <= 0, and
// b = W^+ X_0 recomputed from the first frame each accepted step.
OptDmdResult optdmd_fit(const VideoGrid& video, const OptDmdConfig& cfg);

// Isotropic discrete total variation of a real field (forward differences,
// epsilon-smoothed at 1e-8 for differentiability).
double tv_isotropic(const Eigen::MatrixXd& f);

}  // namespace ndmd
