#include "ndmd/dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ndmd/rng.hpp"

namespace ndmd {

SnapshotMatrix snapshots_from_video(const VideoGrid& video) {
    require(video.T >= 2, "snapshots: need at least 2 frames");
    const Eigen::Index n = Eigen::Index(video.frame_size());
    SnapshotMatrix s;
    s.dt = video.dt;
    s.X.resize(n, video.T - 1);
    s.Xp.resize(n, video.T - 1);
    for (int k = 0; k < video.T - 1; ++k)
        for (Eigen::Index p = 0; p < n; ++p) {
            s.X(p, k) = video.data[video.frame_size() * std::size_t(k) + std::size_t(p)];
            s.Xp(p, k) = video.data[video.frame_size() * std::size_t(k + 1) + std::size_t(p)];
        }
    return s;
}

DiscreteSpectrum exact_dmd(const SnapshotMatrix& snap, int r) {
    const Eigen::Index n = snap.X.rows();
    const Eigen::Index m = snap.X.cols();
    require(snap.Xp.rows() == n && snap.Xp.cols() == m, "exact_dmd: X/X' shape mismatch");
    require(r >= 1 && r <= std::min(n, m), "exact_dmd: rank out of range");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(snap.X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-12 * sv(0);
    int usable = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++usable;
    if (r > usable)
        throw DataError("exact_dmd: rank-deficient data, usable rank = " +
                        std::to_string(usable) + " < requested " + std::to_string(r));

    Eigen::MatrixXd U = svd.matrixU().leftCols(r);
    Eigen::MatrixXd V = svd.matrixV().leftCols(r);
    Eigen::VectorXd sinv = sv.head(r).cwiseInverse();

    // A~ = U^T X' V S^{-1}
    Eigen::MatrixXd XpVSinv = snap.Xp * V * sinv.asDiagonal();
    Eigen::MatrixXd Atilde = U.transpose() * XpVSinv;

    Eigen::EigenSolver<Eigen::MatrixXd> es(Atilde);
    require(es.info() == Eigen::Success, "exact_dmd: eigendecomposition failed");

    DiscreteSpectrum out;
    out.lambda = es.eigenvalues();
    out.modes = XpVSinv.cast<cplx>() * es.eigenvectors();
    return out;
}

Eigen::VectorXcd to_continuous(const Eigen::VectorXcd& lambda, double dt) {
    require(dt > 0.0, "to_continuous: dt must be positive");
    Eigen::VectorXcd omega(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) == cplx(0.0, 0.0))
            throw DataError("to_continuous: zero eigenvalue at index " + std::to_string(i));
        omega(i) = std::log(lambda(i)) / dt;
    }
    return omega;
}

namespace {

constexpr double kTvEps = 1e-8;

double tv_value_grad(const Eigen::MatrixXd& f, Eigen::MatrixXd* grad) {
    const Eigen::Index H = f.rows(), W = f.cols();
    if (grad) grad->setZero(H, W);
    double total = 0.0;
    for (Eigen::Index i = 0; i < H; ++i)
        for (Eigen::Index j = 0; j < W; ++j) {
            double gx = (j + 1 < W) ? f(i, j + 1) - f(i, j) : 0.0;
            double gy = (i + 1 < H) ? f(i + 1, j) - f(i, j) : 0.0;
            double q = std::sqrt(gx * gx + gy * gy + kTvEps * kTvEps);
            total += q;
            if (grad) {
                if (j + 1 < W) {
                    (*grad)(i, j) -= gx / q;
                    (*grad)(i, j + 1) += gx / q;
                }
                if (i + 1 < H) {
                    (*grad)(i, j) -= gy / q;
                    (*grad)(i + 1, j) += gy / q;
                }
            }
        }
    return total;
}

struct OptDmdState {
    Eigen::MatrixXcd W;   // [n x r]
    Eigen::VectorXcd omega;
    Eigen::VectorXcd b;   // projection of the first frame
};

Eigen::MatrixXcd time_dynamics(const Eigen::VectorXcd& omega, const Eigen::VectorXcd& b,
                               const Eigen::VectorXd& times) {
    Eigen::MatrixXcd M(omega.size(), times.size());
    for (Eigen::Index j = 0; j < omega.size(); ++j)
        for (Eigen::Index t = 0; t < times.size(); ++t)
            M(j, t) = b(j) * std::exp(omega(j) * times(t));
    return M;
}

}  // namespace

double tv_isotropic(const Eigen::MatrixXd& f) { return tv_value_grad(f, nullptr); }

OptDmdResult optdmd_fit(const VideoGrid& video, const OptDmdConfig& cfg) {
    require(video.all_finite(), "optdmd: video has non-finite values");
    require(cfg.rank >= 1, "optdmd: rank must be >= 1");
    require(cfg.tv_weight >= 0.0, "optdmd: tv_weight must be >= 0");
    const Eigen::Index n = Eigen::Index(video.frame_size());
    const Eigen::Index m = video.T;
    const int r = cfg.rank;
    require(Eigen::Index(r) <= std::min(n, m - 1), "optdmd: rank exceeds data dimensions");

    // full data matrix, all frames as columns, amplitude-normalized
    Eigen::MatrixXd X(n, m);
    for (int k = 0; k < video.T; ++k)
        for (Eigen::Index p = 0; p < n; ++p)
            X(p, k) = video.data[video.frame_size() * std::size_t(k) + std::size_t(p)];
    const double xnorm = X.norm();
    const double scale = xnorm > 0.0 ? xnorm : 1.0;
    X /= scale;
    Eigen::VectorXd times(m);
    for (int k = 0; k < video.T; ++k) times(k) = k * video.dt;

    // init from exact DMD; alpha clamped to the stability half-plane
    OptDmdState st;
    {
        VideoGrid scaled = video;
        for (double& v : scaled.data) v /= scale;
        DiscreteSpectrum ds = exact_dmd(snapshots_from_video(scaled), r);
        st.omega = to_continuous(ds.lambda, video.dt);
        st.W = ds.modes;
        for (Eigen::Index j = 0; j < st.omega.size(); ++j)
            if (st.omega(j).real() > 0.0) st.omega(j) = cplx(0.0, st.omega(j).imag());
        if (cfg.init_perturb > 0.0) {
            Rng rng(cfg.seed);
            for (Eigen::Index j = 0; j < st.W.cols(); ++j)
                for (Eigen::Index i = 0; i < st.W.rows(); ++i)
                    st.W(i, j) += cfg.init_perturb * cplx(rng.normal(), rng.normal());
        }
    }

    Rng batch_rng(cfg.seed + 1);
    auto project_b = [&](const Eigen::MatrixXcd& W) {
        return Eigen::VectorXcd(
            W.completeOrthogonalDecomposition().solve(X.col(0).cast<cplx>()));
    };
    st.b = project_b(st.W);

    auto objective = [&](const OptDmdState& s, const std::vector<int>& frames,
                         Eigen::MatrixXcd* R_out, Eigen::MatrixXcd* M_out) {
        Eigen::VectorXd tsel(frames.size());
        Eigen::MatrixXd Xsel(n, Eigen::Index(frames.size()));
        for (std::size_t c = 0; c < frames.size(); ++c) {
            tsel(Eigen::Index(c)) = times(frames[c]);
            Xsel.col(Eigen::Index(c)) = X.col(frames[c]);
        }
        Eigen::MatrixXcd M = time_dynamics(s.omega, s.b, tsel);
        Eigen::MatrixXcd R = s.W * M - Xsel.cast<cplx>();
        double j_data = R.squaredNorm();
        double j_tv = 0.0;
        if (cfg.tv_weight > 0.0) {
            for (int k = 0; k < r; ++k) {
                Eigen::MatrixXcd mk =
                    Eigen::Map<const Eigen::MatrixXcd>(s.W.col(k).data(), video.W, video.H)
                        .transpose();
                j_tv += tv_isotropic(mk.real());
                j_tv += tv_isotropic(mk.imag());
            }
            j_tv *= cfg.tv_weight;
        }
        if (R_out) *R_out = std::move(R);
        if (M_out) *M_out = std::move(M);
        return j_data + j_tv;
    };

    std::vector<int> all_frames(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) all_frames[std::size_t(k)] = k;

    OptDmdResult res;
    double step = cfg.init_step;
    double J = objective(st, all_frames, nullptr, nullptr);
    res.objective_history.push_back(J * scale * scale);

    for (int it = 0; it < cfg.iters; ++it) {
        std::vector<int> frames = all_frames;
        if (cfg.batch_frames > 0 && cfg.batch_frames < m) {
            frames.resize(std::size_t(cfg.batch_frames));
            for (int& f : frames) f = int(batch_rng.below(std::uint64_t(m)));
        }
        Eigen::MatrixXcd R, M;
        double J_cur = objective(st, frames, &R, &M);
        if (!std::isfinite(J_cur))
            throw DataError("optdmd: objective diverged; reduce init_step");

        Eigen::VectorXd tsel(frames.size());
        for (std::size_t c = 0; c < frames.size(); ++c) tsel(Eigen::Index(c)) = times(frames[c]);

        // complex gradients: G_W = 2 R M^H; for Omega_j sum over frames of
        // Re/Im parts of conj(G_M) (d M / d alpha, d M / d omega)
        Eigen::MatrixXcd G_W = 2.0 * R * M.adjoint();
        Eigen::MatrixXcd G_M = 2.0 * st.W.adjoint() * R;
        Eigen::VectorXcd G_omega(r);
        for (int j = 0; j < r; ++j) {
            double da = 0.0, dw = 0.0;
            for (Eigen::Index t = 0; t < M.cols(); ++t) {
                cplx gm_conj_m = std::conj(G_M(j, t)) * M(j, t);
                da += tsel(t) * gm_conj_m.real();
                dw -= tsel(t) * gm_conj_m.imag();
            }
            G_omega(j) = cplx(da, dw);
        }
        if (cfg.tv_weight > 0.0) {
            Eigen::MatrixXd gre, gim;
            for (int k = 0; k < r; ++k) {
                // mode columns are row-major pixel order, reshape to H x W
                Eigen::MatrixXcd mk =
                    Eigen::Map<const Eigen::MatrixXcd>(st.W.col(k).data(), video.W, video.H)
                        .transpose();
                tv_value_grad(mk.real(), &gre);
                tv_value_grad(mk.imag(), &gim);
                Eigen::MatrixXcd g =
                    (gre.cast<cplx>() + cplx(0, 1) * gim.cast<cplx>()).transpose();
                G_W.col(k) += cfg.tv_weight * Eigen::Map<const Eigen::VectorXcd>(g.data(), n);
            }
        }

        // backtracking on the post-reprojection objective
        bool accepted = false;
        while (step > 1e-18 * cfg.init_step) {
            OptDmdState cand;
            cand.W = st.W - step * G_W;
            cand.omega = st.omega - step * G_omega;
            for (Eigen::Index j = 0; j < cand.omega.size(); ++j)
                if (cand.omega(j).real() > 0.0)
                    cand.omega(j) = cplx(0.0, cand.omega(j).imag());
            cand.b = project_b(cand.W);
            double J_cand = objective(cand, frames, nullptr, nullptr);
            if (std::isfinite(J_cand) && J_cand < J_cur) {
                st = std::move(cand);
                J_cur = J_cand;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        double J_full = (cfg.batch_frames > 0)
                            ? objective(st, all_frames, nullptr, nullptr)
                            : J_cur;
        res.objective_history.push_back(J_full * scale * scale);
        if (!accepted) break;  // stalled: no descent direction at minimal step
    }

    ModalDecomposition d;
    d.pairs = false;
    d.H = video.H;
    d.W = video.W;
    d.time_scale = 1.0;
    d.omega = st.omega;
    d.b = st.b * scale;
    d.modes.resize(std::size_t(r));
    d.flagged.resize(std::size_t(r));
    for (int k = 0; k < r; ++k) {
        Eigen::MatrixXcd g(video.H, video.W);
        for (int i = 0; i < video.H; ++i)
            for (int j = 0; j < video.W; ++j) g(i, j) = st.W(Eigen::Index(i) * video.W + j, k);
        d.modes[std::size_t(k)] = std::move(g);
        d.flagged[std::size_t(k)] = st.omega(k).real() < -0.05 ? 1 : 0;
    }
    res.decomp = std::move(d);
    res.objective = res.objective_history.back();
    return res;
}

}  // namespace ndmd
