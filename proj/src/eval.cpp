#include "ndmd/eval.hpp"

#include <algorithm>
#include <cmath>

namespace ndmd {

double normalized_l2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "normalized_l2: shape mismatch");
    double bn = b.norm();
    if (!(bn > 0.0)) throw DataError("normalized_l2: ground truth has zero norm");
    return (a - b).norm() / bn;
}

ErrorCurve error_curve(const VideoGrid& recon, const VideoGrid& truth, double window_end) {
    require(recon.T == truth.T && recon.H == truth.H && recon.W == truth.W,
            "error_curve: video shapes differ");
    for (int k = 0; k < recon.T; ++k)
        require(std::abs(recon.time(k) - truth.time(k)) <= 1e-9 * std::max(1.0, truth.dt),
                "error_curve: timestamps misaligned at frame " + std::to_string(k));

    Eigen::MatrixXd mean_r = Eigen::MatrixXd::Zero(recon.H, recon.W);
    Eigen::MatrixXd mean_t = Eigen::MatrixXd::Zero(recon.H, recon.W);
    for (int k = 0; k < recon.T; ++k) {
        mean_r += recon.frame(k);
        mean_t += truth.frame(k);
    }
    mean_r /= recon.T;
    mean_t /= recon.T;

    ErrorCurve curve;
    curve.window_end = window_end;
    for (int k = 0; k < recon.T; ++k) {
        Eigen::MatrixXd rf = recon.frame(k);
        Eigen::MatrixXd tf = truth.frame(k);
        curve.times.push_back(truth.time(k));
        curve.total_err.push_back(normalized_l2(rf, tf));
        Eigen::MatrixXd td = tf - mean_t;
        double tdn = td.norm();
        // dynamics error is undefined on a static truth frame; report 0 misfit
        curve.dynamics_err.push_back(tdn > 0.0 ? ((rf - mean_r) - td).norm() / tdn : 0.0);
    }
    return curve;
}

double bilinear_sample(const Eigen::MatrixXd& frame, double x, double y) {
    const int H = int(frame.rows()), W = int(frame.cols());
    // fractional pixel coordinates, clamp-to-edge
    double gx = (x + 1.0) * W / 2.0 - 0.5;
    double gy = (y + 1.0) * H / 2.0 - 0.5;
    gx = std::clamp(gx, 0.0, double(W - 1));
    gy = std::clamp(gy, 0.0, double(H - 1));
    int j0 = std::min(int(gx), W - 2 >= 0 ? W - 2 : 0);
    int i0 = std::min(int(gy), H - 2 >= 0 ? H - 2 : 0);
    if (W == 1) j0 = 0;
    if (H == 1) i0 = 0;
    double fx = gx - j0, fy = gy - i0;
    int j1 = std::min(j0 + 1, W - 1), i1 = std::min(i0 + 1, H - 1);
    return (1 - fy) * ((1 - fx) * frame(i0, j0) + fx * frame(i0, j1)) +
           fy * ((1 - fx) * frame(i1, j0) + fx * frame(i1, j1));
}

Eigen::MatrixXd cylinder_plot(const VideoGrid& video, double radius, int n_angles) {
    require(n_angles >= 4, "cylinder_plot: need at least 4 angles");
    require(radius > 0.0 && radius <= 1.0, "cylinder_plot: radius must lie inside the field");
    Eigen::MatrixXd out(n_angles, video.T);
    for (int k = 0; k < video.T; ++k) {
        Eigen::MatrixXd f = video.frame(k);
        for (int a = 0; a < n_angles; ++a) {
            double theta = 2.0 * M_PI * a / n_angles;
            out(a, k) = bilinear_sample(f, radius * std::cos(theta), radius * std::sin(theta));
        }
    }
    return out;
}

double ring_slope(const Eigen::MatrixXd& cyl, double dt) {
    require(cyl.cols() >= 2, "ring_slope: need at least 2 frames");
    require(dt > 0.0, "ring_slope: dt must be positive");
    const int n_angles = int(cyl.rows());
    const int T = int(cyl.cols());
    const double step = 2.0 * M_PI / n_angles;

    // unwrap the argmax ridge
    std::vector<double> phase(static_cast<std::size_t>(T));
    double prev = 0.0;
    for (int k = 0; k < T; ++k) {
        int arg = 0;
        cyl.col(k).maxCoeff(&arg);
        double th = arg * step;
        if (k > 0) {
            while (th - prev > M_PI) th -= 2.0 * M_PI;
            while (th - prev < -M_PI) th += 2.0 * M_PI;
        }
        phase[std::size_t(k)] = th;
        prev = th;
    }

    // least-squares slope of phase vs time
    double st = 0.0, sp = 0.0, stt = 0.0, stp = 0.0;
    for (int k = 0; k < T; ++k) {
        double t = k * dt;
        st += t;
        sp += phase[std::size_t(k)];
        stt += t * t;
        stp += t * phase[std::size_t(k)];
    }
    double denom = T * stt - st * st;
    require(denom > 0.0, "ring_slope: degenerate time axis");
    return (T * stp - st * sp) / denom;
}

std::vector<SpectrumRow> spectrum_report(const ModalDecomposition& decomp, double cutoff) {
    std::vector<SpectrumRow> rows;
    for (int k = 0; k < decomp.n_modes(); ++k) {
        SpectrumRow r;
        r.k = k;
        r.alpha = decomp.omega[k].real();
        r.omega = decomp.omega[k].imag();
        r.b_mod = std::abs(decomp.b[k]);
        r.flagged = r.alpha < cutoff;
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SpectrumRow& a, const SpectrumRow& b) {
        if (a.alpha != b.alpha) return a.alpha > b.alpha;
        return a.k < b.k;
    });
    return rows;
}

}  // namespace ndmd
