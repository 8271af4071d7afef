#pragma once

#include <vector>

#include "ndmd/common.hpp"
#include "ndmd/observe.hpp"
#include "ndmd/train.hpp"
#include "ndmd/video.hpp"

namespace ndmd {

// ---------------------------------------------------------------------------
// Minimalist 3D-Var: persistence background, scalar observation weight,
// Gaussian-smoothed innovations.
// ---------------------------------------------------------------------------

struct AssimConfig {
    double blend_weight = 0.8;  // in [0, 1]
    double smooth_sigma = 2.0;  // pixels
};

// Normalized Gaussian kernel truncated at 4 sigma, reflected boundaries.
// Conserves the total mass of the input.
Eigen::MatrixXd gaussian_blur(const Eigen::MatrixXd& img, double sigma);

// Central weight of the 2D blur kernel; the innovation update is rescaled by
// it so an observed cell receives exactly blend_weight * innovation.
double gaussian_blur_center_weight(double sigma);

// One assimilation cycle: innovations at observed cells, spread by the blur,
// scaled to blend_weight at the observation sites.
Eigen::MatrixXd threedvar_step(const Eigen::MatrixXd& background,
                               const std::vector<PixelObservation>& obs, const AssimConfig& cfg);

struct AssimSequence {
    std::vector<Eigen::MatrixXd> frames;
    std::vector<double> times;
};

// Sequential cycles over time-grouped observations; each analysis becomes the
// next background (zero-tendency persistence forecast).
AssimSequence threedvar_run(const std::vector<std::vector<PixelObservation>>& obs_by_time,
                            const std::vector<double>& times, const Eigen::MatrixXd& background0,
                            const AssimConfig& cfg);

VideoGrid assim_to_video(const AssimSequence& seq);

// ---------------------------------------------------------------------------
// Pure spatio-temporal neural representation: posenc(x, y, t) -> value.
// No dynamics; extrapolation just queries the network at t > 1.
// ---------------------------------------------------------------------------

template <class T>
struct NeuralRep {
    PosEncConfig enc{4, 3};
    Network<T> net;
    TimeMap time;
};

struct NeuralRepSpec {
    int posenc_degree = 4;
    std::vector<int> hidden = {256, 256, 256, 256};
    Activation activation = Activation::Tanh;
};

template <class T>
NeuralRep<T> make_neural_rep(const NeuralRepSpec& spec, std::uint64_t seed) {
    NeuralRep<T> rep;
    rep.enc = PosEncConfig{spec.posenc_degree, 3};
    rep.net = make_mlp<T>(rep.enc.encoded_dim(), spec.hidden, 1, spec.activation, seed);
    return rep;
}

template <class T>
std::vector<TensorRef<T>> tensor_refs(NeuralRep<T>& rep) {
    std::vector<TensorRef<T>> refs;
    append_net_refs(rep.net, "net", refs);
    return refs;
}

template <class T>
std::vector<TensorRef<T>> tensor_refs(NetworkGrads<T>& g) {
    std::vector<TensorRef<T>> refs;
    append_net_grad_refs(g, "net", refs);
    return refs;
}

// batch evaluation at raw timestamps
template <class T>
VecX<T> eval_neural_rep(const NeuralRep<T>& rep, const MatX<T>& coords_xy,
                        const std::vector<double>& times, Tape<T>* tape = nullptr,
                        int workers = 1) {
    require(coords_xy.cols() == Eigen::Index(times.size()),
            "neural_rep: coordinate/time count mismatch");
    MatX<T> p(3, coords_xy.cols());
    p.topRows(2) = coords_xy;
    for (Eigen::Index q = 0; q < p.cols(); ++q)
        p(2, q) = T(rep.time.to_norm(times[std::size_t(q)]));
    MatX<T> enc = posenc<T>(p, rep.enc);
    MatX<T> y = forward<T>(rep.net, enc, tape, workers);
    return y.row(0).transpose();
}

template <class T>
MatX<T> render_neural_rep(const NeuralRep<T>& rep, int H, int W, double t, int workers = 1) {
    MatX<T> coords = grid_coords<T>(H, W);
    std::vector<double> times(std::size_t(coords.cols()), t);
    VecX<T> v = eval_neural_rep<T>(rep, coords, times, nullptr, workers);
    return Eigen::Map<const MatX<T>>(v.data(), W, H).transpose();
}

template <class T>
double neural_rep_loss(const NeuralRep<T>& rep, const std::vector<PixelObservation>& batch,
                       NetworkGrads<T>* grads = nullptr, int workers = 1) {
    require(!batch.empty(), "neural_rep: empty batch");
    MatX<T> coords(2, Eigen::Index(batch.size()));
    std::vector<double> times(batch.size());
    for (std::size_t q = 0; q < batch.size(); ++q) {
        coords(0, Eigen::Index(q)) = T(batch[q].x);
        coords(1, Eigen::Index(q)) = T(batch[q].y);
        times[q] = batch[q].t;
    }
    Tape<T> tape;
    VecX<T> pred = eval_neural_rep<T>(rep, coords, times, grads ? &tape : nullptr, workers);
    const double N = double(batch.size());
    double loss = 0.0;
    MatX<T> dy(1, pred.size());
    for (Eigen::Index q = 0; q < pred.size(); ++q) {
        double res = double(pred[q]) - batch[std::size_t(q)].value;
        loss += res * res / N;
        dy(0, q) = T(2.0 * res / N);
    }
    if (grads) *grads = backward<T>(rep.net, tape, dy, nullptr, workers);
    return loss;
}

// Same optimizer, schedule, and batching behavior as the main trainer.
template <class T>
FitResult fit_neural_rep(NeuralRep<T>& rep, const std::vector<PixelObservation>& obs,
                         const TrainConfig& cfg, TrainState<T>* state_io = nullptr) {
    require(!obs.empty(), "fit_neural_rep: no observations");
    TrainState<T> local_state;
    TrainState<T>& state = state_io ? *state_io : local_state;
    if (state.epoch == 0) {
        state.lr = cfg.lr0;
        std::vector<double> times;
        times.reserve(obs.size());
        for (const auto& o : obs) times.push_back(o.t);
        rep.time = detail::time_map_from(times);
    }

    Rng rng(cfg.seed);
    if (!state.rng_state.empty()) {
        std::istringstream ss(state.rng_state);
        ss >> rng.engine();
    }
    const std::size_t n = obs.size();
    const std::size_t batch =
        cfg.batch_size > 0 ? std::min<std::size_t>(std::size_t(cfg.batch_size), n) : n;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    FitResult result;
    NetworkGrads<T> grads;
    auto params = tensor_refs(rep);
    for (int e = 0; e < cfg.epochs; ++e) {
        if (batch < n)
            for (std::size_t i = n; i > 1; --i)
                std::swap(order[i - 1], order[std::size_t(rng.below(i))]);
        double epoch_loss = 0.0;
        std::size_t count = 0;
        for (std::size_t at = 0; at < n; at += batch) {
            std::size_t hi = std::min(n, at + batch);
            std::vector<PixelObservation> chunk;
            chunk.reserve(hi - at);
            for (std::size_t i = at; i < hi; ++i) chunk.push_back(obs[order[i]]);
            double loss = neural_rep_loss<T>(rep, chunk, &grads, cfg.workers);
            if (!std::isfinite(loss)) throw DataError("fit_neural_rep: non-finite loss");
            epoch_loss += loss * double(chunk.size());
            count += chunk.size();
            auto grad_refs = tensor_refs(grads);
            adam_step<T>(state, params, grad_refs, T(state.lr));
        }
        epoch_loss /= double(count);
        plateau_schedule(state, epoch_loss, cfg.plateau_patience, cfg.lr_factor, cfg.improve_tol);
        state.epoch += 1;
        result.history.push_back({double(e), epoch_loss, state.lr});
        result.final_loss = epoch_loss;
    }
    std::ostringstream ss;
    ss << rng.engine();
    state.rng_state = ss.str();
    return result;
}

}  // namespace ndmd
