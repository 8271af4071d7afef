#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ndmd/model.hpp"
#include "ndmd/observe.hpp"
#include "ndmd/rng.hpp"
#include "ndmd/threading.hpp"

namespace ndmd {

// ---------------------------------------------------------------------------
// Losses. Both paths share one structure: the modal network runs once over
// the batch's unique coordinates, time enters only through the per-time
// expansion coefficients, and gradients flow to every parameter group
// (theta_w, theta_omega, theta_b, latents).
// ---------------------------------------------------------------------------

namespace detail {

// decoded heads plus everything backward needs
template <class T>
struct HeadsDecode {
    VecX<T> omega_raw;  // 2K (empty when K = 0)
    Tape<T> omega_tape;
    std::vector<std::complex<T>> omega;  // K + 1
    VecX<T> b_raw;                       // 1 + 2K
    Tape<T> b_tape;
    std::vector<std::complex<T>> b;  // K + 1
};

template <class T>
HeadsDecode<T> decode_heads(const NeuralModalModel<T>& model) {
    HeadsDecode<T> h;
    const int K = model.K();
    if (K > 0) {
        h.omega_raw = model.spectrum.raw_outputs(
            model.spectrum.kind == HeadKind::Mlp ? &h.omega_tape : nullptr);
        require(h.omega_raw.size() == 2 * K, "spectrum head output size != 2K");
    }
    h.omega.assign(std::size_t(K) + 1, std::complex<T>(0, 0));
    for (int k = 1; k <= K; ++k) {
        T alpha = T(-kAlphaScale * sigmoid(double(h.omega_raw[k - 1])));
        T freq = T(kOmegaScale * sigmoid(double(h.omega_raw[K + k - 1])));
        h.omega[std::size_t(k)] = std::complex<T>(alpha, freq);
    }
    h.b_raw =
        model.init_state.raw_outputs(model.init_state.kind == HeadKind::Mlp ? &h.b_tape : nullptr);
    require(h.b_raw.size() == 1 + 2 * K, "initial-state head output size != 1+2K");
    h.b.assign(std::size_t(K) + 1, std::complex<T>(0, 0));
    h.b[0] = std::complex<T>(h.b_raw[0], 0);
    for (int k = 1; k <= K; ++k)
        h.b[std::size_t(k)] = std::complex<T>(h.b_raw[2 * k - 1], h.b_raw[2 * k]);
    return h;
}

// Accumulated complex-convention gradients for the decoded quantities:
// d(omega_k) packs (dL/d alpha, dL/d freq), d(b_k) packs (dL/dRe, dL/dIm).
template <class T>
struct HeadGradAcc {
    std::vector<std::complex<T>> d_omega;
    std::vector<std::complex<T>> d_b;

    explicit HeadGradAcc(int K)
        : d_omega(std::size_t(K) + 1, std::complex<T>(0, 0)),
          d_b(std::size_t(K) + 1, std::complex<T>(0, 0)) {}

    // dc: gradient w.r.t. the coefficient vector at normalized time t
    void add_time(const HeadsDecode<T>& h, T time_scale, T t, const VecX<T>& dc) {
        d_b[0] += std::complex<T>(dc[0], 0);
        const int K = int(h.omega.size()) - 1;
        for (int k = 1; k <= K; ++k) {
            std::complex<T> e = std::exp(h.omega[std::size_t(k)] * time_scale * t);
            std::complex<T> xi = e * h.b[std::size_t(k)];
            // c[2k-1] = 2 Re xi, c[2k] = -2 Im xi
            std::complex<T> g(T(2) * dc[2 * k - 1], T(-2) * dc[2 * k]);
            d_b[std::size_t(k)] += std::conj(e) * g;
            std::complex<T> gx = std::conj(g) * xi;
            T st = time_scale * t;
            d_omega[std::size_t(k)] += std::complex<T>(st * gx.real(), -st * gx.imag());
        }
    }
};

// Push decoded-value gradients through the constraint maps and head
// networks into the model gradient buffers.
template <class T>
void backward_heads(const NeuralModalModel<T>& model, const HeadsDecode<T>& h,
                    const HeadGradAcc<T>& acc, ModelGrads<T>& grads) {
    const int K = model.K();
    if (K > 0) {
        VecX<T> dout = VecX<T>::Zero(2 * K);
        for (int k = 1; k <= K; ++k) {
            double sa = sigmoid(double(h.omega_raw[k - 1]));
            double sw = sigmoid(double(h.omega_raw[K + k - 1]));
            dout[k - 1] = acc.d_omega[std::size_t(k)].real() * T(-kAlphaScale * sa * (1.0 - sa));
            dout[K + k - 1] =
                acc.d_omega[std::size_t(k)].imag() * T(kOmegaScale * sw * (1.0 - sw));
        }
        if (model.spectrum.kind == HeadKind::Mlp) {
            MatX<T> dlatent;
            grads.omega_net = backward<T>(model.spectrum.net, h.omega_tape, MatX<T>(dout), &dlatent);
            grads.omega_latent = dlatent.col(0);
        } else {
            grads.omega_raw = dout;
        }
    }
    VecX<T> dout_b = VecX<T>::Zero(1 + 2 * K);
    dout_b[0] = acc.d_b[0].real();
    for (int k = 1; k <= K; ++k) {
        dout_b[2 * k - 1] = acc.d_b[std::size_t(k)].real();
        dout_b[2 * k] = acc.d_b[std::size_t(k)].imag();
    }
    if (model.init_state.kind == HeadKind::Mlp) {
        MatX<T> dlatent;
        grads.b_net = backward<T>(model.init_state.net, h.b_tape, MatX<T>(dout_b), &dlatent);
        grads.b_latent = dlatent.col(0);
    } else {
        grads.b_raw = dout_b;
    }
}

}  // namespace detail

// Mean squared error over sparse pixel observations, with gradients for all
// parameter groups. Timestamps are normalized through model.time.
template <class T>
double pixel_loss(const NeuralModalModel<T>& model, const std::vector<PixelObservation>& batch,
                  ModelGrads<T>* grads = nullptr, int workers = 1) {
    require(!batch.empty(), "pixel_loss: empty batch");
    const int r = model.rank();

    // unique coordinates (deterministic sorted order), groups by exact time
    std::map<std::pair<T, T>, int> coord_index;
    for (const auto& o : batch) coord_index.insert({{T(o.x), T(o.y)}, 0});
    int P = 0;
    for (auto& kv : coord_index) kv.second = P++;
    MatX<T> coords(2, P);
    for (const auto& kv : coord_index) {
        coords(0, kv.second) = kv.first.first;
        coords(1, kv.second) = kv.first.second;
    }
    struct Sample {
        int point;
        double value;
    };
    std::map<T, std::vector<Sample>> groups;
    for (const auto& o : batch) {
        T tn = T(model.time.to_norm(o.t));
        groups[tn].push_back({coord_index[{T(o.x), T(o.y)}], o.value});
    }

    Tape<T> tape;
    MatX<T> modes = eval_modes<T>(model, coords, grads ? &tape : nullptr, workers);
    detail::HeadsDecode<T> heads = detail::decode_heads(model);

    const double N = double(batch.size());
    double loss = 0.0;
    MatX<T> dmodes;
    if (grads) dmodes = MatX<T>::Zero(r, P);
    detail::HeadGradAcc<T> acc(model.K());

    for (const auto& [tn, samples] : groups) {
        VecX<T> c = mode_coeffs<T>(heads.omega, heads.b, model.spectrum.time_scale, tn);
        VecX<T> dc = VecX<T>::Zero(r);
        for (const auto& s : samples) {
            double pred = double(modes.col(s.point).dot(c));
            double res = pred - s.value;
            loss += res * res / N;
            if (grads) {
                T dpred = T(2.0 * res / N);
                dmodes.col(s.point) += dpred * c;
                dc += dpred * modes.col(s.point);
            }
        }
        if (grads) acc.add_time(heads, model.spectrum.time_scale, tn, dc);
    }

    if (grads) {
        *grads = ModelGrads<T>::zeros_like(model);
        grads->modal = backward<T>(model.modal, tape, dmodes, nullptr, workers);
        detail::backward_heads(model, heads, acc, *grads);
    }
    return loss;
}

// Chi-squared misfit of predicted visibilities, Eq-style:
//   chi2 = (1/N) sum |V_i - V^_i|^2 / sigma_i^2
// V^ comes from rendering the model on an render_h x render_w grid at each
// batch timestamp and applying the nonuniform DFT at the observed (u, v).
template <class T>
double vis_chi2(const NeuralModalModel<T>& model, const std::vector<VisibilityObservation>& batch,
                int render_h, int render_w, ModelGrads<T>* grads = nullptr, int workers = 1) {
    require(!batch.empty(), "vis_chi2: empty batch");
    for (const auto& o : batch)
        if (!(o.sigma > 0.0)) throw DataError("vis_chi2: sigma must be positive");
    const int r = model.rank();
    const int H = render_h, W = render_w;
    const Eigen::Index P = Eigen::Index(H) * W;
    const T dA = T(1) / (T(H) * T(W));

    MatX<T> coords = grid_coords<T>(H, W);
    Tape<T> tape;
    MatX<T> modes = eval_modes<T>(model, coords, grads ? &tape : nullptr, workers);
    detail::HeadsDecode<T> heads = detail::decode_heads(model);

    std::map<T, std::vector<std::size_t>> groups;
    for (std::size_t q = 0; q < batch.size(); ++q)
        groups[T(model.time.to_norm(batch[q].t))].push_back(q);
    std::vector<std::pair<T, std::vector<std::size_t>>> group_list(groups.begin(), groups.end());

    const double N = double(batch.size());
    std::vector<double> chi2_part(group_list.size(), 0.0);
    std::vector<VecX<T>> dI_part(group_list.size());
    std::vector<VecX<T>> coeff_part(group_list.size());

    // frames are independent given the shared mode grid
    parallel_chunks(group_list.size(), 1, workers, [&](std::size_t, std::size_t gb, std::size_t ge) {
        for (std::size_t g = gb; g < ge; ++g) {
            const T tn = group_list[g].first;
            const auto& idx = group_list[g].second;
            VecX<T> c = mode_coeffs<T>(heads.omega, heads.b, model.spectrum.time_scale, tn);
            coeff_part[g] = c;
            VecX<T> image = modes.transpose() * c;  // row-major pixels
            VecX<T> dI = grads ? VecX<T>(VecX<T>::Zero(P)) : VecX<T>();
            double chi2 = 0.0;
            for (std::size_t q : idx) {
                const auto& o = batch[q];
                // V^ = sum_p I_p exp(-2 pi i (u x^_p + v y^_p)) dA
                const double col_step = -2.0 * M_PI * o.u / W;
                const std::complex<T> step(T(std::cos(col_step)), T(std::sin(col_step)));
                std::complex<T> vhat(0, 0);
                for (int i = 0; i < H; ++i) {
                    const double yh = (-1.0 + 2.0 * (i + 0.5) / H) * 0.5;
                    const double ph0 =
                        -2.0 * M_PI * (o.u * ((-1.0 + 1.0 / W) * 0.5) + o.v * yh);
                    std::complex<T> phase(T(std::cos(ph0)), T(std::sin(ph0)));
                    const T* row = image.data() + Eigen::Index(i) * W;
                    for (int j = 0; j < W; ++j) {
                        vhat += row[j] * phase;
                        phase *= step;
                    }
                }
                vhat *= dA;
                std::complex<T> res = vhat - std::complex<T>(T(o.vis.real()), T(o.vis.imag()));
                double s2 = o.sigma * o.sigma;
                chi2 += double(std::norm(res)) / (s2 * N);
                if (grads) {
                    // dchi2/dI_p = (2/(N s2)) Re(conj(res) Phi_p)
                    std::complex<T> w = std::conj(res) * T(2.0 / (s2 * N)) * dA;
                    for (int i = 0; i < H; ++i) {
                        const double yh = (-1.0 + 2.0 * (i + 0.5) / H) * 0.5;
                        const double ph0 =
                            -2.0 * M_PI * (o.u * ((-1.0 + 1.0 / W) * 0.5) + o.v * yh);
                        std::complex<T> phase(T(std::cos(ph0)), T(std::sin(ph0)));
                        T* drow = dI.data() + Eigen::Index(i) * W;
                        for (int j = 0; j < W; ++j) {
                            drow[j] += (w * phase).real();
                            phase *= step;
                        }
                    }
                }
            }
            chi2_part[g] = chi2;
            if (grads) dI_part[g] = std::move(dI);
        }
    });

    double loss = 0.0;
    for (double c : chi2_part) loss += c;

    if (grads) {
        MatX<T> dmodes = MatX<T>::Zero(r, P);
        detail::HeadGradAcc<T> acc(model.K());
        for (std::size_t g = 0; g < group_list.size(); ++g) {
            dmodes.noalias() += coeff_part[g] * dI_part[g].transpose();
            VecX<T> dc = modes * dI_part[g];
            acc.add_time(heads, model.spectrum.time_scale, group_list[g].first, dc);
        }
        *grads = ModelGrads<T>::zeros_like(model);
        grads->modal = backward<T>(model.modal, tape, dmodes, nullptr, workers);
        detail::backward_heads(model, heads, acc, *grads);
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Optimizer and schedule
// ---------------------------------------------------------------------------

template <class T>
struct TrainState {
    long step = 0;
    int epoch = 0;
    std::vector<VecX<T>> m, v;  // Adam moments, one entry per tensor
    double lr = 1e-3;
    double best_loss = std::numeric_limits<double>::infinity();
    bool has_best = false;
    int epochs_since_improve = 0;
    std::string rng_state;  // serialized shuffle engine, for exact resume
};

// Standard Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
template <class T>
void adam_step(TrainState<T>& state, const std::vector<TensorRef<T>>& params,
               const std::vector<TensorRef<T>>& grads, T lr) {
    require(params.size() == grads.size(), "adam: parameter/gradient count mismatch");
    const T beta1 = T(0.9), beta2 = T(0.999), eps = T(1e-8);
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i] = VecX<T>::Zero(params[i].size);
            state.v[i] = VecX<T>::Zero(params[i].size);
        }
    }
    require(state.m.size() == params.size(), "adam: moment/parameter count mismatch");
    state.step += 1;
    const T bc1 = T(1) - std::pow(beta1, T(state.step));
    const T bc2 = T(1) - std::pow(beta2, T(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(params[i].size == grads[i].size && state.m[i].size() == params[i].size,
                "adam: shape mismatch in group " + params[i].name);
        for (std::ptrdiff_t j = 0; j < params[i].size; ++j) {
            T g = grads[i].data[j];
            if (!std::isfinite(double(g)))
                throw DataError("adam: non-finite gradient in group " + params[i].name);
            state.m[i][j] = beta1 * state.m[i][j] + (T(1) - beta1) * g;
            state.v[i][j] = beta2 * state.v[i][j] + (T(1) - beta2) * g * g;
            T mhat = state.m[i][j] / bc1;
            T vhat = state.v[i][j] / bc2;
            params[i].data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

// Halves (by lr_factor) the learning rate after `patience` consecutive
// epochs without a relative-1e-6 improvement over the best seen loss.
template <class T>
void plateau_schedule(TrainState<T>& state, double epoch_loss, int patience, double lr_factor,
                      double improve_tol = 1e-6) {
    bool improved = state.has_best && epoch_loss < state.best_loss * (1.0 - improve_tol);
    if (improved) {
        state.best_loss = epoch_loss;
        state.epochs_since_improve = 0;
        return;
    }
    if (!state.has_best) {
        state.best_loss = epoch_loss;
        state.has_best = true;
    } else if (epoch_loss < state.best_loss) {
        state.best_loss = epoch_loss;  // track, but below the improvement tolerance
    }
    state.epochs_since_improve += 1;
    if (state.epochs_since_improve >= patience) {
        state.lr *= lr_factor;
        state.epochs_since_improve = 0;
    }
}

// ---------------------------------------------------------------------------
// Fit loop
// ---------------------------------------------------------------------------

enum class LossKind { Pixel, Visibility };

struct TrainConfig {
    double lr0 = 1e-3;
    int plateau_patience = 500;
    double lr_factor = 0.5;
    int epochs = 12000;
    int batch_size = 0;  // 0 = full batch (pixel: samples, vis: frames)
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::Pixel;
    int render_h = 64, render_w = 64;  // visibility-mode render grid
    int workers = 1;
    int checkpoint_every = 1000;
    double improve_tol = 1e-6;
};

struct FitResult {
    std::vector<std::array<double, 3>> history;  // epoch, loss, lr
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    bool aborted = false;  // non-finite loss; model rolled back to last good epoch
};

// Called with ("best" | "periodic" | "final" | "abort", epoch).
using CheckpointHook = std::function<void(const std::string&, int)>;

namespace detail {

template <class T>
std::vector<T> snapshot_params(NeuralModalModel<T>& model) {
    std::vector<T> flat;
    for (const auto& ref : tensor_refs(model))
        flat.insert(flat.end(), ref.data, ref.data + ref.size);
    return flat;
}

template <class T>
void restore_params(NeuralModalModel<T>& model, const std::vector<T>& flat) {
    std::size_t at = 0;
    for (const auto& ref : tensor_refs(model)) {
        std::copy(flat.begin() + std::ptrdiff_t(at), flat.begin() + std::ptrdiff_t(at) + ref.size,
                  ref.data);
        at += std::size_t(ref.size);
    }
}

inline TimeMap time_map_from(const std::vector<double>& times) {
    TimeMap tm;
    if (times.empty()) return tm;
    double lo = times[0], hi = times[0];
    for (double t : times) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    tm.t_start = lo;
    tm.span = hi > lo ? hi - lo : 1.0;
    return tm;
}

}  // namespace detail

// Joint training of all parameter groups. Pass a non-empty `state` (step or
// epoch > 0) to resume; the epoch RNG continues from state.rng_state and the
// loss history picks up at state.epoch.
template <class T>
FitResult fit(NeuralModalModel<T>& model, const ObservationSet& obs, const TrainConfig& cfg,
              TrainState<T>* state_io = nullptr, const CheckpointHook& hook = {}) {
    const bool vis_mode = cfg.loss_kind == LossKind::Visibility;
    require(vis_mode ? obs.is_vis() : obs.is_pixel(),
            "fit: observation kind does not match the configured loss");

    TrainState<T> local_state;
    TrainState<T>& state = state_io ? *state_io : local_state;
    const bool resuming = state.epoch > 0;
    if (!resuming) state.lr = cfg.lr0;

    // normalized training window from the observation timestamps
    if (!resuming) {
        std::vector<double> times;
        if (vis_mode)
            for (const auto& o : obs.vis) times.push_back(o.t);
        else
            for (const auto& o : obs.pixels) times.push_back(o.t);
        model.time = detail::time_map_from(times);
    }

    Rng rng(cfg.seed);
    if (!state.rng_state.empty()) {
        std::istringstream ss(state.rng_state);
        ss >> rng.engine();
    }

    // batching units: pixel samples, or whole frames in visibility mode
    std::vector<std::size_t> unit_of_obs;  // visibility: frame id per obs
    std::size_t n_units = 0;
    std::vector<double> frame_times;
    if (vis_mode) {
        std::map<double, std::size_t> frame_ids;
        for (const auto& o : obs.vis) frame_ids.insert({o.t, 0});
        for (auto& kv : frame_ids) kv.second = n_units++;
        unit_of_obs.reserve(obs.vis.size());
        for (const auto& o : obs.vis) unit_of_obs.push_back(frame_ids[o.t]);
    } else {
        n_units = obs.pixels.size();
    }

    const std::size_t batch_units =
        cfg.batch_size > 0 ? std::min<std::size_t>(std::size_t(cfg.batch_size), n_units) : n_units;
    const bool full_batch = batch_units == n_units;

    std::vector<std::size_t> order(n_units);
    for (std::size_t i = 0; i < n_units; ++i) order[i] = i;

    FitResult result;
    ModelGrads<T> grads;
    std::vector<T> last_good = detail::snapshot_params(model);

    auto params = tensor_refs(model);
    for (int e = 0; e < cfg.epochs; ++e) {
        const int epoch = state.epoch;
        if (!full_batch) {
            for (std::size_t i = n_units; i > 1; --i)
                std::swap(order[i - 1], order[std::size_t(rng.below(i))]);
        }
        double epoch_loss = 0.0;
        std::size_t epoch_count = 0;
        bool finite = true;
        for (std::size_t at = 0; at < n_units && finite; at += batch_units) {
            std::size_t hi = std::min(n_units, at + batch_units);
            double loss;
            std::size_t batch_obs_count = 0;
            if (vis_mode) {
                std::vector<char> in_batch(n_units, 0);
                for (std::size_t i = at; i < hi; ++i) in_batch[order[i]] = 1;
                std::vector<VisibilityObservation> batch;
                for (std::size_t q = 0; q < obs.vis.size(); ++q)
                    if (in_batch[unit_of_obs[q]]) batch.push_back(obs.vis[q]);
                batch_obs_count = batch.size();
                loss = vis_chi2<T>(model, batch, cfg.render_h, cfg.render_w, &grads, cfg.workers);
            } else {
                std::vector<PixelObservation> batch;
                batch.reserve(hi - at);
                for (std::size_t i = at; i < hi; ++i) batch.push_back(obs.pixels[order[i]]);
                batch_obs_count = batch.size();
                loss = pixel_loss<T>(model, batch, &grads, cfg.workers);
            }
            if (!std::isfinite(loss)) {
                finite = false;
                break;
            }
            epoch_loss += loss * double(batch_obs_count);
            epoch_count += batch_obs_count;
            auto grad_refs = tensor_refs(grads, model);
            adam_step<T>(state, params, grad_refs, T(state.lr));
        }
        if (!finite) {
            detail::restore_params(model, last_good);
            if (hook) hook("abort", epoch);
            result.aborted = true;
            break;
        }
        epoch_loss /= double(std::max<std::size_t>(epoch_count, 1));
        bool was_best = !state.has_best || epoch_loss < state.best_loss;
        plateau_schedule(state, epoch_loss, cfg.plateau_patience, cfg.lr_factor, cfg.improve_tol);
        state.epoch += 1;
        result.history.push_back({double(epoch), epoch_loss, state.lr});
        result.final_loss = epoch_loss;
        last_good = detail::snapshot_params(model);
        if (hook) {
            if (was_best && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
                hook("best", epoch);
            if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
                hook("periodic", epoch);
        }
    }

    std::ostringstream ss;
    ss << rng.engine();
    state.rng_state = ss.str();
    if (hook && !result.aborted) hook("final", state.epoch);
    return result;
}

}  // namespace ndmd
