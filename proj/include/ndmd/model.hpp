#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ndmd/common.hpp"
#include "ndmd/decomp.hpp"
#include "ndmd/net.hpp"

namespace ndmd {

// ---------------------------------------------------------------------------
// NeuralDMD model: a modal network w(x,y), a constrained spectrum head, and
// an initial-state head. The field is
//   I(x,y,t) = w_0(x,y) b_0 + 2 Re sum_{k=1..K} w_k(x,y) exp(Omega_k c t) b_k
// with Omega_0 = 0 hard-coded and t the model's normalized time.
// ---------------------------------------------------------------------------

// Spectrum and initial-state values come either from an MLP on a learnable
// latent (default) or from free trainable vectors.
enum class HeadKind { Mlp, Free };

// Affine map from raw timestamps to the normalized training window [0, 1].
struct TimeMap {
    double t_start = 0.0;
    double span = 1.0;
    double to_norm(double t) const { return (t - t_start) / span; }
    double to_raw(double s) const { return t_start + s * span; }
};

template <class T>
struct SpectrumHead {
    int K = 0;
    HeadKind kind = HeadKind::Mlp;
    VecX<T> latent;   // Mlp
    Network<T> net;   // Mlp: latent -> 2K raw values
    VecX<T> raw;      // Free: 2K raw values
    T time_scale = T(100);  // c

    // raw layout: rows 0..K-1 decay logits, rows K..2K-1 frequency logits
    VecX<T> raw_outputs(Tape<T>* tape = nullptr) const {
        if (kind == HeadKind::Free) return raw;
        MatX<T> y = forward<T>(net, MatX<T>(latent), tape);
        return VecX<T>(y.col(0));
    }
};

template <class T>
struct InitialStateHead {
    int K = 0;
    HeadKind kind = HeadKind::Mlp;
    VecX<T> latent;
    Network<T> net;  // latent -> 1 + 2K
    VecX<T> raw;     // Free: 1 + 2K

    VecX<T> raw_outputs(Tape<T>* tape = nullptr) const {
        if (kind == HeadKind::Free) return raw;
        MatX<T> y = forward<T>(net, MatX<T>(latent), tape);
        return VecX<T>(y.col(0));
    }
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr double kAlphaScale = 2.0;    // alpha in (-2, 0)
constexpr double kOmegaScale = 160.0;  // omega in (0, 160)

// Omega[0] = 0; for k >= 1, alpha_k = -2 sigmoid(a_k), omega_k = 160 sigmoid(w_k).
template <class T>
std::vector<std::complex<T>> decode_spectrum(const SpectrumHead<T>& sp) {
    if (sp.K == 0) return {std::complex<T>(0, 0)};
    VecX<T> out = sp.raw_outputs();
    require(out.size() == 2 * sp.K, "decode_spectrum: head output size != 2K");
    std::vector<std::complex<T>> omega(std::size_t(sp.K) + 1);
    omega[0] = std::complex<T>(0, 0);
    for (int k = 0; k < sp.K; ++k) {
        T alpha = T(-kAlphaScale * sigmoid(double(out[k])));
        T freq = T(kOmegaScale * sigmoid(double(out[sp.K + k])));
        omega[std::size_t(k) + 1] = std::complex<T>(alpha, freq);
    }
    return omega;
}

// b_0 real from out[0]; b_k = out[2k-1] + i out[2k].
template <class T>
std::vector<std::complex<T>> decode_initial_state(const InitialStateHead<T>& ip, int K) {
    VecX<T> out = ip.raw_outputs();
    require(out.size() == 1 + 2 * K, "decode_initial_state: head output size " +
                                         std::to_string(out.size()) + " != 1+2K for K=" +
                                         std::to_string(K));
    std::vector<std::complex<T>> b(std::size_t(K) + 1);
    b[0] = std::complex<T>(out[0], 0);
    for (int k = 1; k <= K; ++k)
        b[std::size_t(k)] = std::complex<T>(out[2 * k - 1], out[2 * k]);
    return b;
}

template <class T>
struct NeuralModalModel {
    PosEncConfig enc{4, 2};
    Network<T> modal;  // posenc(x,y) -> 1 + 2K (w0, Re w1, Im w1, ...)
    SpectrumHead<T> spectrum;
    InitialStateHead<T> init_state;
    TimeMap time;

    int K() const { return spectrum.K; }
    int rank() const { return 1 + 2 * K(); }
};

struct ModelSpec {
    int K = 12;
    int posenc_degree = 4;
    std::vector<int> modal_hidden = {256, 256, 256, 256};
    std::vector<int> spectral_hidden = {64, 64};
    std::vector<int> init_hidden = {64, 64};
    int latent_dim = 16;
    double time_scale = 100.0;
    Activation activation = Activation::Tanh;
    HeadKind head = HeadKind::Mlp;
};

template <class T>
NeuralModalModel<T> make_model(const ModelSpec& spec, std::uint64_t seed) {
    require(spec.K >= 0, "model: K must be >= 0");
    require(spec.latent_dim >= 1, "model: latent_dim must be >= 1");
    NeuralModalModel<T> m;
    m.enc = PosEncConfig{spec.posenc_degree, 2};
    m.modal = make_mlp<T>(m.enc.encoded_dim(), spec.modal_hidden, 1 + 2 * spec.K,
                          spec.activation, seed);

    m.spectrum.K = spec.K;
    m.spectrum.kind = spec.head;
    m.spectrum.time_scale = T(spec.time_scale);
    m.init_state.K = spec.K;
    m.init_state.kind = spec.head;

    Rng latent_rng(seed + 7);
    if (spec.head == HeadKind::Mlp) {
        m.spectrum.net = make_mlp<T>(spec.latent_dim, spec.spectral_hidden,
                                     std::max(1, 2 * spec.K), spec.activation, seed + 1);
        m.init_state.net = make_mlp<T>(spec.latent_dim, spec.init_hidden, 1 + 2 * spec.K,
                                       spec.activation, seed + 2);
        m.spectrum.latent.resize(spec.latent_dim);
        m.init_state.latent.resize(spec.latent_dim);
        for (int i = 0; i < spec.latent_dim; ++i) m.spectrum.latent[i] = T(latent_rng.normal());
        for (int i = 0; i < spec.latent_dim; ++i) m.init_state.latent[i] = T(latent_rng.normal());
    } else {
        m.spectrum.raw.resize(2 * spec.K);
        for (int i = 0; i < 2 * spec.K; ++i) m.spectrum.raw[i] = T(latent_rng.normal());
        m.init_state.raw.resize(1 + 2 * spec.K);
        for (int i = 0; i < 1 + 2 * spec.K; ++i) m.init_state.raw[i] = T(latent_rng.normal());
    }
    return m;
}

// Modal network evaluation at a batch of coordinates in [-1,1]^2.
// Rows: [w0, Re w1, Im w1, ..., Re wK, Im wK]; one column per point.
template <class T>
MatX<T> eval_modes(const NeuralModalModel<T>& model, const MatX<T>& coords,
                   Tape<T>* tape = nullptr, int workers = 1) {
    require(coords.rows() == 2, "eval_modes: coords must be 2 x n");
    if (!coords.allFinite()) throw DataError("eval_modes: non-finite coordinate");
    MatX<T> enc = posenc<T>(coords, model.enc);
    return forward<T>(model.modal, enc, tape, workers);
}

// Real expansion coefficients at normalized time t:
//   [b0, 2 Re xi_1, -2 Im xi_1, ...] with xi_k = exp(Omega_k c t) b_k,
// so that I = <modal output, coeffs>.
template <class T>
VecX<T> mode_coeffs(const std::vector<std::complex<T>>& omega,
                    const std::vector<std::complex<T>>& b, T time_scale, T t) {
    const int K = int(omega.size()) - 1;
    VecX<T> c(1 + 2 * K);
    c[0] = b[0].real();
    for (int k = 1; k <= K; ++k) {
        std::complex<T> xi = std::exp(omega[std::size_t(k)] * time_scale * t) * b[std::size_t(k)];
        c[2 * k - 1] = T(2) * xi.real();
        c[2 * k] = T(-2) * xi.imag();
    }
    return c;
}

// Field intensities at a coordinate batch and one normalized time. Times
// outside [0, 1] extrapolate with the same formula.
template <class T>
VecX<T> eval_field(const NeuralModalModel<T>& model, const MatX<T>& coords, T t,
                   int workers = 1) {
    MatX<T> modes = eval_modes<T>(model, coords, nullptr, workers);
    auto omega = decode_spectrum(model.spectrum);
    auto b = decode_initial_state(model.init_state, model.K());
    VecX<T> c = mode_coeffs<T>(omega, b, model.spectrum.time_scale, t);
    return modes.transpose() * c;
}

// Pixel-center coordinates of an H x W grid over [-1,1]^2, row-major.
template <class T>
MatX<T> grid_coords(int H, int W) {
    require(H >= 1 && W >= 1, "grid: H, W must be >= 1");
    MatX<T> coords(2, Eigen::Index(H) * W);
    for (int i = 0; i < H; ++i) {
        T y = T(-1) + T(2) * (T(i) + T(0.5)) / T(H);
        for (int j = 0; j < W; ++j) {
            T x = T(-1) + T(2) * (T(j) + T(0.5)) / T(W);
            coords(0, Eigen::Index(i) * W + j) = x;
            coords(1, Eigen::Index(i) * W + j) = y;
        }
    }
    return coords;
}

template <class T>
MatX<T> render_frame(const NeuralModalModel<T>& model, int H, int W, T t, int workers = 1) {
    VecX<T> v = eval_field<T>(model, grid_coords<T>(H, W), t, workers);
    return Eigen::Map<const MatX<T>>(v.data(), W, H).transpose();
}

// Grid-sampled decomposition; modes with alpha below the cutoff are flagged
// as discardable. Default cutoff -0.05.
template <class T>
ModalDecomposition export_decomposition(const NeuralModalModel<T>& model, int H, int W,
                                        double decay_cutoff = -0.05, int workers = 1) {
    const int K = model.K();
    MatX<T> modes = eval_modes<T>(model, grid_coords<T>(H, W), nullptr, workers);
    auto omega = decode_spectrum(model.spectrum);
    auto b = decode_initial_state(model.init_state, K);

    ModalDecomposition d;
    d.pairs = true;
    d.H = H;
    d.W = W;
    d.time_scale = double(model.spectrum.time_scale);
    d.omega.resize(K + 1);
    d.b.resize(K + 1);
    d.modes.resize(std::size_t(K) + 1);
    d.flagged.resize(std::size_t(K) + 1);
    for (int k = 0; k <= K; ++k) {
        d.omega[k] = cplx(omega[std::size_t(k)]);
        d.b[k] = cplx(b[std::size_t(k)]);
        d.flagged[std::size_t(k)] = d.omega[k].real() < decay_cutoff ? 1 : 0;
        Eigen::MatrixXcd grid(H, W);
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                Eigen::Index p = Eigen::Index(i) * W + j;
                if (k == 0)
                    grid(i, j) = cplx(double(modes(0, p)), 0.0);
                else
                    grid(i, j) = cplx(double(modes(2 * k - 1, p)), double(modes(2 * k, p)));
            }
        d.modes[std::size_t(k)] = std::move(grid);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Parameter traversal: a stable, named, flat view over every trainable
// tensor. The optimizer, checkpoints, and the finite-difference harness all
// iterate the same canonical order.
// ---------------------------------------------------------------------------

template <class T>
struct TensorRef {
    std::string name;
    T* data;
    std::ptrdiff_t size;
};

template <class T>
void append_net_refs(Network<T>& net, const std::string& prefix, std::vector<TensorRef<T>>& out) {
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto& l = net.layers[k];
        out.push_back({prefix + "/L" + std::to_string(k) + "/W", l.W.data(),
                       std::ptrdiff_t(l.W.size())});
        out.push_back({prefix + "/L" + std::to_string(k) + "/b", l.b.data(),
                       std::ptrdiff_t(l.b.size())});
    }
}

template <class T>
std::vector<TensorRef<T>> tensor_refs(NeuralModalModel<T>& m) {
    std::vector<TensorRef<T>> refs;
    append_net_refs(m.modal, "theta_w", refs);
    if (m.spectrum.kind == HeadKind::Mlp) {
        append_net_refs(m.spectrum.net, "theta_omega", refs);
        refs.push_back({"latent_omega", m.spectrum.latent.data(),
                        std::ptrdiff_t(m.spectrum.latent.size())});
    } else {
        refs.push_back({"omega_raw", m.spectrum.raw.data(), std::ptrdiff_t(m.spectrum.raw.size())});
    }
    if (m.init_state.kind == HeadKind::Mlp) {
        append_net_refs(m.init_state.net, "theta_b", refs);
        refs.push_back({"latent_b", m.init_state.latent.data(),
                        std::ptrdiff_t(m.init_state.latent.size())});
    } else {
        refs.push_back({"b_raw", m.init_state.raw.data(), std::ptrdiff_t(m.init_state.raw.size())});
    }
    return refs;
}

// Gradient buffers shaped exactly like the model's trainable tensors.
template <class T>
struct ModelGrads {
    NetworkGrads<T> modal;
    NetworkGrads<T> omega_net;
    VecX<T> omega_latent;
    VecX<T> omega_raw;
    NetworkGrads<T> b_net;
    VecX<T> b_latent;
    VecX<T> b_raw;

    static ModelGrads zeros_like(const NeuralModalModel<T>& m) {
        ModelGrads g;
        g.modal = NetworkGrads<T>::zeros_like(m.modal);
        if (m.spectrum.kind == HeadKind::Mlp) {
            g.omega_net = NetworkGrads<T>::zeros_like(m.spectrum.net);
            g.omega_latent = VecX<T>::Zero(m.spectrum.latent.size());
        } else {
            g.omega_raw = VecX<T>::Zero(m.spectrum.raw.size());
        }
        if (m.init_state.kind == HeadKind::Mlp) {
            g.b_net = NetworkGrads<T>::zeros_like(m.init_state.net);
            g.b_latent = VecX<T>::Zero(m.init_state.latent.size());
        } else {
            g.b_raw = VecX<T>::Zero(m.init_state.raw.size());
        }
        return g;
    }
};

template <class T>
void append_net_grad_refs(NetworkGrads<T>& g, const std::string& prefix,
                          std::vector<TensorRef<T>>& out) {
    for (std::size_t k = 0; k < g.layers.size(); ++k) {
        out.push_back({prefix + "/L" + std::to_string(k) + "/W", g.layers[k].dW.data(),
                       std::ptrdiff_t(g.layers[k].dW.size())});
        out.push_back({prefix + "/L" + std::to_string(k) + "/b", g.layers[k].db.data(),
                       std::ptrdiff_t(g.layers[k].db.size())});
    }
}

// Same canonical order as tensor_refs(model).
template <class T>
std::vector<TensorRef<T>> tensor_refs(ModelGrads<T>& g, const NeuralModalModel<T>& m) {
    std::vector<TensorRef<T>> refs;
    append_net_grad_refs(g.modal, "theta_w", refs);
    if (m.spectrum.kind == HeadKind::Mlp) {
        append_net_grad_refs(g.omega_net, "theta_omega", refs);
        refs.push_back({"latent_omega", g.omega_latent.data(),
                        std::ptrdiff_t(g.omega_latent.size())});
    } else {
        refs.push_back({"omega_raw", g.omega_raw.data(), std::ptrdiff_t(g.omega_raw.size())});
    }
    if (m.init_state.kind == HeadKind::Mlp) {
        append_net_grad_refs(g.b_net, "theta_b", refs);
        refs.push_back({"latent_b", g.b_latent.data(), std::ptrdiff_t(g.b_latent.size())});
    } else {
        refs.push_back({"b_raw", g.b_raw.data(), std::ptrdiff_t(g.b_raw.size())});
    }
    return refs;
}

}  // namespace ndmd
