#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ndmd/common.hpp"
#include "ndmd/rng.hpp"
#include "ndmd/threading.hpp"

namespace ndmd {

// ---------------------------------------------------------------------------
// Minimal dense feed-forward engine with exact reverse-mode gradients.
// Columns are samples throughout: a batch of n points of dimension d is a
// d x n matrix, so every layer is one GEMM.
// ---------------------------------------------------------------------------

enum class Activation { Identity, Tanh, Relu, Sine };

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Sine: return "sine";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "sine") return Activation::Sine;
    throw DataError("unknown activation: " + s);
}

struct PosEncConfig {
    int degree = 4;     // frequency octaves L
    int input_dim = 2;
    int encoded_dim() const { return 2 * degree * input_dim; }
};

// Sinusoidal positional encoding. Output rows per input dim d and octave k:
// sin(2^k pi p_d), cos(2^k pi p_d), ordered dim-major then octave.
template <class T>
MatX<T> posenc(const MatX<T>& p, const PosEncConfig& cfg) {
    require(cfg.degree >= 1, "posenc: degree must be >= 1");
    require(p.rows() == cfg.input_dim, "posenc: input dim mismatch");
    if (!p.allFinite()) throw DataError("posenc: non-finite input coordinate");
    MatX<T> out(cfg.encoded_dim(), p.cols());
    for (int d = 0; d < cfg.input_dim; ++d) {
        T freq = T(M_PI);
        for (int k = 0; k < cfg.degree; ++k) {
            int row = 2 * (d * cfg.degree + k);
            out.row(row) = (p.row(d) * freq).array().sin();
            out.row(row + 1) = (p.row(d) * freq).array().cos();
            freq *= T(2);
        }
    }
    return out;
}

template <class T>
struct DenseLayer {
    MatX<T> W;  // [out x in]
    VecX<T> b;  // [out]
    Activation act = Activation::Tanh;
};

template <class T>
struct Network {
    std::vector<DenseLayer<T>> layers;

    int in_dim() const { return layers.empty() ? 0 : int(layers.front().W.cols()); }
    int out_dim() const { return layers.empty() ? 0 : int(layers.back().W.rows()); }

    void check_chained() const {
        for (std::size_t k = 0; k + 1 < layers.size(); ++k)
            require(layers[k].W.rows() == layers[k + 1].W.cols(),
                    "network: layer dimensions do not chain at layer " + std::to_string(k));
        for (const auto& l : layers)
            require(l.W.allFinite() && l.b.allFinite(), "network: non-finite parameter");
    }
};

// Cached forward state: the input batch plus each layer's pre-activation.
template <class T>
struct Tape {
    MatX<T> input;
    std::vector<MatX<T>> pre;  // pre[k] = W_k x_k + b_k
};

template <class T>
struct LayerGrads {
    MatX<T> dW;
    VecX<T> db;
};

template <class T>
struct NetworkGrads {
    std::vector<LayerGrads<T>> layers;

    static NetworkGrads zeros_like(const Network<T>& net) {
        NetworkGrads g;
        g.layers.reserve(net.layers.size());
        for (const auto& l : net.layers)
            g.layers.push_back({MatX<T>::Zero(l.W.rows(), l.W.cols()), VecX<T>::Zero(l.b.size())});
        return g;
    }
};

namespace detail {

template <class T>
inline void apply_activation(Activation act, MatX<T>& z) {
    switch (act) {
        case Activation::Identity: break;
        case Activation::Tanh: z = z.array().tanh(); break;
        case Activation::Relu: z = z.array().max(T(0)); break;
        case Activation::Sine: z = z.array().sin(); break;
    }
}

// derivative w.r.t. pre-activation, evaluated from the stored pre-activation
template <class T>
inline MatX<T> activation_grad(Activation act, const MatX<T>& pre) {
    switch (act) {
        case Activation::Identity: return MatX<T>::Ones(pre.rows(), pre.cols());
        case Activation::Tanh: {
            MatX<T> th = pre.array().tanh();
            return (T(1) - th.array().square()).matrix();
        }
        case Activation::Relu: return (pre.array() > T(0)).template cast<T>().matrix();
        case Activation::Sine: return pre.array().cos().matrix();
    }
    return MatX<T>();
}

}  // namespace detail

// Forward pass over a batch of columns; tape records what backward needs.
// Column blocks are computed independently, so `workers` never changes the
// arithmetic, only the wall clock.
template <class T>
MatX<T> forward(const Network<T>& net, const MatX<T>& x, Tape<T>* tape, int workers = 1) {
    require(!net.layers.empty(), "forward: empty network");
    require(x.rows() == net.in_dim(), "forward: input dim " + std::to_string(x.rows()) +
                                          " != layer in-dim " + std::to_string(net.in_dim()));
    if (tape) {
        tape->input = x;
        tape->pre.assign(net.layers.size(), MatX<T>());
        for (std::size_t k = 0; k < net.layers.size(); ++k)
            tape->pre[k].resize(net.layers[k].W.rows(), x.cols());
    }

    const std::size_t n = std::size_t(x.cols());
    MatX<T> out(net.out_dim(), x.cols());
    auto run_block = [&](std::size_t, std::size_t b, std::size_t e) {
        if (b == e) return;
        auto cols = Eigen::seqN(Eigen::Index(b), Eigen::Index(e - b));
        MatX<T> cur = x(Eigen::all, cols);
        for (std::size_t k = 0; k < net.layers.size(); ++k) {
            const auto& l = net.layers[k];
            MatX<T> z = (l.W * cur).colwise() + l.b;
            if (tape) tape->pre[k](Eigen::all, cols) = z;
            detail::apply_activation(l.act, z);
            cur = std::move(z);
        }
        out(Eigen::all, cols) = cur;
    };
    parallel_chunks(n, 512, workers, run_block);
    return out;
}

template <class T>
std::pair<VecX<T>, Tape<T>> forward(const Network<T>& net, const VecX<T>& x) {
    Tape<T> tape;
    MatX<T> y = forward<T>(net, MatX<T>(x), &tape);
    return {VecX<T>(y.col(0)), std::move(tape)};
}

// Reverse-mode pass: gradients of <dy, y> w.r.t. every weight, bias, and the
// input batch. Weight/bias gradients are reduced over fixed column chunks in
// chunk order, which keeps the summation order independent of `workers`.
template <class T>
NetworkGrads<T> backward(const Network<T>& net, const Tape<T>& tape, const MatX<T>& dy,
                         MatX<T>* dx = nullptr, int workers = 1) {
    require(tape.pre.size() == net.layers.size(), "backward: tape/network mismatch");
    require(dy.rows() == net.out_dim() && dy.cols() == tape.input.cols(),
            "backward: dy shape mismatch");
    for (std::size_t k = 0; k < net.layers.size(); ++k)
        require(tape.pre[k].rows() == net.layers[k].W.rows() &&
                    tape.pre[k].cols() == tape.input.cols(),
                "backward: tape/network mismatch at layer " + std::to_string(k));

    const std::size_t n = std::size_t(tape.input.cols());
    const std::size_t nlayers = net.layers.size();
    auto chunks = fixed_chunks(n, 512);

    // per-chunk partial gradients, reduced sequentially afterwards
    std::vector<NetworkGrads<T>> partial(chunks.size());
    if (dx) dx->resize(net.in_dim(), tape.input.cols());

    auto run_block = [&](std::size_t c, std::size_t b, std::size_t e) {
        auto& g = partial[c];
        g = NetworkGrads<T>::zeros_like(net);
        if (b == e) return;
        auto cols = Eigen::seqN(Eigen::Index(b), Eigen::Index(e - b));
        MatX<T> delta = dy(Eigen::all, cols);
        for (std::size_t k = nlayers; k-- > 0;) {
            const auto& l = net.layers[k];
            delta = delta.cwiseProduct(detail::activation_grad<T>(l.act, tape.pre[k](Eigen::all, cols)));
            // layer input: activated output of layer k-1, or the batch input
            MatX<T> layer_in;
            if (k == 0) {
                layer_in = tape.input(Eigen::all, cols);
            } else {
                layer_in = tape.pre[k - 1](Eigen::all, cols);
                detail::apply_activation(net.layers[k - 1].act, layer_in);
            }
            g.layers[k].dW.noalias() = delta * layer_in.transpose();
            g.layers[k].db = delta.rowwise().sum();
            if (k == 0) {
                if (dx) (*dx)(Eigen::all, cols).noalias() = l.W.transpose() * delta;
            } else {
                delta = l.W.transpose() * delta;
            }
        }
    };
    parallel_chunks(n, 512, workers, run_block);

    NetworkGrads<T> grads = std::move(partial[0]);
    for (std::size_t c = 1; c < partial.size(); ++c)
        for (std::size_t k = 0; k < nlayers; ++k) {
            grads.layers[k].dW += partial[c].layers[k].dW;
            grads.layers[k].db += partial[c].layers[k].db;
        }
    return grads;
}

// Glorot-uniform weights, zero biases, deterministic under the seed.
template <class T>
Network<T> init_network(const std::vector<int>& sizes, const std::vector<Activation>& acts,
                        std::uint64_t seed) {
    require(sizes.size() >= 2, "init_network: need at least input and output size");
    require(acts.size() == sizes.size() - 1, "init_network: one activation per layer");
    for (int s : sizes) require(s >= 1, "init_network: layer sizes must be positive");
    Rng rng(seed);
    Network<T> net;
    net.layers.reserve(sizes.size() - 1);
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        DenseLayer<T> l;
        int fan_in = sizes[k], fan_out = sizes[k + 1];
        double a = std::sqrt(6.0 / double(fan_in + fan_out));
        l.W.resize(fan_out, fan_in);
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
            for (Eigen::Index j = 0; j < l.W.cols(); ++j)
                l.W(i, j) = T(rng.uniform(-a, a));
        l.b = VecX<T>::Zero(fan_out);
        l.act = acts[k];
        net.layers.push_back(std::move(l));
    }
    return net;
}

// Hidden-layer helper: in -> hidden... -> out with `act` inside and an
// identity output layer.
template <class T>
Network<T> make_mlp(int in_dim, const std::vector<int>& hidden, int out_dim, Activation act,
                    std::uint64_t seed) {
    std::vector<int> sizes;
    sizes.push_back(in_dim);
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(out_dim);
    std::vector<Activation> acts(sizes.size() - 1, act);
    acts.back() = Activation::Identity;
    return init_network<T>(sizes, acts, seed);
}

}  // namespace ndmd
