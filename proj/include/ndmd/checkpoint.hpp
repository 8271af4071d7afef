#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ndmd/io.hpp"
#include "ndmd/model.hpp"
#include "ndmd/train.hpp"

namespace ndmd {

// Model + trainer state in the NDMD blob container. Parameters and Adam
// moments are stored as f64 arrays under their canonical tensor names; the
// architecture plus scalar trainer state live in a JSON string entry.

namespace detail {

inline nlohmann::json net_arch(int in_dim, const std::vector<std::pair<int, std::string>>& layers) {
    nlohmann::json j;
    j["in"] = in_dim;
    j["layers"] = nlohmann::json::array();
    for (const auto& [out, act] : layers) j["layers"].push_back({{"out", out}, {"act", act}});
    return j;
}

template <class T>
nlohmann::json describe_net(const Network<T>& net) {
    std::vector<std::pair<int, std::string>> layers;
    for (const auto& l : net.layers)
        layers.push_back({int(l.W.rows()), activation_name(l.act)});
    return net_arch(net.in_dim(), layers);
}

template <class T>
Network<T> build_net(const nlohmann::json& j) {
    Network<T> net;
    int in = j.at("in").get<int>();
    for (const auto& lj : j.at("layers")) {
        DenseLayer<T> l;
        int out = lj.at("out").get<int>();
        l.W = MatX<T>::Zero(out, in);
        l.b = VecX<T>::Zero(out);
        l.act = activation_from_name(lj.at("act").get<std::string>());
        net.layers.push_back(std::move(l));
        in = out;
    }
    return net;
}

}  // namespace detail

template <class T>
void checkpoint_write(const std::string& path, NeuralModalModel<T>& model,
                      const TrainState<T>* state = nullptr,
                      const std::optional<RunMeta>& meta = std::nullopt) {
    BlobFile blobs;
    nlohmann::json j;
    j["precision"] = int(sizeof(T) * 8);
    j["K"] = model.K();
    j["posenc_degree"] = model.enc.degree;
    j["time_scale"] = double(model.spectrum.time_scale);
    j["time_start"] = model.time.t_start;
    j["time_span"] = model.time.span;
    j["head"] = model.spectrum.kind == HeadKind::Mlp ? "mlp" : "free";
    j["modal"] = detail::describe_net(model.modal);
    if (model.spectrum.kind == HeadKind::Mlp) {
        j["omega_net"] = detail::describe_net(model.spectrum.net);
        j["b_net"] = detail::describe_net(model.init_state.net);
        j["latent_dim"] = int(model.spectrum.latent.size());
    }
    if (state) {
        j["trainer"] = {{"step", state->step},
                        {"epoch", state->epoch},
                        {"lr", state->lr},
                        {"best_loss", state->best_loss},
                        {"has_best", state->has_best},
                        {"epochs_since_improve", state->epochs_since_improve}};
        blobs.strings["trainer/rng"] = state->rng_state;
    }
    blobs.strings["meta/json"] = j.dump();

    auto refs = tensor_refs(model);
    for (const auto& ref : refs) {
        std::vector<double> v(std::size_t(ref.size));
        for (std::ptrdiff_t i = 0; i < ref.size; ++i) v[std::size_t(i)] = double(ref.data[i]);
        blobs.arrays["param/" + ref.name] = std::move(v);
    }
    if (state && !state->m.empty()) {
        require(state->m.size() == refs.size(), "checkpoint: moment/parameter count mismatch");
        for (std::size_t i = 0; i < refs.size(); ++i) {
            std::vector<double> mv(std::size_t(refs[i].size)), vv(std::size_t(refs[i].size));
            for (std::ptrdiff_t q = 0; q < refs[i].size; ++q) {
                mv[std::size_t(q)] = double(state->m[i][q]);
                vv[std::size_t(q)] = double(state->v[i][q]);
            }
            blobs.arrays["adam_m/" + refs[i].name] = std::move(mv);
            blobs.arrays["adam_v/" + refs[i].name] = std::move(vv);
        }
    }
    blob_write(path, blobs, meta);
}

inline int checkpoint_precision(const std::string& path) {
    BlobFile blobs = blob_read(path);
    auto it = blobs.strings.find("meta/json");
    require(it != blobs.strings.end(), path + ": missing meta/json entry");
    return nlohmann::json::parse(it->second).at("precision").get<int>();
}

template <class T>
NeuralModalModel<T> checkpoint_read(const std::string& path, TrainState<T>* state = nullptr) {
    BlobFile blobs = blob_read(path);
    auto it = blobs.strings.find("meta/json");
    require(it != blobs.strings.end(), path + ": missing meta/json entry");
    nlohmann::json j = nlohmann::json::parse(it->second);

    NeuralModalModel<T> model;
    const int K = j.at("K").get<int>();
    model.enc = PosEncConfig{j.at("posenc_degree").get<int>(), 2};
    model.time.t_start = j.at("time_start").get<double>();
    model.time.span = j.at("time_span").get<double>();
    model.modal = detail::build_net<T>(j.at("modal"));
    model.spectrum.K = K;
    model.spectrum.time_scale = T(j.at("time_scale").get<double>());
    model.init_state.K = K;
    const bool mlp = j.at("head").get<std::string>() == "mlp";
    model.spectrum.kind = mlp ? HeadKind::Mlp : HeadKind::Free;
    model.init_state.kind = model.spectrum.kind;
    if (mlp) {
        model.spectrum.net = detail::build_net<T>(j.at("omega_net"));
        model.init_state.net = detail::build_net<T>(j.at("b_net"));
        int latent_dim = j.at("latent_dim").get<int>();
        model.spectrum.latent = VecX<T>::Zero(latent_dim);
        model.init_state.latent = VecX<T>::Zero(latent_dim);
    } else {
        model.spectrum.raw = VecX<T>::Zero(2 * K);
        model.init_state.raw = VecX<T>::Zero(1 + 2 * K);
    }

    auto refs = tensor_refs(model);
    for (const auto& ref : refs) {
        auto a = blobs.arrays.find("param/" + ref.name);
        require(a != blobs.arrays.end(), path + ": missing parameter array " + ref.name);
        require(std::ptrdiff_t(a->second.size()) == ref.size,
                path + ": size mismatch in parameter array " + ref.name);
        for (std::ptrdiff_t i = 0; i < ref.size; ++i) ref.data[i] = T(a->second[std::size_t(i)]);
    }

    if (state) {
        if (j.contains("trainer")) {
            const auto& tj = j.at("trainer");
            state->step = tj.at("step").get<long>();
            state->epoch = tj.at("epoch").get<int>();
            state->lr = tj.at("lr").get<double>();
            state->best_loss = tj.at("best_loss").get<double>();
            state->has_best = tj.at("has_best").get<bool>();
            state->epochs_since_improve = tj.at("epochs_since_improve").get<int>();
            auto rit = blobs.strings.find("trainer/rng");
            if (rit != blobs.strings.end()) state->rng_state = rit->second;
            state->m.clear();
            state->v.clear();
            for (const auto& ref : refs) {
                auto mi = blobs.arrays.find("adam_m/" + ref.name);
                auto vi = blobs.arrays.find("adam_v/" + ref.name);
                if (mi == blobs.arrays.end() || vi == blobs.arrays.end()) break;
                VecX<T> m(ref.size), v(ref.size);
                for (std::ptrdiff_t q = 0; q < ref.size; ++q) {
                    m[q] = T(mi->second[std::size_t(q)]);
                    v[q] = T(vi->second[std::size_t(q)]);
                }
                state->m.push_back(std::move(m));
                state->v.push_back(std::move(v));
            }
        }
    }
    return model;
}

// Grid decomposition export: mode stacks as an NVID file plus a spectrum CSV
// (columns k, alpha, omega, b_re, b_im, flagged).
void write_decomposition(const std::string& base_path, const ModalDecomposition& d,
                         const std::optional<RunMeta>& meta = std::nullopt);

}  // namespace ndmd
