#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ndmd/net.hpp"

using namespace ndmd;

namespace {

Network<double> seeded_net(const std::vector<int>& sizes, std::uint64_t seed,
                           Activation act = Activation::Tanh) {
    std::vector<Activation> acts(sizes.size() - 1, act);
    acts.back() = Activation::Identity;
    return init_network<double>(sizes, acts, seed);
}

}  // namespace

TEST_CASE("posenc at the origin and at the domain edge") {
    PosEncConfig cfg{4, 2};
    MatX<double> p(2, 1);
    p << 0.0, 0.0;
    MatX<double> e = posenc<double>(p, cfg);
    REQUIRE(e.rows() == 16);
    for (int d = 0; d < 2; ++d)
        for (int k = 0; k < 4; ++k) {
            CHECK(e(2 * (d * 4 + k), 0) == doctest::Approx(0.0));      // sin
            CHECK(e(2 * (d * 4 + k) + 1, 0) == doctest::Approx(1.0));  // cos
        }

    PosEncConfig cfg1{1, 1};
    MatX<double> p1(1, 1);
    p1 << 1.0;
    MatX<double> e1 = posenc<double>(p1, cfg1);
    CHECK(e1(0, 0) == doctest::Approx(std::sin(M_PI)));
    CHECK(e1(1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("posenc matches direct scalar evaluation") {
    PosEncConfig cfg{2, 2};
    MatX<double> p(2, 1);
    p << 0.25, -0.5;
    MatX<double> e = posenc<double>(p, cfg);
    REQUIRE(e.rows() == 8);
    int row = 0;
    for (int d = 0; d < 2; ++d)
        for (int k = 0; k < 2; ++k) {
            double arg = std::pow(2.0, k) * M_PI * p(d, 0);
            CHECK(e(row++, 0) == doctest::Approx(std::sin(arg)).epsilon(1e-14));
            CHECK(e(row++, 0) == doctest::Approx(std::cos(arg)).epsilon(1e-14));
        }
}

TEST_CASE("posenc rejects non-finite input and stays bounded") {
    PosEncConfig cfg{3, 2};
    MatX<double> bad(2, 1);
    bad << std::nan(""), 0.0;
    CHECK_THROWS_AS(posenc<double>(bad, cfg), DataError);

    Rng rng(3);
    MatX<double> p(2, 64);
    for (int q = 0; q < 64; ++q) {
        p(0, q) = rng.uniform(-50.0, 50.0);
        p(1, q) = rng.uniform(-1.0, 1.0);
    }
    MatX<double> e = posenc<double>(p, cfg);
    CHECK(e.maxCoeff() <= 1.0);
    CHECK(e.minCoeff() >= -1.0);
}

TEST_CASE("forward: identity and bias-only layers") {
    Network<double> net;
    net.layers.push_back({MatX<double>::Identity(2, 2), VecX<double>::Zero(2),
                          Activation::Identity});
    VecX<double> x(2);
    x << 1.0, 2.0;
    auto [y, tape] = forward<double>(net, x);
    CHECK(y(0) == 1.0);
    CHECK(y(1) == 2.0);

    Network<double> bias;
    bias.layers.push_back({MatX<double>::Zero(1, 2), VecX<double>::Constant(1, 3.0),
                           Activation::Identity});
    auto [yb, tb] = forward<double>(bias, x);
    CHECK(yb(0) == 3.0);
}

TEST_CASE("forward matches a scalar-by-scalar re-evaluation") {
    auto net = seeded_net({16, 8, 1}, 99);
    Rng rng(7);
    VecX<double> x(16);
    for (int i = 0; i < 16; ++i) x(i) = rng.uniform(-1.0, 1.0);
    auto [y, tape] = forward<double>(net, x);

    // independent scalar evaluation
    std::vector<double> cur(x.data(), x.data() + 16);
    for (const auto& l : net.layers) {
        std::vector<double> nxt(std::size_t(l.W.rows()), 0.0);
        for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
            double z = l.b(i);
            for (Eigen::Index j = 0; j < l.W.cols(); ++j) z += l.W(i, j) * cur[std::size_t(j)];
            nxt[std::size_t(i)] = l.act == Activation::Tanh ? std::tanh(z) : z;
        }
        cur = nxt;
    }
    CHECK(y(0) == doctest::Approx(cur[0]).epsilon(1e-14));
}

TEST_CASE("forward rejects shape mismatches") {
    auto net = seeded_net({4, 3}, 1);
    MatX<double> x(3, 1);
    x.setZero();
    CHECK_THROWS_AS(forward<double>(net, x, nullptr), DataError);
}

TEST_CASE("backward: linear-layer gradients in closed form") {
    Network<double> net;
    Rng rng(21);
    MatX<double> W(3, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) W(i, j) = rng.normal();
    net.layers.push_back({W, VecX<double>::Zero(3), Activation::Identity});
    VecX<double> x(2);
    x << 0.3, -0.7;
    auto [y, tape] = forward<double>(net, x);
    MatX<double> dy = MatX<double>::Ones(3, 1);
    MatX<double> dx;
    auto grads = backward<double>(net, tape, dy, &dx);
    // dL/dW = dy x^T, dL/db = dy
    for (int i = 0; i < 3; ++i) {
        CHECK(grads.layers[0].db(i) == doctest::Approx(1.0));
        for (int j = 0; j < 2; ++j)
            CHECK(grads.layers[0].dW(i, j) == doctest::Approx(x(j)).epsilon(1e-14));
    }
    VecX<double> dx_expect = W.transpose() * VecX<double>::Ones(3);
    CHECK((dx.col(0) - dx_expect).norm() == doctest::Approx(0.0));
}

TEST_CASE("backward: zero dy gives zero gradients") {
    auto net = seeded_net({3, 5, 2}, 5);
    MatX<double> x = MatX<double>::Random(3, 4);
    Tape<double> tape;
    forward<double>(net, x, &tape);
    auto grads = backward<double>(net, tape, MatX<double>::Zero(2, 4));
    for (const auto& l : grads.layers) {
        CHECK(l.dW.cwiseAbs().maxCoeff() == 0.0);
        CHECK(l.db.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("backward matches central finite differences on a 3-layer net") {
    auto net = seeded_net({4, 8, 8, 2}, 11);
    Rng rng(2);
    MatX<double> x(4, 3);
    for (int i = 0; i < 4; ++i)
        for (int q = 0; q < 3; ++q) x(i, q) = rng.uniform(-1.0, 1.0);
    MatX<double> dy(2, 3);
    for (int i = 0; i < 2; ++i)
        for (int q = 0; q < 3; ++q) dy(i, q) = rng.normal();

    auto loss = [&]() {
        MatX<double> y = forward<double>(net, x, nullptr);
        return (y.array() * dy.array()).sum();
    };
    Tape<double> tape;
    forward<double>(net, x, &tape);
    auto grads = backward<double>(net, tape, dy);

    std::vector<TensorRef<double>> prefs, grefs;
    append_net_refs(net, "net", prefs);
    append_net_grad_refs(grads, "net", grefs);
    auto rep = ndmd::testing::check_gradients(prefs, grefs, loss);
    CHECK_MESSAGE(rep.worst_rel < 1e-4, rep.worst_name);
}

TEST_CASE("backward input gradient composes over chained networks") {
    auto f = seeded_net({3, 6, 4}, 31);
    auto g = seeded_net({4, 5, 1}, 32);
    Rng rng(4);
    VecX<double> x(3);
    for (int i = 0; i < 3; ++i) x(i) = rng.uniform(-1.0, 1.0);

    auto joint = [&]() {
        MatX<double> mid = forward<double>(f, MatX<double>(x), nullptr);
        MatX<double> out = forward<double>(g, mid, nullptr);
        return out(0, 0);
    };
    Tape<double> tf, tg;
    MatX<double> mid = forward<double>(f, MatX<double>(x), &tf);
    forward<double>(g, mid, &tg);
    MatX<double> dmid, dx;
    backward<double>(g, tg, MatX<double>::Ones(1, 1), &dmid);
    backward<double>(f, tf, dmid, &dx);

    for (int i = 0; i < 3; ++i) {
        double fd = ndmd::testing::fd_central(joint, &x(i));
        CHECK(dx(i, 0) == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("backward rejects a mismatched tape") {
    auto net = seeded_net({3, 5, 2}, 5);
    auto other = seeded_net({3, 7, 2}, 6);
    MatX<double> x = MatX<double>::Random(3, 2);
    Tape<double> tape;
    forward<double>(net, x, &tape);
    CHECK_THROWS_AS(backward<double>(other, tape, MatX<double>::Zero(2, 2)), DataError);
}

TEST_CASE("init_network: determinism, zero biases, weight statistics") {
    auto a = seeded_net({100, 100}, 42);
    auto b = seeded_net({100, 100}, 42);
    CHECK(a.layers[0].W == b.layers[0].W);
    CHECK(a.layers[0].b.cwiseAbs().maxCoeff() == 0.0);

    auto c = seeded_net({100, 100}, 43);
    CHECK(a.layers[0].W != c.layers[0].W);

    // mean of 10^4 uniform(-a, a) draws within 3 standard errors of zero
    double bound = std::sqrt(6.0 / 200.0);
    double mean = a.layers[0].W.mean();
    double se = bound / std::sqrt(3.0 * 10000.0);
    CHECK(std::abs(mean) < 3.0 * se);
    CHECK(a.layers[0].W.maxCoeff() <= bound);
    CHECK(a.layers[0].W.minCoeff() >= -bound);
}

TEST_CASE("forward is deterministic and worker-count independent") {
    auto net = seeded_net({2, 32, 32, 3}, 12);
    MatX<double> x = MatX<double>::Random(2, 1537);
    MatX<double> y1 = forward<double>(net, x, nullptr, 1);
    MatX<double> y4 = forward<double>(net, x, nullptr, 4);
    CHECK(y1 == y4);

    Tape<double> t1, t4;
    forward<double>(net, x, &t1, 1);
    forward<double>(net, x, &t4, 4);
    MatX<double> dy = MatX<double>::Random(3, 1537);
    MatX<double> dx1, dx4;
    auto g1 = backward<double>(net, t1, dy, &dx1, 1);
    auto g4 = backward<double>(net, t4, dy, &dx4, 4);
    CHECK(dx1 == dx4);
    for (std::size_t k = 0; k < g1.layers.size(); ++k) {
        CHECK(g1.layers[k].dW == g4.layers[k].dW);
        CHECK(g1.layers[k].db == g4.layers[k].db);
    }
}
