#include <doctest.h>

#include <cmath>

#include "specnn/optim.hpp"
#include "specnn/serialize.hpp"

using namespace specnn;

TEST_CASE("adamax: zero gradient leaves parameters unchanged") {
    double a = 1.5, b = -2.0;
    std::vector<double*> params{&a, &b};
    std::vector<double> grads{0.0, 0.0};
    AdaMaxState st(2, 0.03);
    adamax_step(params, grads, st);
    CHECK(a == 1.5);
    CHECK(b == -2.0);
    CHECK(st.t == 1);
}

TEST_CASE("adamax: first step hand-evaluated") {
    double theta = 0.0;
    std::vector<double*> params{&theta};
    std::vector<double> grads{1.0};
    AdaMaxState st(1, 0.03);
    adamax_step(params, grads, st);
    // m=0.1, u=1, lr = 0.03/(1-0.9) = 0.3, delta = -0.3*0.1/(1+eps)
    CHECK(st.m[0] == doctest::Approx(0.1));
    CHECK(st.u[0] == doctest::Approx(1.0));
    CHECK(theta == doctest::Approx(-0.03).epsilon(1e-7));
}

TEST_CASE("adamax: 1000 steps match an independent scalar recurrence") {
    double theta = 0.2;
    std::vector<double*> params{&theta};
    AdaMaxState st(1, 0.01);

    // independent re-implementation of the same recurrence
    double ref_theta = 0.2, m = 0.0, u = 0.0;
    Rng rng(5);
    for (int t = 1; t <= 1000; ++t) {
        const double g = uniform(rng, -2.0, 2.0);
        std::vector<double> grads{g};
        adamax_step(params, grads, st);

        m = 0.9 * m + 0.1 * g;
        u = std::max(0.999 * u, std::fabs(g));
        ref_theta -= 0.01 / (1.0 - std::pow(0.9, t)) * m / (u + 1e-8);
        CHECK(theta == doctest::Approx(ref_theta).epsilon(1e-14));
        CHECK(st.u[0] >= 0.999 * u);  // infinity-norm accumulator bound
    }
}

TEST_CASE("adamax: opposite gradients from identical states give opposite deltas") {
    double tp = 0.5, tm = 0.5;
    AdaMaxState sp(1, 0.02), sm(1, 0.02);
    std::vector<double*> pp{&tp}, pm{&tm};
    std::vector<double> gp{0.7}, gm{-0.7};
    adamax_step(pp, gp, sp);
    adamax_step(pm, gm, sm);
    CHECK(tp - 0.5 == doctest::Approx(-(tm - 0.5)).epsilon(1e-14));
}

TEST_CASE("adamax: length mismatch throws") {
    double a = 0.0;
    std::vector<double*> params{&a};
    std::vector<double> grads{1.0, 2.0};
    AdaMaxState st(1, 0.01);
    CHECK_THROWS_AS(adamax_step(params, grads, st), shape_error);
}

namespace {
// linearly separable 2-class toy set: class c concentrated on feature c
Dataset separable_toy() {
    Dataset ds;
    ds.features = Matrix(20, 2);
    ds.labels.resize(20);
    Rng rng(3);
    for (std::size_t s = 0; s < 20; ++s) {
        const int c = static_cast<int>(s % 2);
        ds.labels[s] = c;
        ds.features(s, static_cast<std::size_t>(c)) = uniform(rng, 0.5, 1.0);
        ds.features(s, static_cast<std::size_t>(1 - c)) = uniform(rng, 0.0, 0.2);
    }
    // verify separability of the construction itself: the labelled feature
    // always dominates the other one
    for (std::size_t s = 0; s < 20; ++s) {
        const auto c = static_cast<std::size_t>(ds.labels[s]);
        REQUIRE(ds.features(s, c) > ds.features(s, 1 - c));
    }
    return ds;
}
}  // namespace

TEST_CASE("train: zero trainable parameters leaves metrics constant") {
    const Dataset ds = separable_toy();
    NetworkSpec net = make_network({2, 2}, {ActivationKind::identity()},
                                   {LayerFlags{false, false, false}}, 7);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 5;
    const auto metrics = train(net, ds, cfg);
    for (const auto& m : metrics) {
        CHECK(m.train_loss == doctest::Approx(metrics[0].train_loss));
        CHECK(m.train_accuracy == doctest::Approx(metrics[0].train_accuracy));
    }
}

TEST_CASE("train: separable toy reaches full accuracy") {
    const Dataset ds = separable_toy();
    NetworkSpec net = make_network({2, 2}, {ActivationKind::identity()},
                                   {LayerFlags{true, true, false}}, 11);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 50;
    cfg.batch_size = 5;
    const auto metrics = train(net, ds, cfg);
    CHECK(metrics.back().train_accuracy == doctest::Approx(1.0));
}

TEST_CASE("train: frozen parameters stay bitwise identical; trained ones move") {
    const Dataset ds = separable_toy();
    NetworkSpec net = make_network({2, 3, 2},
                                   {ActivationKind::identity(), ActivationKind::identity()},
                                   {LayerFlags{false, true, false},
                                    LayerFlags{false, true, false}}, 13);
    const Matrix frozen_b0 = net.layers[0].block_b;
    const Vector frozen_lin0 = net.layers[0].lambda_in;
    const Vector before_lout0 = net.layers[0].lambda_out;
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    train(net, ds, cfg);
    CHECK(net.layers[0].block_b == frozen_b0);
    CHECK(net.layers[0].lambda_in == frozen_lin0);
    CHECK(net.layers[0].lambda_out != before_lout0);
}

TEST_CASE("train: same seed reproduces bitwise-identical models") {
    const Dataset ds = separable_toy();
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 3;
    cfg.seed = 99;
    auto build = [&]() {
        return make_network({2, 2}, {ActivationKind::identity()},
                            {LayerFlags{true, true, true}}, 21);
    };
    NetworkSpec n1 = build(), n2 = build();
    train(n1, ds, cfg);
    train(n2, ds, cfg);
    CHECK(n1.layers[0].block_b == n2.layers[0].block_b);
    CHECK(n1.layers[0].lambda_in == n2.layers[0].lambda_in);
    CHECK(n1.layers[0].lambda_out == n2.layers[0].lambda_out);
}
