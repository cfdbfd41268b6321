#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "specnn/baseline.hpp"

using namespace specnn;

namespace {
Vector random_input(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Vector x(n);
    for (double& v : x) v = uniform(rng, 0.0, 1.0);
    return x;
}
}  // namespace

TEST_CASE("init_dense_net: shapes, ranges, zero biases, determinism") {
    const DenseNetwork net = init_dense_net({6, 4, 3},
                                            {ActivationKind::relu(), ActivationKind::identity()},
                                            42);
    REQUIRE(net.layers.size() == 2);
    CHECK(net.layers[0].weights.rows() == 4);
    CHECK(net.layers[0].weights.cols() == 6);
    CHECK(net.weight_count() == 24 + 12);

    const double bound0 = 0.5 / std::sqrt(6.0);
    for (double v : net.layers[0].weights.values()) {
        CHECK(v >= -bound0);
        CHECK(v <= bound0);
    }
    for (const auto& l : net.layers) {
        for (double b : l.bias) CHECK(b == 0.0);
        CHECK(l.train_bias);
        for (char m : l.mask) CHECK(m == 1);
    }

    const DenseNetwork again = init_dense_net({6, 4, 3},
                                              {ActivationKind::relu(), ActivationKind::identity()},
                                              42);
    CHECK(net.layers[0].weights == again.layers[0].weights);
    CHECK(net.layers[1].weights == again.layers[1].weights);

    CHECK_THROWS_AS(init_dense_net({5}, {}, 0), domain_error);
    CHECK_THROWS_AS(init_dense_net({5, 3}, {}, 0), shape_error);
}

TEST_CASE("apply_random_mask marks exactly the requested count and freezes biases") {
    DenseNetwork net = init_dense_net({10, 8, 5},
                                      {ActivationKind::identity(), ActivationKind::identity()},
                                      7);
    apply_random_mask(net, 13, 3);
    std::size_t marked = 0;
    for (const auto& l : net.layers) {
        marked += static_cast<std::size_t>(std::count(l.mask.begin(), l.mask.end(), 1));
        CHECK_FALSE(l.train_bias);
    }
    CHECK(marked == 13);
    CHECK(dense_collect_trainable(net).size() == 13);

    // same seed -> same mask; different seed -> different mask (w.h.p.)
    DenseNetwork net2 = init_dense_net({10, 8, 5},
                                       {ActivationKind::identity(), ActivationKind::identity()},
                                       7);
    apply_random_mask(net2, 13, 3);
    for (std::size_t k = 0; k < net.layers.size(); ++k)
        CHECK(net.layers[k].mask == net2.layers[k].mask);
    apply_random_mask(net2, 13, 4);
    bool any_diff = false;
    for (std::size_t k = 0; k < net.layers.size(); ++k)
        any_diff = any_diff || net.layers[k].mask != net2.layers[k].mask;
    CHECK(any_diff);

    CHECK_THROWS_AS(apply_random_mask(net, 1000, 0), domain_error);
}

TEST_CASE("masked-out weights stay bitwise frozen through training") {
    Dataset ds;
    ds.features = Matrix(12, 4);
    ds.labels.resize(12);
    Rng rng(9);
    for (double& v : ds.features.values()) v = uniform(rng, 0.0, 1.0);
    for (std::size_t s = 0; s < 12; ++s) ds.labels[s] = static_cast<int>(s % 3);

    DenseNetwork net = init_dense_net({4, 3}, {ActivationKind::identity()}, 5);
    apply_random_mask(net, 4, 2);
    const Matrix before = net.layers[0].weights;
    const Vector bias_before = net.layers[0].bias;

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    train(net, ds, cfg);

    CHECK(net.layers[0].bias == bias_before);
    bool any_moved = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (net.layers[0].mask[i]) {
            any_moved = any_moved || net.layers[0].weights.values()[i] != before.values()[i];
        } else {
            CHECK(net.layers[0].weights.values()[i] == before.values()[i]);
        }
    }
    CHECK(any_moved);
}

TEST_CASE("dense forward: hand-checked affine map") {
    DenseNetwork net;
    DenseLayer l;
    l.weights = Matrix(2, 2, {1.0, 2.0, -1.0, 0.5});
    l.bias = {0.25, -0.25};
    l.mask.assign(4, 1);
    net.layers.push_back(l);
    net.activations = {ActivationKind::identity()};

    const auto t = detail::dense_forward(net, Matrix(1, 2, {1.0, 1.0}));
    CHECK(t.post.back()(0, 0) == doctest::Approx(3.25));
    CHECK(t.post.back()(0, 1) == doctest::Approx(-0.75));

    CHECK_THROWS_AS(detail::dense_forward(net, Matrix(1, 3)), shape_error);
}

TEST_CASE("dense gradients pass finite differences (weights, biases, masks)") {
    DenseNetwork full = init_dense_net({7, 5, 4},
                                       {ActivationKind::relu(), ActivationKind::identity()},
                                       11);
    for (std::uint64_t s = 0; s < 5; ++s)
        CHECK(dense_finite_diff_check(full, random_input(7, 60 + s), s % 4) < 1e-5);

    DenseNetwork masked = init_dense_net({7, 5, 4},
                                         {ActivationKind::tanh_beta(0.7),
                                          ActivationKind::identity()},
                                         13);
    apply_random_mask(masked, 12, 1);
    CHECK(dense_finite_diff_check(masked, random_input(7, 70), 2) < 1e-5);

    DenseNetwork se = init_dense_net({6, 4}, {ActivationKind::identity()}, 17);
    se.loss = LossKind::SquaredError;
    CHECK(dense_finite_diff_check(se, random_input(6, 80), 1) < 1e-5);
}

TEST_CASE("dense batch gradient equals summed per-sample gradients") {
    DenseNetwork net = init_dense_net({5, 4, 3},
                                      {ActivationKind::relu(), ActivationKind::identity()},
                                      19);
    const std::size_t batch = 4;
    Matrix x(batch, 5);
    Rng rng(20);
    for (double& v : x.values()) v = uniform(rng, 0.0, 1.0);
    std::vector<int> labels{0, 2, 1, 2};

    DenseGradients whole;
    const double whole_loss = dense_backward_batch(net, x, labels, whole);

    double mean_loss = 0.0;
    std::vector<Matrix> acc_w;
    std::vector<Vector> acc_b;
    for (const auto& l : net.layers) {
        acc_w.emplace_back(l.weights.rows(), l.weights.cols());
        acc_b.emplace_back(l.bias.size(), 0.0);
    }
    for (std::size_t s = 0; s < batch; ++s) {
        Matrix xs(1, 5);
        std::copy(x.row(s), x.row(s) + 5, xs.row(0));
        DenseGradients g;
        mean_loss += dense_backward_batch(net, xs, std::span<const int>(&labels[s], 1), g) /
                     static_cast<double>(batch);
        for (std::size_t k = 0; k < net.layers.size(); ++k) {
            for (std::size_t i = 0; i < acc_w[k].size(); ++i)
                acc_w[k].values()[i] += g.d_weights[k].values()[i] / double(batch);
            for (std::size_t i = 0; i < acc_b[k].size(); ++i)
                acc_b[k][i] += g.d_bias[k][i] / double(batch);
        }
    }
    CHECK(whole_loss == doctest::Approx(mean_loss).epsilon(1e-12));
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        for (std::size_t i = 0; i < acc_w[k].size(); ++i)
            CHECK(whole.d_weights[k].values()[i] ==
                  doctest::Approx(acc_w[k].values()[i]).epsilon(1e-10));
        for (std::size_t i = 0; i < acc_b[k].size(); ++i)
            CHECK(whole.d_bias[k][i] == doctest::Approx(acc_b[k][i]).epsilon(1e-10));
    }
}
