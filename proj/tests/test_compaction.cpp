#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "specnn/compaction.hpp"

using namespace specnn;

namespace {

std::vector<SpectralLayer> random_chain(const std::vector<std::size_t>& dims,
                                        std::uint64_t seed) {
    std::vector<SpectralLayer> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k)
        layers.push_back(init_layer({dims[k], dims[k + 1]}, derive_seed(seed, k), {},
                                    {true, true, true}));
    return layers;
}

Vector random_input(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Vector x(n);
    for (double& v : x) v = uniform(rng, -1.0, 1.0);
    return x;
}

}  // namespace

TEST_CASE("folding a single layer returns its effective cross weights") {
    const auto chain = random_chain({4, 3}, 1);
    const CompactMap map = fold_linear_chain(chain);
    CHECK(map.weights == effective_cross_weights(chain[0]));
    CHECK(map.provenance == std::vector<std::size_t>{0});
}

TEST_CASE("folded chain equals sequential application") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto chain = random_chain({6, 5, 4, 3}, seed);
        const CompactMap map = fold_linear_chain(chain);
        CHECK(map.weights.rows() == 3);
        CHECK(map.weights.cols() == 6);

        const Vector x = random_input(6, seed + 50);
        Vector seq = x;
        for (const auto& l : chain) seq = forward_layer(l, seq);
        const Vector folded = matvec(map.weights, x);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(std::fabs(folded[i] - seq[i]) < 1e-12);
    }
}

TEST_CASE("fold is associative: fold(fold(prefix), suffix) = fold(all)") {
    const auto chain = random_chain({5, 7, 6, 4, 2}, 11);
    const CompactMap whole = fold_linear_chain(chain);

    const CompactMap prefix =
        fold_linear_chain(std::span<const SpectralLayer>(chain.data(), 2));
    std::vector<SpectralLayer> rest{raw_layer(prefix.weights), chain[2], chain[3]};
    const CompactMap merged = fold_linear_chain(rest);

    for (std::size_t i = 0; i < whole.weights.size(); ++i)
        CHECK(merged.weights.values()[i] ==
              doctest::Approx(whole.weights.values()[i]).epsilon(1e-12));
}

TEST_CASE("fold rejects empty and mismatched chains") {
    CHECK_THROWS_AS(fold_linear_chain(std::vector<SpectralLayer>{}), shape_error);
    std::vector<SpectralLayer> bad{init_layer({3, 4}, 0, {}, {}),
                                   init_layer({5, 2}, 1, {}, {})};
    CHECK_THROWS_AS(fold_linear_chain(bad), shape_error);
}

TEST_CASE("raw_layer reproduces its matrix through effective_cross_weights") {
    Matrix w(2, 3, {1.5, -0.25, 0.0, 3.0, 0.5, -1.0});
    const SpectralLayer l = raw_layer(w);
    CHECK(l.raw);
    CHECK(effective_cross_weights(l) == w);
    const Vector y = forward_layer(l, {1.0, 0.0, -1.0});
    CHECK(y[0] == doctest::Approx(1.5));
    CHECK(y[1] == doctest::Approx(4.0));
}

TEST_CASE("retraction: all-Identity net collapses to a single layer") {
    NetworkSpec net = make_network({6, 5, 4, 3},
                                   {ActivationKind::identity(), ActivationKind::identity(),
                                    ActivationKind::identity()},
                                   {LayerFlags{}, LayerFlags{}, LayerFlags{}}, 3);
    const NetworkSpec out = retract_linear_runs(net);
    CHECK(out.layers.size() == 1);
    CHECK(out.layers[0].raw);
    CHECK(out.layers[0].dims.n_in == 6);
    CHECK(out.layers[0].dims.n_out == 3);
}

TEST_CASE("retraction: alternating Identity/ReLU with no adjacent linear pair is unchanged") {
    NetworkSpec net = make_network({5, 4, 3},
                                   {ActivationKind::relu(), ActivationKind::identity()},
                                   {LayerFlags{}, LayerFlags{}}, 7);
    const NetworkSpec out = retract_linear_runs(net);
    CHECK(out.layers.size() == 2);
    CHECK_FALSE(out.layers[0].raw);
    CHECK_FALSE(out.layers[1].raw);
    CHECK(out.layers[0].block_b == net.layers[0].block_b);
}

TEST_CASE("retraction preserves the network function") {
    // linear -> ReLU -> linear: the first junction folds, the ReLU one stays
    NetworkSpec net = make_network({8, 6, 5, 4},
                                   {ActivationKind::identity(), ActivationKind::relu(),
                                    ActivationKind::identity()},
                                   {LayerFlags{true, true, true}, LayerFlags{},
                                    LayerFlags{}}, 9);
    const NetworkSpec out = retract_linear_runs(net);
    CHECK(out.layers.size() == 2);
    CHECK(out.layers[0].raw);
    CHECK(out.activations[0].kind == Activation::ReLU);

    for (std::uint64_t s = 0; s < 20; ++s) {
        const Vector x = random_input(8, 100 + s);
        const Vector a = forward_network(net, x).probs;
        const Vector b = forward_network(out, x).probs;
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-10);
    }
}

TEST_CASE("export_weight_distribution puts a zero map in the bin containing 0") {
    CompactMap map;
    map.weights = Matrix(3, 3);
    const Histogram h = export_weight_distribution(map, 3, -1.0, 1.0);
    CHECK(h.counts[1] == 9);
    CHECK(h.total() == 9);

    CompactMap known;
    known.weights = Matrix(2, 2, {-1.0, -1.0, 1.0, 1.0});
    const Histogram k = export_weight_distribution(known, 2, -1.0, 1.0);
    CHECK(k.counts[0] == 2);
    CHECK(k.counts[1] == 2);
}

TEST_CASE("distribution_distance basics and an analytic value") {
    Histogram a{2, 0.0, 1.0, {10, 0}, 0, 0};
    Histogram b{2, 0.0, 1.0, {10, 0}, 0, 0};
    CHECK(distribution_distance(a, b) == 0.0);

    // disjoint supports -> maximal distance 1
    Histogram c{2, 0.0, 1.0, {0, 4}, 0, 0};
    CHECK(distribution_distance(a, c) == doctest::Approx(1.0));

    // (1,0) vs (0.75,0.25): TV = 0.25
    Histogram d{2, 0.0, 1.0, {3, 1}, 0, 0};
    CHECK(distribution_distance(a, d) == doctest::Approx(0.25));

    // symmetry and the triangle inequality on a random triple
    Histogram e{2, 0.0, 1.0, {2, 5}, 1, 0};
    CHECK(distribution_distance(a, e) == doctest::Approx(distribution_distance(e, a)));
    CHECK(distribution_distance(a, d) <=
          distribution_distance(a, e) + distribution_distance(e, d) + 1e-15);

    Histogram wrong{3, 0.0, 1.0, {1, 1, 1}, 0, 0};
    CHECK_THROWS_AS(distribution_distance(a, wrong), shape_error);
    Histogram empty{2, 0.0, 1.0, {0, 0}, 0, 0};
    CHECK_THROWS_AS(distribution_distance(a, empty), domain_error);
}
