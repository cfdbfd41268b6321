#ifndef SPECNN_EXPERIMENTS_HPP
#define SPECNN_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "specnn/baseline.hpp"
#include "specnn/compaction.hpp"
#include "specnn/data.hpp"
#include "specnn/errors.hpp"
#include "specnn/optim.hpp"
#include "specnn/spectral.hpp"

namespace specnn {

enum class Method {
    SpectralEigenvalues,   // train eigenvalue segments, eigenvectors frozen
    SpectralFull,          // eigenvalues + subdiagonal eigenvector blocks
    DenseFull,             // conventional training, all weights + biases
    DenseSubset,           // conventional training on a random weight subset
};

inline std::string to_string(Method m) {
    switch (m) {
        case Method::SpectralEigenvalues: return "spectral-eigenvalues";
        case Method::SpectralFull: return "spectral-full";
        case Method::DenseFull: return "dense-full";
        default: return "dense-subset";
    }
}

inline Method method_from_string(const std::string& s) {
    if (s == "spectral-eigenvalues") return Method::SpectralEigenvalues;
    if (s == "spectral-full") return Method::SpectralFull;
    if (s == "dense-full") return Method::DenseFull;
    if (s == "dense-subset") return Method::DenseSubset;
    throw domain_error("unknown method: " + s);
}

struct ExperimentConfig {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<ActivationKind> activations;  // one per junction
    Method method = Method::SpectralEigenvalues;
    // The two-layer perceptron experiment trains all N1+N2 eigenvalues of A_1;
    // the multi-layer experiments train only the output segments.
    bool train_first_lambda_in = false;
    std::size_t subset_count = 0;  // DenseSubset; 0 = match the spectral eigenvalue count
    TrainConfig train;
    std::size_t repetitions = 5;

    std::size_t eigenvalue_count() const {
        std::size_t n = train_first_lambda_in ? dims.front() : 0;
        for (std::size_t k = 1; k < dims.size(); ++k) n += dims[k];
        return n;
    }

    std::size_t effective_subset_count() const {
        return subset_count ? subset_count : eigenvalue_count();
    }
};

// One repetition's trained model; exactly one of the two members is set.
struct TrainedModel {
    std::optional<NetworkSpec> spectral;
    std::optional<DenseNetwork> dense;

    // Weights of the equivalent single-layer perceptron (linear nets only for
    // the dense variant; spectral nets are folded over Identity runs).
    Matrix equivalent_weights() const {
        if (spectral) return fold_linear_chain(spectral->layers).weights;
        Matrix w = dense->layers.front().weights;
        for (std::size_t k = 1; k < dense->layers.size(); ++k)
            w = matmul(dense->layers[k].weights, w);
        return w;
    }
};

struct ExperimentSummary {
    ExperimentConfig config;
    std::vector<double> final_test_accuracy;           // one per repetition
    std::vector<std::vector<EpochMetrics>> metrics;    // one series per repetition
    std::vector<TrainedModel> models;
    std::size_t trainable_count = 0;

    double mean_accuracy() const {
        double s = 0.0;
        for (double a : final_test_accuracy) s += a;
        return s / static_cast<double>(final_test_accuracy.size());
    }

    // Unbiased estimator over repetitions.
    double std_accuracy() const {
        if (final_test_accuracy.size() < 2) return 0.0;
        const double m = mean_accuracy();
        double s = 0.0;
        for (double a : final_test_accuracy) s += (a - m) * (a - m);
        return std::sqrt(s / static_cast<double>(final_test_accuracy.size() - 1));
    }
};

inline NetworkSpec build_spectral_net(const ExperimentConfig& cfg, std::uint64_t seed) {
    std::vector<LayerFlags> flags(cfg.dims.size() - 1);
    for (std::size_t k = 0; k < flags.size(); ++k) {
        flags[k].train_lambda_in = (k == 0 && cfg.train_first_lambda_in);
        flags[k].train_lambda_out = true;
        flags[k].train_block = (cfg.method == Method::SpectralFull);
    }
    return make_network(cfg.dims, cfg.activations, flags, seed, {}, cfg.train.loss);
}

inline DenseNetwork build_dense_net(const ExperimentConfig& cfg, std::uint64_t seed) {
    DenseNetwork net = init_dense_net(cfg.dims, cfg.activations, seed, cfg.train.loss);
    if (cfg.method == Method::DenseSubset)
        apply_random_mask(net, cfg.effective_subset_count(), seed);
    return net;
}

// Runs `repetitions` independently seeded trainings of the configured method.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const Dataset& train_ds,
                                        const Dataset& test_ds) {
    ExperimentSummary summary;
    summary.config = cfg;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        const std::uint64_t seed = derive_seed(cfg.train.seed, 5000 + rep);
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        TrainedModel model;
        std::vector<EpochMetrics> metrics;
        if (cfg.method == Method::SpectralEigenvalues || cfg.method == Method::SpectralFull) {
            model.spectral = build_spectral_net(cfg, seed);
            if (rep == 0)
                summary.trainable_count = collect_trainable(*model.spectral).size();
            metrics = train(*model.spectral, train_ds, tc, &test_ds);
        } else {
            model.dense = build_dense_net(cfg, seed);
            if (rep == 0)
                summary.trainable_count = dense_collect_trainable(*model.dense).size();
            metrics = train(*model.dense, train_ds, tc, &test_ds);
        }
        summary.final_test_accuracy.push_back(metrics.back().test_accuracy);
        summary.metrics.push_back(std::move(metrics));
        summary.models.push_back(std::move(model));
    }
    return summary;
}

// Symmetric histogram range covering the 0.1%..99.9% quantiles of the union of
// both weight sets; 101 bins by default.
inline std::pair<double, double> common_weight_range(const std::vector<double>& a,
                                                     const std::vector<double>& b) {
    std::vector<double> all;
    all.reserve(a.size() + b.size());
    all.insert(all.end(), a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    const auto q = [&](double p) {
        const auto i = static_cast<std::size_t>(p * static_cast<double>(all.size() - 1));
        return all[i];
    };
    const double r = std::max(std::fabs(q(0.001)), std::fabs(q(0.999)));
    return {-r, r};
}

constexpr std::size_t kDefaultHistBins = 101;

// ---- presets (the experiments of the source study) -------------------------

struct SweepPoint {
    std::string label;
    std::vector<ExperimentConfig> runs;  // one per method at this point
};

struct Preset {
    std::string name;
    std::vector<SweepPoint> points;
};

namespace detail {

inline ExperimentConfig base_config(std::string name, std::vector<std::size_t> dims,
                                    std::vector<ActivationKind> acts, Method m, double lr,
                                    std::size_t reps) {
    ExperimentConfig cfg;
    cfg.name = std::move(name);
    cfg.dims = std::move(dims);
    cfg.activations = std::move(acts);
    cfg.method = m;
    cfg.train.learning_rate = lr;
    cfg.repetitions = reps;
    return cfg;
}

inline std::vector<ActivationKind> linear_junctions(std::size_t n) {
    return std::vector<ActivationKind>(n, ActivationKind::identity());
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
    return {"perceptron-spectral-eigenvalues", "perceptron-spectral-full",
            "perceptron-dense-full", "perceptron-dense-subset",
            "fig5", "fig6", "fig7"};
}

// Single-run presets (two-layer perceptron family).
inline ExperimentConfig perceptron_preset(const std::string& name, std::size_t reps = 5) {
    using detail::base_config;
    const std::vector<std::size_t> dims{784, 10};
    auto acts = detail::linear_junctions(1);
    if (name == "perceptron-spectral-eigenvalues") {
        auto cfg = base_config(name, dims, acts, Method::SpectralEigenvalues, 0.03, reps);
        cfg.train_first_lambda_in = true;  // all N1+N2 eigenvalues of A_1
        return cfg;
    }
    if (name == "perceptron-spectral-full") {
        auto cfg = base_config(name, dims, acts, Method::SpectralFull, 0.03, reps);
        cfg.train_first_lambda_in = true;
        return cfg;
    }
    if (name == "perceptron-dense-full")
        return base_config(name, dims, acts, Method::DenseFull, 0.03, reps);
    if (name == "perceptron-dense-subset") {
        auto cfg = base_config(name, dims, acts, Method::DenseSubset, 0.03, reps);
        cfg.subset_count = 794;  // N1 + N2
        return cfg;
    }
    throw domain_error("unknown perceptron preset: " + name);
}

// Wide linear configuration: one interposed layer of growing width, spectral
// eigenvalue training (output segments only) vs direct-space subset/full.
inline Preset fig5_preset(std::size_t reps = 5,
                          std::vector<std::size_t> widths = {100, 500, 1000}) {
    using detail::base_config;
    Preset p{"fig5", {}};
    for (std::size_t n2 : widths) {
        SweepPoint pt;
        pt.label = "N2=" + std::to_string(n2);
        const std::vector<std::size_t> dims{784, n2, 10};
        auto acts = detail::linear_junctions(2);
        pt.runs.push_back(base_config("fig5-spectral-" + std::to_string(n2), dims, acts,
                                      Method::SpectralEigenvalues, 0.03, reps));
        pt.runs.push_back(base_config("fig5-dense-subset-" + std::to_string(n2), dims, acts,
                                      Method::DenseSubset, 0.03, reps));
        pt.runs.push_back(base_config("fig5-dense-full-" + std::to_string(n2), dims, acts,
                                      Method::DenseFull, 0.03, reps));
        p.points.push_back(std::move(pt));
    }
    return p;
}

// Deep linear configuration; the point list follows the study's text
// (three-layer widths 20..800, then N2=800 with N3 in 100..600, then the
// five-layer 800/600/500 endpoint).
inline Preset fig6_preset(std::size_t reps = 5) {
    using detail::base_config;
    Preset p{"fig6", {}};
    std::vector<std::vector<std::size_t>> dim_sets;
    for (std::size_t n2 : {20, 80, 100, 500, 800})
        dim_sets.push_back({784, n2, 10});
    for (std::size_t n3 : {100, 200, 400, 600})
        dim_sets.push_back({784, 800, n3, 10});
    dim_sets.push_back({784, 800, 600, 500, 10});
    for (const auto& dims : dim_sets) {
        SweepPoint pt;
        pt.label = "l=" + std::to_string(dims.size());
        for (std::size_t i = 1; i + 1 < dims.size(); ++i)
            pt.label += "-" + std::to_string(dims[i]);
        auto acts = detail::linear_junctions(dims.size() - 1);
        pt.runs.push_back(base_config("fig6-spectral-" + pt.label, dims, acts,
                                      Method::SpectralEigenvalues, 0.03, reps));
        pt.runs.push_back(base_config("fig6-dense-subset-" + pt.label, dims, acts,
                                      Method::DenseSubset, 0.03, reps));
        pt.runs.push_back(base_config("fig6-dense-full-" + pt.label, dims, acts,
                                      Method::DenseFull, 0.03, reps));
        p.points.push_back(std::move(pt));
    }
    return p;
}

// Non-linear four-layer network: linear junction, then ReLU, then readout.
// The non-linear regime trains with smaller batches and more epochs than the
// linear one; the eigenvalues+eigenvectors variant also trains the first
// layer's input eigenvalue segment (as in the perceptron ev+evec setting).
inline Preset fig7_preset(std::size_t reps = 5,
                          std::vector<std::size_t> widths = {100, 400, 800}) {
    using detail::base_config;
    Preset p{"fig7", {}};
    for (std::size_t n2 : widths) {
        SweepPoint pt;
        pt.label = "N2=" + std::to_string(n2);
        const std::vector<std::size_t> dims{784, n2, 120, 10};
        const std::vector<ActivationKind> acts{ActivationKind::identity(),
                                               ActivationKind::relu(),
                                               ActivationKind::identity()};
        pt.runs.push_back(base_config("fig7-spectral-" + std::to_string(n2), dims, acts,
                                      Method::SpectralEigenvalues, 0.01, reps));
        pt.runs.push_back(base_config("fig7-spectral-full-" + std::to_string(n2), dims, acts,
                                      Method::SpectralFull, 0.01, reps));
        pt.runs.back().train_first_lambda_in = true;
        pt.runs.push_back(base_config("fig7-dense-subset-" + std::to_string(n2), dims, acts,
                                      Method::DenseSubset, 0.01, reps));
        pt.runs.push_back(base_config("fig7-dense-full-" + std::to_string(n2), dims, acts,
                                      Method::DenseFull, 0.01, reps));
        for (auto& run : pt.runs) {
            run.train.batch_size = 300;
            run.train.epochs = 30;
        }
        p.points.push_back(std::move(pt));
    }
    return p;
}

inline Preset sweep_preset(const std::string& name, std::size_t reps = 5) {
    if (name == "fig5") return fig5_preset(reps);
    if (name == "fig6") return fig6_preset(reps);
    if (name == "fig7") return fig7_preset(reps);
    // single-config presets become one-point sweeps
    Preset p{name, {}};
    SweepPoint pt;
    pt.label = name;
    pt.runs.push_back(perceptron_preset(name, reps));
    p.points.push_back(std::move(pt));
    return p;
}

}  // namespace specnn

#endif
