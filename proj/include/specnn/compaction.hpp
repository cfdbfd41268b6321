#ifndef SPECNN_COMPACTION_HPP
#define SPECNN_COMPACTION_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "specnn/errors.hpp"
#include "specnn/matrix.hpp"
#include "specnn/spectral.hpp"

namespace specnn {

// Result of folding a chain of linear spectral layers: the bare cross-block of
// the equivalent single-layer perceptron, plus which layers went into it.
struct CompactMap {
    Matrix weights;  // N_out x N_in of the folded run
    std::vector<std::size_t> provenance;
};

// weights = W_{l-1} ... W_1 with W_k the effective cross weights of layer k.
inline CompactMap fold_linear_chain(std::span<const SpectralLayer> layers) {
    if (layers.empty()) throw shape_error("fold_linear_chain: no layers");
    for (std::size_t k = 0; k + 1 < layers.size(); ++k)
        if (layers[k].dims.n_out != layers[k + 1].dims.n_in)
            throw shape_error("fold_linear_chain: dim chain broken at " + std::to_string(k));
    CompactMap map;
    map.weights = effective_cross_weights(layers[0]);
    map.provenance.push_back(0);
    for (std::size_t k = 1; k < layers.size(); ++k) {
        map.weights = matmul(effective_cross_weights(layers[k]), map.weights);
        map.provenance.push_back(k);
    }
    return map;
}

inline CompactMap fold_linear_chain(const std::vector<SpectralLayer>& layers) {
    return fold_linear_chain(std::span<const SpectralLayer>(layers));
}

// Wraps a folded map as a raw-weight layer (lambda_in = 1, lambda_out = 0,
// so effective_cross_weights returns the stored matrix unchanged).
inline SpectralLayer raw_layer(Matrix weights) {
    SpectralLayer layer;
    layer.dims = {weights.cols(), weights.rows()};
    layer.lambda_in.assign(layer.dims.n_in, 1.0);
    layer.lambda_out.assign(layer.dims.n_out, 0.0);
    layer.block_b = std::move(weights);
    layer.train_lambda_in = layer.train_lambda_out = layer.train_block = false;
    layer.raw = true;
    return layer;
}

// Replaces every maximal run of consecutive layers whose junction activations
// are Identity with one equivalent raw-weight layer. Non-Identity junctions
// are preserved, so the network function is unchanged on all inputs.
inline NetworkSpec retract_linear_runs(const NetworkSpec& net) {
    net.validate();
    NetworkSpec out;
    out.loss = net.loss;
    std::size_t k = 0;
    while (k < net.layers.size()) {
        std::size_t end = k;  // last layer of the maximal Identity-junction run
        while (end + 1 < net.layers.size() &&
               net.activations[end].kind == Activation::Identity)
            ++end;
        if (end > k) {
            std::span<const SpectralLayer> run(net.layers.data() + k, end - k + 1);
            out.layers.push_back(raw_layer(fold_linear_chain(run).weights));
            out.activations.push_back(net.activations[end]);
        } else {
            out.layers.push_back(net.layers[k]);
            out.activations.push_back(net.activations[k]);
        }
        k = end + 1;
    }
    out.validate();
    return out;
}

inline Histogram export_weight_distribution(const CompactMap& map, std::size_t bins,
                                            double lo, double hi) {
    return histogram(map.weights.values(), bins, lo, hi);
}

// Total-variation distance between the two normalized histograms, in [0,1].
// Under/overflow counters participate as two extra bins.
inline double distribution_distance(const Histogram& a, const Histogram& b) {
    if (a.bins != b.bins || a.lo != b.lo || a.hi != b.hi)
        throw shape_error("distribution_distance: binning mismatch");
    const double na = static_cast<double>(a.total());
    const double nb = static_cast<double>(b.total());
    if (na == 0.0 || nb == 0.0) throw domain_error("distribution_distance: empty histogram");
    double tv = std::fabs(double(a.underflow) / na - double(b.underflow) / nb) +
                std::fabs(double(a.overflow) / na - double(b.overflow) / nb);
    for (std::size_t i = 0; i < a.bins; ++i)
        tv += std::fabs(double(a.counts[i]) / na - double(b.counts[i]) / nb);
    return 0.5 * tv;
}

}  // namespace specnn

#endif
