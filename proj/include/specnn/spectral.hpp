#ifndef SPECNN_SPECTRAL_HPP
#define SPECNN_SPECTRAL_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "specnn/errors.hpp"
#include "specnn/matrix.hpp"
#include "specnn/rng.hpp"

namespace specnn {

struct LayerDims {
    std::size_t n_in = 0;
    std::size_t n_out = 0;
};

// A layer parameterized in the spectral domain: an indented eigenvector basis
// (identity plus the subdiagonal block `block_b`) and the eigenvalue segments
// for the input and output node groups. The layer's action on an input vector
// is the cross-block of Phi.Lambda.(2I - Phi).
//
// A layer produced by compaction carries the folded weights directly in
// block_b with lambda_in = 1, lambda_out = 0 (so the same closed form applies)
// and `raw` set as a marker.
struct SpectralLayer {
    LayerDims dims;
    Matrix block_b;        // n_out x n_in
    Vector lambda_in;      // n_in
    Vector lambda_out;     // n_out
    bool train_lambda_in = false;
    bool train_lambda_out = true;
    bool train_block = false;
    bool raw = false;
};

enum class Activation { Identity, ReLU, TanhBeta };

struct ActivationKind {
    Activation kind = Activation::Identity;
    double beta = 1.0;        // TanhBeta only
    bool train_beta = false;  // TanhBeta only

    static ActivationKind identity() { return {}; }
    static ActivationKind relu() { return {Activation::ReLU}; }
    static ActivationKind tanh_beta(double beta, bool train = false) {
        return {Activation::TanhBeta, beta, train};
    }
};

enum class LossKind { CategoricalCrossEntropy, SquaredError };

struct NetworkSpec {
    std::vector<SpectralLayer> layers;
    std::vector<ActivationKind> activations;  // one per layer junction
    LossKind loss = LossKind::CategoricalCrossEntropy;

    std::size_t input_dim() const { return layers.front().dims.n_in; }
    std::size_t output_dim() const { return layers.back().dims.n_out; }

    void validate() const {
        if (layers.empty()) throw shape_error("NetworkSpec: no layers");
        if (activations.size() != layers.size())
            throw shape_error("NetworkSpec: activations count != layer count");
        for (std::size_t k = 0; k + 1 < layers.size(); ++k)
            if (layers[k].dims.n_out != layers[k + 1].dims.n_in)
                throw shape_error("NetworkSpec: dim chain broken at junction " +
                                  std::to_string(k));
    }
};

struct InitRanges {
    double eigvec_lo = -0.5, eigvec_hi = 0.5;    // subdiagonal block entries
    double eigval_lo = -0.01, eigval_hi = 0.01;  // trainable eigenvalue segments
};

struct LayerFlags {
    bool train_lambda_in = false;
    bool train_lambda_out = true;
    bool train_block = false;
};

// Random layer: block entries i.i.d. uniform in the eigenvector range,
// trainable eigenvalue segments uniform in the eigenvalue range. Non-trainable
// lambda_in is pinned to all-ones (pass-through spectrum); non-trainable
// lambda_out still gets a random draw, it is simply frozen.
inline SpectralLayer init_layer(LayerDims dims, std::uint64_t seed, const InitRanges& r,
                                LayerFlags flags) {
    if (dims.n_in < 1 || dims.n_out < 1) throw domain_error("init_layer: dims must be >= 1");
    if (!(r.eigvec_lo < r.eigvec_hi) || !(r.eigval_lo < r.eigval_hi))
        throw domain_error("init_layer: invalid init range");
    Rng rng(seed);
    SpectralLayer layer;
    layer.dims = dims;
    layer.block_b = Matrix(dims.n_out, dims.n_in);
    for (double& v : layer.block_b.values()) v = uniform(rng, r.eigvec_lo, r.eigvec_hi);
    layer.train_lambda_in = flags.train_lambda_in;
    layer.train_lambda_out = flags.train_lambda_out;
    layer.train_block = flags.train_block;
    layer.lambda_in.assign(dims.n_in, 1.0);
    if (flags.train_lambda_in)
        for (double& v : layer.lambda_in) v = uniform(rng, r.eigval_lo, r.eigval_hi);
    layer.lambda_out.resize(dims.n_out);
    for (double& v : layer.lambda_out) v = uniform(rng, r.eigval_lo, r.eigval_hi);
    return layer;
}

// Phi = identity of side (n_in + n_out) with block_b in the lower-left corner.
inline Matrix build_phi(const SpectralLayer& layer) {
    const std::size_t n = layer.dims.n_in + layer.dims.n_out;
    Matrix phi = Matrix::identity(n);
    for (std::size_t i = 0; i < layer.dims.n_out; ++i)
        for (std::size_t j = 0; j < layer.dims.n_in; ++j)
            phi(layer.dims.n_in + i, j) = layer.block_b(i, j);
    return phi;
}

// Dense transfer matrix A = Phi.Lambda.(2I - Phi). Reference realization; the
// production forward path uses effective_cross_weights instead.
inline Matrix build_transfer(const SpectralLayer& layer) {
    const std::size_t n = layer.dims.n_in + layer.dims.n_out;
    const Matrix phi = build_phi(layer);
    Matrix lambda(n, n);
    for (std::size_t j = 0; j < layer.dims.n_in; ++j) lambda(j, j) = layer.lambda_in[j];
    for (std::size_t i = 0; i < layer.dims.n_out; ++i)
        lambda(layer.dims.n_in + i, layer.dims.n_in + i) = layer.lambda_out[i];
    Matrix inv = Matrix::identity(n);  // 2I - Phi
    for (std::size_t i = 0; i < layer.dims.n_out; ++i)
        for (std::size_t j = 0; j < layer.dims.n_in; ++j)
            inv(layer.dims.n_in + i, j) = -layer.block_b(i, j);
    return matmul(phi, matmul(lambda, inv));
}

// Closed form of the transfer matrix's cross-block:
//   W[i][j] = B[i][j] * (lambda_in[j] - lambda_out[i])
// For raw layers (lambda_in = 1, lambda_out = 0) this reduces to block_b.
inline Matrix effective_cross_weights(const SpectralLayer& layer) {
    Matrix w(layer.dims.n_out, layer.dims.n_in);
    for (std::size_t i = 0; i < layer.dims.n_out; ++i)
        for (std::size_t j = 0; j < layer.dims.n_in; ++j)
            w(i, j) = layer.block_b(i, j) * (layer.lambda_in[j] - layer.lambda_out[i]);
    return w;
}

inline Vector forward_layer(const SpectralLayer& layer, const Vector& x) {
    if (x.size() != layer.dims.n_in) throw shape_error("forward_layer: input length mismatch");
    return matvec(effective_cross_weights(layer), x);
}

inline Vector activate(const Vector& v, const ActivationKind& act) {
    Vector out(v.size());
    switch (act.kind) {
        case Activation::Identity:
            out = v;
            break;
        case Activation::ReLU:
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
            break;
        case Activation::TanhBeta:
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(act.beta * v[i]);
            break;
    }
    return out;
}

inline void activate_rows(Matrix& m, const ActivationKind& act) {
    switch (act.kind) {
        case Activation::Identity:
            break;
        case Activation::ReLU:
            for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::TanhBeta:
            for (double& v : m.values()) v = std::tanh(act.beta * v);
            break;
    }
}

struct ForwardTrace {
    std::vector<Vector> post_activation;  // per junction, after the filter
    Vector probs;                         // softmax of the final vector
};

// Chain of forward_layer + activate per junction, softmax at the end. The
// intermediate vectors are returned for use by the backward pass.
inline ForwardTrace forward_network(const NetworkSpec& net, const Vector& x) {
    net.validate();
    if (x.size() != net.input_dim()) throw shape_error("forward_network: input length mismatch");
    ForwardTrace trace;
    Vector cur = x;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        if (cur.size() != net.layers[k].dims.n_in)
            throw shape_error("forward_network: shape mismatch at junction " + std::to_string(k));
        cur = activate(forward_layer(net.layers[k], cur), net.activations[k]);
        trace.post_activation.push_back(cur);
    }
    trace.probs = softmax(cur);
    return trace;
}

inline std::size_t predict(const NetworkSpec& net, const Vector& x) {
    return argmax(forward_network(net, x).probs);
}

// Convenience builder: a chain of layers with shared init ranges. Flags are
// given per layer.
inline NetworkSpec make_network(const std::vector<std::size_t>& dims,
                                const std::vector<ActivationKind>& activations,
                                const std::vector<LayerFlags>& flags, std::uint64_t seed,
                                const InitRanges& ranges = {},
                                LossKind loss = LossKind::CategoricalCrossEntropy) {
    if (dims.size() < 2) throw domain_error("make_network: need at least 2 dims");
    if (activations.size() != dims.size() - 1 || flags.size() != dims.size() - 1)
        throw shape_error("make_network: activations/flags must have dims-1 entries");
    NetworkSpec net;
    net.loss = loss;
    net.activations = activations;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k)
        net.layers.push_back(init_layer({dims[k], dims[k + 1]}, derive_seed(seed, k),
                                        ranges, flags[k]));
    net.validate();
    return net;
}

}  // namespace specnn

#endif
