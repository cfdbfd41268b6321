#ifndef SPECNN_BASELINE_HPP
#define SPECNN_BASELINE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "specnn/errors.hpp"
#include "specnn/matrix.hpp"
#include "specnn/optim.hpp"
#include "specnn/rng.hpp"
#include "specnn/spectral.hpp"

namespace specnn {

// Conventional direct-space layer: dense weights + bias, with a per-entry
// trainability mask for the random-subset experiments.
struct DenseLayer {
    Matrix weights;           // n_out x n_in
    Vector bias;              // n_out
    std::vector<char> mask;   // same shape as weights, 1 = trainable
    bool train_bias = true;
};

struct DenseNetwork {
    std::vector<DenseLayer> layers;
    std::vector<ActivationKind> activations;
    LossKind loss = LossKind::CategoricalCrossEntropy;

    std::size_t input_dim() const { return layers.front().weights.cols(); }

    void validate() const {
        if (layers.empty()) throw shape_error("DenseNetwork: no layers");
        if (activations.size() != layers.size())
            throw shape_error("DenseNetwork: activations count != layer count");
        for (std::size_t k = 0; k + 1 < layers.size(); ++k)
            if (layers[k].weights.rows() != layers[k + 1].weights.cols())
                throw shape_error("DenseNetwork: dim chain broken at junction " +
                                  std::to_string(k));
    }

    std::size_t weight_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size();
        return n;
    }
};

// Uniform [-0.5, 0.5] scaled by 1/sqrt(n_in); biases zero; all weights and
// biases trainable by default.
inline DenseNetwork init_dense_net(const std::vector<std::size_t>& dims,
                                   const std::vector<ActivationKind>& activations,
                                   std::uint64_t seed,
                                   LossKind loss = LossKind::CategoricalCrossEntropy) {
    if (dims.size() < 2) throw domain_error("init_dense_net: need at least 2 dims");
    for (auto d : dims)
        if (d < 1) throw domain_error("init_dense_net: dims must be >= 1");
    if (activations.size() != dims.size() - 1)
        throw shape_error("init_dense_net: activations must have dims-1 entries");
    DenseNetwork net;
    net.loss = loss;
    net.activations = activations;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        Rng rng(derive_seed(seed, k));
        DenseLayer layer;
        layer.weights = Matrix(dims[k + 1], dims[k]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[k]));
        for (double& v : layer.weights.values()) v = uniform(rng, -0.5, 0.5) * scale;
        layer.bias.assign(dims[k + 1], 0.0);
        layer.mask.assign(layer.weights.size(), 1);
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

// Marks exactly `trainable_count` weight entries trainable, drawn uniformly
// without replacement across all layers; everything else (biases included)
// is frozen.
inline void apply_random_mask(DenseNetwork& net, std::size_t trainable_count,
                              std::uint64_t seed) {
    const std::size_t total = net.weight_count();
    if (trainable_count > total)
        throw domain_error("apply_random_mask: count exceeds weight count");
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 77));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<char> flat(total, 0);
    for (std::size_t i = 0; i < trainable_count; ++i) flat[idx[i]] = 1;
    std::size_t off = 0;
    for (auto& layer : net.layers) {
        std::copy(flat.begin() + off, flat.begin() + off + layer.weights.size(),
                  layer.mask.begin());
        layer.train_bias = false;
        off += layer.weights.size();
    }
}

struct DenseGradients {
    std::vector<Matrix> d_weights;
    std::vector<Vector> d_bias;
};

namespace detail {

struct DenseTrace {
    std::vector<Matrix> pre;   // affine outputs
    std::vector<Matrix> post;  // after activation
};

inline DenseTrace dense_forward(const DenseNetwork& net, const Matrix& x) {
    net.validate();
    if (x.cols() != net.input_dim()) throw shape_error("dense_forward: feature dim mismatch");
    DenseTrace t;
    const Matrix* cur = &x;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        Matrix z = matmul_nt(*cur, net.layers[k].weights);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double* r = z.row(i);
            for (std::size_t j = 0; j < z.cols(); ++j) r[j] += net.layers[k].bias[j];
        }
        t.post.push_back(z);
        activate_rows(t.post.back(), net.activations[k]);
        t.pre.push_back(std::move(z));
        cur = &t.post.back();
    }
    return t;
}

}  // namespace detail

// Batch reverse pass; masked-out weight gradients are forced to zero before
// the optimizer sees them. Loss is the batch mean, as in the spectral path.
inline double dense_backward_batch(const DenseNetwork& net, const Matrix& x,
                                   std::span<const int> labels, DenseGradients& grads) {
    if (x.rows() != labels.size()) throw shape_error("dense_backward: labels/rows mismatch");
    detail::DenseTrace t = detail::dense_forward(net, x);
    Matrix probs = t.post.back();
    softmax_rows(probs);
    Matrix g;
    const double loss = detail::loss_and_logit_grad(probs, labels, net.loss, g);

    grads.d_weights.assign(net.layers.size(), Matrix());
    grads.d_bias.assign(net.layers.size(), Vector());
    for (std::size_t k = net.layers.size(); k-- > 0;) {
        const DenseLayer& layer = net.layers[k];
        const ActivationKind& act = net.activations[k];
        const Matrix& z = t.pre[k];
        if (act.kind == Activation::ReLU) {
            for (std::size_t i = 0; i < g.size(); ++i)
                if (z.values()[i] <= 0.0) g.values()[i] = 0.0;
        } else if (act.kind == Activation::TanhBeta) {
            const Matrix& tk = t.post[k];
            for (std::size_t i = 0; i < g.size(); ++i)
                g.values()[i] *= act.beta * (1.0 - tk.values()[i] * tk.values()[i]);
        }
        const Matrix& input = (k == 0) ? x : t.post[k - 1];
        Matrix dw = matmul_tn(g, input);
        for (std::size_t i = 0; i < dw.size(); ++i)
            if (!layer.mask[i]) dw.values()[i] = 0.0;
        grads.d_weights[k] = std::move(dw);
        Vector db(layer.bias.size(), 0.0);
        if (layer.train_bias)
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) db[j] += g(i, j);
        grads.d_bias[k] = std::move(db);
        if (k > 0) g = matmul(g, layer.weights);
    }
    return loss;
}

inline std::vector<double*> dense_collect_trainable(DenseNetwork& net) {
    std::vector<double*> out;
    for (auto& layer : net.layers) {
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            if (layer.mask[i]) out.push_back(&layer.weights.values()[i]);
        if (layer.train_bias)
            for (double& b : layer.bias) out.push_back(&b);
    }
    return out;
}

inline void dense_flatten_grads(const DenseNetwork& net, const DenseGradients& grads,
                                std::vector<double>& out) {
    out.clear();
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& layer = net.layers[k];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            if (layer.mask[i]) out.push_back(grads.d_weights[k].values()[i]);
        if (layer.train_bias)
            out.insert(out.end(), grads.d_bias[k].begin(), grads.d_bias[k].end());
    }
}

class DenseModel : public TrainableModel {
public:
    explicit DenseModel(DenseNetwork& net) : net_(&net) {}

    std::vector<double*> trainable_params() override { return dense_collect_trainable(*net_); }

    double batch_gradient(const Matrix& x, std::span<const int> labels,
                          std::vector<double>& grad) override {
        DenseGradients gs;
        const double loss = dense_backward_batch(*net_, x, labels, gs);
        dense_flatten_grads(*net_, gs, grad);
        return loss;
    }

    void predict_batch(const Matrix& x, std::vector<std::size_t>& out) const override {
        const auto t = detail::dense_forward(*net_, x);
        const Matrix& logits = t.post.back();
        out.resize(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = argmax_row(logits, i);
    }

private:
    DenseNetwork* net_;
};

inline std::vector<EpochMetrics> train(DenseNetwork& net, const Dataset& data,
                                       const TrainConfig& cfg, const Dataset* test = nullptr) {
    net.loss = cfg.loss;
    DenseModel model(net);
    return train_model(model, data, cfg, test);
}

// Central-difference check for the dense parameterization, mirroring
// finite_diff_check on the spectral side.
inline double dense_finite_diff_check(DenseNetwork& net, const Vector& x, std::size_t label,
                                      double eps = 1e-6) {
    Matrix xm(1, x.size(), x);
    const int lab = static_cast<int>(label);
    DenseGradients gs;
    dense_backward_batch(net, xm, std::span<const int>(&lab, 1), gs);
    std::vector<double> analytic;
    dense_flatten_grads(net, gs, analytic);
    std::vector<double*> params = dense_collect_trainable(net);

    auto eval = [&]() {
        const auto t = detail::dense_forward(net, xm);
        Vector logits(t.post.back().row(0), t.post.back().row(0) + t.post.back().cols());
        return loss_value(softmax(logits), label, net.loss);
    };

    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + eps;
        const double lp = eval();
        *params[i] = saved - eps;
        const double lm = eval();
        *params[i] = saved;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double denom =
            std::max({std::fabs(analytic[i]), std::fabs(numeric), kGradCheckFloor});
        max_rel = std::max(max_rel, std::fabs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace specnn

#endif
