#ifndef SPECNN_GRAD_HPP
#define SPECNN_GRAD_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "specnn/errors.hpp"
#include "specnn/matrix.hpp"
#include "specnn/spectral.hpp"

namespace specnn {

constexpr double kCceProbFloor = 1e-15;

inline double loss_value(const Vector& probs, std::size_t label, LossKind kind) {
    if (label >= probs.size()) throw domain_error("loss_value: label out of range");
    if (kind == LossKind::CategoricalCrossEntropy) {
        return -std::log(std::max(probs[label], kCceProbFloor));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double t = (i == label ? 1.0 : 0.0) - probs[i];
        s += t * t;
    }
    return s;
}

struct LayerGrads {
    Vector d_lambda_in;
    Vector d_lambda_out;
    Matrix d_block;
    double d_beta = 0.0;
};

// Gradients per layer, shapes mirroring the owning NetworkSpec. Entries for
// non-trainable parameters are identically zero.
struct GradientSet {
    std::vector<LayerGrads> layers;

    static GradientSet zeros_like(const NetworkSpec& net) {
        GradientSet g;
        for (const auto& l : net.layers)
            g.layers.push_back({Vector(l.dims.n_in, 0.0), Vector(l.dims.n_out, 0.0),
                                Matrix(l.dims.n_out, l.dims.n_in), 0.0});
        return g;
    }
};

namespace detail {

struct BatchTrace {
    std::vector<Matrix> pre;   // Z_k = A_k . W_k^T, per junction
    std::vector<Matrix> post;  // f(Z_k)
    Matrix probs;              // row-wise softmax of the final post
};

inline BatchTrace batch_forward(const NetworkSpec& net, const Matrix& x,
                                std::vector<Matrix>* weights_out = nullptr) {
    net.validate();
    if (x.cols() != net.input_dim()) throw shape_error("batch_forward: feature dim mismatch");
    BatchTrace t;
    const Matrix* cur = &x;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        Matrix w = effective_cross_weights(net.layers[k]);
        Matrix z = matmul_nt(*cur, w);
        if (weights_out) weights_out->push_back(std::move(w));
        t.post.push_back(z);  // copy before the filter
        activate_rows(t.post.back(), net.activations[k]);
        t.pre.push_back(std::move(z));
        cur = &t.post.back();
    }
    t.probs = t.post.back();
    softmax_rows(t.probs);
    return t;
}

// dL/dlogits summed into `g` for a batch, mean-reduced loss returned.
inline double loss_and_logit_grad(const Matrix& probs, std::span<const int> labels,
                                  LossKind kind, Matrix& g) {
    const auto batch = probs.rows();
    const double inv = 1.0 / static_cast<double>(batch);
    g = Matrix(probs.rows(), probs.cols());
    double loss = 0.0;
    for (std::size_t s = 0; s < batch; ++s) {
        const auto label = static_cast<std::size_t>(labels[s]);
        if (label >= probs.cols()) throw domain_error("loss: label out of range");
        const double* p = probs.row(s);
        double* gr = g.row(s);
        if (kind == LossKind::CategoricalCrossEntropy) {
            loss += -std::log(std::max(p[label], kCceProbFloor));
            for (std::size_t c = 0; c < probs.cols(); ++c)
                gr[c] = (p[c] - (c == label ? 1.0 : 0.0)) * inv;
        } else {
            // squared error through the softmax jacobian
            double dot = 0.0;
            for (std::size_t c = 0; c < probs.cols(); ++c) {
                const double t = (c == label ? 1.0 : 0.0) - p[c];
                loss += t * t;
                gr[c] = -2.0 * t;  // dL/dp for now
                dot += gr[c] * p[c];
            }
            for (std::size_t c = 0; c < probs.cols(); ++c)
                gr[c] = p[c] * (gr[c] - dot) * inv;
        }
    }
    return loss * inv;
}

}  // namespace detail

// Reverse-mode gradients over a batch; loss is the batch mean. Per-layer local
// rules with upstream gradient G over the layer's linear output and input A:
//   d_block[i][j]   = dW[i][j] * (lambda_in[j] - lambda_out[i])
//   d_lambda_in[j]  = sum_i B[i][j] * dW[i][j]
//   d_lambda_out[i] = -sum_j B[i][j] * dW[i][j]
// with dW = G^T.A, the gradient wrt the effective cross weights.
inline double backward_batch(const NetworkSpec& net, const Matrix& x,
                             std::span<const int> labels, GradientSet& grads) {
    if (x.rows() != labels.size()) throw shape_error("backward_batch: labels/rows mismatch");
    std::vector<Matrix> weights;
    detail::BatchTrace t = detail::batch_forward(net, x, &weights);
    grads = GradientSet::zeros_like(net);

    Matrix g;  // gradient wrt current layer's post-activation output
    const double loss = detail::loss_and_logit_grad(t.probs, labels, net.loss, g);

    for (std::size_t k = net.layers.size(); k-- > 0;) {
        const SpectralLayer& layer = net.layers[k];
        const ActivationKind& act = net.activations[k];
        const Matrix& z = t.pre[k];
        // through the activation filter: g becomes dL/dZ_k
        if (act.kind == Activation::ReLU) {
            for (std::size_t i = 0; i < g.size(); ++i)
                if (z.values()[i] <= 0.0) g.values()[i] = 0.0;
        } else if (act.kind == Activation::TanhBeta) {
            const Matrix& tk = t.post[k];
            double d_beta = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double sech2 = 1.0 - tk.values()[i] * tk.values()[i];
                d_beta += g.values()[i] * sech2 * z.values()[i];
                g.values()[i] *= act.beta * sech2;
            }
            if (act.train_beta) grads.layers[k].d_beta = d_beta;
        }

        const Matrix& input = (k == 0) ? x : t.post[k - 1];
        const bool needs_dw = layer.train_block || layer.train_lambda_in || layer.train_lambda_out;
        if (needs_dw) {
            Matrix dw = matmul_tn(g, input);
            LayerGrads& lg = grads.layers[k];
            if (layer.train_block)
                for (std::size_t i = 0; i < layer.dims.n_out; ++i)
                    for (std::size_t j = 0; j < layer.dims.n_in; ++j)
                        lg.d_block(i, j) =
                            dw(i, j) * (layer.lambda_in[j] - layer.lambda_out[i]);
            if (layer.train_lambda_in)
                for (std::size_t i = 0; i < layer.dims.n_out; ++i)
                    for (std::size_t j = 0; j < layer.dims.n_in; ++j)
                        lg.d_lambda_in[j] += layer.block_b(i, j) * dw(i, j);
            if (layer.train_lambda_out)
                for (std::size_t i = 0; i < layer.dims.n_out; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < layer.dims.n_in; ++j)
                        s += layer.block_b(i, j) * dw(i, j);
                    lg.d_lambda_out[i] = -s;
                }
        }
        if (k > 0) g = matmul(g, weights[k]);
    }
    return loss;
}

// Single-sample form of backward_batch (batch of one).
inline std::pair<double, GradientSet> backward(const NetworkSpec& net, const Vector& x,
                                               std::size_t label) {
    Matrix xm(1, x.size(), x);
    const int lab = static_cast<int>(label);
    GradientSet grads;
    const double loss = backward_batch(net, xm, std::span<const int>(&lab, 1), grads);
    return {loss, grads};
}

// Trainable scalars in a fixed order: per layer lambda_in, lambda_out, block
// (row-major), then per junction beta. flatten_grads matches this order.
inline std::vector<double*> collect_trainable(NetworkSpec& net) {
    std::vector<double*> out;
    for (auto& layer : net.layers) {
        if (layer.train_lambda_in)
            for (double& v : layer.lambda_in) out.push_back(&v);
        if (layer.train_lambda_out)
            for (double& v : layer.lambda_out) out.push_back(&v);
        if (layer.train_block)
            for (double& v : layer.block_b.values()) out.push_back(&v);
    }
    for (auto& act : net.activations)
        if (act.kind == Activation::TanhBeta && act.train_beta) out.push_back(&act.beta);
    return out;
}

inline void flatten_grads(const NetworkSpec& net, const GradientSet& grads,
                          std::vector<double>& out) {
    out.clear();
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& layer = net.layers[k];
        const auto& lg = grads.layers[k];
        if (layer.train_lambda_in)
            out.insert(out.end(), lg.d_lambda_in.begin(), lg.d_lambda_in.end());
        if (layer.train_lambda_out)
            out.insert(out.end(), lg.d_lambda_out.begin(), lg.d_lambda_out.end());
        if (layer.train_block)
            out.insert(out.end(), lg.d_block.values().begin(), lg.d_block.values().end());
    }
    for (std::size_t k = 0; k < net.activations.size(); ++k)
        if (net.activations[k].kind == Activation::TanhBeta && net.activations[k].train_beta)
            out.push_back(grads.layers[k].d_beta);
}

// Denominator floor for relative gradient comparisons. Central differences at
// eps = 1e-6 carry ~1e-10 absolute roundoff (machine epsilon times the loss,
// divided by 2*eps), so gradients far below the floor are compared in the
// absolute sense instead of drowning in that noise.
constexpr double kGradCheckFloor = 1e-3;

// Central-difference check of every trainable scalar; returns the max over
// parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double finite_diff_check(NetworkSpec& net, const Vector& x, std::size_t label,
                                double eps = 1e-6) {
    auto [loss, grads] = backward(net, x, label);
    (void)loss;
    std::vector<double> analytic;
    flatten_grads(net, grads, analytic);
    std::vector<double*> params = collect_trainable(net);

    auto eval = [&]() {
        const ForwardTrace t = forward_network(net, x);
        return loss_value(t.probs, label, net.loss);
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
