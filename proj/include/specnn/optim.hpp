#ifndef SPECNN_OPTIM_HPP
#define SPECNN_OPTIM_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "specnn/data.hpp"
#include "specnn/errors.hpp"
#include "specnn/grad.hpp"
#include "specnn/spectral.hpp"

namespace specnn {

// AdaMax: first moment m and infinity-norm accumulator u per scalar.
//   m <- b1*m + (1-b1)*g;  u <- max(b2*u, |g|);  theta <- theta - a/(1-b1^t) * m/(u+eps)
struct AdaMaxState {
    std::size_t t = 0;
    std::vector<double> m, u;
    double alpha = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdaMaxState() = default;
    AdaMaxState(std::size_t n, double alpha_) : m(n, 0.0), u(n, 0.0), alpha(alpha_) {}
};

inline void adamax_step(std::span<double* const> params, std::span<const double> grads,
                        AdaMaxState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw shape_error("adamax_step: params/grads/state length mismatch");
    ++state.t;
    const double lr = state.alpha / (1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.u[i] = std::max(state.beta2 * state.u[i], std::fabs(g));
        *params[i] -= lr * state.m[i] / (state.u[i] + state.epsilon);
    }
}

struct TrainConfig {
    double learning_rate = 0.03;
    std::size_t epochs = 20;
    std::size_t batch_size = 600;
    std::vector<std::size_t> batch_schedule;  // optional per-epoch override
    std::uint64_t seed = 0;
    LossKind loss = LossKind::CategoricalCrossEntropy;
    // When false, accuracies are evaluated only after the final epoch (the
    // earlier epochs report NaN); saves one forward pass per epoch.
    bool eval_each_epoch = true;

    void validate() const {
        if (learning_rate <= 0.0) throw domain_error("TrainConfig: learning_rate must be > 0");
        if (epochs < 1) throw domain_error("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw domain_error("TrainConfig: batch_size must be >= 1");
    }
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;  // NaN when no test set attached
};

// Model interface for the shared training loop: trainable parameter pointers in
// a fixed order, a batch gradient in the same order, and batched inference.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;
    virtual std::vector<double*> trainable_params() = 0;
    // mean loss over the batch; grad resized/filled to match trainable_params
    virtual double batch_gradient(const Matrix& x, std::span<const int> labels,
                                  std::vector<double>& grad) = 0;
    virtual void predict_batch(const Matrix& x, std::vector<std::size_t>& out) const = 0;
};

inline double accuracy(const TrainableModel& model, const Dataset& ds,
                       std::size_t chunk = 2000) {
    std::size_t correct = 0;
    std::vector<std::size_t> pred;
    for (std::size_t s = 0; s < ds.size(); s += chunk) {
        const std::size_t n = std::min(chunk, ds.size() - s);
        Matrix x(n, ds.features.cols());
        std::copy(ds.features.row(s), ds.features.row(s) + n * ds.features.cols(), x.data());
        model.predict_batch(x, pred);
        for (std::size_t i = 0; i < n; ++i)
            if (pred[i] == static_cast<std::size_t>(ds.labels[s + i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// Shuffled mini-batch AdaMax over the trainable parameters only. Deterministic
// given the seed: shuffling draws from a derived stream, and the batch-level
// reductions have a fixed summation order.
inline std::vector<EpochMetrics> train_model(TrainableModel& model, const Dataset& data,
                                             const TrainConfig& cfg,
                                             const Dataset* test = nullptr) {
    cfg.validate();
    if (data.size() == 0) throw domain_error("train: empty dataset");
    std::vector<double*> params = model.trainable_params();
    AdaMaxState state(params.size(), cfg.learning_rate);
    std::vector<double> grad;
    std::vector<EpochMetrics> metrics;
    for (std::size_t ep = 0; ep < cfg.epochs; ++ep) {
        const std::size_t bs =
            ep < cfg.batch_schedule.size() ? cfg.batch_schedule[ep] : cfg.batch_size;
        BatchIter iter(data, bs, derive_seed(cfg.seed, 1000 + ep));
        Batch batch;
        double loss_sum = 0.0;
        std::size_t seen = 0;
        while (iter.next(batch)) {
            const double loss = model.batch_gradient(batch.features, batch.labels, grad);
            if (!params.empty()) adamax_step(params, grad, state);
            loss_sum += loss * static_cast<double>(batch.labels.size());
            seen += batch.labels.size();
        }
        EpochMetrics m;
        m.epoch = ep + 1;
        m.train_loss = loss_sum / static_cast<double>(seen);
        const bool eval = cfg.eval_each_epoch || ep + 1 == cfg.epochs;
        m.train_accuracy = eval ? accuracy(model, data) : std::nan("");
        m.test_accuracy = (eval && test) ? accuracy(model, *test) : std::nan("");
        metrics.push_back(m);
    }
    return metrics;
}

// Adapter exposing a spectral NetworkSpec to the training loop.
class SpectralModel : public TrainableModel {
public:
    explicit SpectralModel(NetworkSpec& net) : net_(&net) {}

    std::vector<double*> trainable_params() override { return collect_trainable(*net_); }

    double batch_gradient(const Matrix& x, std::span<const int> labels,
                          std::vector<double>& grad) override {
        GradientSet gs;
        const double loss = backward_batch(*net_, x, labels, gs);
        flatten_grads(*net_, gs, grad);
        return loss;
    }

    void predict_batch(const Matrix& x, std::vector<std::size_t>& out) const override {
        const auto trace = detail::batch_forward(*net_, x);
        const Matrix& logits = trace.post.back();
        out.resize(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = argmax_row(logits, i);
    }

private:
    NetworkSpec* net_;
};

inline std::vector<EpochMetrics> train(NetworkSpec& net, const Dataset& data,
                                       const TrainConfig& cfg, const Dataset* test = nullptr) {
    net.loss = cfg.loss;
    SpectralModel model(net);
    return train_model(model, data, cfg, test);
}

}  // namespace specnn

#endif
