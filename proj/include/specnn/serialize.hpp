#ifndef SPECNN_SERIALIZE_HPP
#define SPECNN_SERIALIZE_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "specnn/baseline.hpp"
#include "specnn/compaction.hpp"
#include "specnn/errors.hpp"
#include "specnn/matrix.hpp"
#include "specnn/spectral.hpp"

namespace specnn {

using json = nlohmann::json;

inline std::string to_string(LossKind k) {
    return k == LossKind::CategoricalCrossEntropy ? "categorical_cross_entropy" : "squared_error";
}

inline LossKind loss_from_string(const std::string& s) {
    if (s == "categorical_cross_entropy") return LossKind::CategoricalCrossEntropy;
    if (s == "squared_error") return LossKind::SquaredError;
    throw format_error("unknown loss kind: " + s);
}

inline json to_json(const ActivationKind& a) {
    switch (a.kind) {
        case Activation::Identity:
            return {{"kind", "identity"}};
        case Activation::ReLU:
            return {{"kind", "relu"}};
        default:
            return {{"kind", "tanh_beta"}, {"beta", a.beta}, {"train_beta", a.train_beta}};
    }
}

inline ActivationKind activation_from_json(const json& j) {
    const std::string kind = j.at("kind");
    if (kind == "identity") return ActivationKind::identity();
    if (kind == "relu") return ActivationKind::relu();
    if (kind == "tanh_beta")
        return ActivationKind::tanh_beta(j.at("beta"), j.value("train_beta", false));
    throw format_error("unknown activation kind: " + kind);
}

inline json to_json(const SpectralLayer& l) {
    return {{"n_in", l.dims.n_in},
            {"n_out", l.dims.n_out},
            {"lambda_in", l.lambda_in},
            {"lambda_out", l.lambda_out},
            {"block_b", l.block_b.values()},
            {"train_lambda_in", l.train_lambda_in},
            {"train_lambda_out", l.train_lambda_out},
            {"train_block", l.train_block},
            {"raw", l.raw}};
}

inline SpectralLayer spectral_layer_from_json(const json& j) {
    SpectralLayer l;
    l.dims = {j.at("n_in").get<std::size_t>(), j.at("n_out").get<std::size_t>()};
    l.lambda_in = j.at("lambda_in").get<Vector>();
    l.lambda_out = j.at("lambda_out").get<Vector>();
    l.block_b = Matrix(l.dims.n_out, l.dims.n_in, j.at("block_b").get<std::vector<double>>());
    l.train_lambda_in = j.at("train_lambda_in");
    l.train_lambda_out = j.at("train_lambda_out");
    l.train_block = j.at("train_block");
    l.raw = j.value("raw", false);
    if (l.lambda_in.size() != l.dims.n_in || l.lambda_out.size() != l.dims.n_out)
        throw format_error("spectral layer: eigenvalue segment length mismatch");
    return l;
}

inline json to_json(const NetworkSpec& net, bool compacted = false) {
    json j;
    j["type"] = "spectral";
    j["loss"] = to_string(net.loss);
    j["compacted"] = compacted;
    j["activations"] = json::array();
    for (const auto& a : net.activations) j["activations"].push_back(to_json(a));
    j["layers"] = json::array();
    for (const auto& l : net.layers) j["layers"].push_back(to_json(l));
    return j;
}

inline NetworkSpec network_from_json(const json& j) {
    if (j.at("type") != "spectral") throw format_error("model JSON is not a spectral network");
    NetworkSpec net;
    net.loss = loss_from_string(j.at("loss"));
    for (const auto& a : j.at("activations")) net.activations.push_back(activation_from_json(a));
    for (const auto& l : j.at("layers")) net.layers.push_back(spectral_layer_from_json(l));
    net.validate();
    return net;
}

inline json to_json(const DenseNetwork& net) {
    json j;
    j["type"] = "dense";
    j["loss"] = to_string(net.loss);
    j["activations"] = json::array();
    for (const auto& a : net.activations) j["activations"].push_back(to_json(a));
    j["layers"] = json::array();
    for (const auto& l : net.layers) {
        json lj = {{"n_in", l.weights.cols()},
                   {"n_out", l.weights.rows()},
                   {"weights", l.weights.values()},
                   {"bias", l.bias},
                   {"train_bias", l.train_bias}};
        std::vector<int> mask(l.mask.begin(), l.mask.end());
        lj["mask"] = mask;
        j["layers"].push_back(lj);
    }
    return j;
}

inline DenseNetwork dense_from_json(const json& j) {
    if (j.at("type") != "dense") throw format_error("model JSON is not a dense network");
    DenseNetwork net;
    net.loss = loss_from_string(j.at("loss"));
    for (const auto& a : j.at("activations")) net.activations.push_back(activation_from_json(a));
    for (const auto& lj : j.at("layers")) {
        DenseLayer l;
        const auto n_in = lj.at("n_in").get<std::size_t>();
        const auto n_out = lj.at("n_out").get<std::size_t>();
        l.weights = Matrix(n_out, n_in, lj.at("weights").get<std::vector<double>>());
        l.bias = lj.at("bias").get<Vector>();
        const auto mask = lj.at("mask").get<std::vector<int>>();
        l.mask.assign(mask.begin(), mask.end());
        l.train_bias = lj.at("train_bias");
        if (l.bias.size() != n_out || l.mask.size() != l.weights.size())
            throw format_error("dense layer: shape mismatch");
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

inline void save_json(const json& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot write: " + path);
    os << j.dump(2) << "\n";
}

inline json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot read: " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw format_error("invalid JSON in " + path + ": " + e.what());
    }
}

inline void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot write: " + path);
    os << "epoch,train_loss,train_acc,test_acc\n";
    os.precision(17);
    for (const auto& m : metrics)
        os << m.epoch << "," << m.train_loss << "," << m.train_accuracy << ","
           << m.test_accuracy << "\n";
}

inline void write_histogram_csv(const std::string& path, const Histogram& h) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot write: " + path);
    os << "bin_lo,bin_hi,count,normalized_density\n";
    os.precision(17);
    const double width = (h.hi - h.lo) / static_cast<double>(h.bins);
    const double total = static_cast<double>(h.total());
    for (std::size_t i = 0; i < h.bins; ++i) {
        const double lo = h.lo + width * static_cast<double>(i);
        os << lo << "," << lo + width << "," << h.counts[i] << ","
           << (total > 0 ? static_cast<double>(h.counts[i]) / (total * width) : 0.0) << "\n";
    }
}

}  // namespace specnn

#endif
