// Experiment runner: training, sweeps, compaction, gradient checks and data
// fetching for the spectral-domain networks in include/specnn.
#include <CLI11.hpp>
#include <httplib.h>
#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "specnn/experiments.hpp"
#include "specnn/grad.hpp"
#include "specnn/serialize.hpp"

extern "C" void openblas_set_num_threads(int);

namespace fs = std::filesystem;
using namespace specnn;

namespace {

// Exit codes: 0 success, 1 validation/acceptance failure, 2 I/O, 3 config.
constexpr int kExitCheckFailed = 1;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;

std::string default_data_dir() {
    if (const char* env = std::getenv("SPECNN_MNIST_DIR")) return env;
    return "data/mnist";
}

// ---- config schema ----------------------------------------------------------

void reject_unknown_fields(const json& j, const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw format_error("unknown config field: \"" + key + "\"");
    }
}

ExperimentConfig config_from_json(const json& j) {
    reject_unknown_fields(j, {"name", "dims", "activations", "method",
                              "train_first_lambda_in", "subset_count", "learning_rate",
                              "epochs", "batch_size", "batch_schedule", "loss", "seed",
                              "repetitions"});
    ExperimentConfig cfg;
    cfg.name = j.value("name", "custom");
    cfg.dims = j.at("dims").get<std::vector<std::size_t>>();
    if (j.contains("activations")) {
        for (const auto& a : j.at("activations"))
            cfg.activations.push_back(activation_from_json(a));
    } else {
        cfg.activations.assign(cfg.dims.size() - 1, ActivationKind::identity());
    }
    cfg.method = method_from_string(j.value("method", "spectral-eigenvalues"));
    cfg.train_first_lambda_in = j.value("train_first_lambda_in", false);
    cfg.subset_count = j.value("subset_count", std::size_t{0});
    cfg.train.learning_rate = j.value("learning_rate", cfg.train.learning_rate);
    cfg.train.epochs = j.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = j.value("batch_size", cfg.train.batch_size);
    if (j.contains("batch_schedule"))
        cfg.train.batch_schedule = j.at("batch_schedule").get<std::vector<std::size_t>>();
    if (j.contains("loss")) cfg.train.loss = loss_from_string(j.at("loss"));
    cfg.train.seed = j.value("seed", cfg.train.seed);
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    if (cfg.repetitions < 1) throw format_error("config field \"repetitions\" must be >= 1");
    if (cfg.dims.size() < 2) throw format_error("config field \"dims\" needs >= 2 entries");
    if (cfg.activations.size() != cfg.dims.size() - 1)
        throw format_error("config field \"activations\" must have dims-1 entries");
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["dims"] = cfg.dims;
    j["activations"] = json::array();
    for (const auto& a : cfg.activations) j["activations"].push_back(to_json(a));
    j["method"] = to_string(cfg.method);
    j["train_first_lambda_in"] = cfg.train_first_lambda_in;
    j["subset_count"] = cfg.subset_count;
    j["learning_rate"] = cfg.train.learning_rate;
    j["epochs"] = cfg.train.epochs;
    j["batch_size"] = cfg.train.batch_size;
    if (!cfg.train.batch_schedule.empty()) j["batch_schedule"] = cfg.train.batch_schedule;
    j["loss"] = to_string(cfg.train.loss);
    j["seed"] = cfg.train.seed;
    j["repetitions"] = cfg.repetitions;
    return j;
}

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir = "out";
    std::string data_dir = default_data_dir();
    std::int64_t seed = -1;   // -1 = keep the config's seed
    std::int64_t reps = -1;   // -1 = keep the config's repetitions
};

ExperimentConfig resolve_config(const CommonOpts& opt) {
    if (opt.config_path.empty() == opt.preset.empty())
        throw format_error("exactly one of --config or --preset is required");
    ExperimentConfig cfg = opt.config_path.empty()
                               ? perceptron_preset(opt.preset)
                               : config_from_json(load_json(opt.config_path));
    if (opt.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.reps >= 0) cfg.repetitions = static_cast<std::size_t>(opt.reps);
    return cfg;
}

std::pair<Dataset, Dataset> load_mnist(const std::string& dir) {
    const MnistPaths paths = find_mnist(dir);
    return {load_dataset(paths.train_images, paths.train_labels, DatasetKind::Train),
            load_dataset(paths.test_images, paths.test_labels, DatasetKind::Test)};
}

json summary_to_json(const ExperimentSummary& s) {
    json j;
    j["name"] = s.config.name;
    j["method"] = to_string(s.config.method);
    j["trainable_parameters"] = s.trainable_count;
    j["repetitions"] = s.final_test_accuracy.size();
    j["test_accuracy_per_rep"] = s.final_test_accuracy;
    j["mean_test_accuracy"] = s.mean_accuracy();
    j["std_test_accuracy"] = s.std_accuracy();
    return j;
}

// ---- commands ---------------------------------------------------------------

int cmd_train(const CommonOpts& opt) {
    const ExperimentConfig cfg = resolve_config(opt);
    auto [train_ds, test_ds] = load_mnist(opt.data_dir);
    fs::create_directories(opt.out_dir);
    save_json(config_to_json(cfg), opt.out_dir + "/config.json");

    std::cout << cfg.name << ": " << to_string(cfg.method) << ", " << cfg.repetitions
              << " repetition(s)\n";
    const ExperimentSummary summary = run_experiment(cfg, train_ds, test_ds);
    std::cout << "trainable parameters: " << summary.trainable_count << "\n";

    for (std::size_t rep = 0; rep < summary.metrics.size(); ++rep)
        write_metrics_csv(opt.out_dir + "/metrics_rep" + std::to_string(rep) + ".csv",
                          summary.metrics[rep]);
    const TrainedModel& first = summary.models.front();
    save_json(first.spectral ? to_json(*first.spectral) : to_json(*first.dense),
              opt.out_dir + "/model.json");
    save_json(summary_to_json(summary), opt.out_dir + "/summary.json");

    std::cout << "mean test accuracy: " << 100.0 * summary.mean_accuracy() << "% +- "
              << 100.0 * summary.std_accuracy() << "%\n"
              << "artifacts in " << opt.out_dir << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opt) {
    if (opt.preset.empty()) throw format_error("sweep requires --preset");
    const std::size_t reps = opt.reps >= 0 ? static_cast<std::size_t>(opt.reps) : 5;
    Preset preset = sweep_preset(opt.preset, reps);
    if (opt.seed >= 0)
        for (auto& pt : preset.points)
            for (auto& run : pt.runs) run.train.seed = static_cast<std::uint64_t>(opt.seed);

    auto [train_ds, test_ds] = load_mnist(opt.data_dir);
    fs::create_directories(opt.out_dir);
    const std::string table_path = opt.out_dir + "/" + preset.name + ".csv";
    std::ofstream table(table_path);
    if (!table) throw io_error("cannot write: " + table_path);
    table << "point,method,trainable_params,mean_test_accuracy,std_test_accuracy,reps\n";
    table.precision(10);

    for (const auto& pt : preset.points) {
        for (const auto& run : pt.runs) {
            std::cout << pt.label << " / " << to_string(run.method) << "..." << std::flush;
            const ExperimentSummary s = run_experiment(run, train_ds, test_ds);
            std::cout << " " << 100.0 * s.mean_accuracy() << "% ("
                      << s.trainable_count << " params)\n";
            table << pt.label << "," << to_string(run.method) << "," << s.trainable_count
                  << "," << s.mean_accuracy() << "," << s.std_accuracy() << ","
                  << s.final_test_accuracy.size() << "\n";
        }
    }
    std::cout << "table written to " << table_path << "\n";
    return 0;
}

int cmd_compact(const std::string& model_path, const std::string& out_dir,
                std::size_t bins) {
    const NetworkSpec net = network_from_json(load_json(model_path));
    const NetworkSpec compacted = retract_linear_runs(net);
    fs::create_directories(out_dir);
    save_json(to_json(compacted, /*compacted=*/true), out_dir + "/compacted.json");

    // weight histogram of the fully folded (Identity-junction) equivalent map,
    // range from the symmetric 0.1%..99.9% quantile envelope
    const CompactMap map = fold_linear_chain(net.layers);
    const auto [lo, hi] = common_weight_range(map.weights.values(), map.weights.values());
    const Histogram h = export_weight_distribution(map, bins, lo, hi);
    write_histogram_csv(out_dir + "/hist.csv", h);

    std::cout << net.layers.size() << " layer(s) -> " << compacted.layers.size()
              << " layer(s); artifacts in " << out_dir << "\n";
    return 0;
}

int cmd_hist(const std::string& model_path, const std::string& out_path, std::size_t bins,
             double lo, double hi) {
    const json j = load_json(model_path);
    TrainedModel model;
    if (j.at("type") == "spectral")
        model.spectral = network_from_json(j);
    else
        model.dense = dense_from_json(j);
    const Matrix w = model.equivalent_weights();
    if (!(lo < hi)) {
        const auto r = common_weight_range(w.values(), w.values());
        lo = r.first;
        hi = r.second;
    }
    write_histogram_csv(out_path, histogram(w.values(), bins, lo, hi));
    std::cout << "histogram (" << bins << " bins over [" << lo << ", " << hi << "]) -> "
              << out_path << "\n";
    return 0;
}

// Central-difference check over every trainable scalar, with an optional
// corruption hook (negative control for the exit status).
int cmd_gradcheck(const CommonOpts& opt, bool corrupt) {
    const ExperimentConfig cfg = resolve_config(opt);
    const std::size_t n_in = cfg.dims.front();
    double max_err = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        Rng rng(derive_seed(cfg.train.seed, 9000 + s));
        Vector x(n_in);
        for (double& v : x) v = uniform(rng, 0.0, 1.0);
        const std::size_t label = s % cfg.dims.back();
        double err;
        if (cfg.method == Method::DenseFull || cfg.method == Method::DenseSubset) {
            DenseNetwork net = build_dense_net(cfg, derive_seed(cfg.train.seed, s));
            err = dense_finite_diff_check(net, x, label);
        } else {
            NetworkSpec net = build_spectral_net(cfg, derive_seed(cfg.train.seed, s));
            err = finite_diff_check(net, x, label);
        }
        max_err = std::max(max_err, err);
    }
    if (corrupt) max_err += 1e-3;  // simulate a broken analytic gradient
    std::cout << "max relative error over 5 nets/samples: " << max_err << "\n";
    if (max_err >= 1e-5) {
        std::cout << "FAIL (threshold 1e-5)\n";
        return kExitCheckFailed;
    }
    std::cout << "PASS (threshold 1e-5)\n";
    return 0;
}

// ---- fetch-mnist ------------------------------------------------------------

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        static const char* d = "0123456789abcdef";
        hex += d[digest[i] >> 4];
        hex += d[digest[i] & 0xf];
    }
    return hex;
}

struct MnistFile {
    const char* name;
    const char* sha256;
};

// Canonical gzip archives and their SHA-256 checksums.
constexpr MnistFile kMnistFiles[] = {
    {"train-images-idx3-ubyte.gz",
     "440fcabf73cc546fa21475e81ea370265605f56be210a4024d2ca8f203523609"},
    {"train-labels-idx1-ubyte.gz",
     "3552534a0a558bbed6aed32b30c495cca23d567ec52cac8be1a0730e8010255c"},
    {"t10k-images-idx3-ubyte.gz",
     "8d422c7b0a1c1c79245a5bcf07fe86e33eeafee792b84584aec276f5a2dbc4e6"},
    {"t10k-labels-idx1-ubyte.gz",
     "f7ae60f92e00ec6debd23a6088c31dbd2371eca3ffa0defaefb259924204aec6"},
};

int cmd_fetch_mnist(const std::string& out_dir, std::string base_url) {
    if (const char* env = std::getenv("SPECNN_MNIST_URL")) base_url = env;
    // split scheme://host from the path prefix
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw format_error("bad url: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    const std::string origin = base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "/" : base_url.substr(path_start);
    if (prefix.back() != '/') prefix += '/';

    fs::create_directories(out_dir);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_read_timeout(120, 0);

    std::ofstream sums(out_dir + "/SHA256SUMS");
    for (const MnistFile& f : kMnistFiles) {
        std::cout << "fetching " << f.name << "... " << std::flush;
        auto res = client.Get(prefix + f.name);
        if (!res || res->status != 200)
            throw io_error("download failed for " + std::string(f.name) +
                           (res ? " (HTTP " + std::to_string(res->status) + ")"
                                : " (no response)"));
        const std::string digest = sha256_hex(res->body);
        if (digest != f.sha256)
            throw format_error("checksum mismatch for " + std::string(f.name) + ": got " +
                               digest);
        std::ofstream os(out_dir + "/" + f.name, std::ios::binary);
        if (!os) throw io_error("cannot write: " + out_dir + "/" + f.name);
        os.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
        sums << digest << "  " << f.name << "\n";
        std::cout << res->body.size() << " bytes, sha256 ok\n";
    }
    std::cout << "dataset in " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral-domain network experiment runner"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "BLAS thread count (1 = deterministic)")
        ->check(CLI::PositiveNumber);

    CommonOpts opt;
    auto add_common = [&](CLI::App* cmd, bool with_data = true) {
        cmd->add_option("--config", opt.config_path, "experiment config JSON");
        cmd->add_option("--preset", opt.preset, "named preset");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--seed", opt.seed, "override the base seed");
        cmd->add_option("--reps", opt.reps, "override the repetition count");
        if (with_data) cmd->add_option("--data", opt.data_dir, "MNIST directory");
    };

    auto* train = app.add_subcommand("train", "train one configuration, write artifacts");
    add_common(train);

    auto* sweep = app.add_subcommand("sweep", "run a preset point list, write a table CSV");
    add_common(sweep);

    auto* compact = app.add_subcommand("compact", "fold linear runs of a saved model");
    std::string model_path;
    std::size_t bins = kDefaultHistBins;
    compact->add_option("--model", model_path, "model JSON")->required();
    compact->add_option("--out", opt.out_dir, "output directory");
    compact->add_option("--bins", bins, "histogram bin count");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    add_common(gradcheck, /*with_data=*/false);
    bool corrupt = false;
    gradcheck->add_flag("--corrupt", corrupt, "negative-control hook: corrupt the gradient");

    auto* hist = app.add_subcommand("hist", "weight histogram of a model's equivalent map");
    std::string hist_out = "hist.csv";
    double hist_lo = 0.0, hist_hi = 0.0;
    hist->add_option("--model", model_path, "model JSON")->required();
    hist->add_option("--out", hist_out, "output CSV path");
    hist->add_option("--bins", bins, "histogram bin count");
    hist->add_option("--lo", hist_lo, "histogram lower edge (default: quantile range)");
    hist->add_option("--hi", hist_hi, "histogram upper edge");

    auto* fetch = app.add_subcommand("fetch-mnist", "download the dataset with checksums");
    std::string fetch_out = "data/mnist";
    std::string base_url = "https://ossci-datasets.s3.amazonaws.com/mnist";
    fetch->add_option("--out", fetch_out, "destination directory");
    fetch->add_option("--url", base_url, "base URL (or env SPECNN_MNIST_URL)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    openblas_set_num_threads(threads);
    try {
        if (train->parsed()) return cmd_train(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (compact->parsed()) return cmd_compact(model_path, opt.out_dir, bins);
        if (gradcheck->parsed()) return cmd_gradcheck(opt, corrupt);
        if (hist->parsed()) return cmd_hist(model_path, hist_out, bins, hist_lo, hist_hi);
        if (fetch->parsed()) return cmd_fetch_mnist(fetch_out, base_url);
    } catch (const io_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
