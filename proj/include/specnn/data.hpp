#ifndef SPECNN_DATA_HPP
#define SPECNN_DATA_HPP

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "specnn/errors.hpp"
#include "specnn/matrix.hpp"
#include "specnn/rng.hpp"

namespace specnn {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

enum class DatasetKind { Train, Test };

// Flattened images (row-major pixel scan), intensities rescaled to [0,1].
struct Dataset {
    Matrix features;          // num_samples x (rows*cols)
    std::vector<int> labels;  // class indices 0..9
    DatasetKind kind = DatasetKind::Train;

    std::size_t size() const { return labels.size(); }
};

struct RawImages {
    std::size_t count = 0, rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels;  // count*rows*cols
};

namespace detail {

// Whole-file read with transparent gzip inflation (gzread passes plain files
// through unchanged, so one path covers both).
inline std::vector<std::uint8_t> read_file_maybe_gz(const std::string& path) {
    if (!std::filesystem::exists(path)) throw io_error("no such file: " + path);
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw io_error("cannot open: " + path);
    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw format_error("gzip decode failed: " + path);
    return out;
}

inline std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void put_be32(std::ofstream& os, std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    os.write(b, 4);
}

}  // namespace detail

inline RawImages load_idx_images(const std::string& path) {
    const auto bytes = detail::read_file_maybe_gz(path);
    if (bytes.size() < 16) throw format_error("IDX images: truncated header in " + path);
    const std::uint32_t magic = detail::be32(bytes.data());
    if (magic != kIdxImagesMagic)
        throw format_error("IDX images: wrong magic in " + path);
    RawImages img;
    img.count = detail::be32(bytes.data() + 4);
    img.rows = detail::be32(bytes.data() + 8);
    img.cols = detail::be32(bytes.data() + 12);
    if (bytes.size() != 16 + img.count * img.rows * img.cols)
        throw format_error("IDX images: payload size mismatch in " + path);
    img.pixels.assign(bytes.begin() + 16, bytes.end());
    return img;
}

inline std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = detail::read_file_maybe_gz(path);
    if (bytes.size() < 8) throw format_error("IDX labels: truncated header in " + path);
    if (detail::be32(bytes.data()) != kIdxLabelsMagic)
        throw format_error("IDX labels: wrong magic in " + path);
    const std::uint32_t count = detail::be32(bytes.data() + 4);
    if (bytes.size() != 8 + count) throw format_error("IDX labels: payload size mismatch in " + path);
    std::vector<int> labels(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        labels[i] = bytes[8 + i];
        if (labels[i] > 9) throw format_error("IDX labels: value > 9 in " + path);
    }
    return labels;
}

inline void save_idx_images(const std::string& path, const RawImages& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write: " + path);
    detail::put_be32(os, kIdxImagesMagic);
    detail::put_be32(os, static_cast<std::uint32_t>(img.count));
    detail::put_be32(os, static_cast<std::uint32_t>(img.rows));
    detail::put_be32(os, static_cast<std::uint32_t>(img.cols));
    os.write(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::streamsize>(img.pixels.size()));
}

inline void save_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write: " + path);
    detail::put_be32(os, kIdxLabelsMagic);
    detail::put_be32(os, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) os.put(static_cast<char>(l));
}

// Row-major (horizontal scan) flattening, pixel value v mapped to v/255.
inline Dataset to_dataset(const RawImages& img, const std::vector<int>& labels,
                          DatasetKind kind = DatasetKind::Train) {
    if (img.count != labels.size()) throw shape_error("to_dataset: image/label count mismatch");
    Dataset ds;
    ds.kind = kind;
    ds.labels = labels;
    const std::size_t dim = img.rows * img.cols;
    ds.features = Matrix(img.count, dim);
    for (std::size_t s = 0; s < img.count; ++s)
        for (std::size_t p = 0; p < dim; ++p)
            ds.features(s, p) = static_cast<double>(img.pixels[s * dim + p]) / 255.0;
    return ds;
}

inline Dataset load_dataset(const std::string& images_path, const std::string& labels_path,
                            DatasetKind kind) {
    return to_dataset(load_idx_images(images_path), load_idx_labels(labels_path), kind);
}

// Locates the four canonical files (optionally .gz) under a directory.
struct MnistPaths {
    std::string train_images, train_labels, test_images, test_labels;
};

inline MnistPaths find_mnist(const std::string& dir) {
    auto pick = [&](const std::string& stem) {
        for (const char* suffix : {".gz", ""}) {
            const std::string p = dir + "/" + stem + suffix;
            if (std::filesystem::exists(p)) return p;
        }
        throw io_error("MNIST file not found: " + dir + "/" + stem + "[.gz]");
    };
    return {pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"),
            pick("t10k-images-idx3-ubyte"), pick("t10k-labels-idx1-ubyte")};
}

struct Batch {
    Matrix features;          // batch_size x dim
    std::vector<int> labels;
};

// One epoch's worth of batches under a full random permutation; the final
// partial batch is included, so the union of batches is exactly the dataset.
class BatchIter {
public:
    BatchIter(const Dataset& ds, std::size_t batch_size, std::uint64_t seed)
        : ds_(&ds), batch_size_(batch_size), perm_(ds.size()) {
        if (batch_size < 1) throw domain_error("batch_iter: batch_size must be >= 1");
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        Rng rng(seed);
        std::shuffle(perm_.begin(), perm_.end(), rng);
    }

    bool next(Batch& out) {
        if (pos_ >= perm_.size()) return false;
        const std::size_t n = std::min(batch_size_, perm_.size() - pos_);
        const std::size_t dim = ds_->features.cols();
        out.features = Matrix(n, dim);
        out.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t src = perm_[pos_ + i];
            std::copy(ds_->features.row(src), ds_->features.row(src) + dim,
                      out.features.row(i));
            out.labels[i] = ds_->labels[src];
        }
        pos_ += n;
        return true;
    }

private:
    const Dataset* ds_;
    std::size_t batch_size_;
    std::size_t pos_ = 0;
    std::vector<std::size_t> perm_;
};

}  // namespace specnn

#endif
