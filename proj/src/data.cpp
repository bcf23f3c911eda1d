#include "ldpfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <utility>

#include "ldpfl/rng.hpp"

namespace ldpfl {

void Dataset::validate() const {
    if (labels.empty()) throw usage_error("Dataset: no samples");
    if (input_dim <= 0 || num_classes < 2) {
        throw config_error("Dataset: bad dimensions");
    }
    if (inputs.size() != labels.size() * static_cast<std::size_t>(input_dim)) {
        throw shape_error("Dataset: inputs size mismatch");
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw config_error("Dataset: label out of range");
    }
    for (double v : inputs) {
        if (!std::isfinite(v)) throw numeric_error("Dataset: non-finite input");
    }
}

void PartitionConfig::validate() const {
    if (num_clients < 1) throw config_error("PartitionConfig: num_clients must be >= 1");
    if (!(alpha > 0.0)) throw config_error("PartitionConfig: alpha must be > 0");
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path,
                        std::size_t offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) {
        throw ingest_error(path + ": truncated at byte offset " +
                           std::to_string(offset));
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw ingest_error(images_path + ": cannot open");
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw ingest_error(labels_path + ": cannot open");

    if (const auto magic = read_be32(img, images_path, 0); magic != kImagesMagic) {
        char hex[16];
        std::snprintf(hex, sizeof hex, "0x%08x", magic);
        throw ingest_error(images_path + ": bad magic " + hex +
                           " at byte offset 0 (expected 0x00000803)");
    }
    const std::uint32_t n_images = read_be32(img, images_path, 4);
    const std::uint32_t rows = read_be32(img, images_path, 8);
    const std::uint32_t cols = read_be32(img, images_path, 12);

    if (const auto magic = read_be32(lab, labels_path, 0); magic != kLabelsMagic) {
        char hex[16];
        std::snprintf(hex, sizeof hex, "0x%08x", magic);
        throw ingest_error(labels_path + ": bad magic " + hex +
                           " at byte offset 0 (expected 0x00000801)");
    }
    const std::uint32_t n_labels = read_be32(lab, labels_path, 4);
    if (n_images != n_labels) {
        throw ingest_error("image/label count mismatch: " +
                           std::to_string(n_images) + " images vs " +
                           std::to_string(n_labels) + " labels");
    }

    Dataset ds;
    ds.input_dim = static_cast<int>(rows * cols);
    ds.num_classes = 10;
    const std::size_t n_pixels =
        static_cast<std::size_t>(n_images) * rows * cols;
    std::vector<unsigned char> pixels(n_pixels);
    img.read(reinterpret_cast<char*>(pixels.data()),
             static_cast<std::streamsize>(n_pixels));
    if (static_cast<std::size_t>(img.gcount()) != n_pixels) {
        throw ingest_error(images_path + ": truncated pixel data at byte offset " +
                           std::to_string(16 + img.gcount()));
    }
    std::vector<unsigned char> raw_labels(n_labels);
    lab.read(reinterpret_cast<char*>(raw_labels.data()),
             static_cast<std::streamsize>(n_labels));
    if (static_cast<std::size_t>(lab.gcount()) != n_labels) {
        throw ingest_error(labels_path + ": truncated label data at byte offset " +
                           std::to_string(8 + lab.gcount()));
    }

    ds.inputs.resize(n_pixels);
    for (std::size_t i = 0; i < n_pixels; ++i) {
        ds.inputs[i] = static_cast<double>(pixels[i]) / 255.0;
    }
    ds.labels.resize(n_labels);
    for (std::size_t i = 0; i < n_labels; ++i) {
        const int y = raw_labels[i];
        if (y > 9) {
            throw ingest_error(labels_path + ": label " + std::to_string(y) +
                               " out of range at byte offset " +
                               std::to_string(8 + i));
        }
        ds.labels[i] = y;
    }
    ds.validate();
    return ds;
}

Dataset synth_blobs(int num_classes, int input_dim, int samples_per_class,
                    double spread, std::uint64_t seed) {
    if (num_classes < 2 || input_dim < 1 || samples_per_class < 1 || spread < 0.0) {
        throw config_error("synth_blobs: arguments must be positive");
    }
    Rng rng(mix64(seed ^ static_cast<std::uint64_t>(StreamPurpose::synth)));
    // Class centers: random directions pushed apart to unit-distance scale.
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(num_classes));
    for (auto& c : centers) {
        c.resize(static_cast<std::size_t>(input_dim));
        double norm = 0.0;
        for (auto& v : c) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : c) v = 3.0 * v / (norm > 0.0 ? norm : 1.0);
    }
    Dataset ds;
    ds.input_dim = input_dim;
    ds.num_classes = num_classes;
    for (int k = 0; k < num_classes; ++k) {
        for (int s = 0; s < samples_per_class; ++s) {
            for (int j = 0; j < input_dim; ++j) {
                ds.inputs.push_back(centers[static_cast<std::size_t>(k)]
                                           [static_cast<std::size_t>(j)] +
                                    spread * rng.normal());
            }
            ds.labels.push_back(k);
        }
    }
    ds.validate();
    return ds;
}

std::vector<Dataset> dirichlet_partition(const Dataset& ds,
                                         const PartitionConfig& cfg,
                                         std::vector<std::string>* warnings) {
    ds.validate();
    cfg.validate();
    const int n_clients = cfg.num_clients;
    Rng rng(derive_seed(cfg.seed, 0, 0, StreamPurpose::partition));

    std::vector<Dataset> parts(static_cast<std::size_t>(n_clients));
    for (auto& p : parts) {
        p.input_dim = ds.input_dim;
        p.num_classes = ds.num_classes;
    }

    for (int k = 0; k < ds.num_classes; ++k) {
        // One simplex draw per class via normalized Gamma variates.
        std::vector<double> probs(static_cast<std::size_t>(n_clients));
        double total = 0.0;
        for (auto& p : probs) {
            p = rng.gamma(cfg.alpha);
            total += p;
        }
        for (auto& p : probs) p /= total;

        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.labels[i] != k) continue;
            double u = rng.uniform();
            int client = n_clients - 1;
            for (int c = 0; c < n_clients; ++c) {
                u -= probs[static_cast<std::size_t>(c)];
                if (u < 0.0) {
                    client = c;
                    break;
                }
            }
            auto& part = parts[static_cast<std::size_t>(client)];
            const auto* row = ds.inputs.data() + i * static_cast<std::size_t>(ds.input_dim);
            part.inputs.insert(part.inputs.end(), row, row + ds.input_dim);
            part.labels.push_back(k);
        }
    }

    if (warnings) {
        for (int c = 0; c < n_clients; ++c) {
            if (parts[static_cast<std::size_t>(c)].labels.empty()) {
                warnings->push_back("client " + std::to_string(c) +
                                    " received zero samples");
            }
        }
    }
    return parts;
}

namespace {

// Deterministic per-class shuffle of sample indices.
std::vector<std::vector<std::size_t>> shuffled_class_indices(const Dataset& ds,
                                                             Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(ds.num_classes));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    }
    for (auto& idx : by_class) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
        }
    }
    return by_class;
}

Dataset gather(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.input_dim = ds.input_dim;
    out.num_classes = ds.num_classes;
    for (std::size_t i : indices) {
        const auto* row = ds.inputs.data() + i * static_cast<std::size_t>(ds.input_dim);
        out.inputs.insert(out.inputs.end(), row, row + ds.input_dim);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

}  // namespace

Dataset subset_stratified(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    ds.validate();
    n = std::min(n, ds.size());
    Rng rng(derive_seed(seed, 0, 0, StreamPurpose::subset));
    auto by_class = shuffled_class_indices(ds, rng);
    std::vector<std::size_t> chosen;
    // Round-robin over classes keeps the subset label-balanced.
    for (std::size_t depth = 0; chosen.size() < n; ++depth) {
        bool any = false;
        for (auto& idx : by_class) {
            if (depth < idx.size() && chosen.size() < n) {
                chosen.push_back(idx[depth]);
                any = true;
            }
        }
        if (!any) break;
    }
    std::sort(chosen.begin(), chosen.end());
    return gather(ds, chosen);
}

std::pair<Dataset, Dataset> split_stratified(const Dataset& ds, double fraction,
                                             std::uint64_t seed) {
    ds.validate();
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw config_error("split_stratified: fraction must be in (0,1)");
    }
    Rng rng(derive_seed(seed, 0, 0, StreamPurpose::test_split));
    auto by_class = shuffled_class_indices(ds, rng);
    std::vector<std::size_t> head, tail;
    for (auto& idx : by_class) {
        const auto n_tail = static_cast<std::size_t>(
            std::round(fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_tail ? tail : head).push_back(idx[i]);
        }
    }
    std::sort(head.begin(), head.end());
    std::sort(tail.begin(), tail.end());
    return {gather(ds, head), gather(ds, tail)};
}

std::vector<std::vector<std::size_t>> label_histograms(
    const std::vector<Dataset>& parts, int num_classes) {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(parts.size());
    for (const auto& p : parts) {
        std::vector<std::size_t> hist(static_cast<std::size_t>(num_classes), 0);
        for (int y : p.labels) ++hist[static_cast<std::size_t>(y)];
        out.push_back(std::move(hist));
    }
    return out;
}

}  // namespace ldpfl
