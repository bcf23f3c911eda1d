#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldpfl/models.hpp"

namespace ldpfl {

// A labeled dataset; inputs are row-major [n_samples x input_dim].
struct Dataset {
    std::vector<double> inputs;
    std::vector<int> labels;
    int input_dim = 0;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    Batch as_batch() const { return Batch{inputs, labels, input_dim}; }
    void validate() const;
};

struct PartitionConfig {
    int num_clients = 2;
    double alpha = 500.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// IDX ingestion (MNIST convention, big-endian). Pixels scaled to [0,1],
// images flattened to rows*cols.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Gaussian clusters around seeded per-class centers.
Dataset synth_blobs(int num_classes, int input_dim, int samples_per_class,
                    double spread, std::uint64_t seed);

// Per class k: draw client proportions from Dirichlet(alpha), then assign
// each class-k sample by a categorical draw. Exactly preserves the dataset.
// Clients that end up empty are reported through `warnings` when given.
std::vector<Dataset> dirichlet_partition(const Dataset& ds,
                                         const PartitionConfig& cfg,
                                         std::vector<std::string>* warnings = nullptr);

// Seeded stratified subsample of up to n samples (caps at dataset size).
Dataset subset_stratified(const Dataset& ds, std::size_t n, std::uint64_t seed);

// Seeded stratified split; second element holds ~fraction of the samples.
std::pair<Dataset, Dataset> split_stratified(const Dataset& ds, double fraction,
                                             std::uint64_t seed);

// Per-client label histograms, each row of length ds.num_classes.
std::vector<std::vector<std::size_t>> label_histograms(
    const std::vector<Dataset>& parts, int num_classes);

}  // namespace ldpfl
