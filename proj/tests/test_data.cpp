#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "ldpfl/data.hpp"

using namespace ldpfl;

namespace {

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

struct IdxFixture {
    std::string images_path;
    std::string labels_path;

    IdxFixture() {
        const auto dir = std::filesystem::temp_directory_path();
        images_path = (dir / "ldpfl_test_images.idx").string();
        labels_path = (dir / "ldpfl_test_labels.idx").string();

        // Two 2x2 images.
        std::vector<std::uint8_t> img;
        push_u32(img, 0x00000803);
        push_u32(img, 2);
        push_u32(img, 2);
        push_u32(img, 2);
        for (std::uint8_t p : {0, 51, 102, 255, 255, 204, 153, 0})
            img.push_back(p);
        write_bytes(images_path, img);

        std::vector<std::uint8_t> lab;
        push_u32(lab, 0x00000801);
        push_u32(lab, 2);
        lab.push_back(7);
        lab.push_back(3);
        write_bytes(labels_path, lab);
    }

    ~IdxFixture() {
        std::remove(images_path.c_str());
        std::remove(labels_path.c_str());
    }
};

Dataset tiny_dataset(int n_per_class, int num_classes) {
    Dataset ds;
    ds.input_dim = 2;
    ds.num_classes = num_classes;
    for (int k = 0; k < num_classes; ++k) {
        for (int i = 0; i < n_per_class; ++i) {
            ds.inputs.push_back(static_cast<double>(k));
            ds.inputs.push_back(static_cast<double>(i));
            ds.labels.push_back(k);
        }
    }
    return ds;
}

// Counts each (x0, x1, label) triple so partition preservation can be
// checked as a multiset equality.
std::map<std::tuple<double, double, int>, int> sample_counts(const Dataset& ds) {
    std::map<std::tuple<double, double, int>, int> counts;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        counts[{ds.inputs[2 * i], ds.inputs[2 * i + 1], ds.labels[i]}]++;
    }
    return counts;
}

double total_variation(const std::vector<std::size_t>& hist,
                       const std::vector<double>& global_frac) {
    const double n = static_cast<double>(
        std::accumulate(hist.begin(), hist.end(), std::size_t{0}));
    if (n == 0) return 0.0;
    double tv = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k)
        tv += std::abs(static_cast<double>(hist[k]) / n - global_frac[k]);
    return 0.5 * tv;
}

}  // namespace

TEST_CASE("load_idx parses a hand-built fixture") {
    IdxFixture fx;
    const auto ds = load_idx(fx.images_path, fx.labels_path);
    REQUIRE(ds.size() == 2);
    CHECK(ds.input_dim == 4);
    CHECK(ds.labels[0] == 7);
    CHECK(ds.labels[1] == 3);
    CHECK(ds.inputs[0] == doctest::Approx(0.0));
    CHECK(ds.inputs[1] == doctest::Approx(51.0 / 255.0));
    CHECK(ds.inputs[3] == doctest::Approx(1.0));
    CHECK(ds.inputs[7] == doctest::Approx(0.0));
}

TEST_CASE("load_idx rejects bad magic and count mismatch") {
    IdxFixture fx;
    CHECK_THROWS_AS(load_idx(fx.labels_path, fx.labels_path), ingest_error);

    const auto dir = std::filesystem::temp_directory_path();
    const auto lab3 = (dir / "ldpfl_test_labels3.idx").string();
    std::vector<std::uint8_t> lab;
    push_u32(lab, 0x00000801);
    push_u32(lab, 3);
    lab.push_back(1);
    lab.push_back(2);
    lab.push_back(3);
    write_bytes(lab3, lab);
    CHECK_THROWS_AS(load_idx(fx.images_path, lab3), ingest_error);
    std::remove(lab3.c_str());
}

TEST_CASE("load_idx rejects truncated image payload") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto img_path = (dir / "ldpfl_test_trunc.idx").string();
    std::vector<std::uint8_t> img;
    push_u32(img, 0x00000803);
    push_u32(img, 2);
    push_u32(img, 2);
    push_u32(img, 2);
    img.push_back(0);  // 1 byte instead of 8
    write_bytes(img_path, img);

    IdxFixture fx;
    CHECK_THROWS_AS(load_idx(img_path, fx.labels_path), ingest_error);
    std::remove(img_path.c_str());
}

TEST_CASE("dirichlet_partition preserves the dataset exactly") {
    const auto ds = tiny_dataset(25, 4);
    const auto parts = dirichlet_partition(ds, {5, 0.5, 33});
    REQUIRE(parts.size() == 5);
    std::size_t total = 0;
    std::map<std::tuple<double, double, int>, int> merged;
    for (const auto& p : parts) {
        total += p.size();
        for (const auto& [key, count] : sample_counts(p)) merged[key] += count;
    }
    CHECK(total == ds.size());
    CHECK(merged == sample_counts(ds));
}

TEST_CASE("dirichlet_partition is deterministic in the seed") {
    const auto ds = tiny_dataset(20, 3);
    const auto a = dirichlet_partition(ds, {4, 1.0, 7});
    const auto b = dirichlet_partition(ds, {4, 1.0, 7});
    REQUIRE(a.size() == b.size());
    for (std::size_t c = 0; c < a.size(); ++c) {
        CHECK(a[c].labels == b[c].labels);
        CHECK(a[c].inputs == b[c].inputs);
    }
}

TEST_CASE("small alpha is more heterogeneous than large alpha") {
    const auto ds = tiny_dataset(200, 5);
    std::vector<double> global_frac(5, 0.2);

    double tv_low = 0.0;
    double tv_high = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto low = dirichlet_partition(ds, {10, 0.05, seed});
        const auto high = dirichlet_partition(ds, {10, 1000.0, seed});
        for (const auto& h : label_histograms(low, 5))
            tv_low += total_variation(h, global_frac);
        for (const auto& h : label_histograms(high, 5))
            tv_high += total_variation(h, global_frac);
    }
    CHECK(tv_low > tv_high);
}

TEST_CASE("zero-sample clients are reported, not fatal") {
    const auto ds = tiny_dataset(1, 2);  // 2 samples, 8 clients
    std::vector<std::string> warnings;
    const auto parts = dirichlet_partition(ds, {8, 0.1, 3}, &warnings);
    CHECK(parts.size() == 8);
    CHECK(!warnings.empty());
}

TEST_CASE("subset_stratified balances classes and caps at dataset size") {
    const auto ds = tiny_dataset(30, 3);
    const auto sub = subset_stratified(ds, 60, 5);
    REQUIRE(sub.size() == 60);
    const auto hist = label_histograms({sub}, 3)[0];
    for (auto h : hist) CHECK(h == 20);

    const auto all = subset_stratified(ds, 10000, 5);
    CHECK(all.size() == ds.size());
}

TEST_CASE("split_stratified partitions without loss") {
    const auto ds = tiny_dataset(20, 4);
    const auto [train, test] = split_stratified(ds, 0.25, 9);
    CHECK(train.size() + test.size() == ds.size());
    CHECK(test.size() == 20);  // 25% of 80
    auto merged = sample_counts(train);
    for (const auto& [key, count] : sample_counts(test)) merged[key] += count;
    CHECK(merged == sample_counts(ds));
}

TEST_CASE("synth_blobs is deterministic and well-formed") {
    const auto a = synth_blobs(3, 4, 10, 0.5, 17);
    const auto b = synth_blobs(3, 4, 10, 0.5, 17);
    CHECK(a.size() == 30);
    CHECK(a.input_dim == 4);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels == b.labels);
    const auto hist = label_histograms({a}, 3)[0];
    for (auto h : hist) CHECK(h == 10);
}
