#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ldpfl/attacks.hpp"

namespace ldpfl {

struct IdxSource {
    std::string images_path;
    std::string labels_path;
    // Optional held-out test files; when absent, test_fraction splits the
    // training files.
    std::string test_images_path;
    std::string test_labels_path;
    std::size_t subset = 0;  // 0 = use everything
};

struct SynthSource {
    int num_classes = 2;
    int input_dim = 2;
    int samples_per_class = 100;
    double spread = 0.5;
};

struct ExperimentConfig {
    ModelSpec model;
    ProtocolConfig protocol;
    AggregationConfig aggregation;
    std::optional<AttackPlan> attack;
    std::vector<int> malicious_ids;
    PartitionConfig partition;  // num_clients/seed filled from the top level
    std::variant<IdxSource, SynthSource> dataset;
    double test_fraction = 0.2;
    int rounds = 1;
    int num_clients = 2;
    std::uint64_t global_seed = 0;

    void validate() const;
};

struct RoundRecord {
    int round = 0;
    double error_rate = 0.0;
    double global_norm = 0.0;
    std::vector<int> selected;  // multikrum only
    int skipped_batches = 0;    // summed over clients

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

// One line-delimited record, byte-stable across reruns with equal seeds.
std::string to_json_line(const RoundRecord& r);

// Round-loop state over materialized data. The held-out test set is global
// and never partitioned.
class Simulation {
   public:
    Simulation(ExperimentConfig cfg, const Dataset& train, Batch test);

    RoundRecord run_round();
    std::vector<RoundRecord> run();

    const ParamVector& global_model() const { return theta_g_; }
    const std::vector<Dataset>& client_data() const { return client_data_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

   private:
    bool is_malicious(int client) const;
    ParamVector benign_upload(int client, int round, LocalRoundDiag& diag,
                              const LayerRanges& ranges);
    ParamVector attack_upload(int client, int round, const EavesdropView& view,
                              const LayerRanges& ranges);

    ExperimentConfig cfg_;
    std::vector<Dataset> client_data_;
    Batch test_;
    ParamVector theta_g_;
    std::vector<TransformLayer> transforms_;  // privatefl per-client state
    std::vector<std::string> warnings_;
    int next_round_ = 0;
};

// Loads/generates data per the config, runs all rounds.
std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg);

// Data materialization used by run_experiment and the partition report.
std::pair<Dataset, Batch> materialize_data(const ExperimentConfig& cfg);

}  // namespace ldpfl
