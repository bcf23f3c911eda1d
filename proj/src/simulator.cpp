#include "ldpfl/simulator.hpp"

#include <algorithm>
#include <utility>

#include <nlohmann/json.hpp>

namespace ldpfl {

void ExperimentConfig::validate() const {
    model.validate();
    protocol.validate();
    if (rounds < 1) throw config_error("ExperimentConfig: rounds must be >= 1");
    if (num_clients < 1) throw config_error("ExperimentConfig: num_clients must be >= 1");
    aggregation.validate(num_clients);
    if (protocol.protocol == Protocol::ldpfl &&
        aggregation.rule == AggregationRule::trimmedmean) {
        throw config_error("ExperimentConfig: trimmed mean is not applicable to ldpfl");
    }
    for (int id : malicious_ids) {
        if (id < 0 || id >= num_clients) {
            throw config_error("ExperimentConfig: malicious id out of range");
        }
    }
    if (std::adjacent_find(malicious_ids.begin(), malicious_ids.end()) !=
        malicious_ids.end()) {
        throw config_error("ExperimentConfig: duplicate malicious id");
    }
    if (attack) {
        attack->validate();
        if (attack->kind == AttackKind::adapa &&
            aggregation.rule == AggregationRule::fedavg) {
            throw config_error("ExperimentConfig: adapa requires a robust rule");
        }
        if (malicious_ids.empty()) {
            throw config_error("ExperimentConfig: an attack needs malicious ids");
        }
    } else if (!malicious_ids.empty()) {
        throw config_error("ExperimentConfig: malicious ids without an attack");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw config_error("ExperimentConfig: test_fraction must be in (0,1)");
    }
}

std::string to_json_line(const RoundRecord& r) {
    nlohmann::json j;
    j["round"] = r.round;
    j["error_rate"] = r.error_rate;
    j["global_norm"] = r.global_norm;
    j["selected"] = r.selected;
    j["skipped_batches"] = r.skipped_batches;
    return j.dump();
}

Simulation::Simulation(ExperimentConfig cfg, const Dataset& train, Batch test)
    : cfg_(std::move(cfg)), test_(std::move(test)) {
    cfg_.validate();
    std::sort(cfg_.malicious_ids.begin(), cfg_.malicious_ids.end());

    PartitionConfig part = cfg_.partition;
    part.num_clients = cfg_.num_clients;
    client_data_ = dirichlet_partition(train, part, &warnings_);

    theta_g_ = init_params(
        cfg_.model, derive_seed(cfg_.global_seed, 0, 0, StreamPurpose::model_init));
    if (cfg_.protocol.protocol == Protocol::privatefl) {
        transforms_.assign(static_cast<std::size_t>(cfg_.num_clients),
                           TransformLayer::identity(cfg_.model.input_dim));
    }
}

bool Simulation::is_malicious(int client) const {
    return cfg_.attack.has_value() &&
           std::binary_search(cfg_.malicious_ids.begin(),
                              cfg_.malicious_ids.end(), client);
}

ParamVector Simulation::benign_upload(int client, int round,
                                      LocalRoundDiag& diag,
                                      const LayerRanges& ranges) {
    const auto& ds = client_data_[static_cast<std::size_t>(client)];
    Rng rng(derive_seed(cfg_.global_seed, static_cast<std::uint64_t>(client),
                        static_cast<std::uint64_t>(round),
                        StreamPurpose::local_train));
    ParamVector theta = theta_g_;
    if (!ds.labels.empty()) {
        switch (cfg_.protocol.protocol) {
            case Protocol::ldpsgd:
                theta = ldpsgd_local_round(cfg_.model, theta_g_, ds, cfg_.protocol,
                                           /*malicious=*/false, /*apply_ldp=*/true,
                                           rng, &diag);
                break;
            case Protocol::privatefl: {
                auto& transform = transforms_[static_cast<std::size_t>(client)];
                auto result = privatefl_local_round(
                    cfg_.model, theta_g_, transform, ds, cfg_.protocol,
                    /*malicious=*/false, /*apply_ldp=*/true, rng, &diag);
                transform = std::move(result.transform);
                theta = std::move(result.theta);
                break;
            }
            case Protocol::ldpfl:
                theta = ldpfl_local_round(cfg_.model, theta_g_, ds, cfg_.protocol,
                                          /*malicious=*/false);
                break;
        }
    }
    if (cfg_.protocol.protocol == Protocol::ldpfl) {
        Rng perturb_rng(derive_seed(cfg_.global_seed,
                                    static_cast<std::uint64_t>(client),
                                    static_cast<std::uint64_t>(round),
                                    StreamPurpose::upload_perturb));
        theta = data_perturbation(theta, ranges, cfg_.protocol.epsilon, perturb_rng);
    }
    return theta;
}

ParamVector Simulation::attack_upload(int client, int round,
                                      const EavesdropView& view,
                                      const LayerRanges& ranges) {
    AttackPlan plan = *cfg_.attack;
    plan.n_total = cfg_.num_clients;
    plan.n_malicious = static_cast<int>(cfg_.malicious_ids.size());

    const auto& ds = client_data_[static_cast<std::size_t>(client)];
    Rng rng(derive_seed(cfg_.global_seed, static_cast<std::uint64_t>(client),
                        static_cast<std::uint64_t>(round), StreamPurpose::attack));
    const LayerRanges* ranges_ptr =
        cfg_.protocol.protocol == Protocol::ldpfl ? &ranges : nullptr;
    TransformLayer* transform =
        cfg_.protocol.protocol == Protocol::privatefl
            ? &transforms_[static_cast<std::size_t>(client)]
            : nullptr;

    // A compromised client that drew no data degrades to the data-free
    // baseline attack.
    const bool data_free = ds.labels.empty();
    if (plan.kind == AttackKind::rpa || data_free) {
        return rpa_update(theta_g_, cfg_.protocol, plan, ranges_ptr, rng);
    }
    switch (plan.kind) {
        case AttackKind::llra:
            return llra_update(cfg_.model, theta_g_, ds, cfg_.protocol, plan,
                               ranges_ptr, transform, rng);
        case AttackKind::tmma:
            return tmma_update(cfg_.model, theta_g_, ds, cfg_.protocol, plan,
                               ranges_ptr, transform, &view, rng);
        case AttackKind::adapa:
            return adapa_generate(cfg_.model, theta_g_, view, ds, cfg_.protocol,
                                  plan, cfg_.aggregation, ranges_ptr, rng);
        default:
            throw config_error("attack_upload: unknown attack kind");
    }
}

RoundRecord Simulation::run_round() {
    const int round = next_round_++;
    LocalRoundDiag diag;
    const LayerRanges ranges = cfg_.protocol.protocol == Protocol::ldpfl
                                   ? layer_ranges(theta_g_)
                                   : LayerRanges{};

    std::vector<ParamVector> uploads(static_cast<std::size_t>(cfg_.num_clients));
    EavesdropView view;
    for (int c = 0; c < cfg_.num_clients; ++c) {
        if (!is_malicious(c)) {
            uploads[static_cast<std::size_t>(c)] = benign_upload(c, round, diag, ranges);
        }
    }
    if (cfg_.attack && !cfg_.malicious_ids.empty()) {
        // The view carries benign upload contents only at global knowledge;
        // N and n only from partial knowledge upward.
        if (cfg_.attack->knowledge != Knowledge::local) {
            view.n_total = cfg_.num_clients;
            view.n_malicious = static_cast<int>(cfg_.malicious_ids.size());
        }
        if (cfg_.attack->knowledge == Knowledge::global) {
            for (int c = 0; c < cfg_.num_clients; ++c) {
                if (!is_malicious(c)) {
                    view.benign_uploads.push_back(uploads[static_cast<std::size_t>(c)]);
                }
            }
        }
        if (cfg_.aggregation.rule == AggregationRule::multikrum) {
            // Identical uploads minimize the mutual Multi-Krum score.
            const int leader = cfg_.malicious_ids.front();
            const ParamVector crafted = attack_upload(leader, round, view, ranges);
            for (int c : cfg_.malicious_ids) {
                uploads[static_cast<std::size_t>(c)] = crafted;
            }
        } else {
            for (int c : cfg_.malicious_ids) {
                uploads[static_cast<std::size_t>(c)] =
                    attack_upload(c, round, view, ranges);
            }
        }
    }

    RoundRecord record;
    record.round = round;
    theta_g_ = aggregate(uploads, cfg_.aggregation, &record.selected);
    record.error_rate = error_rate(cfg_.model, theta_g_, test_);
    record.global_norm = l2_norm(theta_g_);
    record.skipped_batches = diag.skipped_batches;
    return record;
}

std::vector<RoundRecord> Simulation::run() {
    std::vector<RoundRecord> records;
    records.reserve(static_cast<std::size_t>(cfg_.rounds));
    for (int r = 0; r < cfg_.rounds; ++r) records.push_back(run_round());
    return records;
}

std::pair<Dataset, Batch> materialize_data(const ExperimentConfig& cfg) {
    if (const auto* idx = std::get_if<IdxSource>(&cfg.dataset)) {
        Dataset train = load_idx(idx->images_path, idx->labels_path);
        if (idx->subset > 0) {
            train = subset_stratified(train, idx->subset, cfg.global_seed);
        }
        if (!idx->test_images_path.empty()) {
            const Dataset test = load_idx(idx->test_images_path, idx->test_labels_path);
            return {std::move(train), test.as_batch()};
        }
        auto [fit, held_out] = split_stratified(train, cfg.test_fraction, cfg.global_seed);
        return {std::move(fit), held_out.as_batch()};
    }
    const auto& synth = std::get<SynthSource>(cfg.dataset);
    const Dataset all = synth_blobs(synth.num_classes, synth.input_dim,
                                    synth.samples_per_class, synth.spread,
                                    cfg.global_seed);
    auto [fit, held_out] = split_stratified(all, cfg.test_fraction, cfg.global_seed);
    return {std::move(fit), held_out.as_batch()};
}

std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    auto [train, test] = materialize_data(cfg);
    Simulation sim(cfg, train, std::move(test));
    return sim.run();
}

}  // namespace ldpfl
