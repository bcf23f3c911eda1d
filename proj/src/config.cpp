#include "ldpfl/config.hpp"

#include <cstdio>
#include <fstream>

namespace ldpfl {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw config_error("config: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) schema_error(path + "." + key, "unknown key");
    }
}

const json& require(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) schema_error(path + "." + key, "missing required field");
    return j.at(key);
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) schema_error(path, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_error(path, "expected an integer");
    return j.get<int>();
}

std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) schema_error(path, "expected a string");
    return j.get<std::string>();
}

ModelSpec parse_model(const json& j) {
    check_keys(j, "model", {"kind", "input_dim", "hidden_dim", "num_classes"});
    ModelSpec spec;
    const std::string kind = str(require(j, "model", "kind"), "model.kind");
    if (kind == "logistic_regression") {
        spec.kind = ModelKind::logistic_regression;
    } else if (kind == "mlp2") {
        spec.kind = ModelKind::mlp2;
    } else {
        schema_error("model.kind", "must be logistic_regression or mlp2");
    }
    spec.input_dim = integer(require(j, "model", "input_dim"), "model.input_dim");
    spec.num_classes = integer(require(j, "model", "num_classes"), "model.num_classes");
    if (spec.kind == ModelKind::mlp2) {
        spec.hidden_dim = integer(require(j, "model", "hidden_dim"), "model.hidden_dim");
    } else if (j.contains("hidden_dim")) {
        schema_error("model.hidden_dim", "only valid for mlp2");
    }
    return spec;
}

ProtocolConfig parse_protocol(const json& j) {
    check_keys(j, "protocol",
               {"name", "eta", "epochs", "sample_prob", "clip_c", "sigma",
                "epsilon"});
    ProtocolConfig cfg;
    const std::string name = str(require(j, "protocol", "name"), "protocol.name");
    if (name == "ldpsgd") {
        cfg.protocol = Protocol::ldpsgd;
    } else if (name == "privatefl") {
        cfg.protocol = Protocol::privatefl;
    } else if (name == "ldpfl") {
        cfg.protocol = Protocol::ldpfl;
    } else {
        schema_error("protocol.name", "must be ldpsgd, privatefl or ldpfl");
    }
    cfg.eta = num(require(j, "protocol", "eta"), "protocol.eta");
    if (j.contains("epochs")) cfg.epochs = integer(j.at("epochs"), "protocol.epochs");
    if (cfg.protocol == Protocol::ldpfl) {
        cfg.epsilon = num(require(j, "protocol", "epsilon"), "protocol.epsilon");
        for (const char* k : {"sample_prob", "clip_c", "sigma"}) {
            if (j.contains(k)) {
                schema_error(std::string("protocol.") + k, "not valid for ldpfl");
            }
        }
    } else {
        cfg.sample_prob =
            num(require(j, "protocol", "sample_prob"), "protocol.sample_prob");
        cfg.clip_c = num(require(j, "protocol", "clip_c"), "protocol.clip_c");
        cfg.sigma = num(require(j, "protocol", "sigma"), "protocol.sigma");
        if (j.contains("epsilon")) {
            schema_error("protocol.epsilon", "only valid for ldpfl");
        }
    }
    return cfg;
}

AggregationConfig parse_aggregation(const json& j) {
    check_keys(j, "aggregation", {"rule", "f", "k", "beta"});
    AggregationConfig cfg;
    const std::string rule = str(require(j, "aggregation", "rule"), "aggregation.rule");
    if (rule == "fedavg") {
        cfg.rule = AggregationRule::fedavg;
    } else if (rule == "multikrum") {
        cfg.rule = AggregationRule::multikrum;
        cfg.f = integer(require(j, "aggregation", "f"), "aggregation.f");
        cfg.k = integer(require(j, "aggregation", "k"), "aggregation.k");
    } else if (rule == "trimmedmean") {
        cfg.rule = AggregationRule::trimmedmean;
        cfg.beta = integer(require(j, "aggregation", "beta"), "aggregation.beta");
    } else {
        schema_error("aggregation.rule", "must be fedavg, multikrum or trimmedmean");
    }
    return cfg;
}

AttackPlan parse_attack(const json& j, std::vector<int>& malicious_ids) {
    check_keys(j, "attack",
               {"kind", "mode", "knowledge", "ate", "scal", "t_scale",
                "malicious_ids", "use_eavesdropped_estimate"});
    AttackPlan plan;
    const std::string kind = str(require(j, "attack", "kind"), "attack.kind");
    if (kind == "rpa") {
        plan.kind = AttackKind::rpa;
    } else if (kind == "llra") {
        plan.kind = AttackKind::llra;
    } else if (kind == "tmma") {
        plan.kind = AttackKind::tmma;
    } else if (kind == "adapa") {
        plan.kind = AttackKind::adapa;
    } else {
        schema_error("attack.kind", "must be rpa, llra, tmma or adapa");
    }
    if (j.contains("mode")) {
        const std::string mode = str(j.at("mode"), "attack.mode");
        if (mode == "input") {
            plan.mode = AttackMode::input;
        } else if (mode == "output") {
            plan.mode = AttackMode::output;
        } else {
            schema_error("attack.mode", "must be input or output");
        }
    }
    const std::string knowledge =
        str(require(j, "attack", "knowledge"), "attack.knowledge");
    if (knowledge == "local") {
        plan.knowledge = Knowledge::local;
    } else if (knowledge == "partial") {
        plan.knowledge = Knowledge::partial;
    } else if (knowledge == "global") {
        plan.knowledge = Knowledge::global;
    } else {
        schema_error("attack.knowledge", "must be local, partial or global");
    }
    if (j.contains("ate")) plan.ate = integer(j.at("ate"), "attack.ate");
    if (j.contains("scal")) plan.scal = num(j.at("scal"), "attack.scal");
    if (j.contains("t_scale")) plan.t_scale = num(j.at("t_scale"), "attack.t_scale");
    if (j.contains("use_eavesdropped_estimate")) {
        if (!j.at("use_eavesdropped_estimate").is_boolean()) {
            schema_error("attack.use_eavesdropped_estimate", "expected a boolean");
        }
        plan.use_eavesdropped_estimate = j.at("use_eavesdropped_estimate").get<bool>();
    }
    const json& ids = require(j, "attack", "malicious_ids");
    if (!ids.is_array()) schema_error("attack.malicious_ids", "expected an array");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        malicious_ids.push_back(
            integer(ids.at(i), "attack.malicious_ids[" + std::to_string(i) + "]"));
    }
    return plan;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
    if (!j.is_object()) schema_error("(root)", "expected an object");
    check_keys(j, "(root)",
               {"seed", "rounds", "num_clients", "test_fraction", "model",
                "protocol", "aggregation", "partition", "dataset", "attack"});
    ExperimentConfig cfg;
    cfg.global_seed = require(j, "(root)", "seed").get<std::uint64_t>();
    cfg.rounds = integer(require(j, "(root)", "rounds"), "rounds");
    cfg.num_clients = integer(require(j, "(root)", "num_clients"), "num_clients");
    if (j.contains("test_fraction")) {
        cfg.test_fraction = num(j.at("test_fraction"), "test_fraction");
    }
    cfg.model = parse_model(require(j, "(root)", "model"));
    cfg.protocol = parse_protocol(require(j, "(root)", "protocol"));
    if (j.contains("aggregation")) {
        cfg.aggregation = parse_aggregation(j.at("aggregation"));
    }
    if (j.contains("partition")) {
        const json& p = j.at("partition");
        check_keys(p, "partition", {"alpha", "seed"});
        cfg.partition.alpha = num(require(p, "partition", "alpha"), "partition.alpha");
        cfg.partition.seed = p.contains("seed")
                                 ? p.at("seed").get<std::uint64_t>()
                                 : cfg.global_seed;
    } else {
        cfg.partition.seed = cfg.global_seed;
    }
    cfg.partition.num_clients = cfg.num_clients;

    const json& d = require(j, "(root)", "dataset");
    const std::string source = str(require(d, "dataset", "source"), "dataset.source");
    if (source == "idx") {
        check_keys(d, "dataset",
                   {"source", "images", "labels", "test_images", "test_labels",
                    "subset"});
        IdxSource src;
        src.images_path = str(require(d, "dataset", "images"), "dataset.images");
        src.labels_path = str(require(d, "dataset", "labels"), "dataset.labels");
        if (d.contains("test_images") != d.contains("test_labels")) {
            schema_error("dataset.test_images", "test images/labels must come together");
        }
        if (d.contains("test_images")) {
            src.test_images_path = str(d.at("test_images"), "dataset.test_images");
            src.test_labels_path = str(d.at("test_labels"), "dataset.test_labels");
        }
        if (d.contains("subset")) {
            src.subset = static_cast<std::size_t>(
                integer(d.at("subset"), "dataset.subset"));
        }
        cfg.dataset = std::move(src);
    } else if (source == "synth") {
        check_keys(d, "dataset",
                   {"source", "num_classes", "input_dim", "samples_per_class",
                    "spread"});
        SynthSource src;
        src.num_classes =
            integer(require(d, "dataset", "num_classes"), "dataset.num_classes");
        src.input_dim =
            integer(require(d, "dataset", "input_dim"), "dataset.input_dim");
        src.samples_per_class = integer(
            require(d, "dataset", "samples_per_class"), "dataset.samples_per_class");
        src.spread = num(require(d, "dataset", "spread"), "dataset.spread");
        cfg.dataset = src;
    } else {
        schema_error("dataset.source", "must be idx or synth");
    }

    if (j.contains("attack") && !j.at("attack").is_null()) {
        cfg.attack = parse_attack(j.at("attack"), cfg.malicious_ids);
        cfg.attack->n_malicious = static_cast<int>(cfg.malicious_ids.size());
        cfg.attack->n_total = cfg.num_clients;
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw config_error("config: " + path + ": " + e.what());
    }
    return parse_experiment_config(j);
}

std::string protocol_name(Protocol p) {
    switch (p) {
        case Protocol::ldpsgd: return "ldpsgd";
        case Protocol::privatefl: return "privatefl";
        case Protocol::ldpfl: return "ldpfl";
    }
    return "?";
}

std::string rule_name(AggregationRule r) {
    switch (r) {
        case AggregationRule::fedavg: return "fedavg";
        case AggregationRule::multikrum: return "multikrum";
        case AggregationRule::trimmedmean: return "trimmedmean";
    }
    return "?";
}

std::string attack_name(const AttackPlan& plan) {
    std::string name;
    switch (plan.kind) {
        case AttackKind::rpa: return "rpa";
        case AttackKind::llra: name = "llra"; break;
        case AttackKind::tmma: name = "tmma"; break;
        case AttackKind::adapa: return "adapa";
    }
    return name + (plan.mode == AttackMode::input ? "-i" : "-o");
}

nlohmann::json canonical_config(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.global_seed;
    j["rounds"] = cfg.rounds;
    j["num_clients"] = cfg.num_clients;
    j["test_fraction"] = cfg.test_fraction;
    j["model"] = {{"kind", cfg.model.kind == ModelKind::mlp2 ? "mlp2"
                                                             : "logistic_regression"},
                  {"input_dim", cfg.model.input_dim},
                  {"hidden_dim", cfg.model.hidden_dim},
                  {"num_classes", cfg.model.num_classes}};
    j["protocol"] = {{"name", protocol_name(cfg.protocol.protocol)},
                     {"eta", cfg.protocol.eta},
                     {"epochs", cfg.protocol.epochs},
                     {"sample_prob", cfg.protocol.sample_prob},
                     {"clip_c", cfg.protocol.clip_c},
                     {"sigma", cfg.protocol.sigma},
                     {"epsilon", cfg.protocol.epsilon}};
    j["aggregation"] = {{"rule", rule_name(cfg.aggregation.rule)},
                        {"f", cfg.aggregation.f},
                        {"k", cfg.aggregation.k},
                        {"beta", cfg.aggregation.beta}};
    j["partition"] = {{"alpha", cfg.partition.alpha}, {"seed", cfg.partition.seed}};
    if (const auto* idx = std::get_if<IdxSource>(&cfg.dataset)) {
        j["dataset"] = {{"source", "idx"},
                        {"images", idx->images_path},
                        {"labels", idx->labels_path},
                        {"test_images", idx->test_images_path},
                        {"test_labels", idx->test_labels_path},
                        {"subset", idx->subset}};
    } else {
        const auto& synth = std::get<SynthSource>(cfg.dataset);
        j["dataset"] = {{"source", "synth"},
                        {"num_classes", synth.num_classes},
                        {"input_dim", synth.input_dim},
                        {"samples_per_class", synth.samples_per_class},
                        {"spread", synth.spread}};
    }
    if (cfg.attack) {
        const auto& a = *cfg.attack;
        j["attack"] = {
            {"kind", a.kind == AttackKind::rpa     ? "rpa"
                     : a.kind == AttackKind::llra  ? "llra"
                     : a.kind == AttackKind::tmma  ? "tmma"
                                                   : "adapa"},
            {"mode", a.mode == AttackMode::input ? "input" : "output"},
            {"knowledge", a.knowledge == Knowledge::local     ? "local"
                          : a.knowledge == Knowledge::partial ? "partial"
                                                              : "global"},
            {"ate", a.ate},
            {"scal", a.scal},
            {"t_scale", a.t_scale},
            {"use_eavesdropped_estimate", a.use_eavesdropped_estimate},
            {"malicious_ids", cfg.malicious_ids}};
    } else {
        j["attack"] = nullptr;
    }
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = canonical_config(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ldpfl
