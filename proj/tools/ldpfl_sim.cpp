#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ldpfl/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool verbose_logging() {
    const char* v = std::getenv("LDPFL_SIM_LOG");
    return v && std::string(v) != "" && std::string(v) != "off";
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string dataset_label(const ldpfl::ExperimentConfig& cfg) {
    if (const auto* idx = std::get_if<ldpfl::IdxSource>(&cfg.dataset)) {
        return fs::path(idx->images_path).stem().string();
    }
    return "synth";
}

double mean_last5(const std::vector<ldpfl::RoundRecord>& records) {
    const std::size_t n = std::min<std::size_t>(5, records.size());
    double sum = 0.0;
    for (std::size_t i = records.size() - n; i < records.size(); ++i) {
        sum += records[i].error_rate;
    }
    return sum / static_cast<double>(n);
}

// Runs one experiment and writes records + summary + manifest into out_dir.
std::vector<ldpfl::RoundRecord> run_into(const ldpfl::ExperimentConfig& cfg,
                                         const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const std::string started = iso_timestamp();
    const auto records = ldpfl::run_experiment(cfg);

    const fs::path records_path = out_dir / "records.jsonl";
    {
        std::ofstream out(records_path, std::ios::binary);
        for (const auto& r : records) out << ldpfl::to_json_line(r) << "\n";
    }
    const fs::path summary_path = out_dir / "summary.csv";
    {
        std::ofstream out(summary_path, std::ios::binary);
        out << "protocol,dataset,attack,aggregation,rounds,final_error_rate,"
               "mean_last5_error_rate\n";
        out << ldpfl::protocol_name(cfg.protocol.protocol) << ','
            << dataset_label(cfg) << ','
            << (cfg.attack ? ldpfl::attack_name(*cfg.attack) : "none") << ','
            << ldpfl::rule_name(cfg.aggregation.rule) << ',' << cfg.rounds << ','
            << records.back().error_rate << ',' << mean_last5(records) << "\n";
    }
    json manifest;
    manifest["artifact_version"] = "0.1.0";
    manifest["config_hash"] = ldpfl::config_hash(cfg);
    manifest["started"] = started;
    manifest["finished"] = iso_timestamp();
    manifest["records_path"] = records_path.string();
    manifest["summary_path"] = summary_path.string();
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";

    if (verbose_logging()) {
        std::cerr << "[ldpfl-sim] " << out_dir.string()
                  << " final_error=" << records.back().error_rate << "\n";
    }
    return records;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
    ldpfl::ExperimentConfig cfg = ldpfl::load_experiment_config(config_path);
    if (seed) {
        cfg.global_seed = *seed;
        cfg.partition.seed = *seed;
    }
    run_into(cfg, out_dir);
    return 0;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) values.push_back(std::stod(item));
    }
    if (values.empty()) throw ldpfl::usage_error("sweep: no values given");
    return values;
}

ldpfl::ExperimentConfig apply_axis(ldpfl::ExperimentConfig cfg,
                                   const std::string& axis, double value) {
    if (axis == "fraction_malicious") {
        if (!cfg.attack) {
            throw ldpfl::usage_error("sweep: fraction_malicious needs an attack");
        }
        const int n = static_cast<int>(
            std::lround(value * static_cast<double>(cfg.num_clients)));
        cfg.malicious_ids.clear();
        for (int i = 0; i < n; ++i) cfg.malicious_ids.push_back(i);
    } else if (axis == "alpha") {
        cfg.partition.alpha = value;
    } else if (axis == "sigma") {
        if (cfg.protocol.protocol == ldpfl::Protocol::ldpfl) {
            throw ldpfl::usage_error("sweep: sigma axis does not apply to ldpfl");
        }
        cfg.protocol.sigma = value;
    } else if (axis == "epsilon") {
        if (cfg.protocol.protocol != ldpfl::Protocol::ldpfl) {
            throw ldpfl::usage_error(
                "sweep: epsilon axis applies only to ldpfl (sigma drives ldpsgd/privatefl)");
        }
        cfg.protocol.epsilon = value;
    } else {
        throw ldpfl::usage_error("sweep: unknown axis " + axis);
    }
    cfg.validate();
    return cfg;
}

std::string value_token(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::string& values_csv, const std::string& out_dir) {
    const ldpfl::ExperimentConfig base = ldpfl::load_experiment_config(config_path);
    const auto values = parse_values(values_csv);
    fs::create_directories(out_dir);

    std::ofstream merged(fs::path(out_dir) / "sweep.csv", std::ios::binary);
    merged << axis << ",final_error_rate,mean_last5_error_rate\n";
    for (double v : values) {
        const auto cfg = apply_axis(base, axis, v);
        const fs::path point_dir =
            fs::path(out_dir) / (axis + "_" + value_token(v));
        const auto records = run_into(cfg, point_dir);
        merged << value_token(v) << ',' << records.back().error_rate << ','
               << mean_last5(records) << "\n";
    }
    return 0;
}

int cmd_partition_report(const std::string& config_path,
                         const std::string& out_path) {
    const ldpfl::ExperimentConfig cfg = ldpfl::load_experiment_config(config_path);
    auto [train, test] = ldpfl::materialize_data(cfg);
    (void)test;
    ldpfl::PartitionConfig part = cfg.partition;
    part.num_clients = cfg.num_clients;
    std::vector<std::string> warnings;
    const auto parts = ldpfl::dirichlet_partition(train, part, &warnings);
    const auto hists = ldpfl::label_histograms(parts, train.num_classes);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        out = &file;
    }
    *out << "client";
    for (int k = 0; k < train.num_classes; ++k) *out << ",class_" << k;
    *out << ",total\n";
    for (std::size_t c = 0; c < hists.size(); ++c) {
        std::size_t total = 0;
        *out << c;
        for (std::size_t n : hists[c]) {
            *out << ',' << n;
            total += n;
        }
        *out << ',' << total << "\n";
    }
    if (verbose_logging()) {
        for (const auto& w : warnings) std::cerr << "[ldpfl-sim] " << w << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated-learning poisoning simulator under local DP"};
    app.require_subcommand(1);

    std::string config_path, out_dir, axis, values_csv, report_out;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", seed, "Override the config's seed");

    auto* sweep = app.add_subcommand("sweep", "Run one experiment per axis value");
    sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sweep->add_option("--axis", axis,
                      "fraction_malicious | alpha | sigma | epsilon")->required();
    sweep->add_option("--values", values_csv, "Comma-separated values")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();

    auto* report = app.add_subcommand("partition-report",
                                      "Emit per-client label histogram CSV");
    report->add_option("--config", config_path, "Experiment config (JSON)")->required();
    report->add_option("--out", report_out, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed);
        if (sweep->parsed()) return cmd_sweep(config_path, axis, values_csv, out_dir);
        return cmd_partition_report(config_path, report_out);
    } catch (const ldpfl::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
