// Command-line front end: single runs, the centralized baseline, and the
// sensitivity sweep. Configuration comes from a JSON file; flags override.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedgem/fedgem.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> server_mode;
    bool dp = false;
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--seed", flags.seed, "master seed (overrides config)");
    cmd->add_option("--server-mode", flags.server_mode, "pairwise|kdtree (overrides config)")
        ->check(CLI::IsMember({"pairwise", "kdtree"}));
    cmd->add_flag("--dp", flags.dp, "enable differential privacy");
    cmd->add_option("--out", flags.out_path, "output file (default: stdout)");
}

fedgem::RunConfig load_config(const CommonFlags& flags) {
    nlohmann::json j = nlohmann::json::object();
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) throw fedgem::ConfigError("cannot open config file: " + flags.config_path);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw fedgem::ConfigError(std::string("config parse error: ") + e.what());
        }
    }
    fedgem::RunConfig cfg = fedgem::parse_config(j);
    if (flags.seed) cfg.master_seed = *flags.seed;
    if (flags.server_mode) cfg.server_mode = fedgem::server_mode_from_string(*flags.server_mode);
    if (flags.dp && !cfg.dp) cfg.dp = fedgem::DpParams{};
    cfg.validate();
    return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw fedgem::ConfigError("cannot open output file: " + out_path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FedGEM: federated generalized-EM clustering simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags, sweep_flags, baseline_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "single federated experiment");
    add_common(run_cmd, run_flags);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "sensitivity grid, CSV output");
    add_common(sweep_cmd, sweep_flags);
    CLI::App* baseline_cmd = app.add_subcommand("baseline", "centralized EM baseline");
    add_common(baseline_cmd, baseline_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    try {
        if (run_cmd->parsed()) {
            const fedgem::RunConfig cfg = load_config(run_flags);
            const fedgem::RunResult result = fedgem::run_fedgem(cfg);
            emit(fedgem::run_summary_json(cfg, result).dump(2) + "\n", run_flags.out_path);
        } else if (sweep_cmd->parsed()) {
            const fedgem::RunConfig cfg = load_config(sweep_flags);
            const auto rows = fedgem::run_sensitivity_sweep(cfg);
            emit(fedgem::sweep_csv(rows), sweep_flags.out_path);
        } else if (baseline_cmd->parsed()) {
            const fedgem::RunConfig cfg = load_config(baseline_flags);
            const fedgem::RunResult result = fedgem::run_centralized_baseline(cfg);
            emit(fedgem::run_summary_json(cfg, result).dump(2) + "\n", baseline_flags.out_path);
        }
    } catch (const fedgem::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const fedgem::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
    return 0;
}
