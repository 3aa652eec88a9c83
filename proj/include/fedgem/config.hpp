#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgem/datagen.hpp"
#include "fedgem/dp.hpp"
#include "fedgem/errors.hpp"

namespace fedgem {

enum class ServerMode { Pairwise, KdTreeMode };
enum class RadiusSolverKind { ClosedForm, Bisection };

/// Data-generation block of a run configuration.
struct DatagenConfig {
    int clusters = 6;
    int dim = 2;
    int n_train = 2500;
    int n_test = 5000;
    double r_min = 6.0;
    double box_half_width = 0.0;
    PartitionMode mode = PartitionMode::Nominal;
    std::vector<double> client_fractions;  // empty → defaults when needed
};

/// Sensitivity-sweep grid.
struct SweepSpec {
    std::vector<double> r_min_values{1.0, 2.0, 4.0, 6.0};
    std::vector<PartitionMode> settings{PartitionMode::Nominal};
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> upsilon_grid{0.5, 1.0, 5.0, 10.0, 50.0};
    bool include_baseline = true;
    int restarts = 3;  // fresh k-means++ inits per cell, best kept
};

/// All knobs of one run.
struct RunConfig {
    int num_clients = 5;          // G
    int rounds = 10;              // T
    int local_steps = 1;          // S
    int bisection_iters = 10;     // I
    double radius_scale = 1.0;    // υ
    RadiusSolverKind radius_solver = RadiusSolverKind::ClosedForm;
    ServerMode server_mode = ServerMode::Pairwise;
    std::uint64_t master_seed = 0;
    int init_rep = 0;             // salt for the best-of-3 restart protocol
    int baseline_em_iters = 20;
    std::optional<DpParams> dp;
    DatagenConfig datagen;
    SweepSpec sweep;

    void validate() const {
        if (num_clients < 2) throw ConfigError("num_clients must be >= 2");
        if (rounds < 1) throw ConfigError("rounds must be >= 1");
        if (local_steps < 1) throw ConfigError("local_steps must be >= 1");
        if (bisection_iters < 1) throw ConfigError("bisection_iters must be >= 1");
        if (!(radius_scale > 0.0)) throw ConfigError("radius_scale must be > 0");
        if (datagen.clusters < 3) throw ConfigError("datagen.clusters must be >= 3");
        if (datagen.dim < 1) throw ConfigError("datagen.dim must be >= 1");
        if (datagen.n_train < datagen.clusters || datagen.n_test < datagen.clusters)
            throw ConfigError("datagen sample budgets too small");
        if (!(datagen.r_min > 0.0)) throw ConfigError("datagen.r_min must be > 0");
        if (dp) {
            try {
                dp->validate();
            } catch (const InvalidValue& e) {
                throw ConfigError(e.what());
            }
        }
        partition_spec();  // validates fractions
    }

    PartitionSpec partition_spec() const {
        PartitionSpec pspec;
        pspec.num_clients = num_clients;
        pspec.mode = datagen.mode;
        if (datagen.mode == PartitionMode::ClientImbalance) {
            if (!datagen.client_fractions.empty()) {
                pspec.client_fractions = datagen.client_fractions;
            } else if (num_clients == 5) {
                pspec.client_fractions = {0.40, 0.24, 0.16, 0.16, 0.04};
            } else {
                throw ConfigError("client_imbalance needs client_fractions unless G = 5");
            }
        }
        try {
            pspec.validate();
        } catch (const InvalidValue& e) {
            throw ConfigError(e.what());
        }
        return pspec;
    }
};

inline std::string to_string(PartitionMode mode) {
    switch (mode) {
        case PartitionMode::Nominal: return "nominal";
        case PartitionMode::ClientImbalance: return "client_imbalance";
        case PartitionMode::ClusterImbalance: return "cluster_imbalance";
    }
    return "nominal";
}

inline PartitionMode partition_mode_from_string(const std::string& s) {
    if (s == "nominal") return PartitionMode::Nominal;
    if (s == "client_imbalance") return PartitionMode::ClientImbalance;
    if (s == "cluster_imbalance") return PartitionMode::ClusterImbalance;
    throw ConfigError("unknown partition mode: " + s);
}

inline std::string to_string(ServerMode mode) {
    return mode == ServerMode::Pairwise ? "pairwise" : "kdtree";
}

inline ServerMode server_mode_from_string(const std::string& s) {
    if (s == "pairwise") return ServerMode::Pairwise;
    if (s == "kdtree") return ServerMode::KdTreeMode;
    throw ConfigError("unknown server mode: " + s);
}

inline std::string to_string(RadiusSolverKind kind) {
    return kind == RadiusSolverKind::ClosedForm ? "closed_form" : "bisection";
}

inline RadiusSolverKind radius_solver_from_string(const std::string& s) {
    if (s == "closed_form") return RadiusSolverKind::ClosedForm;
    if (s == "bisection") return RadiusSolverKind::Bisection;
    throw ConfigError("unknown radius solver: " + s);
}

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;
    detail::read_field(j, "num_clients", cfg.num_clients);
    detail::read_field(j, "rounds", cfg.rounds);
    detail::read_field(j, "local_steps", cfg.local_steps);
    detail::read_field(j, "bisection_iters", cfg.bisection_iters);
    detail::read_field(j, "radius_scale", cfg.radius_scale);
    detail::read_field(j, "master_seed", cfg.master_seed);
    detail::read_field(j, "init_rep", cfg.init_rep);
    detail::read_field(j, "baseline_em_iters", cfg.baseline_em_iters);
    if (j.contains("radius_solver"))
        cfg.radius_solver = radius_solver_from_string(j.at("radius_solver").get<std::string>());
    if (j.contains("server_mode"))
        cfg.server_mode = server_mode_from_string(j.at("server_mode").get<std::string>());
    if (j.contains("dp") && !j.at("dp").is_null()) {
        const auto& d = j.at("dp");
        DpParams dp;
        detail::read_field(d, "rho", dp.rho);
        detail::read_field(d, "mu", dp.mu);
        detail::read_field(d, "b_x", dp.b_x);
        detail::read_field(d, "b_gamma", dp.b_gamma);
        cfg.dp = dp;
    }
    if (j.contains("datagen")) {
        const auto& d = j.at("datagen");
        detail::read_field(d, "clusters", cfg.datagen.clusters);
        detail::read_field(d, "dim", cfg.datagen.dim);
        detail::read_field(d, "n_train", cfg.datagen.n_train);
        detail::read_field(d, "n_test", cfg.datagen.n_test);
        detail::read_field(d, "r_min", cfg.datagen.r_min);
        detail::read_field(d, "box_half_width", cfg.datagen.box_half_width);
        detail::read_field(d, "client_fractions", cfg.datagen.client_fractions);
        if (d.contains("mode"))
            cfg.datagen.mode = partition_mode_from_string(d.at("mode").get<std::string>());
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        detail::read_field(s, "r_min", cfg.sweep.r_min_values);
        detail::read_field(s, "seeds", cfg.sweep.seeds);
        detail::read_field(s, "upsilon_grid", cfg.sweep.upsilon_grid);
        detail::read_field(s, "include_baseline", cfg.sweep.include_baseline);
        detail::read_field(s, "restarts", cfg.sweep.restarts);
        if (s.contains("settings")) {
            cfg.sweep.settings.clear();
            for (const auto& m : s.at("settings"))
                cfg.sweep.settings.push_back(partition_mode_from_string(m.get<std::string>()));
        }
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j{
        {"num_clients", cfg.num_clients},
        {"rounds", cfg.rounds},
        {"local_steps", cfg.local_steps},
        {"bisection_iters", cfg.bisection_iters},
        {"radius_scale", cfg.radius_scale},
        {"radius_solver", to_string(cfg.radius_solver)},
        {"server_mode", to_string(cfg.server_mode)},
        {"master_seed", cfg.master_seed},
        {"init_rep", cfg.init_rep},
        {"baseline_em_iters", cfg.baseline_em_iters},
        {"datagen",
         {{"clusters", cfg.datagen.clusters},
          {"dim", cfg.datagen.dim},
          {"n_train", cfg.datagen.n_train},
          {"n_test", cfg.datagen.n_test},
          {"r_min", cfg.datagen.r_min},
          {"box_half_width", cfg.datagen.box_half_width},
          {"mode", to_string(cfg.datagen.mode)}}}};
    if (!cfg.datagen.client_fractions.empty())
        j["datagen"]["client_fractions"] = cfg.datagen.client_fractions;
    if (cfg.dp)
        j["dp"] = {{"rho", cfg.dp->rho}, {"mu", cfg.dp->mu}, {"b_x", cfg.dp->b_x},
                   {"b_gamma", cfg.dp->b_gamma}};
    return j;
}

}  // namespace fedgem
