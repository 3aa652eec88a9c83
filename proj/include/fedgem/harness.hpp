#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedgem/client.hpp"
#include "fedgem/config.hpp"
#include "fedgem/core.hpp"
#include "fedgem/datagen.hpp"
#include "fedgem/dp.hpp"
#include "fedgem/gmm.hpp"
#include "fedgem/metrics.hpp"
#include "fedgem/rng.hpp"
#include "fedgem/server.hpp"

namespace fedgem {

/// Time source in seconds. Injectable so reports can be made bit-reproducible.
using Clock = std::function<double()>;

inline Clock steady_clock_seconds() {
    return [] {
        const auto now = std::chrono::steady_clock::now().time_since_epoch();
        return std::chrono::duration<double>(now).count();
    };
}

/// Per-round telemetry of a federated run.
struct RoundTrace {
    int round = 0;
    int k_hat = 0;
    bool final_round = false;
    std::vector<double> per_client_movement;        // mean ||θ^(t) − θ^(t−1)|| per client
    std::vector<double> per_client_log_likelihood;  // on local training data
    std::vector<double> per_client_q_delta_min;     // min_k Q̂_k(update) − Q̂_k(θ_prev)
};

struct RunResult {
    MetricsReport report;
    std::vector<RoundTrace> trace;
    int k_hat_star = 0;
    std::vector<LocalModel> final_models;  // one per client
    std::vector<std::string> warnings;
};

/// App. D.3 sanity guide: K̂ should not significantly exceed √(Σ_g K_g).
inline double khat_sanity_bound(std::size_t total_components) {
    return std::sqrt(static_cast<double>(total_components));
}

namespace detail {

/// Replace centroid k with the sample farthest from all current centroids.
inline void reseed_component(ClientState& state, int k) {
    double best_score = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t n = 0; n < state.data.size(); ++n) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const Vector& c : state.model.centroids)
            nearest = std::min(nearest, squared_distance(state.data.samples[n], c));
        if (nearest > best_score) {
            best_score = nearest;
            best_idx = n;
        }
    }
    state.model.centroids[static_cast<std::size_t>(k)] = state.data.samples[best_idx];
}

inline LocalRoundResult local_round_with_reseed(ClientState& state, std::vector<Vector> incoming,
                                                std::size_t s_steps, const RadiusSolver& solver,
                                                std::vector<std::string>& warnings) {
    const int max_retries = static_cast<int>(state.model.k()) + 2;
    for (int attempt = 0;; ++attempt) {
        try {
            return local_round(state, incoming, s_steps, solver);
        } catch (const EmptyComponent& e) {
            if (attempt >= max_retries) throw;
            warnings.push_back("client " + std::to_string(state.client_id) +
                               ": reseeded empty component " + std::to_string(e.component_idx));
            reseed_component(state, e.component_idx);
            incoming = state.model.centroids;
        }
    }
}

}  // namespace detail

/// State of a federation after the T local-EM rounds and T−1 collaborative
/// server updates. Final aggregation (which depends on υ) is applied on top,
/// possibly several times for tuning.
struct TrainedFederation {
    RunConfig config;
    std::vector<ClientState> clients;   // models hold the round-T maximizers
    std::vector<Dataset> test_data;
    std::vector<Rng> dp_streams;        // position after the collaborative rounds
    std::vector<RoundTrace> trace;      // rounds 1..T−1
    std::vector<std::vector<Vector>> last_round_start;  // centroids at round-T start
    std::vector<std::string> warnings;
    double started_at = 0.0;
};

namespace detail {

inline detail::ServerResult dispatch_server_update(const std::vector<ComponentMessage>& messages,
                                                   ServerMode mode) {
    return mode == ServerMode::Pairwise ? server_update(messages)
                                        : server_update_kdtree(messages);
}

inline std::vector<ComponentMessage> maybe_perturb(std::vector<ComponentMessage> messages,
                                                   const RunConfig& cfg, Rng& dp_stream) {
    if (!cfg.dp) return messages;
    return perturb_messages(std::move(messages), *cfg.dp, dp_stream);
}

/// Test-split budgets per client, mirroring the train-split layout.
inline std::vector<int> client_test_budgets(const RunConfig& config) {
    if (config.datagen.mode == PartitionMode::ClientImbalance)
        return proportional_counts(config.partition_spec().client_fractions, config.datagen.n_test);
    std::vector<int> budgets(config.num_clients);
    const int base = config.datagen.n_test / config.num_clients;
    const int extra = config.datagen.n_test % config.num_clients;
    for (int g = 0; g < config.num_clients; ++g) budgets[g] = base + (g < extra ? 1 : 0);
    return budgets;
}

inline BlobSpec blob_spec_of(const RunConfig& config) {
    BlobSpec bspec;
    bspec.k = config.datagen.clusters;
    bspec.dim = config.datagen.dim;
    bspec.n_total = config.datagen.n_train;
    bspec.r_min = config.datagen.r_min;
    bspec.box_half_width = config.datagen.box_half_width;
    return bspec;
}

}  // namespace detail

/// Phases INITIALIZATION and COLLABORATIVE TRAINING of the protocol, plus the
/// round-T local EM steps. Deterministic given the config.
inline TrainedFederation train_federation(const RunConfig& config, const Clock& clock) {
    config.validate();
    TrainedFederation fed;
    fed.config = config;
    fed.started_at = clock();

    // data
    Rng data_rng = make_rng(config.master_seed, "data");
    const BlobData blob = make_blobs(detail::blob_spec_of(config), data_rng);
    const auto parts = partition_clients(blob.data, blob.centers, config.partition_spec(), data_rng);

    Rng test_rng = make_rng(config.master_seed, "testdata");
    const std::vector<int> test_budgets = detail::client_test_budgets(config);
    for (int g = 0; g < config.num_clients; ++g)
        fed.test_data.push_back(
            sample_client_data(blob.centers, parts[g], test_budgets[g], test_rng));

    // initialization
    for (int g = 0; g < config.num_clients; ++g) {
        ClientState state;
        state.client_id = g;
        state.data = parts[g].data;
        state.rng_stream = make_rng(config.master_seed, "client", static_cast<std::uint64_t>(g),
                                    static_cast<std::uint64_t>(config.init_rep));
        state.model = LocalModel::equal_weights(
            kmeanspp_init(state.data, parts[g].cluster_ids.size(), state.rng_stream));
        state.validate();
        fed.clients.push_back(std::move(state));
        fed.dp_streams.push_back(make_rng(config.master_seed, "dp", static_cast<std::uint64_t>(g),
                                          static_cast<std::uint64_t>(config.init_rep)));
    }

    RadiusSolver solver;
    solver.use_bisection = config.radius_solver == RadiusSolverKind::Bisection;
    solver.bisection_iters = static_cast<std::size_t>(config.bisection_iters);

    // collaborative training
    std::vector<std::vector<Vector>> incoming(config.num_clients);
    for (int t = 1; t <= config.rounds; ++t) {
        std::vector<std::vector<Vector>> round_start(config.num_clients);
        for (int g = 0; g < config.num_clients; ++g)
            round_start[g] = incoming[g].empty() ? fed.clients[g].model.centroids : incoming[g];

        std::vector<std::future<LocalRoundResult>> futures;
        futures.reserve(config.num_clients);
        for (int g = 0; g < config.num_clients; ++g)
            futures.push_back(std::async(std::launch::async, [&, g] {
                return local_round(fed.clients[g], incoming[g], config.local_steps, solver);
            }));

        std::vector<LocalRoundResult> locals;
        for (int g = 0; g < config.num_clients; ++g) {
            LocalRoundResult res;
            try {
                res = futures[g].get();
            } catch (const EmptyComponent&) {
                // degenerate component: reseed and retry serially
                res = detail::local_round_with_reseed(fed.clients[g], incoming[g],
                                                      config.local_steps, solver, fed.warnings);
            }
            locals.push_back(std::move(res));
        }

        if (t == config.rounds) {
            // round-T maximizers feed the final aggregation; nothing is
            // transmitted until finalize() attaches the final radii
            fed.last_round_start = std::move(round_start);
            break;
        }

        std::vector<ComponentMessage> all_messages;
        for (int g = 0; g < config.num_clients; ++g) {
            auto messages = detail::maybe_perturb(locals[g].messages, config, fed.dp_streams[g]);
            all_messages.insert(all_messages.end(), messages.begin(), messages.end());
        }
        const auto server_res = detail::dispatch_server_update(all_messages, config.server_mode);

        RoundTrace rt;
        rt.round = t;
        rt.k_hat = server_res.partition.k_hat;
        for (int g = 0; g < config.num_clients; ++g) {
            ClientState& state = fed.clients[g];
            const std::size_t k_g = state.model.k();
            std::vector<Vector> update(k_g);
            for (std::size_t k = 0; k < k_g; ++k)
                update[k] = server_res.updates.at(ComponentKey{g, static_cast<int>(k)});

            double movement = 0.0;
            double q_delta_min = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < k_g; ++k) {
                movement += distance(update[k], round_start[g][k]);
                const double q_prev = component_objective(locals[g].theta_prev[k], state.data,
                                                          locals[g].resp, k, state.model.weights[k]);
                const double q_new = component_objective(update[k], state.data, locals[g].resp, k,
                                                         state.model.weights[k]);
                q_delta_min = std::min(q_delta_min, q_new - q_prev);
            }
            rt.per_client_movement.push_back(movement / static_cast<double>(k_g));
            rt.per_client_q_delta_min.push_back(q_delta_min);

            LocalModel updated = state.model;
            updated.centroids = update;
            rt.per_client_log_likelihood.push_back(log_likelihood(state.data, updated));
            incoming[g] = std::move(update);
        }
        if (t > 1 && !fed.trace.empty()) {
            const RoundTrace& prev = fed.trace.back();
            for (int g = 0; g < config.num_clients; ++g) {
                const double before = prev.per_client_log_likelihood[g];
                const double after = rt.per_client_log_likelihood[g];
                if (!config.dp && after < before - 1e-6 * std::max(1.0, std::abs(before)))
                    fed.warnings.push_back("client " + std::to_string(g) + " log-likelihood dropped at round " +
                                           std::to_string(t));
            }
        }
        fed.trace.push_back(std::move(rt));
    }
    return fed;
}

/// FINAL AGGREGATION for a given υ, plus per-client evaluation on held-out
/// test data. Does not mutate the trained state: dp streams are copied so
/// every υ sees identical noise.
inline RunResult finalize_and_evaluate(const TrainedFederation& fed, double upsilon,
                                       const Clock& clock) {
    const RunConfig& config = fed.config;
    std::vector<ComponentMessage> all_messages;
    std::vector<Rng> dp_streams = fed.dp_streams;
    for (int g = 0; g < config.num_clients; ++g) {
        auto messages =
            detail::maybe_perturb(final_round(fed.clients[g], upsilon), config, dp_streams[g]);
        all_messages.insert(all_messages.end(), messages.begin(), messages.end());
    }
    const auto final_res = final_aggregate(all_messages);

    RunResult result;
    result.warnings = fed.warnings;
    result.trace = fed.trace;
    result.k_hat_star = final_res.partition.k_hat;

    RoundTrace rt;
    rt.round = config.rounds;
    rt.k_hat = result.k_hat_star;
    rt.final_round = true;

    std::vector<ClientMetrics> per_client;
    bool degenerate = false;
    for (int g = 0; g < config.num_clients; ++g) {
        const ClientState& state = fed.clients[g];
        LocalModel final_model = state.model;
        double movement = 0.0;
        for (std::size_t k = 0; k < final_model.k(); ++k) {
            final_model.centroids[k] = final_res.updates.at(ComponentKey{g, static_cast<int>(k)});
            movement += distance(final_model.centroids[k], fed.last_round_start[g][k]);
        }
        rt.per_client_movement.push_back(movement / static_cast<double>(final_model.k()));
        rt.per_client_log_likelihood.push_back(log_likelihood(state.data, final_model));
        rt.per_client_q_delta_min.push_back(0.0);  // aggregation is consensus, not a GEM step

        const Dataset& test = fed.test_data[g];
        const std::vector<int> predicted = assign_labels(test, final_model);
        ClientMetrics cm;
        cm.client_id = g;
        cm.n_samples = static_cast<long long>(state.data.size());
        cm.ari = ari(*test.labels, predicted);
        try {
            cm.silhouette = silhouette(test, predicted);
        } catch (const UndefinedMetric&) {
            cm.silhouette = 0.0;
            degenerate = true;
        }
        per_client.push_back(cm);
        result.final_models.push_back(std::move(final_model));
    }
    result.trace.push_back(std::move(rt));
    result.report = weighted_report(std::move(per_client), result.k_hat_star,
                                    clock() - fed.started_at);
    result.report.degenerate_silhouette = degenerate;
    if (degenerate)
        result.warnings.push_back("silhouette undefined for some client; reported as 0");
    return result;
}

/// Algorithm end to end: init, T rounds, final aggregation, evaluation.
inline RunResult run_fedgem(const RunConfig& config, const Clock& clock = steady_clock_seconds()) {
    const TrainedFederation fed = train_federation(config, clock);
    return finalize_and_evaluate(fed, config.radius_scale, clock);
}

/// Centralized EM on the pooled client training data with the true K,
/// evaluated on the pooled test data.
inline RunResult run_centralized_baseline(const RunConfig& config,
                                          const Clock& clock = steady_clock_seconds()) {
    config.validate();
    const double started = clock();

    // identical data pipeline as the federated run
    Rng data_rng = make_rng(config.master_seed, "data");
    const BlobData blob = make_blobs(detail::blob_spec_of(config), data_rng);
    const auto parts = partition_clients(blob.data, blob.centers, config.partition_spec(), data_rng);

    Rng test_rng = make_rng(config.master_seed, "testdata");
    Dataset pooled_train, pooled_test;
    pooled_train.labels.emplace();
    pooled_test.labels.emplace();
    const std::vector<int> test_budgets = detail::client_test_budgets(config);
    for (int g = 0; g < config.num_clients; ++g) {
        for (std::size_t n = 0; n < parts[g].data.size(); ++n) {
            pooled_train.samples.push_back(parts[g].data.samples[n]);
            pooled_train.labels->push_back((*parts[g].data.labels)[n]);
        }
        const Dataset test = sample_client_data(blob.centers, parts[g], test_budgets[g], test_rng);
        for (std::size_t n = 0; n < test.size(); ++n) {
            pooled_test.samples.push_back(test.samples[n]);
            pooled_test.labels->push_back((*test.labels)[n]);
        }
    }

    Rng em_rng = make_rng(config.master_seed, "baseline", static_cast<std::uint64_t>(config.init_rep));
    const LocalModel model = centralized_em(pooled_train, static_cast<std::size_t>(config.datagen.clusters),
                                            static_cast<std::size_t>(config.baseline_em_iters), em_rng);

    const std::vector<int> predicted = assign_labels(pooled_test, model);
    ClientMetrics cm;
    cm.client_id = 0;
    cm.n_samples = static_cast<long long>(pooled_train.size());
    cm.ari = ari(*pooled_test.labels, predicted);
    RunResult result;
    try {
        cm.silhouette = silhouette(pooled_test, predicted);
    } catch (const UndefinedMetric&) {
        cm.silhouette = 0.0;
        result.warnings.push_back("baseline silhouette undefined; reported as 0");
    }
    result.k_hat_star = config.datagen.clusters;  // baseline knows the true K
    result.final_models.push_back(model);
    result.report = weighted_report({cm}, result.k_hat_star, clock() - started);
    result.report.degenerate_silhouette = !result.warnings.empty();
    return result;
}

// ---------------------------------------------------------------------------
// Sensitivity sweep

struct SweepRow {
    std::string setting;
    double r_min = 0.0;
    std::uint64_t seed = 0;
    std::string model;
    double ari = 0.0;
    double silhouette = 0.0;
    int k_hat = 0;
    int k_true = 0;
    double runtime_s = 0.0;
};

/// One grid cell for one model, best of `restarts` fresh initializations.
/// FedGEM tunes υ per restart over the grid by silhouette (label-free, per
/// the tuning protocol); the best restart is selected by ARI.
inline SweepRow sweep_cell_fedgem(RunConfig cfg, const SweepSpec& sweep, const Clock& clock) {
    SweepRow row;
    row.setting = to_string(cfg.datagen.mode);
    row.r_min = cfg.datagen.r_min;
    row.seed = cfg.master_seed;
    row.model = "fedgem";
    row.k_true = cfg.datagen.clusters;
    bool first = true;
    for (int rep = 0; rep < sweep.restarts; ++rep) {
        cfg.init_rep = rep;
        const TrainedFederation fed = train_federation(cfg, clock);
        RunResult best_by_ss;
        bool first_ups = true;
        for (double upsilon : sweep.upsilon_grid) {
            RunResult res = finalize_and_evaluate(fed, upsilon, clock);
            if (first_ups || res.report.silhouette > best_by_ss.report.silhouette) {
                best_by_ss = std::move(res);
                first_ups = false;
            }
        }
        if (first || best_by_ss.report.ari > row.ari) {
            row.ari = best_by_ss.report.ari;
            row.silhouette = best_by_ss.report.silhouette;
            row.k_hat = best_by_ss.k_hat_star;
            row.runtime_s = best_by_ss.report.runtime_seconds;
            first = false;
        }
    }
    return row;
}

inline SweepRow sweep_cell_baseline(RunConfig cfg, const SweepSpec& sweep, const Clock& clock) {
    SweepRow row;
    row.setting = to_string(cfg.datagen.mode);
    row.r_min = cfg.datagen.r_min;
    row.seed = cfg.master_seed;
    row.model = "centralized_em";
    row.k_true = cfg.datagen.clusters;
    bool first = true;
    for (int rep = 0; rep < sweep.restarts; ++rep) {
        cfg.init_rep = rep;
        const RunResult res = run_centralized_baseline(cfg, clock);
        if (first || res.report.ari > row.ari) {
            row.ari = res.report.ari;
            row.silhouette = res.report.silhouette;
            row.k_hat = res.k_hat_star;
            row.runtime_s = res.report.runtime_seconds;
            first = false;
        }
    }
    return row;
}

/// The full grid: one row per (setting, r_min, seed, model), sorted by
/// (setting, r_min, seed).
inline std::vector<SweepRow> run_sensitivity_sweep(const RunConfig& base,
                                                   const Clock& clock = steady_clock_seconds()) {
    base.validate();
    std::vector<SweepRow> rows;
    std::vector<PartitionMode> settings = base.sweep.settings;
    std::sort(settings.begin(), settings.end(), [](PartitionMode a, PartitionMode b) {
        return to_string(a) < to_string(b);
    });
    std::vector<double> r_values = base.sweep.r_min_values;
    std::sort(r_values.begin(), r_values.end());
    std::vector<std::uint64_t> seeds = base.sweep.seeds;
    std::sort(seeds.begin(), seeds.end());

    for (PartitionMode setting : settings)
        for (double r_min : r_values)
            for (std::uint64_t seed : seeds) {
                RunConfig cfg = base;
                cfg.datagen.mode = setting;
                cfg.datagen.r_min = r_min;
                cfg.master_seed = seed;
                rows.push_back(sweep_cell_fedgem(cfg, base.sweep, clock));
                if (base.sweep.include_baseline)
                    rows.push_back(sweep_cell_baseline(cfg, base.sweep, clock));
            }
    return rows;
}

// ---------------------------------------------------------------------------
// Output writers (shared by the CLI and the tests)

namespace detail {

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "setting,r_min,seed,model,ari,silhouette,k_hat,k_true,runtime_s\n";
    for (const SweepRow& r : rows) {
        out += r.setting;
        out += ',';
        out += detail::format_double(r.r_min);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += r.model;
        out += ',';
        out += detail::format_double(r.ari);
        out += ',';
        out += detail::format_double(r.silhouette);
        out += ',';
        out += std::to_string(r.k_hat);
        out += ',';
        out += std::to_string(r.k_true);
        out += ',';
        out += detail::format_double(r.runtime_s);
        out += '\n';
    }
    return out;
}

inline nlohmann::json run_summary_json(const RunConfig& config, const RunResult& result) {
    nlohmann::json j;
    j["config"] = config_to_json(config);
    j["k_hat"] = result.k_hat_star;
    j["report"] = {{"ari", result.report.ari},
                   {"silhouette", result.report.silhouette},
                   {"k_hat", result.report.k_hat},
                   {"runtime_seconds", result.report.runtime_seconds},
                   {"degenerate_silhouette", result.report.degenerate_silhouette}};
    auto& per_client = j["report"]["per_client"] = nlohmann::json::array();
    for (const ClientMetrics& c : result.report.per_client)
        per_client.push_back({{"client_id", c.client_id},
                              {"ari", c.ari},
                              {"silhouette", c.silhouette},
                              {"n_samples", c.n_samples}});
    auto& trace = j["trace"] = nlohmann::json::array();
    for (const RoundTrace& rt : result.trace)
        trace.push_back({{"round", rt.round},
                         {"k_hat", rt.k_hat},
                         {"final_round", rt.final_round},
                         {"per_client_movement", rt.per_client_movement},
                         {"per_client_log_likelihood", rt.per_client_log_likelihood},
                         {"per_client_q_delta_min", rt.per_client_q_delta_min}});
    j["warnings"] = result.warnings;
    return j;
}

}  // namespace fedgem
