#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "fedgem/core.hpp"
#include "fedgem/gmm.hpp"
#include "fedgem/radius.hpp"
#include "fedgem/rng.hpp"

namespace fedgem {

/// One client's state between rounds. Owned by a single execution context per
/// round; per-client rng streams keep parallel scheduling out of the results.
struct ClientState {
    int client_id = 0;
    Dataset data;
    LocalModel model;
    Rng rng_stream;

    void validate() const {
        data.validate();
        model.validate();
        if (data.dim() != model.dim())
            throw DimensionMismatch("ClientState: data/model dimension");
    }
};

/// What one local round produced, kept around for monitoring and tests:
/// the pre-M-step iterate, the final-step responsibilities, and the messages.
struct LocalRoundResult {
    std::vector<ComponentMessage> messages;
    std::vector<Vector> theta_prev;  // iterate the radius constraint compares against
    Responsibilities resp;           // responsibilities of the final EM step
};

/// Configuration of the radius solve on the client path. The closed form is
/// the default; the bisection reproduces it and is kept selectable.
struct RadiusSolver {
    bool use_bisection = false;
    std::size_t bisection_iters = 10;

    double solve(const RadiusInstance& inst) const {
        return use_bisection ? radius_bisection(inst, bisection_iters)
                             : radius_closed_form(inst);
    }
};

/// S local EM steps from the incoming broadcast, then one radius solve per
/// component at the final iterate. Mutates state.model to the S-step output.
inline LocalRoundResult local_round(ClientState& state, const std::vector<Vector>& incoming,
                                    std::size_t s_steps, const RadiusSolver& solver = {}) {
    if (!incoming.empty()) {
        if (incoming.size() != state.model.k())
            throw DimensionMismatch("local_round: broadcast has wrong component count");
        state.model.centroids = incoming;
    }
    if (s_steps == 0) throw InvalidValue("local_round: S must be >= 1");

    const std::size_t k_g = state.model.k();
    LocalRoundResult out;
    for (std::size_t s = 0; s < s_steps; ++s) {
        out.theta_prev = state.model.centroids;
        out.resp = e_step(state.data, state.model);
        for (std::size_t k = 0; k < k_g; ++k)
            state.model.centroids[k] = m_step(state.data, out.resp, k);
    }

    out.messages.reserve(k_g);
    for (std::size_t k = 0; k < k_g; ++k) {
        const RadiusInstance inst =
            build_instance(state.data, out.resp, k, out.theta_prev[k], state.model.centroids[k]);
        ComponentMessage msg;
        msg.client_id = state.client_id;
        msg.component_idx = static_cast<int>(k);
        msg.maximizer = state.model.centroids[k];
        msg.eps = solver.solve(inst);
        msg.sample_count = static_cast<long long>(state.data.size());
        out.messages.push_back(std::move(msg));
    }
    return out;
}

/// Minimum pairwise distance among the client's current centroids.
inline double min_centroid_distance(const LocalModel& model) {
    if (model.k() < 2) throw InvalidValue("min_centroid_distance: K_g >= 2 required");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model.k(); ++i)
        for (std::size_t j = i + 1; j < model.k(); ++j)
            best = std::min(best, distance(model.centroids[i], model.centroids[j]));
    return best;
}

/// Final-aggregation radius heuristic, one value per component:
///   ε^final_k = υ · R̂_min / (π_k · √N_g).
inline std::vector<double> final_radius(const ClientState& state, double upsilon) {
    if (!(upsilon > 0.0)) throw InvalidValue("final_radius: upsilon must be > 0");
    const double r_min = min_centroid_distance(state.model);
    if (r_min == 0.0)
        throw DegenerateCentroids("final_radius: coincident centroids, R̂_min = 0");
    const double sqrt_n = std::sqrt(static_cast<double>(state.data.size()));
    std::vector<double> eps(state.model.k());
    for (std::size_t k = 0; k < eps.size(); ++k)
        eps[k] = upsilon * r_min / (state.model.weights[k] * sqrt_n);
    return eps;
}

/// Messages for the final aggregation step: current maximizers with
/// ε^final as the radius field.
inline std::vector<ComponentMessage> final_round(const ClientState& state, double upsilon) {
    const std::vector<double> eps = final_radius(state, upsilon);
    std::vector<ComponentMessage> messages;
    messages.reserve(state.model.k());
    for (std::size_t k = 0; k < state.model.k(); ++k) {
        ComponentMessage msg;
        msg.client_id = state.client_id;
        msg.component_idx = static_cast<int>(k);
        msg.maximizer = state.model.centroids[k];
        msg.eps = eps[k];
        msg.sample_count = static_cast<long long>(state.data.size());
        messages.push_back(std::move(msg));
    }
    return messages;
}

}  // namespace fedgem
