#pragma once

// Shared test helpers and independent oracles. Everything here is coded
// against the definitions, not against the library's implementation path.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "fedgem/core.hpp"
#include "fedgem/gmm.hpp"
#include "fedgem/radius.hpp"
#include "fedgem/rng.hpp"

namespace testsupport {

using fedgem::Dataset;
using fedgem::Rng;
using fedgem::Vector;

/// Random dataset + responsibilities + previous iterate for radius-instance
/// generation. The previous iterate is kept a real step away from the
/// maximizer so ε* is well separated from rounding noise.
struct RadiusFixture {
    Dataset data;
    fedgem::Responsibilities resp;
    Vector theta_prev;
    Vector maximizer;
    fedgem::RadiusInstance instance;
    std::size_t component = 0;
};

inline RadiusFixture make_radius_fixture(Rng& rng, std::size_t max_n = 50, std::size_t max_d = 5) {
    std::uniform_int_distribution<std::size_t> n_dist(2, max_n);
    std::uniform_int_distribution<std::size_t> d_dist(1, max_d);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> gamma(0.05, 1.0);
    std::uniform_real_distribution<double> step_len(0.1, 2.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    RadiusFixture fx;
    const std::size_t n = n_dist(rng);
    const std::size_t d = d_dist(rng);
    for (std::size_t i = 0; i < n; ++i) {
        Vector x(d);
        for (double& v : x) v = coord(rng);
        fx.data.samples.push_back(std::move(x));
    }
    // two columns so the fixture is a genuine multi-component setup
    fx.resp.rows = n;
    fx.resp.cols = 2;
    fx.resp.data.resize(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = gamma(rng);
        fx.resp(i, 0) = g;
        fx.resp(i, 1) = 1.0 - g;
    }
    fx.component = 0;
    fx.maximizer = fedgem::m_step(fx.data, fx.resp, fx.component);

    Vector dir(d);
    double norm_sq = 0.0;
    for (double& v : dir) {
        v = gauss(rng);
        norm_sq += v * v;
    }
    const double len = step_len(rng) / std::sqrt(std::max(norm_sq, 1e-300));
    fx.theta_prev = fx.maximizer;
    for (std::size_t j = 0; j < d; ++j) fx.theta_prev[j] += len * dir[j];

    fx.instance = fedgem::build_instance(fx.data, fx.resp, fx.component, fx.theta_prev, fx.maximizer);
    return fx;
}

/// Connected components of the cross-client overlap graph by BFS; the
/// union-find path in the server must agree with this count.
inline int bfs_component_count(const std::vector<fedgem::ComponentMessage>& messages) {
    const std::size_t n = messages.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (messages[i].client_id == messages[j].client_id) continue;
            if (fedgem::overlap(messages[i], messages[j])) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
        }
    std::vector<bool> seen(n, false);
    int components = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++components;
        std::queue<std::size_t> q;
        q.push(s);
        seen[s] = true;
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (std::size_t v : adj[u])
                if (!seen[v]) {
                    seen[v] = true;
                    q.push(v);
                }
        }
    }
    return components;
}

/// Brute-force pair-counting ARI: classify every sample pair as
/// together/apart in each labeling and apply the Hubert–Arabie correction.
inline double ari_pair_oracle(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double tt = 0, ta = 0, at = 0, aa = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same_a = a[i] == a[j];
            const bool same_b = b[i] == b[j];
            if (same_a && same_b) ++tt;
            else if (same_a) ++ta;
            else if (same_b) ++at;
            else ++aa;
        }
    const double denom = (tt + ta) * (ta + aa) + (tt + at) * (at + aa);
    if (denom == 0.0) return 1.0;
    return 2.0 * (tt * aa - ta * at) / denom;
}

/// Independent O(N²) silhouette, coded directly from the (b−a)/max(a,b)
/// definition with per-pair distance recomputation.
inline double silhouette_reference(const Dataset& data, const std::vector<int>& labels) {
    const std::size_t n = data.size();
    std::set<int> distinct(labels.begin(), labels.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, double> sums;
        std::map<int, int> counts;
        for (int l : distinct) {
            sums[l] = 0.0;
            counts[l] = 0;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[labels[j]] += std::sqrt(fedgem::squared_distance(data.samples[i], data.samples[j]));
            ++counts[labels[j]];
        }
        const int own_others = counts[labels[i]];  // own cluster size minus self
        double s = 0.0;
        if (own_others > 0) {
            const double a_i = sums[labels[i]] / own_others;
            double b_i = std::numeric_limits<double>::infinity();
            for (int l : distinct) {
                if (l == labels[i] || counts[l] == 0) continue;
                b_i = std::min(b_i, sums[l] / counts[l]);
            }
            const double m = std::max(a_i, b_i);
            s = m > 0.0 ? (b_i - a_i) / m : 0.0;
        }
        total += s;  // singleton clusters contribute 0
    }
    return total / static_cast<double>(n);
}

}  // namespace testsupport
