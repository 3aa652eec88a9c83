#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fedgem/core.hpp"
#include "fedgem/rng.hpp"

namespace fedgem {

/// Synthetic blob layout: K unit-variance isotropic Gaussian clusters with a
/// controlled minimum center separation.
struct BlobSpec {
    int k = 2;
    int dim = 2;
    int n_total = 100;
    double r_min = 1.0;
    double box_half_width = 0.0;  // 0 → max(10, 2·r_min·K^{1/d})

    void validate() const {
        if (k < 2) throw InvalidValue("BlobSpec: K >= 2 required");
        if (dim < 1) throw InvalidValue("BlobSpec: dim >= 1 required");
        if (n_total < k) throw InvalidValue("BlobSpec: n_total >= K required");
        if (!(r_min > 0.0)) throw InvalidValue("BlobSpec: r_min > 0 required");
    }

    double effective_half_width() const {
        if (box_half_width > 0.0) return box_half_width;
        return std::max(10.0, 2.0 * r_min * std::pow(static_cast<double>(k),
                                                     1.0 / static_cast<double>(dim)));
    }
};

enum class PartitionMode { Nominal, ClientImbalance, ClusterImbalance };

/// How samples are spread across clients and local clusters.
struct PartitionSpec {
    int num_clients = 2;
    PartitionMode mode = PartitionMode::Nominal;
    std::vector<double> client_fractions;  // required for ClientImbalance

    void validate() const {
        if (num_clients < 2) throw InvalidValue("PartitionSpec: G >= 2 required");
        if (mode == PartitionMode::ClientImbalance) {
            if (client_fractions.size() != static_cast<std::size_t>(num_clients))
                throw InvalidValue("PartitionSpec: client_fractions length != G");
            double total = 0.0;
            for (double f : client_fractions) {
                if (!(f > 0.0)) throw InvalidValue("PartitionSpec: fractions must be > 0");
                total += f;
            }
            if (std::abs(total - 1.0) > 1e-9)
                throw InvalidValue("PartitionSpec: fractions must sum to 1");
        }
    }
};

struct BlobData {
    Dataset data;                 // labels = generating component
    std::vector<Vector> centers;  // ground-truth cluster centers
};

namespace detail {

inline Vector random_unit_vector(int dim, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(dim);
    double norm_sq = 0.0;
    do {
        norm_sq = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            norm_sq += x * x;
        }
    } while (norm_sq == 0.0);
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return v;
}

inline double min_gap(const Vector& c, const std::vector<Vector>& centers) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& other : centers) best = std::min(best, distance(c, other));
    return best;
}

}  // namespace detail

/// Place K cluster centers: K−1 by rejection sampling inside the box (all
/// pairwise gaps ≥ r_min), then the last one at distance exactly r_min from a
/// random existing center, re-checking the remaining gaps.
inline std::vector<Vector> place_centers(const BlobSpec& spec, Rng& rng) {
    spec.validate();
    constexpr int kMaxAttempts = 20000;
    const double half = spec.effective_half_width();
    std::uniform_real_distribution<double> box(-half, half);

    std::vector<Vector> centers;
    centers.reserve(spec.k);
    for (int i = 0; i + 1 < spec.k; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            Vector c(spec.dim);
            for (double& x : c) x = box(rng);
            if (centers.empty() || detail::min_gap(c, centers) >= spec.r_min) {
                centers.push_back(std::move(c));
                placed = true;
            }
        }
        if (!placed) throw PlacementFailure("place_centers: rejection sampling exhausted");
    }

    // force one pair to sit at exactly r_min
    std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const Vector& anchor = centers[pick(rng)];
        const Vector dir = detail::random_unit_vector(spec.dim, rng);
        Vector c(spec.dim);
        for (int j = 0; j < spec.dim; ++j) c[j] = anchor[j] + spec.r_min * dir[j];
        if (detail::min_gap(c, centers) >= spec.r_min * (1.0 - 1e-12)) {
            centers.push_back(std::move(c));
            return centers;
        }
    }
    throw PlacementFailure("place_centers: could not place the exact-gap center");
}

/// Draw `count` unit-variance samples around `center`.
inline void sample_cluster(const Vector& center, int count, int label, Rng& rng,
                           Dataset& out) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
        Vector x(center.size());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = center[j] + gauss(rng);
        out.samples.push_back(std::move(x));
        out.labels->push_back(label);
    }
}

/// Isotropic Gaussian blobs with min center separation r_min and at least one
/// pair exactly r_min apart. Samples split as evenly as possible across the
/// K clusters; labels record the generating component.
inline BlobData make_blobs(const BlobSpec& spec, Rng& rng) {
    BlobData blob;
    blob.centers = place_centers(spec, rng);
    blob.data.labels.emplace();
    const int base = spec.n_total / spec.k;
    const int extra = spec.n_total % spec.k;
    for (int c = 0; c < spec.k; ++c)
        sample_cluster(blob.centers[c], base + (c < extra ? 1 : 0), c, rng, blob.data);
    blob.data.validate();
    return blob;
}

/// One client's slice of the federation: which global clusters it holds, at
/// what proportions, and its drawn dataset (labels = global cluster ids).
struct ClientPartition {
    Dataset data;
    std::vector<int> cluster_ids;
    std::vector<double> cluster_proportions;  // aligned with cluster_ids, sums to 1
    int n_total = 0;
};

namespace detail {

/// Random local cluster sets: each client draws K_g uniform in [2, K−1], then
/// K_g distinct clusters; resampled until every global cluster is covered.
inline std::vector<std::vector<int>> assign_clusters(int k, int g, Rng& rng) {
    if (k < 3) throw InvalidValue("assign_clusters: K >= 3 required for 2 <= K_g < K");
    constexpr int kMaxAttempts = 10000;
    std::uniform_int_distribution<int> kg_dist(2, k - 1);
    std::vector<int> all(k);
    std::iota(all.begin(), all.end(), 0);

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<std::vector<int>> sets(g);
        std::vector<bool> covered(k, false);
        for (int c = 0; c < g; ++c) {
            const int k_g = kg_dist(rng);
            std::vector<int> pool = all;
            for (int pickn = 0; pickn < k_g; ++pickn) {
                std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
                const std::size_t idx = pick(rng);
                sets[c].push_back(pool[idx]);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
            }
            std::sort(sets[c].begin(), sets[c].end());
            for (int id : sets[c]) covered[id] = true;
        }
        if (std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }))
            return sets;
    }
    throw PlacementFailure("assign_clusters: could not cover all clusters");
}

/// Largest-remainder rounding of proportions to integer counts summing to n,
/// with every entry at least 1.
inline std::vector<int> proportional_counts(const std::vector<double>& props, int n) {
    const std::size_t m = props.size();
    std::vector<int> counts(m);
    std::vector<std::pair<double, std::size_t>> remainders(m);
    int assigned = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double exact = props[i] * n;
        counts[i] = static_cast<int>(std::floor(exact));
        remainders[i] = {exact - std::floor(exact), i};
        assigned += counts[i];
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                  return a.first != b.first ? a.first > b.first : a.second < b.second;
              });
    for (int i = 0; i < n - assigned; ++i) ++counts[remainders[i % m].second];
    // no empty local cluster
    for (std::size_t i = 0; i < m; ++i) {
        while (counts[i] == 0) {
            const auto max_it = std::max_element(counts.begin(), counts.end());
            if (*max_it <= 1) throw InvalidValue("proportional_counts: budget too small");
            --*max_it;
            ++counts[i];
        }
    }
    return counts;
}

}  // namespace detail

/// Draw a client's local dataset: counts per local cluster follow the stored
/// proportions, samples drawn fresh from each cluster's Gaussian.
inline Dataset sample_client_data(const std::vector<Vector>& centers,
                                  const ClientPartition& part, int n_total, Rng& rng) {
    Dataset data;
    data.labels.emplace();
    const std::vector<int> counts = detail::proportional_counts(part.cluster_proportions, n_total);
    for (std::size_t i = 0; i < part.cluster_ids.size(); ++i)
        sample_cluster(centers[part.cluster_ids[i]], counts[i], part.cluster_ids[i], rng, data);
    data.validate();
    return data;
}

/// Split the generation budget of `data` across G clients. Cluster sets are
/// assigned randomly with 2 ≤ K_g < K and full coverage; samples are drawn
/// fresh per (client, cluster) rather than splitting the pool.
inline std::vector<ClientPartition> partition_clients(const Dataset& data,
                                                      const std::vector<Vector>& centers,
                                                      const PartitionSpec& pspec, Rng& rng) {
    pspec.validate();
    const int g = pspec.num_clients;
    const int k = static_cast<int>(centers.size());
    const int n_total = static_cast<int>(data.size());

    const auto sets = detail::assign_clusters(k, g, rng);

    // client budgets
    std::vector<int> budgets(g);
    if (pspec.mode == PartitionMode::ClientImbalance) {
        budgets = detail::proportional_counts(pspec.client_fractions, n_total);
    } else {
        const int base = n_total / g;
        const int extra = n_total % g;
        for (int c = 0; c < g; ++c) budgets[c] = base + (c < extra ? 1 : 0);
    }

    std::vector<ClientPartition> clients(g);
    for (int c = 0; c < g; ++c) {
        ClientPartition& part = clients[c];
        part.cluster_ids = sets[c];
        part.n_total = budgets[c];
        const std::size_t k_g = part.cluster_ids.size();
        if (pspec.mode == PartitionMode::ClusterImbalance) {
            // uniform on the simplex
            std::exponential_distribution<double> expo(1.0);
            part.cluster_proportions.resize(k_g);
            double total = 0.0;
            for (double& p : part.cluster_proportions) {
                p = expo(rng);
                total += p;
            }
            for (double& p : part.cluster_proportions) p /= total;
        } else {
            part.cluster_proportions.assign(k_g, 1.0 / static_cast<double>(k_g));
        }
        part.data = sample_client_data(centers, part, part.n_total, rng);
    }
    return clients;
}

/// One row per sample: features..., label, client_id.
inline void export_csv(const std::vector<ClientPartition>& clients, std::ostream& os) {
    for (std::size_t c = 0; c < clients.size(); ++c) {
        const Dataset& data = clients[c].data;
        for (std::size_t n = 0; n < data.size(); ++n) {
            for (double x : data.samples[n]) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.17g", x);
                os << buf << ',';
            }
            os << (*data.labels)[n] << ',' << c << '\n';
        }
    }
}

}  // namespace fedgem
