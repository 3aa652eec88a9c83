#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "fedgem/core.hpp"
#include "fedgem/gmm.hpp"

namespace fedgem {

/// Hard assignment by maximum responsibility; ties break toward the lowest
/// component index. argmax γ_k equals argmax of log π_k − ½||x−θ_k||².
inline std::vector<int> assign_labels(const Dataset& data, const LocalModel& model) {
    std::vector<int> labels(data.size());
    std::vector<double> log_pi(model.k());
    for (std::size_t k = 0; k < model.k(); ++k) log_pi[k] = std::log(model.weights[k]);
    for (std::size_t n = 0; n < data.size(); ++n) {
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < model.k(); ++k) {
            const double score = log_pi[k] - 0.5 * squared_distance(data.samples[n], model.centroids[k]);
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(k);
            }
        }
        labels[n] = best;
    }
    return labels;
}

/// Adjusted Rand Index (Hubert–Arabie) via the contingency table. 1 for
/// identical partitions up to relabeling; ~0 for independent partitions.
inline double ari(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
    if (true_labels.size() != pred_labels.size())
        throw InvalidValue("ari: label length mismatch");
    const std::size_t n = true_labels.size();
    if (n < 2) throw InvalidValue("ari: need at least 2 samples");

    std::map<std::pair<int, int>, long long> contingency;
    std::map<int, long long> row_sums, col_sums;
    for (std::size_t i = 0; i < n; ++i) {
        ++contingency[{true_labels[i], pred_labels[i]}];
        ++row_sums[true_labels[i]];
        ++col_sums[pred_labels[i]];
    }
    const auto choose2 = [](long long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };

    double sum_cells = 0.0;
    for (const auto& [key, cnt] : contingency) sum_cells += choose2(cnt);
    double sum_rows = 0.0;
    for (const auto& [key, cnt] : row_sums) sum_rows += choose2(cnt);
    double sum_cols = 0.0;
    for (const auto& [key, cnt] : col_sums) sum_cols += choose2(cnt);

    const double pairs = choose2(static_cast<long long>(n));
    const double expected = sum_rows * sum_cols / pairs;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (sum_cells - expected) / (max_index - expected);
}

/// Mean silhouette over samples, Euclidean distance, naive O(N²).
/// Singleton-cluster samples score 0. Throws if only one cluster is present.
inline double silhouette(const Dataset& data, const std::vector<int>& labels) {
    const std::size_t n = data.size();
    if (labels.size() != n) throw InvalidValue("silhouette: label length mismatch");

    std::map<int, std::size_t> cluster_sizes;
    for (int l : labels) ++cluster_sizes[l];
    if (cluster_sizes.size() < 2)
        throw UndefinedMetric("silhouette: needs at least 2 clusters");

    double total = 0.0;
    std::map<int, double> dist_sum;
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& [label, s] : dist_sum) s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            dist_sum[labels[j]] += distance(data.samples[i], data.samples[j]);
        }
        const std::size_t own_size = cluster_sizes[labels[i]];
        if (own_size == 1) continue;  // singleton scores 0

        const double a = dist_sum[labels[i]] / static_cast<double>(own_size - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, s] : dist_sum) {
            if (label == labels[i]) continue;
            b = std::min(b, s / static_cast<double>(cluster_sizes[label]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

struct ClientMetrics {
    int client_id = 0;
    double ari = 0.0;
    double silhouette = 0.0;
    long long n_samples = 0;
};

/// Aggregate evaluation report: N_g-weighted means of per-client metrics.
struct MetricsReport {
    double ari = 0.0;
    double silhouette = 0.0;
    int k_hat = 0;
    std::vector<ClientMetrics> per_client;
    double runtime_seconds = 0.0;
    bool degenerate_silhouette = false;  // some client had one populated cluster
};

inline MetricsReport weighted_report(std::vector<ClientMetrics> per_client, int k_hat,
                                     double runtime_seconds) {
    MetricsReport report;
    report.per_client = std::move(per_client);
    report.k_hat = k_hat;
    report.runtime_seconds = runtime_seconds;
    double mass = 0.0;
    for (const ClientMetrics& c : report.per_client) {
        const double w = static_cast<double>(c.n_samples);
        report.ari += w * c.ari;
        report.silhouette += w * c.silhouette;
        mass += w;
    }
    if (mass > 0.0) {
        report.ari /= mass;
        report.silhouette /= mass;
    }
    return report;
}

}  // namespace fedgem
