#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "fedgem/core.hpp"
#include "fedgem/rng.hpp"

namespace fedgem {

/// Posterior responsibilities γ, one row per sample, one column per component.
/// Rows sum to 1.
struct Responsibilities {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    double operator()(std::size_t n, std::size_t k) const { return data[n * cols + k]; }
    double& operator()(std::size_t n, std::size_t k) { return data[n * cols + k]; }

    double column_mass(std::size_t k) const {
        double s = 0.0;
        for (std::size_t n = 0; n < rows; ++n) s += (*this)(n, k);
        return s;
    }

    void validate() const {
        for (std::size_t n = 0; n < rows; ++n) {
            double s = 0.0;
            for (std::size_t k = 0; k < cols; ++k) {
                const double g = (*this)(n, k);
                if (!(g >= 0.0 && g <= 1.0 + 1e-12))
                    throw InvalidValue("Responsibilities: entry outside [0,1]");
                s += g;
            }
            if (std::abs(s - 1.0) > 1e-9)
                throw InvalidValue("Responsibilities: row does not sum to 1");
        }
    }
};

inline constexpr double kLogTwoPi = 1.8378770664093454;  // log(2*pi)

/// log of the isotropic Gaussian density with identity covariance.
inline double log_gaussian_iso(const Vector& x, const Vector& mean) {
    return -0.5 * static_cast<double>(x.size()) * kLogTwoPi - 0.5 * squared_distance(x, mean);
}

/// E-step: γ_{nk} = π_k exp(−½||x_n−θ_k||²) / Σ_j π_j exp(−½||x_n−θ_j||²).
/// Computed in log domain with per-row max subtraction so distant points do
/// not underflow.
inline Responsibilities e_step(const Dataset& data, const LocalModel& model) {
    const std::size_t n_samples = data.size();
    const std::size_t k = model.k();
    if (n_samples == 0) throw InvalidValue("e_step: empty dataset");
    if (data.dim() != model.dim()) throw DimensionMismatch("e_step: data/model dimension");

    std::vector<double> log_pi(k);
    for (std::size_t j = 0; j < k; ++j) log_pi[j] = std::log(model.weights[j]);

    Responsibilities resp;
    resp.rows = n_samples;
    resp.cols = k;
    resp.data.resize(n_samples * k);

    std::vector<double> logits(k);
    for (std::size_t n = 0; n < n_samples; ++n) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            // the normalizing constant is shared across components and cancels
            logits[j] = log_pi[j] - 0.5 * squared_distance(data.samples[n], model.centroids[j]);
            row_max = std::max(row_max, logits[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) denom += std::exp(logits[j] - row_max);
        for (std::size_t j = 0; j < k; ++j)
            resp(n, j) = std::exp(logits[j] - row_max) / denom;
    }
    return resp;
}

inline constexpr double kEmptyComponentFloor = 1e-10;  // relative to N_g

/// M-step for one component: the responsibility-weighted sample mean.
inline Vector m_step(const Dataset& data, const Responsibilities& resp, std::size_t k) {
    const std::size_t n_samples = data.size();
    const double mass = resp.column_mass(k);
    if (mass < kEmptyComponentFloor * static_cast<double>(n_samples))
        throw EmptyComponent(static_cast<int>(k),
                             "m_step: component " + std::to_string(k) + " has no responsibility mass");
    Vector out(data.dim(), 0.0);
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double g = resp(n, k);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += g * data.samples[n][j];
    }
    for (double& x : out) x /= mass;
    return out;
}

/// The k-th summand of the finite-sample expected complete-data
/// log-likelihood: Σ_n γ_{nk} log(π_k φ(x_n|θ)). Includes log π_k and the
/// Gaussian normalizing constant, so monotonicity statements are literal.
inline double component_objective(const Vector& theta, const Dataset& data,
                                  const Responsibilities& resp, std::size_t k, double pi_k) {
    const double log_pi = std::log(pi_k);
    double q = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const double g = resp(n, k);
        if (g == 0.0) continue;
        q += g * (log_pi + log_gaussian_iso(data.samples[n], theta));
    }
    return q;
}

/// Marginal log-likelihood Σ_n log Σ_k π_k φ(x_n|θ_k), log-domain.
inline double log_likelihood(const Dataset& data, const LocalModel& model) {
    const std::size_t k = model.k();
    std::vector<double> log_pi(k);
    for (std::size_t j = 0; j < k; ++j) log_pi[j] = std::log(model.weights[j]);
    double total = 0.0;
    std::vector<double> logits(k);
    for (const Vector& x : data.samples) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            logits[j] = log_pi[j] + log_gaussian_iso(x, model.centroids[j]);
            row_max = std::max(row_max, logits[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += std::exp(logits[j] - row_max);
        total += row_max + std::log(s);
    }
    return total;
}

/// k-means++ seeding with the standard D² weighting. Deterministic given rng.
inline std::vector<Vector> kmeanspp_init(const Dataset& data, std::size_t k, Rng& rng) {
    const std::size_t n = data.size();
    if (n < k) throw DegenerateData("kmeanspp_init: fewer samples than seeds");

    std::vector<Vector> centroids;
    centroids.reserve(k);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centroids.push_back(data.samples[first(rng)]);

    std::vector<double> d2(n);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vector& c : centroids)
                best = std::min(best, squared_distance(data.samples[i], c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0)
            throw DegenerateData("kmeanspp_init: fewer distinct points than seeds");
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t pick = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (target <= acc && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        centroids.push_back(data.samples[pick]);
    }
    return centroids;
}

/// Centralized EM baseline: T alternations of e_step/m_step from a k-means++
/// start, equal fixed weights. Log-likelihood is non-decreasing across
/// iterations.
inline LocalModel centralized_em(const Dataset& data, std::size_t k, std::size_t t_iters, Rng& rng) {
    if (data.size() < k) throw DegenerateData("centralized_em: fewer samples than components");
    LocalModel model = LocalModel::equal_weights(kmeanspp_init(data, k, rng));
    for (std::size_t t = 0; t < t_iters; ++t) {
        const Responsibilities resp = e_step(data, model);
        for (std::size_t j = 0; j < k; ++j) model.centroids[j] = m_step(data, resp, j);
    }
    return model;
}

}  // namespace fedgem
