#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedgem/errors.hpp"

namespace fedgem {

/// Dense point / parameter vector in feature space.
using Vector = std::vector<double>;

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require_finite(const Vector& v, const char* what) {
    if (!all_finite(v)) throw InvalidValue(std::string(what) + ": non-finite entry");
}

/// Σ_i (a_i − b_i)². Symmetric, non-negative.
inline double squared_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("squared_distance: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double distance(const Vector& a, const Vector& b) {
    return std::sqrt(squared_distance(a, b));
}

/// Σ w_i x_i / Σ w_i. Weights must be non-negative with positive total.
inline Vector weighted_mean(const std::vector<Vector>& points, const std::vector<double>& weights) {
    if (points.empty() || points.size() != weights.size())
        throw InvalidValue("weighted_mean: points/weights size mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw InvalidValue("weighted_mean: bad weight");
        total += w;
    }
    if (total <= 0.0) throw InvalidValue("weighted_mean: zero total weight");
    Vector out(points.front().size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != out.size()) throw DimensionMismatch("weighted_mean: ragged points");
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += weights[i] * points[i][j];
    }
    for (double& x : out) x /= total;
    return out;
}

/// Local samples plus optional ground-truth labels (metrics only).
struct Dataset {
    std::vector<Vector> samples;
    std::optional<std::vector<int>> labels;

    std::size_t size() const { return samples.size(); }
    std::size_t dim() const { return samples.empty() ? 0 : samples.front().size(); }

    void validate() const {
        const std::size_t d = dim();
        for (const Vector& x : samples) {
            if (x.size() != d) throw DimensionMismatch("Dataset: ragged samples");
            require_finite(x, "Dataset sample");
        }
        if (labels) {
            if (labels->size() != samples.size())
                throw InvalidValue("Dataset: labels/sample count mismatch");
            for (int l : *labels)
                if (l < 0) throw InvalidValue("Dataset: negative label");
        }
    }
};

/// A client's mixture: K_g centroids with fixed weights π (never re-estimated).
struct LocalModel {
    std::vector<Vector> centroids;
    std::vector<double> weights;

    std::size_t k() const { return centroids.size(); }
    std::size_t dim() const { return centroids.empty() ? 0 : centroids.front().size(); }

    static LocalModel equal_weights(std::vector<Vector> centroids) {
        LocalModel m;
        m.weights.assign(centroids.size(), 1.0 / static_cast<double>(centroids.size()));
        m.centroids = std::move(centroids);
        return m;
    }

    void validate() const {
        if (centroids.size() < 2) throw InvalidValue("LocalModel: K_g >= 2 required");
        if (weights.size() != centroids.size())
            throw InvalidValue("LocalModel: weights/centroids size mismatch");
        const std::size_t d = dim();
        double total = 0.0;
        for (double w : weights) {
            if (!(w > 0.0) || !std::isfinite(w)) throw InvalidValue("LocalModel: weights must be > 0");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw InvalidValue("LocalModel: weights must sum to 1");
        for (const Vector& c : centroids) {
            if (c.size() != d) throw DimensionMismatch("LocalModel: ragged centroids");
            require_finite(c, "LocalModel centroid");
        }
    }
};

/// The only client→server payload: component maximizer plus squared radius.
struct ComponentMessage {
    int client_id = 0;
    int component_idx = 0;
    Vector maximizer;
    double eps = 0.0;  // squared-distance units
    long long sample_count = 0;

    void validate() const {
        if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidValue("ComponentMessage: eps must be >= 0");
        if (client_id < 0 || component_idx < 0)
            throw InvalidValue("ComponentMessage: negative id");
        if (sample_count <= 0) throw InvalidValue("ComponentMessage: sample_count must be > 0");
        require_finite(maximizer, "ComponentMessage maximizer");
    }
};

/// Addresses one component of one client.
struct ComponentKey {
    int client_id = 0;
    int component_idx = 0;
    auto operator<=>(const ComponentKey&) const = default;
};

}  // namespace fedgem
