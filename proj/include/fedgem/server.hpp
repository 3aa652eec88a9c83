#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "fedgem/core.hpp"

namespace fedgem {

/// Disjoint sets over the flattened (client, component) index space.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

    std::size_t size() const { return parent_.size(); }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
};

/// Mapping (client, component) → super-cluster id, ids dense 0..K̂−1.
struct SuperClusterPartition {
    std::map<ComponentKey, int> assignment;
    int k_hat = 0;

    int id_of(int client, int component) const {
        return assignment.at(ComponentKey{client, component});
    }
};

/// Do two uncertainty balls touch? ||M̂₁ − M̂₂|| ≤ √ε₁ + √ε₂, boundary counts.
inline bool overlap(const ComponentMessage& m1, const ComponentMessage& m2) {
    return distance(m1.maximizer, m2.maximizer) <= std::sqrt(m1.eps) + std::sqrt(m2.eps);
}

inline double clip(double x, double lo, double hi) {
    return std::min(std::max(x, lo), hi);
}

/// Point in the intersection of two overlapping balls:
///   ν* = M̂₁ + clip(0.5, 1 − √ε₂/w, √ε₁/w) · (M̂₂ − M̂₁),  w = ||M̂₁ − M̂₂||.
/// The midpoint when admissible; symmetric under argument swap.
inline Vector consensus_point(const ComponentMessage& m1, const ComponentMessage& m2) {
    const double w = distance(m1.maximizer, m2.maximizer);
    if (w == 0.0) return m1.maximizer;
    const double c = clip(0.5, 1.0 - std::sqrt(m2.eps) / w, std::sqrt(m1.eps) / w);
    Vector nu(m1.maximizer.size());
    for (std::size_t j = 0; j < nu.size(); ++j)
        nu[j] = m1.maximizer[j] + c * (m2.maximizer[j] - m1.maximizer[j]);
    return nu;
}

namespace detail {

inline std::vector<ComponentMessage> sorted_messages(std::vector<ComponentMessage> messages) {
    std::sort(messages.begin(), messages.end(),
              [](const ComponentMessage& a, const ComponentMessage& b) {
                  return std::pair(a.client_id, a.component_idx) <
                         std::pair(b.client_id, b.component_idx);
              });
    return messages;
}

/// Cross-client overlapping pairs in canonical (i, j) order, i < j. Pairs
/// within one client are never candidates: a client's own components stay in
/// distinct super-clusters unless bridged through another client.
inline std::vector<std::pair<std::size_t, std::size_t>> overlap_pairs_pairwise(
    const std::vector<ComponentMessage>& msgs) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < msgs.size(); ++i)
        for (std::size_t j = i + 1; j < msgs.size(); ++j) {
            if (msgs[i].client_id == msgs[j].client_id) continue;
            if (overlap(msgs[i], msgs[j])) pairs.emplace_back(i, j);
        }
    return pairs;
}

/// Dense super-cluster ids from the overlap pairs, numbered by first
/// occurrence in message order.
inline SuperClusterPartition partition_from_pairs(
    const std::vector<ComponentMessage>& msgs,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    UnionFind uf(msgs.size());
    for (const auto& [i, j] : pairs) uf.unite(i, j);

    SuperClusterPartition part;
    std::map<std::size_t, int> root_id;
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        const std::size_t root = uf.find(i);
        auto [it, inserted] = root_id.try_emplace(root, part.k_hat);
        if (inserted) ++part.k_hat;
        part.assignment[ComponentKey{msgs[i].client_id, msgs[i].component_idx}] = it->second;
    }
    return part;
}

struct ServerResult {
    std::map<ComponentKey, Vector> updates;
    SuperClusterPartition partition;
};

/// Collaborative-training update from a pair list: each component's T-set is
/// its own maximizer plus one consensus point per overlap; the update is the
/// arithmetic mean of the set, which stays inside the component's ball.
inline ServerResult update_from_pairs(const std::vector<ComponentMessage>& msgs,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    ServerResult res;
    res.partition = partition_from_pairs(msgs, pairs);

    const std::size_t d = msgs.empty() ? 0 : msgs.front().maximizer.size();
    std::vector<Vector> sums(msgs.size());
    std::vector<std::size_t> counts(msgs.size(), 1);
    for (std::size_t i = 0; i < msgs.size(); ++i) sums[i] = msgs[i].maximizer;

    for (const auto& [i, j] : pairs) {
        const Vector nu = consensus_point(msgs[i], msgs[j]);
        for (std::size_t c = 0; c < d; ++c) {
            sums[i][c] += nu[c];
            sums[j][c] += nu[c];
        }
        ++counts[i];
        ++counts[j];
    }
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        Vector u = sums[i];
        for (double& x : u) x /= static_cast<double>(counts[i]);
        res.updates[ComponentKey{msgs[i].client_id, msgs[i].component_idx}] = std::move(u);
    }
    return res;
}

}  // namespace detail

/// One collaborative-training server round: pairwise overlap scan,
/// consensus-point T-sets, union-find super-clusters.
inline detail::ServerResult server_update(const std::vector<ComponentMessage>& messages) {
    const auto msgs = detail::sorted_messages(messages);
    return detail::update_from_pairs(msgs, detail::overlap_pairs_pairwise(msgs));
}

/// Final aggregation: components of one super-cluster all receive the
/// identical sample-count-weighted mean of their maximizers.
inline detail::ServerResult final_aggregate(const std::vector<ComponentMessage>& messages) {
    const auto msgs = detail::sorted_messages(messages);
    detail::ServerResult res;
    res.partition = detail::partition_from_pairs(msgs, detail::overlap_pairs_pairwise(msgs));

    const std::size_t d = msgs.empty() ? 0 : msgs.front().maximizer.size();
    std::vector<Vector> sums(static_cast<std::size_t>(res.partition.k_hat), Vector(d, 0.0));
    std::vector<double> mass(static_cast<std::size_t>(res.partition.k_hat), 0.0);
    for (const auto& m : msgs) {
        const int id = res.partition.id_of(m.client_id, m.component_idx);
        const double w = static_cast<double>(m.sample_count);
        for (std::size_t c = 0; c < d; ++c) sums[id][c] += w * m.maximizer[c];
        mass[id] += w;
    }
    for (int id = 0; id < res.partition.k_hat; ++id)
        for (std::size_t c = 0; c < d; ++c) sums[id][c] /= mass[id];

    for (const auto& m : msgs)
        res.updates[ComponentKey{m.client_id, m.component_idx}] =
            sums[res.partition.id_of(m.client_id, m.component_idx)];
    return res;
}

// ---------------------------------------------------------------------------
// KD-tree accelerated overlap scan. Same partition and updates as the
// pairwise path; only the candidate enumeration changes.

/// Static KD-tree over points, median split on the widest dimension.
class KdTree {
public:
    explicit KdTree(const std::vector<Vector>& points) : points_(points) {
        index_.resize(points.size());
        std::iota(index_.begin(), index_.end(), std::size_t{0});
        if (!points_.empty()) root_ = build(0, points_.size());
    }

    /// Indices of all points within `radius` of `query` (inclusive).
    std::vector<std::size_t> radius_search(const Vector& query, double radius) const {
        std::vector<std::size_t> hits;
        if (!points_.empty()) search(root_, query, radius * radius, hits);
        return hits;
    }

private:
    struct Node {
        std::size_t begin = 0, end = 0;   // leaf range into index_
        int split_dim = -1;
        double split_val = 0.0;
        int left = -1, right = -1;
    };

    static constexpr std::size_t kLeafSize = 8;

    int build(std::size_t begin, std::size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) return id;

        const std::size_t d = points_.front().size();
        int dim = 0;
        double best_spread = -1.0;
        for (std::size_t c = 0; c < d; ++c) {
            double lo = points_[index_[begin]][c], hi = lo;
            for (std::size_t i = begin + 1; i < end; ++i) {
                lo = std::min(lo, points_[index_[i]][c]);
                hi = std::max(hi, points_[index_[i]][c]);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                dim = static_cast<int>(c);
            }
        }
        if (best_spread <= 0.0) return id;  // all points identical: keep leaf

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             return points_[a][dim] < points_[b][dim];
                         });
        nodes_[id].split_dim = dim;
        nodes_[id].split_val = points_[index_[mid]][dim];
        nodes_[id].left = build(begin, mid);
        nodes_[id].right = build(mid, end);
        return id;
    }

    void search(int id, const Vector& query, double radius_sq,
                std::vector<std::size_t>& hits) const {
        const Node& node = nodes_[id];
        if (node.split_dim < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i)
                if (squared_distance(points_[index_[i]], query) <= radius_sq)
                    hits.push_back(index_[i]);
            return;
        }
        const double delta = query[node.split_dim] - node.split_val;
        if (delta <= 0.0 || delta * delta <= radius_sq) search(node.left, query, radius_sq, hits);
        if (delta >= 0.0 || delta * delta <= radius_sq) search(node.right, query, radius_sq, hits);
    }

    const std::vector<Vector>& points_;
    std::vector<std::size_t> index_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

namespace detail {

/// Overlap pairs via KD-tree neighbor queries. The search radius per query is
/// √ε_i plus the maximum √ε over all messages, so no overlapping pair can be
/// missed; candidates then pass the exact test.
inline std::vector<std::pair<std::size_t, std::size_t>> overlap_pairs_kdtree(
    const std::vector<ComponentMessage>& msgs) {
    std::vector<Vector> points;
    points.reserve(msgs.size());
    double max_radius = 0.0;
    for (const auto& m : msgs) {
        points.push_back(m.maximizer);
        max_radius = std::max(max_radius, std::sqrt(m.eps));
    }
    const KdTree tree(points);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        const double bound = std::sqrt(msgs[i].eps) + max_radius;
        for (std::size_t j : tree.radius_search(points[i], bound)) {
            if (j <= i) continue;
            if (msgs[i].client_id == msgs[j].client_id) continue;
            if (overlap(msgs[i], msgs[j])) pairs.emplace_back(i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

}  // namespace detail

/// KD-tree variant of server_update; identical partition, updates within
/// floating-point agreement of the pairwise path.
inline detail::ServerResult server_update_kdtree(const std::vector<ComponentMessage>& messages) {
    const auto msgs = detail::sorted_messages(messages);
    return detail::update_from_pairs(msgs, detail::overlap_pairs_kdtree(msgs));
}

}  // namespace fedgem
