#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "fedgem/server.hpp"
#include "support.hpp"

using namespace fedgem;

namespace {

ComponentMessage msg(int client, int comp, Vector center, double sqrt_eps, long long n = 100) {
    ComponentMessage m;
    m.client_id = client;
    m.component_idx = comp;
    m.maximizer = std::move(center);
    m.eps = sqrt_eps * sqrt_eps;
    m.sample_count = n;
    return m;
}

std::vector<ComponentMessage> random_messages(Rng& rng, std::size_t max_components = 50,
                                              double max_sqrt_eps = 1.5) {
    std::uniform_int_distribution<int> g_dist(2, 6);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<double> radius(0.0, max_sqrt_eps);
    std::uniform_int_distribution<long long> count(10, 500);
    const int clients = g_dist(rng);
    std::vector<ComponentMessage> out;
    std::uniform_int_distribution<int> comps(2, std::max(2, static_cast<int>(max_components) / clients));
    for (int g = 0; g < clients; ++g) {
        const int k_g = comps(rng);
        for (int k = 0; k < k_g; ++k)
            out.push_back(msg(g, k, {coord(rng), coord(rng)}, radius(rng), count(rng)));
    }
    return out;
}

}  // namespace

TEST_CASE("overlap test is inclusive at the boundary", "[server]") {
    CHECK_FALSE(overlap(msg(0, 0, {0.0}, 1.0), msg(1, 0, {3.0}, 1.0)));
    CHECK(overlap(msg(0, 0, {0.0}, 1.0), msg(1, 0, {2.0}, 1.0)));
    CHECK(overlap(msg(0, 0, {1.0, 2.0}, 0.0), msg(1, 0, {1.0, 2.0}, 0.0)));
}

TEST_CASE("consensus_point formula", "[server]") {
    const Vector mid = consensus_point(msg(0, 0, {0.0}, 3.0), msg(1, 0, {4.0}, 3.0));
    CHECK(mid[0] == Catch::Approx(2.0));

    const Vector edge = consensus_point(msg(0, 0, {0.0}, 1.0), msg(1, 0, {4.0}, 4.0));
    CHECK(edge[0] == Catch::Approx(1.0));  // clip(0.5, 0, 0.25) = 0.25

    const Vector same = consensus_point(msg(0, 0, {2.0, 2.0}, 1.0), msg(1, 0, {2.0, 2.0}, 1.0));
    CHECK(same == Vector{2.0, 2.0});
}

TEST_CASE("consensus_point stays in both balls, either argument order", "[server]") {
    Rng rng = make_rng(41, "server-nu");
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> radius(0.01, 4.0);
    int tested = 0;
    while (tested < 300) {
        const ComponentMessage m1 = msg(0, 0, {coord(rng), coord(rng)}, radius(rng));
        const ComponentMessage m2 = msg(1, 0, {coord(rng), coord(rng)}, radius(rng));
        if (!overlap(m1, m2)) continue;
        ++tested;
        for (const Vector& nu : {consensus_point(m1, m2), consensus_point(m2, m1)}) {
            CHECK(distance(nu, m1.maximizer) <= std::sqrt(m1.eps) + 1e-9);
            CHECK(distance(nu, m2.maximizer) <= std::sqrt(m2.eps) + 1e-9);
        }
    }
}

TEST_CASE("server_update with no overlaps is the identity", "[server]") {
    std::vector<ComponentMessage> messages = {
        msg(0, 0, {0.0, 0.0}, 0.5), msg(0, 1, {10.0, 0.0}, 0.5),
        msg(1, 0, {0.0, 10.0}, 0.5), msg(1, 1, {10.0, 10.0}, 0.5)};
    const auto res = server_update(messages);
    CHECK(res.partition.k_hat == 4);
    for (const auto& m : messages)
        CHECK(res.updates.at({m.client_id, m.component_idx}) == m.maximizer);
}

TEST_CASE("two overlapping singletons pull toward the shared consensus", "[server]") {
    const ComponentMessage m1 = msg(0, 0, {0.0}, 3.0);
    const ComponentMessage m2 = msg(1, 0, {4.0}, 3.0);
    const auto res = server_update({m1, m2});
    CHECK(res.partition.k_hat == 1);
    // T-set of each: own maximizer + ν* = midpoint (2); updates are the means
    CHECK(res.updates.at({0, 0})[0] == Catch::Approx(1.0));
    CHECK(res.updates.at({1, 0})[0] == Catch::Approx(3.0));
    // update stays within each ball
    CHECK(std::abs(res.updates.at({0, 0})[0] - 0.0) <= 3.0);
    CHECK(std::abs(res.updates.at({1, 0})[0] - 4.0) <= 3.0);
}

TEST_CASE("chain overlap merges transitively", "[server]") {
    // a–b and b–c overlap, a–c do not
    const auto res = server_update({msg(0, 0, {0.0}, 1.1), msg(1, 0, {2.0}, 1.1),
                                    msg(2, 0, {4.0}, 1.1)});
    CHECK(res.partition.k_hat == 1);
    CHECK(res.partition.id_of(0, 0) == res.partition.id_of(2, 0));
}

TEST_CASE("within-client components never merge directly", "[server]") {
    const auto res = server_update({msg(0, 0, {0.0}, 5.0), msg(0, 1, {1.0}, 5.0)});
    CHECK(res.partition.k_hat == 2);

    // but they can be bridged by another client's component
    const auto bridged = server_update(
        {msg(0, 0, {0.0}, 1.0), msg(0, 1, {2.0}, 1.0), msg(1, 0, {1.0}, 0.5)});
    CHECK(bridged.partition.k_hat == 1);
}

TEST_CASE("k_hat equals BFS component count on random instances", "[server]") {
    Rng rng = make_rng(42, "server-bfs");
    for (int trial = 0; trial < 100; ++trial) {
        const auto messages = random_messages(rng);
        const auto res = server_update(messages);
        CHECK(res.partition.k_hat == testsupport::bfs_component_count(messages));
        CHECK(res.partition.k_hat >= 1);
        CHECK(res.partition.k_hat <= static_cast<int>(messages.size()));
    }
}

TEST_CASE("aggregation is invariant to message ordering", "[server]") {
    Rng rng = make_rng(43, "server-order");
    for (int trial = 0; trial < 30; ++trial) {
        auto messages = random_messages(rng, 24);
        const auto res1 = server_update(messages);
        std::shuffle(messages.begin(), messages.end(), rng);
        const auto res2 = server_update(messages);
        CHECK(res1.partition.assignment == res2.partition.assignment);
        CHECK(res1.partition.k_hat == res2.partition.k_hat);
        CHECK(res1.updates == res2.updates);
    }
}

TEST_CASE("partition is stable under client relabeling", "[server]") {
    Rng rng = make_rng(44, "server-relabel");
    const auto messages = random_messages(rng, 24);
    int max_client = 0;
    for (const auto& m : messages) max_client = std::max(max_client, m.client_id);

    auto relabeled = messages;
    for (auto& m : relabeled) m.client_id = max_client - m.client_id;

    const auto res1 = server_update(messages);
    const auto res2 = server_update(relabeled);
    CHECK(res1.partition.k_hat == res2.partition.k_hat);
    // same grouping up to id renaming
    std::map<int, int> rename;
    for (const auto& [key, id] : res1.partition.assignment) {
        const int id2 = res2.partition.id_of(max_client - key.client_id, key.component_idx);
        auto [it, inserted] = rename.try_emplace(id, id2);
        CHECK(it->second == id2);
    }
}

TEST_CASE("final_aggregate weighted consensus", "[server]") {
    // singleton keeps its own maximizer
    const auto lone = final_aggregate({msg(0, 0, {1.0}, 0.1), msg(1, 0, {9.0}, 0.1)});
    CHECK(lone.partition.k_hat == 2);
    CHECK(lone.updates.at({0, 0}) == Vector{1.0});

    // two members: sample-count-weighted mean
    const auto merged = final_aggregate(
        {msg(0, 0, {0.0}, 2.1, 100), msg(1, 0, {4.0}, 2.1, 300)});
    CHECK(merged.partition.k_hat == 1);
    CHECK(merged.updates.at({0, 0})[0] == Catch::Approx(3.0));
    CHECK(merged.updates.at({1, 0})[0] == Catch::Approx(3.0));
}

TEST_CASE("final_aggregate members share bit-identical centroids", "[server]") {
    Rng rng = make_rng(45, "server-consensus");
    const auto messages = random_messages(rng);
    const auto res = final_aggregate(messages);
    std::map<int, Vector> rep;
    for (const auto& [key, v] : res.updates) {
        const int id = res.partition.id_of(key.client_id, key.component_idx);
        auto [it, inserted] = rep.try_emplace(id, v);
        CHECK(it->second == v);
    }
}

TEST_CASE("final_aggregate idempotent in the converged regime", "[server]") {
    Rng rng = make_rng(46, "server-idem");
    for (int trial = 0; trial < 50; ++trial) {
        // small radii relative to typical separations, as after convergence
        const auto messages = random_messages(rng, 40, 0.6);
        const auto first = final_aggregate(messages);
        auto fed_back = messages;
        for (auto& m : fed_back)
            m.maximizer = first.updates.at({m.client_id, m.component_idx});
        const auto second = final_aggregate(fed_back);
        CHECK(second.partition.k_hat == first.partition.k_hat);
        CHECK(second.updates == first.updates);
    }
}

TEST_CASE("kdtree radius search returns exactly the in-range points", "[server]") {
    Rng rng = make_rng(47, "server-kd");
    std::uniform_real_distribution<double> coord(-20.0, 20.0);
    std::vector<Vector> points(500, Vector(3));
    for (auto& p : points)
        for (double& x : p) x = coord(rng);
    const KdTree tree(points);
    for (int q = 0; q < 50; ++q) {
        Vector query(3);
        for (double& x : query) x = coord(rng);
        const double radius = 5.0;
        auto hits = tree.radius_search(query, radius);
        std::sort(hits.begin(), hits.end());
        std::vector<std::size_t> expected;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (squared_distance(points[i], query) <= radius * radius) expected.push_back(i);
        CHECK(hits == expected);
    }
}

TEST_CASE("kdtree server path reproduces the pairwise path", "[server]") {
    Rng rng = make_rng(48, "server-kd-eq");
    for (int trial = 0; trial < 200; ++trial) {
        const auto messages = random_messages(rng);
        const auto pairwise = server_update(messages);
        const auto kd = server_update_kdtree(messages);
        CHECK(pairwise.partition.assignment == kd.partition.assignment);
        CHECK(pairwise.partition.k_hat == kd.partition.k_hat);
        REQUIRE(pairwise.updates.size() == kd.updates.size());
        for (const auto& [key, v] : pairwise.updates) {
            const Vector& w = kd.updates.at(key);
            for (std::size_t j = 0; j < v.size(); ++j)
                CHECK(v[j] == Catch::Approx(w[j]).margin(1e-9));
        }
    }

    // disjoint balls: identical trivial output on both paths
    const std::vector<ComponentMessage> disjoint = {msg(0, 0, {0.0, 0.0}, 0.1),
                                                    msg(1, 0, {5.0, 5.0}, 0.1)};
    CHECK(server_update_kdtree(disjoint).updates == server_update(disjoint).updates);
}

TEST_CASE("union-find basics", "[server]") {
    UnionFind uf(5);
    CHECK(uf.find(3) == 3);
    uf.unite(0, 1);
    uf.unite(3, 4);
    CHECK(uf.find(0) == uf.find(1));
    CHECK(uf.find(3) == uf.find(4));
    CHECK(uf.find(0) != uf.find(3));
    CHECK(uf.find(uf.find(2)) == uf.find(2));
    uf.unite(1, 4);
    CHECK(uf.find(0) == uf.find(3));
}
