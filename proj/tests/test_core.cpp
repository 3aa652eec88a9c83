#include <catch2/catch_amalgamated.hpp>

#include "fedgem/core.hpp"
#include "fedgem/rng.hpp"

using namespace fedgem;

TEST_CASE("squared_distance basics", "[core]") {
    CHECK(squared_distance({0, 0}, {0, 0}) == 0.0);
    CHECK(squared_distance({0, 0}, {3, 4}) == 25.0);
    CHECK(squared_distance({1, 2}, {4, 6}) == 25.0);
    CHECK_THROWS_AS(squared_distance({1, 2}, {1, 2, 3}), DimensionMismatch);
}

TEST_CASE("squared_distance symmetry and identity", "[core]") {
    Rng rng = make_rng(7, "core-sym");
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        Vector a(3), b(3);
        for (auto* v : {&a, &b})
            for (double& x : *v) x = coord(rng);
        CHECK(squared_distance(a, b) == squared_distance(b, a));
        CHECK(squared_distance(a, a) == 0.0);
        CHECK(squared_distance(a, b) >= 0.0);
    }
}

TEST_CASE("weighted_mean basics", "[core]") {
    CHECK(weighted_mean({{0.0}, {4.0}}, {1.0, 1.0})[0] == 2.0);
    CHECK(weighted_mean({{0.0}, {4.0}}, {1.0, 3.0})[0] == 3.0);
    CHECK(weighted_mean({{5.0}}, {2.0})[0] == 5.0);
    CHECK_THROWS_AS(weighted_mean({{1.0}, {2.0}}, {0.0, 0.0}), InvalidValue);
    CHECK_THROWS_AS(weighted_mean({{1.0}, {2.0}}, {-1.0, 2.0}), InvalidValue);
}

TEST_CASE("weighted_mean is invariant to uniform weight scaling", "[core]") {
    Rng rng = make_rng(11, "core-wm");
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> weight(0.01, 4.0);
    std::uniform_real_distribution<double> scale(0.1, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vector> pts(5, Vector(2));
        std::vector<double> w(5);
        for (auto& p : pts)
            for (double& x : p) x = coord(rng);
        for (double& x : w) x = weight(rng);
        const double c = scale(rng);
        std::vector<double> scaled = w;
        for (double& x : scaled) x *= c;
        const Vector m1 = weighted_mean(pts, w);
        const Vector m2 = weighted_mean(pts, scaled);
        for (std::size_t j = 0; j < m1.size(); ++j)
            CHECK(m1[j] == Catch::Approx(m2[j]).margin(1e-12));
    }
}

TEST_CASE("validation rejects invariant violations", "[core]") {
    Dataset data;
    data.samples = {{1.0, 2.0}, {3.0}};
    CHECK_THROWS_AS(data.validate(), DimensionMismatch);

    Dataset nan_data;
    nan_data.samples = {{std::nan("")}};
    CHECK_THROWS_AS(nan_data.validate(), InvalidValue);

    Dataset labeled;
    labeled.samples = {{1.0}, {2.0}};
    labeled.labels = std::vector<int>{0};
    CHECK_THROWS_AS(labeled.validate(), InvalidValue);

    LocalModel one_comp;
    one_comp.centroids = {{0.0}};
    one_comp.weights = {1.0};
    CHECK_THROWS_AS(one_comp.validate(), InvalidValue);

    LocalModel bad_weights;
    bad_weights.centroids = {{0.0}, {1.0}};
    bad_weights.weights = {0.7, 0.7};
    CHECK_THROWS_AS(bad_weights.validate(), InvalidValue);

    ComponentMessage msg;
    msg.maximizer = {0.0};
    msg.eps = -1.0;
    msg.sample_count = 10;
    CHECK_THROWS_AS(msg.validate(), InvalidValue);
}

TEST_CASE("seed fan-out is stable and label-separated", "[core]") {
    CHECK(hash_seed(42, "client", 0) == hash_seed(42, "client", 0));
    CHECK(hash_seed(42, "client", 0) != hash_seed(42, "client", 1));
    CHECK(hash_seed(42, "client", 0) != hash_seed(42, "dp", 0));
    CHECK(hash_seed(42, "data") != hash_seed(43, "data"));
    CHECK(hash_seed(42, "client", 1, 0) != hash_seed(42, "client", 0, 1));
}
