#include <catch2/catch.hpp>

#include <random>
#include <sstream>

#include "rots/weighting.hpp"
#include "oracles.hpp"

using rots::WeightScheme;

TEST_CASE("uniform weights are one") {
    const auto scheme = WeightScheme::uniform();
    REQUIRE(rots::word_weight(scheme, 0.0) == 1.0);
    REQUIRE(rots::word_weight(scheme, 0.9) == 1.0);
}

TEST_CASE("sif weight a/(a+p)") {
    const auto scheme = WeightScheme::sif(1e-3);
    REQUIRE(rots::word_weight(scheme, 0.0) == 1.0);
    REQUIRE(rots::word_weight(scheme, 1e-3) == Approx(0.5));
    REQUIRE_THROWS(rots::word_weight(scheme, -0.1));
    REQUIRE_THROWS(rots::word_weight(scheme, 1.1));
}

TEST_CASE("sif weight decreases with probability") {
    const auto scheme = WeightScheme::sif(1e-3);
    double prev = rots::word_weight(scheme, 0.0);
    for (double p = 1e-4; p <= 1.0; p += 1e-2) {
        const double w = rots::word_weight(scheme, p);
        REQUIRE(w < prev);
        REQUIRE(w > 0.0);
        prev = w;
    }
}

TEST_CASE("usif constants from a tiny corpus match a hand derivation") {
    // counts a:6 b:3 c:1 with average sentence length 2:
    //   threshold = 1 - (2/3)^2 = 5/9, only p(a)=0.6 exceeds it
    //   alpha = 1/3, Z = 3/2, a = (2/3)/(1/3 * 3/2) = 4/3
    //   weight(0.6) = (4/3)/((4/3)/2 + 0.6) = 20/19
    std::istringstream in("a 6\nb 3\nc 1\n");
    const auto freq = rots::load_frequencies(in);
    const auto stats = rots::make_usif_stats(freq, 2.0);
    REQUIRE(stats.a == Approx(4.0 / 3.0).epsilon(1e-12));
    const auto scheme = WeightScheme::usif_scheme(stats);
    REQUIRE(rots::word_weight(scheme, 0.6) == Approx(20.0 / 19.0).epsilon(1e-12));
    REQUIRE(rots::word_weight(scheme, 0.0) == Approx(2.0));

    double prev = rots::word_weight(scheme, 0.0);
    for (double p = 0.05; p <= 1.0; p += 0.05) {
        const double w = rots::word_weight(scheme, p);
        REQUIRE(w < prev);
        REQUIRE(w > 0.0);
        REQUIRE(std::isfinite(w));
        prev = w;
    }
}

TEST_CASE("modified weights reduce to plain normalization for unit vectors") {
    std::vector<std::vector<double>> vectors{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}};
    const std::vector<double> w{1.0, 2.0, 3.0};
    const auto a = rots::modified_weights(w, vectors);
    REQUIRE(a.values[0] == Approx(1.0 / 6.0));
    REQUIRE(a.values[1] == Approx(2.0 / 6.0));
    REQUIRE(a.values[2] == Approx(3.0 / 6.0));
}

TEST_CASE("modified weights of a single token is (1)") {
    const std::vector<double> w{2.5};
    std::vector<std::vector<double>> v{{0.3, 0.4}};
    REQUIRE(rots::modified_weights(w, v).values == std::vector<double>{1.0});
}

TEST_CASE("modified weights scale with vector norms") {
    const std::vector<double> w{1.0, 1.0};
    std::vector<std::vector<double>> v{{1.0, 0.0}, {0.0, 3.0}};
    const auto a = rots::modified_weights(w, v);
    REQUIRE(a.values[0] == Approx(0.25));
    REQUIRE(a.values[1] == Approx(0.75));
}

TEST_CASE("all-zero norms are a degenerate sentence") {
    const std::vector<double> w{1.0, 1.0};
    std::vector<std::vector<double>> v{{0.0, 0.0}, {0.0, 0.0}};
    REQUIRE_THROWS_WITH(rots::modified_weights(w, v), Catch::Contains("degenerate sentence norm"));
}

TEST_CASE("modified weights sum to one and ignore global vector rescaling") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = oracles::random_sentence(rng, 1 + trial % 7, 5);
        const auto w = s.weights();
        auto v = s.vectors();
        const auto a = rots::modified_weights(w, v);
        double sum = 0.0;
        for (double x : a.values) sum += x;
        REQUIRE(sum == Approx(1.0).margin(1e-12));

        for (auto& vec : v)
            for (double& x : vec) x *= 37.5;
        const auto b = rots::modified_weights(w, v);
        for (std::size_t i = 0; i < a.values.size(); ++i)
            REQUIRE(a.values[i] == Approx(b.values[i]).margin(1e-12));
    }
}

TEST_CASE("norm concentration on hand cases") {
    SECTION("single word gives K = 1 and C = 1") {
        const std::vector<double> w{0.7};
        std::vector<std::vector<double>> v{{0.1, 0.8}};
        REQUIRE(rots::norm_concentration(w, v) == Approx(1.0));
        REQUIRE(rots::comprehensive_coefficient(w, v, w, v) == Approx(1.0));
    }
    SECTION("two identical unit vectors give K = 1") {
        const std::vector<double> w{0.5, 0.5};
        std::vector<std::vector<double>> v{{1.0, 0.0}, {1.0, 0.0}};
        REQUIRE(rots::norm_concentration(w, v) == Approx(1.0).margin(1e-12));
    }
    SECTION("two orthogonal unit vectors give K = 2") {
        const std::vector<double> w{0.5, 0.5};
        std::vector<std::vector<double>> v{{1.0, 0.0}, {0.0, 1.0}};
        REQUIRE(rots::norm_concentration(w, v) == Approx(2.0).margin(1e-12));
    }
    SECTION("zero weighted average is degenerate") {
        const std::vector<double> w{0.5, 0.5};
        std::vector<std::vector<double>> v{{1.0, 0.0}, {-1.0, 0.0}};
        REQUIRE_THROWS_WITH(rots::norm_concentration(w, v),
                            Catch::Contains("degenerate sentence vector"));
    }
}

TEST_CASE("closed form of K matches its pairwise-distance decomposition") {
    // (sum w|v|)^2 / |sum wv|^2  ==  1 + sum_{k != m} w_k w_m |v_k||v_m| (1 - Sim) / |d|^2
    std::mt19937 rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + trial % 6;
        const auto s = oracles::random_sentence(rng, n, 2 + trial % 7);
        const auto w = s.weights();
        const auto v = s.vectors();

        const double k_closed = rots::norm_concentration(w, v);

        const auto d = s.weighted_average();
        const double d2 = rots::dot(d, d);
        double pairwise = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                pairwise += w[a] * w[b] * rots::norm(v[a]) * rots::norm(v[b]) *
                            (1.0 - rots::cosine_similarity(v[a], v[b]));
            }
        const double k_decomposed = 1.0 + pairwise / d2;
        REQUIRE(k_closed == Approx(k_decomposed).margin(1e-10));
        REQUIRE(k_closed >= 1.0 - 1e-12);
    }
}
