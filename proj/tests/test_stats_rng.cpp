#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sevsim/rng.hpp"
#include "sevsim/stats.hpp"

using namespace sevsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("rng streams are deterministic and independent") {
    Rng a = Rng::stream(42, "demand");
    Rng b = Rng::stream(42, "demand");
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng c = Rng::stream(42, "mobility");
    Rng d = Rng::stream(42, "demand");
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= (c.next_u64() != d.next_u64());
    REQUIRE(any_diff);

    Rng e = Rng::stream(43, "demand");
    Rng f = Rng::stream(42, "demand");
    any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= (e.next_u64() != f.next_u64());
    REQUIRE(any_diff);
}

TEST_CASE("rng draw ranges and first moments") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(rng.below(13) < 13);
        double v = rng.uniform(2.0, 5.0);
        REQUIRE(v >= 2.0);
        REQUIRE(v < 5.0);
    }
    REQUIRE_THROWS_AS(rng.below(0), std::invalid_argument);

    // sample mean/sd of 20k standard normals: se(mean)=0.0071, se(sd)~0.005
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal(0.0, 1.0);
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double sd = std::sqrt(sq / n - mean * mean);
    REQUIRE_THAT(mean, WithinAbs(0.0, 0.03));
    REQUIRE_THAT(sd, WithinAbs(1.0, 0.03));

    long long total = 0;
    for (int i = 0; i < 20000; ++i) total += rng.poisson(3.0);
    REQUIRE_THAT(total / 20000.0, WithinAbs(3.0, 0.06));
}

TEST_CASE("discrete sampling follows the weights") {
    Rng rng(11);
    std::vector<double> w{1.0, 3.0};
    int hits = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (rng.discrete(w) == 1) ++hits;
    REQUIRE_THAT(hits / static_cast<double>(n), WithinAbs(0.75, 0.02));
    REQUIRE_THROWS_AS(rng.discrete(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("softmax is a probability vector and matches closed forms") {
    // exact: logits {ln 3, 0} -> {0.75, 0.25}
    auto p = softmax({std::log(3.0), 0.0});
    REQUIRE_THAT(p[0], WithinAbs(0.75, 1e-12));
    REQUIRE_THAT(p[1], WithinAbs(0.25, 1e-12));

    // sums to one within 1e-12, including extreme logits (max-shift stability)
    for (auto logits : {std::vector<double>{0.0, 0.0, 0.0},
                        std::vector<double>{1000.0, 999.0, -1000.0},
                        std::vector<double>{-700.0, -701.0},
                        std::vector<double>{3.5}}) {
        auto q = softmax(logits);
        double s = 0.0;
        for (double v : q) {
            REQUIRE(v >= 0.0); // exp underflows to exactly 0 for very negative shifted logits
            s += v;
        }
        REQUIRE_THAT(s, WithinAbs(1.0, 1e-12));
    }
    REQUIRE_THROWS_AS(softmax({}), std::invalid_argument);

    // empirical frequencies of softmax_sample track the probabilities
    Rng rng(5);
    std::vector<double> logits{std::log(9.0), 0.0};
    int first = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (softmax_sample(logits, rng) == 0) ++first;
    REQUIRE_THAT(first / static_cast<double>(n), WithinAbs(0.9, 0.02));
}

TEST_CASE("harmonic numbers and the unsuccessful-search path length") {
    REQUIRE_THAT(harmonic(4), WithinAbs(1.0 + 0.5 + 1.0 / 3.0 + 0.25, 1e-12));
    REQUIRE(average_path_length(0) == 0.0);
    REQUIRE(average_path_length(1) == 0.0);
    REQUIRE_THAT(average_path_length(2), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(average_path_length(256), WithinAbs(10.248689925634562, 1e-9));
}

TEST_CASE("chi-square quantiles hit table values") {
    REQUIRE_THAT(chi2_quantile(0.95, 1), WithinAbs(3.841459, 1e-4));
    REQUIRE_THAT(chi2_quantile(0.99, 2), WithinAbs(9.210340, 1e-4));
    REQUIRE_THAT(chi2_quantile(0.95, 3), WithinAbs(7.814728, 1e-4));
    REQUIRE_THAT(chi2_quantile(0.995, 3), WithinAbs(12.838156, 1e-4));
    // quantile and cdf are inverses
    for (double p : {0.1, 0.5, 0.9, 0.99})
        REQUIRE_THAT(chi2_cdf(chi2_quantile(p, 5.0), 5.0), WithinAbs(p, 1e-9));
    REQUIRE_THROWS_AS(chi2_quantile(0.0, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(chi2_quantile(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("mean_std and quantile on hand-checked fixtures") {
    MeanStd ms = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
    REQUIRE_THAT(ms.mean, WithinAbs(5.0, 1e-12));
    REQUIRE_THAT(ms.stddev, WithinAbs(2.0, 1e-12));

    std::vector<double> v{10, 40, 20, 30};
    REQUIRE_THAT(quantile(v, 0.5), WithinAbs(25.0, 1e-12));
    REQUIRE(quantile(v, 0.0) == 10.0);
    REQUIRE(quantile(v, 1.0) == 40.0);
    REQUIRE_THAT(quantile(v, 0.25), WithinAbs(17.5, 1e-12));
    REQUIRE(quantile({5.0}, 0.7) == 5.0);
    REQUIRE_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
}
