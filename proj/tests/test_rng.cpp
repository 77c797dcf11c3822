#include <doctest.h>

#include <cmath>
#include <vector>

#include "qlink/rng.hpp"

using qlink::rng::Stream;

TEST_CASE("streams are reproducible and independent") {
    Stream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::vector<std::uint64_t> va, vb;
    for (int i = 0; i < 64; ++i) {
        va.push_back(a.next_u64());
        vb.push_back(b.next_u64());
    }
    CHECK(va == vb);
    bool differs_stream = false, differs_seed = false;
    for (int i = 0; i < 64; ++i) {
        if (va[i] != c.next_u64()) differs_stream = true;
        if (va[i] != d.next_u64()) differs_seed = true;
    }
    CHECK(differs_stream);
    CHECK(differs_seed);
}

TEST_CASE("uniform mean and range") {
    Stream s(1, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("geometric gap sampling matches the success probability") {
    const double p = 1.7e-3;
    Stream s(9, 3);
    const int n = 50000;
    double total_gap = 0.0;
    for (int i = 0; i < n; ++i) total_gap += static_cast<double>(s.geometric_failures(p));
    const double mean = total_gap / n;
    const double expected = (1.0 - p) / p;
    CHECK(std::abs(mean - expected) < 5.0 * expected / std::sqrt(double(n)));
    CHECK(Stream(1, 1).geometric_failures(1.0) == 0);
}

TEST_CASE("bernoulli edge cases") {
    Stream s(5, 5);
    CHECK_FALSE(s.bernoulli(0.0));
    CHECK(s.bernoulli(1.0));
    int hits = 0;
    for (int i = 0; i < 100000; ++i) hits += s.bernoulli(0.25);
    CHECK(std::abs(hits / 100000.0 - 0.25) < 0.01);
}
