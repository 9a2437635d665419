#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "rbmi/rng.hpp"

using namespace rbmi;

TEST_CASE("identical seed and stream reproduce the draw sequence") {
    Rng a(42, 7), b(42, 7);
    for (int k = 0; k < 100; ++k) REQUIRE(a.next_u64() == b.next_u64());
    Rng c(42, 7), d(42, 7);
    for (int k = 0; k < 100; ++k) REQUIRE(c.uniform01() == d.uniform01());
}

TEST_CASE("different streams and seeds decorrelate immediately") {
    Rng a(42, 0), b(42, 1), c(43, 0);
    std::vector<std::uint64_t> xa, xb, xc;
    for (int k = 0; k < 64; ++k) {
        xa.push_back(a.next_u64());
        xb.push_back(b.next_u64());
        xc.push_back(c.next_u64());
    }
    int same_ab = 0, same_ac = 0;
    for (int k = 0; k < 64; ++k) {
        if (xa[static_cast<std::size_t>(k)] == xb[static_cast<std::size_t>(k)]) ++same_ab;
        if (xa[static_cast<std::size_t>(k)] == xc[static_cast<std::size_t>(k)]) ++same_ac;
    }
    REQUIRE(same_ab == 0);
    REQUIRE(same_ac == 0);
}

TEST_CASE("child streams are pure functions of the ids, not engine state") {
    Rng parent(9, 3);
    Rng c1 = parent.child(5);
    parent.next_u64();  // consuming the parent must not affect children
    Rng c2 = parent.child(5);
    for (int k = 0; k < 20; ++k) REQUIRE(c1.next_u64() == c2.next_u64());

    // child equals direct construction at the derived stream id
    Rng c3 = Rng(9, 3).child(5);
    Rng c4(9, mix64(3, 5));
    REQUIRE(c3.next_u64() == c4.next_u64());

    // two-level helper
    Rng e1 = Rng(9, 3).child(5, 6);
    Rng e2 = Rng(9, 3).child(5).child(6);
    REQUIRE(e1.next_u64() == e2.next_u64());
}

TEST_CASE("sibling children differ") {
    Rng parent(1234, 0);
    std::set<std::uint64_t> firsts;
    for (std::uint64_t s = 0; s < 64; ++s) firsts.insert(parent.child(s).next_u64());
    REQUIRE(firsts.size() == 64);
}

TEST_CASE("uniform01 stays in the half-open unit interval with a sane mean") {
    Rng rng(7);
    double sum = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    REQUIRE(sum / 20000.0 == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("uniform_below respects the bound and covers small ranges") {
    Rng rng(11);
    std::vector<int> hits(5, 0);
    for (int k = 0; k < 5000; ++k) {
        const std::uint64_t x = rng.uniform_below(5);
        REQUIRE(x < 5);
        ++hits[static_cast<std::size_t>(x)];
    }
    for (int h : hits) REQUIRE(h > 800);  // 1000 expected each
    REQUIRE(rng.uniform_below(1) == 0);
    REQUIRE_THROWS_AS(rng.uniform_below(0), std::invalid_argument);
}

TEST_CASE("bernoulli hits its edge cases and rate") {
    Rng rng(13);
    for (int k = 0; k < 200; ++k) REQUIRE_FALSE(rng.bernoulli(0.0));
    for (int k = 0; k < 200; ++k) REQUIRE(rng.bernoulli(1.0));
    int ones = 0;
    for (int k = 0; k < 20000; ++k) ones += rng.bernoulli(0.3) ? 1 : 0;
    REQUIRE(ones / 20000.0 == Catch::Approx(0.3).margin(0.015));
}

TEST_CASE("normal draws have standard moments") {
    Rng rng(17);
    const int count = 40000;
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < count; ++k) {
        const double x = rng.normal();
        REQUIRE(std::isfinite(x));
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / count;
    const double var = sumsq / count - mean * mean;
    REQUIRE(mean == Catch::Approx(0.0).margin(0.02));
    REQUIRE(var == Catch::Approx(1.0).margin(0.04));
}
