#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rbmi/brute.hpp"
#include "rbmi/oracle.hpp"
#include "rbmi/rng.hpp"
#include "support.hpp"

using namespace rbmi;
using namespace rbmi::testing;

// The enumeration oracle (analytic hidden marginalization, Gray-code visible
// walk) is checked against the fully independent joint enumeration in
// brute.hpp, which shares nothing with it but the energy function.

TEST_CASE("log partition agrees with joint enumeration") {
    Rng rng(300);
    for (int rep = 0; rep < 8; ++rep) {
        const int n = 2 + static_cast<int>(rng.uniform_below(5));
        const int m = 1 + static_cast<int>(rng.uniform_below(5));
        Rng prng = rng.child(static_cast<std::uint64_t>(rep));
        const RbmParams p = random_params(n, m, 0.7, 0.9, prng);
        const double fast = exact_log_partition(p);
        const double slow = brute_log_partition(p);
        REQUIRE(fast == Catch::Approx(slow).epsilon(1e-12));
    }
}

TEST_CASE("free moments agree with joint enumeration") {
    Rng rng(301);
    for (int rep = 0; rep < 6; ++rep) {
        Rng prng = rng.child(static_cast<std::uint64_t>(rep));
        const RbmParams p = random_params(5, 4, 0.6, 1.1, prng);
        const ExactMoments fast = exact_free_moments(p);
        const BruteMoments slow = brute_free_moments(p);
        REQUIRE(max_abs_diff(fast.ev, slow.ev) < 1e-12);
        REQUIRE(max_abs_diff(fast.eh, slow.eh) < 1e-12);
        REQUIRE(max_abs_diff(fast.evh, slow.evh) < 1e-12);
        REQUIRE(fast.logZ == Catch::Approx(slow.logZ).epsilon(1e-12));
    }
}

TEST_CASE("clamped moments agree with joint enumeration across missing rates") {
    Rng rng(302);
    for (double rate : {0.0, 0.3, 0.8, 1.0}) {
        for (int rep = 0; rep < 4; ++rep) {
            Rng prng = rng.child(static_cast<std::uint64_t>(rep * 17 + static_cast<int>(rate * 10)));
            const RbmParams p = random_params(6, 3, 0.5, 1.0, prng);
            Rng drng = prng.child(99);
            const IncompleteObservation obs = random_observation(6, rate, drng);
            const ExactMoments fast = exact_clamped_moments(p, obs);
            const BruteMoments slow = brute_clamped_moments(p, obs);
            REQUIRE(max_abs_diff(fast.ev, slow.ev) < 1e-12);
            REQUIRE(max_abs_diff(fast.eh, slow.eh) < 1e-12);
            REQUIRE(max_abs_diff(fast.evh, slow.evh) < 1e-12);
        }
    }
}

TEST_CASE("clamped moments reproduce the data at observed coordinates") {
    Rng rng(303);
    const RbmParams p = random_params(6, 4, 0.5, 1.0, rng);
    const IncompleteObservation obs = random_observation(6, 0.4, rng);
    const ExactMoments ex = exact_clamped_moments(p, obs);
    for (std::size_t k = 0; k < obs.observed.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(obs.observed[k]);
        REQUIRE(ex.ev[i] == static_cast<double>(obs.values[k]));
        // row of evh at an observed coordinate is d_i * eh
        for (Eigen::Index j = 0; j < 4; ++j)
            REQUIRE(ex.evh(i, j) ==
                    Catch::Approx(static_cast<double>(obs.values[k]) * ex.eh[j]).margin(1e-15));
    }
}

TEST_CASE("an empty observation clamps nothing") {
    Rng rng(304);
    const RbmParams p = random_params(5, 3, 0.4, 1.2, rng);
    const IncompleteObservation nothing;  // O empty
    const ExactMoments clamped = exact_clamped_moments(p, nothing);
    const ExactMoments free_m = exact_free_moments(p);
    REQUIRE(max_abs_diff(clamped.ev, free_m.ev) < 1e-13);
    REQUIRE(max_abs_diff(clamped.eh, free_m.eh) < 1e-13);
    REQUIRE(max_abs_diff(clamped.evh, free_m.evh) < 1e-13);
    REQUIRE(exact_clamped_log_partition(p, nothing) ==
            Catch::Approx(exact_log_partition(p)).epsilon(1e-13));
}

TEST_CASE("zero parameters give the closed-form answers") {
    const RbmParams p = RbmParams::zero(4, 3);
    REQUIRE(exact_log_partition(p) == Catch::Approx(7.0 * std::log(2.0)).epsilon(1e-15));
    const ExactMoments ex = exact_free_moments(p);
    for (int i = 0; i < 4; ++i) REQUIRE(ex.ev[i] == Catch::Approx(0.5).margin(1e-14));
    for (int j = 0; j < 3; ++j) REQUIRE(ex.eh[j] == Catch::Approx(0.5).margin(1e-14));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) REQUIRE(ex.evh(i, j) == Catch::Approx(0.25).margin(1e-14));
}

TEST_CASE("log likelihood agrees with joint enumeration") {
    Rng rng(305);
    const RbmParams p = random_params(5, 4, 0.6, 0.9, rng);
    std::vector<IncompleteObservation> data;
    for (double rate : {0.0, 0.3, 0.8, 1.0})
        data.push_back(random_observation(5, rate, rng));
    REQUIRE(exact_log_likelihood(p, data) ==
            Catch::Approx(brute_log_likelihood(p, data)).epsilon(1e-12));
}

TEST_CASE("log likelihood of complete data matches the closed form") {
    Rng rng(306);
    const RbmParams p = random_params(5, 3, 0.5, 0.8, rng);
    const VectorXd d = random_binary_vector(5, rng);
    const std::vector<IncompleteObservation> data = {fully_observed(d)};
    double expected = p.b.dot(d);
    const VectorXd tau = hidden_fields(p, d);
    for (int j = 0; j < 3; ++j) expected += stable_softplus(tau[j]);
    expected -= exact_log_partition(p);
    REQUIRE(exact_log_likelihood(p, data) == Catch::Approx(expected).epsilon(1e-13));
}

TEST_CASE("exact gradient matches central finite differences") {
    Rng rng(307);
    for (int rep = 0; rep < 4; ++rep) {
        Rng prng = rng.child(static_cast<std::uint64_t>(rep));
        const int n = 3 + static_cast<int>(prng.uniform_below(3));
        const int m = 2 + static_cast<int>(prng.uniform_below(3));
        const RbmParams p = random_params(n, m, 0.5, 0.8, prng);
        std::vector<IncompleteObservation> data;
        Rng drng = prng.child(1);
        for (double rate : {0.0, 0.3, 0.8}) data.push_back(random_observation(n, rate, drng));

        const ParamGrad g = exact_gradient(p, data);
        const ParamGrad fd = fd_gradient(p, data, 1e-5);
        auto ok = [](double a, double b) { return std::abs(a - b) <= 1e-8 + 1e-6 * std::abs(a); };
        for (Eigen::Index i = 0; i < p.n(); ++i) REQUIRE(ok(g.b[i], fd.b[i]));
        for (Eigen::Index j = 0; j < p.m(); ++j) REQUIRE(ok(g.c[j], fd.c[j]));
        for (Eigen::Index i = 0; i < p.n(); ++i)
            for (Eigen::Index j = 0; j < p.m(); ++j) REQUIRE(ok(g.W(i, j), fd.W(i, j)));
    }
}

TEST_CASE("gradient vanishes at the maximum-likelihood point of one datum") {
    // A model whose free moments equal the (complete) data moment has zero
    // gradient in b; check the b component on a crafted symmetric case.
    RbmParams p = RbmParams::zero(3, 2);
    VectorXd d(3);
    d << 1.0, 0.0, 1.0;
    const std::vector<IncompleteObservation> data = {fully_observed(d)};
    const ParamGrad g = exact_gradient(p, data);
    // free ev = 0.5 everywhere, so db = d - 0.5
    REQUIRE(g.b[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(g.b[1] == Catch::Approx(-0.5).margin(1e-12));
    REQUIRE(g.b[2] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("enumeration refuses oversized problems") {
    const RbmParams p = RbmParams::zero(21, 2);
    REQUIRE_THROWS_AS(exact_log_partition(p), std::length_error);
    const RbmParams q = RbmParams::zero(19, 2);
    REQUIRE_THROWS_AS(brute_log_partition(q), std::length_error);  // 19 + 2 joint bits
}
