#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "rbmi/math.hpp"
#include "rbmi/model.hpp"
#include "rbmi/rng.hpp"
#include "support.hpp"

using namespace rbmi;
using namespace rbmi::testing;

TEST_CASE("energy matches the elementwise sum") {
    Rng rng(100);
    for (int rep = 0; rep < 10; ++rep) {
        const RbmParams p = random_params(5, 4, 1.0, 1.0, rng);
        const VectorXd v = random_binary_vector(5, rng);
        const VectorXd h = random_binary_vector(4, rng);
        double e = 0.0;
        for (int i = 0; i < 5; ++i) e -= p.b[i] * v[i];
        for (int j = 0; j < 4; ++j) e -= p.c[j] * h[j];
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j) e -= v[i] * p.W(i, j) * h[j];
        REQUIRE(energy(p, v, h) == Catch::Approx(e).margin(1e-13));
    }
}

TEST_CASE("local fields match their definitions") {
    Rng rng(101);
    const RbmParams p = random_params(6, 3, 0.8, 0.8, rng);
    const VectorXd v = random_binary_vector(6, rng);
    const VectorXd h = random_binary_vector(3, rng);
    for (int i = 0; i < 6; ++i) {
        double lam = p.b[i];
        for (int j = 0; j < 3; ++j) lam += p.W(i, j) * h[j];
        REQUIRE(local_field_visible(p, h, i) == Catch::Approx(lam).margin(1e-14));
        REQUIRE(visible_fields(p, h)[i] == Catch::Approx(lam).margin(1e-14));
    }
    for (int j = 0; j < 3; ++j) {
        double tau = p.c[j];
        for (int i = 0; i < 6; ++i) tau += p.W(i, j) * v[i];
        REQUIRE(local_field_hidden(p, v, j) == Catch::Approx(tau).margin(1e-14));
        REQUIRE(hidden_fields(p, v)[j] == Catch::Approx(tau).margin(1e-14));
    }
}

TEST_CASE("conditional means are the sigmoids of the fields") {
    Rng rng(102);
    const RbmParams p = random_params(4, 5, 1.2, 1.2, rng);
    const VectorXd v = random_binary_vector(4, rng);
    const VectorXd h = random_binary_vector(5, rng);
    const VectorXd mh = conditional_means_hidden(p, v);
    const VectorXd mv = conditional_means_visible(p, h);
    for (int j = 0; j < 5; ++j)
        REQUIRE(mh[j] == Catch::Approx(stable_sigmoid(local_field_hidden(p, v, j))).margin(1e-15));
    for (int i = 0; i < 4; ++i)
        REQUIRE(mv[i] == Catch::Approx(stable_sigmoid(local_field_visible(p, h, i))).margin(1e-15));
}

TEST_CASE("conditional probability agrees with the energy ratio") {
    // P(v_i = 1 | h) derived directly from Boltzmann weights.
    Rng rng(103);
    const RbmParams p = random_params(4, 3, 1.0, 1.5, rng);
    const VectorXd h = random_binary_vector(3, rng);
    VectorXd v = random_binary_vector(4, rng);
    for (int i = 0; i < 4; ++i) {
        VectorXd v1 = v, v0 = v;
        v1[i] = 1.0;
        v0[i] = 0.0;
        const double w1 = std::exp(-energy(p, v1, h));
        const double w0 = std::exp(-energy(p, v0, h));
        const double ratio = w1 / (w1 + w0);
        REQUIRE(stable_sigmoid(local_field_visible(p, h, i)) ==
                Catch::Approx(ratio).epsilon(1e-12));
    }
}

TEST_CASE("parameter validation rejects malformed models") {
    RbmParams p = RbmParams::zero(3, 2);
    REQUIRE_NOTHROW(p.validate());
    REQUIRE(p.n() == 3);
    REQUIRE(p.m() == 2);

    RbmParams bad_shape = p;
    bad_shape.W.resize(2, 3);
    bad_shape.W.setZero();
    REQUIRE_THROWS_AS(bad_shape.validate(), std::invalid_argument);

    RbmParams bad_value = RbmParams::zero(3, 2);
    bad_value.b[0] = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(bad_value.validate(), std::invalid_argument);

    RbmParams empty;
    REQUIRE_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("gradient container norms") {
    ParamGrad g = ParamGrad::zero(2, 2);
    g.b << 3.0, 0.0;
    g.c << 0.0, 4.0;
    g.W << 0.0, 0.0, 0.0, 0.0;
    REQUIRE(g.squared_norm() == Catch::Approx(25.0));
    REQUIRE(g.norm() == Catch::Approx(5.0));
    REQUIRE(g.max_abs() == Catch::Approx(4.0));
}

TEST_CASE("is_binary flags fractional entries") {
    VectorXd v(3);
    v << 0.0, 1.0, 1.0;
    REQUIRE(is_binary(v));
    v[2] = 0.5;
    REQUIRE_FALSE(is_binary(v));
}
