#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "rbmi/math.hpp"
#include "rbmi/meanfield.hpp"
#include "rbmi/oracle.hpp"
#include "rbmi/rng.hpp"
#include "support.hpp"

using namespace rbmi;
using namespace rbmi::testing;

namespace {

MeanFieldMoments uniform_init(Eigen::Index q, Rng& rng) {
    MeanFieldMoments init;
    init.mv.resize(q);
    for (Eigen::Index t = 0; t < q; ++t) init.mv[t] = clamp_open01(rng.uniform01());
    return init;
}

}  // namespace

TEST_CASE("converged solves satisfy both self-consistency equations") {
    Rng rng(500);
    int converged_count = 0;
    for (int rep = 0; rep < 20; ++rep) {
        Rng prng = rng.child(static_cast<std::uint64_t>(rep));
        const int n = 3 + static_cast<int>(prng.uniform_below(5));
        const int m = 2 + static_cast<int>(prng.uniform_below(4));
        const RbmParams p = random_params(n, m, 0.5, 1.0, prng);
        Rng drng = prng.child(1);
        const IncompleteObservation obs = random_observation(n, 0.5, drng);
        const auto missing = obs.missing_indices(n);
        Rng irng = prng.child(2);
        const MeanFieldMoments init = uniform_init(static_cast<Eigen::Index>(missing.size()), irng);

        const MeanFieldMoments mf = solve_clamped_mf(p, obs, init, 1e-8, 2000);
        if (!mf.converged) continue;
        ++converged_count;

        // recompute both sides of the fixed-point system from scratch
        VectorXd full = obs.context_vector(n);
        for (std::size_t t = 0; t < missing.size(); ++t)
            full[static_cast<Eigen::Index>(missing[t])] = mf.mv[static_cast<Eigen::Index>(t)];
        const VectorXd tau = p.c + p.W.transpose() * full;
        for (Eigen::Index j = 0; j < p.m(); ++j)
            REQUIRE(std::abs(mf.mh[j] - clamp_open01(stable_sigmoid(tau[j]))) < 1e-8);
        for (std::size_t t = 0; t < missing.size(); ++t) {
            const auto i = static_cast<Eigen::Index>(missing[t]);
            const double rhs = clamp_open01(stable_sigmoid(p.b[i] + p.W.row(i).dot(mf.mh)));
            REQUIRE(std::abs(mf.mv[static_cast<Eigen::Index>(t)] - rhs) < 1e-8);
        }
    }
    REQUIRE(converged_count >= 15);  // moderate couplings should mostly converge
}

TEST_CASE("each sweep does not increase the variational divergence") {
    Rng rng(501);
    const RbmParams p = random_params(5, 4, 0.6, 1.3, rng);
    Rng drng = rng.child(1);
    const VectorXd d = random_binary_vector(5, drng);
    const IncompleteObservation obs = observe_at(d, {1, 4});
    const auto q = static_cast<Eigen::Index>(obs.missing_indices(5).size());
    Rng irng = rng.child(2);
    const MeanFieldMoments init = uniform_init(q, irng);

    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 12; ++k) {
        const MeanFieldMoments mf = solve_clamped_mf(p, obs, init, 1e-300, k);
        const double kl = mf_kl_divergence(p, obs, mf.mv, mf.mh);
        REQUIRE(kl >= -1e-12);  // a divergence
        REQUIRE(kl <= prev + 1e-12);
        prev = kl;
    }
}

TEST_CASE("zero couplings solve in closed form") {
    RbmParams p = RbmParams::zero(4, 3);
    Rng rng(502);
    for (int i = 0; i < 4; ++i) p.b[i] = rng.normal();
    for (int j = 0; j < 3; ++j) p.c[j] = rng.normal();
    const VectorXd d = random_binary_vector(4, rng);
    const IncompleteObservation obs = observe_at(d, {0, 2});
    Rng irng = rng.child(1);
    const MeanFieldMoments init = uniform_init(2, irng);
    const MeanFieldMoments mf = solve_clamped_mf(p, obs, init, 1e-12, 50);
    REQUIRE(mf.converged);
    const auto missing = obs.missing_indices(4);
    for (std::size_t t = 0; t < 2; ++t)
        REQUIRE(mf.mv[static_cast<Eigen::Index>(t)] ==
                Catch::Approx(stable_sigmoid(p.b[static_cast<Eigen::Index>(missing[t])]))
                    .margin(1e-12));
    for (int j = 0; j < 3; ++j)
        REQUIRE(mf.mh[j] == Catch::Approx(stable_sigmoid(p.c[j])).margin(1e-12));
}

TEST_CASE("with nothing missing the hidden magnetizations are exact") {
    Rng rng(503);
    const RbmParams p = random_params(5, 4, 0.7, 1.1, rng);
    const VectorXd d = random_binary_vector(5, rng);
    const IncompleteObservation obs = fully_observed(d);
    MeanFieldMoments init;
    init.mv.resize(0);
    const MeanFieldMoments mf = solve_clamped_mf(p, obs, init, 1e-10, 100);
    REQUIRE(mf.converged);
    REQUIRE(mf.iterations == 1);
    REQUIRE(mf.mv.size() == 0);
    const ExactMoments ex = exact_clamped_moments(p, obs);
    REQUIRE(max_abs_diff(mf.mh, ex.eh) < 1e-12);
}

TEST_CASE("weak couplings make mean field nearly exact") {
    Rng rng(504);
    const RbmParams p = random_params(6, 4, 0.6, 0.05, rng);
    const VectorXd d = random_binary_vector(6, rng);
    const IncompleteObservation obs = observe_at(d, {0, 3});
    const auto missing = obs.missing_indices(6);
    Rng irng = rng.child(1);
    const MeanFieldMoments init = uniform_init(static_cast<Eigen::Index>(missing.size()), irng);
    const MeanFieldMoments mf = solve_clamped_mf(p, obs, init, 1e-10, 500);
    REQUIRE(mf.converged);
    const ExactMoments ex = exact_clamped_moments(p, obs);
    for (std::size_t t = 0; t < missing.size(); ++t)
        REQUIRE(mf.mv[static_cast<Eigen::Index>(t)] ==
                Catch::Approx(ex.ev[static_cast<Eigen::Index>(missing[t])]).margin(0.01));
    REQUIRE(max_abs_diff(mf.mh, ex.eh) < 0.01);
}

TEST_CASE("a bimodal model exposes two fixed points to multi-start") {
    // strong assortative diagonal couplings, biases favoring all-off/all-on
    RbmParams p = RbmParams::zero(2, 2);
    p.W << 6.0, 0.0, 0.0, 6.0;
    p.b << -3.0, -3.0;
    p.c << -3.0, -3.0;
    const IncompleteObservation nothing;  // everything missing

    Rng rng(505);
    int low = 0, high = 0;
    for (int start = 0; start < 40; ++start) {
        Rng irng = rng.child(static_cast<std::uint64_t>(start));
        const MeanFieldMoments init = uniform_init(2, irng);
        const MeanFieldMoments mf = solve_clamped_mf(p, nothing, init, 1e-9, 2000);
        if (!mf.converged) continue;
        if (mf.mv.maxCoeff() < 0.2) ++low;
        if (mf.mv.minCoeff() > 0.8) ++high;
    }
    REQUIRE(low >= 5);
    REQUIRE(high >= 5);
}

TEST_CASE("iteration caps are honest and damping reaches the same fixed point") {
    RbmParams p = RbmParams::zero(2, 2);
    p.W << 6.0, 0.0, 0.0, 6.0;
    p.b << -3.0, -3.0;
    p.c << -3.0, -3.0;
    const IncompleteObservation nothing;
    MeanFieldMoments init;
    init.mv.resize(2);
    init.mv << 0.9, 0.1;

    const MeanFieldMoments capped = solve_clamped_mf(p, nothing, init, 1e-9, 1);
    REQUIRE_FALSE(capped.converged);
    REQUIRE(capped.iterations == 1);

    const MeanFieldMoments plain = solve_clamped_mf(p, nothing, init, 1e-9, 2000, 0.0);
    const MeanFieldMoments damped = solve_clamped_mf(p, nothing, init, 1e-9, 2000, 0.5);
    REQUIRE(plain.converged);
    REQUIRE(damped.converged);
    REQUIRE(max_abs_diff(plain.mv, damped.mv) < 1e-6);
    REQUIRE(max_abs_diff(plain.mh, damped.mh) < 1e-6);
}

TEST_CASE("initial point generation is deterministic, binary, and counted") {
    Rng rng(506);
    const RbmParams p = random_params(6, 4, 0.5, 1.0, rng);
    Rng drng = rng.child(1);
    const IncompleteObservation obs = random_observation(6, 0.6, drng);
    const auto q = obs.missing_indices(6).size();

    MfStats stats;
    Rng g1 = rng.child(2), g2 = rng.child(2);
    const auto pts1 = generate_initial_points(p, obs, 9, g1, 1e-6, 500, 0.0, &stats);
    const auto pts2 = generate_initial_points(p, obs, 9, g2, 1e-6, 500, 0.0, nullptr);
    REQUIRE(pts1.size() == 9);
    REQUIRE(stats.solves == 9);
    REQUIRE(stats.failures >= 0);
    for (std::size_t k = 0; k < 9; ++k) {
        REQUIRE(pts1[k].size() == static_cast<Eigen::Index>(q));
        REQUIRE(is_binary(pts1[k]));
        REQUIRE(exact_equal(pts1[k], pts2[k]));
    }

    // nothing missing: empty points, no randomness consumed
    const VectorXd d = random_binary_vector(6, drng);
    const IncompleteObservation full = fully_observed(d);
    Rng g3 = rng.child(3);
    const auto empty_pts = generate_initial_points(p, full, 4, g3, 1e-6, 100);
    REQUIRE(empty_pts.size() == 4);
    for (const auto& e : empty_pts) REQUIRE(e.size() == 0);
}

TEST_CASE("multi-start points follow the fixed-point magnetizations") {
    // strong-coupling bimodal model again: the Bernoulli draws should land on
    // both modes across starts
    RbmParams p = RbmParams::zero(2, 2);
    p.W << 6.0, 0.0, 0.0, 6.0;
    p.b << -3.0, -3.0;
    p.c << -3.0, -3.0;
    const IncompleteObservation nothing;
    Rng rng(507);
    int all_on = 0, all_off = 0;
    const auto pts = generate_initial_points(p, nothing, 60, rng, 1e-8, 2000);
    for (const auto& x : pts) {
        if (x.sum() == 2.0) ++all_on;
        if (x.sum() == 0.0) ++all_off;
    }
    REQUIRE(all_on >= 5);
    REQUIRE(all_off >= 5);
}
