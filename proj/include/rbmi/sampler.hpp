#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/math.hpp"
#include "rbmi/model.hpp"
#include "rbmi/rng.hpp"

// Blocked Gibbs sampling. Chains are batched into matrices (one column per
// chain) so the field computations are GEMMs, but every chain draws from its
// own sub-stream of the rng passed in, derived as rng.child(chain index).
// Callers therefore pass a stream dedicated to the call; reusing the same
// stream for two calls replays the same randomness.
//
// Draw order within a chain is fixed: hidden or visible coordinates in
// increasing index order, one uniform real per coordinate, compared against
// the conditional mean. This makes every sample stream reproducible from
// (seed, stream) alone.

namespace rbmi {

struct ChainState {
    VectorXd v;
    VectorXd h;
};

/// Fantasy particles for the persistent free-expectation chains. Only the
/// visible states persist between updates; hidden states are redrawn from
/// the current parameters at the start of each step.
struct PersistentChains {
    std::vector<VectorXd> visibles;
    std::uint64_t age = 0;
};

inline std::vector<VectorXd> uniform_binary_vectors(int dim, int count, Rng& rng) {
    std::vector<VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        out.push_back(std::move(v));
    }
    return out;
}

inline PersistentChains init_persistent_chains(int n, int count, Rng& rng) {
    if (count < 1) throw std::invalid_argument("init_persistent_chains: need at least one chain");
    return PersistentChains{uniform_binary_vectors(n, count, rng), 0};
}

namespace detail {

/// Fills `out` with Bernoulli draws from sigmoid(fields), one sub-stream per
/// column, coordinates in row order within a column.
inline void sample_bernoulli_columns(const MatrixXd& fields, std::vector<Rng>& rngs,
                                     MatrixXd& out) {
    for (Eigen::Index nu = 0; nu < fields.cols(); ++nu) {
        Rng& r = rngs[static_cast<std::size_t>(nu)];
        for (Eigen::Index i = 0; i < fields.rows(); ++i)
            out(i, nu) = r.bernoulli(stable_sigmoid(fields(i, nu))) ? 1.0 : 0.0;
    }
}

inline std::vector<Rng> chain_streams(Rng& rng, std::size_t count) {
    std::vector<Rng> rngs;
    rngs.reserve(count);
    for (std::size_t nu = 0; nu < count; ++nu) rngs.push_back(rng.child(nu));
    return rngs;
}

inline MatrixXd pack_columns(const std::vector<VectorXd>& vecs, int dim, const char* where) {
    MatrixXd out(dim, static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t k = 0; k < vecs.size(); ++k) {
        if (vecs[k].size() != dim) throw std::invalid_argument(std::string(where) + ": dimension mismatch");
        if (!is_binary(vecs[k])) throw std::invalid_argument(std::string(where) + ": states must be binary");
        out.col(static_cast<Eigen::Index>(k)) = vecs[k];
    }
    return out;
}

}  // namespace detail

/// Alternating block updates: h0 ~ P(h|v0), then `steps` rounds of
/// v ~ P(v|h), h ~ P(h|v). Returns the final paired states.
inline std::vector<ChainState> block_gibbs(const RbmParams& p,
                                           const std::vector<VectorXd>& initial_visibles,
                                           int steps, Rng& rng) {
    p.validate();
    if (initial_visibles.empty()) throw std::invalid_argument("block_gibbs: no chains");
    if (steps < 0) throw std::invalid_argument("block_gibbs: negative step count");
    const std::size_t K = initial_visibles.size();

    MatrixXd V = detail::pack_columns(initial_visibles, p.n(), "block_gibbs");
    MatrixXd H(p.m(), static_cast<Eigen::Index>(K));
    std::vector<Rng> rngs = detail::chain_streams(rng, K);

    MatrixXd tau = (p.W.transpose() * V).colwise() + p.c;
    detail::sample_bernoulli_columns(tau, rngs, H);
    for (int r = 0; r < steps; ++r) {
        MatrixXd lam = (p.W * H).colwise() + p.b;
        detail::sample_bernoulli_columns(lam, rngs, V);
        tau = (p.W.transpose() * V).colwise() + p.c;
        detail::sample_bernoulli_columns(tau, rngs, H);
    }

    std::vector<ChainState> out;
    out.reserve(K);
    for (std::size_t nu = 0; nu < K; ++nu)
        out.push_back(ChainState{V.col(static_cast<Eigen::Index>(nu)),
                                 H.col(static_cast<Eigen::Index>(nu))});
    return out;
}

namespace detail {

/// Clamped chains share this core: observed coordinates stay at their data
/// values, only indices in M are resampled. Returns final (V, H) matrices.
inline std::pair<MatrixXd, MatrixXd> run_clamped(const RbmParams& p,
                                                 const IncompleteObservation& obs,
                                                 const std::vector<VectorXd>& initial_missing,
                                                 int steps, Rng& rng) {
    p.validate();
    obs.validate(p.n());
    if (initial_missing.empty()) throw std::invalid_argument("block_gibbs_clamped: no chains");
    if (steps < 0) throw std::invalid_argument("block_gibbs_clamped: negative step count");

    const std::vector<std::uint32_t> missing = obs.missing_indices(p.n());
    const auto q = static_cast<Eigen::Index>(missing.size());
    const std::size_t K = initial_missing.size();

    MatrixXd V(p.n(), static_cast<Eigen::Index>(K));
    const VectorXd context = obs.context_vector(p.n());
    for (std::size_t nu = 0; nu < K; ++nu) {
        if (initial_missing[nu].size() != q)
            throw std::invalid_argument("block_gibbs_clamped: initial point has wrong length");
        if (!is_binary(initial_missing[nu]))
            throw std::invalid_argument("block_gibbs_clamped: initial point must be binary");
        V.col(static_cast<Eigen::Index>(nu)) = context;
        for (Eigen::Index t = 0; t < q; ++t)
            V(static_cast<Eigen::Index>(missing[static_cast<std::size_t>(t)]),
              static_cast<Eigen::Index>(nu)) = initial_missing[nu][t];
    }

    // Contiguous copies of the missing rows.
    MatrixXd Wm(q, p.m());
    VectorXd bm(q);
    for (Eigen::Index t = 0; t < q; ++t) {
        const auto i = static_cast<Eigen::Index>(missing[static_cast<std::size_t>(t)]);
        Wm.row(t) = p.W.row(i);
        bm[t] = p.b[i];
    }

    std::vector<Rng> rngs = detail::chain_streams(rng, K);
    MatrixXd H(p.m(), static_cast<Eigen::Index>(K));

    MatrixXd tau = (p.W.transpose() * V).colwise() + p.c;
    detail::sample_bernoulli_columns(tau, rngs, H);
    for (int r = 0; r < steps; ++r) {
        if (q > 0) {
            MatrixXd lam = (Wm * H).colwise() + bm;
            for (Eigen::Index nu = 0; nu < lam.cols(); ++nu) {
                Rng& cr = rngs[static_cast<std::size_t>(nu)];
                for (Eigen::Index t = 0; t < q; ++t)
                    V(static_cast<Eigen::Index>(missing[static_cast<std::size_t>(t)]), nu) =
                        cr.bernoulli(stable_sigmoid(lam(t, nu))) ? 1.0 : 0.0;
            }
        }
        tau = (p.W.transpose() * V).colwise() + p.c;
        detail::sample_bernoulli_columns(tau, rngs, H);
#ifndef NDEBUG
        for (std::size_t k = 0; k < obs.observed.size(); ++k)
            for (Eigen::Index nu = 0; nu < V.cols(); ++nu)
                assert(V(static_cast<Eigen::Index>(obs.observed[k]), nu) ==
                       static_cast<double>(obs.values[k]));
#endif
    }
    return {std::move(V), std::move(H)};
}

}  // namespace detail

/// Clamped sampling for the estimators: returns only the final configurations
/// of the missing coordinates (ordered as obs.missing_indices), since the
/// spatial estimators need visible samples only. With M empty, returns
/// length-0 vectors without touching the rng.
inline std::vector<VectorXd> block_gibbs_clamped(const RbmParams& p,
                                                 const IncompleteObservation& obs,
                                                 const std::vector<VectorXd>& initial_missing,
                                                 int steps, Rng& rng) {
    p.validate();
    obs.validate(p.n());
    const std::vector<std::uint32_t> missing = obs.missing_indices(p.n());
    if (missing.empty()) {
        for (const auto& v : initial_missing) {
            if (v.size() != 0)
                throw std::invalid_argument("block_gibbs_clamped: initial point has wrong length");
        }
        return std::vector<VectorXd>(initial_missing.size(), VectorXd(0));
    }
    auto [V, H] = detail::run_clamped(p, obs, initial_missing, steps, rng);
    std::vector<VectorXd> out;
    out.reserve(initial_missing.size());
    for (Eigen::Index nu = 0; nu < V.cols(); ++nu) {
        VectorXd x(static_cast<Eigen::Index>(missing.size()));
        for (std::size_t t = 0; t < missing.size(); ++t)
            x[static_cast<Eigen::Index>(t)] = V(static_cast<Eigen::Index>(missing[t]), nu);
        out.push_back(std::move(x));
    }
    return out;
}

/// Clamped sampling that keeps the paired (v, h) outputs, full visible vector
/// included. The plain-MCI baseline averages these directly. Runs the hidden
/// chain even when M is empty.
inline std::vector<ChainState> block_gibbs_clamped_paired(
    const RbmParams& p, const IncompleteObservation& obs,
    const std::vector<VectorXd>& initial_missing, int steps, Rng& rng) {
    auto [V, H] = detail::run_clamped(p, obs, initial_missing, steps, rng);
    std::vector<ChainState> out;
    out.reserve(initial_missing.size());
    for (Eigen::Index nu = 0; nu < V.cols(); ++nu)
        out.push_back(ChainState{V.col(nu), H.col(nu)});
    return out;
}

/// One persistent-chain refresh: `steps` rounds of blocked Gibbs from the
/// stored visibles under the current parameters. The stored visibles are
/// replaced and returned. The chain age salts the rng, so consecutive calls
/// with the same stream draw fresh randomness.
inline std::vector<VectorXd> pcd_step(PersistentChains& chains, const RbmParams& p, int steps,
                                      Rng& rng) {
    if (chains.visibles.empty()) throw std::invalid_argument("pcd_step: chains not initialized");
    Rng step_rng = rng.child(chains.age);
    std::vector<ChainState> states = block_gibbs(p, chains.visibles, steps, step_rng);
    for (std::size_t nu = 0; nu < states.size(); ++nu)
        chains.visibles[nu] = std::move(states[nu].v);
    chains.age += 1;
    return chains.visibles;
}

}  // namespace rbmi
