#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rbmi/brute.hpp"
#include "rbmi/data.hpp"
#include "rbmi/model.hpp"
#include "rbmi/oracle.hpp"
#include "rbmi/rng.hpp"
#include "rbmi/sampler.hpp"

// Shared generators and reference computations for the test suite. Reference
// code here is deliberately plain loops, independent of the library's vector
// paths.

namespace rbmi::testing {

inline RbmParams random_params(int n, int m, double bias_scale, double weight_scale, Rng& rng) {
    RbmParams p = RbmParams::zero(n, m);
    for (int i = 0; i < n; ++i) p.b[i] = bias_scale * rng.normal();
    for (int j = 0; j < m; ++j) p.c[j] = bias_scale * rng.normal();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) p.W(i, j) = weight_scale * rng.normal();
    return p;
}

inline VectorXd random_binary_vector(int n, Rng& rng) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return v;
}

inline IncompleteObservation random_observation(int n, double missing_p, Rng& rng) {
    const VectorXd d = random_binary_vector(n, rng);
    return mask_observation(d, missing_p, rng);
}

/// Observation that fixes exactly the given coordinates at v's values.
inline IncompleteObservation observe_at(const VectorXd& v,
                                        std::vector<std::uint32_t> indices) {
    std::sort(indices.begin(), indices.end());
    IncompleteObservation obs;
    obs.observed = std::move(indices);
    obs.values.reserve(obs.observed.size());
    for (std::uint32_t i : obs.observed)
        obs.values.push_back(static_cast<std::uint8_t>(v[static_cast<Eigen::Index>(i)] != 0.0));
    return obs;
}

/// Observation that fixes every coordinate of v except the ones listed.
inline IncompleteObservation observe_all_but(const VectorXd& v,
                                             const std::vector<std::uint32_t>& skip) {
    std::vector<std::uint32_t> idx;
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(v.size()); ++i)
        if (std::find(skip.begin(), skip.end(), i) == skip.end()) idx.push_back(i);
    return observe_at(v, std::move(idx));
}

/// Central finite differences of exact_log_likelihood, entry by entry.
inline ParamGrad fd_gradient(const RbmParams& p, const std::vector<IncompleteObservation>& data,
                             double step) {
    ParamGrad g = ParamGrad::zero(p.n(), p.m());
    RbmParams q = p;
    auto probe = [&](double& slot) {
        const double orig = slot;
        slot = orig + step;
        const double up = exact_log_likelihood(q, data);
        slot = orig - step;
        const double down = exact_log_likelihood(q, data);
        slot = orig;
        return (up - down) / (2.0 * step);
    };
    for (Eigen::Index i = 0; i < p.n(); ++i) g.b[i] = probe(q.b[i]);
    for (Eigen::Index j = 0; j < p.m(); ++j) g.c[j] = probe(q.c[j]);
    for (Eigen::Index i = 0; i < p.n(); ++i)
        for (Eigen::Index j = 0; j < p.m(); ++j) g.W(i, j) = probe(q.W(i, j));
    return g;
}

inline double max_abs_diff(const VectorXd& a, const VectorXd& b) {
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const MatrixXd& a, const MatrixXd& b) {
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

inline bool exact_equal(const VectorXd& a, const VectorXd& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

inline bool exact_equal(const MatrixXd& a, const MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

/// KL divergence from the product distribution with magnetizations (mv over
/// the missing coordinates, mh over the hiddens) to the exact clamped
/// conditional. Plain formula: negative entropy minus expected negative
/// energy plus the clamped log partition.
inline double mf_kl_divergence(const RbmParams& p, const IncompleteObservation& obs,
                               const VectorXd& mv, const VectorXd& mh) {
    const auto missing = obs.missing_indices(p.n());
    if (mv.size() != static_cast<Eigen::Index>(missing.size()))
        throw std::invalid_argument("mf_kl_divergence: mv size mismatch");
    if (mh.size() != p.m()) throw std::invalid_argument("mf_kl_divergence: mh size mismatch");
    auto neg_entropy = [](double x) {
        if (!(x > 0.0 && x < 1.0))
            throw std::invalid_argument("mf_kl_divergence: magnetizations must be in (0,1)");
        return x * std::log(x) + (1.0 - x) * std::log(1.0 - x);
    };
    double kl = 0.0;
    for (Eigen::Index t = 0; t < mv.size(); ++t) kl += neg_entropy(mv[t]);
    for (Eigen::Index j = 0; j < mh.size(); ++j) kl += neg_entropy(mh[j]);
    VectorXd mfull = obs.context_vector(p.n());
    for (std::size_t t = 0; t < missing.size(); ++t)
        mfull[static_cast<Eigen::Index>(missing[t])] = mv[static_cast<Eigen::Index>(t)];
    const double expected_neg_energy =
        p.b.dot(mfull) + p.c.dot(mh) + mfull.dot(p.W * mh);
    return kl - expected_neg_energy + exact_clamped_log_partition(p, obs);
}

/// Empirical total variation distance between a sample of (v,h) pairs and the
/// exact joint distribution of a small model.
inline double joint_tv_distance(const RbmParams& p, const std::vector<ChainState>& states) {
    const int n = p.n();
    const int m = p.m();
    if (n + m > 20) throw std::length_error("joint_tv_distance: model too large");
    const std::size_t total = std::size_t{1} << (n + m);
    std::vector<double> freq(total, 0.0);
    for (const auto& st : states) {
        std::size_t code = 0;
        for (int i = 0; i < n; ++i)
            if (st.v[i] != 0.0) code |= std::size_t{1} << i;
        for (int j = 0; j < m; ++j)
            if (st.h[j] != 0.0) code |= std::size_t{1} << (n + j);
        freq[code] += 1.0;
    }
    for (double& f : freq) f /= static_cast<double>(states.size());

    const double logZ = brute_log_partition(p);
    double tv = 0.0;
    VectorXd v(n), h(m);
    for (std::size_t code = 0; code < total; ++code) {
        for (int i = 0; i < n; ++i) v[i] = (code >> i) & 1 ? 1.0 : 0.0;
        for (int j = 0; j < m; ++j) h[j] = (code >> (n + j)) & 1 ? 1.0 : 0.0;
        const double prob = std::exp(-energy(p, v, h) - logZ);
        tv += std::abs(freq[code] - prob);
    }
    return 0.5 * tv;
}

}  // namespace rbmi::testing
