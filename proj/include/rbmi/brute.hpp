#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/math.hpp"
#include "rbmi/model.hpp"

// Reference results by walking every joint (v,h) state and calling energy()
// directly. No analytic hidden sum, no incremental updates: this path shares
// nothing with the fast oracle beyond the energy definition, which is what
// makes it a meaningful cross-check. Exponentially slow by design; the guard
// is tight.

namespace rbmi {

struct BruteMoments {
    VectorXd ev;
    VectorXd eh;
    MatrixXd evh;
    double logZ = 0.0;
};

namespace detail {

inline void check_brute_bits(std::size_t bits) {
    if (bits > 20)
        throw std::length_error("brute enumeration over " + std::to_string(bits) +
                                " bits exceeds the 2^20 guard");
}

}  // namespace detail

/// Walks the joint states with the given visible coordinates free (others
/// fixed by `base`) and every hidden configuration, calling
/// f(v, h, -energy) per state.
template <class F>
void brute_for_each_joint(const RbmParams& p, const VectorXd& base,
                          const std::vector<std::uint32_t>& free_visible, F&& f) {
    const std::size_t qv = free_visible.size();
    const auto qh = static_cast<std::size_t>(p.m());
    detail::check_brute_bits(qv + qh);
    VectorXd v = base;
    VectorXd h(p.m());
    const std::uint64_t nv = std::uint64_t{1} << qv;
    const std::uint64_t nh = std::uint64_t{1} << qh;
    for (std::uint64_t kv = 0; kv < nv; ++kv) {
        for (std::size_t t = 0; t < qv; ++t)
            v[static_cast<Eigen::Index>(free_visible[t])] = (kv >> t) & 1 ? 1.0 : 0.0;
        for (std::uint64_t kh = 0; kh < nh; ++kh) {
            for (std::size_t j = 0; j < qh; ++j)
                h[static_cast<Eigen::Index>(j)] = (kh >> j) & 1 ? 1.0 : 0.0;
            f(v, h, -energy(p, v, h));
        }
    }
}

namespace detail {

inline BruteMoments brute_moments_over(const RbmParams& p, const VectorXd& base,
                                       const std::vector<std::uint32_t>& free_visible) {
    RunningLogSumExp lse;
    brute_for_each_joint(p, base, free_visible,
                         [&](const VectorXd&, const VectorXd&, double s) { lse.add(s); });
    BruteMoments out;
    out.logZ = lse.value();
    out.ev = VectorXd::Zero(p.n());
    out.eh = VectorXd::Zero(p.m());
    out.evh = MatrixXd::Zero(p.n(), p.m());
    brute_for_each_joint(p, base, free_visible,
                         [&](const VectorXd& v, const VectorXd& h, double s) {
                             const double w = std::exp(s - out.logZ);
                             out.ev += w * v;
                             out.eh += w * h;
                             out.evh += w * v * h.transpose();
                         });
    return out;
}

inline std::vector<std::uint32_t> brute_all_indices(int n) {
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
    return idx;
}

}  // namespace detail

inline double brute_log_partition(const RbmParams& p) {
    p.validate();
    RunningLogSumExp lse;
    brute_for_each_joint(p, VectorXd::Zero(p.n()), detail::brute_all_indices(p.n()),
                         [&](const VectorXd&, const VectorXd&, double s) { lse.add(s); });
    return lse.value();
}

inline BruteMoments brute_free_moments(const RbmParams& p) {
    p.validate();
    return detail::brute_moments_over(p, VectorXd::Zero(p.n()), detail::brute_all_indices(p.n()));
}

inline double brute_clamped_log_partition(const RbmParams& p, const IncompleteObservation& obs) {
    p.validate();
    obs.validate(p.n());
    RunningLogSumExp lse;
    brute_for_each_joint(p, obs.context_vector(p.n()), obs.missing_indices(p.n()),
                         [&](const VectorXd&, const VectorXd&, double s) { lse.add(s); });
    return lse.value();
}

inline BruteMoments brute_clamped_moments(const RbmParams& p, const IncompleteObservation& obs) {
    p.validate();
    obs.validate(p.n());
    return detail::brute_moments_over(p, obs.context_vector(p.n()), obs.missing_indices(p.n()));
}

inline double brute_log_likelihood(const RbmParams& p,
                                   const std::vector<IncompleteObservation>& dataset) {
    p.validate();
    if (dataset.empty()) throw std::invalid_argument("brute_log_likelihood: empty dataset");
    const double logZ = brute_log_partition(p);
    double total = 0.0;
    for (const auto& obs : dataset) total += brute_clamped_log_partition(p, obs) - logZ;
    return total / static_cast<double>(dataset.size());
}

}  // namespace rbmi
