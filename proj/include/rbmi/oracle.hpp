#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/gradient.hpp"
#include "rbmi/math.hpp"
#include "rbmi/model.hpp"

// Exact quantities by exhaustive enumeration. The hidden layer is always
// summed analytically, sum_h exp(.) = exp(b.v) * prod_j (1 + e^{tau_j(v)}),
// so only visible (or missing-visible) configurations are walked. A Gray-code
// walk keeps the b.v term and the tau vector incremental. Everything here is
// single-threaded and evaluates states in one fixed order, so results are
// reproducible bit for bit.

namespace rbmi {

struct ExactMoments {
    VectorXd ev;   // E[v_i]
    VectorXd eh;   // E[h_j]
    MatrixXd evh;  // E[v_i h_j]
    double logZ = 0.0;
};

namespace detail {

inline constexpr int kMaxEnumerationBits = 20;

inline void check_enum_size(std::size_t q, const char* what) {
    if (q > static_cast<std::size_t>(kMaxEnumerationBits))
        throw std::length_error(std::string(what) + ": enumeration over " + std::to_string(q) +
                                " bits exceeds the 2^" + std::to_string(kMaxEnumerationBits) +
                                " guard");
}

inline std::vector<std::uint32_t> all_indices(int n) {
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
    return idx;
}

/// Walks all 2^q assignments of the coordinates in free_idx, holding the rest
/// of the visible layer fixed at `base`. Calls f(bits, bdot, tau) per state,
/// where bits holds the current 0/1 assignment aligned with free_idx, bdot is
/// the full b.v, and tau the full hidden field vector.
template <class F>
void for_each_visible_config(const RbmParams& p, const VectorXd& base,
                             const std::vector<std::uint32_t>& free_idx, F&& f) {
    const std::size_t q = free_idx.size();
    check_enum_size(q, "for_each_visible_config");

    // Contiguous copies of the rows being toggled.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Wfree(
        static_cast<Eigen::Index>(q), p.m());
    VectorXd bfree(static_cast<Eigen::Index>(q));
    for (std::size_t t = 0; t < q; ++t) {
        Wfree.row(static_cast<Eigen::Index>(t)) = p.W.row(static_cast<Eigen::Index>(free_idx[t]));
        bfree[static_cast<Eigen::Index>(t)] = p.b[static_cast<Eigen::Index>(free_idx[t])];
    }

    VectorXd v = base;
    for (std::uint32_t i : free_idx) v[static_cast<Eigen::Index>(i)] = 0.0;
    double bdot = p.b.dot(v);
    VectorXd tau = hidden_fields(p, v);
    std::vector<std::uint8_t> bits(q, 0);

    f(bits, bdot, tau);
    const std::uint64_t total = std::uint64_t{1} << q;
    for (std::uint64_t k = 1; k < total; ++k) {
        const int t = std::countr_zero(k);  // Gray code: flip lowest set bit of k
        const auto ti = static_cast<Eigen::Index>(t);
        if (bits[static_cast<std::size_t>(t)]) {
            bits[static_cast<std::size_t>(t)] = 0;
            bdot -= bfree[ti];
            tau -= Wfree.row(ti);
        } else {
            bits[static_cast<std::size_t>(t)] = 1;
            bdot += bfree[ti];
            tau += Wfree.row(ti);
        }
        f(bits, bdot, tau);
    }
}

/// ln sum over the walked states of exp(b.v + sum_j softplus(tau_j)).
inline double log_partition_over(const RbmParams& p, const VectorXd& base,
                                 const std::vector<std::uint32_t>& free_idx) {
    RunningLogSumExp lse;
    for_each_visible_config(p, base, free_idx,
                            [&](const std::vector<std::uint8_t>&, double bdot, const VectorXd& tau) {
                                double s = bdot;
                                for (Eigen::Index j = 0; j < tau.size(); ++j)
                                    s += stable_softplus(tau[j]);
                                lse.add(s);
                            });
    return lse.value();
}

/// Moments of the distribution restricted to the walked states. Coordinates
/// outside free_idx keep their base values in ev/evh.
inline ExactMoments moments_over(const RbmParams& p, const VectorXd& base,
                                 const std::vector<std::uint32_t>& free_idx) {
    ExactMoments out;
    out.logZ = log_partition_over(p, base, free_idx);
    out.ev = VectorXd::Zero(p.n());
    out.eh = VectorXd::Zero(p.m());
    out.evh = MatrixXd::Zero(p.n(), p.m());

    VectorXd sig(p.m());
    for_each_visible_config(
        p, base, free_idx,
        [&](const std::vector<std::uint8_t>& bits, double bdot, const VectorXd& tau) {
            double s = bdot;
            for (Eigen::Index j = 0; j < tau.size(); ++j) s += stable_softplus(tau[j]);
            const double w = std::exp(s - out.logZ);
            if (w == 0.0) return;
            for (Eigen::Index j = 0; j < tau.size(); ++j) sig[j] = stable_sigmoid(tau[j]);
            out.eh += w * sig;
            for (std::size_t t = 0; t < free_idx.size(); ++t) {
                if (!bits[t]) continue;
                const auto i = static_cast<Eigen::Index>(free_idx[t]);
                out.ev[i] += w;
                out.evh.row(i) += w * sig.transpose();
            }
        });

    // Fixed coordinates: v_i is a constant, so E[v_i h_j] = v_i E[h_j].
    std::vector<std::uint8_t> is_free(static_cast<std::size_t>(p.n()), 0);
    for (std::uint32_t i : free_idx) is_free[i] = 1;
    for (Eigen::Index i = 0; i < p.n(); ++i) {
        if (is_free[static_cast<std::size_t>(i)]) continue;
        out.ev[i] = base[i];
        out.evh.row(i) = base[i] * out.eh.transpose();
    }

    // Rounding hygiene: the mass sums to 1 only up to machine precision.
    auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    out.ev = out.ev.unaryExpr(clamp01);
    out.eh = out.eh.unaryExpr(clamp01);
    out.evh = out.evh.unaryExpr(clamp01);
    return out;
}

}  // namespace detail

inline double exact_log_partition(const RbmParams& p) {
    p.validate();
    return detail::log_partition_over(p, VectorXd::Zero(p.n()), detail::all_indices(p.n()));
}

inline ExactMoments exact_free_moments(const RbmParams& p) {
    p.validate();
    return detail::moments_over(p, VectorXd::Zero(p.n()), detail::all_indices(p.n()));
}

/// ln sum_{v_M} exp(b.v + sum_j softplus(tau_j)) with observed coordinates
/// held at their data values.
inline double exact_clamped_log_partition(const RbmParams& p, const IncompleteObservation& obs) {
    p.validate();
    obs.validate(p.n());
    return detail::log_partition_over(p, obs.context_vector(p.n()), obs.missing_indices(p.n()));
}

inline ExactMoments exact_clamped_moments(const RbmParams& p, const IncompleteObservation& obs) {
    p.validate();
    obs.validate(p.n());
    return detail::moments_over(p, obs.context_vector(p.n()), obs.missing_indices(p.n()));
}

inline double exact_log_likelihood(const RbmParams& p,
                                   const std::vector<IncompleteObservation>& dataset) {
    p.validate();
    if (dataset.empty()) throw std::invalid_argument("exact_log_likelihood: empty dataset");
    const double logZ = exact_log_partition(p);
    double total = 0.0;
    for (const auto& obs : dataset) total += exact_clamped_log_partition(p, obs) - logZ;
    return total / static_cast<double>(dataset.size());
}

inline ParamGrad exact_gradient(const RbmParams& p,
                                const std::vector<IncompleteObservation>& dataset) {
    p.validate();
    if (dataset.empty()) throw std::invalid_argument("exact_gradient: empty dataset");
    GradientAccumulator acc(p.n(), p.m());
    for (const auto& obs : dataset) {
        const ExactMoments cm = exact_clamped_moments(p, obs);
        acc.add_clamped(obs, cm.ev, cm.eh, cm.evh);
    }
    const ExactMoments fm = exact_free_moments(p);
    return acc.finish(fm.ev, fm.eh, fm.evh);
}

}  // namespace rbmi
