#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/math.hpp"
#include "rbmi/model.hpp"
#include "rbmi/sampler.hpp"

// Moment estimators over visible-only sample sets. The plain Monte Carlo
// average (used by the baseline) needs paired (v,h) samples; the spatial
// estimators marginalize the hidden layer, and for each target coordinate
// also the coordinate itself, analytically:
//
//   E_i   = mean_nu sigmoid(phi_i(v))                 visible moments
//   E_j   = mean_nu sigmoid(tau_j(v))                 hidden moments
//   E_ij  = mean_nu sigmoid(phi_i(v)) sigmoid(tau_ji(v) + w_ij)
//
// with tau_ji(v) = tau_j(v) - w_ij v_i and phi_i(v) = b_i + sum_j [softplus(
// tau_ji + w_ij) - softplus(tau_ji)]. The pairwise summand is the joint
// probability of v_i = 1 and h_j = 1 given the rest of the sample, factored
// as P(v_i = 1) P(h_j = 1 | v_i = 1); both sigmoids saturate harmlessly at
// 0 or 1. Everything is O(K |A| m) time and O(K m) sample-indexed memory.

namespace rbmi {

/// K visible samples over a free region A, with the remaining coordinates
/// fixed at context values. Covers both the clamped case (A = missing set)
/// and the free case (A = all of V, empty context).
struct SampleSet {
    int n = 0;
    std::vector<std::uint32_t> free_idx;  // A, strictly increasing
    VectorXd context;                     // length n; entries in A are zero placeholders
    std::vector<VectorXd> samples;        // each of length |A|, aligned with free_idx

    std::size_t size() const { return samples.size(); }
    std::size_t region_size() const { return free_idx.size(); }

    void validate() const {
        if (samples.empty()) throw std::invalid_argument("SampleSet: need at least one sample");
        if (context.size() != n) throw std::invalid_argument("SampleSet: context length mismatch");
        std::uint32_t prev = 0;
        bool first = true;
        for (std::uint32_t i : free_idx) {
            if (i >= static_cast<std::uint32_t>(n))
                throw std::invalid_argument("SampleSet: free index out of range");
            if (!first && i <= prev)
                throw std::invalid_argument("SampleSet: free indices must be strictly increasing");
            prev = i;
            first = false;
        }
        for (const auto& s : samples) {
            if (static_cast<std::size_t>(s.size()) != free_idx.size())
                throw std::invalid_argument("SampleSet: sample length mismatch");
            if (!is_binary(s)) throw std::invalid_argument("SampleSet: samples must be binary");
        }
    }

    static SampleSet clamped(const IncompleteObservation& obs, int n,
                             std::vector<VectorXd> samples) {
        SampleSet s;
        s.n = n;
        s.free_idx = obs.missing_indices(n);
        s.context = obs.context_vector(n);
        s.samples = std::move(samples);
        s.validate();
        return s;
    }

    static SampleSet free_region(int n, std::vector<VectorXd> samples) {
        SampleSet s;
        s.n = n;
        s.free_idx.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) s.free_idx[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
        s.context = VectorXd::Zero(n);
        s.samples = std::move(samples);
        s.validate();
        return s;
    }
};

enum class EstimatorKind { MCI, SMCI };

/// ev and evh are indexed by the sample set's free region (|A| and |A| x m);
/// eh always covers every hidden unit. For paired-sample MCI the region is
/// all of V.
struct MomentEstimates {
    VectorXd ev;
    VectorXd eh;
    MatrixXd evh;
    EstimatorKind kind = EstimatorKind::SMCI;
};

/// Per-sample hidden fields plus what the spatial estimators derive from
/// them. Stores the full visible matrix, tau, and a transposed copy of W so
/// the inner loops walk contiguous memory; tau_excl / phi / phi_excl are
/// computed on demand rather than materialized.
class FieldCache {
  public:
    FieldCache(const RbmParams& p, const SampleSet& s)
        : b_(p.b), Wt_(p.W.transpose()), V_(p.n(), static_cast<Eigen::Index>(s.size())) {
        p.validate();
        s.validate();
        if (s.n != p.n()) throw std::invalid_argument("FieldCache: visible count mismatch");
        for (std::size_t nu = 0; nu < s.size(); ++nu) {
            auto col = V_.col(static_cast<Eigen::Index>(nu));
            col = s.context;
            for (std::size_t t = 0; t < s.free_idx.size(); ++t)
                col[static_cast<Eigen::Index>(s.free_idx[t])] = s.samples[nu][static_cast<Eigen::Index>(t)];
        }
        tau_ = (p.W.transpose() * V_).colwise() + p.c;
    }

    Eigen::Index K() const { return V_.cols(); }
    Eigen::Index n() const { return V_.rows(); }
    Eigen::Index m() const { return tau_.rows(); }

    double v(Eigen::Index nu, Eigen::Index i) const { return V_(i, nu); }
    double tau(Eigen::Index nu, Eigen::Index j) const { return tau_(j, nu); }
    double w(Eigen::Index i, Eigen::Index j) const { return Wt_(j, i); }

    /// tau_j with coordinate i's contribution removed.
    double tau_excl(Eigen::Index nu, Eigen::Index j, Eigen::Index i) const {
        return tau_(j, nu) - Wt_(j, i) * V_(i, nu);
    }

    /// phi_i: the log-odds of v_i = 1 against v_i = 0 with the rest of the
    /// sample held fixed and the hidden layer summed out.
    double phi(Eigen::Index nu, Eigen::Index i) const {
        double acc = b_[i];
        for (Eigen::Index j = 0; j < m(); ++j) {
            const double a = tau_excl(nu, j, i);
            acc += stable_softplus(a + Wt_(j, i)) - stable_softplus(a);
        }
        return acc;
    }

    /// phi_i without the j-th hidden unit's summand.
    double phi_excl(Eigen::Index nu, Eigen::Index i, Eigen::Index j) const {
        const double a = tau_excl(nu, j, i);
        return phi(nu, i) - (stable_softplus(a + Wt_(j, i)) - stable_softplus(a));
    }

    const MatrixXd& v_matrix() const { return V_; }
    const MatrixXd& tau_matrix() const { return tau_; }

  private:
    VectorXd b_;
    MatrixXd Wt_;   // m x n
    MatrixXd V_;    // n x K
    MatrixXd tau_;  // m x K
};

/// Plain sample averages over paired states: the baseline estimator.
inline MomentEstimates mci_moments(const std::vector<ChainState>& states) {
    if (states.empty()) throw std::invalid_argument("mci_moments: empty sample set");
    const auto K = static_cast<Eigen::Index>(states.size());
    const auto n = states[0].v.size();
    const auto m = states[0].h.size();
    MatrixXd V(n, K), H(m, K);
    for (Eigen::Index nu = 0; nu < K; ++nu) {
        const auto& st = states[static_cast<std::size_t>(nu)];
        if (st.v.size() != n || st.h.size() != m)
            throw std::invalid_argument("mci_moments: ragged sample set");
        V.col(nu) = st.v;
        H.col(nu) = st.h;
    }
    MomentEstimates out;
    out.kind = EstimatorKind::MCI;
    out.ev = V.rowwise().mean();
    out.eh = H.rowwise().mean();
    out.evh = (V * H.transpose()) / static_cast<double>(K);
    return out;
}

namespace detail {

enum : unsigned { kWantV = 1, kWantH = 2, kWantVH = 4 };

inline MomentEstimates smci_core(const RbmParams& p, const SampleSet& s, unsigned want) {
    FieldCache cache(p, s);
    const auto K = cache.K();
    const auto m = cache.m();
    const auto A = static_cast<Eigen::Index>(s.free_idx.size());

    MomentEstimates out;
    out.kind = EstimatorKind::SMCI;
    if (want & kWantH) out.eh = cache.tau_matrix().array().logistic().rowwise().mean();
    if (!(want & (kWantV | kWantVH))) return out;

    if (want & kWantV) out.ev = VectorXd::Zero(A);
    if (want & kWantVH) out.evh = MatrixXd::Zero(A, m);

    // Region-local slices of the parameters so the per-sample work stays
    // dense. With binary samples one of the two fields entering each
    // softplus difference is tau itself: writing sgn = 1 - 2 v and
    // nt = tau + sgn * w gives
    //
    //   softplus(tau_ji + w_ij) - softplus(tau_ji) = sgn (softplus(nt) -
    //                                                     softplus(tau))
    //   sigmoid(tau_ji + w_ij) = sigmoid(v == 1 ? tau : nt)
    //
    // so each sample needs one dense exp and one dense log; softplus and
    // sigmoid share the exp(-|x|) evaluation. log(1 + e) with e <= 1 stays
    // accurate without log1p, which has no vectorized double path.
    Eigen::ArrayXXd wr(A, m);
    Eigen::ArrayXd br(A);
    for (Eigen::Index t = 0; t < A; ++t) {
        const auto i = static_cast<Eigen::Index>(s.free_idx[static_cast<std::size_t>(t)]);
        wr.row(t) = p.W.row(i).array();
        br[t] = p.b[i];
    }

    Eigen::ArrayXXd nt(A, m), ent(A, m), delta(A, m);
    Eigen::ArrayXd sgn(A), phi(A), sv(A);
    Eigen::ArrayXd tau_nu(m), etau(m), sp_tau(m), sig_tau(m);
    for (Eigen::Index nu = 0; nu < K; ++nu) {
        const VectorXd& vr = s.samples[static_cast<std::size_t>(nu)];
        sgn = 1.0 - 2.0 * vr.array();
        tau_nu = cache.tau_matrix().col(nu).array();
        etau = (-tau_nu.abs()).exp();
        sp_tau = tau_nu.max(0.0) + (1.0 + etau).log();
        nt = wr.colwise() * sgn;
        nt.rowwise() += tau_nu.transpose();
        ent = (-nt.abs()).exp();
        delta = nt.max(0.0) + (1.0 + ent).log();
        delta.rowwise() -= sp_tau.transpose();
        delta.colwise() *= sgn;
        phi = br + delta.rowwise().sum();
        sv = phi.logistic();
        if (want & kWantV) out.ev.array() += sv;
        if (want & kWantVH) {
            sig_tau = (tau_nu >= 0.0).select(1.0, etau) / (1.0 + etau);
            ent = (nt >= 0.0).select(1.0, ent) / (1.0 + ent);
            ent = (sgn.replicate(1, m) < 0.0)
                      .select(sig_tau.transpose().replicate(A, 1), ent);
            out.evh.array() += ent.colwise() * sv;
        }
    }
    const double inv = 1.0 / static_cast<double>(K);
    if (want & kWantV) out.ev *= inv;
    if (want & kWantVH) out.evh *= inv;
    return out;
}

}  // namespace detail

/// Visible moments over the free region.
inline VectorXd smci_v(const RbmParams& p, const SampleSet& s) {
    return detail::smci_core(p, s, detail::kWantV).ev;
}

/// Hidden moments.
inline VectorXd smci_h(const RbmParams& p, const SampleSet& s) {
    return detail::smci_core(p, s, detail::kWantH).eh;
}

/// Pairwise moments over (free region) x (hidden units).
inline MatrixXd smci_vh(const RbmParams& p, const SampleSet& s) {
    return detail::smci_core(p, s, detail::kWantVH).evh;
}

/// All three in one pass over the samples.
inline MomentEstimates smci_moments(const RbmParams& p, const SampleSet& s) {
    return detail::smci_core(p, s, detail::kWantV | detail::kWantH | detail::kWantVH);
}

/// Observed-coordinate pairwise term: the data value gates the hidden moment.
inline double mixed_term_vh(double d_i, double eh_j) {
    return d_i * eh_j;
}

}  // namespace rbmi
