#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/math.hpp"
#include "rbmi/model.hpp"
#include "rbmi/rng.hpp"

// Naive mean field on the clamped distribution. The self-consistent system
//   m_i = sigmoid(b_i + sum_j w_ij m_j)        for missing visibles i
//   m_j = sigmoid(c_j + sum_{i in O} w_ij d_i + sum_{i in M} w_ij m_i)
// is iterated by block-synchronous successive substitution: all m_i from the
// previous m_h, then all m_j from the new m_v. Solutions seed the clamped
// Gibbs chains with one Bernoulli draw per magnetization.

namespace rbmi {

struct MeanFieldMoments {
    VectorXd mv;  // magnetizations of the missing visibles, in missing-index order
    VectorXd mh;  // hidden magnetizations
    int iterations = 0;
    bool converged = false;
};

struct MfStats {
    std::int64_t solves = 0;
    std::int64_t failures = 0;

    void merge(const MfStats& o) {
        solves += o.solves;
        failures += o.failures;
    }
    double failure_rate() const {
        return solves == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(solves);
    }
};

namespace detail {

/// The clamped system with the observation folded in: rows of W at the
/// missing coordinates plus the observed part of the hidden field.
struct MfSystem {
    Eigen::Index q = 0;
    MatrixXd Wm;   // q x m
    MatrixXd Wmt;  // m x q, contiguous for the hidden sweep
    VectorXd bm;
    VectorXd tau_base;
};

inline MfSystem make_mf_system(const RbmParams& p, const IncompleteObservation& obs,
                               const std::vector<std::uint32_t>& missing) {
    MfSystem sys;
    sys.q = static_cast<Eigen::Index>(missing.size());
    sys.Wm.resize(sys.q, p.m());
    sys.bm.resize(sys.q);
    for (Eigen::Index t = 0; t < sys.q; ++t) {
        const auto i = static_cast<Eigen::Index>(missing[static_cast<std::size_t>(t)]);
        sys.Wm.row(t) = p.W.row(i);
        sys.bm[t] = p.b[i];
    }
    sys.Wmt = sys.Wm.transpose();
    sys.tau_base = hidden_fields(p, obs.context_vector(p.n()));
    return sys;
}

/// clamp_open01(stable_sigmoid(x)) coefficientwise, one shared exp pass.
inline void clamped_sigmoid_inplace(VectorXd& x) {
    const double hi = std::nextafter(1.0, 0.0);
    const double lo = 2.2250738585072014e-308;  // smallest normal double
    auto a = x.array();
    const Eigen::ArrayXd e = (-a.abs()).exp();
    a = ((a >= 0.0).select(1.0, e) / (1.0 + e)).max(lo).min(hi);
}

inline MeanFieldMoments solve_prepared(const MfSystem& sys, const VectorXd& mv0, double tol,
                                       int max_iter, double damping) {
    MeanFieldMoments out;
    out.mv = mv0;
    out.mh = sys.tau_base;
    out.mh.noalias() += sys.Wmt * out.mv;
    clamped_sigmoid_inplace(out.mh);
    VectorXd cand = sys.bm;
    cand.noalias() += sys.Wm * out.mh;
    clamped_sigmoid_inplace(cand);

    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        if (damping > 0.0)
            out.mv = damping * out.mv + (1.0 - damping) * cand;
        else
            out.mv = cand;
        out.mh = sys.tau_base;
        out.mh.noalias() += sys.Wmt * out.mv;
        clamped_sigmoid_inplace(out.mh);
        cand = sys.bm;
        cand.noalias() += sys.Wm * out.mh;
        clamped_sigmoid_inplace(cand);
        const double residual = sys.q == 0 ? 0.0 : (cand - out.mv).cwiseAbs().maxCoeff();
        if (residual < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace detail

/// Fixed point search from the given starting magnetizations. Convergence is
/// declared on the equation residual: after every sweep the hidden equations
/// hold exactly by construction, and the sweep's next visible candidate is
/// reused as the residual probe, so a converged result genuinely satisfies
/// both equations to within tol coordinatewise. Non-convergence is reported
/// through the flag, never thrown. damping blends in that fraction of the
/// previous visible iterate.
inline MeanFieldMoments solve_clamped_mf(const RbmParams& p, const IncompleteObservation& obs,
                                         const MeanFieldMoments& init, double tol, int max_iter,
                                         double damping = 0.0) {
    p.validate();
    obs.validate(p.n());
    if (!(tol > 0.0)) throw std::invalid_argument("solve_clamped_mf: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solve_clamped_mf: max_iter must be >= 1");
    if (damping < 0.0 || damping >= 1.0)
        throw std::invalid_argument("solve_clamped_mf: damping must be in [0,1)");

    const std::vector<std::uint32_t> missing = obs.missing_indices(p.n());
    const auto q = static_cast<Eigen::Index>(missing.size());
    if (init.mv.size() != q)
        throw std::invalid_argument("solve_clamped_mf: init.mv must have one entry per missing index");
    for (Eigen::Index t = 0; t < q; ++t)
        if (!(init.mv[t] > 0.0 && init.mv[t] < 1.0))
            throw std::invalid_argument("solve_clamped_mf: init entries must lie in (0,1)");

    return detail::solve_prepared(detail::make_mf_system(p, obs, missing), init.mv, tol, max_iter,
                                  damping);
}

/// Multi-start mean field followed by one Bernoulli draw per missing
/// coordinate: the initial points for the clamped Gibbs chains. Start nu uses
/// the sub-stream rng.child(nu) for both its uniform starting magnetizations
/// and its final draw, so the starts are mutually independent and individually
/// reproducible. Non-converged solves still emit a point from their last
/// iterate; stats, when given, accumulates the failure count.
inline std::vector<VectorXd> generate_initial_points(const RbmParams& p,
                                                     const IncompleteObservation& obs, int count,
                                                     Rng& rng, double tol, int max_iter,
                                                     double damping = 0.0,
                                                     MfStats* stats = nullptr) {
    p.validate();
    obs.validate(p.n());
    if (count < 1) throw std::invalid_argument("generate_initial_points: count must be >= 1");

    const std::vector<std::uint32_t> missing = obs.missing_indices(p.n());
    const auto q = static_cast<Eigen::Index>(missing.size());

    std::vector<VectorXd> points;
    points.reserve(static_cast<std::size_t>(count));
    if (q == 0) {
        points.assign(static_cast<std::size_t>(count), VectorXd(0));
        return points;
    }

    if (!(tol > 0.0)) throw std::invalid_argument("solve_clamped_mf: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solve_clamped_mf: max_iter must be >= 1");
    if (damping < 0.0 || damping >= 1.0)
        throw std::invalid_argument("solve_clamped_mf: damping must be in [0,1)");
    const detail::MfSystem sys = detail::make_mf_system(p, obs, missing);

    VectorXd mv0(q);
    for (int nu = 0; nu < count; ++nu) {
        Rng r = rng.child(static_cast<std::uint64_t>(nu));
        for (Eigen::Index t = 0; t < q; ++t) mv0[t] = clamp_open01(r.uniform01());
        const MeanFieldMoments mf = detail::solve_prepared(sys, mv0, tol, max_iter, damping);
        if (stats) {
            stats->solves += 1;
            if (!mf.converged) stats->failures += 1;
        }
        VectorXd x(q);
        for (Eigen::Index t = 0; t < q; ++t) x[t] = r.bernoulli(mf.mv[t]) ? 1.0 : 0.0;
        points.push_back(std::move(x));
    }
    return points;
}

}  // namespace rbmi
