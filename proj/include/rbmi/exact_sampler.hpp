#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rbmi/math.hpp"
#include "rbmi/model.hpp"
#include "rbmi/rng.hpp"
#include "rbmi/sampler.hpp"

// Exact i.i.d. sampling from small models, plus a streaming variance
// accumulator. Together these measure the sampling variance of moment
// estimators without any Markov-chain error in the inputs.

namespace rbmi {

/// Draws visible configurations from the exact marginal P(v) by inversion of
/// the cumulative distribution tabulated over all 2^n states.
class ExactVisibleSampler {
  public:
    explicit ExactVisibleSampler(const RbmParams& p) : p_(p) {
        p.validate();
        if (p.n() > 16)
            throw std::length_error("exact sampler: n > 16 would tabulate too many states");
        const std::uint64_t total = std::uint64_t{1} << p.n();
        std::vector<double> logp(total);
        VectorXd v(p.n());
        RunningLogSumExp lse;
        for (std::uint64_t k = 0; k < total; ++k) {
            for (Eigen::Index i = 0; i < p.n(); ++i) v[i] = (k >> i) & 1 ? 1.0 : 0.0;
            double s = p.b.dot(v);
            const VectorXd tau = hidden_fields(p, v);
            for (Eigen::Index j = 0; j < tau.size(); ++j) s += stable_softplus(tau[j]);
            logp[k] = s;
            lse.add(s);
        }
        const double logZ = lse.value();
        cdf_.resize(total);
        double acc = 0.0;
        for (std::uint64_t k = 0; k < total; ++k) {
            acc += std::exp(logp[k] - logZ);
            cdf_[k] = acc;
        }
        cdf_.back() = 1.0;  // absorb rounding so inversion cannot fall off the end
    }

    VectorXd draw_visible(Rng& rng) const {
        const double u = rng.uniform01();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        const std::uint64_t k = static_cast<std::uint64_t>(std::distance(cdf_.begin(), it));
        VectorXd v(p_.n());
        for (Eigen::Index i = 0; i < p_.n(); ++i) v[i] = (k >> i) & 1 ? 1.0 : 0.0;
        return v;
    }

    /// Joint draw: exact visible marginal, then one conditional hidden draw.
    ChainState draw_pair(Rng& rng) const {
        ChainState st;
        st.v = draw_visible(rng);
        const VectorXd tau = hidden_fields(p_, st.v);
        st.h.resize(p_.m());
        for (Eigen::Index j = 0; j < tau.size(); ++j)
            st.h[j] = rng.bernoulli(stable_sigmoid(tau[j])) ? 1.0 : 0.0;
        return st;
    }

    const RbmParams& params() const { return p_; }

  private:
    RbmParams p_;
    std::vector<double> cdf_;
};

/// Welford per-coordinate mean and unbiased sample variance.
class RunningVariance {
  public:
    explicit RunningVariance(Eigen::Index size)
        : mean_(VectorXd::Zero(size)), m2_(VectorXd::Zero(size)) {}

    void add(const VectorXd& x) {
        if (x.size() != mean_.size()) throw std::invalid_argument("running variance: size mismatch");
        ++count_;
        const VectorXd delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta.cwiseProduct(x - mean_);
    }

    long count() const { return count_; }
    const VectorXd& mean() const { return mean_; }

    VectorXd variance() const {
        if (count_ < 2) throw std::logic_error("running variance: needs at least two samples");
        return m2_ / static_cast<double>(count_ - 1);
    }

  private:
    VectorXd mean_;
    VectorXd m2_;
    long count_ = 0;
};

}  // namespace rbmi
