#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

namespace rbmi {

/// 1/(1+e^{-x}), evaluated on the side that never overflows.
inline double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// ln(1+e^x); for large positive x this passes x through unchanged.
inline double stable_softplus(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

/// Pulls a probability into the open interval (0,1): saturated sigmoids can
/// round to exactly 0 or 1 in doubles, which breaks logit-style consumers.
inline double clamp_open01(double x) {
    const double hi = std::nextafter(1.0, 0.0);
    const double lo = 2.2250738585072014e-308;  // smallest normal double
    return std::min(hi, std::max(lo, x));
}

/// Inverse sigmoid. Requires p strictly inside (0,1).
inline double stable_logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("stable_logit: argument must lie in (0,1)");
    }
    return std::log(p) - std::log1p(-p);
}

inline double logsumexp2(double a, double b) {
    const double m = std::max(a, b);
    if (!std::isfinite(m)) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double logsumexp3(double a, double b, double c) {
    const double m = std::max({a, b, c});
    if (!std::isfinite(m)) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

/// Streaming log-sum-exp with a running maximum; insertion order is fixed by
/// the caller, so reductions stay deterministic.
class RunningLogSumExp {
  public:
    void add(double x) {
        if (count_ == 0 || x > max_) {
            if (count_ > 0) sum_ *= std::exp(max_ - x);
            max_ = x;
            sum_ += 1.0;
        } else {
            sum_ += std::exp(x - max_);
        }
        ++count_;
    }

    long count() const { return count_; }

    double value() const {
        if (count_ == 0) throw std::domain_error("log-sum-exp of empty set");
        return max_ + std::log(sum_);
    }

  private:
    double max_ = 0.0;
    double sum_ = 0.0;
    long count_ = 0;
};

/// ln((1/K) sum_k e^{x_k}) with max shift.
inline double logmeanexp(std::span<const double> xs) {
    if (xs.empty()) throw std::domain_error("logmeanexp of empty set");
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s / static_cast<double>(xs.size()));
}

}  // namespace rbmi
