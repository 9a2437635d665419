#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/math.hpp"
#include "rbmi/model.hpp"
#include "rbmi/rng.hpp"

// Annealed importance sampling for the log partition function. The base
// distribution keeps the trained biases and zeroes the couplings, so its
// normalizer is closed-form and the anneal only scales W: beta_k = k/(T-1).
// Intermediate marginals on v have hidden layers summed analytically,
//   ln f_k(v) = b.v + sum_j softplus(c_j + beta_k (W'v)_j),
// and the b.v term cancels inside each weight increment. One blocked Gibbs
// sweep per temperature moves the runs, which advance in lockstep as columns
// of a matrix; each run draws from its own sub-stream.

namespace rbmi {

enum class AisBase { TrainedBiases };

struct AisConfig {
    int num_temperatures = 1000;
    int num_runs = 100;
    AisBase base = AisBase::TrainedBiases;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_temperatures < 2)
            throw std::invalid_argument("AisConfig: need at least two temperatures");
        if (num_runs < 1) throw std::invalid_argument("AisConfig: need at least one run");
    }
};

struct AisResult {
    double logZ = 0.0;
    double log_weight_variance = 0.0;  // sample variance of the log weights
    double stderr_logZ = 0.0;          // delta-method standard error of logZ
    std::vector<double> log_weights;   // one per run
};

inline double log_base_partition(const RbmParams& p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.n(); ++i) s += stable_softplus(p.b[i]);
    for (Eigen::Index j = 0; j < p.m(); ++j) s += stable_softplus(p.c[j]);
    return s;
}

inline AisResult ais_log_partition(const RbmParams& p, const AisConfig& cfg, Rng& rng) {
    p.validate();
    cfg.validate();
    const int n = p.n();
    const int m = p.m();
    const int R = cfg.num_runs;
    const int T = cfg.num_temperatures;

    std::vector<Rng> run_rngs;
    run_rngs.reserve(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) run_rngs.push_back(rng.child(static_cast<std::uint64_t>(r)));

    // Exact base samples: v_i ~ Bernoulli(sigmoid(b_i)) independently.
    MatrixXd V(n, R);
    for (int r = 0; r < R; ++r)
        for (int i = 0; i < n; ++i)
            V(i, r) = run_rngs[static_cast<std::size_t>(r)].bernoulli(stable_sigmoid(p.b[i])) ? 1.0
                                                                                              : 0.0;

    std::vector<double> logw(static_cast<std::size_t>(R), 0.0);
    MatrixXd H(m, R);
    for (int k = 1; k < T; ++k) {
        const double beta_prev = static_cast<double>(k - 1) / static_cast<double>(T - 1);
        const double beta = static_cast<double>(k) / static_cast<double>(T - 1);
        const MatrixXd S = p.W.transpose() * V;  // m x R
        for (int r = 0; r < R; ++r) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j) {
                const double s = S(j, r);
                acc += stable_softplus(p.c[j] + beta * s) - stable_softplus(p.c[j] + beta_prev * s);
            }
            logw[static_cast<std::size_t>(r)] += acc;
        }
        // One Gibbs sweep at inverse coupling strength beta.
        for (int r = 0; r < R; ++r) {
            Rng& rr = run_rngs[static_cast<std::size_t>(r)];
            for (int j = 0; j < m; ++j)
                H(j, r) = rr.bernoulli(stable_sigmoid(p.c[j] + beta * S(j, r))) ? 1.0 : 0.0;
        }
        const MatrixXd L = beta * (p.W * H);  // n x R
        for (int r = 0; r < R; ++r) {
            Rng& rr = run_rngs[static_cast<std::size_t>(r)];
            for (int i = 0; i < n; ++i)
                V(i, r) = rr.bernoulli(stable_sigmoid(p.b[i] + L(i, r))) ? 1.0 : 0.0;
        }
    }

    AisResult out;
    out.log_weights = logw;
    const double lme = logmeanexp(logw);
    out.logZ = log_base_partition(p) + lme;

    if (R >= 2) {
        double mean_lw = 0.0;
        for (double w : logw) mean_lw += w;
        mean_lw /= static_cast<double>(R);
        double var_lw = 0.0;
        double var_u = 0.0;  // u_r = w_r / mean weight, so mean(u) = 1
        for (double w : logw) {
            var_lw += (w - mean_lw) * (w - mean_lw);
            const double u = std::exp(w - lme);
            var_u += (u - 1.0) * (u - 1.0);
        }
        var_lw /= static_cast<double>(R - 1);
        var_u /= static_cast<double>(R - 1);
        out.log_weight_variance = var_lw;
        out.stderr_logZ = std::sqrt(var_u / static_cast<double>(R));
    } else {
        out.log_weight_variance = std::numeric_limits<double>::quiet_NaN();
        out.stderr_logZ = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

inline AisResult ais_log_partition(const RbmParams& p, const AisConfig& cfg) {
    Rng rng(cfg.seed);
    return ais_log_partition(p, cfg, rng);
}

/// Mean log-probability of fully observed data, hiddens summed analytically:
/// (1/N) sum_mu [ b.d + sum_j softplus(tau_j(d)) ] - logZ.
inline double complete_data_log_likelihood(const RbmParams& p,
                                           const std::vector<IncompleteObservation>& dataset,
                                           double logZ) {
    p.validate();
    if (dataset.empty())
        throw std::invalid_argument("complete_data_log_likelihood: empty dataset");
    double total = 0.0;
    for (const auto& obs : dataset) {
        obs.validate(p.n());
        if (!obs.is_fully_observed(p.n()))
            throw std::invalid_argument(
                "complete_data_log_likelihood: dataset contains missing entries");
        const VectorXd d = obs.context_vector(p.n());
        double s = p.b.dot(d);
        const VectorXd tau = hidden_fields(p, d);
        for (Eigen::Index j = 0; j < tau.size(); ++j) s += stable_softplus(tau[j]);
        total += s;
    }
    return total / static_cast<double>(dataset.size()) - logZ;
}

}  // namespace rbmi
