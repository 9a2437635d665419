#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rbmi/data.hpp"
#include "rbmi/estimators.hpp"
#include "rbmi/gradient.hpp"
#include "rbmi/io.hpp"
#include "rbmi/meanfield.hpp"
#include "rbmi/model.hpp"
#include "rbmi/rng.hpp"
#include "rbmi/sampler.hpp"

// Likelihood ascent on incomplete data. Two gradient backends share one
// assembly path: the proposed method (mean-field initialized clamped chains,
// persistent free chains, spatial estimators) and the lossy baseline
// (uniform-initialized fresh chains, plain Monte Carlo averages). AdaMax with
// bias correction performs the parameter updates.
//
// Every random decision descends from the master seed through named
// sub-streams, so (config, seed, dataset) determines the entire run,
// including the sample streams, bit for bit.

namespace rbmi {

enum class Method { Proposed, LossyCd };

inline const char* method_name(Method m) {
    return m == Method::Proposed ? "proposed" : "lossy-cd";
}

struct TrainConfig {
    Method method = Method::Proposed;
    int hidden = 16;          // number of hidden units
    int batch_size = 128;
    int epochs = 100;
    int k_hat = 1;            // clamped chains per datum
    int r_hat = 16;           // clamped Gibbs steps
    int k_tilde = 128;        // free chains
    int r_tilde = 16;         // free Gibbs steps
    double missing_prob = 0.0;
    double alpha = 0.002;     // AdaMax step size
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double mf_tol = 1e-6;
    int mf_max_iter = 1000;
    double mf_damping = 0.0;
    std::uint64_t seed = 0;
    int eval_every = 1;
    bool wall_clock = true;   // false writes 0 to the seconds column, keeping logs bit-stable

    void validate() const {
        if (hidden < 1) throw std::invalid_argument("TrainConfig: hidden must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
        if (k_hat < 1 || k_tilde < 1)
            throw std::invalid_argument("TrainConfig: sample counts must be >= 1");
        if (r_hat < 0 || r_tilde < 0)
            throw std::invalid_argument("TrainConfig: step counts must be >= 0");
        if (missing_prob < 0.0 || missing_prob > 1.0)
            throw std::invalid_argument("TrainConfig: missing_prob must be in [0,1]");
        if (!(alpha > 0.0)) throw std::invalid_argument("TrainConfig: alpha must be positive");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw std::invalid_argument("TrainConfig: decay rates must lie in [0,1)");
        if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be positive");
        if (!(mf_tol > 0.0)) throw std::invalid_argument("TrainConfig: mf_tol must be positive");
        if (mf_max_iter < 1) throw std::invalid_argument("TrainConfig: mf_max_iter must be >= 1");
        if (mf_damping < 0.0 || mf_damping >= 1.0)
            throw std::invalid_argument("TrainConfig: mf_damping must be in [0,1)");
        if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
    }
};

struct OptimizerState {
    ParamGrad moment;   // exponentially decayed first moment
    ParamGrad infnorm;  // exponentially decayed infinity norm, elementwise >= 0
    long t = 0;

    static OptimizerState zero(int n, int m) {
        return OptimizerState{ParamGrad::zero(n, m), ParamGrad::zero(n, m), 0};
    }
};

struct MetricsRow {
    int epoch = 0;
    std::string split;  // "train" or "test"
    double loglik = 0.0;
    double grad_norm = 0.0;
    double mf_fail_rate = 0.0;
    double seconds = 0.0;
};

struct MetricsLog {
    std::vector<MetricsRow> rows;
};

inline std::string metrics_to_csv(const MetricsLog& log) {
    std::string out = "epoch,split,loglik,grad_norm,mf_fail_rate,seconds\n";
    for (const auto& r : log.rows) {
        out += std::to_string(r.epoch);
        out += ',';
        out += r.split;
        out += ',';
        out += format_double(r.loglik);
        out += ',';
        out += format_double(r.grad_norm);
        out += ',';
        out += format_double(r.mf_fail_rate);
        out += ',';
        out += format_double(r.seconds);
        out += '\n';
    }
    return out;
}

// Named sub-streams of the master seed.
namespace stream_salt {
inline constexpr std::uint64_t kInit = 1;     // parameter initialization
inline constexpr std::uint64_t kPcdInit = 2;  // persistent chain start states
inline constexpr std::uint64_t kShuffle = 3;  // epoch shuffles (.child(epoch))
inline constexpr std::uint64_t kUpdate = 4;   // per-update sampling (.child(counter))
}  // namespace stream_salt

// Within one update stream:
//   .child(0)            free-side sampling
//   .child(1).child(idx) datum idx's clamped side
//       .child(0)        mean-field starts and initial-point draws
//       .child(1)        clamped Gibbs chains

/// Per-datum (or free-side) moments over the full index range. Clamped
/// estimates over a missing region are scattered into this shape first;
/// entries at observed coordinates are ignored by the assembly, which takes
/// the data values there.
struct FullMoments {
    VectorXd ev;   // length n
    VectorXd eh;   // length m
    MatrixXd evh;  // n x m
};

/// Spreads region-indexed estimates into full-size containers (zeros
/// elsewhere).
inline FullMoments scatter_region(const VectorXd& ev_region, const VectorXd& eh,
                                  const MatrixXd& evh_region,
                                  const std::vector<std::uint32_t>& region, int n) {
    if (ev_region.size() != static_cast<Eigen::Index>(region.size()) ||
        evh_region.rows() != static_cast<Eigen::Index>(region.size()))
        throw std::invalid_argument("scatter_region: region size mismatch");
    FullMoments out;
    out.ev = VectorXd::Zero(n);
    out.eh = eh;
    out.evh = MatrixXd::Zero(n, eh.size());
    for (std::size_t t = 0; t < region.size(); ++t) {
        const auto i = static_cast<Eigen::Index>(region[t]);
        out.ev[i] = ev_region[static_cast<Eigen::Index>(t)];
        out.evh.row(i) = evh_region.row(static_cast<Eigen::Index>(t));
    }
    return out;
}

/// The one gradient assembly both methods and the oracle-injection tests go
/// through: positive phase from per-datum clamped moments (data values at
/// observed coordinates), negative phase from one set of free moments.
template <class ClampedFn, class FreeFn>
ParamGrad assemble_incomplete_gradient(int n, int m, const IncompleteDataset& data,
                                       std::span<const std::size_t> batch, ClampedFn&& clamped_fn,
                                       FreeFn&& free_fn) {
    if (batch.empty()) throw std::invalid_argument("assemble_incomplete_gradient: empty minibatch");
    GradientAccumulator acc(n, m);
    for (std::size_t idx : batch) {
        if (idx >= data.observations.size())
            throw std::out_of_range("assemble_incomplete_gradient: batch index out of range");
        const IncompleteObservation& obs = data.observations[idx];
        const FullMoments cm = clamped_fn(obs, idx);
        acc.add_clamped(obs, cm.ev, cm.eh, cm.evh);
    }
    const FullMoments fm = free_fn();
    return acc.finish(fm.ev, fm.eh, fm.evh);
}

/// Proposed gradient: per datum, mean-field initial points feed short clamped
/// chains whose visible samples drive the spatial estimators; the free side
/// reuses the persistent chains and estimates with the same machinery over
/// the whole visible layer.
inline ParamGrad approx_gradient_proposed(const RbmParams& params, const IncompleteDataset& data,
                                          std::span<const std::size_t> batch,
                                          PersistentChains& pcd, const TrainConfig& cfg,
                                          Rng& update_rng, MfStats* mf_stats = nullptr) {
    params.validate();
    cfg.validate();
    const int n = params.n();
    const int m = params.m();
    Rng free_rng = update_rng.child(0);
    Rng clamp_root = update_rng.child(1);

    auto clamped_fn = [&](const IncompleteObservation& obs, std::size_t idx) -> FullMoments {
        Rng datum_rng = clamp_root.child(idx);
        Rng mf_rng = datum_rng.child(0);
        Rng chain_rng = datum_rng.child(1);
        std::vector<VectorXd> init = generate_initial_points(
            params, obs, cfg.k_hat, mf_rng, cfg.mf_tol, cfg.mf_max_iter, cfg.mf_damping, mf_stats);
        std::vector<VectorXd> samples =
            block_gibbs_clamped(params, obs, init, cfg.r_hat, chain_rng);
        const SampleSet set = SampleSet::clamped(obs, n, std::move(samples));
        const MomentEstimates est = smci_moments(params, set);
        return scatter_region(est.ev, est.eh, est.evh, set.free_idx, n);
    };
    auto free_fn = [&]() -> FullMoments {
        std::vector<VectorXd> samples = pcd_step(pcd, params, cfg.r_tilde, free_rng);
        const SampleSet set = SampleSet::free_region(n, std::move(samples));
        const MomentEstimates est = smci_moments(params, set);
        return FullMoments{est.ev, est.eh, est.evh};
    };
    return assemble_incomplete_gradient(n, m, data, batch, clamped_fn, free_fn);
}

/// Baseline gradient: chains start uniform every update and both expectations
/// are plain averages over the paired Gibbs outputs.
inline ParamGrad approx_gradient_lossycd(const RbmParams& params, const IncompleteDataset& data,
                                         std::span<const std::size_t> batch,
                                         const TrainConfig& cfg, Rng& update_rng) {
    params.validate();
    cfg.validate();
    const int n = params.n();
    const int m = params.m();
    Rng free_rng = update_rng.child(0);
    Rng clamp_root = update_rng.child(1);

    auto clamped_fn = [&](const IncompleteObservation& obs, std::size_t idx) -> FullMoments {
        Rng datum_rng = clamp_root.child(idx);
        Rng init_rng = datum_rng.child(0);
        Rng chain_rng = datum_rng.child(1);
        const auto missing = obs.missing_indices(n);
        std::vector<VectorXd> init =
            uniform_binary_vectors(static_cast<int>(missing.size()), cfg.k_hat, init_rng);
        std::vector<ChainState> states =
            block_gibbs_clamped_paired(params, obs, init, cfg.r_hat, chain_rng);
        const MomentEstimates est = mci_moments(states);
        return FullMoments{est.ev, est.eh, est.evh};
    };
    auto free_fn = [&]() -> FullMoments {
        Rng init_rng = free_rng.child(0);
        Rng chain_rng = free_rng.child(1);
        std::vector<VectorXd> init = uniform_binary_vectors(n, cfg.k_tilde, init_rng);
        std::vector<ChainState> states = block_gibbs(params, init, cfg.r_tilde, chain_rng);
        const MomentEstimates est = mci_moments(states);
        return FullMoments{est.ev, est.eh, est.evh};
    };
    return assemble_incomplete_gradient(n, m, data, batch, clamped_fn, free_fn);
}

/// AdaMax ascent step with first-moment bias correction. Mutates params and
/// state in place; t advances by one.
inline void adamax_update(RbmParams& params, OptimizerState& state, const ParamGrad& grad,
                          const TrainConfig& cfg) {
    if (state.moment.b.size() != params.n() || state.moment.c.size() != params.m())
        throw std::invalid_argument("adamax_update: state dimension mismatch");
    if (grad.b.size() != params.n() || grad.c.size() != params.m())
        throw std::invalid_argument("adamax_update: gradient dimension mismatch");
    state.t += 1;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    state.moment.b = b1 * state.moment.b + (1.0 - b1) * grad.b;
    state.moment.c = b1 * state.moment.c + (1.0 - b1) * grad.c;
    state.moment.W = b1 * state.moment.W + (1.0 - b1) * grad.W;
    state.infnorm.b = (b2 * state.infnorm.b).cwiseMax(grad.b.cwiseAbs());
    state.infnorm.c = (b2 * state.infnorm.c).cwiseMax(grad.c.cwiseAbs());
    state.infnorm.W = (b2 * state.infnorm.W).cwiseMax(grad.W.cwiseAbs());
    const double step = cfg.alpha / (1.0 - std::pow(b1, static_cast<double>(state.t)));
    params.b += step * state.moment.b.cwiseQuotient(state.infnorm.b +
                                                    VectorXd::Constant(params.n(), cfg.eps));
    params.c += step * state.moment.c.cwiseQuotient(state.infnorm.c +
                                                    VectorXd::Constant(params.m(), cfg.eps));
    params.W += step * state.moment.W.cwiseQuotient(
                           state.infnorm.W + MatrixXd::Constant(params.n(), params.m(), cfg.eps));
}

/// Gaussian weight initialization with variance 2/(n+m); biases zero. Entries
/// are drawn row by row.
inline RbmParams xavier_init(int n, int m, Rng& rng) {
    if (n < 1 || m < 1) throw std::invalid_argument("xavier_init: need n,m >= 1");
    RbmParams p = RbmParams::zero(n, m);
    const double sd = std::sqrt(2.0 / static_cast<double>(n + m));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) p.W(i, j) = sd * rng.normal();
    return p;
}

/// Deterministic in-place Fisher-Yates.
inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

using LoglikEvaluator =
    std::function<double(const RbmParams&, const std::vector<IncompleteObservation>&)>;

struct TrainResult {
    RbmParams params;
    MetricsLog metrics;
};

/// Full training loop: seeded initialization, per-epoch shuffles, minibatch
/// gradient ascent dispatched on cfg.method, metric rows on the eval cadence
/// plus the final epoch, and a checkpoint rewrite at every logged epoch.
/// eval_train/eval_test choose what the loglik evaluator sees ("train"
/// defaults to the training data itself); with no evaluator the loglik
/// column is NaN.
inline TrainResult train(const TrainConfig& cfg, const IncompleteDataset& data,
                         const std::vector<IncompleteObservation>* eval_train = nullptr,
                         const std::vector<IncompleteObservation>* eval_test = nullptr,
                         const LoglikEvaluator& evaluator = {},
                         const std::string& checkpoint_path = "") {
    cfg.validate();
    data.validate();
    if (data.observations.empty()) throw std::invalid_argument("train: empty dataset");
    const int n = data.n;
    const int m = cfg.hidden;

    Rng root(cfg.seed);
    Rng init_rng = root.child(stream_salt::kInit);
    TrainResult result;
    result.params = xavier_init(n, m, init_rng);
    OptimizerState opt = OptimizerState::zero(n, m);

    PersistentChains pcd;
    if (cfg.method == Method::Proposed) {
        Rng pcd_rng = root.child(stream_salt::kPcdInit);
        pcd = init_persistent_chains(n, cfg.k_tilde, pcd_rng);
    }

    std::vector<std::size_t> order(data.observations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::uint64_t update_counter = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        Rng shuffle_rng = root.child(stream_salt::kShuffle).child(static_cast<std::uint64_t>(epoch));
        shuffle_indices(order, shuffle_rng);

        double grad_norm_sum = 0.0;
        std::size_t updates = 0;
        MfStats epoch_mf;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            std::span<const std::size_t> batch(order.data() + start, len);
            Rng update_rng = root.child(stream_salt::kUpdate).child(update_counter);
            ParamGrad grad =
                cfg.method == Method::Proposed
                    ? approx_gradient_proposed(result.params, data, batch, pcd, cfg, update_rng,
                                               &epoch_mf)
                    : approx_gradient_lossycd(result.params, data, batch, cfg, update_rng);
            adamax_update(result.params, opt, grad, cfg);
            if (!result.params.b.allFinite() || !result.params.c.allFinite() ||
                !result.params.W.allFinite())
                throw std::runtime_error("train: parameters diverged to non-finite values at update " +
                                         std::to_string(update_counter));
            grad_norm_sum += grad.norm();
            ++updates;
            ++update_counter;
        }

        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            const double secs =
                cfg.wall_clock
                    ? std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                          .count()
                    : 0.0;
            const double mean_grad = updates == 0 ? 0.0 : grad_norm_sum / static_cast<double>(updates);
            const double fail_rate = epoch_mf.failure_rate();
            const std::vector<IncompleteObservation>& train_eval_set =
                eval_train ? *eval_train : data.observations;
            MetricsRow row;
            row.epoch = epoch;
            row.split = "train";
            row.loglik = evaluator ? evaluator(result.params, train_eval_set)
                                   : std::numeric_limits<double>::quiet_NaN();
            row.grad_norm = mean_grad;
            row.mf_fail_rate = fail_rate;
            row.seconds = secs;
            result.metrics.rows.push_back(row);
            if (eval_test) {
                MetricsRow trow = row;
                trow.split = "test";
                trow.loglik = evaluator ? evaluator(result.params, *eval_test)
                                        : std::numeric_limits<double>::quiet_NaN();
                result.metrics.rows.push_back(trow);
            }
            if (!checkpoint_path.empty())
                write_checkpoint(checkpoint_path, result.params, cfg.seed,
                                 static_cast<std::uint32_t>(epoch));
        }
    }
    if (cfg.epochs == 0 && !checkpoint_path.empty())
        write_checkpoint(checkpoint_path, result.params, cfg.seed, 0);
    return result;
}

}  // namespace rbmi
