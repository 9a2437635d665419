#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rbmi/ais.hpp"
#include "rbmi/brute.hpp"
#include "rbmi/data.hpp"
#include "rbmi/estimators.hpp"
#include "rbmi/exact_sampler.hpp"
#include "rbmi/io.hpp"
#include "rbmi/model.hpp"
#include "rbmi/oracle.hpp"
#include "rbmi/sampler.hpp"
#include "rbmi/trainer.hpp"

// Command-line surface. Six subcommands: train, eval, sample, oracle-check,
// variance-bench, mask. Exit codes: 0 success, 1 runtime failure, 2 usage
// error. Every randomized path takes an explicit --seed.

namespace rbmi {

namespace cli_detail {

/// Training options come from a JSON file; unknown keys are hard errors, so a
/// typo cannot silently fall back to a default. The master seed is not a file
/// key: it always arrives via --seed.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "method",   "hidden", "batch_size", "epochs",    "k_hat",       "r_hat",
        "k_tilde",  "r_tilde", "missing_prob", "alpha",  "beta1",       "beta2",
        "eps",      "mf_tol", "mf_max_iter", "mf_damping", "eval_every", "timing"};
    if (!j.is_object()) throw std::runtime_error("config: top level must be a JSON object");
    for (const auto& item : j.items()) {
        if (!known.count(item.key()))
            throw std::runtime_error("config: unknown key '" + item.key() + "'");
    }
    TrainConfig cfg;
    if (j.contains("method")) {
        const std::string m = j.at("method").get<std::string>();
        if (m == "proposed")
            cfg.method = Method::Proposed;
        else if (m == "lossy-cd")
            cfg.method = Method::LossyCd;
        else
            throw std::runtime_error("config: method must be 'proposed' or 'lossy-cd'");
    }
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("k_hat")) cfg.k_hat = j.at("k_hat").get<int>();
    if (j.contains("r_hat")) cfg.r_hat = j.at("r_hat").get<int>();
    if (j.contains("k_tilde")) cfg.k_tilde = j.at("k_tilde").get<int>();
    if (j.contains("r_tilde")) cfg.r_tilde = j.at("r_tilde").get<int>();
    if (j.contains("missing_prob")) cfg.missing_prob = j.at("missing_prob").get<double>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
    if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
    if (j.contains("mf_tol")) cfg.mf_tol = j.at("mf_tol").get<double>();
    if (j.contains("mf_max_iter")) cfg.mf_max_iter = j.at("mf_max_iter").get<int>();
    if (j.contains("mf_damping")) cfg.mf_damping = j.at("mf_damping").get<double>();
    if (j.contains("eval_every")) cfg.eval_every = j.at("eval_every").get<int>();
    if (j.contains("timing")) {
        const std::string t = j.at("timing").get<std::string>();
        if (t == "wall")
            cfg.wall_clock = true;
        else if (t == "off")
            cfg.wall_clock = false;
        else
            throw std::runtime_error("config: timing must be 'wall' or 'off'");
    }
    cfg.validate();
    return cfg;
}

inline RbmParams random_params(int n, int m, double bias_scale, double weight_scale, Rng& rng) {
    RbmParams p = RbmParams::zero(n, m);
    for (int i = 0; i < n; ++i) p.b[i] = bias_scale * rng.normal();
    for (int j = 0; j < m; ++j) p.c[j] = bias_scale * rng.normal();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) p.W(i, j) = weight_scale * rng.normal();
    return p;
}

/// Random observation over a random binary datum: each coordinate missing
/// with probability p.
inline IncompleteObservation random_observation(int n, double p, Rng& rng) {
    VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return mask_observation(d, p, rng);
}

struct CheckReport {
    int passed = 0;
    int failed = 0;

    void record(const std::string& name, bool ok, double err) {
        std::cout << (ok ? "PASS  " : "FAIL  ") << name << "  (max err " << format_double(err)
                  << ")\n";
        if (ok)
            ++passed;
        else
            ++failed;
    }
};

inline double max_abs_diff(const VectorXd& a, const VectorXd& b) {
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const MatrixXd& a, const MatrixXd& b) {
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

/// Central finite differences of exact_log_likelihood in every parameter.
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

inline int run_oracle_check(int n, int m, int trials, double missing_p, std::uint64_t seed) {
    CheckReport report;
    Rng root(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Rng trial_rng = root.child(static_cast<std::uint64_t>(trial));
        Rng param_rng = trial_rng.child(0);
        Rng data_rng = trial_rng.child(1);
        const RbmParams p = random_params(n, m, 0.5, 0.5, param_rng);
        const std::string suffix = " [trial " + std::to_string(trial) + "]";

        {
            const double fast = exact_log_partition(p);
            const double slow = brute_log_partition(p);
            const double err = std::abs(fast - slow);
            report.record("log partition vs joint enumeration" + suffix,
                          err <= 1e-12 * std::max(1.0, std::abs(slow)), err);
        }
        {
            const ExactMoments fast = exact_free_moments(p);
            const BruteMoments slow = brute_free_moments(p);
            const double err = std::max({max_abs_diff(fast.ev, slow.ev),
                                         max_abs_diff(fast.eh, slow.eh),
                                         max_abs_diff(fast.evh, slow.evh)});
            report.record("free moments vs joint enumeration" + suffix, err <= 1e-12, err);
        }
        {
            const IncompleteObservation obs = random_observation(n, missing_p, data_rng);
            const ExactMoments fast = exact_clamped_moments(p, obs);
            const BruteMoments slow = brute_clamped_moments(p, obs);
            const double err = std::max({max_abs_diff(fast.ev, slow.ev),
                                         max_abs_diff(fast.eh, slow.eh),
                                         max_abs_diff(fast.evh, slow.evh)});
            report.record("clamped moments vs joint enumeration" + suffix, err <= 1e-12, err);
        }
        {
            const IncompleteObservation empty_obs;  // nothing observed
            const ExactMoments clamped = exact_clamped_moments(p, empty_obs);
            const ExactMoments free_m = exact_free_moments(p);
            const double err = std::max({max_abs_diff(clamped.ev, free_m.ev),
                                         max_abs_diff(clamped.eh, free_m.eh),
                                         max_abs_diff(clamped.evh, free_m.evh)});
            report.record("fully missing clamped equals free" + suffix, err <= 1e-12, err);
        }
        {
            std::vector<IncompleteObservation> dataset;
            const double rates[] = {0.0, missing_p, 0.8};
            for (double rate : rates)
                dataset.push_back(random_observation(n, rate, data_rng));
            const double fast = exact_log_likelihood(p, dataset);
            const double slow = brute_log_likelihood(p, dataset);
            const double ll_err = std::abs(fast - slow);
            report.record("log likelihood vs joint enumeration" + suffix,
                          ll_err <= 1e-12 * std::max(1.0, std::abs(slow)), ll_err);

            const ParamGrad g = exact_gradient(p, dataset);
            const ParamGrad fd = fd_gradient(p, dataset, 1e-5);
            double worst = 0.0;
            bool ok = true;
            auto check = [&](double a, double b) {
                const double diff = std::abs(a - b);
                const double tol = 1e-8 + 1e-6 * std::abs(a);
                worst = std::max(worst, diff);
                if (diff > tol) ok = false;
            };
            for (Eigen::Index i = 0; i < p.n(); ++i) check(g.b[i], fd.b[i]);
            for (Eigen::Index j = 0; j < p.m(); ++j) check(g.c[j], fd.c[j]);
            for (Eigen::Index i = 0; i < p.n(); ++i)
                for (Eigen::Index j = 0; j < p.m(); ++j) check(g.W(i, j), fd.W(i, j));
            report.record("gradient vs finite differences" + suffix, ok, worst);
        }
    }
    std::cout << report.passed << " passed, " << report.failed << " failed\n";
    return report.failed == 0 ? 0 : 1;
}

inline int run_variance_bench(int n, int m, int sets, int samples_per_set, std::uint64_t seed,
                              const std::string& out_path) {
    Rng root(seed);
    Rng param_rng = root.child(0);
    Rng sample_rng = root.child(1);
    const RbmParams p = random_params(n, m, 0.3, 0.6, param_rng);
    const ExactVisibleSampler sampler(p);

    const Eigen::Index flat = n + m + static_cast<Eigen::Index>(n) * m;
    RunningVariance mci_var(flat), smci_var(flat);
    auto flatten = [&](const VectorXd& ev, const VectorXd& eh, const MatrixXd& evh) {
        VectorXd x(flat);
        x.segment(0, n) = ev;
        x.segment(n, m) = eh;
        for (int i = 0; i < n; ++i) x.segment(n + m + static_cast<Eigen::Index>(i) * m, m) = evh.row(i);
        return x;
    };

    for (int s = 0; s < sets; ++s) {
        Rng set_rng = sample_rng.child(static_cast<std::uint64_t>(s));
        std::vector<ChainState> pairs;
        std::vector<VectorXd> visibles;
        pairs.reserve(static_cast<std::size_t>(samples_per_set));
        visibles.reserve(static_cast<std::size_t>(samples_per_set));
        for (int k = 0; k < samples_per_set; ++k) {
            pairs.push_back(sampler.draw_pair(set_rng));
            visibles.push_back(pairs.back().v);
        }
        const MomentEstimates mci = mci_moments(pairs);
        const MomentEstimates smci = smci_moments(p, SampleSet::free_region(n, visibles));
        mci_var.add(flatten(mci.ev, mci.eh, mci.evh));
        smci_var.add(flatten(smci.ev, smci.eh, smci.evh));
    }

    const VectorXd vm = mci_var.variance();
    const VectorXd vs = smci_var.variance();
    std::string csv = "kind,i,j,var_mci,var_smci\n";
    for (int i = 0; i < n; ++i)
        csv += "v," + std::to_string(i) + ",," + format_double(vm[i]) + "," + format_double(vs[i]) +
               "\n";
    for (int j = 0; j < m; ++j)
        csv += "h,," + std::to_string(j) + "," + format_double(vm[n + j]) + "," +
               format_double(vs[n + j]) + "\n";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const Eigen::Index off = n + m + static_cast<Eigen::Index>(i) * m + j;
            csv += "vh," + std::to_string(i) + "," + std::to_string(j) + "," +
                   format_double(vm[off]) + "," + format_double(vs[off]) + "\n";
        }
    if (out_path.empty())
        std::cout << csv;
    else
        io::write_file(out_path, csv);
    return 0;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"binary RBM training on incomplete data"};
    app.require_subcommand(1);

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "train a model from an incomplete dataset");
    std::string t_config, t_data, t_out_params, t_out_metrics, t_eval_train, t_eval_test;
    std::string t_eval_mode = "none";
    std::uint64_t t_seed = 0;
    int t_ais_temps = 1000, t_ais_runs = 100;
    train_cmd->add_option("--config", t_config, "JSON training configuration")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--data", t_data, "incomplete dataset (RBMI file)")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", t_seed, "master seed")->required();
    train_cmd->add_option("--out-params", t_out_params, "checkpoint output path")->required();
    train_cmd->add_option("--out-metrics", t_out_metrics,
                          "metrics CSV output path (stdout when omitted)");
    train_cmd->add_option("--eval-train", t_eval_train, "dataset for the train loglik column")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--eval-test", t_eval_test, "dataset for the test loglik column")
        ->check(CLI::ExistingFile);
    train_cmd
        ->add_option("--eval", t_eval_mode,
                     "loglik evaluator: oracle (exact, small models), ais, or none")
        ->check(CLI::IsMember({"oracle", "ais", "none"}));
    train_cmd->add_option("--ais-temps", t_ais_temps, "AIS temperatures when --eval ais");
    train_cmd->add_option("--ais-runs", t_ais_runs, "AIS runs when --eval ais");
    train_cmd->callback([&]() {
        const nlohmann::json j = nlohmann::json::parse(io::read_file(t_config));
        TrainConfig cfg = cli_detail::train_config_from_json(j);
        cfg.seed = t_seed;
        const IncompleteDataset data = load_incomplete(t_data);
        std::optional<IncompleteDataset> eval_train, eval_test;
        if (!t_eval_train.empty()) eval_train = load_incomplete(t_eval_train);
        if (!t_eval_test.empty()) eval_test = load_incomplete(t_eval_test);

        LoglikEvaluator evaluator;
        if (t_eval_mode == "oracle") {
            evaluator = [](const RbmParams& p, const std::vector<IncompleteObservation>& ds) {
                return exact_log_likelihood(p, ds);
            };
        } else if (t_eval_mode == "ais") {
            AisConfig ais_cfg;
            ais_cfg.num_temperatures = t_ais_temps;
            ais_cfg.num_runs = t_ais_runs;
            ais_cfg.seed = t_seed;
            evaluator = [ais_cfg](const RbmParams& p,
                                  const std::vector<IncompleteObservation>& ds) {
                const AisResult r = ais_log_partition(p, ais_cfg);
                return complete_data_log_likelihood(p, ds, r.logZ);
            };
        }

        const TrainResult result =
            train(cfg, data, eval_train ? &eval_train->observations : nullptr,
                  eval_test ? &eval_test->observations : nullptr, evaluator, t_out_params);
        const std::string csv = metrics_to_csv(result.metrics);
        if (t_out_metrics.empty())
            std::cout << csv;
        else
            io::write_file(t_out_metrics, csv);
    });

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "AIS log-likelihood evaluation of a checkpoint");
    std::string e_params, e_train, e_test, e_format = "csv", e_out;
    int e_temps = 1000, e_runs = 100;
    std::uint64_t e_seed = 0;
    eval_cmd->add_option("--params", e_params, "checkpoint to evaluate")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--train-data", e_train, "complete training dataset (RBMI file)")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--test-data", e_test, "complete testing dataset (RBMI file)")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--temps", e_temps, "AIS temperatures");
    eval_cmd->add_option("--runs", e_runs, "AIS runs");
    eval_cmd->add_option("--seed", e_seed, "AIS seed")->required();
    eval_cmd->add_option("--format", e_format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    eval_cmd->add_option("--out", e_out, "output path (stdout when omitted)");
    eval_cmd->callback([&]() {
        const Checkpoint ck = read_checkpoint(e_params);
        AisConfig cfg;
        cfg.num_temperatures = e_temps;
        cfg.num_runs = e_runs;
        cfg.seed = e_seed;
        const AisResult ais = ais_log_partition(ck.params, cfg);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        double ll_train = nan, ll_test = nan;
        if (!e_train.empty())
            ll_train = complete_data_log_likelihood(ck.params,
                                                    load_incomplete(e_train).observations, ais.logZ);
        if (!e_test.empty())
            ll_test = complete_data_log_likelihood(ck.params, load_incomplete(e_test).observations,
                                                   ais.logZ);
        std::string text;
        if (e_format == "csv") {
            text = "loglik_train,loglik_test,logZ,logZ_stderr\n" + format_double(ll_train) + "," +
                   format_double(ll_test) + "," + format_double(ais.logZ) + "," +
                   format_double(ais.stderr_logZ) + "\n";
        } else {
            nlohmann::json out;
            out["loglik_train"] = ll_train;
            out["loglik_test"] = ll_test;
            out["logZ"] = ais.logZ;
            out["logZ_stderr"] = ais.stderr_logZ;
            text = out.dump(2) + "\n";
        }
        if (e_out.empty())
            std::cout << text;
        else
            io::write_file(e_out, text);
    });

    // --- sample ---
    auto* sample_cmd = app.add_subcommand("sample", "run free Gibbs chains from a checkpoint");
    std::string s_params, s_out;
    int s_chains = 100, s_steps = 1000;
    std::uint64_t s_seed = 0;
    sample_cmd->add_option("--params", s_params, "checkpoint to sample from")
        ->required()
        ->check(CLI::ExistingFile);
    sample_cmd->add_option("--chains", s_chains, "number of chains")->check(CLI::PositiveNumber);
    sample_cmd->add_option("--steps", s_steps, "Gibbs steps")->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--seed", s_seed, "sampling seed")->required();
    sample_cmd->add_option("--out", s_out, "binary matrix output path")->required();
    sample_cmd->callback([&]() {
        const Checkpoint ck = read_checkpoint(s_params);
        Rng root(s_seed);
        Rng init_rng = root.child(0);
        Rng chain_rng = root.child(1);
        std::vector<VectorXd> init = uniform_binary_vectors(ck.params.n(), s_chains, init_rng);
        const std::vector<ChainState> states = block_gibbs(ck.params, init, s_steps, chain_rng);
        std::vector<VectorXd> visibles;
        visibles.reserve(states.size());
        for (const auto& st : states) visibles.push_back(st.v);
        io::write_file(s_out, serialize_binary_matrix(visibles));
    });

    // --- oracle-check ---
    auto* oc_cmd = app.add_subcommand("oracle-check",
                                      "exact-computation self-checks on random small instances");
    int oc_n = 5, oc_m = 4, oc_trials = 20;
    double oc_p = 0.3;
    std::uint64_t oc_seed = 0;
    int oc_rc = 0;
    oc_cmd->add_option("--n", oc_n, "visible units")->check(CLI::Range(1, 10));
    oc_cmd->add_option("--m", oc_m, "hidden units")->check(CLI::Range(1, 10));
    oc_cmd->add_option("--trials", oc_trials, "random instances")->check(CLI::PositiveNumber);
    oc_cmd->add_option("--p", oc_p, "missing probability for clamped checks")
        ->check(CLI::Range(0.0, 1.0));
    oc_cmd->add_option("--seed", oc_seed, "seed")->required();
    oc_cmd->callback(
        [&]() { oc_rc = cli_detail::run_oracle_check(oc_n, oc_m, oc_trials, oc_p, oc_seed); });

    // --- variance-bench ---
    auto* vb_cmd = app.add_subcommand(
        "variance-bench", "per-moment estimator variances, plain average vs spatial estimator");
    int vb_n = 6, vb_m = 4, vb_sets = 200, vb_k = 100;
    std::uint64_t vb_seed = 0;
    std::string vb_out;
    vb_cmd->add_option("--n", vb_n, "visible units")->check(CLI::Range(1, 16));
    vb_cmd->add_option("--m", vb_m, "hidden units")->check(CLI::PositiveNumber);
    vb_cmd->add_option("--sets", vb_sets, "independent sample sets")->check(CLI::PositiveNumber);
    vb_cmd->add_option("--k", vb_k, "samples per set")->check(CLI::PositiveNumber);
    vb_cmd->add_option("--seed", vb_seed, "seed")->required();
    vb_cmd->add_option("--out", vb_out, "CSV output path (stdout when omitted)");
    vb_cmd->callback([&]() {
        (void)cli_detail::run_variance_bench(vb_n, vb_m, vb_sets, vb_k, vb_seed, vb_out);
    });

    // --- mask ---
    auto* mask_cmd =
        app.add_subcommand("mask", "convert a complete binary dataset to an incomplete one");
    std::string m_input, m_format = "csv", m_out, m_source;
    double m_p = 0.0, m_threshold = 127.5;
    std::uint64_t m_seed = 0;
    mask_cmd->add_option("--input", m_input, "complete dataset (csv interchange or idx archive)")
        ->required()
        ->check(CLI::ExistingFile);
    mask_cmd->add_option("--format", m_format, "input format")
        ->check(CLI::IsMember({"csv", "idx"}));
    mask_cmd->add_option("--p", m_p, "per-pixel missing probability")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    mask_cmd->add_option("--threshold", m_threshold, "binarization threshold for idx input");
    mask_cmd->add_option("--seed", m_seed, "mask seed")->required();
    mask_cmd->add_option("--out", m_out, "RBMI output path")->required();
    mask_cmd->add_option("--source", m_source, "provenance label (defaults to the input path)");
    mask_cmd->callback([&]() {
        std::vector<VectorXd> rows;
        double threshold = 0.5;
        if (m_format == "idx") {
            rows = binarize(load_idx_images(m_input), m_threshold);
            threshold = m_threshold;
        } else {
            rows = load_binary_csv(m_input);
        }
        if (rows.empty()) throw std::runtime_error("mask: input dataset is empty");
        const int n = static_cast<int>(rows[0].size());
        const std::string source = m_source.empty() ? m_input : m_source;
        const IncompleteDataset ds = mask_dataset(rows, n, m_p, m_seed, source, threshold);
        save_incomplete(m_out, ds);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return oc_rc;
}

}  // namespace rbmi
