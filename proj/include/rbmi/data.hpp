#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbmi/rng.hpp"

namespace rbmi {

using Eigen::VectorXd;

/// One datum with possibly missing pixels: the sorted indices that were
/// observed and their binary values. Missing coordinates are everything else.
struct IncompleteObservation {
    std::vector<std::uint32_t> observed;  // strictly increasing, < n
    std::vector<std::uint8_t> values;     // same length, each 0 or 1

    void validate(int n) const {
        if (observed.size() != values.size())
            throw std::invalid_argument("IncompleteObservation: index/value length mismatch");
        std::uint32_t prev = 0;
        bool first = true;
        for (std::size_t k = 0; k < observed.size(); ++k) {
            const std::uint32_t i = observed[k];
            if (i >= static_cast<std::uint32_t>(n))
                throw std::invalid_argument("IncompleteObservation: index out of range");
            if (!first && i <= prev)
                throw std::invalid_argument("IncompleteObservation: indices must be strictly increasing");
            if (values[k] != 0 && values[k] != 1)
                throw std::invalid_argument("IncompleteObservation: values must be 0 or 1");
            prev = i;
            first = false;
        }
    }

    bool is_fully_observed(int n) const {
        return observed.size() == static_cast<std::size_t>(n);
    }

    std::vector<std::uint32_t> missing_indices(int n) const {
        std::vector<std::uint32_t> missing;
        missing.reserve(static_cast<std::size_t>(n) - observed.size());
        std::size_t k = 0;
        for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) {
            if (k < observed.size() && observed[k] == i) {
                ++k;
            } else {
                missing.push_back(i);
            }
        }
        return missing;
    }

    /// Length-n vector with observed values in place and zeros elsewhere.
    VectorXd context_vector(int n) const {
        VectorXd v = VectorXd::Zero(n);
        for (std::size_t k = 0; k < observed.size(); ++k)
            v[static_cast<Eigen::Index>(observed[k])] = static_cast<double>(values[k]);
        return v;
    }
};

/// How a dataset's masks were produced, carried along for reproducibility.
struct MaskProvenance {
    bool present = false;
    std::string source;     // free-form origin label
    double threshold = 0.0; // binarization threshold applied to the source
    double p = 0.0;         // per-pixel missing probability
    std::uint64_t mask_seed = 0;
};

struct IncompleteDataset {
    int n = 0;
    std::vector<IncompleteObservation> observations;
    MaskProvenance provenance;

    std::size_t size() const { return observations.size(); }

    void validate() const {
        if (n < 0) throw std::invalid_argument("IncompleteDataset: negative n");
        for (const auto& obs : observations) obs.validate(n);
    }
};

inline IncompleteObservation fully_observed(const VectorXd& v) {
    IncompleteObservation obs;
    obs.observed.resize(static_cast<std::size_t>(v.size()));
    obs.values.resize(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0 && v[i] != 1.0)
            throw std::invalid_argument("fully_observed: vector must be binary");
        obs.observed[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
        obs.values[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v[i]);
    }
    return obs;
}

/// Drop each pixel independently with probability p. The mask is fixed per
/// datum: once drawn, the same coordinates stay missing for good. RNG use is
/// one bernoulli per pixel in index order, one child stream per datum.
inline IncompleteObservation mask_observation(const VectorXd& v, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("mask_observation: p must be in [0,1]");
    IncompleteObservation obs;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0 && v[i] != 1.0)
            throw std::invalid_argument("mask_observation: vector must be binary");
        if (!rng.bernoulli(p)) {
            obs.observed.push_back(static_cast<std::uint32_t>(i));
            obs.values.push_back(static_cast<std::uint8_t>(v[i]));
        }
    }
    return obs;
}

inline IncompleteDataset mask_dataset(const std::vector<VectorXd>& data, int n, double p,
                                      std::uint64_t mask_seed, const std::string& source,
                                      double threshold) {
    IncompleteDataset ds;
    ds.n = n;
    ds.observations.reserve(data.size());
    Rng root(mask_seed);
    for (std::size_t mu = 0; mu < data.size(); ++mu) {
        if (data[mu].size() != n) throw std::invalid_argument("mask_dataset: dimension mismatch");
        Rng r = root.child(mu);
        ds.observations.push_back(mask_observation(data[mu], p, r));
    }
    ds.provenance.present = true;
    ds.provenance.source = source;
    ds.provenance.threshold = threshold;
    ds.provenance.p = p;
    ds.provenance.mask_seed = mask_seed;
    ds.validate();
    return ds;
}

}  // namespace rbmi
