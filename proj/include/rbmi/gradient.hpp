#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "rbmi/data.hpp"
#include "rbmi/model.hpp"

namespace rbmi {

/// Builds the incomplete-data gradient from per-datum clamped moments and one
/// set of free moments. Observed coordinates contribute their data values
/// (the indicator split of the positive phase); missing coordinates contribute
/// the supplied conditional expectations. The same assembly serves exact
/// moments and Monte Carlo estimates.
class GradientAccumulator {
  public:
    GradientAccumulator(int n, int m) : sum_(ParamGrad::zero(n, m)), count_(0) {}

    void add_clamped(const IncompleteObservation& obs, const VectorXd& ev, const VectorXd& eh,
                     const MatrixXd& evh) {
        const int n = static_cast<int>(sum_.b.size());
        const int m = static_cast<int>(sum_.c.size());
        if (ev.size() != n || eh.size() != m || evh.rows() != n || evh.cols() != m)
            throw std::invalid_argument("GradientAccumulator: moment dimension mismatch");
        sum_.b += ev;
        sum_.c += eh;
        sum_.W += evh;
        // Overwrite observed rows with the data-value form.
        for (std::size_t k = 0; k < obs.observed.size(); ++k) {
            const Eigen::Index i = static_cast<Eigen::Index>(obs.observed[k]);
            const double di = static_cast<double>(obs.values[k]);
            sum_.b[i] += di - ev[i];
            sum_.W.row(i) += (di * eh - evh.row(i).transpose()).transpose();
        }
        ++count_;
    }

    std::size_t count() const { return count_; }

    /// Mean positive phase minus the free moments.
    ParamGrad finish(const VectorXd& free_ev, const VectorXd& free_eh,
                     const MatrixXd& free_evh) const {
        if (count_ == 0) throw std::logic_error("GradientAccumulator: no data added");
        const double inv = 1.0 / static_cast<double>(count_);
        ParamGrad g;
        g.b = sum_.b * inv - free_ev;
        g.c = sum_.c * inv - free_eh;
        g.W = sum_.W * inv - free_evh;
        return g;
    }

  private:
    ParamGrad sum_;
    std::size_t count_;
};

}  // namespace rbmi
