#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "rbmi/math.hpp"

namespace rbmi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Biases and couplings of one machine. W(i,j) couples visible unit i to
/// hidden unit j. Eigen's column-major layout keeps each hidden unit's column
/// contiguous, which is the access pattern of the tau/estimator inner loops;
/// visible-side fields go through W*h, which Eigen evaluates as a GEMV.
struct RbmParams {
    VectorXd b;  // visible biases, length n
    VectorXd c;  // hidden biases, length m
    MatrixXd W;  // n x m couplings

    int n() const { return static_cast<int>(b.size()); }
    int m() const { return static_cast<int>(c.size()); }

    void validate() const {
        if (n() < 1 || m() < 1) throw std::invalid_argument("RbmParams: need n >= 1 and m >= 1");
        if (W.rows() != n() || W.cols() != m())
            throw std::invalid_argument("RbmParams: W must be n x m");
        if (!b.allFinite() || !c.allFinite() || !W.allFinite())
            throw std::invalid_argument("RbmParams: parameters must be finite");
    }

    static RbmParams zero(int n, int m) {
        return RbmParams{VectorXd::Zero(n), VectorXd::Zero(m), MatrixXd::Zero(n, m)};
    }
};

/// Parameter-shaped triple used for gradients.
struct ParamGrad {
    VectorXd b;
    VectorXd c;
    MatrixXd W;

    static ParamGrad zero(int n, int m) {
        return ParamGrad{VectorXd::Zero(n), VectorXd::Zero(m), MatrixXd::Zero(n, m)};
    }

    double squared_norm() const { return b.squaredNorm() + c.squaredNorm() + W.squaredNorm(); }
    double norm() const { return std::sqrt(squared_norm()); }
    double max_abs() const {
        return std::max({b.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff(), W.cwiseAbs().maxCoeff()});
    }
};

inline bool is_binary(const VectorXd& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0 && x[i] != 1.0) return false;
    }
    return true;
}

inline void check_dims(const RbmParams& p, const VectorXd& v, const VectorXd& h,
                       const char* where) {
    if (v.size() != p.n() || h.size() != p.m())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

/// E(v,h) = -b.v - c.h - v'Wh
inline double energy(const RbmParams& p, const VectorXd& v, const VectorXd& h) {
    check_dims(p, v, h, "energy");
    return -p.b.dot(v) - p.c.dot(h) - v.dot(p.W * h);
}

/// lambda_i(h) = b_i + sum_j W(i,j) h_j; sigmoid of it is P(v_i = 1 | h).
inline double local_field_visible(const RbmParams& p, const VectorXd& h, int i) {
    if (i < 0 || i >= p.n()) throw std::out_of_range("local_field_visible: index");
    if (h.size() != p.m()) throw std::invalid_argument("local_field_visible: dimension mismatch");
    return p.b[i] + p.W.row(i).dot(h);
}

/// tau_j(v) = c_j + sum_i W(i,j) v_i; sigmoid of it is P(h_j = 1 | v).
inline double local_field_hidden(const RbmParams& p, const VectorXd& v, int j) {
    if (j < 0 || j >= p.m()) throw std::out_of_range("local_field_hidden: index");
    if (v.size() != p.n()) throw std::invalid_argument("local_field_hidden: dimension mismatch");
    return p.c[j] + p.W.col(j).dot(v);
}

inline VectorXd hidden_fields(const RbmParams& p, const VectorXd& v) {
    if (v.size() != p.n()) throw std::invalid_argument("hidden_fields: dimension mismatch");
    return p.c + p.W.transpose() * v;
}

inline VectorXd visible_fields(const RbmParams& p, const VectorXd& h) {
    if (h.size() != p.m()) throw std::invalid_argument("visible_fields: dimension mismatch");
    return p.b + p.W * h;
}

inline VectorXd conditional_means_hidden(const RbmParams& p, const VectorXd& v) {
    return hidden_fields(p, v).unaryExpr([](double x) { return stable_sigmoid(x); });
}

inline VectorXd conditional_means_visible(const RbmParams& p, const VectorXd& h) {
    return visible_fields(p, h).unaryExpr([](double x) { return stable_sigmoid(x); });
}

}  // namespace rbmi
