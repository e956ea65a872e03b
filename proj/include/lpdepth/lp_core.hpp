#pragma once

// L_p norms, L_p depth and the density-from-depth identity for
// l_p-symmetric distributions f(x) = psi(||A (x - b)||_p).

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "lpdepth/error.hpp"
#include "lpdepth/special.hpp"

namespace lpdepth {

// |x|^p as exp(p ln|x|), with 0^p = 0.
inline double abs_pow(double x, double p) {
    const double a = std::fabs(x);
    return a == 0.0 ? 0.0 : std::exp(p * std::log(a));
}

inline double lp_norm(std::span<const double> z, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("lp_norm: p must be a finite value >= 1");
    if (z.empty()) throw DomainError("lp_norm: empty vector");
    double scale = 0.0;
    for (double v : z) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double v : z) s += abs_pow(v / scale, p);
    return scale * std::exp(std::log(s) / p);
}

inline double lp_norm(const Eigen::VectorXd& z, double p) {
    return lp_norm(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), p);
}

// Depth value in (0, 1].
class DepthValue {
public:
    explicit DepthValue(double delta) : delta_(delta) {
        if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("depth value must lie in (0, 1]");
    }
    double value() const noexcept { return delta_; }
    operator double() const noexcept { return delta_; }

private:
    double delta_;
};

// Fitted geometry of one l_p-symmetric class: r_p(x) = ||A (x - b)||_p.
class LpModel {
public:
    LpModel(double p, Eigen::VectorXd b, Eigen::MatrixXd a) : p_(p), b_(std::move(b)), a_(std::move(a)) {
        if (!(p_ >= 1.0) || !std::isfinite(p_)) throw DomainError("LpModel: p must be >= 1");
        const auto d = b_.size();
        if (d < 1 || a_.rows() != d || a_.cols() != d) throw DimensionMismatch("LpModel: A must be d x d with d = dim(b)");
        abs_det_ = std::fabs(a_.determinant());
        if (!(abs_det_ > 1e-300) || !std::isfinite(abs_det_)) throw DegenerateGeometry("LpModel: A is singular");
    }

    double p() const noexcept { return p_; }
    const Eigen::VectorXd& location() const noexcept { return b_; }
    const Eigen::MatrixXd& transform() const noexcept { return a_; }
    double abs_det() const noexcept { return abs_det_; }
    Eigen::Index dim() const noexcept { return b_.size(); }

    // Same location and transform, different exponent.
    LpModel with_p(double p) const { return LpModel(p, b_, a_, abs_det_); }

    double radius(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        if (x.size() != dim()) {
            throw DimensionMismatch("depth: point has dimension " + std::to_string(x.size()) + ", model has " +
                                    std::to_string(dim()));
        }
        const Eigen::VectorXd z = a_ * (x - b_);
        return lp_norm(z, p_);
    }

private:
    LpModel(double p, Eigen::VectorXd b, Eigen::MatrixXd a, double abs_det)
        : p_(p), b_(std::move(b)), a_(std::move(a)), abs_det_(abs_det) {
        if (!(p_ >= 1.0) || !std::isfinite(p_)) throw DomainError("LpModel: p must be >= 1");
    }

    double p_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd a_;
    double abs_det_;
};

inline DepthValue depth(const Eigen::Ref<const Eigen::VectorXd>& x, const LpModel& m) {
    return DepthValue(1.0 / (1.0 + m.radius(x)));
}

// log C_{p,d} with C_{p,d} = p^{d-1} Gamma(d/p) / (2^d Gamma(1/p)^d).
inline double log_lp_constant(double p, int d) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("lp_constant: p must be >= 1");
    if (d < 1) throw DomainError("lp_constant: d must be >= 1");
    const double dd = static_cast<double>(d);
    return (dd - 1.0) * std::log(p) + log_gamma_fn(dd / p) - dd * std::numbers::ln2 - dd * log_gamma_fn(1.0 / p);
}

inline double lp_constant(double p, int d) { return std::exp(log_lp_constant(p, d)); }

// log f(x) from the depth delta = delta_p(x) and log g_p(delta):
//   f = |det A| C_{p,d} g δ^{d+1} / (1 - δ)^{d-1}.
// The d = 1 case takes (1 - δ)^0 = 1, including at δ = 1.
inline double log_density_from_log_g(double delta, double log_g, const LpModel& m, int d) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("density_from_depth: delta must lie in (0, 1]");
    if (delta == 1.0 && d > 1) throw SingularityError("density_from_depth: delta = 1 is singular for d > 1");
    const double dd = static_cast<double>(d);
    double out = std::log(m.abs_det()) + log_lp_constant(m.p(), d) + log_g + (dd + 1.0) * std::log(delta);
    if (d > 1) out -= (dd - 1.0) * std::log1p(-delta);
    return out;
}

// Same, from g itself; a zero g maps to -inf.
inline double log_density_from_depth(double delta, double g_at_delta, const LpModel& m, int d) {
    if (!(g_at_delta >= 0.0)) throw DomainError("density_from_depth: g must be non-negative");
    return log_density_from_log_g(delta, std::log(g_at_delta), m, d);
}

inline double density_from_depth(DepthValue delta, double g_at_delta, const LpModel& m, int d) {
    if (g_at_delta == 0.0) {
        if (delta.value() == 1.0 && d > 1) throw SingularityError("density_from_depth: delta = 1 is singular for d > 1");
        return 0.0;
    }
    return std::exp(log_density_from_depth(delta.value(), g_at_delta, m, d));
}

}  // namespace lpdepth
