#pragma once

// Exponential-power l_p-symmetric distributions, psi(r) = c exp(-r^p / sigma):
// sampling, exact densities, Monte-Carlo Bayes risk and contour grids.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "lpdepth/error.hpp"
#include "lpdepth/lp_core.hpp"
#include "lpdepth/model_fit.hpp"
#include "lpdepth/rng.hpp"
#include "lpdepth/special.hpp"

namespace lpdepth {

struct LpSymmetricSpec {
    double p = 2.0;
    Vector b;
    Matrix a;
    double sigma = 1.0;

    Eigen::Index dim() const { return b.size(); }

    void validate() const {
        if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("spec: p must be >= 1");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("spec: sigma must be positive");
        if (b.size() < 1 || a.rows() != b.size() || a.cols() != b.size()) throw ConfigError("spec: A must be d x d");
        if (!(std::fabs(a.determinant()) > 0.0)) throw ConfigError("spec: A must be nonsingular");
    }

    LpModel model() const { return LpModel(p, b, a); }

    // Exact log density: each coordinate of y = A(x - b) is an independent
    // p-generalized normal with density p / (2 sigma^{1/p} Gamma(1/p)) exp(-|y|^p / sigma).
    double log_density(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != dim()) throw DimensionMismatch("log_density: dimension mismatch");
        Matrix row = x.transpose();
        return log_density_rows(row)(0);
    }

    Vector log_density_rows(const Matrix& x) const {
        if (x.cols() != dim()) throw DimensionMismatch("log_density: dimension mismatch");
        const double d = static_cast<double>(dim());
        const double log_c = std::log(p) - std::numbers::ln2 - std::log(sigma) / p - log_gamma_fn(1.0 / p);
        const double base = std::log(std::fabs(a.determinant())) + d * log_c;
        const Matrix y = (x.rowwise() - b.transpose()) * a.transpose();
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < y.cols(); ++j) s += abs_pow(y(i, j), p);
            out(i) = base - s / sigma;
        }
        return out;
    }
};

// Identity transform and zero location in d dimensions.
inline LpSymmetricSpec standard_spec(double p, int d, double sigma = 1.0) {
    return {p, Vector::Zero(d), Matrix::Identity(d, d), sigma};
}

inline Matrix sample_lp(const LpSymmetricSpec& spec, Eigen::Index n, Rng& rng) {
    spec.validate();
    if (n < 1) throw DomainError("sample_lp: n must be >= 1");
    const auto d = spec.dim();
    const Matrix a_inv = spec.a.inverse();
    Matrix z(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double g = rng.gamma(1.0 / spec.p);
            z(i, j) = rng.sign() * std::pow(spec.sigma * g, 1.0 / spec.p);
        }
    }
    Matrix x = z * a_inv.transpose();
    x.rowwise() += spec.b.transpose();
    return x;
}

struct TwoClassProblem {
    LpSymmetricSpec first;
    LpSymmetricSpec second;
    double prior_first = 0.5;

    void validate() const {
        first.validate();
        second.validate();
        if (first.dim() != second.dim()) throw ConfigError("problem: class dimensions differ");
        if (!(prior_first > 0.0 && prior_first < 1.0)) throw ConfigError("problem: priors must lie in (0, 1)");
    }
};

struct RiskEstimate {
    double risk = 0.0;
    double se = 0.0;
};

// Error frequency of the true-density Bayes rule on draws from the mixture.
inline RiskEstimate bayes_risk_mc(const TwoClassProblem& problem, long n_mc, Rng& rng) {
    problem.validate();
    if (n_mc < 10000) throw DomainError("bayes_risk_mc: need at least 1e4 draws");
    const double log_prior_ratio = std::log(problem.prior_first) - std::log1p(-problem.prior_first);
    double errors = 0.0;
    constexpr long kChunk = 8192;
    for (long done = 0; done < n_mc; done += kChunk) {
        const long m = std::min(kChunk, n_mc - done);
        long n_first = 0;
        for (long i = 0; i < m; ++i) n_first += rng.uniform() < problem.prior_first ? 1 : 0;
        const long counts[2] = {n_first, m - n_first};
        for (int c = 0; c < 2; ++c) {
            if (counts[c] == 0) continue;
            const Matrix x = sample_lp(c == 0 ? problem.first : problem.second, counts[c], rng);
            const Vector l1 = problem.first.log_density_rows(x);
            const Vector l2 = problem.second.log_density_rows(x);
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                // Equal densities on a set of positive mass (l1 shifts) leave only
                // rounding noise in the score, and that noise depends on which
                // class drew the point. Every allocation of a tie is Bayes, so
                // count it as half an error.
                const double score = l1(i) - l2(i) + log_prior_ratio;
                const double tol = 1e-10 * (1.0 + std::fabs(l1(i)) + std::fabs(l2(i)) + std::fabs(log_prior_ratio));
                if (std::fabs(score) <= tol) {
                    errors += 0.5;
                } else if ((score > 0.0) != (c == 0)) {
                    errors += 1.0;
                }
            }
        }
    }
    RiskEstimate out;
    out.risk = errors / static_cast<double>(n_mc);
    out.se = std::sqrt(out.risk * (1.0 - out.risk) / static_cast<double>(n_mc));
    return out;
}

struct GridBounds {
    double x_min = -5.0;
    double x_max = 5.0;
    double y_min = -5.0;
    double y_max = 5.0;
};

struct ContourPoint {
    double x = 0.0;
    double y = 0.0;
    double value = 0.0;
};

struct ContourGrid {
    int resolution = 0;
    std::vector<ContourPoint> points;  // row-major: y outer, x inner

    const ContourPoint& at(int ix, int iy) const { return points[static_cast<std::size_t>(iy * resolution + ix)]; }
};

namespace detail {

template <class ValueFn>
ContourGrid make_grid(const GridBounds& bounds, int resolution, ValueFn&& fn) {
    if (resolution < 16) throw DomainError("contour_grid: resolution must be >= 16");
    if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) throw DomainError("contour_grid: empty bounds");
    ContourGrid g;
    g.resolution = resolution;
    g.points.reserve(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution));
    const double step_x = (bounds.x_max - bounds.x_min) / (resolution - 1);
    const double step_y = (bounds.y_max - bounds.y_min) / (resolution - 1);
    Vector pt(2);
    for (int iy = 0; iy < resolution; ++iy) {
        for (int ix = 0; ix < resolution; ++ix) {
            pt << bounds.x_min + ix * step_x, bounds.y_min + iy * step_y;
            g.points.push_back({pt(0), pt(1), fn(pt)});
        }
    }
    return g;
}

}  // namespace detail

// Depth of every grid node under a fitted model.
inline ContourGrid contour_grid(const LpModel& model, const GridBounds& bounds, int resolution) {
    if (model.dim() != 2) throw UnsupportedDimension("contour_grid: only d = 2 is supported");
    return detail::make_grid(bounds, resolution, [&](const Vector& x) { return depth(x, model).value(); });
}

// True density of every grid node.
inline ContourGrid contour_grid(const LpSymmetricSpec& spec, const GridBounds& bounds, int resolution) {
    spec.validate();
    if (spec.dim() != 2) throw UnsupportedDimension("contour_grid: only d = 2 is supported");
    return detail::make_grid(bounds, resolution, [&](const Vector& x) { return std::exp(spec.log_density(x)); });
}

// 17 significant digits; enough to round-trip any double.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_contour_csv(std::ostream& os, const ContourGrid& g) {
    os << "x,y,value\n";
    for (const auto& pt : g.points) {
        os << format_double(pt.x) << ',' << format_double(pt.y) << ',' << format_double(pt.value) << '\n';
    }
}

// 2x2 rotation by `radians`.
inline Matrix rotation2(double radians) {
    Matrix r(2, 2);
    r << std::cos(radians), -std::sin(radians), std::sin(radians), std::cos(radians);
    return r;
}

}  // namespace lpdepth
