#pragma once

// Per-class estimation: moment location/scatter, the transformation–
// retransformation square root of the scatter, depth samples, the trimmed
// log-likelihood and the grid choice of the exponent p.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpdepth/error.hpp"
#include "lpdepth/kde.hpp"
#include "lpdepth/lp_core.hpp"
#include "lpdepth/rng.hpp"
#include "lpdepth/stats.hpp"

namespace lpdepth {

using Matrix = Eigen::MatrixXd;  // observations in rows
using Vector = Eigen::VectorXd;

struct ScatterEstimate {
    Vector mu;
    Matrix sigma;
    Eigen::Index n = 0;
};

inline ScatterEstimate moment_estimates(const Matrix& data) {
    const auto n = data.rows();
    const auto d = data.cols();
    if (d < 1) throw InsufficientData("moment_estimates: data has no columns");
    if (n < d + 2) {
        throw InsufficientData("moment_estimates: need at least d + 2 = " + std::to_string(d + 2) + " rows, got " +
                               std::to_string(n));
    }
    ScatterEstimate est;
    est.n = n;
    est.mu = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - est.mu.transpose();
    est.sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
    est.sigma = 0.5 * (est.sigma + est.sigma.transpose());
    const double trace = est.sigma.trace();
    if (!(trace > 0.0) || !std::isfinite(trace)) throw DegenerateData("moment_estimates: zero or non-finite variance");
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(est.sigma, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 1e-10 * trace / static_cast<double>(d))) {
        throw DegenerateData("moment_estimates: sample covariance is singular");
    }
    return est;
}

// d det(Z)^{1/d} / trace(Z) for symmetric positive definite Z; 1 iff Z = cI.
inline double det_trace_ratio(const Matrix& z) {
    const auto d = static_cast<double>(z.rows());
    const Eigen::LLT<Matrix> llt(z);
    if (llt.info() != Eigen::Success) return 0.0;
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return std::min(1.0, d * std::exp(log_det / d) / z.trace());
}

struct TrSqrtOptions {
    int max_tries = 5000;
    double target_ratio = 0.99;
};

struct TrSqrtResult {
    Matrix a_hat;                     // X(alpha)^{-1}
    std::vector<Eigen::Index> alpha;  // d + 1 row indices; the last one is the pivot
    double ratio = 0.0;
    int tries_used = 0;
    double scale = 1.0;               // det(Z)^{1/(2d)}

    // a_hat rescaled so that |det| = det(Sigma)^{-1/2}; a square root of
    // Sigma^{-1} up to an orthogonal factor, comparable across classes.
    Matrix normalized() const { return scale * a_hat; }
};

// Basis matrix X(alpha) with columns x_{i_k} - x_{i_{d+1}}.
inline Matrix subset_basis(const Matrix& data, std::span<const Eigen::Index> alpha) {
    const auto d = data.cols();
    Matrix x(d, d);
    const auto pivot = alpha[static_cast<std::size_t>(d)];
    for (Eigen::Index k = 0; k < d; ++k) {
        x.col(k) = (data.row(alpha[static_cast<std::size_t>(k)]) - data.row(pivot)).transpose();
    }
    return x;
}

namespace detail {

inline std::vector<Eigen::Index> draw_subset(Rng& rng, Eigen::Index n, Eigen::Index k) {
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<std::size_t>(k));
    while (static_cast<Eigen::Index>(out.size()) < k) {
        const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
        if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
    }
    return out;
}

}  // namespace detail

// Random (d+1)-subset search for a basis whose Z(alpha) = X' Sigma^{-1} X is
// close to a multiple of the identity.
inline TrSqrtResult tr_sqrt(const Matrix& data, const ScatterEstimate& est, Rng& rng, const TrSqrtOptions& opt = {}) {
    const auto n = data.rows();
    const auto d = data.cols();
    if (n < d + 1) throw InsufficientData("tr_sqrt: need at least d + 1 rows");
    if (est.sigma.rows() != d) throw DimensionMismatch("tr_sqrt: scatter and data dimensions differ");
    const Eigen::LLT<Matrix> chol(est.sigma);
    if (chol.info() != Eigen::Success) throw DegenerateData("tr_sqrt: scatter is not positive definite");
    const Matrix chol_l = chol.matrixL();
    const double log_det_sigma = 2.0 * chol_l.diagonal().array().log().sum();
    // |det X| below 1e-10 (det Sigma)^{1/2} counts as singular; affine invariant.
    const double log_det_floor = std::log(1e-10) + 0.5 * log_det_sigma;

    TrSqrtResult best;
    bool found = false;
    for (int t = 1; t <= opt.max_tries; ++t) {
        auto alpha = detail::draw_subset(rng, n, d + 1);
        const Matrix x = subset_basis(data, alpha);
        const Eigen::PartialPivLU<Matrix> lu(x);
        const double log_abs_det_x = std::log(std::fabs(lu.determinant()));
        if (!(log_abs_det_x > log_det_floor)) continue;
        const Matrix w = chol_l.triangularView<Eigen::Lower>().solve(x);
        const Matrix z = w.transpose() * w;
        const double ratio = det_trace_ratio(z);
        if (!found || ratio > best.ratio) {
            found = true;
            best.alpha = std::move(alpha);
            best.ratio = ratio;
            best.a_hat = lu.inverse();
            best.scale = std::exp((2.0 * log_abs_det_x - log_det_sigma) / (2.0 * static_cast<double>(d)));
        }
        best.tries_used = t;
        if (best.ratio >= opt.target_ratio) return best;
    }
    if (!found) throw DegenerateGeometry("tr_sqrt: no nonsingular subset found in " + std::to_string(opt.max_tries) + " tries");
    best.tries_used = opt.max_tries;
    return best;
}

// Depths of every row under (b, A, p), in row order.
inline std::vector<double> depth_sample(const Matrix& data, const Vector& b, const Matrix& a, double p) {
    if (data.cols() != b.size() || a.rows() != b.size() || a.cols() != b.size()) {
        throw DimensionMismatch("depth_sample: inconsistent dimensions");
    }
    if (!(p >= 1.0)) throw DomainError("depth_sample: p must be >= 1");
    const Matrix z = (data.rowwise() - b.transpose()) * a.transpose();
    std::vector<double> out(static_cast<std::size_t>(data.rows()));
    Vector row(z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        row = z.row(i).transpose();
        out[static_cast<std::size_t>(i)] = 1.0 / (1.0 + lp_norm(row, p));
    }
    return out;
}

inline std::vector<double> depth_sample(const Matrix& data, const LpModel& m) {
    return depth_sample(data, m.location(), m.transform(), m.p());
}

// Exponent grid.
class PGrid {
public:
    explicit PGrid(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw ConfigError("p grid is empty");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] >= 1.0) || !std::isfinite(values_[i])) throw ConfigError("p grid values must be >= 1");
            if (i > 0 && !(values_[i] > values_[i - 1])) throw ConfigError("p grid must be strictly ascending");
        }
    }

    // {2^{(i-1)/2} : i = 1..10}.
    static PGrid standard() {
        std::vector<double> v;
        for (int i = 1; i <= 10; ++i) v.push_back(std::exp2(static_cast<double>(i - 1) / 2.0));
        return PGrid(std::move(v));
    }

    // Mahalanobis-depth baseline.
    static PGrid euclidean() { return PGrid({2.0}); }

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<double> values_;
};

struct TrimSpec {
    double lo = 0.02;
    double hi = 0.98;

    void validate() const {
        if (!(lo > 0.0 && lo < hi && hi < 1.0)) throw ConfigError("trim levels must satisfy 0 < lo < hi < 1");
    }
};

inline constexpr std::size_t kMinRetained = 8;

// log f-hat at one depth value. Depths at 1 are pulled to 1 - 1e-12 when d > 1.
inline double log_density_at(double delta, const DepthKde& kde, const LpModel& m, int d) {
    const double dl = (d > 1) ? std::min(delta, 1.0 - 1e-12) : delta;
    return log_density_from_log_g(dl, kde.floored_log_eval(dl), m, d);
}

struct TrimmedFit {
    double phi = 0.0;
    double zeta_lo = 0.0;
    double zeta_hi = 0.0;
    std::vector<double> depths;              // row order
    std::vector<std::size_t> retained;       // row indices inside [zeta_lo, zeta_hi]
    std::vector<double> log_terms;           // log f-hat at each retained row
    double bandwidth = 0.0;
};

// Trimmed log-likelihood: the KDE is fitted on all depths, the sum runs over
// rows whose depth lies between the empirical trim quantiles.
inline TrimmedFit trimmed_fit(const Matrix& data, const Vector& b, const Matrix& a, double p, const TrimSpec& trim,
                              const SjOptions& sj = {}) {
    trim.validate();
    TrimmedFit fit;
    fit.depths = depth_sample(data, b, a, p);
    std::vector<double> sorted = fit.depths;
    std::sort(sorted.begin(), sorted.end());
    fit.zeta_lo = quantile_sorted(sorted, trim.lo);
    fit.zeta_hi = quantile_sorted(sorted, trim.hi);
    for (std::size_t i = 0; i < fit.depths.size(); ++i) {
        if (fit.depths[i] >= fit.zeta_lo && fit.depths[i] <= fit.zeta_hi) fit.retained.push_back(i);
    }
    if (fit.retained.size() < kMinRetained) {
        throw TrimTooAggressive("trimmed_loglik: only " + std::to_string(fit.retained.size()) +
                                " rows retained after trimming (need " + std::to_string(kMinRetained) + ")");
    }
    const DepthKde kde(sorted, sj_bandwidth(sorted, sj));
    fit.bandwidth = kde.bandwidth();
    const LpModel m(p, b, a);
    const int d = static_cast<int>(data.cols());
    fit.log_terms.reserve(fit.retained.size());
    for (std::size_t i : fit.retained) {
        const double term = log_density_at(fit.depths[i], kde, m, d);
        fit.log_terms.push_back(term);
        fit.phi += term;
    }
    return fit;
}

inline double trimmed_loglik(const Matrix& data, const Vector& b, const Matrix& a, double p, const TrimSpec& trim) {
    return trimmed_fit(data, b, a, p, trim).phi;
}

struct PScore {
    double p = 0.0;
    double phi = -std::numeric_limits<double>::infinity();
    bool ok = false;
};

struct PEstimate {
    double p_hat = 0.0;
    std::vector<PScore> scores;  // one per grid value, grid order
};

// Argmax of phi_p over the grid; ties go to the smaller p. Grid points whose
// evaluation fails score -inf; if every point fails the first error propagates.
template <class ScoreFn>
PEstimate maximize_over_grid(const PGrid& grid, ScoreFn&& score) {
    PEstimate out;
    std::exception_ptr first_error;
    bool any = false;
    double best = -std::numeric_limits<double>::infinity();
    for (double p : grid.values()) {
        PScore s{p};
        try {
            s.phi = score(p);
            s.ok = std::isfinite(s.phi);
        } catch (const Error&) {
            if (!first_error) first_error = std::current_exception();
        }
        if (s.ok && (!any || s.phi > best)) {
            any = true;
            best = s.phi;
            out.p_hat = s.p;
        }
        out.scores.push_back(s);
    }
    if (!any) {
        if (first_error) std::rethrow_exception(first_error);
        throw DegenerateData("estimate_p: no grid value produced a finite likelihood");
    }
    return out;
}

inline PEstimate estimate_p(const Matrix& data, const Vector& b, const Matrix& a, const PGrid& grid, const TrimSpec& trim) {
    return maximize_over_grid(grid, [&](double p) { return trimmed_loglik(data, b, a, p, trim); });
}

// ---------------------------------------------------------------------------
// Orientation. The subset basis fixes A only up to an orthogonal factor, and
// l_p balls with p != 2 are not rotation invariant. In whitened coordinates
// the polar angle of an l_p-symmetric law in d = 2 has density proportional to
// ||(cos psi, sin psi)||_p^{-2}, whatever the radial part: it peaks on the l_p
// axes when p < 2 and on the diagonals when p > 2. So both rotations come from
// the fourth angular harmonic of the data, once, independently of p, and are
// skipped when that harmonic is indistinguishable from zero. All of it happens
// in frame coordinates, so the result stays affine equivariant.

struct OrientationOptions {
    bool enabled = true;
    int sweeps = 4;                // Jacobi passes over all coordinate planes
    double isotropy_level = 0.01;  // Bonferroni level of the isotropy test over planes
};

// (A Sigma A')^{-1/2} A: same frame, covariance exactly the identity.
inline Matrix whiten(const Matrix& a, const Matrix& sigma) {
    const Matrix s = a * sigma * a.transpose();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
        throw DegenerateGeometry("whiten: transformed scatter is not positive definite");
    }
    const Matrix inv_root =
        eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return inv_root * a;
}

namespace detail {

inline Matrix plane_rotation(Eigen::Index d, Eigen::Index i, Eigen::Index j, double theta) {
    Matrix g = Matrix::Identity(d, d);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    g(i, i) = c;
    g(j, j) = c;
    g(i, j) = -s;
    g(j, i) = s;
    return g;
}

// Within one coordinate plane, the mean of cos 4psi over the rows' polar angles
// psi, after rotating the plane by t, is B cos 4t + C sin 4t exactly. Returns
// (B, C) and the Rayleigh statistic 2n(B^2 + C^2), which is chi^2 with 2 df
// for any rotationally symmetric law and does not depend on the starting
// angle. Rows at the origin are ignored.
struct PlaneHarmonic {
    double b = 0.0;
    double c = 0.0;
    double wald = 0.0;
};

inline PlaneHarmonic plane_harmonic(const Matrix& z, Eigen::Index i, Eigen::Index j) {
    PlaneHarmonic h;
    Eigen::Index used = 0;
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
        const double u = z(k, i), v = z(k, j);
        const double r2 = u * u + v * v;
        if (!(r2 > 0.0)) continue;
        const double u2 = u * u / r2, v2 = v * v / r2, uv = u * v / r2;
        h.b += u2 * u2 - 6.0 * u2 * v2 + v2 * v2;  // cos 4psi
        h.c -= 4.0 * uv * (u2 - v2);               // -sin 4psi
        ++used;
    }
    if (used == 0) return h;
    const double n = static_cast<double>(used);
    h.b /= n;
    h.c /= n;
    h.wald = 2.0 * n * (h.b * h.b + h.c * h.c);
    return h;
}

// Jacobi sweeps moving every plane to its maximizing (or minimizing) angle.
inline Matrix extremal_rotation(Matrix z, bool maximize, int sweeps) {
    const auto d = z.cols();
    Matrix r = Matrix::Identity(d, d);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (Eigen::Index i = 0; i + 1 < d; ++i) {
            for (Eigen::Index j = i + 1; j < d; ++j) {
                const PlaneHarmonic h = plane_harmonic(z, i, j);
                double theta = std::atan2(h.c, h.b) / 4.0;
                if (!maximize) theta += std::numbers::pi / 4.0;
                const Matrix g = plane_rotation(d, i, j, theta);
                r = g * r;
                z = z * g.transpose();
            }
        }
    }
    return r;
}

}  // namespace detail

struct OrientedFrames {
    Matrix base;    // the whitened frame as given
    Matrix peaked;  // axes where the angular density peaks; used for p < 2
    Matrix flat;    // axes where it is lowest; used for p > 2
    double isotropy_stat = 0.0;  // largest per-plane Rayleigh statistic
    bool rotated = false;

    const Matrix& for_p(double p) const { return p < 2.0 ? peaked : (p > 2.0 ? flat : base); }
};

inline OrientedFrames orient_frames(const Matrix& data, const Vector& b, const Matrix& frame, const OrientationOptions& opt = {}) {
    if (opt.sweeps < 1) throw ConfigError("orientation: sweeps must be >= 1");
    if (!(opt.isotropy_level > 0.0 && opt.isotropy_level < 1.0)) throw ConfigError("orientation: isotropy level must lie in (0, 1)");
    OrientedFrames out{frame, frame, frame};
    const auto d = frame.rows();
    if (!opt.enabled || d < 2) return out;
    const Matrix z = (data.rowwise() - b.transpose()) * frame.transpose();
    const double planes = static_cast<double>(d * (d - 1) / 2);
    for (Eigen::Index i = 0; i + 1 < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) out.isotropy_stat = std::max(out.isotropy_stat, detail::plane_harmonic(z, i, j).wald);
    }
    // chi^2_2 upper quantile at level alpha is -2 log(alpha).
    if (out.isotropy_stat < -2.0 * std::log(opt.isotropy_level / planes)) return out;
    out.rotated = true;
    out.peaked = detail::extremal_rotation(z, true, opt.sweeps) * frame;
    out.flat = detail::extremal_rotation(z, false, opt.sweeps) * frame;
    return out;
}

struct OrientedEstimate {
    PEstimate estimate;
    std::vector<Matrix> transforms;  // grid order
    Matrix a_hat;                    // transform at p_hat
};

// Grid choice of p where each p is scored on the full data in the
// orientation of the whitened frame `frame` that suits it.
inline OrientedEstimate estimate_p_oriented(const Matrix& data, const Vector& b, const Matrix& frame, const PGrid& grid,
                                            const TrimSpec& trim, const OrientationOptions& opt = {}) {
    const OrientedFrames frames = orient_frames(data, b, frame, opt);
    OrientedEstimate out;
    std::size_t k = 0;
    out.transforms.resize(grid.size(), frame);
    out.estimate = maximize_over_grid(grid, [&](double p) {
        Matrix& a = out.transforms[k++];
        a = frames.for_p(p);
        return trimmed_loglik(data, b, a, p, trim);
    });
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.values()[i] == out.estimate.p_hat) out.a_hat = out.transforms[i];
    }
    return out;
}

}  // namespace lpdepth
