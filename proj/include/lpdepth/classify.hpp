#pragma once

// Maximum-depth classifier d1 (common p) and the generalized density-ratio
// classifier d2 (per-class p, leave-one-out threshold, pairwise voting).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "lpdepth/error.hpp"
#include "lpdepth/kde.hpp"
#include "lpdepth/lp_core.hpp"
#include "lpdepth/model_fit.hpp"
#include "lpdepth/rng.hpp"

namespace lpdepth {

struct FitOptions {
    PGrid grid = PGrid::standard();
    TrimSpec trim{};
    TrSqrtOptions tr{};
    OrientationOptions orientation{};
};

// Location, TR basis and the whitened frame of one class; p-independent.
struct ClassGeometry {
    ScatterEstimate est;
    TrSqrtResult tr;
    Matrix frame;
};

inline ClassGeometry fit_geometry(const Matrix& data, Rng& rng, const FitOptions& opt = {}) {
    ClassGeometry g;
    g.est = moment_estimates(data);
    g.tr = tr_sqrt(data, g.est, rng, opt.tr);
    g.frame = whiten(g.tr.a_hat, g.est.sigma);
    return g;
}

struct TrainedClass {
    std::string label;
    LpModel model;
    DepthKde kde;
    double prior = 0.0;
    Eigen::Index n = 0;
    double tr_ratio = 0.0;  // det/trace ratio reached by the subset search
    int tr_tries = 0;

    int dim() const { return static_cast<int>(model.dim()); }
};

// KDE over the class's own depths at the final (p, b, A).
inline TrainedClass make_trained_class(std::string label, const Matrix& data, LpModel model, double prior,
                                       const TrSqrtResult& tr) {
    auto depths = depth_sample(data, model);
    DepthKde kde = DepthKde::fit(std::move(depths));
    return TrainedClass{std::move(label), std::move(model), std::move(kde), prior, data.rows(), tr.ratio, tr.tries_used};
}

struct ClassFit {
    TrainedClass cls;
    PEstimate estimate;
};

// Full per-class pipeline with its own p-hat.
inline ClassFit fit_class(const Matrix& data, std::string label, double prior, Rng& rng, const FitOptions& opt = {}) {
    const ClassGeometry g = fit_geometry(data, rng, opt);
    const OrientedEstimate oe = estimate_p_oriented(data, g.est.mu, g.frame, opt.grid, opt.trim, opt.orientation);
    LpModel model(oe.estimate.p_hat, g.est.mu, oe.a_hat);
    return {make_trained_class(std::move(label), data, std::move(model), prior, g.tr), oe.estimate};
}

struct CommonPFit {
    PEstimate estimate;                         // summed phi per grid value
    std::vector<std::vector<Matrix>> transforms;  // [class][grid index]
};

// Common p maximizing the summed trimmed log-likelihood; each class keeps its
// own location and its own orientation for each side of p = 2.
inline CommonPFit fit_common_p(const std::vector<Matrix>& class_data, const std::vector<ClassGeometry>& geoms,
                               const PGrid& grid, const TrimSpec& trim, const OrientationOptions& orient = {}) {
    if (class_data.empty() || class_data.size() != geoms.size()) throw DomainError("fit_common_p: need one geometry per class");
    CommonPFit out;
    out.transforms.assign(class_data.size(), std::vector<Matrix>(grid.size()));
    std::vector<OrientedFrames> frames;
    for (std::size_t j = 0; j < class_data.size(); ++j) {
        frames.push_back(orient_frames(class_data[j], geoms[j].est.mu, geoms[j].frame, orient));
    }
    std::size_t k = 0;
    out.estimate = maximize_over_grid(grid, [&](double p) {
        const std::size_t gi = k++;
        double total = 0.0;
        for (std::size_t j = 0; j < class_data.size(); ++j) {
            const auto& g = geoms[j];
            Matrix& a = out.transforms[j][gi];
            a = frames[j].for_p(p);
            total += trimmed_loglik(class_data[j], g.est.mu, a, p, trim);
        }
        return total;
    });
    return out;
}

// Per-class random streams: class j of a fit seeded with `seed`.
inline Rng class_rng(std::uint64_t seed, std::size_t j) { return Rng(derive_seed(seed, j, 0x7e5eedULL)); }

inline std::vector<double> sample_priors(const std::vector<Matrix>& class_data) {
    double total = 0.0;
    for (const auto& m : class_data) total += static_cast<double>(m.rows());
    std::vector<double> out;
    for (const auto& m : class_data) out.push_back(static_cast<double>(m.rows()) / total);
    return out;
}

inline std::vector<double> equal_priors(std::size_t j) { return std::vector<double>(j, 1.0 / static_cast<double>(j)); }

namespace detail {

inline void check_classes(const std::vector<Matrix>& class_data, const std::vector<std::string>& labels,
                          const std::vector<double>& priors) {
    if (class_data.size() < 2) throw InsufficientData("classifier: need at least two classes");
    if (labels.size() != class_data.size() || priors.size() != class_data.size()) {
        throw DomainError("classifier: labels and priors must have one entry per class");
    }
    double sum = 0.0;
    for (double p : priors) {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("classifier: priors must lie in (0, 1)");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw ConfigError("classifier: priors must sum to 1");
    for (const auto& m : class_data) {
        if (m.cols() != class_data.front().cols()) throw DimensionMismatch("classifier: classes differ in dimension");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// d1: maximum depth with a common p.

struct ClassifierD1 {
    std::vector<TrainedClass> classes;
    PEstimate estimate;

    double p() const { return classes.front().model.p(); }
    int dim() const { return classes.front().dim(); }
};

inline ClassifierD1 fit_d1(const std::vector<Matrix>& class_data, const std::vector<std::string>& labels,
                           const std::vector<double>& priors, std::uint64_t seed, const FitOptions& opt = {}) {
    detail::check_classes(class_data, labels, priors);
    std::vector<ClassGeometry> geoms;
    for (std::size_t j = 0; j < class_data.size(); ++j) {
        Rng rng = class_rng(seed, j);
        geoms.push_back(fit_geometry(class_data[j], rng, opt));
    }
    const CommonPFit common = fit_common_p(class_data, geoms, opt.grid, opt.trim, opt.orientation);
    std::size_t gi = 0;
    while (opt.grid.values()[gi] != common.estimate.p_hat) ++gi;
    ClassifierD1 c;
    c.estimate = common.estimate;
    for (std::size_t j = 0; j < class_data.size(); ++j) {
        LpModel m(common.estimate.p_hat, geoms[j].est.mu, common.transforms[j][gi]);
        c.classes.push_back(make_trained_class(labels[j], class_data[j], std::move(m), priors[j], geoms[j].tr));
    }
    return c;
}

// Index of the class giving x the largest depth; ties go to the smallest index.
inline std::size_t classify_d1_index(const Eigen::Ref<const Vector>& x, const std::vector<TrainedClass>& classes) {
    if (classes.empty()) throw DomainError("classify_d1: no classes");
    std::size_t best = 0;
    double best_depth = -1.0;
    for (std::size_t j = 0; j < classes.size(); ++j) {
        const double dep = depth(x, classes[j].model).value();
        if (dep > best_depth) {
            best_depth = dep;
            best = j;
        }
    }
    return best;
}

inline const std::string& classify_d1(const Eigen::Ref<const Vector>& x, const ClassifierD1& c) {
    return c.classes[classify_d1_index(x, c.classes)].label;
}

// ---------------------------------------------------------------------------
// Class densities.

inline const double kLogDensityFloor = std::log(kDensityFloor);

// log f-hat at a known depth value; floored at log 1e-300.
inline double class_log_density_at_depth(double delta, const TrainedClass& c) {
    return std::max(log_density_at(delta, c.kde, c.model, c.dim()), kLogDensityFloor);
}

inline double class_log_density(const Eigen::Ref<const Vector>& x, const TrainedClass& c) {
    return class_log_density_at_depth(depth(x, c.model).value(), c);
}

inline double class_density(const Eigen::Ref<const Vector>& x, const TrainedClass& c) {
    const double ld = class_log_density(x, c);
    return ld <= kLogDensityFloor ? kDensityFloor : std::exp(ld);  // exp(log 1e-300) is not exactly 1e-300
}

// ---------------------------------------------------------------------------
// Leave-one-out threshold.

struct ThresholdChoice {
    double log_k = 0.0;
    double cv_error = 0.0;
};

namespace detail {

inline double log_mid(double a, double b) {
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi)) - std::numbers::ln2;
}

}  // namespace detail

// Minimizes
//   CV(k) = (pi_a/n_a) #{a: ratio <= k} + (pi_b/n_b) #{b: ratio >= k}
// over k, given log density ratios log f_a - log f_b at held-out points of
// each class. CV is constant between observed ratios, so the candidates are
// the arithmetic midpoints of consecutive distinct ratios plus one point
// beyond each end; ties go to the candidate closest to pi_b/pi_a in log scale.
inline ThresholdChoice select_threshold(std::vector<double> log_ratio_a, std::vector<double> log_ratio_b, double prior_a,
                                        double prior_b) {
    if (log_ratio_a.empty() || log_ratio_b.empty()) throw InsufficientData("select_threshold: both classes need ratios");
    if (!(prior_a > 0.0) || !(prior_b > 0.0)) throw ConfigError("select_threshold: priors must be positive");
    std::sort(log_ratio_a.begin(), log_ratio_a.end());
    std::sort(log_ratio_b.begin(), log_ratio_b.end());
    std::vector<double> pooled = log_ratio_a;
    pooled.insert(pooled.end(), log_ratio_b.begin(), log_ratio_b.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    std::vector<double> cands;
    cands.push_back(pooled.front() - std::numbers::ln2);
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i) cands.push_back(detail::log_mid(pooled[i], pooled[i + 1]));
    cands.push_back(pooled.back() + std::numbers::ln2);

    const double wa = prior_a / static_cast<double>(log_ratio_a.size());
    const double wb = prior_b / static_cast<double>(log_ratio_b.size());
    const double target = std::log(prior_b) - std::log(prior_a);
    ThresholdChoice best{0.0, std::numeric_limits<double>::infinity()};
    double best_dist = std::numeric_limits<double>::infinity();
    for (double lk : cands) {
        const auto a_err = std::upper_bound(log_ratio_a.begin(), log_ratio_a.end(), lk) - log_ratio_a.begin();
        const auto b_err = log_ratio_b.end() - std::lower_bound(log_ratio_b.begin(), log_ratio_b.end(), lk);
        const double cv = wa * static_cast<double>(a_err) + wb * static_cast<double>(b_err);
        const double dist = std::fabs(lk - target);
        if (cv < best.cv_error || (cv == best.cv_error && dist < best_dist)) {
            best = {lk, cv};
            best_dist = dist;
        }
    }
    return best;
}

// Leave-one-out log ratios log f_a - log f_b at the training rows of class a
// (held-out side is `a`): the held-out row's own depth is removed from a's KDE
// with the bandwidth kept; location, transform and p are not refitted.
inline std::vector<double> loo_log_ratios(const TrainedClass& own, const TrainedClass& other, const Matrix& own_train,
                                          bool own_is_numerator) {
    if (own.kde.size() < 2) throw InsufficientData("fit_threshold_k: leave-one-out needs two rows per class");
    const auto depths = depth_sample(own_train, own.model);
    const int d = own.dim();
    std::vector<double> out;
    out.reserve(depths.size());
    Vector x(own_train.cols());
    for (Eigen::Index i = 0; i < own_train.rows(); ++i) {
        const double dl = depths[static_cast<std::size_t>(i)];
        const double dc = (d > 1) ? std::min(dl, 1.0 - 1e-12) : dl;
        const double log_g = std::max(own.kde.log_eval_leave_one_out(dc, dl), std::log(kDensityFloor));
        const double lf_own = std::max(log_density_from_log_g(dc, log_g, own.model, d), kLogDensityFloor);
        x = own_train.row(i).transpose();
        const double lf_other = class_log_density(x, other);
        out.push_back(own_is_numerator ? lf_own - lf_other : lf_other - lf_own);
    }
    return out;
}

inline ThresholdChoice fit_threshold_k(const TrainedClass& a, const TrainedClass& b, const Matrix& train_a,
                                       const Matrix& train_b) {
    if (train_a.rows() < 8 || train_b.rows() < 8) throw InsufficientData("fit_threshold_k: need at least 8 rows per class");
    if (train_a.rows() != a.n || train_b.rows() != b.n) throw DimensionMismatch("fit_threshold_k: training data do not match the fitted classes");
    return select_threshold(loo_log_ratios(a, b, train_a, true), loo_log_ratios(b, a, train_b, false), a.prior, b.prior);
}

// ---------------------------------------------------------------------------
// d2: generalized density-ratio classifier.

struct PairThreshold {
    std::size_t i = 0;
    std::size_t j = 0;  // i < j
    double log_k = 0.0;
    double cv_error = 0.0;

    double k() const { return std::exp(log_k); }
};

struct ClassifierD2 {
    std::vector<TrainedClass> classes;
    std::vector<PairThreshold> thresholds;  // (0,1), (0,2), ..., (J-2,J-1)

    int dim() const { return classes.front().dim(); }

    const PairThreshold& threshold(std::size_t i, std::size_t j) const {
        for (const auto& t : thresholds) {
            if (t.i == i && t.j == j) return t;
        }
        throw DomainError("ClassifierD2: no threshold for pair");
    }
};

struct D2Fit {
    ClassifierD2 classifier;
    std::vector<PEstimate> estimates;  // per class
};

inline D2Fit fit_d2_detailed(const std::vector<Matrix>& class_data, const std::vector<std::string>& labels,
                             const std::vector<double>& priors, std::uint64_t seed, const FitOptions& opt = {}) {
    detail::check_classes(class_data, labels, priors);
    D2Fit out;
    for (std::size_t j = 0; j < class_data.size(); ++j) {
        Rng rng = class_rng(seed, j);
        ClassFit cf = fit_class(class_data[j], labels[j], priors[j], rng, opt);
        out.classifier.classes.push_back(std::move(cf.cls));
        out.estimates.push_back(std::move(cf.estimate));
    }
    const auto& cl = out.classifier.classes;
    for (std::size_t i = 0; i < cl.size(); ++i) {
        for (std::size_t j = i + 1; j < cl.size(); ++j) {
            const ThresholdChoice t = fit_threshold_k(cl[i], cl[j], class_data[i], class_data[j]);
            out.classifier.thresholds.push_back({i, j, t.log_k, t.cv_error});
        }
    }
    return out;
}

inline ClassifierD2 fit_d2(const std::vector<Matrix>& class_data, const std::vector<std::string>& labels,
                           const std::vector<double>& priors, std::uint64_t seed, const FitOptions& opt = {}) {
    return fit_d2_detailed(class_data, labels, priors, seed, opt).classifier;
}

// Majority vote over pairs: i beats j iff log f_i - log f_j > log k_ij (a
// ratio exactly at k goes to j). Vote ties go to the smallest index.
inline std::size_t vote(const std::vector<double>& log_f, const std::vector<PairThreshold>& thresholds) {
    std::vector<int> votes(log_f.size(), 0);
    for (const auto& t : thresholds) {
        if (log_f[t.i] - log_f[t.j] > t.log_k) {
            ++votes[t.i];
        } else {
            ++votes[t.j];
        }
    }
    return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

inline std::size_t classify_d2_index(const Eigen::Ref<const Vector>& x, const ClassifierD2& c) {
    if (x.size() != c.dim()) throw DimensionMismatch("classify_d2: point has wrong dimension");
    std::vector<double> log_f;
    log_f.reserve(c.classes.size());
    for (const auto& cls : c.classes) log_f.push_back(class_log_density(x, cls));
    return vote(log_f, c.thresholds);
}

inline const std::string& classify_d2(const Eigen::Ref<const Vector>& x, const ClassifierD2& c) {
    return c.classes[classify_d2_index(x, c)].label;
}

}  // namespace lpdepth
