#pragma once

// One-dimensional Gaussian kernel density estimation over depth values, with
// the Sheather–Jones solve-the-equation bandwidth.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "lpdepth/error.hpp"
#include "lpdepth/stats.hpp"

namespace lpdepth {

inline constexpr double kDensityFloor = 1e-300;

struct SjOptions {
    int bins = 1000;              // pair-distance bins for the functional estimates
    double tolerance = 1e-7;      // bisection tolerance, in units of the sample sd
    int max_iterations = 100;
};

struct BandwidthChoice {
    double h = 0.0;
    bool fallback = false;  // true when the SJ equation had no root in the bracket
};

// 0.9 min(sd, IQR/1.34) n^{-1/5}.
inline double rule_of_thumb_bandwidth(std::span<const double> x) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double sd = sd_of(s);
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

namespace detail {

// Binned pair counts: cnt[k] = number of pairs i < j whose bins differ by k.
struct PairBins {
    std::vector<double> cnt;
    double width = 0.0;
    double n = 0.0;
};

inline PairBins bin_pairs(std::span<const double> x, int nb) {
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    PairBins pb;
    pb.n = static_cast<double>(x.size());
    pb.width = (*mx - *mn) * 1.01 / nb;
    std::vector<double> w(static_cast<std::size_t>(nb), 0.0);
    for (double v : x) {
        auto b = static_cast<long>(std::floor((v - *mn) / pb.width));
        b = std::clamp(b, 0L, static_cast<long>(nb) - 1);
        w[static_cast<std::size_t>(b)] += 1.0;
    }
    pb.cnt.assign(static_cast<std::size_t>(nb), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) continue;
        pb.cnt[0] += w[i] * (w[i] - 1.0) / 2.0;
        for (std::size_t j = i + 1; j < w.size(); ++j) pb.cnt[j - i] += w[i] * w[j];
    }
    return pb;
}

// Estimate of the integrated squared second derivative, R(f'') (phi_4).
inline double sj_phi4(const PairBins& pb, double h) {
    double sum = 0.0;
    for (std::size_t k = 0; k < pb.cnt.size(); ++k) {
        const double t = static_cast<double>(k) * pb.width / h;
        const double delta = t * t;
        if (delta >= 1000.0) break;
        sum += std::exp(-delta / 2.0) * (delta * delta - 6.0 * delta + 3.0) * pb.cnt[k];
    }
    sum = 2.0 * sum + 3.0 * pb.n;
    return sum / (pb.n * (pb.n - 1.0) * std::pow(h, 5.0) * std::sqrt(2.0 * std::numbers::pi));
}

// phi_6 counterpart, used for the pilot bandwidth.
inline double sj_phi6(const PairBins& pb, double h) {
    double sum = 0.0;
    for (std::size_t k = 0; k < pb.cnt.size(); ++k) {
        const double t = static_cast<double>(k) * pb.width / h;
        const double delta = t * t;
        if (delta >= 1000.0) break;
        sum += std::exp(-delta / 2.0) * (delta * delta * delta - 15.0 * delta * delta + 45.0 * delta - 15.0) * pb.cnt[k];
    }
    sum = 2.0 * sum - 15.0 * pb.n;
    return sum / (pb.n * (pb.n - 1.0) * std::pow(h, 7.0) * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace detail

inline BandwidthChoice sj_bandwidth_choice(std::span<const double> x, const SjOptions& opt = {}) {
    if (x.size() < 8) throw InsufficientData("sj_bandwidth: at least 8 values are required");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    if (s.front() == s.back()) throw DegenerateData("sj_bandwidth: all values are identical");
    const double sd = sd_of(s);
    const double n = static_cast<double>(s.size());
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    const double scale = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;

    const BandwidthChoice fallback{rule_of_thumb_bandwidth(s), true};

    const auto pb = detail::bin_pairs(s, opt.bins);
    const double a = 1.24 * scale * std::pow(n, -1.0 / 7.0);
    const double b = 1.23 * scale * std::pow(n, -1.0 / 9.0);
    const double c1 = 1.0 / (2.0 * std::sqrt(std::numbers::pi) * n);
    const double td = -detail::sj_phi6(pb, b);
    if (!std::isfinite(td) || td <= 0.0) return fallback;
    const double alpha2 = 1.357 * std::pow(detail::sj_phi4(pb, a) / td, 1.0 / 7.0);
    if (!std::isfinite(alpha2)) return fallback;

    const auto equation = [&](double h) {
        const double sd4 = detail::sj_phi4(pb, alpha2 * std::pow(h, 5.0 / 7.0));
        if (!(sd4 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return std::pow(c1 / sd4, 0.2) - h;
    };

    double lo = 1e-4 * sd;
    double hi = 10.0 * sd;
    double flo = equation(lo);
    const double fhi = equation(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi) || flo * fhi > 0.0) return fallback;
    for (int it = 0; it < opt.max_iterations && hi - lo > opt.tolerance * sd; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = equation(mid);
        if (!std::isfinite(fm)) return fallback;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return {0.5 * (lo + hi), false};
}

inline double sj_bandwidth(std::span<const double> x, const SjOptions& opt = {}) {
    return sj_bandwidth_choice(x, opt).h;
}

// Gaussian KDE over sorted depth samples.
class DepthKde {
public:
    DepthKde(std::vector<double> samples, double h) : samples_(std::move(samples)), h_(h) {
        if (samples_.empty()) throw InsufficientData("DepthKde: no samples");
        if (!(h_ > 0.0) || !std::isfinite(h_)) throw DomainError("DepthKde: bandwidth must be positive");
        std::sort(samples_.begin(), samples_.end());
    }

    static DepthKde fit(std::vector<double> samples, const SjOptions& opt = {}) {
        const double h = sj_bandwidth(samples, opt);
        return DepthKde(std::move(samples), h);
    }

    double bandwidth() const noexcept { return h_; }
    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

    double eval(double t) const { return std::exp(log_eval(t)); }

    double log_eval(double t) const { return log_sum(t, kNone) - log_norm(samples_.size()); }

    // Density of the sample with one copy of `excluded` removed, same bandwidth.
    double log_eval_leave_one_out(double t, double excluded) const {
        if (samples_.size() < 2) throw InsufficientData("DepthKde: leave-one-out needs two samples");
        const auto it = std::lower_bound(samples_.begin(), samples_.end(), excluded);
        if (it == samples_.end() || *it != excluded) throw DomainError("DepthKde: excluded value is not a sample");
        const auto skip = static_cast<std::size_t>(it - samples_.begin());
        return log_sum(t, skip) - log_norm(samples_.size() - 1);
    }

    // log g with g clamped below at kDensityFloor.
    double floored_log_eval(double t) const { return std::max(log_eval(t), std::log(kDensityFloor)); }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    double log_norm(std::size_t n) const {
        return std::log(static_cast<double>(n) * h_) + 0.5 * std::log(2.0 * std::numbers::pi);
    }

    // log sum_i exp(-z_i^2 / 2), z_i = (t - x_i) / h, skipping index `skip`.
    // Terms farther than 9 bandwidths beyond the nearest sample are dropped;
    // their total is below n e^{-40} relative to the kept sum.
    double log_sum(double t, std::size_t skip) const {
        const std::size_t n = samples_.size();
        const auto pos = static_cast<std::size_t>(std::lower_bound(samples_.begin(), samples_.end(), t) - samples_.begin());
        double nearest = std::numeric_limits<double>::infinity();
        const std::size_t from = pos >= 2 ? pos - 2 : 0;
        for (std::size_t i = from; i < std::min(n, pos + 2); ++i) {
            if (i != skip) nearest = std::min(nearest, std::fabs(t - samples_[i]));
        }
        const double zmin = nearest / h_;
        const double reach = (zmin + 9.0) * h_;
        const auto first = std::lower_bound(samples_.begin(), samples_.end(), t - reach) - samples_.begin();
        const auto last = std::upper_bound(samples_.begin(), samples_.end(), t + reach) - samples_.begin();
        const double shift = 0.5 * zmin * zmin;
        double sum = 0.0;
        for (auto i = first; i < last; ++i) {
            if (static_cast<std::size_t>(i) == skip) continue;
            const double z = (t - samples_[static_cast<std::size_t>(i)]) / h_;
            sum += std::exp(shift - 0.5 * z * z);
        }
        return std::log(sum) - shift;
    }

    std::vector<double> samples_;
    double h_;
};

}  // namespace lpdepth
