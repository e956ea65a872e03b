// Randomized invariant checks shared by the property tests and the
// acceptance binary. Each returns a tally instead of asserting so both
// harnesses can report it their own way.
#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "lpdepth/harness.hpp"
#include "lpdepth/kde.hpp"
#include "lpdepth/lp_core.hpp"
#include "lpdepth/model_fit.hpp"

namespace props {

using namespace lpdepth;

struct Tally {
    int cases = 0;
    int failures = 0;
    std::string first;  // description of the first failure

    bool check(bool ok, int c, const std::string& what) {
        if (!ok) {
            if (failures == 0) first = "case " + std::to_string(c) + ": " + what;
            ++failures;
        }
        return ok;
    }
};

inline std::string num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

inline Vector random_vector(Rng& rng, Eigen::Index d) {
    Vector v(d);
    const double scale = std::exp(3.0 * rng.normal());
    for (Eigen::Index i = 0; i < d; ++i) v(i) = scale * rng.normal();
    return v;
}

inline double random_p(Rng& rng) {
    const auto g = PGrid::standard().values();
    return rng.uniform() < 0.5 ? g[rng.index(g.size())] : 1.0 + 20.0 * rng.uniform();
}

// Triangle inequality, absolute homogeneity, and ||x||_p nonincreasing along
// the exponent grid.
inline Tally norm_axioms(int cases, std::uint64_t seed) {
    Tally t;
    Rng rng(seed);
    const auto grid = PGrid::standard().values();
    for (int c = 0; c < cases; ++c, ++t.cases) {
        const auto d = static_cast<Eigen::Index>(1 + rng.index(6));
        const Vector x = random_vector(rng, d), y = random_vector(rng, d);
        const double a = 10.0 * rng.normal();
        const double p = random_p(rng);
        const double nx = lp_norm(x, p), ny = lp_norm(y, p);
        t.check(lp_norm(x + y, p) <= (nx + ny) * (1.0 + 1e-12), c, "triangle at p = " + num(p));
        t.check(std::fabs(lp_norm(a * x, p) - std::fabs(a) * nx) <= 1e-12 * std::fabs(a) * nx, c, "homogeneity at p = " + num(p));
        t.check(nx >= 0.0 && lp_norm(Vector::Zero(d), p) == 0.0, c, "positivity");
        double prev = INFINITY;
        for (double q : grid) {
            const double n = lp_norm(x, q);
            t.check(n <= prev * (1.0 + 1e-12), c, "monotone in p at " + num(q));
            prev = n;
        }
    }
    return t;
}

// Depth lies in (0, 1], equals 1 exactly at the location and strictly
// decreases along every ray leaving it.
inline Tally depth_monotonicity(int cases, std::uint64_t seed) {
    Tally t;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c, ++t.cases) {
        const auto d = static_cast<Eigen::Index>(1 + rng.index(5));
        Matrix a(d, d);
        do {
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
        } while (std::fabs(a.determinant()) < 1e-3);
        const Vector b = random_vector(rng, d);
        const LpModel m(random_p(rng), b, a);
        t.check(depth(b, m).value() == 1.0, c, "depth at the location");
        const double dx = depth(random_vector(rng, d), m).value();
        t.check(dx > 0.0 && dx <= 1.0, c, "depth range " + num(dx));
        Vector u = random_vector(rng, d);
        u /= u.norm();
        const double t1 = std::exp(2.0 * rng.normal());
        const double t2 = t1 * (1.01 + rng.uniform());
        t.check(depth(b + t2 * u, m).value() < depth(b + t1 * u, m).value(), c, "ray monotonicity");
    }
    return t;
}

// Composite Simpson on [lo, hi] with about 16 nodes per bandwidth.
inline double kde_mass(const DepthKde& kde, double lo, double hi) {
    const double h = kde.bandwidth();
    const int m = 2 * static_cast<int>(std::ceil((hi - lo) / h * 8.0));
    const double step = (hi - lo) / m;
    double s = kde.eval(lo) + kde.eval(hi);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * kde.eval(lo + i * step);
    return s * step / 3.0;
}

// The Gaussian KDE integrates to 1 (1e-6) and keeps all but 1e-8 of its mass
// within 6 bandwidths of the sample range.
inline Tally kde_normalization(int cases, std::uint64_t seed) {
    Tally t;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c, ++t.cases) {
        std::vector<double> s(1 + rng.index(12));
        const double centre = rng.uniform();
        for (auto& v : s) v = centre + 0.1 * rng.normal();
        const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
        const double h = std::max(*mx - *mn, 1e-3) * std::exp(-2.0 * rng.uniform());
        const double lo = *mn, hi = *mx;
        const DepthKde kde(std::move(s), h);
        const double total = kde_mass(kde, lo - 10.0 * h, hi + 10.0 * h);
        t.check(std::fabs(total - 1.0) <= 1e-6, c, "total mass " + num(total));
        const double inner = kde_mass(kde, lo - 6.0 * h, hi + 6.0 * h);
        t.check(inner >= 1.0 - 1e-8, c, "mass within 6h " + num(inner));
    }
    return t;
}

// Every split partitions the rows, has the requested training size, and puts
// each class within one row of its proportional share into training.
inline Tally split_invariants(int cases, std::uint64_t seed) {
    Tally t;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c, ++t.cases) {
        const std::size_t classes = 2 + rng.index(4);
        Dataset ds;
        ds.name = "prop";
        std::vector<std::size_t> counts(classes);
        for (std::size_t j = 0; j < classes; ++j) {
            counts[j] = 1 + rng.index(40);
            ds.class_names.push_back(std::to_string(j));
            for (std::size_t i = 0; i < counts[j]; ++i) ds.labels.push_back(static_cast<int>(j));
        }
        rng.shuffle(ds.labels);
        const std::size_t n = ds.labels.size();
        ds.features = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
        SplitSpec spec;
        spec.reps = 1 + static_cast<int>(rng.index(3));
        spec.seed = rng.next();
        if (rng.uniform() < 0.5) {
            spec.train_size = 1 + rng.index(n - 1);
        } else {
            // keep the rounded size strictly inside (0, n)
            const double lo = 0.5 / static_cast<double>(n), hi = 1.0 - lo;
            spec.train_fraction = lo + (hi - lo) * (0.001 + 0.998 * rng.uniform());
        }
        const std::size_t total = spec.train_total(n);
        const auto splits = stratified_splits(ds, spec);
        t.check(splits.size() == static_cast<std::size_t>(spec.reps), c, "replication count");
        for (const auto& s : splits) {
            t.check(s.train.size() == total, c, "training size");
            std::vector<std::size_t> all = s.train;
            all.insert(all.end(), s.test.begin(), s.test.end());
            std::sort(all.begin(), all.end());
            bool partition = all.size() == n;
            for (std::size_t i = 0; partition && i < n; ++i) partition = all[i] == i;
            t.check(partition, c, "train/test partition");
            std::vector<std::size_t> per(classes, 0);
            for (auto i : s.train) ++per[static_cast<std::size_t>(ds.labels[i])];
            for (std::size_t j = 0; j < classes; ++j) {
                const double exact = static_cast<double>(counts[j] * total) / static_cast<double>(n);
                t.check(std::fabs(static_cast<double>(per[j]) - exact) <= 1.0, c, "stratum " + std::to_string(j));
            }
        }
    }
    return t;
}

}  // namespace props
