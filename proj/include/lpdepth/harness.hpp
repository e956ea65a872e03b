#pragma once

// Experiment orchestration: stratified splits, metrics, the simulation and
// benchmark replication loops, and report output.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "lpdepth/classify.hpp"
#include "lpdepth/csv.hpp"
#include "lpdepth/error.hpp"
#include "lpdepth/rng.hpp"
#include "lpdepth/serialize.hpp"
#include "lpdepth/stats.hpp"
#include "lpdepth/synth.hpp"

namespace lpdepth {

// ---------------------------------------------------------------------------
// Parallel loops. Results are written by index, so the outcome does not
// depend on scheduling.

inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LPDEPTH_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return n;
}

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = worker_count()) {
    std::vector<std::exception_ptr> errors(count);
    const auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) run(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// Splits.

struct SplitSpec {
    double train_fraction = 0.5;  // used when train_size == 0
    std::size_t train_size = 0;   // absolute training size; overrides the fraction
    int reps = 20;
    std::uint64_t seed = 1;

    std::size_t train_total(std::size_t n) const {
        if (reps < 1) throw ConfigError("split: reps must be >= 1");
        std::size_t t = train_size;
        if (t == 0) {
            if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split: train fraction must lie in (0, 1)");
            t = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
        }
        if (t == 0 || t >= n) throw ConfigError("split: training size must lie strictly between 0 and n");
        return t;
    }
};

struct Split {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
};

// Per-class training counts by largest remainder: floor(count_c T / n), then
// the leftover rows go to the classes with the largest fractional parts
// (smaller class index first on ties).
inline std::vector<std::size_t> stratified_counts(const std::vector<std::size_t>& counts, std::size_t total_train) {
    const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    std::vector<std::size_t> out(counts.size());
    std::vector<std::pair<double, std::size_t>> frac;
    std::size_t used = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double exact = static_cast<double>(counts[c]) * static_cast<double>(total_train) / static_cast<double>(n);
        out[c] = static_cast<std::size_t>(std::floor(exact));
        used += out[c];
        frac.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < total_train; ++k) {
        const std::size_t c = frac[k % frac.size()].second;
        if (out[c] < counts[c]) {
            ++out[c];
            ++used;
        }
    }
    return out;
}

inline std::vector<Split> stratified_splits(const Dataset& ds, const SplitSpec& spec) {
    const auto n = static_cast<std::size_t>(ds.rows());
    const std::size_t total = spec.train_total(n);
    const auto counts = ds.class_counts();
    const auto per_class = stratified_counts(counts, total);
    std::vector<std::vector<std::size_t>> members(counts.size());
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    std::vector<Split> out;
    for (int r = 0; r < spec.reps; ++r) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(r), 0x5b117ULL));
        Split s;
        for (std::size_t c = 0; c < members.size(); ++c) {
            auto idx = members[c];
            rng.shuffle(idx);
            s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(per_class[c]));
            s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(per_class[c]), idx.end());
        }
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.test.begin(), s.test.end());
        out.push_back(std::move(s));
    }
    return out;
}

// Feature rows of each class among `idx`, in index order.
inline std::vector<Matrix> class_matrices(const Dataset& ds, const std::vector<std::size_t>& idx) {
    std::vector<std::vector<std::size_t>> per(ds.num_classes());
    for (std::size_t i : idx) per[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    std::vector<Matrix> out;
    for (const auto& rows : per) {
        Matrix m(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = ds.features.row(static_cast<Eigen::Index>(rows[k]));
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics.

struct RateEstimate {
    double rate = 0.0;
    double se = 0.0;
};

inline double binomial_se(double rate, std::size_t n_test) {
    return std::sqrt(rate * (1.0 - rate) / static_cast<double>(n_test));
}

// Error fraction with the binomial standard error sqrt(rate (1 - rate) / n).
template <class T>
RateEstimate compute_metrics(const std::vector<T>& predictions, const std::vector<T>& truth) {
    if (predictions.size() != truth.size()) throw DimensionMismatch("compute_metrics: length mismatch");
    if (truth.empty()) throw InsufficientData("compute_metrics: no test points");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += predictions[i] != truth[i] ? 1 : 0;
    const double n = static_cast<double>(truth.size());
    const double rate = static_cast<double>(wrong) / n;
    return {rate, binomial_se(rate, truth.size())};
}

// Mean of per-replication rates with se = sd / sqrt(reps).
inline RateEstimate aggregate_reps(const std::vector<double>& rates) {
    if (rates.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    return {mean_of(rates), sd_of(rates) / std::sqrt(static_cast<double>(rates.size()))};
}

inline double regret_ratio(double rate_t, double rate_lp, double bayes) {
    if (!(rate_lp > bayes)) throw UndefinedRegret("regret ratio: the reference classifier does not exceed the Bayes risk");
    return (rate_t - bayes) / (rate_lp - bayes);
}

// e_t = min rate / rate_t. When the best rate is 0 the best classifiers get 1
// and every other one 0.
inline std::map<std::string, double> efficiency(const std::map<std::string, double>& rates) {
    if (rates.empty()) throw DomainError("efficiency: no classifiers");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [_, r] : rates) best = std::min(best, r);
    std::map<std::string, double> out;
    for (const auto& [name, r] : rates) {
        if (r == best) {
            out[name] = 1.0;
        } else {
            out[name] = best > 0.0 ? best / r : 0.0;
        }
    }
    return out;
}

struct PairedTest {
    double mean_diff = 0.0;  // mean of x - y
    double t = 0.0;
    double df = 0.0;
    double p_greater = 1.0;  // one-sided p-value for H1: mean(x - y) > 0
};

inline PairedTest paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionMismatch("paired_t_test: length mismatch");
    if (x.size() < 2) throw InsufficientData("paired_t_test: need at least two pairs");
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    PairedTest r;
    r.mean_diff = mean_of(d);
    r.df = static_cast<double>(d.size() - 1);
    const double se = sd_of(d) / std::sqrt(static_cast<double>(d.size()));
    if (se == 0.0) {
        r.t = r.mean_diff > 0.0 ? std::numeric_limits<double>::infinity()
                                : (r.mean_diff < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
        r.p_greater = r.mean_diff > 0.0 ? 0.0 : (r.mean_diff < 0.0 ? 1.0 : 0.5);
        return r;
    }
    r.t = r.mean_diff / se;
    const boost::math::students_t dist(r.df);
    r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
    return r;
}

// ---------------------------------------------------------------------------
// Reports.

struct EvalRow {
    std::string problem;
    std::string classifier;
    int reps = 0;         // replications that produced a rate
    int paper_reps = 0;   // the published protocol's count, for reference
    int skipped = 0;
    double mean_rate = 0.0;
    double se = 0.0;
    std::optional<double> bayes_risk;
    std::optional<double> bayes_se;
    std::optional<double> regret_ratio;
    bool regret_undefined = false;
    double efficiency = 0.0;
    std::vector<double> rates;  // per replication (not written)
};

struct EvalReport {
    std::string kind;  // "simulation" or "benchmark"
    std::uint64_t seed = 0;
    std::vector<EvalRow> rows;

    const EvalRow& row(const std::string& problem, const std::string& classifier) const {
        for (const auto& r : rows) {
            if (r.problem == problem && r.classifier == classifier) return r;
        }
        throw DomainError("report: no row for " + problem + "/" + classifier);
    }
};

inline std::string report_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Fills efficiency per problem from the mean rates.
inline void assign_efficiency(EvalReport& rep) {
    std::map<std::string, std::map<std::string, double>> by_problem;
    for (const auto& r : rep.rows) {
        if (r.reps > 0) by_problem[r.problem][r.classifier] = r.mean_rate;
    }
    for (auto& r : rep.rows) {
        const auto it = by_problem.find(r.problem);
        if (r.reps == 0 || it == by_problem.end()) continue;
        r.efficiency = efficiency(it->second).at(r.classifier);
    }
}

// Regret ratios against the classifier named `reference`, for rows with a
// Bayes risk attached.
inline void assign_regret(EvalReport& rep, const std::string& reference) {
    for (auto& r : rep.rows) {
        if (!r.bayes_risk || r.reps == 0) continue;
        const EvalRow* ref = nullptr;
        for (const auto& q : rep.rows) {
            if (q.problem == r.problem && q.classifier == reference) ref = &q;
        }
        if (ref == nullptr || ref->reps == 0) continue;
        try {
            r.regret_ratio = regret_ratio(r.mean_rate, ref->mean_rate, *r.bayes_risk);
        } catch (const UndefinedRegret&) {
            r.regret_undefined = true;
        }
    }
}

inline void write_report_csv(std::ostream& os, const EvalReport& rep) {
    os << "problem,classifier,reps,paper_reps,skipped,mean_rate,se,bayes_risk,bayes_se,regret_ratio,efficiency\n";
    for (const auto& r : rep.rows) {
        const auto opt = [](const std::optional<double>& v) { return v ? report_number(*v) : std::string(); };
        os << csv_field(r.problem) << ',' << csv_field(r.classifier) << ',' << r.reps << ',' << r.paper_reps << ','
           << r.skipped << ',' << (r.reps > 0 ? report_number(r.mean_rate) : "") << ','
           << (r.reps > 0 ? report_number(r.se) : "") << ',' << opt(r.bayes_risk) << ',' << opt(r.bayes_se) << ','
           << (r.regret_undefined ? std::string("undefined") : opt(r.regret_ratio)) << ','
           << (r.reps > 0 ? report_number(r.efficiency) : "") << '\n';
    }
}

inline void write_report_text(std::ostream& os, const EvalReport& rep) {
    char buf[256];
    os << rep.kind << " report, seed " << rep.seed << '\n';
    std::snprintf(buf, sizeof buf, "%-22s %-10s %5s %6s %5s %9s %9s %9s %8s %6s\n", "problem", "classifier", "reps",
                  "paper", "skip", "rate", "se", "bayes", "regret", "eff");
    os << buf;
    for (const auto& r : rep.rows) {
        const std::string bayes = r.bayes_risk ? report_number(*r.bayes_risk) : "-";
        const std::string regret = r.regret_undefined ? "undef" : (r.regret_ratio ? report_number(*r.regret_ratio) : "-");
        std::snprintf(buf, sizeof buf, "%-22s %-10s %5d %6d %5d %9.5f %9.5f %9.9s %8.8s %6.3f\n", r.problem.c_str(),
                      r.classifier.c_str(), r.reps, r.paper_reps, r.skipped, r.mean_rate, r.se, bayes.c_str(),
                      regret.c_str(), r.efficiency);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Pipelines.

struct Pipeline {
    std::string name;
    PGrid grid;
};

inline std::vector<Pipeline> default_pipelines(const PGrid& grid = PGrid::standard()) {
    return {{"LpD", grid}, {"MD", PGrid::euclidean()}};
}

// Fits one pipeline and returns predicted class indices for `test`.
inline std::vector<int> fit_and_predict(const std::vector<Matrix>& train, const std::vector<double>& priors, Rule rule,
                                        const FitOptions& opt, std::uint64_t seed, const Matrix& test) {
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < train.size(); ++j) labels.push_back(std::to_string(j));
    SavedModel model = rule == Rule::MaxDepth ? to_saved(fit_d1(train, labels, priors, seed, opt))
                                              : to_saved(fit_d2(train, labels, priors, seed, opt));
    std::vector<int> out(static_cast<std::size_t>(test.rows()));
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<int>(model.classify_index(test.row(i).transpose()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simulation experiments.

struct SimProblem {
    std::string name;
    TwoClassProblem problem;
    Rule rule = Rule::DensityRatio;
};

// Built-in two-class settings: location, scale and shape differences, with
// A2 = I/9 for the scale rows and exponential-power psi with sigma = 1.
inline std::vector<SimProblem> table1_problems() {
    const auto spec = [](double p, double shift, double a_scale) {
        LpSymmetricSpec s = standard_spec(p, 2);
        s.b = Vector::Constant(2, shift);
        s.a = a_scale * Matrix::Identity(2, 2);
        return s;
    };
    std::vector<SimProblem> out;
    for (double p : {1.0, 2.0, 8.0}) {
        const std::string tag = "p" + report_number(p);
        out.push_back({"location-" + tag, {spec(p, 0, 1), spec(p, 1, 1), 0.5}, Rule::MaxDepth});
    }
    for (double p : {1.0, 2.0, 8.0}) {
        const std::string tag = "p" + report_number(p);
        out.push_back({"scale-" + tag, {spec(p, 0, 1), spec(p, 0, 1.0 / 9.0), 0.5}, Rule::DensityRatio});
    }
    const std::pair<double, double> shapes[] = {{1, 2}, {2, 4}, {8, 1}};
    for (const auto& [p1, p2] : shapes) {
        out.push_back({"shape-p" + report_number(p1) + "-p" + report_number(p2), {spec(p1, 0, 1), spec(p2, 0, 1), 0.5},
                       Rule::DensityRatio});
    }
    return out;
}

inline SimProblem find_problem(const std::string& name) {
    for (auto& p : table1_problems()) {
        if (p.name == name) return p;
    }
    throw ConfigError("unknown problem '" + name + "'");
}

struct SimConfig {
    std::vector<SimProblem> problems = table1_problems();
    int train_per_class = 200;
    int test_per_class = 500;
    int reps = 20;
    int paper_reps = 200;
    long n_mc = 1000000;
    std::uint64_t seed = 1;
    FitOptions fit{};  // grid is the LpD grid; MD always uses {2}
};

// Purpose tags for derived seeds.
inline constexpr std::uint64_t kSeedTrain = 1;
inline constexpr std::uint64_t kSeedTest = 2;
inline constexpr std::uint64_t kSeedFit = 3;
inline constexpr std::uint64_t kSeedBayes = 4;

inline Matrix stack_rows(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

struct SimResult {
    EvalReport report;
    std::map<std::string, PairedTest> md_vs_lpd;  // per problem, on per-replication regrets (MD - LpD)
};

inline SimResult run_table1_experiment(const SimConfig& cfg) {
    if (cfg.reps < 1 || cfg.train_per_class < 1 || cfg.test_per_class < 1) throw ConfigError("simulate: sizes must be positive");
    SimResult res;
    res.report.kind = "simulation";
    res.report.seed = cfg.seed;
    const auto pipes = default_pipelines(cfg.fit.grid);
    for (std::size_t pi = 0; pi < cfg.problems.size(); ++pi) {
        const SimProblem& prob = cfg.problems[pi];
        prob.problem.validate();
        const std::uint64_t pseed = derive_seed(cfg.seed, pi);
        Rng bayes_rng(derive_seed(pseed, 0, kSeedBayes));
        const RiskEstimate bayes = bayes_risk_mc(prob.problem, cfg.n_mc, bayes_rng);
        const std::vector<double> priors = {prob.problem.prior_first, 1.0 - prob.problem.prior_first};

        // rates[rep][pipeline]; NaN marks a failed fit.
        std::vector<std::vector<double>> rates(static_cast<std::size_t>(cfg.reps),
                                               std::vector<double>(pipes.size(), std::numeric_limits<double>::quiet_NaN()));
        parallel_for(static_cast<std::size_t>(cfg.reps), [&](std::size_t r) {
            Rng train_rng(derive_seed(pseed, r, kSeedTrain));
            Rng test_rng(derive_seed(pseed, r, kSeedTest));
            const std::vector<Matrix> train = {sample_lp(prob.problem.first, cfg.train_per_class, train_rng),
                                               sample_lp(prob.problem.second, cfg.train_per_class, train_rng)};
            const Matrix t1 = sample_lp(prob.problem.first, cfg.test_per_class, test_rng);
            const Matrix t2 = sample_lp(prob.problem.second, cfg.test_per_class, test_rng);
            const Matrix test = stack_rows(t1, t2);
            std::vector<int> truth(static_cast<std::size_t>(test.rows()), 1);
            std::fill(truth.begin(), truth.begin() + t1.rows(), 0);
            for (std::size_t k = 0; k < pipes.size(); ++k) {
                FitOptions opt = cfg.fit;
                opt.grid = pipes[k].grid;
                try {
                    const auto pred = fit_and_predict(train, priors, prob.rule, opt, derive_seed(pseed, r, kSeedFit), test);
                    rates[r][k] = compute_metrics(pred, truth).rate;
                } catch (const Error&) {
                    // counted as skipped below
                }
            }
        });
        std::vector<std::vector<double>> kept(pipes.size());
        int skipped = 0;
        for (const auto& row : rates) {
            if (std::any_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) {
                ++skipped;
                continue;
            }
            for (std::size_t k = 0; k < pipes.size(); ++k) kept[k].push_back(row[k]);
        }
        for (std::size_t k = 0; k < pipes.size(); ++k) {
            EvalRow row;
            row.problem = prob.name;
            row.classifier = pipes[k].name;
            row.reps = static_cast<int>(kept[k].size());
            row.paper_reps = cfg.paper_reps;
            row.skipped = skipped;
            const auto agg = aggregate_reps(kept[k]);
            row.mean_rate = agg.rate;
            row.se = agg.se;
            row.bayes_risk = bayes.risk;
            row.bayes_se = bayes.se;
            row.rates = kept[k];
            res.report.rows.push_back(std::move(row));
        }
        if (kept[0].size() >= 2) res.md_vs_lpd[prob.name] = paired_t_test(kept[1], kept[0]);
    }
    assign_regret(res.report, pipes.front().name);
    assign_efficiency(res.report);
    return res;
}

// ---------------------------------------------------------------------------
// Benchmarks on real data.

enum class PriorMode { Sample, Equal };

struct BenchmarkConfig {
    SplitSpec split{};
    int paper_reps = 500;
    Rule rule = Rule::DensityRatio;
    PriorMode priors = PriorMode::Sample;
    FitOptions fit{};
    std::vector<Pipeline> pipelines = default_pipelines();
};

namespace detail {

inline std::vector<double> priors_for(const std::vector<Matrix>& train, PriorMode mode) {
    return mode == PriorMode::Sample ? sample_priors(train) : equal_priors(train.size());
}

inline bool trainable(const std::vector<Matrix>& train) {
    for (const auto& m : train) {
        if (m.rows() < m.cols() + 2) return false;
    }
    return true;
}

}  // namespace detail

// Repeated stratified splits; se = sd of per-split rates / sqrt(reps).
inline EvalReport run_benchmark(const Dataset& ds, const BenchmarkConfig& cfg) {
    EvalReport rep;
    rep.kind = "benchmark";
    rep.seed = cfg.split.seed;
    const auto splits = stratified_splits(ds, cfg.split);
    const auto& pipes = cfg.pipelines;
    std::vector<std::vector<double>> rates(splits.size(), std::vector<double>(pipes.size(), std::numeric_limits<double>::quiet_NaN()));
    parallel_for(splits.size(), [&](std::size_t r) {
        const auto train = class_matrices(ds, splits[r].train);
        if (!detail::trainable(train)) return;
        Matrix test(static_cast<Eigen::Index>(splits[r].test.size()), ds.features.cols());
        std::vector<int> truth;
        for (std::size_t k = 0; k < splits[r].test.size(); ++k) {
            test.row(static_cast<Eigen::Index>(k)) = ds.features.row(static_cast<Eigen::Index>(splits[r].test[k]));
            truth.push_back(ds.labels[splits[r].test[k]]);
        }
        const auto priors = detail::priors_for(train, cfg.priors);
        for (std::size_t k = 0; k < pipes.size(); ++k) {
            FitOptions opt = cfg.fit;
            opt.grid = pipes[k].grid;
            try {
                const auto pred = fit_and_predict(train, priors, cfg.rule, opt, derive_seed(cfg.split.seed, r, kSeedFit), test);
                rates[r][k] = compute_metrics(pred, truth).rate;
            } catch (const Error&) {
            }
        }
    });
    for (std::size_t k = 0; k < pipes.size(); ++k) {
        EvalRow row;
        row.problem = ds.name;
        row.classifier = pipes[k].name;
        row.paper_reps = cfg.paper_reps;
        for (const auto& r : rates) {
            if (std::isnan(r[k])) {
                ++row.skipped;
            } else {
                row.rates.push_back(r[k]);
            }
        }
        row.reps = static_cast<int>(row.rates.size());
        const auto agg = aggregate_reps(row.rates);
        row.mean_rate = agg.rate;
        row.se = agg.se;
        rep.rows.push_back(std::move(row));
    }
    assign_efficiency(rep);
    return rep;
}

// Fixed train/test protocol: one fit per pipeline; binomial se on the test set.
inline EvalReport run_benchmark_fixed(const Dataset& train_ds, const Dataset& test_ds, const BenchmarkConfig& cfg) {
    if (train_ds.class_names != test_ds.class_names) throw DomainError("benchmark: train and test class sets differ");
    if (train_ds.dim() != test_ds.dim()) throw DimensionMismatch("benchmark: train and test dimensions differ");
    EvalReport rep;
    rep.kind = "benchmark";
    rep.seed = cfg.split.seed;
    std::vector<std::size_t> all(static_cast<std::size_t>(train_ds.rows()));
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto train = class_matrices(train_ds, all);
    const auto priors = detail::priors_for(train, cfg.priors);
    for (const auto& pipe : cfg.pipelines) {
        EvalRow row;
        row.problem = train_ds.name;
        row.classifier = pipe.name;
        row.paper_reps = 1;
        FitOptions opt = cfg.fit;
        opt.grid = pipe.grid;
        try {
            if (!detail::trainable(train)) throw InsufficientData("benchmark: a class has fewer than d + 2 rows");
            const auto pred = fit_and_predict(train, priors, cfg.rule, opt, derive_seed(cfg.split.seed, 0, kSeedFit), test_ds.features);
            const auto m = compute_metrics(pred, test_ds.labels);
            row.reps = 1;
            row.mean_rate = m.rate;
            row.se = m.se;
            row.rates = {m.rate};
        } catch (const Error&) {
            row.skipped = 1;
        }
        rep.rows.push_back(std::move(row));
    }
    assign_efficiency(rep);
    return rep;
}

}  // namespace lpdepth
