#include <gtest/gtest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lpdepth/config.hpp"
#include "lpdepth/csv.hpp"
#include "lpdepth/harness.hpp"

using namespace lpdepth;

namespace {

Dataset from_text(const std::string& text, const std::string& label = "y", std::vector<std::string> drop = {}) {
    return dataset_from_records(parse_csv(text), IngestOptions{label, std::move(drop)}, "inline");
}

// Two Gaussian blobs, `n` rows in total, label column "y".
Dataset blobs(std::uint64_t seed, std::size_t n, double shift, double frac_first = 0.5) {
    Rng rng(seed);
    std::ostringstream os;
    os << "x1,x2,y\n";
    const auto n1 = static_cast<std::size_t>(std::llround(frac_first * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        const bool first = i < n1;
        const double m = first ? 0.0 : shift;
        os << format_double(m + rng.normal()) << ',' << format_double(0.7 * m + rng.normal()) << ',' << (first ? "a" : "b") << '\n';
    }
    return from_text(os.str());
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / ("lpdepth_test_" + name);
    std::ofstream(p) << body;
    return p;
}

}  // namespace

// --- csv ---------------------------------------------------------------------------------

TEST(Csv, QuotedFields) {
    const auto r = parse_csv("a,\"b,c\",\"say \"\"hi\"\"\"\r\n1,\"line\nbreak\",3\n");
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0][1], "b,c");
    EXPECT_EQ(r[0][2], "say \"hi\"");
    EXPECT_EQ(r[1][1], "line\nbreak");
    EXPECT_THROW(parse_csv("a,\"open\n"), ParseError);
    EXPECT_THROW(parse_csv("a,\"x\"y\n"), ParseError);
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("q\""), "\"q\"\"\"");
    EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(Ingest, ThreeRowExample) {
    const auto ds = from_text("x,y\n1.5,a\n2,a\n-3e1,b\n");
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ds.class_counts(), (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(ds.dim(), 1);
    EXPECT_EQ(ds.features(2, 0), -30.0);
}

TEST(Ingest, MissingCellNamesRowAndColumn) {
    try {
        from_text("x1,x2,y\n1,2,a\n3,,b\n");
        FAIL();
    } catch (const ParseError& e) {
        const std::string m = e.what();
        EXPECT_NE(m.find("row 2"), std::string::npos) << m;
        EXPECT_NE(m.find("'x2'"), std::string::npos) << m;
    }
}

TEST(Ingest, Errors) {
    EXPECT_THROW(from_text("x,x,y\n1,2,a\n3,4,b\n"), ParseError);
    EXPECT_THROW(from_text("x,y\n1,a\nfoo,b\n"), ParseError);
    EXPECT_THROW(from_text("x,y\n1,a\n2,a\n"), InsufficientData);
    try {
        from_text("x,z\n1,a\n2,b\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos);
    }
    EXPECT_THROW(from_text("x,y\n1,a\n2,b\n", "y", {"nope"}), ConfigError);
}

TEST(Ingest, DropColumnsAndNumericLabels) {
    const auto ds = from_text("id,x,y\n1,0.5,10\n2,0.7,9\n3,0.1,10\n", "y", {"id"});
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"x"}));
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"9", "10"}));
    EXPECT_EQ(ds.labels, (std::vector<int>{1, 0, 1}));
}

// --- splits ----------------------------------------------------------------------------------

TEST(Splits, ExactProportions) {
    EXPECT_EQ(stratified_counts({60, 40}, 50), (std::vector<std::size_t>{30, 20}));
}

TEST(Splits, HemophiliaProtocol) {
    const auto c = stratified_counts({30, 45}, 50);
    EXPECT_EQ(c[0] + c[1], 50u);
    EXPECT_LE(std::fabs(static_cast<double>(c[0]) - 30.0 * 50 / 75), 1.0);
    EXPECT_LE(std::fabs(static_cast<double>(c[1]) - 45.0 * 50 / 75), 1.0);
}

TEST(Splits, PartitionAndDeterminism) {
    const auto ds = blobs(1, 75, 2.0, 0.4);
    SplitSpec spec;
    spec.train_size = 50;
    spec.reps = 3;
    spec.seed = 4;
    const auto s1 = stratified_splits(ds, spec);
    const auto s2 = stratified_splits(ds, spec);
    spec.seed = 5;
    const auto s3 = stratified_splits(ds, spec);
    for (int r = 0; r < 3; ++r) {
        EXPECT_EQ(s1[r].train, s2[r].train);
        EXPECT_EQ(s1[r].train.size(), 50u);
        std::vector<std::size_t> all = s1[r].train;
        all.insert(all.end(), s1[r].test.begin(), s1[r].test.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    }
    EXPECT_NE(s1[0].train, s3[0].train);
    EXPECT_NE(s1[0].train, s1[1].train);
}

TEST(Splits, BadSpecs) {
    const auto ds = blobs(1, 20, 2.0);
    SplitSpec spec;
    spec.train_fraction = 1.0;
    EXPECT_THROW(stratified_splits(ds, spec), ConfigError);
    spec = SplitSpec{};
    spec.train_size = 20;
    EXPECT_THROW(stratified_splits(ds, spec), ConfigError);
    spec = SplitSpec{};
    spec.reps = 0;
    EXPECT_THROW(stratified_splits(ds, spec), ConfigError);
}

// --- metrics ---------------------------------------------------------------------------------

TEST(Metrics, StandardError) {
    EXPECT_NEAR(binomial_se(0.1, 1000), 0.0094868, 1e-7);
    const std::vector<int> truth{0, 1, 1, 0};
    const auto perfect = compute_metrics(truth, truth);
    EXPECT_EQ(perfect.rate, 0.0);
    EXPECT_EQ(perfect.se, 0.0);
    const auto wrong = compute_metrics(std::vector<int>{1, 0, 0, 1}, truth);
    EXPECT_EQ(wrong.rate, 1.0);
    EXPECT_EQ(wrong.se, 0.0);
    const auto agg = aggregate_reps({0.1, 0.2, 0.3});
    EXPECT_NEAR(agg.rate, 0.2, 1e-15);
    EXPECT_NEAR(agg.se, 0.1 / std::sqrt(3.0), 1e-15);
}

TEST(Metrics, RegretRatio) {
    EXPECT_DOUBLE_EQ(regret_ratio(0.2, 0.2, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(regret_ratio(0.1, 0.2, 0.1), 0.0);
    EXPECT_NEAR(regret_ratio(0.125, 0.12, 0.10), 1.25, 1e-12);
    EXPECT_THROW(regret_ratio(0.2, 0.1, 0.1), UndefinedRegret);
}

TEST(Metrics, Efficiency) {
    auto e = efficiency({{"a", 0.1}, {"b", 0.2}});
    EXPECT_EQ(e["a"], 1.0);
    EXPECT_DOUBLE_EQ(e["b"], 0.5);
    e = efficiency({{"a", 0.3}, {"b", 0.3}});
    EXPECT_EQ(e["a"], 1.0);
    EXPECT_EQ(e["b"], 1.0);
    e = efficiency({{"a", 0.0463}, {"b", 0.0492}});
    EXPECT_EQ(e["a"], 1.0);
    EXPECT_NEAR(e["b"], 0.941, 0.001);
    e = efficiency({{"a", 0.0}, {"b", 0.1}});
    EXPECT_EQ(e["b"], 0.0);
}

TEST(Metrics, PairedTTest) {
    // Differences {1, 2, 3}: t = 2 sqrt(3), df = 2, P(T > t) = 1/2 - t / (2 sqrt(t^2 + 2)).
    const auto r = paired_t_test({2, 4, 6}, {1, 2, 3});
    const double t = 2.0 * std::sqrt(3.0);
    EXPECT_NEAR(r.t, t, 1e-12);
    EXPECT_EQ(r.df, 2.0);
    EXPECT_NEAR(r.p_greater, 0.5 - t / (2.0 * std::sqrt(t * t + 2.0)), 1e-10);
    EXPECT_THROW(paired_t_test({1}, {2}), InsufficientData);
}

// --- reports ---------------------------------------------------------------------------------

TEST(Report, RegretAbsentWithoutBayesAndUndefinedWhenReferenceIsOptimal) {
    EvalReport rep;
    rep.rows.push_back({"p", "LpD", 3, 200, 0, 0.10, 0.01, 0.10, 0.001});
    rep.rows.push_back({"p", "MD", 3, 200, 0, 0.12, 0.01, 0.10, 0.001});
    rep.rows.push_back({"q", "LpD", 3, 500, 0, 0.20, 0.01});
    rep.rows.push_back({"q", "MD", 3, 500, 0, 0.25, 0.01});
    assign_regret(rep, "LpD");
    assign_efficiency(rep);
    std::ostringstream os;
    write_report_csv(os, rep);
    const std::string csv = os.str();
    EXPECT_NE(csv.find("p,LpD,3,200,0,0.1,0.01,0.1,0.001,undefined,1\n"), std::string::npos) << csv;
    EXPECT_NE(csv.find("q,LpD,3,500,0,0.2,0.01,,,,1\n"), std::string::npos) << csv;
    EXPECT_NE(csv.find("q,MD,3,500,0,0.25,0.01,,,,0.8\n"), std::string::npos) << csv;
}

// --- parallel loop ----------------------------------------------------------------------------

TEST(ParallelFor, IndexedResultsAndErrors) {
    std::vector<int> out(100, 0);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i); }, 4);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
    EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw DegenerateData("x"); }, 3), DegenerateData);
}

// --- benchmark runs ----------------------------------------------------------------------------

TEST(Benchmark, SeparatedBlobs) {
    const auto ds = blobs(3, 400, 6.0);
    BenchmarkConfig cfg;
    cfg.split.reps = 20;
    const auto rep = run_benchmark(ds, cfg);
    const auto& lpd = rep.row("inline", "LpD");
    EXPECT_EQ(lpd.reps, 20);
    EXPECT_LT(lpd.mean_rate, 0.05);
    bool any_one = false;
    for (const auto& r : rep.rows) any_one |= r.efficiency == 1.0;
    EXPECT_TRUE(any_one);
    std::ostringstream a, b;
    write_report_csv(a, rep);
    write_report_csv(b, run_benchmark(ds, cfg));
    EXPECT_EQ(a.str(), b.str());
}

// With labels independent of x and balanced test classes, each test error is an
// independent Bernoulli(q) or Bernoulli(1 - q), so the mean error rate over
// N test points has mean 1/2 and sd at most 1 / (2 sqrt(N)).
static double chance_sd(std::size_t n_test_total) { return 0.5 / std::sqrt(static_cast<double>(n_test_total)); }

TEST(Benchmark, PermutedLabelsCannotBeatChance) {
    // Resplitting one fixed data set anticorrelates training and test label
    // counts, so chance level is 1/2 or worse; doing better would mean labels
    // leak from test into training.
    auto ds = blobs(4, 400, 6.0);
    Rng rng(8);
    rng.shuffle(ds.labels);
    BenchmarkConfig cfg;
    cfg.split.reps = 20;
    const auto& row = run_benchmark(ds, cfg).row("inline", "LpD");
    EXPECT_GT(row.mean_rate, 0.5 - 4.0 * chance_sd(20 * 200)) << row.mean_rate;
}

TEST(Benchmark, RandomLabelsOnFreshTestDataScoreOneHalf) {
    auto train = blobs(4, 400, 6.0);
    Rng rng(8);
    rng.shuffle(train.labels);
    auto test = blobs(9, 2000, 6.0);
    rng.shuffle(test.labels);  // balanced, independent of x
    BenchmarkConfig cfg;
    const auto& row = run_benchmark_fixed(train, test, cfg).row("inline", "LpD");
    EXPECT_LT(std::fabs(row.mean_rate - 0.5), 4.0 * chance_sd(2000)) << row.mean_rate;
}

TEST(Benchmark, FixedTestSetUsesBinomialSe) {
    const auto train = blobs(5, 120, 4.0);
    const auto test = blobs(6, 200, 4.0);
    BenchmarkConfig cfg;
    const auto rep = run_benchmark_fixed(train, test, cfg);
    const auto& r = rep.row("inline", "LpD");
    EXPECT_EQ(r.reps, 1);
    EXPECT_NEAR(r.se, binomial_se(r.mean_rate, 200), 1e-15);
}

TEST(Benchmark, TooSmallClassesAreSkippedNotDropped) {
    const auto ds = from_text("x1,x2,y\n0,0,a\n1,0,a\n0,1,a\n1,1,a\n2,2,b\n3,1,b\n1,3,b\n0.5,0.2,a\n2.5,2.5,b\n0.2,0.9,a\n");
    BenchmarkConfig cfg;
    cfg.split.reps = 3;
    const auto rep = run_benchmark(ds, cfg);
    EXPECT_EQ(rep.row("inline", "LpD").skipped, 3);
    EXPECT_EQ(rep.row("inline", "LpD").reps, 0);
}

// --- simulation --------------------------------------------------------------------------------

TEST(Simulation, DegenerateProblemIsAFairCoin) {
    SimConfig cfg;
    cfg.problems = {{"same", {standard_spec(2.0, 2), standard_spec(2.0, 2), 0.5}, Rule::DensityRatio}};
    cfg.reps = 6;
    cfg.train_per_class = 100;
    cfg.test_per_class = 200;
    cfg.n_mc = 20000;
    const auto res = run_table1_experiment(cfg);
    // Identical classes: every rule is a fair coin on balanced test sets.
    for (const auto& r : res.report.rows) {
        EXPECT_EQ(r.reps, 6);
        EXPECT_LT(std::fabs(r.mean_rate - 0.5), 4.0 * chance_sd(6 * 400)) << r.classifier;
    }
}

TEST(Simulation, BuiltInProblems) {
    const auto all = table1_problems();
    EXPECT_EQ(all.size(), 9u);
    const auto loc = find_problem("location-p1");
    EXPECT_EQ(loc.rule, Rule::MaxDepth);
    EXPECT_EQ(loc.problem.second.b(1), 1.0);
    const auto sc = find_problem("scale-p2");
    EXPECT_NEAR(sc.problem.second.a(0, 0), 1.0 / 9.0, 1e-15);
    EXPECT_THROW(find_problem("nope"), ConfigError);
}

// --- config ------------------------------------------------------------------------------------

TEST(Config, ValueParsers) {
    EXPECT_EQ(parse_grid("2").values(), std::vector<double>{2.0});
    EXPECT_EQ(parse_grid("1, 2,4").size(), 3u);
    EXPECT_EQ(parse_grid("standard").size(), 10u);
    EXPECT_THROW(parse_grid("1,x"), ConfigError);
    EXPECT_THROW(parse_trim("0.5,0.1"), ConfigError);
    EXPECT_NEAR(parse_angle("135deg"), 3.0 * std::numbers::pi / 4.0, 1e-15);
    EXPECT_NEAR(parse_angle("0.5rad"), 0.5, 1e-15);
    EXPECT_THROW(parse_priors("uniform"), ConfigError);
    EXPECT_EQ(parse_rule("d1"), Rule::MaxDepth);
    EXPECT_EQ(parse_seed("18446744073709551615"), 18446744073709551615ULL);
    EXPECT_THROW(parse_seed("-1"), ConfigError);
}

TEST(Config, SimulationIni) {
    const auto p = temp_file("sim.ini",
                             "[simulate]\nseed = 9\nreps = 3\nproblems = location-p2\n"
                             "[problem:custom]\nrule = max-depth\np1 = 1\nb1 = 0,0\np2 = 4\nb2 = 1,1\na2 = 2,0,0,2\nprior1 = 0.3\n");
    const auto cfg = load_sim_config(p.string());
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.reps, 3);
    ASSERT_EQ(cfg.problems.size(), 2u);
    EXPECT_EQ(cfg.problems[1].name, "custom");
    EXPECT_EQ(cfg.problems[1].rule, Rule::MaxDepth);
    EXPECT_EQ(cfg.problems[1].problem.second.a(1, 1), 2.0);
    EXPECT_EQ(cfg.problems[1].problem.prior_first, 0.3);
    const auto bad = temp_file("bad.ini", "[simulate]\nreps = 2.5\n");
    EXPECT_THROW(load_sim_config(bad.string()), ConfigError);
}

TEST(Config, BenchmarkIni) {
    const auto p = temp_file("bench.ini", "[benchmark]\ndata = d.csv\nlabel = cls\ndrop_cols = a, b\ntrain_size = 50\npriors = equal\nrule = d1\n");
    const auto s = load_benchmark_config(p.string());
    EXPECT_EQ(s.data, "d.csv");
    EXPECT_EQ(s.drop_cols, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(s.cfg.split.train_size, 50u);
    EXPECT_EQ(s.cfg.priors, PriorMode::Equal);
    EXPECT_EQ(s.cfg.rule, Rule::MaxDepth);
    EXPECT_THROW(load_benchmark_config(temp_file("empty.ini", "[other]\n").string()), ConfigError);
}
