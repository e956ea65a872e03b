// lpdepth: command-line front end (fit, classify, simulate, benchmark, contour).

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lpdepth/lpdepth.hpp"

namespace {

using namespace lpdepth;

// Writes to a file, or to stdout when the path is empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ConfigError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

struct CommonFlags {
    std::string grid = "standard";
    std::string trim = "0.02,0.98";
    std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--grid", f.grid, "exponent grid: comma list, 'standard' or 'euclidean'")->capture_default_str();
    cmd->add_option("--trim", f.trim, "trim quantile levels lo,hi")->capture_default_str();
    cmd->add_option("--seed", f.seed, "base random seed")->capture_default_str();
}

FitOptions fit_options(const CommonFlags& f) {
    FitOptions o;
    o.grid = parse_grid(f.grid);
    o.trim = parse_trim(f.trim);
    return o;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    CommonFlags common;
    std::string train;
    std::string label;
    std::string drop_cols;
    std::string priors = "sample";
    std::string out;
    bool max_depth = false;
};

int cmd_fit(const FitArgs& a) {
    const FitOptions opt = fit_options(a.common);
    const PriorMode pm = parse_priors(a.priors);
    const Dataset ds = ingest_csv(a.train, a.label, split_list(a.drop_cols));
    std::vector<std::size_t> all(static_cast<std::size_t>(ds.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto train = class_matrices(ds, all);
    const auto priors = pm == PriorMode::Sample ? sample_priors(train) : equal_priors(train.size());

    SavedModel model;
    std::vector<PEstimate> estimates;
    if (a.max_depth) {
        auto c = fit_d1(train, ds.class_names, priors, a.common.seed, opt);
        estimates.assign(c.classes.size(), c.estimate);
        model = to_saved(c);
    } else {
        auto f = fit_d2_detailed(train, ds.class_names, priors, a.common.seed, opt);
        estimates = f.estimates;
        model = to_saved(f.classifier);
    }
    model.features = ds.feature_names;
    save_model(a.out, model);

    std::cout << "rule " << rule_name(model.rule) << ", d = " << model.dim() << ", classes = " << model.classes.size() << '\n';
    std::cout << "class,n,prior,p_hat,tr_ratio,bandwidth\n";
    for (const auto& c : model.classes) {
        std::cout << csv_field(c.label) << ',' << c.n << ',' << report_number(c.prior) << ',' << report_number(c.model.p()) << ','
                  << report_number(c.tr_ratio) << ',' << report_number(c.kde.bandwidth()) << '\n';
    }
    for (const auto& t : model.thresholds) {
        std::cout << "k(" << model.classes[t.i].label << "," << model.classes[t.j].label << ") = " << report_number(t.k())
                  << "  cv_error = " << report_number(t.cv_error) << '\n';
    }
    std::cout << "model written to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
    std::string model;
    std::string data;
    std::string label;
    std::string drop_cols;
    std::string out;
};

int cmd_classify(const ClassifyArgs& a) {
    const SavedModel model = load_model(a.model);
    const auto records = parse_csv(read_text_file(a.data));
    if (records.empty()) throw ParseError("csv: no header row");
    IngestOptions io;
    io.require_label = false;
    io.label_column = a.label;
    io.drop_columns = split_list(a.drop_cols);
    if (!model.features.empty()) {
        // Keep exactly the model's feature columns.
        std::vector<std::string> header;
        for (const auto& h : records.front()) header.push_back(trim_ws(h));
        for (const auto& f : model.features) {
            if (std::find(header.begin(), header.end(), f) == header.end()) {
                throw DimensionMismatch("classify: data lacks feature column '" + f + "'");
            }
        }
        io.drop_columns.clear();
        for (const auto& h : header) {
            if (h != a.label && std::find(model.features.begin(), model.features.end(), h) == model.features.end()) {
                io.drop_columns.push_back(h);
            }
        }
    }
    const Dataset ds = dataset_from_records(records, io, a.data);
    if (ds.dim() != model.dim()) {
        throw DimensionMismatch("classify: data has " + std::to_string(ds.dim()) + " feature columns, model expects " +
                                std::to_string(model.dim()));
    }
    Output out(a.out);
    auto& os = out.stream();
    const auto& header = records.front();
    for (std::size_t j = 0; j < header.size(); ++j) os << csv_field(header[j]) << ',';
    os << "predicted\n";
    Eigen::Index row = 0;
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() == 1 && trim_ws(records[r][0]).empty()) continue;
        for (const auto& f : records[r]) os << csv_field(f) << ',';
        os << csv_field(model.classify(ds.features.row(row).transpose())) << '\n';
        ++row;
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    CommonFlags common;
    std::string config;
    std::string problems;
    int reps = 20;
    int paper_reps = 200;
    long n_mc = 1000000;
    int train_per_class = 200;
    int test_per_class = 500;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, const CLI::App& cmd) {
    SimConfig cfg = a.config.empty() ? SimConfig{} : load_sim_config(a.config);
    const auto given = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
    if (a.config.empty() || given("--seed")) cfg.seed = a.common.seed;
    if (a.config.empty() || given("--reps")) cfg.reps = a.reps;
    if (a.config.empty() || given("--paper-reps")) cfg.paper_reps = a.paper_reps;
    if (a.config.empty() || given("--n-mc")) cfg.n_mc = a.n_mc;
    if (a.config.empty() || given("--train-per-class")) cfg.train_per_class = a.train_per_class;
    if (a.config.empty() || given("--test-per-class")) cfg.test_per_class = a.test_per_class;
    if (a.config.empty() || given("--grid")) cfg.fit.grid = parse_grid(a.common.grid);
    if (a.config.empty() || given("--trim")) cfg.fit.trim = parse_trim(a.common.trim);
    if (!a.problems.empty()) {
        cfg.problems.clear();
        if (a.problems == "all") {
            cfg.problems = table1_problems();
        } else {
            for (const auto& n : split_list(a.problems)) cfg.problems.push_back(find_problem(n));
        }
    }
    const SimResult res = run_table1_experiment(cfg);
    if (!a.out.empty()) {
        Output out(a.out);
        write_report_csv(out.stream(), res.report);
    }
    write_report_text(std::cout, res.report);
    for (const auto& [name, t] : res.md_vs_lpd) {
        std::cout << name << ": paired t (MD - LpD) = " << report_number(t.t) << ", one-sided p = " << report_number(t.p_greater)
                  << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct BenchmarkArgs {
    CommonFlags common;
    std::string config;
    std::string data;
    std::string label;
    std::string drop_cols;
    std::string test;
    double train_fraction = 0.5;
    std::size_t train_size = 0;
    int reps = 20;
    int paper_reps = 500;
    std::string priors = "sample";
    bool max_depth = false;
    std::string out;
};

int cmd_benchmark(const BenchmarkArgs& a, const CLI::App& cmd) {
    BenchmarkSetup s;
    if (!a.config.empty()) s = load_benchmark_config(a.config);
    const auto given = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
    const bool fresh = a.config.empty();
    if (fresh || given("--data")) s.data = a.data;
    if (fresh || given("--label")) s.label = a.label;
    if (fresh || given("--drop-cols")) s.drop_cols = split_list(a.drop_cols);
    if (fresh || given("--test")) s.test = a.test;
    auto& c = s.cfg;
    if (fresh || given("--train-fraction")) c.split.train_fraction = a.train_fraction;
    if (fresh || given("--train-size")) c.split.train_size = a.train_size;
    if (fresh || given("--reps")) c.split.reps = a.reps;
    if (fresh || given("--paper-reps")) c.paper_reps = a.paper_reps;
    if (fresh || given("--seed")) c.split.seed = a.common.seed;
    if (fresh || given("--priors")) c.priors = parse_priors(a.priors);
    if (fresh || given("--max-depth")) c.rule = a.max_depth ? Rule::MaxDepth : Rule::DensityRatio;
    if (fresh || given("--grid")) c.fit.grid = parse_grid(a.common.grid);
    if (fresh || given("--trim")) c.fit.trim = parse_trim(a.common.trim);
    c.pipelines = default_pipelines(c.fit.grid);
    if (s.data.empty()) throw ConfigError("benchmark: --data is required");
    if (s.label.empty()) throw ConfigError("benchmark: --label is required");

    const Dataset ds = ingest_csv(s.data, s.label, s.drop_cols);
    EvalReport rep;
    if (s.test.empty()) {
        rep = run_benchmark(ds, c);
    } else {
        const Dataset test = ingest_csv(s.test, s.label, s.drop_cols);
        rep = run_benchmark_fixed(ds, test, c);
    }
    if (!a.out.empty()) {
        Output out(a.out);
        write_report_csv(out.stream(), rep);
    }
    write_report_text(std::cout, rep);
    return 0;
}

// ---------------------------------------------------------------------------

struct ContourArgs {
    CommonFlags common;
    double p = 1.0;
    std::string rot = "0";
    double aspect = 0.3;
    int n = 400;
    std::string bounds = "-5,5,-5,5";
    int resolution = 101;
    bool truth = false;
    std::string out;
};

int cmd_contour(const ContourArgs& a) {
    if (!(a.aspect > 0.0)) throw ConfigError("--aspect must be positive");
    const auto bv = parse_numbers(a.bounds, "--bounds");
    if (bv.size() != 4) throw ConfigError("--bounds: expected xmin,xmax,ymin,ymax");
    const GridBounds bounds{bv[0], bv[1], bv[2], bv[3]};

    // psi(|u1|^p + |u2|^p / aspect) with u the coordinates before rotation.
    LpSymmetricSpec spec = standard_spec(a.p, 2);
    Matrix scale = Matrix::Identity(2, 2);
    scale(1, 1) = std::pow(a.aspect, -1.0 / a.p);
    spec.a = scale * rotation2(parse_angle(a.rot)).transpose();
    spec.validate();

    ContourGrid grid;
    if (a.truth) {
        grid = contour_grid(spec, bounds, a.resolution);
    } else {
        Rng rng(derive_seed(a.common.seed, 0, 0xc0ULL));
        const Matrix x = sample_lp(spec, a.n, rng);
        const FitOptions opt = fit_options(a.common);
        Rng fit_rng = class_rng(a.common.seed, 0);
        const ClassFit cf = fit_class(x, "sample", 1.0, fit_rng, opt);
        std::cerr << "p_hat = " << report_number(cf.cls.model.p()) << ", tr_ratio = " << report_number(cf.cls.tr_ratio) << '\n';
        grid = contour_grid(cf.cls.model, bounds, a.resolution);
    }
    Output out(a.out);
    write_contour_csv(out.stream(), grid);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affine-invariant L_p depth classification with a data-driven exponent"};
    app.require_subcommand(1);

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "fit a classifier on a labelled CSV and write a model file");
    c_fit->add_option("train,--train", fit.train, "training CSV")->required();
    c_fit->add_option("--label", fit.label, "label column")->required();
    c_fit->add_option("--drop-cols", fit.drop_cols, "comma list of columns to ignore");
    c_fit->add_option("--priors", fit.priors, "sample|equal")->capture_default_str();
    c_fit->add_flag("--max-depth", fit.max_depth, "maximum-depth rule with a common p");
    c_fit->add_option("--out", fit.out, "model file")->required();
    add_common(c_fit, fit.common);

    ClassifyArgs cls;
    auto* c_cls = app.add_subcommand("classify", "append a 'predicted' column to a CSV");
    c_cls->add_option("model,--model", cls.model, "model file")->required();
    c_cls->add_option("data,--data", cls.data, "CSV to classify")->required();
    c_cls->add_option("--label", cls.label, "label column to ignore if present");
    c_cls->add_option("--drop-cols", cls.drop_cols, "comma list of columns to ignore");
    c_cls->add_option("--out", cls.out, "output CSV (default stdout)");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "simulation study with Monte-Carlo Bayes risk and regret ratios");
    c_sim->add_option("--config", sim.config, "INI config");
    c_sim->add_option("--problems", sim.problems, "comma list of built-in problems or 'all'");
    c_sim->add_option("--reps", sim.reps)->capture_default_str();
    c_sim->add_option("--paper-reps", sim.paper_reps)->capture_default_str();
    c_sim->add_option("--n-mc", sim.n_mc, "Monte-Carlo draws for the Bayes risk")->capture_default_str();
    c_sim->add_option("--train-per-class", sim.train_per_class)->capture_default_str();
    c_sim->add_option("--test-per-class", sim.test_per_class)->capture_default_str();
    c_sim->add_option("--out", sim.out, "report CSV");
    add_common(c_sim, sim.common);

    BenchmarkArgs bench;
    auto* c_bench = app.add_subcommand("benchmark", "repeated stratified splits of a labelled CSV");
    c_bench->add_option("--config", bench.config, "INI config");
    c_bench->add_option("--data", bench.data, "labelled CSV");
    c_bench->add_option("--label", bench.label, "label column");
    c_bench->add_option("--drop-cols", bench.drop_cols, "comma list of columns to ignore");
    c_bench->add_option("--test", bench.test, "fixed test CSV (single fit, binomial se)");
    c_bench->add_option("--train-fraction", bench.train_fraction)->capture_default_str();
    c_bench->add_option("--train-size", bench.train_size, "absolute training size (overrides the fraction)");
    c_bench->add_option("--reps", bench.reps)->capture_default_str();
    c_bench->add_option("--paper-reps", bench.paper_reps)->capture_default_str();
    c_bench->add_option("--priors", bench.priors, "sample|equal")->capture_default_str();
    c_bench->add_flag("--max-depth", bench.max_depth, "maximum-depth rule with a common p");
    c_bench->add_option("--out", bench.out, "report CSV");
    add_common(c_bench, bench.common);

    ContourArgs con;
    auto* c_con = app.add_subcommand("contour", "depth (or true density) grid for a rotated l_p sample, as CSV");
    c_con->add_option("--p", con.p, "exponent of the generating density")->capture_default_str();
    c_con->add_option("--rot", con.rot, "rotation angle, e.g. 135deg or 2.356rad")->capture_default_str();
    c_con->add_option("--aspect", con.aspect, "second-axis factor: psi(|u1|^p + |u2|^p / aspect)")->capture_default_str();
    c_con->add_option("--n", con.n, "sample size for the fitted contours")->capture_default_str();
    c_con->add_option("--bounds", con.bounds, "xmin,xmax,ymin,ymax")->capture_default_str();
    c_con->add_option("--resolution", con.resolution, "grid nodes per axis")->capture_default_str();
    c_con->add_flag("--truth", con.truth, "emit the true density instead of fitted depth");
    c_con->add_option("--out", con.out, "output CSV (default stdout)");
    add_common(c_con, con.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::Usage);
    }

    try {
        if (c_fit->parsed()) return cmd_fit(fit);
        if (c_cls->parsed()) return cmd_classify(cls);
        if (c_sim->parsed()) return cmd_simulate(sim, *c_sim);
        if (c_bench->parsed()) return cmd_benchmark(bench, *c_bench);
        if (c_con->parsed()) return cmd_contour(con);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Numeric);
    }
    return static_cast<int>(ErrorKind::Usage);
}
