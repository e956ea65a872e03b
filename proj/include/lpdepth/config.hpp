#pragma once

// INI experiment configs and the small value parsers shared with the CLI.
//
//   [simulate]            seed, reps, paper_reps, train_per_class, test_per_class,
//                         n_mc, grid, trim, problems (comma list or "all")
//   [problem:NAME]        rule, prior1, p1, b1, a1 (row-major), sigma1, p2, b2, a2, sigma2
//   [benchmark]           data, label, drop_cols, test, train_fraction | train_size,
//                         reps, paper_reps, seed, priors, rule, grid, trim

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "lpdepth/csv.hpp"
#include "lpdepth/error.hpp"
#include "lpdepth/harness.hpp"

namespace lpdepth {

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim_ws(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim_ws(cur));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

inline std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        double v;
        if (!parse_number(item, v)) throw ConfigError(what + ": '" + item + "' is not a number");
        out.push_back(v);
    }
    return out;
}

// "standard", "euclidean" or a comma list of exponents.
inline PGrid parse_grid(const std::string& s) {
    const std::string t = trim_ws(s);
    if (t == "standard" || t == "default") return PGrid::standard();
    if (t == "euclidean" || t == "md") return PGrid::euclidean();
    return PGrid(parse_numbers(t, "--grid"));
}

inline TrimSpec parse_trim(const std::string& s) {
    const auto v = parse_numbers(s, "--trim");
    if (v.size() != 2) throw ConfigError("--trim: expected two levels lo,hi");
    TrimSpec t{v[0], v[1]};
    t.validate();
    return t;
}

inline PriorMode parse_priors(const std::string& s) {
    if (s == "sample") return PriorMode::Sample;
    if (s == "equal") return PriorMode::Equal;
    throw ConfigError("--priors: expected 'sample' or 'equal', got '" + s + "'");
}

inline Rule parse_rule(const std::string& s) {
    if (s == "max-depth" || s == "d1") return Rule::MaxDepth;
    if (s == "density-ratio" || s == "d2") return Rule::DensityRatio;
    throw ConfigError("rule: expected 'max-depth' or 'density-ratio', got '" + s + "'");
}

// Angle with an optional unit suffix: "135deg", "0.5rad" or plain radians.
inline double parse_angle(const std::string& s) {
    std::string t = trim_ws(s);
    double scale = 1.0;
    if (t.size() > 3 && t.substr(t.size() - 3) == "deg") {
        scale = std::numbers::pi / 180.0;
        t.resize(t.size() - 3);
    } else if (t.size() > 3 && t.substr(t.size() - 3) == "rad") {
        t.resize(t.size() - 3);
    }
    double v;
    if (!parse_number(t, v)) throw ConfigError("angle: cannot parse '" + s + "'");
    return v * scale;
}

inline std::uint64_t parse_seed(const std::string& s) {
    const std::string t = trim_ws(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) throw ConfigError("seed: '" + s + "' is not an unsigned integer");
    return v;
}

namespace detail {

using boost::property_tree::ptree;

inline ptree read_ini(const std::string& path) {
    ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(path, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    return pt;
}

template <class T>
T get_or(const ptree& sec, const std::string& key, T fallback) {
    const auto v = sec.get_optional<std::string>(ptree::path_type(key, '\0'));
    if (!v) return fallback;
    if constexpr (std::is_same_v<T, std::string>) {
        return trim_ws(*v);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        return parse_seed(*v);
    } else {
        double x;
        if (!parse_number(*v, x)) throw ConfigError("config: '" + key + "' is not a number");
        if constexpr (std::is_integral_v<T>) {
            if (x != std::floor(x)) throw ConfigError("config: '" + key + "' must be an integer");
        }
        return static_cast<T>(x);
    }
}

inline LpSymmetricSpec read_spec(const ptree& sec, const std::string& suffix) {
    LpSymmetricSpec s;
    s.p = get_or(sec, "p" + suffix, 2.0);
    s.sigma = get_or(sec, "sigma" + suffix, 1.0);
    const auto b = parse_numbers(get_or<std::string>(sec, "b" + suffix, "0,0"), "b" + suffix);
    const auto d = static_cast<Eigen::Index>(b.size());
    s.b = Eigen::Map<const Vector>(b.data(), d);
    const auto a = parse_numbers(get_or<std::string>(sec, "a" + suffix, ""), "a" + suffix);
    if (a.empty()) {
        s.a = Matrix::Identity(d, d);
    } else {
        if (static_cast<Eigen::Index>(a.size()) != d * d) throw ConfigError("config: a" + suffix + " must have d*d entries");
        s.a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data(), d, d);
    }
    s.validate();
    return s;
}

}  // namespace detail

inline SimConfig load_sim_config(const std::string& path) {
    const auto pt = detail::read_ini(path);
    SimConfig cfg;
    const auto sec_opt = pt.get_child_optional("simulate");
    const detail::ptree empty;
    const detail::ptree& sec = sec_opt ? *sec_opt : empty;
    cfg.seed = detail::get_or<std::uint64_t>(sec, "seed", cfg.seed);
    cfg.reps = detail::get_or(sec, "reps", cfg.reps);
    cfg.paper_reps = detail::get_or(sec, "paper_reps", cfg.paper_reps);
    cfg.train_per_class = detail::get_or(sec, "train_per_class", cfg.train_per_class);
    cfg.test_per_class = detail::get_or(sec, "test_per_class", cfg.test_per_class);
    cfg.n_mc = detail::get_or(sec, "n_mc", cfg.n_mc);
    if (const auto g = detail::get_or<std::string>(sec, "grid", ""); !g.empty()) cfg.fit.grid = parse_grid(g);
    if (const auto t = detail::get_or<std::string>(sec, "trim", ""); !t.empty()) cfg.fit.trim = parse_trim(t);

    std::vector<SimProblem> custom;
    for (const auto& [name, child] : pt) {
        if (name.rfind("problem:", 0) != 0) continue;
        SimProblem p;
        p.name = name.substr(8);
        p.rule = parse_rule(detail::get_or<std::string>(child, "rule", "density-ratio"));
        p.problem.first = detail::read_spec(child, "1");
        p.problem.second = detail::read_spec(child, "2");
        p.problem.prior_first = detail::get_or(child, "prior1", 0.5);
        p.problem.validate();
        custom.push_back(std::move(p));
    }
    const std::string list = detail::get_or<std::string>(sec, "problems", custom.empty() ? "all" : "");
    cfg.problems.clear();
    if (list == "all") {
        cfg.problems = table1_problems();
    } else {
        for (const auto& n : split_list(list)) cfg.problems.push_back(find_problem(n));
    }
    cfg.problems.insert(cfg.problems.end(), custom.begin(), custom.end());
    if (cfg.problems.empty()) throw ConfigError("config: no problems selected");
    return cfg;
}

struct BenchmarkSetup {
    std::string data;
    std::string label;
    std::vector<std::string> drop_cols;
    std::string test;  // optional fixed test file
    BenchmarkConfig cfg;
};

inline BenchmarkSetup load_benchmark_config(const std::string& path) {
    const auto pt = detail::read_ini(path);
    const auto sec_opt = pt.get_child_optional("benchmark");
    if (!sec_opt) throw ConfigError("config: missing [benchmark] section");
    const auto& sec = *sec_opt;
    BenchmarkSetup s;
    s.data = detail::get_or<std::string>(sec, "data", "");
    s.label = detail::get_or<std::string>(sec, "label", "");
    s.drop_cols = split_list(detail::get_or<std::string>(sec, "drop_cols", ""));
    s.test = detail::get_or<std::string>(sec, "test", "");
    auto& c = s.cfg;
    c.split.train_fraction = detail::get_or(sec, "train_fraction", c.split.train_fraction);
    c.split.train_size = detail::get_or<std::size_t>(sec, "train_size", c.split.train_size);
    c.split.reps = detail::get_or(sec, "reps", c.split.reps);
    c.split.seed = detail::get_or<std::uint64_t>(sec, "seed", c.split.seed);
    c.paper_reps = detail::get_or(sec, "paper_reps", c.paper_reps);
    c.priors = parse_priors(detail::get_or<std::string>(sec, "priors", "sample"));
    c.rule = parse_rule(detail::get_or<std::string>(sec, "rule", "density-ratio"));
    if (const auto g = detail::get_or<std::string>(sec, "grid", ""); !g.empty()) c.fit.grid = parse_grid(g);
    if (const auto t = detail::get_or<std::string>(sec, "trim", ""); !t.empty()) c.fit.trim = parse_trim(t);
    c.pipelines = default_pipelines(c.fit.grid);
    return s;
}

}  // namespace lpdepth
