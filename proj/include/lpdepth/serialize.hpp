#pragma once

// Model files: JSON with every double written as a C99 hex-float string, so a
// save/load round trip is bit-exact.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lpdepth/classify.hpp"
#include "lpdepth/error.hpp"

namespace lpdepth {

inline constexpr const char* kModelFormat = "lpdepth-model";
inline constexpr int kModelVersion = 1;

enum class Rule { MaxDepth, DensityRatio };

inline const char* rule_name(Rule r) { return r == Rule::MaxDepth ? "max-depth" : "density-ratio"; }

// A fitted classifier of either kind.
struct SavedModel {
    Rule rule = Rule::DensityRatio;
    std::vector<TrainedClass> classes;
    std::vector<PairThreshold> thresholds;  // empty for max-depth
    std::vector<std::string> features;      // training column names, if known

    int dim() const { return classes.front().dim(); }

    std::size_t classify_index(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != dim()) throw DimensionMismatch("classify: point has dimension " + std::to_string(x.size()) +
                                                       ", model has " + std::to_string(dim()));
        if (rule == Rule::MaxDepth) return classify_d1_index(x, classes);
        std::vector<double> log_f;
        for (const auto& c : classes) log_f.push_back(class_log_density(x, c));
        return vote(log_f, thresholds);
    }

    const std::string& classify(const Eigen::Ref<const Vector>& x) const { return classes[classify_index(x)].label; }
};

inline SavedModel to_saved(const ClassifierD1& c) { return {Rule::MaxDepth, c.classes, {}, {}}; }
inline SavedModel to_saved(const ClassifierD2& c) { return {Rule::DensityRatio, c.classes, c.thresholds, {}}; }

inline std::string hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_hex_double(const std::string& s) {
    if (s.empty()) throw ParseError("model: empty number");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) throw ParseError("model: bad number '" + s + "'");
    return v;
}

namespace detail {

using nlohmann::json;

inline json hex_array(const double* v, std::size_t n) {
    json a = json::array();
    for (std::size_t i = 0; i < n; ++i) a.push_back(hex_double(v[i]));
    return a;
}

inline std::vector<double> read_hex_array(const json& a, const char* what) {
    if (!a.is_array()) throw ParseError(std::string("model: '") + what + "' must be an array");
    std::vector<double> out;
    for (const auto& e : a) {
        if (!e.is_string()) throw ParseError(std::string("model: '") + what + "' entries must be hex-float strings");
        out.push_back(parse_hex_double(e.get<std::string>()));
    }
    return out;
}

inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("model: missing field '") + key + "'");
    return j.at(key);
}

inline double hex_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_string()) throw ParseError(std::string("model: '") + key + "' must be a hex-float string");
    return parse_hex_double(v.get<std::string>());
}

}  // namespace detail

inline nlohmann::json to_json(const SavedModel& m) {
    using detail::json;
    json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["rule"] = rule_name(m.rule);
    j["dim"] = m.dim();
    json classes = json::array();
    for (const auto& c : m.classes) {
        json jc;
        jc["label"] = c.label;
        jc["p"] = hex_double(c.model.p());
        jc["b"] = detail::hex_array(c.model.location().data(), static_cast<std::size_t>(c.model.dim()));
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a = c.model.transform();
        jc["A"] = detail::hex_array(a.data(), static_cast<std::size_t>(a.size()));
        jc["prior"] = hex_double(c.prior);
        jc["n"] = c.n;
        jc["tr_ratio"] = hex_double(c.tr_ratio);
        jc["tr_tries"] = c.tr_tries;
        jc["bandwidth"] = hex_double(c.kde.bandwidth());
        jc["depths"] = detail::hex_array(c.kde.samples().data(), c.kde.size());
        classes.push_back(std::move(jc));
    }
    j["classes"] = std::move(classes);
    json th = json::array();
    for (const auto& t : m.thresholds) {
        th.push_back({{"i", t.i}, {"j", t.j}, {"log_k", hex_double(t.log_k)}, {"cv_error", hex_double(t.cv_error)}});
    }
    j["thresholds"] = std::move(th);
    j["features"] = m.features;
    return j;
}

inline SavedModel from_json(const nlohmann::json& j) {
    using detail::field;
    using detail::hex_field;
    if (!j.is_object()) throw ParseError("model: document is not an object");
    if (field(j, "format") != kModelFormat) throw ParseError("model: not an lpdepth model file");
    const auto& ver = field(j, "version");
    if (!ver.is_number_integer() || ver.get<int>() != kModelVersion) {
        throw FormatVersionError("model: unsupported format version " + ver.dump() + " (this build reads version " +
                                 std::to_string(kModelVersion) + ")");
    }
    SavedModel m;
    const std::string rule = field(j, "rule").get<std::string>();
    if (rule == "max-depth") {
        m.rule = Rule::MaxDepth;
    } else if (rule == "density-ratio") {
        m.rule = Rule::DensityRatio;
    } else {
        throw ParseError("model: unknown rule '" + rule + "'");
    }
    const int d = field(j, "dim").get<int>();
    if (d < 1) throw ParseError("model: bad dimension");
    for (const auto& jc : field(j, "classes")) {
        const auto b = detail::read_hex_array(field(jc, "b"), "b");
        const auto a = detail::read_hex_array(field(jc, "A"), "A");
        if (static_cast<int>(b.size()) != d || static_cast<int>(a.size()) != d * d) throw ParseError("model: class geometry has wrong size");
        Vector bv = Eigen::Map<const Vector>(b.data(), d);
        Matrix av = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data(), d, d);
        LpModel model(hex_field(jc, "p"), std::move(bv), std::move(av));
        DepthKde kde(detail::read_hex_array(field(jc, "depths"), "depths"), hex_field(jc, "bandwidth"));
        m.classes.push_back(TrainedClass{field(jc, "label").get<std::string>(), std::move(model), std::move(kde),
                                         hex_field(jc, "prior"), field(jc, "n").get<Eigen::Index>(),
                                         hex_field(jc, "tr_ratio"), field(jc, "tr_tries").get<int>()});
    }
    if (m.classes.size() < 2) throw ParseError("model: need at least two classes");
    for (const auto& jt : field(j, "thresholds")) {
        PairThreshold t;
        t.i = field(jt, "i").get<std::size_t>();
        t.j = field(jt, "j").get<std::size_t>();
        t.log_k = hex_field(jt, "log_k");
        t.cv_error = hex_field(jt, "cv_error");
        if (!(t.i < t.j && t.j < m.classes.size())) throw ParseError("model: threshold refers to a missing class");
        m.thresholds.push_back(t);
    }
    if (j.contains("features")) {
        m.features = j.at("features").get<std::vector<std::string>>();
        if (!m.features.empty() && static_cast<int>(m.features.size()) != d) throw ParseError("model: feature list has wrong size");
    }
    if (m.rule == Rule::DensityRatio && m.thresholds.size() != m.classes.size() * (m.classes.size() - 1) / 2) {
        throw ParseError("model: density-ratio rule needs one threshold per class pair");
    }
    return m;
}

inline std::string save_model_string(const SavedModel& m) { return to_json(m).dump(2) + "\n"; }

inline SavedModel load_model_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

inline void save_model(const std::string& path, const SavedModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write model file '" + path + "'");
    os << save_model_string(m);
    if (!os) throw ConfigError("error writing model file '" + path + "'");
}

inline SavedModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return load_model_string(ss.str());
}

}  // namespace lpdepth
