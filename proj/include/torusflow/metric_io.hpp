#pragma once

// Metric file grammar (one statement per line, '#' starts a comment):
//
//   name = <identifier>
//   lambda_min = <real>
//   term component=<g11|g12|g22|f> mx=<int> my=<int> cos=<real> sin=<real>
//
// Terms of the same component add up; `f` is the conformal exponent, so the
// metric is exp(2f) * [[g11, g12], [g12, g22]]. Missing term keys default to 0.

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

#include "torusflow/gallery.hpp"
#include "torusflow/metric.hpp"

namespace torusflow {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& s, int line) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValidationError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
    return v;
}

inline int parse_int(const std::string& s, int line) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValidationError("line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
    return v;
}

}  // namespace detail

inline MetricSpec parse_metric_text(const std::string& text) {
    std::string name = "unnamed";
    double lambda_min = -1.0;
    std::array<std::vector<FourierTerm>, 4> comps;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = detail::trim(raw.substr(0, raw.find('#')));
        if (s.empty()) continue;
        if (s.rfind("term", 0) == 0 && (s.size() == 4 || s[4] == ' ' || s[4] == '\t')) {
            std::istringstream toks(s.substr(4));
            std::string tok;
            int comp = -1;
            FourierTerm t;
            while (toks >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos)
                    throw ValidationError("line " + std::to_string(line) + ": expected key=value, got '" + tok + "'");
                const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "component") {
                    if (val == "g11") comp = 0;
                    else if (val == "g12") comp = 1;
                    else if (val == "g22") comp = 2;
                    else if (val == "f") comp = 3;
                    else throw ValidationError("line " + std::to_string(line) + ": unknown component '" + val + "'");
                } else if (key == "mx") {
                    t.mode_x = detail::parse_int(val, line);
                } else if (key == "my") {
                    t.mode_y = detail::parse_int(val, line);
                } else if (key == "cos") {
                    t.cos_coeff = detail::parse_real(val, line);
                } else if (key == "sin") {
                    t.sin_coeff = detail::parse_real(val, line);
                } else {
                    throw ValidationError("line " + std::to_string(line) + ": unknown term key '" + key + "'");
                }
            }
            if (comp < 0) throw ValidationError("line " + std::to_string(line) + ": term without component");
            comps[comp].push_back(t);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError("line " + std::to_string(line) + ": cannot parse '" + s + "'");
        const std::string key = detail::trim(s.substr(0, eq)), val = detail::trim(s.substr(eq + 1));
        if (key == "name") name = val;
        else if (key == "lambda_min") lambda_min = detail::parse_real(val, line);
        else throw ValidationError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    if (lambda_min <= 0.0) throw ValidationError("metric file must declare lambda_min > 0");
    return MetricSpec::create(name, comps[0], comps[1], comps[2], comps[3], lambda_min);
}

inline std::string write_metric_text(const MetricSpec& spec) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "name = " << spec.name() << "\n";
    out << "lambda_min = " << spec.lambda_min() << "\n";
    for (Component c : {Component::g11, Component::g12, Component::g22, Component::exponent})
        for (const auto& t : spec.terms(c))
            out << "term component=" << component_name(c) << " mx=" << t.mode_x << " my=" << t.mode_y
                << " cos=" << t.cos_coeff << " sin=" << t.sin_coeff << "\n";
    return out.str();
}

inline MetricSpec load_metric_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open metric file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_metric_text(ss.str());
}

/// Gallery name (optionally parameterized) or a path to a metric file.
inline MetricSpec resolve_metric(const std::string& ref) {
    const std::string base = ref.substr(0, ref.find(':'));
    for (const auto& n : gallery::names())
        if (n == base) return gallery::by_name(ref);
    return load_metric_file(ref);
}

}  // namespace torusflow
