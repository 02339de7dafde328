#pragma once

// Config-driven runner behind the command-line tool.
//
// Config file grammar (one statement per line, '#' starts a comment):
//
//   <key> = <value>
//
// Keys are the option names of the command (without the leading dashes).
// Lists are comma-separated ("horizons = 20,40,80"), classes are "m,n",
// booleans are true/false. Command-line options override the file.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "torusflow/metric_io.hpp"
#include "torusflow/report.hpp"

namespace torusflow {

inline constexpr const char* kOutputDirEnv = "TORUSFLOW_OUTPUT_DIR";

struct OptionSpec {
    std::string key;
    std::string fallback;
    std::string help;
};

/// Options per command, in display order.
inline const std::map<std::string, std::vector<OptionSpec>>& command_table() {
    static const std::map<std::string, std::vector<OptionSpec>> table = [] {
        const std::vector<OptionSpec> ray{{"x", "0", "base point x"},
                                          {"y", "0", "base point y"},
                                          {"angle", "0", "Euclidean launch angle (radians)"}};
        auto with = [](std::vector<OptionSpec> a, const std::vector<OptionSpec>& b) {
            a.insert(a.end(), b.begin(), b.end());
            return a;
        };
        std::map<std::string, std::vector<OptionSpec>> t;
        t["integrate"] = with(ray, {{"horizon", "10", "integration time"},
                                    {"sample_dt", "0.01", "output sample spacing"},
                                    {"rtol", "1e-10", "relative tolerance"},
                                    {"atol", "1e-10", "absolute tolerance"}});
        t["rotation-field"] = {{"x", "0.1", "base point x"},
                               {"y", "0.2", "base point y"},
                               {"angles", "512", "launch angles in the base grid"},
                               {"horizon", "400", "integration time per ray"},
                               {"levels", "2", "grid doublings reported (including the base grid)"},
                               {"targets", "16", "rational slopes to hit by bisection"},
                               {"tol", "1e-3", "bisection tolerance on the rotation number"}};
        t["intersections"] = with(ray, {{"horizon", "400", "integration time"},
                                        {"class_radius", "3", "sup-norm radius of translation classes"},
                                        {"ladder", "100,200,400", "horizon ladder for I(c)"}});
        t["strip"] = with(ray, {{"horizon", "200", "first horizon; the second is twice it"}});
        t["csf"] = {{"shape", "circle", "initial curve: circle, line or wavy"},
                    {"cx", "0.5", "circle center x"},
                    {"cy", "0.5", "circle center y"},
                    {"r", "0.2", "circle radius"},
                    {"class", "1,0", "deck class of line/wavy curves"},
                    {"offset", "0.3", "transverse offset of line/wavy curves"},
                    {"amplitude", "0.2", "wavy curve amplitude"},
                    {"nodes", "256", "polygon nodes"},
                    {"max_time", "10", "flow time budget"},
                    {"k_tol", "1e-5", "geodesic curvature tolerance"}};
        t["axis"] = {{"class", "1,0", "primitive deck class m,n"},
                     {"nodes", "128", "curve nodes for the shortening stage"},
                     {"oracle", "false", "also compute the grid oracle length"},
                     {"oracle_grid", "512", "oracle grid size"}};
        t["foliation"] = {{"class", "1,0", "primitive deck class m,n"},
                          {"samples", "8", "fiber samples"},
                          {"nodes", "128", "curve nodes"}};
        t["flatness"] = {{"class_radius", "1", "sup-norm radius of classes searched"},
                         {"samples", "8", "fiber samples per class"},
                         {"curvature_grid", "256", "grid for the curvature scan"}};
        t["entropy"] = {{"preset", "calibration", "calibration, coarse or custom"},
                        {"M", "", "sample size (overrides preset)"},
                        {"horizons", "", "T ladder (overrides preset)"},
                        {"epsilons", "", "epsilon ladder (overrides preset)"},
                        {"dt_probe", "", "probe spacing (overrides preset)"},
                        {"seed", "", "sampling seed (overrides preset)"},
                        {"prefix_levels", "", "sample prefixes M/2^k (overrides preset)"}};
        t["report"] = {};
        for (auto& [name, opts] : t) {
            if (name != "report") opts.insert(opts.begin(), {"metric", "flat", "gallery name or metric file"});
            opts.push_back({"out", "", "output directory (default $" + std::string(kOutputDirEnv) + " or ./torusflow_out)"});
        }
        return t;
    }();
    return table;
}

/// Resolved configuration of one run: every option of the command, with
/// defaults filled in.
class ScenarioConfig {
public:
    ScenarioConfig() = default;
    explicit ScenarioConfig(std::string command) : command_(std::move(command)) {
        const auto it = command_table().find(command_);
        if (it == command_table().end()) throw ValidationError("unknown command '" + command_ + "'");
        for (const auto& o : it->second) values_[o.key] = o.fallback;
        if (values_["out"].empty()) {
            const char* env = std::getenv(kOutputDirEnv);
            values_["out"] = env && *env ? env : "torusflow_out";
        }
    }

    const std::string& command() const { return command_; }
    const std::map<std::string, std::string>& values() const { return values_; }

    void set(const std::string& key, const std::string& value) {
        if (!values_.count(key)) throw ValidationError("command '" + command_ + "' has no option '" + key + "'");
        values_[key] = value;
    }

    void load_text(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const std::string s = detail::trim(raw.substr(0, raw.find('#')));
            if (s.empty()) continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(line) + ": expected key = value");
            set(detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
        }
    }

    void load_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ValidationError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        load_text(ss.str());
    }

    bool has(const std::string& key) const {
        const auto it = values_.find(key);
        return it != values_.end() && !it->second.empty();
    }
    const std::string& str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ValidationError("missing option '" + key + "'");
        return it->second;
    }
    double real(const std::string& key) const { return parse_real(key, str(key)); }
    long long integer(const std::string& key) const {
        const std::string& v = str(key);
        long long out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size()) throw ValidationError("option '" + key + "': expected an integer, got '" + v + "'");
        return out;
    }
    std::size_t count(const std::string& key) const {
        const long long v = integer(key);
        if (v <= 0) throw ValidationError("option '" + key + "' must be positive");
        return std::size_t(v);
    }
    bool flag(const std::string& key) const {
        const std::string& v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ValidationError("option '" + key + "': expected true/false, got '" + v + "'");
    }
    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_real(key, detail::trim(item)));
        if (out.empty()) throw ValidationError("option '" + key + "': empty list");
        return out;
    }
    DeckTransform deck(const std::string& key) const {
        const std::vector<double> v = reals(key);
        if (v.size() != 2 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
            throw ValidationError("option '" + key + "': expected integers m,n");
        return {static_cast<long long>(v[0]), static_cast<long long>(v[1])};
    }

    /// Sorted key=value lines; the output directory is not part of the run.
    std::string canonical() const {
        std::string s = "command=" + command_ + "\n";
        for (const auto& [k, v] : values_)
            if (k != "out") s += k + "=" + v + "\n";
        return s;
    }
    /// FNV-1a 64 of the canonical text, as 16 hex digits.
    std::string hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        std::ostringstream o;
        o << std::hex << std::setw(16) << std::setfill('0') << h;
        return o.str();
    }
    json to_json() const {
        json j = json::object();
        for (const auto& [k, v] : values_) j[k] = v;
        return {{"command", command_}, {"options", j}, {"config_hash", hash()}};
    }

private:
    static double parse_real(const std::string& key, const std::string& v) {
        double out = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size()) throw ValidationError("option '" + key + "': expected a number, got '" + v + "'");
        return out;
    }

    std::string command_;
    std::map<std::string, std::string> values_;
};

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> files;
    std::string message;
    json summary;
};

namespace detail {

class OutputDir {
public:
    OutputDir(const ScenarioConfig& cfg) : dir_(cfg.str("out")), hash_(cfg.hash()) {}
    const std::string& hash() const { return hash_; }

    template <class Writer>
    void write(const std::string& name, Writer&& w) {
        std::filesystem::create_directories(dir_);
        const std::filesystem::path p = dir_ / name;
        std::ofstream f(p);
        if (!f) throw ValidationError("cannot write '" + p.string() + "'");
        w(f);
        files.push_back(p.string());
    }
    void write_json(const std::string& name, const json& j) {
        write(name, [&](std::ostream& o) { o << j.dump(2) << "\n"; });
    }
    std::filesystem::path path() const { return dir_; }

    std::vector<std::string> files;

private:
    std::filesystem::path dir_;
    std::string hash_;
};

inline UnitTangent ray_of(const MetricSpec& spec, const ScenarioConfig& cfg) {
    return UnitTangent::at_angle(spec, {cfg.real("x"), cfg.real("y")}, cfg.real("angle"));
}

inline json run_integrate(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir& out) {
    IntegrationOptions o;
    o.sample_dt = cfg.real("sample_dt");
    o.rtol = cfg.real("rtol");
    o.atol = cfg.real("atol");
    const Trajectory tr = integrate(spec, ray_of(spec, cfg), cfg.real("horizon"), o);
    out.write("trajectory.csv", [&](std::ostream& f) { write_trajectory_csv(f, tr, out.hash()); });
    return {{"endpoint", to_json(tr.pos.back())},
            {"end_velocity", to_json(tr.vel.back())},
            {"samples", tr.size()},
            {"max_speed_residual", tr.max_speed_residual}};
}

inline json run_rotation_field(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir& out) {
    const Vec2 base{cfg.real("x"), cfg.real("y")};
    const RotationField f = rotation_field(spec, base, cfg.count("angles"), cfg.real("horizon"));
    RefinementHistory h;
    h.grid.push_back(f.samples.size());
    h.jump.push_back(f.max_adjacent_jump());
    RotationField g = f;
    for (std::size_t l = 1; l < cfg.count("levels"); ++l) {
        g = refine(spec, g);
        h.grid.push_back(g.samples.size());
        h.jump.push_back(g.max_adjacent_jump());
    }
    json hits = json::array();
    std::size_t hit = 0;
    for (double t : rational_targets(std::size_t(cfg.integer("targets")))) {
        const RotationHit r = hit_rotation_target(spec, f, t, cfg.real("tol"));
        hit += r.hit ? 1 : 0;
        hits.push_back(to_json(r));
    }
    out.write("rotation_field.csv", [&](std::ostream& o) { write_rotation_csv(o, f, out.hash()); });
    return {{"refinement", to_json(h)}, {"non_escaping", f.non_escaping()}, {"targets", hits}, {"targets_hit", hit}};
}

inline json run_intersections(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir& out) {
    IntegrationOptions o;
    const Trajectory tr = integrate(spec, ray_of(spec, cfg), cfg.real("horizon"), o);
    const int radius = int(cfg.integer("class_radius"));
    std::vector<std::pair<std::string, IntersectionEvent>> rows;
    const IntersectionReport self = self_intersections(tr);
    for (const auto& e : self.events) rows.emplace_back("self", e);
    for (const DeckTransform& c : primitive_classes(radius))
        for (const auto& e : translate_intersections(tr, c).events) rows.emplace_back("translate:" + c.key(), e);
    const IntersectionSetEstimate est = estimate_I_set(tr, radius, cfg.reals("ladder"));
    const auto loop = detect_two_loop(self.events);
    out.write("intersections.csv", [&](std::ostream& f) { write_intersections_csv(f, rows, out.hash()); });
    json iset = to_json(est);
    iset["config_hash"] = out.hash();
    out.write_json("iset.json", iset);
    json w = nullptr;
    if (loop) w = {loop->t1, loop->t2, loop->t3, loop->t4};
    return {{"self_intersections", self.count()},
            {"tangential", self.tangential.size()},
            {"two_loop_witness", w},
            {"growing_count", est.growing_count()}};
}

inline json run_strip(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir&) {
    const double H = cfg.real("horizon");
    IntegrationOptions o;
    o.sample_dt = 0.05;
    const Trajectory tr = integrate(spec, ray_of(spec, cfg), 2 * H, o);
    const Trajectory half = tr.truncated(H);
    const DirectionEstimate d1 = asymptotic_direction(half), d2 = asymptotic_direction(tr);
    const Strip s1 = fit_strip(half, d1.direction), s2 = fit_strip(tr, d2.direction);
    return {{"horizons", {H, 2 * H}},
            {"direction", {to_json(d1), to_json(d2)}},
            {"strip", {to_json(s1), to_json(s2)}},
            {"width_ratio", s1.width() > 0.0 ? json(s2.width() / s1.width()) : json(nullptr)},
            {"note", "finite-horizon evidence"}};
}

inline json run_csf(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir& out) {
    const std::string shape = cfg.str("shape");
    const std::size_t n = cfg.count("nodes");
    ClosedCurve c;
    if (shape == "circle") {
        c = ClosedCurve::circle({cfg.real("cx"), cfg.real("cy")}, cfg.real("r"), n);
    } else if (shape == "line" || shape == "wavy") {
        const DeckTransform cls = cfg.deck("class");
        if (!cls.primitive()) throw PrimitiveRequired("csf: class " + cls.key() + " is not primitive");
        const Vec2 d = cls.offset(), nrm = perp(normalized(d));
        const double off = cfg.real("offset"), amp = shape == "wavy" ? cfg.real("amplitude") : 0.0;
        c = ClosedCurve::from_function(cls, n, [&](double u) { return u * d + (off + amp * std::sin(kTwoPi * u)) * nrm; });
    } else {
        throw ValidationError("csf: unknown shape '" + shape + "'");
    }
    CsfControls ctl;
    ctl.max_time = cfg.real("max_time");
    ctl.k_tol = cfg.real("k_tol");
    const CsfOutcome o = csf_evolve(spec, c, ctl);
    out.write("csf_log.csv", [&](std::ostream& f) { write_csf_log_csv(f, o, out.hash()); });
    out.write("curve.csv", [&](std::ostream& f) { write_curve_csv(f, o.curve, out.hash()); });
    return to_json(o);
}

inline json run_axis(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir& out) {
    AxisOptions opt;
    opt.nodes = cfg.count("nodes");
    opt.oracle = cfg.flag("oracle");
    opt.oracle_grid = int(cfg.count("oracle_grid"));
    const Axis a = find_minimal_axis(spec, cfg.deck("class"), opt);
    out.write("axis_curve.csv", [&](std::ostream& f) { write_curve_csv(f, a.curve, out.hash()); });
    return to_json(a);
}

inline json run_foliation(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir&) {
    AxisOptions opt;
    opt.nodes = cfg.count("nodes");
    return to_json(foliation_check(spec, cfg.deck("class"), int(cfg.count("samples")), opt));
}

inline json run_flatness(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir&) {
    return to_json(flatness_test(spec, int(cfg.count("class_radius")), int(cfg.count("samples")), {},
                                 int(cfg.count("curvature_grid"))));
}

inline EntropyProtocol entropy_protocol(const ScenarioConfig& cfg) {
    const std::string preset = cfg.str("preset");
    EntropyProtocol p = preset == "custom" ? EntropyProtocol{} : EntropyProtocol::preset(preset);
    if (cfg.has("M")) p.M = cfg.count("M");
    if (cfg.has("horizons")) p.horizons = cfg.reals("horizons");
    if (cfg.has("epsilons")) p.epsilons = cfg.reals("epsilons");
    if (cfg.has("dt_probe")) p.dt_probe = cfg.real("dt_probe");
    if (cfg.has("seed")) p.seed = std::uint64_t(cfg.integer("seed"));
    if (cfg.has("prefix_levels")) p.prefix_levels = int(cfg.count("prefix_levels"));
    return p;
}

inline json run_entropy(const MetricSpec& spec, const ScenarioConfig& cfg, OutputDir& out) {
    const EntropyEstimate e = estimate_entropy(spec, entropy_protocol(cfg));
    out.write("entropy.csv", [&](std::ostream& f) { write_entropy_csv(f, e, out.hash()); });
    return to_json(e);
}

inline json run_report(const ScenarioConfig&, OutputDir& out) {
    json bundle = json::object();
    if (std::filesystem::exists(out.path()))
        for (const auto& entry : std::filesystem::directory_iterator(out.path())) {
            const auto& p = entry.path();
            if (p.extension() != ".json" || p.filename() == "report.json") continue;
            std::ifstream f(p);
            try {
                bundle[p.stem().string()] = json::parse(f);
            } catch (const json::parse_error& e) {
                throw ValidationError("report: cannot parse '" + p.string() + "': " + e.what());
            }
        }
    if (bundle.empty()) throw ValidationError("report: no JSON outputs in '" + out.path().string() + "'");
    return {{"outputs", bundle}};
}

}  // namespace detail

/// Runs one command. Validation problems exit with 1 and numerical failures
/// with 2; both leave failure.json in the output directory.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
    RunResult res;
    detail::OutputDir out(cfg);
    const std::string& cmd = cfg.command();
    auto fail = [&](int code, const std::string& kind, const std::string& what) {
        res.exit_code = code;
        res.message = what;
        json m{{"status", "failed"}, {"exit_code", code}, {"error", kind}, {"message", what}, {"config", cfg.to_json()}};
        try {
            out.files.clear();
            out.write_json("failure.json", m);
        } catch (...) {
        }
        res.files = out.files;
        res.summary = m;
    };
    try {
        json body;
        if (cmd == "report") {
            body = detail::run_report(cfg, out);
        } else {
            const MetricSpec spec = resolve_metric(cfg.str("metric"));
            if (cmd == "integrate") body = detail::run_integrate(spec, cfg, out);
            else if (cmd == "rotation-field") body = detail::run_rotation_field(spec, cfg, out);
            else if (cmd == "intersections") body = detail::run_intersections(spec, cfg, out);
            else if (cmd == "strip") body = detail::run_strip(spec, cfg, out);
            else if (cmd == "csf") body = detail::run_csf(spec, cfg, out);
            else if (cmd == "axis") body = detail::run_axis(spec, cfg, out);
            else if (cmd == "foliation") body = detail::run_foliation(spec, cfg, out);
            else if (cmd == "flatness") body = detail::run_flatness(spec, cfg, out);
            else if (cmd == "entropy") body = detail::run_entropy(spec, cfg, out);
            else throw ValidationError("unknown command '" + cmd + "'");
            body["metric"] = spec.name();
            body["metric_certificate"] = spec.certified() ? "verified" : "unverified-certificate";
        }
        json doc{{"status", "ok"}, {"config", cfg.to_json()}, {"result", body}};
        const std::string stem = cmd == "report" ? "report" : cmd;
        std::filesystem::remove(out.path() / "failure.json");
        out.write_json(stem + ".json", doc);
        res.files = out.files;
        res.summary = doc;
    } catch (const ValidationError& e) {
        fail(1, "validation", e.what());
    } catch (const NumericalError& e) {
        fail(2, "numerical", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        fail(1, "io", e.what());
    }
    return res;
}

}  // namespace torusflow
