#pragma once

// JSON and CSV serialization of module results.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "torusflow/cover.hpp"
#include "torusflow/curve_shortening.hpp"
#include "torusflow/entropy.hpp"
#include "torusflow/minimal_axes.hpp"
#include "torusflow/rotation.hpp"

namespace torusflow {

using nlohmann::json;

inline json to_json(const Vec2& v) { return json::array({v.x, v.y}); }
inline json to_json(const DeckTransform& t) { return json::array({t.m, t.n}); }

inline json to_json(const RotationNumber& r) {
    if (r.infinite) return "inf";
    return r.slope;
}

inline json to_json(const IntersectionEvent& e) {
    return {{"t1", e.t1}, {"t2", e.t2}, {"point", to_json(e.point)}, {"sign", e.sign}, {"margin", e.margin}};
}

inline json to_json(const IntersectionSetEstimate& est) {
    // counts["m/n"][k-1][h] for powers k = 1..class_radius.
    json counts = json::object();
    for (const auto& c : est.classes) counts[c.rep.key()] = c.counts;
    json growing = json::array();
    for (const auto& g : est.growing_classes()) growing.push_back(g.key());
    return {{"ladder", est.ladder},
            {"class_radius", est.class_radius},
            {"counts", counts},
            {"growing", growing},
            {"growing_count", est.growing_count()},
            {"note", "finite-horizon evidence: growth over the last three horizons stands in for infinitely many "
                     "crossings; powers beyond class_radius are not checked"}};
}

inline json to_json(const DirectionEstimate& d) {
    return {{"direction", to_json(d.direction)}, {"rho", to_json(d.rho)}, {"diagnostic", d.diagnostic}, {"horizon", d.horizon}};
}

inline json to_json(const Strip& s) {
    return {{"direction", to_json(s.direction)}, {"lower", s.lower}, {"upper", s.upper}, {"width", s.width()}};
}

inline json to_json(const CsfOutcome& o) {
    return {{"verdict", verdict_name(o.verdict)},
            {"class", to_json(o.curve.cls)},
            {"length", o.curve.length},
            {"flow_time", o.curve.time},
            {"extinction_time", o.extinction_time},
            {"final_max_k", o.final_max_k},
            {"steps", o.steps},
            {"contractible_geodesic", o.contractible_geodesic},
            {"max_extent", o.max_extent}};
}

inline json to_json(const Axis& a) {
    json j{{"class", to_json(a.cls)},
           {"length", a.length},
           {"deviation", line_deviation(a)},
           {"closing_residual", a.closing_residual},
           {"max_k", a.max_k},
           {"launch", {{"base", to_json(a.launch.base)}, {"velocity", to_json(a.launch.velocity)}}}};
    if (a.oracle_length > 0.0) {
        j["oracle_length"] = a.oracle_length;
        j["oracle_gap"] = a.oracle_gap;
    } else {
        j["oracle_length"] = nullptr;
        j["oracle_gap"] = nullptr;
    }
    return j;
}

inline json to_json(const FoliationReport& r) {
    return {{"class", to_json(r.cls)},
            {"samples", r.samples},
            {"kept_axes", r.axes.size()},
            {"positions", r.positions},
            {"cluster_of", r.cluster_of},
            {"clusters", r.clusters},
            {"max_gap", r.max_gap},
            {"gap_after", r.gap_after},
            {"ordering_violations", r.ordering_violations},
            {"failed", r.failed},
            {"foliates", r.foliates()}};
}

inline json to_json(const FlatnessReport& r) {
    json classes = json::array();
    for (const auto& c : r.classes_searched) classes.push_back(to_json(c));
    return {{"verdict", r.flat_consistent() ? "flat" : (r.disagreement() ? "disagreement" : "non-flat")},
            {"curvature", {{"max_abs", r.max_abs_curvature}, {"witness", to_json(r.curvature_witness)}, {"flat", r.curvature_flat}}},
            {"axes",
             {{"class_radius", r.class_radius},
              {"classes", classes},
              {"intersection_witnesses", r.intersection_witnesses},
              {"gap_witnesses", r.gap_witnesses},
              {"failures", r.failures},
              {"flat", r.axis_flat}}},
            {"disagreement", r.disagreement()},
            {"note", "the axis prong searches only the listed classes and the axes reachable by curve shortening and "
                     "shooting, so it is evidence; the curvature prong is decisive"}};
}

inline json to_json(const EntropyProtocol& p) {
    return {{"M", p.M},
            {"horizons", p.horizons},
            {"epsilons", p.epsilons},
            {"dt_probe", p.dt_probe},
            {"seed", p.seed},
            {"prefix_levels", p.prefix_levels},
            {"angle_weight", p.angle_weight},
            {"saturation", p.saturation}};
}

inline json to_json(const EntropyEstimate& e) {
    json flags = json::array();
    if (e.sample_limited) flags.push_back("sample_limited");
    if (!e.monotone_in_T() || !e.monotone_in_eps() || !e.monotone_in_M()) flags.push_back("non_monotone");
    return {{"metric", e.metric},
            {"protocol", to_json(e.protocol)},
            {"prefix_sizes", e.prefix_sizes},
            {"grid", e.r},
            {"slopes", e.slopes},
            {"headline", e.headline},
            {"headline_epsilon", e.protocol.epsilons[std::size_t(e.headline_eps)]},
            {"eps_extrapolated", e.eps_extrapolated},
            {"flags", flags},
            {"note", "greedy separated sets are maximal, not maximum: a lower-bound family; the slopes are "
                     "finite-ladder rates and no limit is claimed"}};
}

inline json to_json(const RefinementHistory& h) {
    return {{"grid", h.grid}, {"jump", h.jump}, {"decreasing", h.decreasing()}};
}

inline json to_json(const RotationHit& h) {
    return {{"target", h.target}, {"hit", h.hit}, {"launch", h.launch}, {"rho", h.rho}, {"error", h.error}, {"iterations", h.iterations}};
}

inline void write_intersections_csv(std::ostream& out, const std::vector<std::pair<std::string, IntersectionEvent>>& rows,
                                    const std::string& config_hash) {
    out.precision(17);
    out << "# config_hash=" << config_hash << "\n";
    out << "t1,t2,x,y,sign,margin,kind\n";
    for (const auto& [kind, e] : rows)
        out << e.t1 << "," << e.t2 << "," << e.point.x << "," << e.point.y << "," << e.sign << "," << e.margin << ","
            << kind << "\n";
}

inline void write_entropy_csv(std::ostream& out, const EntropyEstimate& e, const std::string& config_hash) {
    out.precision(17);
    out << "# metric=" << e.metric << " M=" << e.prefix_sizes.back() << " config_hash=" << config_hash << "\n";
    out << "epsilon,T,r,log_r\n";
    const auto& g = e.full();
    for (std::size_t k = 0; k < e.protocol.epsilons.size(); ++k)
        for (std::size_t t = 0; t < e.protocol.horizons.size(); ++t)
            out << e.protocol.epsilons[k] << "," << e.protocol.horizons[t] << "," << g[t][k] << ","
                << std::log(double(g[t][k])) << "\n";
}

inline void write_rotation_csv(std::ostream& out, const RotationField& f, const std::string& config_hash) {
    out.precision(17);
    out << "# base=" << f.base.x << "," << f.base.y << " horizon=" << f.horizon << " config_hash=" << config_hash << "\n";
    out << "launch,escaping,dir_x,dir_y,rho\n";
    for (const auto& s : f.samples) {
        out << s.launch << "," << (s.escaping ? 1 : 0) << "," << s.direction.x << "," << s.direction.y << ",";
        if (s.escaping) {
            if (s.rho.infinite) out << "inf";
            else out << s.rho.slope;
        }
        out << "\n";
    }
}

}  // namespace torusflow
