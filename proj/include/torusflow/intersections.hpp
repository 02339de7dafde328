#pragma once

// Transversal crossings between sampled curves.
//
// Curves are polylines through samples; candidate segment pairs come from a
// sorted uniform-grid index, crossings are located exactly on the polyline
// and, for flow trajectories, polished by Newton iteration on the cubic
// Hermite interpolant through the samples and their tangents.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "torusflow/flow.hpp"
#include "torusflow/vec2.hpp"

namespace torusflow {

struct IntersectionEvent {
    double t1 = 0.0;
    double t2 = 0.0;
    Vec2 point;
    /// +1 when (tangent1, tangent2) is positively oriented.
    int sign = 0;
    /// Sine of the crossing angle.
    double margin = 0.0;
};

struct IntersectionReport {
    std::vector<IntersectionEvent> events;
    /// Crossings whose margin is below the transversality threshold; never counted.
    std::vector<IntersectionEvent> tangential;
    std::size_t count() const { return events.size(); }
};

struct CrossingOptions {
    double min_margin = 1e-4;
    /// Self-crossings need |t1 - t2| above this to exclude trivial overlap.
    double t_sep = 0.1;
    bool refine = true;
};

/// Non-owning polyline: node positions, parameters and (optionally) exact
/// tangents d pos / d t, all shifted by `offset`.
struct CurveView {
    std::span<const Vec2> pos;
    std::span<const double> t;
    std::span<const Vec2> vel;
    Vec2 offset{};

    static CurveView of(const Trajectory& tr, Vec2 offset = {}) {
        CurveView v{tr.pos, tr.t, {}, offset};
        if (tr.smooth) v.vel = tr.vel;
        return v;
    }
    std::size_t segments() const { return pos.size() < 2 ? 0 : pos.size() - 1; }
    Vec2 node(std::size_t i) const { return pos[i] + offset; }
    bool smooth() const { return !vel.empty(); }

    Vec2 hermite(std::size_t i, double u) const {
        const double dt = t[i + 1] - t[i];
        const double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * node(i) + (u3 - 2 * u2 + u) * dt * vel[i] + (-2 * u3 + 3 * u2) * node(i + 1) +
               (u3 - u2) * dt * vel[i + 1];
    }
    Vec2 hermite_deriv(std::size_t i, double u) const {
        const double dt = t[i + 1] - t[i];
        const double u2 = u * u;
        return (6 * u2 - 6 * u) * node(i) + (3 * u2 - 4 * u + 1) * dt * vel[i] + (-6 * u2 + 6 * u) * node(i + 1) +
               (3 * u2 - 2 * u) * dt * vel[i + 1];
    }
    double param(std::size_t i, double u) const { return t[i] + u * (t[i + 1] - t[i]); }
};

/// Uniform-grid index over the segments of one curve.
class SegmentIndex {
public:
    explicit SegmentIndex(const CurveView& curve, double cell = 0.0) : curve_(curve) {
        const std::size_t ns = curve.segments();
        if (cell <= 0.0) {
            double total = 0.0;
            for (std::size_t i = 0; i < ns; ++i) total += norm(curve.pos[i + 1] - curve.pos[i]);
            cell = ns ? std::max(2.0 * total / double(ns), 1e-9) : 1.0;
        }
        inv_cell_ = 1.0 / cell;
        entries_.reserve(2 * ns);
        for (std::size_t i = 0; i < ns; ++i) {
            const Vec2 a = curve.pos[i], b = curve.pos[i + 1];
            for_cells(std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y),
                      [&](std::uint64_t k) { entries_.push_back({k, std::uint32_t(i)}); });
        }
        std::sort(entries_.begin(), entries_.end());
        stamp_.assign(ns, std::numeric_limits<std::uint32_t>::max());
    }

    const CurveView& curve() const { return curve_; }

    /// Calls visit(i) once per indexed segment whose cells meet the box
    /// (coordinates relative to the indexed curve without its offset).
    template <class Visit>
    void query(double x0, double x1, double y0, double y1, Visit&& visit) const {
        ++query_id_;
        for_cells(x0, x1, y0, y1, [&](std::uint64_t k) {
            auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{k, 0});
            for (; it != entries_.end() && it->key == k; ++it) {
                if (stamp_[it->seg] == query_id_) continue;
                stamp_[it->seg] = query_id_;
                visit(std::size_t(it->seg));
            }
        });
    }

private:
    struct Entry {
        std::uint64_t key;
        std::uint32_t seg;
        friend bool operator<(const Entry& a, const Entry& b) { return a.key < b.key || (a.key == b.key && a.seg < b.seg); }
    };

    template <class F>
    void for_cells(double x0, double x1, double y0, double y1, F&& f) const {
        const long long ix0 = (long long)std::floor(x0 * inv_cell_), ix1 = (long long)std::floor(x1 * inv_cell_);
        const long long iy0 = (long long)std::floor(y0 * inv_cell_), iy1 = (long long)std::floor(y1 * inv_cell_);
        for (long long ix = ix0; ix <= ix1; ++ix)
            for (long long iy = iy0; iy <= iy1; ++iy)
                f((std::uint64_t(std::uint32_t(ix)) << 32) | std::uint64_t(std::uint32_t(iy)));
    }

    CurveView curve_;
    double inv_cell_ = 1.0;
    std::vector<Entry> entries_;
    mutable std::vector<std::uint32_t> stamp_;
    mutable std::uint32_t query_id_ = 0;
};

namespace detail {

struct RawCrossing {
    std::size_t i, j;  // segments on a and b
    double u, w;       // local parameters
};

inline bool segment_crossing(const Vec2& p, const Vec2& p1, const Vec2& q, const Vec2& q1, bool last_a, bool last_b,
                             double& u, double& w) {
    const Vec2 r = p1 - p, s = q1 - q;
    const double den = cross(r, s);
    if (den == 0.0) return false;
    const Vec2 qp = q - p;
    u = cross(qp, s) / den;
    w = cross(qp, r) / den;
    const bool ua = u >= 0.0 && (last_a ? u <= 1.0 : u < 1.0);
    const bool wb = w >= 0.0 && (last_b ? w <= 1.0 : w < 1.0);
    return ua && wb;
}

/// Newton polish of a crossing on the Hermite interpolants; false if it
/// fails to converge near the linear estimate.
inline bool refine_crossing(const CurveView& a, const CurveView& b, std::size_t i, std::size_t j, double& u,
                            double& w) {
    double uu = u, ww = w;
    for (int it = 0; it < 20; ++it) {
        const Vec2 f = a.hermite(i, uu) - b.hermite(j, ww);
        const Vec2 da = a.hermite_deriv(i, uu), db = b.hermite_deriv(j, ww);
        // Solve [da, -db] (du, dw)^T = -f.
        const double den = cross(da, -db);
        if (den == 0.0) return false;
        const double du = cross(-f, -db) / den;
        const double dw = cross(da, -f) / den;
        uu += du;
        ww += dw;
        if (uu < -0.5 || uu > 1.5 || ww < -0.5 || ww > 1.5) return false;
        if (std::abs(du) < 1e-14 && std::abs(dw) < 1e-14) break;
    }
    u = uu;
    w = ww;
    return true;
}

inline IntersectionEvent make_event(const CurveView& a, const CurveView& b, std::size_t i, std::size_t j, double u,
                                    double w, bool refined) {
    IntersectionEvent e;
    Vec2 ta, tb;
    if (refined) {
        e.point = a.hermite(i, u);
        ta = a.hermite_deriv(i, u);
        tb = b.hermite_deriv(j, w);
    } else {
        e.point = a.node(i) + u * (a.node(i + 1) - a.node(i));
        ta = a.node(i + 1) - a.node(i);
        tb = b.node(j + 1) - b.node(j);
    }
    e.t1 = a.param(i, u);
    e.t2 = b.param(j, w);
    const double c = cross(ta, tb);
    e.sign = c > 0.0 ? 1 : -1;
    e.margin = std::abs(c) / (norm(ta) * norm(tb));
    return e;
}

inline void finish(std::vector<IntersectionEvent>& all, const CrossingOptions& opt, IntersectionReport& out) {
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.t1 < y.t1 || (x.t1 == y.t1 && x.t2 < y.t2); });
    std::vector<IntersectionEvent> uniq;
    for (const auto& e : all) {
        bool dup = false;
        for (auto it = uniq.rbegin(); it != uniq.rend() && e.t1 - it->t1 < 1e-7; ++it)
            if (std::abs(e.t2 - it->t2) < 1e-7) dup = true;
        if (!dup) uniq.push_back(e);
    }
    for (const auto& e : uniq) (e.margin >= opt.min_margin ? out.events : out.tangential).push_back(e);
}

}  // namespace detail

/// All crossings of the indexed curve (first) with `b` (second).
inline IntersectionReport crossings(const SegmentIndex& index, const CurveView& b, const CrossingOptions& opt = {}) {
    const CurveView& a = index.curve();
    std::vector<IntersectionEvent> all;
    const std::size_t na = a.segments(), nb = b.segments();
    const Vec2 rel = b.offset - a.offset;
    for (std::size_t j = 0; j < nb; ++j) {
        const Vec2 q = b.pos[j] + rel, q1 = b.pos[j + 1] + rel;
        index.query(std::min(q.x, q1.x), std::max(q.x, q1.x), std::min(q.y, q1.y), std::max(q.y, q1.y),
                    [&](std::size_t i) {
                        double u, w;
                        if (!detail::segment_crossing(a.pos[i], a.pos[i + 1], q, q1, i + 1 == na, j + 1 == nb, u, w))
                            return;
                        bool refined = false;
                        if (opt.refine && a.smooth() && b.smooth()) refined = detail::refine_crossing(a, b, i, j, u, w);
                        all.push_back(detail::make_event(a, b, i, j, u, w, refined));
                    });
    }
    IntersectionReport out;
    detail::finish(all, opt, out);
    return out;
}

inline IntersectionReport crossings(const CurveView& a, const CurveView& b, const CrossingOptions& opt = {}) {
    return crossings(SegmentIndex(a), b, opt);
}

/// Self-crossings with t1 < t2 and t2 - t1 > opt.t_sep.
inline IntersectionReport self_crossings(const CurveView& a, const CrossingOptions& opt = {}) {
    const SegmentIndex index(a);
    std::vector<IntersectionEvent> all;
    const std::size_t na = a.segments();
    for (std::size_t j = 0; j < na; ++j) {
        const Vec2 q = a.pos[j], q1 = a.pos[j + 1];
        index.query(std::min(q.x, q1.x), std::max(q.x, q1.x), std::min(q.y, q1.y), std::max(q.y, q1.y),
                    [&](std::size_t i) {
                        if (i + 1 >= j) return;
                        double u, w;
                        if (!detail::segment_crossing(a.pos[i], a.pos[i + 1], q, q1, false, j + 1 == na, u, w)) return;
                        bool refined = false;
                        if (opt.refine && a.smooth()) refined = detail::refine_crossing(a, a, i, j, u, w);
                        IntersectionEvent e = detail::make_event(a, a, i, j, u, w, refined);
                        if (e.t2 - e.t1 > opt.t_sep) all.push_back(e);
                    });
    }
    IntersectionReport out;
    detail::finish(all, opt, out);
    return out;
}

/// Euclidean distance from p to the curve (Hermite-refined when smooth).
inline double distance_to_curve(const CurveView& c, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    double best_u = 0.0;
    for (std::size_t i = 0; i < c.segments(); ++i) {
        const Vec2 a = c.node(i), d = c.node(i + 1) - a;
        const double len2 = dot(d, d);
        const double u = len2 > 0.0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
        const double dist = norm(a + u * d - p);
        if (dist < best) best = dist, best_i = i, best_u = u;
    }
    if (!c.smooth() || c.segments() == 0) return best;
    double u = best_u;
    for (int it = 0; it < 20; ++it) {
        const Vec2 h = c.hermite(best_i, u) - p, d = c.hermite_deriv(best_i, u);
        const double step = dot(h, d) / dot(d, d);
        u = std::clamp(u - step, 0.0, 1.0);
        if (std::abs(step) < 1e-14) break;
    }
    return std::min(best, norm(c.hermite(best_i, u) - p));
}

}  // namespace torusflow
