#pragma once

// Curve shortening flow on closed polygonal curves in the cover.
//
// A curve of class (p, q) stores one period of nodes; node i + N is node i
// shifted by (p, q). Each step solves the arclength Laplacian implicitly
// (cyclic tridiagonal, Riemannian edge weights) and adds the Christoffel
// term explicitly, then redistributes the nodes to uniform Riemannian
// arclength.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "torusflow/deck.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/intersections.hpp"
#include "torusflow/metric.hpp"
#include "torusflow/parallel.hpp"

namespace torusflow {

struct ClosedCurve {
    std::vector<Vec2> nodes;
    DeckTransform cls;
    double time = 0.0;
    double length = 0.0;
    std::vector<double> curvature;

    std::size_t size() const { return nodes.size(); }
    bool contractible() const { return cls.trivial(); }

    /// Node with cyclic continuation through the deck class.
    Vec2 node(long long i) const {
        const long long n = (long long)nodes.size();
        long long q = i / n, r = i % n;
        if (r < 0) r += n, --q;
        return nodes[std::size_t(r)] + double(q) * cls.offset();
    }

    static ClosedCurve circle(Vec2 center, double r, std::size_t n) {
        ClosedCurve c;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = kTwoPi * double(i) / double(n);
            c.nodes.push_back(center + r * Vec2{std::cos(a), std::sin(a)});
        }
        return c;
    }
    /// f maps [0, 1) to one period; f(1) must equal f(0) + (p, q).
    static ClosedCurve from_function(DeckTransform cls, std::size_t n, const std::function<Vec2(double)>& f) {
        ClosedCurve c;
        c.cls = cls;
        for (std::size_t i = 0; i < n; ++i) c.nodes.push_back(f(double(i) / double(n)));
        return c;
    }
    static ClosedCurve line(DeckTransform cls, Vec2 base, std::size_t n) {
        const Vec2 d = cls.offset();
        return from_function(cls, n, [&](double u) { return base + u * d; });
    }
};

inline std::vector<double> edge_lengths(const MetricSpec& spec, const ClosedCurve& c) {
    std::vector<double> h(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) h[i] = segment_length(spec, c.node(i), c.node(i + 1));
    return h;
}

inline double curve_length(const MetricSpec& spec, const ClosedCurve& c) {
    double L = 0.0;
    for (double h : edge_lengths(spec, c)) L += h;
    return L;
}

/// One period of the curve (or the closed polygon) as a polyline, extended
/// over periods k0..k1 for non-contractible curves.
inline Trajectory curve_polyline(const ClosedCurve& c, long long k0 = 0, long long k1 = 0) {
    std::vector<Vec2> pts;
    const long long n = (long long)c.size();
    for (long long i = k0 * n; i <= (k1 + 1) * n; ++i) pts.push_back(c.node(i));
    return polyline_trajectory(pts, "curve");
}

/// Transversal self-crossings of the curve on its cylinder (three periods
/// are scanned for non-contractible curves).
inline std::size_t curve_self_crossings(const ClosedCurve& c) {
    CrossingOptions opt;
    opt.t_sep = 0.0;
    opt.min_margin = 0.0;
    if (c.contractible()) {
        const Trajectory poly = curve_polyline(c);
        const double total = poly.t.back();
        std::size_t n = 0;
        for (const auto& e : self_crossings(CurveView::of(poly), opt).events)
            if (!(e.t1 <= 1e-12 * total && e.t2 >= total * (1.0 - 1e-12))) ++n;  // shared closing vertex
        return n;
    }
    const Trajectory poly = curve_polyline(c, -1, 1);
    return self_crossings(CurveView::of(poly), opt).count();
}

inline bool is_embedded(const ClosedCurve& c) { return curve_self_crossings(c) == 0; }

/// Discrete geodesic curvature of the node sequence: fourth-order central
/// differences in the node index give X' and X'', and
/// k = g(X'' + Gamma(X', X'), N) / |X'|_g^2 with N the metric unit normal
/// left of the direction of travel. The tangential part drops out, so the
/// result does not depend on how the nodes are spaced along the curve.
inline std::vector<double> geodesic_curvature(const MetricSpec& spec, const ClosedCurve& c,
                                              double spacing_slack = 2.0) {
    const std::size_t n = c.size();
    if (n < 5) throw DegenerateSpacing("geodesic_curvature: fewer than 5 nodes");
    const std::vector<double> h = edge_lengths(spec, c);
    double mean = 0.0;
    for (double v : h) mean += v;
    mean /= double(n);
    for (double v : h)
        if (!(v > 0.0) || v < mean / spacing_slack || v > mean * spacing_slack)
            throw DegenerateSpacing("geodesic_curvature: edge length " + std::to_string(v) + " against mean " +
                                    std::to_string(mean));
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long long j = (long long)i;
        const Vec2 m2 = c.node(j - 2), m1 = c.node(j - 1), x = c.node(j), p1 = c.node(j + 1), p2 = c.node(j + 2);
        const Vec2 d1 = (8.0 * (p1 - m1) - (p2 - m2)) / 12.0;
        const Vec2 d2 = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * x) / 12.0;
        const MetricValue m = spec.eval(x);
        const Vec2 acc = d2 + christoffel(m).contract(d1, d1);
        const double speed = std::sqrt(m.g.quad(d1));
        k[i] = std::sqrt(m.g.det()) * cross(d1, acc) / (speed * speed * speed);
    }
    return k;
}

namespace detail {

/// Cyclic tridiagonal solve: lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = r[i].
inline std::vector<double> solve_cyclic(const std::vector<double>& lo, const std::vector<double>& di,
                                        const std::vector<double>& up, const std::vector<double>& r) {
    const std::size_t n = di.size();
    const double gamma = -di[0];
    std::vector<double> b(di), u(n, 0.0);
    b[0] -= gamma;
    b[n - 1] -= lo[0] * up[n - 1] / gamma;
    u[0] = gamma;
    u[n - 1] = up[n - 1];
    auto thomas = [&](std::vector<double> d) {
        std::vector<double> cp(n), x(n);
        cp[0] = up[0] / b[0];
        d[0] /= b[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double m = b[i] - lo[i] * cp[i - 1];
            cp[i] = up[i] / m;
            d[i] = (d[i] - lo[i] * d[i - 1]) / m;
        }
        x[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - cp[i] * x[i + 1];
        return x;
    };
    const std::vector<double> y = thomas(r), z = thomas(u);
    const double fact = (y[0] + lo[0] * y[n - 1] / gamma) / (1.0 + z[0] + lo[0] * z[n - 1] / gamma);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - fact * z[i];
    return x;
}

}  // namespace detail

/// Moves the nodes to uniform Riemannian arclength along the cubic Hermite
/// interpolant of the current nodes; node 0 stays fixed.
inline void redistribute(const MetricSpec& spec, ClosedCurve& c, int passes = 2) {
    const std::size_t n = c.size();
    for (int pass = 0; pass < passes; ++pass) {
        const std::vector<double> h = edge_lengths(spec, c);
        std::vector<double> S(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) S[i + 1] = S[i] + h[i];
        const double L = S[n];
        std::vector<Vec2> tan(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double hm = h[(i + n - 1) % n], hp = h[i % n];
            tan[i] = (c.node((long long)i + 1) - c.node((long long)i - 1)) / (hm + hp);
        }
        std::vector<Vec2> out(n);
        out[0] = c.nodes[0];
        std::size_t seg = 0;
        for (std::size_t j = 1; j < n; ++j) {
            const double s = L * double(j) / double(n);
            while (seg + 1 < n && S[seg + 1] < s) ++seg;
            const double d = h[seg], u = (s - S[seg]) / d;
            const double u2 = u * u, u3 = u2 * u;
            out[j] = (2 * u3 - 3 * u2 + 1) * c.node(seg) + (u3 - 2 * u2 + u) * d * tan[seg] +
                     (-2 * u3 + 3 * u2) * c.node(seg + 1) + (u3 - u2) * d * tan[seg + 1];
        }
        c.nodes = std::move(out);
    }
    c.length = curve_length(spec, c);
}

enum class CsfVerdict { shrank_to_point, converged_to_geodesic, budget_exhausted };

inline const char* verdict_name(CsfVerdict v) {
    switch (v) {
        case CsfVerdict::shrank_to_point: return "shrank_to_point";
        case CsfVerdict::converged_to_geodesic: return "converged_to_geodesic";
        default: return "budget_exhausted";
    }
}

struct CsfControls {
    double k_tol = 1e-5;
    double length_tol = 1e-3;
    double max_time = 10.0;
    std::size_t max_steps = 500000;
    double dt_max = 1e-2;
    double dt_growth = 1.25;
    double plateau_rel = 1e-8;
    std::size_t plateau_steps = 100;
    std::size_t embed_check_every = 50;
    int max_halvings = 40;
};

struct CsfLogRow {
    double time;
    double length;
    double max_k;
    double int_k2;  // integral of k^2 ds
    std::size_t nodes;
};

struct CsfOutcome {
    CsfVerdict verdict = CsfVerdict::budget_exhausted;
    ClosedCurve curve;
    double extinction_time = 0.0;
    double final_max_k = 0.0;
    std::vector<CsfLogRow> history;
    std::size_t steps = 0;
    /// Converged to a geodesic in the trivial class.
    bool contractible_geodesic = false;
    /// Largest Euclidean distance of a node from the initial node 0.
    double max_extent = 0.0;
};

using CsfObserver = std::function<void(const ClosedCurve&, std::size_t step)>;

namespace detail {

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline ClosedCurve csf_step(const MetricSpec& spec, const ClosedCurve& c, double dt) {
    const std::size_t n = c.size();
    const std::vector<double> h = edge_lengths(spec, c);
    std::vector<double> lo(n), di(n), up(n), rx(n), ry(n);
    const Vec2 off = c.cls.offset();
    for (std::size_t i = 0; i < n; ++i) {
        const double hm = h[(i + n - 1) % n], hp = h[i];
        const double a = 2.0 / ((hm + hp) * hm), b = 2.0 / ((hm + hp) * hp);
        const Vec2 p = c.node((long long)i - 1), x = c.node(i), q = c.node(i + 1);
        const Vec2 xs = (hm * hm * (q - x) + hp * hp * (x - p)) / (hm * hp * (hm + hp));
        Vec2 r = x + dt * christoffel(spec, x).contract(xs, xs);
        if (i == 0) r -= dt * a * off;
        if (i + 1 == n) r += dt * b * off;
        lo[i] = -dt * a;
        up[i] = -dt * b;
        di[i] = 1.0 + dt * (a + b);
        rx[i] = r.x;
        ry[i] = r.y;
    }
    const std::vector<double> X = solve_cyclic(lo, di, up, rx), Y = solve_cyclic(lo, di, up, ry);
    ClosedCurve out = c;
    for (std::size_t i = 0; i < n; ++i) out.nodes[i] = {X[i], Y[i]};
    return out;
}

inline double int_k2(const std::vector<double>& k, const std::vector<double>& h) {
    const std::size_t n = k.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += k[i] * k[i] * 0.5 * (h[i] + h[(i + n - 1) % n]);
    return s;
}

}  // namespace detail

inline CsfOutcome csf_evolve(const MetricSpec& spec, ClosedCurve c, const CsfControls& ctl = {},
                             const CsfObserver& observer = {}) {
    if (c.size() < 8) throw ValidationError("csf_evolve: need at least 8 nodes");
    const bool was_embedded = is_embedded(c);
    const Vec2 anchor = c.nodes[0];
    redistribute(spec, c);
    CsfOutcome out;
    auto measure = [&](ClosedCurve& cur) {
        cur.curvature = geodesic_curvature(spec, cur);
        const double mk = detail::max_abs(cur.curvature);
        out.history.push_back({cur.time, cur.length, mk, detail::int_k2(cur.curvature, edge_lengths(spec, cur)),
                               cur.size()});
        for (const Vec2& p : cur.nodes) out.max_extent = std::max(out.max_extent, norm(p - anchor));
        return mk;
    };
    double mk = measure(c);
    if (observer) observer(c, 0);
    double hmin = std::numeric_limits<double>::infinity();
    for (double v : edge_lengths(spec, c)) hmin = std::min(hmin, v);
    double dt = std::min(0.2 * hmin * hmin, ctl.dt_max);
    bool first = true;
    for (;;) {
        if (c.length < ctl.length_tol) {
            out.verdict = CsfVerdict::shrank_to_point;
            // Remaining time of a round circle of the same length.
            const double r = c.length / kTwoPi;
            out.extinction_time = c.time + 0.5 * r * r;
            break;
        }
        if (mk < ctl.k_tol && out.history.size() > ctl.plateau_steps) {
            const double past = out.history[out.history.size() - 1 - ctl.plateau_steps].length;
            if (std::abs(past - c.length) <= ctl.plateau_rel * c.length) {
                out.verdict = CsfVerdict::converged_to_geodesic;
                out.contractible_geodesic = c.contractible();
                break;
            }
        }
        if (c.time >= ctl.max_time || out.steps >= ctl.max_steps) break;

        hmin = std::numeric_limits<double>::infinity();
        for (double v : edge_lengths(spec, c)) hmin = std::min(hmin, v);
        if (!first) dt = std::min({ctl.dt_growth * dt, ctl.dt_max, mk > 0.0 ? 0.1 * hmin / mk : ctl.dt_max});
        first = false;
        dt = std::min(dt, ctl.max_time - c.time + 1e-300);

        ClosedCurve next;
        double next_k = 0.0;
        for (int halvings = 0;; ++halvings) {
            if (halvings > ctl.max_halvings)
                throw NumericalBlowup("csf_evolve: curvature blowup at t=" + std::to_string(c.time) +
                                      " without shrinking (max |k| = " + std::to_string(next_k) + ")");
            next = detail::csf_step(spec, c, dt);
            bool finite = true;
            for (const Vec2& p : next.nodes) finite = finite && std::isfinite(p.x) && std::isfinite(p.y);
            if (finite) {
                try {
                    redistribute(spec, next);
                    next.curvature = geodesic_curvature(spec, next);
                    next_k = detail::max_abs(next.curvature);
                    if (next_k <= 1.0 / (10.0 * dt)) break;
                } catch (const DegenerateSpacing&) {
                }
            }
            dt *= 0.5;
        }
        next.time = c.time + dt;
        c = std::move(next);
        ++out.steps;
        mk = measure(c);
        if (observer) observer(c, out.steps);
        if (was_embedded && ctl.embed_check_every && out.steps % ctl.embed_check_every == 0 && !is_embedded(c))
            throw NumericalBlowup("csf_evolve: embedded curve acquired a self-intersection at t=" +
                                  std::to_string(c.time));
    }
    if (was_embedded && !is_embedded(c))
        throw NumericalBlowup("csf_evolve: embedded curve acquired a self-intersection at t=" + std::to_string(c.time));
    out.final_max_k = mk;
    out.curve = std::move(c);
    return out;
}

struct MonotonicityHistory {
    std::vector<double> times;
    std::vector<int> counts;
    bool nonincreasing() const {
        for (std::size_t i = 1; i < counts.size(); ++i)
            if (counts[i] > counts[i - 1]) return false;
        return true;
    }
};

namespace detail {

/// Polyline of the curve covering every lift that can meet `seg`.
inline Trajectory lifts_near(const ClosedCurve& c, const Trajectory& seg) {
    if (c.contractible()) return curve_polyline(c);
    const Vec2 off = c.cls.offset();
    const double len = norm(off);
    const Vec2 u = off / len;
    double a = std::numeric_limits<double>::infinity(), b = -a, lo = a, hi = -a;
    for (const Vec2& p : seg.pos) a = std::min(a, dot(u, p)), b = std::max(b, dot(u, p));
    for (const Vec2& p : c.nodes) lo = std::min(lo, dot(u, p)), hi = std::max(hi, dot(u, p));
    hi = std::max(hi, dot(u, c.nodes[0]) + len);
    const long long k0 = (long long)std::floor((a - hi) / len) - 1, k1 = (long long)std::ceil((b - lo) / len) + 1;
    return curve_polyline(c, k0, k1);
}

}  // namespace detail

/// Crossing counts between the evolving curve and a fixed geodesic segment,
/// sampled every `every` accepted steps.
inline MonotonicityHistory intersection_monotonicity_probe(const MetricSpec& spec, const ClosedCurve& curve0,
                                                           const Trajectory& segment, const CsfControls& ctl = {},
                                                           std::size_t every = 10) {
    MonotonicityHistory hist;
    CrossingOptions opt;
    opt.min_margin = 0.0;
    const CurveView sv = CurveView::of(segment);
    auto sample = [&](const ClosedCurve& c, std::size_t step) {
        if (step % every != 0) return;
        const Trajectory poly = detail::lifts_near(c, segment);
        const CurveView pv = CurveView::of(poly);
        for (const Vec2& e : {segment.pos.front(), segment.pos.back()})
            if (distance_to_curve(pv, e) < 1e-3)
                throw EndpointCollision("monotonicity probe: curve within 1e-3 of a segment endpoint at t=" +
                                        std::to_string(c.time));
        hist.times.push_back(c.time);
        hist.counts.push_back(int(crossings(pv, sv, opt).count()));
    };
    csf_evolve(spec, curve0, ctl, sample);
    return hist;
}

/// First seed (in order) whose flow converges to a closed geodesic in the
/// trivial class.
inline std::optional<ClosedCurve> find_contractible_geodesic(const MetricSpec& spec,
                                                             const std::vector<ClosedCurve>& seeds,
                                                             const CsfControls& ctl = {}) {
    std::vector<std::optional<ClosedCurve>> found(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        if (!seeds[i].contractible()) throw ValidationError("find_contractible_geodesic: seed is not contractible");
        try {
            CsfOutcome o = csf_evolve(spec, seeds[i], ctl);
            if (o.contractible_geodesic) found[i] = std::move(o.curve);
        } catch (const NumericalBlowup&) {
        }
    });
    for (auto& f : found)
        if (f) return f;
    return std::nullopt;
}

inline void write_csf_log_csv(std::ostream& out, const CsfOutcome& o, const std::string& config_hash = "") {
    out << "# verdict=" << verdict_name(o.verdict) << " config_hash=" << config_hash << "\n";
    out << "flow_time,length,max_k,node_count\n";
    out.precision(12);
    for (const auto& r : o.history) out << r.time << ',' << r.length << ',' << r.max_k << ',' << r.nodes << '\n';
}

inline void write_curve_csv(std::ostream& out, const ClosedCurve& c, const std::string& config_hash = "") {
    out << "# deck_class=" << c.cls.key() << " length=" << c.length << " flow_time=" << c.time
        << " config_hash=" << config_hash << "\n";
    out << "i,x,y\n";
    out.precision(17);
    for (std::size_t i = 0; i < c.size(); ++i) out << i << ',' << c.nodes[i].x << ',' << c.nodes[i].y << '\n';
}

}  // namespace torusflow
