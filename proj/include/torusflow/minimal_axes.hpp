#pragma once

// Minimal axes: shortest closed geodesics per translation class, found by
// curve shortening from straight representatives and polished by shooting
// on the closing condition. Includes the grid shortest-path oracle, the
// foliation check and the two-pronged flatness test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "torusflow/cover.hpp"
#include "torusflow/curve_shortening.hpp"
#include "torusflow/deck.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/metric.hpp"
#include "torusflow/parallel.hpp"

namespace torusflow {

struct Axis {
    DeckTransform cls;
    ClosedCurve curve;    // nodes at uniform arclength along one period
    UnitTangent launch;   // polished initial tangent
    double length = 0.0;  // period
    Trajectory period;    // one period re-integrated from `launch`
    double closing_residual = 0.0;
    double max_k = 0.0;
    double oracle_length = 0.0;  // 0 when not computed
    double oracle_gap = 0.0;
    bool primitive() const { return cls.primitive(); }
};

struct AxisOptions {
    std::size_t nodes = 128;
    /// Transverse seed offsets (fractions of the lattice spacing) tried by
    /// curve shortening; the shortest result is polished.
    std::vector<double> seed_offsets{0.137, 0.387, 0.637, 0.887};
    CsfControls csf{};
    double accept_k = 1e-2;  // CSF curvature needed before shooting
    double closing_tol = 1e-10;
    bool oracle = false;
    int oracle_grid = 512;
    IntegrationOptions flow{};
};

/// Lattice vector e with det[tau, e] = 1: translating a line of direction
/// tau by e gives the next parallel lattice line.
inline DeckTransform complement(const DeckTransform& tau) {
    if (!tau.primitive()) throw PrimitiveRequired("complement: class " + tau.key() + " is not primitive");
    // Extended Euclid for p b - q a = 1.
    long long old_r = tau.m, r = tau.n, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        const long long qq = old_r / r;
        std::tie(old_r, r) = std::make_pair(r, old_r - qq * r);
        std::tie(old_s, s) = std::make_pair(s, old_s - qq * s);
        std::tie(old_t, t) = std::make_pair(t, old_t - qq * t);
    }
    // old_s * m + old_t * n = old_r = +-1
    const long long sg = old_r > 0 ? 1 : -1;
    return {-old_t * sg, old_s * sg};
}

// ---------------------------------------------------------------------------
// Grid oracle

struct OracleResult {
    double length = 0.0;
    double start_offset = 0.0;  // along the complement vector, in [0, 1)
};

/// Shortest closed curve in class tau on an n x n grid: the metric is pulled
/// back by the unimodular map u -> u1 tau + u2 e, so the class becomes
/// (1, 0); paths run from (0, j) to (n, j) on an 8-connected graph with
/// midpoint Riemannian edge weights, minimized over the start row j.
inline OracleResult grid_oracle_length(const MetricSpec& spec, const DeckTransform& tau, int n = 512) {
    const DeckTransform e = complement(tau);
    const Vec2 a1 = tau.offset(), a2 = e.offset();
    auto to_x = [&](double u1, double u2) { return u1 * a1 + u2 * a2; };
    const double h = 1.0 / n;
    // Edge weights from node (i, j) in directions E, N, NE, SE (periodic).
    const std::size_t nn = std::size_t(n) * std::size_t(n);
    std::vector<float> wE(nn), wN(nn), wNE(nn), wSE(nn);
    parallel_for(std::size_t(n), [&](std::size_t i) {
        for (int j = 0; j < n; ++j) {
            const double u1 = double(i) * h, u2 = double(j) * h;
            auto w = [&](double d1, double d2) {
                const Vec2 mid = to_x(u1 + 0.5 * d1, u2 + 0.5 * d2);
                return float(std::sqrt(spec.metric_at(mid).quad(d1 * a1 + d2 * a2)));
            };
            const std::size_t k = i * std::size_t(n) + std::size_t(j);
            wE[k] = w(h, 0);
            wN[k] = w(0, h);
            wNE[k] = w(h, h);
            wSE[k] = w(h, -h);
        }
    });
    auto wrap = [n](long long v) { return std::size_t(((v % n) + n) % n); };
    auto idx = [&](long long i, long long j) { return wrap(i) * std::size_t(n) + wrap(j); };

    const int margin_x = n / 8, half_y = n / 2;
    const int W = n + 2 * margin_x + 1, H = 2 * half_y + 1;
    auto run = [&](int j0) {
        // Local node (a, b) is grid (a - margin_x, j0 + b - half_y).
        std::vector<double> dist(std::size_t(W) * H, std::numeric_limits<double>::infinity());
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        const int src = margin_x * H + half_y, dst = (margin_x + n) * H + half_y;
        dist[src] = 0.0;
        pq.push({0.0, src});
        while (!pq.empty()) {
            const auto [d, v] = pq.top();
            pq.pop();
            if (d > dist[v]) continue;
            if (v == dst) return d;
            const int a = v / H, b = v % H;
            const long long gi = a - margin_x, gj = j0 + b - half_y;
            auto relax = [&](int da, int db, double w) {
                const int a2 = a + da, b2 = b + db;
                if (a2 < 0 || a2 >= W || b2 < 0 || b2 >= H) return;
                const int u = a2 * H + b2;
                if (d + w < dist[u]) {
                    dist[u] = d + w;
                    pq.push({d + w, u});
                }
            };
            relax(1, 0, wE[idx(gi, gj)]);
            relax(-1, 0, wE[idx(gi - 1, gj)]);
            relax(0, 1, wN[idx(gi, gj)]);
            relax(0, -1, wN[idx(gi, gj - 1)]);
            relax(1, 1, wNE[idx(gi, gj)]);
            relax(-1, -1, wNE[idx(gi - 1, gj - 1)]);
            relax(1, -1, wSE[idx(gi, gj)]);
            relax(-1, 1, wSE[idx(gi - 1, gj + 1)]);
        }
        return std::numeric_limits<double>::infinity();
    };
    const int coarse = std::max(1, n / 32);
    std::vector<int> rows;
    for (int j = 0; j < n; j += coarse) rows.push_back(j);
    std::vector<double> lens(rows.size());
    parallel_for(rows.size(), [&](std::size_t k) { lens[k] = run(rows[k]); });
    const std::size_t best = std::size_t(std::min_element(lens.begin(), lens.end()) - lens.begin());
    OracleResult res{lens[best], double(rows[best]) * h};
    std::vector<int> fine;
    for (int dj = -coarse + 1; dj < coarse; ++dj)
        if (dj != 0) fine.push_back(int(wrap(rows[best] + dj)));
    std::vector<double> fl(fine.size());
    parallel_for(fine.size(), [&](std::size_t k) { fl[k] = run(fine[k]); });
    for (std::size_t k = 0; k < fine.size(); ++k)
        if (fl[k] < res.length) res = {fl[k], double(fine[k]) * h};
    return res;
}

// ---------------------------------------------------------------------------
// Shooting

namespace detail {

struct ReturnHit {
    double time;
    double lambda;  // transverse coordinate of the hit
    double angle;   // Euclidean velocity angle at the hit
    UnitTangent state;
};

/// First crossing of the geodesic from v with the line Q + lambda n
/// (crossing in direction u), searched up to time T.
inline std::optional<ReturnHit> first_return(const MetricSpec& spec, const UnitTangent& v, const Vec2& Q,
                                             const Vec2& u, const Vec2& n, double T, IntegrationOptions opt) {
    opt.sample_dt = std::min(opt.sample_dt, 0.02);
    const Trajectory tr = integrate(spec, v, T, opt);
    const double target = dot(Q, u);
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const double g0 = dot(tr.pos[i - 1], u) - target, g1 = dot(tr.pos[i], u) - target;
        if (g0 < 0.0 && g1 >= 0.0) {
            UnitTangent s = tr.tangent(i - 1);
            double t = tr.t[i - 1];
            double g = g0;
            for (int it = 0; it < 30 && std::abs(g) > 1e-15; ++it) {
                const double dt = -g / dot(s.velocity, u);
                s = flow_map(spec, s, dt, opt);
                t += dt;
                g = dot(s.base, u) - target;
            }
            return ReturnHit{t, dot(s.base - Q, n), std::atan2(s.velocity.y, s.velocity.x), s};
        }
    }
    return std::nullopt;
}

inline double wrap_angle(double a) {
    a = std::fmod(a + kTwoPi * 0.5, kTwoPi);
    if (a < 0) a += kTwoPi;
    return a - kTwoPi * 0.5;
}

}  // namespace detail

/// Polishes a near-closed geodesic starting at P with Euclidean angle theta
/// into an axis of class tau. Unknowns are the transverse offset of the
/// start and the launch angle; the Jacobian of the return map is taken by
/// finite differences, and rank-deficient steps use the pseudo-inverse.
inline Axis shoot_axis(const MetricSpec& spec, const DeckTransform& tau, const Vec2& P, double theta,
                       double length_guess, const AxisOptions& opt = {}) {
    const Vec2 u = normalized(tau.offset()), nrm = perp(u);
    const Vec2 Q = P + tau.offset();
    const double T = 1.5 * length_guess + 1.0;
    auto F = [&](double sigma, double th, detail::ReturnHit* hit_out) -> std::optional<std::array<double, 2>> {
        const UnitTangent v = UnitTangent::at_angle(spec, P + sigma * nrm, th);
        const auto hit = detail::first_return(spec, v, Q, u, nrm, T, opt.flow);
        if (!hit) return std::nullopt;
        if (hit_out) *hit_out = *hit;
        return std::array<double, 2>{hit->lambda - sigma, detail::wrap_angle(hit->angle - th)};
    };
    double sigma = 0.0, th = theta;
    detail::ReturnHit hit{};
    auto f = F(sigma, th, &hit);
    if (!f) throw NotConverged("shoot_axis: geodesic does not return to the translated transversal");
    auto fnorm = [](const std::array<double, 2>& x) { return std::hypot(x[0], x[1]); };
    for (int it = 0; it < 40 && fnorm(*f) > opt.closing_tol; ++it) {
        const double hs = 1e-7;
        const auto fs = F(sigma + hs, th, nullptr), ft = F(sigma, th + hs, nullptr);
        if (!fs || !ft) throw NotConverged("shoot_axis: return map undefined near the iterate");
        const double j11 = ((*fs)[0] - (*f)[0]) / hs, j21 = ((*fs)[1] - (*f)[1]) / hs;
        const double j12 = ((*ft)[0] - (*f)[0]) / hs, j22 = ((*ft)[1] - (*f)[1]) / hs;
        // Pseudo-inverse of J applied to -F via J^T J.
        const double a = j11 * j11 + j21 * j21, b = j11 * j12 + j21 * j22, c = j12 * j12 + j22 * j22;
        const double r1 = -(j11 * (*f)[0] + j21 * (*f)[1]), r2 = -(j12 * (*f)[0] + j22 * (*f)[1]);
        const double tr = a + c, det = a * c - b * b;
        double ds, dth;
        if (det > 1e-12 * tr * tr) {
            ds = (c * r1 - b * r2) / det;
            dth = (a * r2 - b * r1) / det;
        } else {
            // Rank one: project onto the leading eigenvector.
            const double lam = 0.5 * (tr + std::sqrt(std::max(0.0, (a - c) * (a - c) + 4 * b * b)));
            if (lam <= 0.0) break;
            Vec2 ev = std::abs(b) > 0.0 ? normalized(Vec2{b, lam - a}) : (a >= c ? Vec2{1, 0} : Vec2{0, 1});
            const double proj = (ev.x * r1 + ev.y * r2) / (lam * lam);
            ds = proj * lam * ev.x;
            dth = proj * lam * ev.y;
        }
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 12; ++ls, step *= 0.5) {
            detail::ReturnHit h2{};
            const auto f2 = F(sigma + step * ds, th + step * dth, &h2);
            if (f2 && fnorm(*f2) < fnorm(*f)) {
                sigma += step * ds;
                th += step * dth;
                f = f2;
                hit = h2;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (fnorm(*f) > 1e-8)
        throw NotConverged("shoot_axis: closing residual " + std::to_string(fnorm(*f)) + " for class " + tau.key());
    Axis ax;
    ax.cls = tau;
    ax.launch = UnitTangent::at_angle(spec, P + sigma * nrm, th);
    ax.length = hit.time;
    IntegrationOptions io = opt.flow;
    io.sample_dt = std::min(io.sample_dt, ax.length / 256.0);
    ax.period = integrate(spec, ax.launch, ax.length, io);
    const UnitTangent end = flow_map(spec, ax.launch, ax.length, opt.flow);
    ax.closing_residual = std::max(norm(end.base - (ax.launch.base + tau.offset())),
                                   norm(end.velocity - ax.launch.velocity));
    // Representative closed curve: nodes at uniform arclength along the period.
    io.sample_dt = ax.length / double(opt.nodes);
    const Trajectory nodes = integrate(spec, ax.launch, ax.length, io);
    ax.curve.cls = tau;
    ax.curve.nodes.assign(nodes.pos.begin(), nodes.pos.begin() + std::ptrdiff_t(opt.nodes));
    ax.curve.length = curve_length(spec, ax.curve);
    ax.curve.curvature = geodesic_curvature(spec, ax.curve);
    ax.max_k = detail::max_abs(ax.curve.curvature);
    return ax;
}

/// Axis from one straight seed line through `base`.
inline Axis axis_from_seed(const MetricSpec& spec, const DeckTransform& tau, const Vec2& base,
                           const AxisOptions& opt = {}) {
    const CsfOutcome o = csf_evolve(spec, ClosedCurve::line(tau, base, opt.nodes), opt.csf);
    if (o.verdict == CsfVerdict::shrank_to_point)
        throw NotConverged("axis_from_seed: non-contractible curve shrank");
    if (o.final_max_k > opt.accept_k)
        throw NotConverged("axis_from_seed: curve shortening stalled at max |k| = " + std::to_string(o.final_max_k));
    const Vec2 P = o.curve.node(0), d = o.curve.node(1) - o.curve.node(-1);
    return shoot_axis(spec, tau, P, std::atan2(d.y, d.x), o.curve.length, opt);
}

inline Axis find_minimal_axis(const MetricSpec& spec, const DeckTransform& tau, const AxisOptions& opt = {}) {
    if (tau.trivial()) throw ValidationError("find_minimal_axis: class must be nontrivial");
    if (!tau.primitive()) throw PrimitiveRequired("find_minimal_axis: class " + tau.key() + " is not primitive");
    const Vec2 e = complement(tau).offset();
    std::vector<std::optional<Axis>> found(opt.seed_offsets.size());
    std::vector<std::string> errors(found.size());
    parallel_for(found.size(), [&](std::size_t i) {
        try {
            found[i] = axis_from_seed(spec, tau, opt.seed_offsets[i] * e, opt);
        } catch (const NumericalError& ex) {
            errors[i] = ex.what();
        }
    });
    std::optional<Axis> best;
    for (auto& f : found)
        if (f && (!best || f->length < best->length)) best = std::move(f);
    if (!best) throw NotConverged("find_minimal_axis: no seed converged for class " + tau.key() + ": " + errors[0]);
    if (opt.oracle) {
        best->oracle_length = grid_oracle_length(spec, tau, opt.oracle_grid).length;
        best->oracle_gap = std::abs(best->length - best->oracle_length) / best->oracle_length;
    }
    return *best;
}

/// Width of the thinnest slab in the class direction containing one period.
inline double line_deviation(const Axis& axis) {
    const Vec2 nrm = perp(normalized(axis.cls.offset()));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Vec2& p : axis.period.pos) {
        const double d = dot(nrm, p);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return hi - lo;
}

inline Axis translate_axis(const Axis& axis, const DeckTransform& t) {
    Axis out = axis;
    const Vec2 o = t.offset();
    for (Vec2& p : out.curve.nodes) p += o;
    out.launch.base += o;
    out.period = apply_deck(t, axis.period);
    return out;
}

/// Axis trajectory extended over periods k0..k1 (by deck translation).
inline Trajectory axis_polyline(const Axis& axis, long long k0, long long k1) {
    Trajectory out;
    out.metric_name = axis.period.metric_name;
    out.smooth = axis.period.smooth;
    for (long long k = k0; k <= k1; ++k) {
        const Vec2 o = axis.cls.power(k).offset();
        const double t0 = double(k) * axis.length;
        for (std::size_t i = (k == k0 ? 0 : 1); i < axis.period.size(); ++i) {
            out.t.push_back(t0 + axis.period.t[i]);
            out.s.push_back(t0 + axis.period.s[i]);
            out.pos.push_back(axis.period.pos[i] + o);
            out.vel.push_back(axis.period.vel[i]);
        }
    }
    if (!out.pos.empty()) out.initial = {out.pos.front(), out.vel.front()};
    return out;
}

// ---------------------------------------------------------------------------
// Foliation

struct FoliationReport {
    DeckTransform cls;
    int samples = 0;
    std::vector<Axis> axes;            // minimal axes kept, sorted by position
    std::vector<double> positions;     // normalized transverse position in [0, 1)
    std::vector<int> cluster_of;       // cluster index per kept axis
    int clusters = 0;
    double max_gap = 0.0;              // normalized by the lattice spacing
    int gap_after = -1;                // cluster index on the low side of the widest gap
    std::vector<std::string> failed;  // seeds excluded, with reasons
    int ordering_violations = 0;       // transversal crossings between kept axes
    bool foliates() const { return max_gap < 2.0 / samples; }
};

namespace detail {

inline double axis_position(const Axis& a, const Vec2& e) {
    // Coordinate along e of the mean node, modulo the lattice spacing.
    const Vec2 u = normalized(a.cls.offset());
    const Vec2 nrm = perp(u);
    double m = 0.0;
    for (const Vec2& p : a.period.pos) m += dot(nrm, p);
    m /= double(a.period.size());
    const double spacing = dot(nrm, e);
    double s = m / spacing;
    s -= std::floor(s);
    return s;
}

inline double axis_hausdorff(const Axis& a, const Axis& b, const Vec2& e) {
    // Align b onto the lattice line nearest a, then measure both ways.
    const double pa = [&] {
        const Vec2 nrm = perp(normalized(a.cls.offset()));
        double m = 0.0;
        for (const Vec2& p : a.period.pos) m += dot(nrm, p);
        return m / double(a.period.size());
    }();
    const Vec2 nrm = perp(normalized(b.cls.offset()));
    double pb = 0.0;
    for (const Vec2& p : b.period.pos) pb += dot(nrm, p);
    pb /= double(b.period.size());
    const long long k = std::llround((pa - pb) / dot(nrm, e));
    const Axis bb = translate_axis(b, {k * (long long)std::llround(e.x), k * (long long)std::llround(e.y)});
    const Trajectory la = axis_polyline(a, -2, 2), lb = axis_polyline(bb, -2, 2);
    double h = 0.0;
    for (std::size_t i = 0; i < a.period.size(); i += 4) h = std::max(h, distance_to_curve(CurveView::of(lb), a.period.pos[i]));
    for (std::size_t i = 0; i < bb.period.size(); i += 4) h = std::max(h, distance_to_curve(CurveView::of(la), bb.period.pos[i]));
    return h;
}

}  // namespace detail

inline FoliationReport foliation_check(const MetricSpec& spec, const DeckTransform& tau, int samples,
                                       AxisOptions opt = {}, double cluster_tol = 1e-3,
                                       double length_slack = 1e-6) {
    if (!tau.primitive()) throw PrimitiveRequired("foliation_check: class " + tau.key() + " is not primitive");
    if (samples < 2) throw ValidationError("foliation_check: need at least 2 samples");
    const Vec2 e = complement(tau).offset();
    std::vector<std::optional<Axis>> got(static_cast<std::size_t>(samples));
    std::vector<std::string> why(got.size());
    parallel_for(got.size(), [&](std::size_t j) {
        try {
            got[j] = axis_from_seed(spec, tau, (double(j) + 0.5) / samples * e, opt);
        } catch (const NumericalError& ex) {
            why[j] = ex.what();
        }
    });
    FoliationReport rep;
    rep.cls = tau;
    rep.samples = samples;
    double lmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < got.size(); ++j) {
        if (got[j]) lmin = std::min(lmin, got[j]->length);
        else rep.failed.push_back("seed " + std::to_string(j) + ": " + why[j]);
    }
    for (auto& g : got)
        if (g && g->length <= lmin * (1.0 + length_slack) + 1e-12) rep.axes.push_back(std::move(*g));
    if (rep.axes.empty()) throw NotConverged("foliation_check: no seed converged for class " + tau.key());
    for (const Axis& a : rep.axes) rep.positions.push_back(detail::axis_position(a, e));
    // Sort axes by position.
    std::vector<std::size_t> ord(rep.axes.size());
    for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return rep.positions[a] < rep.positions[b]; });
    std::vector<Axis> axes;
    std::vector<double> pos;
    for (std::size_t i : ord) axes.push_back(rep.axes[i]), pos.push_back(rep.positions[i]);
    rep.axes = std::move(axes);
    rep.positions = std::move(pos);
    // Greedy clustering of neighbors; the wrap-around pair is merged last.
    std::vector<std::size_t> rep_of;  // representative axis per cluster
    rep.cluster_of.assign(rep.axes.size(), 0);
    for (std::size_t i = 0; i < rep.axes.size(); ++i) {
        if (!rep_of.empty() && detail::axis_hausdorff(rep.axes[rep_of.back()], rep.axes[i], e) <= cluster_tol) {
            rep.cluster_of[i] = int(rep_of.size()) - 1;
            continue;
        }
        rep_of.push_back(i);
        rep.cluster_of[i] = int(rep_of.size()) - 1;
    }
    if (rep_of.size() > 1 && detail::axis_hausdorff(rep.axes[rep_of.front()], rep.axes[rep_of.back()], e) <= cluster_tol) {
        for (int& c : rep.cluster_of)
            if (c == int(rep_of.size()) - 1) c = 0;
        rep_of.pop_back();
    }
    rep.clusters = int(rep_of.size());
    // Cluster positions: representative's; gaps cyclic.
    std::vector<double> cp;
    for (std::size_t r : rep_of) cp.push_back(rep.positions[r]);
    if (cp.size() == 1) {
        rep.max_gap = 1.0;
        rep.gap_after = 0;
    } else {
        for (std::size_t i = 0; i < cp.size(); ++i) {
            const double g = i + 1 < cp.size() ? cp[i + 1] - cp[i] : cp[0] + 1.0 - cp[i];
            if (g > rep.max_gap) rep.max_gap = g, rep.gap_after = int(i);
        }
    }
    // Distinct minimal axes must not cross.
    for (std::size_t a = 0; a < rep_of.size(); ++a)
        for (std::size_t b = a + 1; b < rep_of.size(); ++b) {
            const Trajectory pa = axis_polyline(rep.axes[rep_of[a]], -2, 2), pb = axis_polyline(rep.axes[rep_of[b]], -2, 2);
            rep.ordering_violations += int(crossings(CurveView::of(pa), CurveView::of(pb)).count());
        }
    return rep;
}

// ---------------------------------------------------------------------------
// Flatness

struct FlatnessReport {
    // Curvature prong.
    double max_abs_curvature = 0.0;
    Vec2 curvature_witness;
    bool curvature_flat = false;
    // Axis prong.
    int class_radius = 0;
    std::vector<DeckTransform> classes_searched;
    std::vector<std::string> intersection_witnesses;  // "class vs translate: count"
    std::vector<std::string> gap_witnesses;           // "class: max gap"
    std::vector<std::string> failures;
    bool axis_flat = false;
    bool disagreement() const { return curvature_flat != axis_flat; }
    bool flat_consistent() const { return curvature_flat && axis_flat; }
};

inline FlatnessReport flatness_test(const MetricSpec& spec, int class_radius = 1, int fiber_samples = 8,
                                    const AxisOptions& opt = {}, int curvature_grid = 256) {
    FlatnessReport rep;
    const CurvatureExtremum ce = max_abs_curvature(spec, curvature_grid);
    rep.max_abs_curvature = ce.max_abs;
    rep.curvature_witness = ce.where;
    rep.curvature_flat = ce.max_abs < 1e-9;
    rep.class_radius = class_radius;
    for (const DeckTransform& tau : primitive_classes(class_radius)) {
        rep.classes_searched.push_back(tau);
        try {
            const FoliationReport fol = foliation_check(spec, tau, fiber_samples, opt);
            if (!fol.foliates())
                rep.gap_witnesses.push_back(tau.key() + ": max gap " + std::to_string(fol.max_gap));
            const Axis& ax = fol.axes.front();
            const Trajectory line = axis_polyline(ax, -3, 3);
            for (long long m = -class_radius; m <= class_radius; ++m)
                for (long long n = -class_radius; n <= class_radius; ++n) {
                    const DeckTransform t{m, n};
                    if (t.trivial() || cross(t.offset(), tau.offset()) == 0.0) continue;
                    const std::size_t c = translate_intersections(line, t).count();
                    if (c > 0) rep.intersection_witnesses.push_back(tau.key() + " vs " + t.key() + ": " + std::to_string(c));
                }
        } catch (const NumericalError& ex) {
            rep.failures.push_back(tau.key() + ": " + ex.what());
        }
    }
    rep.axis_flat = rep.intersection_witnesses.empty() && rep.gap_witnesses.empty();
    return rep;
}

}  // namespace torusflow
