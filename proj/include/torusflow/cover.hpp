#pragma once

// Universal-cover geometry of geodesics: deck translates, crossings with
// translates, the finite-horizon estimate of I(c), asymptotic directions and
// rotation numbers, Euclidean strips, and the loop/fundamental-configuration
// detectors.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torusflow/deck.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/intersections.hpp"

namespace torusflow {

inline Trajectory apply_deck(const DeckTransform& tau, const Trajectory& tr) {
    Trajectory out = tr;
    if (tau.trivial()) return out;
    const Vec2 o = tau.offset();
    for (Vec2& p : out.pos) p += o;
    out.initial.base += o;
    return out;
}

inline IntersectionReport self_intersections(const Trajectory& tr, const CrossingOptions& opt = {}) {
    return self_crossings(CurveView::of(tr), opt);
}

/// Crossings of c with tau c; t1 is the parameter on c, t2 on tau c.
inline IntersectionReport translate_intersections(const Trajectory& tr, const DeckTransform& tau,
                                                  const CrossingOptions& opt = {}) {
    return crossings(CurveView::of(tr), CurveView::of(tr, tau.offset()), opt);
}

// ---------------------------------------------------------------------------
// I(c)

struct ClassHistory {
    DeckTransform rep;
    /// counts[k-1][h]: crossings of c with (k rep) c up to horizon ladder[h].
    /// Powers -k give the same counts, since c and (-k rep) c are the
    /// (-k rep)-translates of (k rep) c and c.
    std::vector<std::vector<int>> counts;
    bool growing = false;
};

struct IntersectionSetEstimate {
    std::vector<double> ladder;
    int class_radius = 0;
    std::vector<ClassHistory> classes;

    int growing_count() const {
        int n = 0;
        for (const auto& c : classes) n += c.growing ? 1 : 0;
        return n;
    }
    std::vector<DeckTransform> growing_classes() const {
        std::vector<DeckTransform> out;
        for (const auto& c : classes)
            if (c.growing) out.push_back(c.rep);
        return out;
    }
};

/// Counts are accumulated from one pass at the longest horizon: a crossing
/// at (t1, t2) belongs to every horizon H >= max(t1, t2). A class grows when
/// some power's count increases strictly over the final three horizons.
inline IntersectionSetEstimate estimate_I_set(const Trajectory& tr, int class_radius = 3,
                                              std::vector<double> ladder = {100.0, 200.0, 400.0},
                                              const CrossingOptions& opt = {}) {
    if (ladder.empty()) throw ValidationError("estimate_I_set: empty horizon ladder");
    std::sort(ladder.begin(), ladder.end());
    if (tr.horizon() + 1e-9 < ladder.back())
        throw HorizonTooShort("estimate_I_set: trajectory horizon " + std::to_string(tr.horizon()) +
                              " below ladder maximum " + std::to_string(ladder.back()));
    const Trajectory c = tr.truncated(ladder.back());
    const SegmentIndex index(CurveView::of(c));
    IntersectionSetEstimate est;
    est.ladder = ladder;
    est.class_radius = class_radius;
    for (const DeckTransform& rep : primitive_classes(class_radius)) {
        ClassHistory h;
        h.rep = rep;
        for (int k = 1; k <= class_radius; ++k) {
            const IntersectionReport r = crossings(index, CurveView::of(c, rep.power(k).offset()), opt);
            std::vector<int> counts(ladder.size(), 0);
            for (const auto& e : r.events)
                for (std::size_t i = 0; i < ladder.size(); ++i)
                    if (std::max(e.t1, e.t2) <= ladder[i]) ++counts[i];
            if (ladder.size() >= 3) {
                const std::size_t n = ladder.size();
                if (counts[n - 3] < counts[n - 2] && counts[n - 2] < counts[n - 1]) h.growing = true;
            }
            h.counts.push_back(std::move(counts));
        }
        est.classes.push_back(std::move(h));
    }
    return est;
}

// ---------------------------------------------------------------------------
// Directions

/// Point of P^1(R) = R u {inf}; infinity is a tag, never a float sentinel.
struct RotationNumber {
    bool infinite = false;
    double slope = 0.0;

    static RotationNumber of(const Vec2& d) {
        if (d.x == 0.0) return {true, 0.0};
        return {false, d.y / d.x};
    }
    /// A unit vector whose projection is this value (x >= 0).
    Vec2 direction() const { return infinite ? Vec2{0.0, 1.0} : normalized(Vec2{1.0, slope}); }
    std::string str() const { return infinite ? "inf" : std::to_string(slope); }
    friend bool operator==(const RotationNumber&, const RotationNumber&) = default;
};

struct DirectionEstimate {
    Vec2 direction;
    RotationNumber rho;
    /// Largest angle between c(t) - c(0) and the direction over the final 20%.
    double diagnostic = 0.0;
    double horizon = 0.0;
};

/// delta(c) estimated from the displacement between the mean positions over
/// the first and last fifth of the samples; displacement from c(0) makes
/// the estimate independent of the chosen lift.
inline DirectionEstimate asymptotic_direction(const Trajectory& tr) {
    if (tr.size() < 10) throw NotEscaping("asymptotic_direction: too few samples");
    const Vec2 origin = tr.pos.front();
    if (norm(tr.pos.back() - origin) < 10.0)
        throw NotEscaping("asymptotic_direction: |c(T) - c(0)| = " + std::to_string(norm(tr.pos.back() - origin)) +
                          " < 10");
    const std::size_t n = tr.size();
    const std::size_t w = std::max<std::size_t>(1, n / 5);
    Vec2 head{}, tail{};
    for (std::size_t i = 0; i < w; ++i) {
        head += tr.pos[i] - origin;
        tail += tr.pos[n - w + i] - origin;
    }
    DirectionEstimate est;
    est.direction = normalized(tail - head);
    est.rho = RotationNumber::of(est.direction);
    est.horizon = tr.horizon();
    for (std::size_t i = n - w; i < n; ++i) {
        const Vec2 d = tr.pos[i] - origin;
        if (norm(d) > 0.0) est.diagnostic = std::max(est.diagnostic, angle_between(d, est.direction));
    }
    return est;
}

struct AntisymmetryCheck {
    double residual = 0.0;  // angle between delta(c+) and -delta(c-)
    DirectionEstimate forward;
    DirectionEstimate backward;
};

inline AntisymmetryCheck check_direction_antisymmetry(const MetricSpec& spec, const UnitTangent& v, double T,
                                                      IntegrationOptions opts = {}) {
    opts.sample_dt = std::max(opts.sample_dt, 0.05);
    AntisymmetryCheck out;
    out.forward = asymptotic_direction(integrate(spec, v, T, opts));
    out.backward = asymptotic_direction(integrate(spec, v.reversed(), T, opts));
    out.residual = angle_between(out.forward.direction, -out.backward.direction);
    return out;
}

struct Strip {
    Vec2 direction;
    /// Signed distances of the bounding lines from the origin along the
    /// left normal of `direction`.
    double lower = 0.0;
    double upper = 0.0;
    double width() const { return upper - lower; }
};

inline Strip fit_strip(const Trajectory& tr, const Vec2& direction) {
    Strip s;
    s.direction = normalized(direction);
    const Vec2 nrm = perp(s.direction);
    s.lower = std::numeric_limits<double>::infinity();
    s.upper = -std::numeric_limits<double>::infinity();
    for (const Vec2& p : tr.pos) {
        const double d = dot(nrm, p);
        s.lower = std::min(s.lower, d);
        s.upper = std::max(s.upper, d);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Configuration detectors

struct TwoLoopWitness {
    double t1, t2, t3, t4;
};

/// First pair of self-crossings c(t1) = c(t2), c(t3) = c(t4) with
/// t1 < t2 < t3 < t4. Nested or overlapping pairs do not qualify.
inline std::optional<TwoLoopWitness> detect_two_loop(const std::vector<IntersectionEvent>& events) {
    std::optional<TwoLoopWitness> best;
    for (std::size_t a = 0; a < events.size(); ++a) {
        const double t1 = std::min(events[a].t1, events[a].t2), t2 = std::max(events[a].t1, events[a].t2);
        if (best && t1 >= best->t1) break;
        for (std::size_t b = 0; b < events.size(); ++b) {
            const double t3 = std::min(events[b].t1, events[b].t2), t4 = std::max(events[b].t1, events[b].t2);
            if (t1 < t2 && t2 < t3 && t3 < t4) {
                if (!best || t1 < best->t1 || (t1 == best->t1 && t3 < best->t3)) best = TwoLoopWitness{t1, t2, t3, t4};
            }
        }
    }
    return best;
}

inline std::optional<TwoLoopWitness> detect_two_loop(const Trajectory& tr, const CrossingOptions& opt = {}) {
    return detect_two_loop(self_intersections(tr, opt).events);
}

struct FundamentalConfiguration {
    bool found = false;
    std::vector<IntersectionEvent> c1_crosses_eta_alpha;
    std::vector<IntersectionEvent> c2_crosses_eta_inv_alpha;
    std::string reason;
};

/// Two segments c1, c2 with endpoints on the axis alpha and interiors off it,
/// c1 crossing eta alpha and c2 crossing eta^-1 alpha. `alpha` is a sampled
/// piece of the axis long enough to cover both segments.
inline FundamentalConfiguration detect_fundamental_configuration(const Trajectory& c1, const Trajectory& c2,
                                                                 const Trajectory& alpha, const DeckTransform& eta,
                                                                 double endpoint_tol = 1e-6,
                                                                 const CrossingOptions& opt = {}) {
    if (eta.trivial()) throw AxesNotDisjoint("eta is the identity");
    const CurveView av = CurveView::of(alpha);
    if (!crossings(av, CurveView::of(alpha, eta.offset()), opt).events.empty())
        throw AxesNotDisjoint("alpha and eta alpha intersect");
    // Parallel translate along the axis itself: eta alpha = alpha.
    const Vec2 d = alpha.pos.back() - alpha.pos.front();
    if (norm(d) > 0.0 && std::abs(cross(normalized(d), eta.offset())) < 1e-9)
        throw AxesNotDisjoint("eta translates alpha along itself");

    FundamentalConfiguration out;
    for (const Trajectory* c : {&c1, &c2}) {
        if (c->size() < 2) {
            out.reason = "segment has fewer than two samples";
            return out;
        }
        if (distance_to_curve(av, c->pos.front()) > endpoint_tol ||
            distance_to_curve(av, c->pos.back()) > endpoint_tol) {
            out.reason = "segment endpoints are not on alpha";
            return out;
        }
        const double t0 = c->t.front(), t1 = c->t.back();
        const double pad = 1e-4 * std::max(1.0, t1 - t0);
        for (const auto& e : crossings(CurveView::of(*c), av, opt).events)
            if (e.t1 > t0 + pad && e.t1 < t1 - pad) {
                out.reason = "segment interior meets alpha";
                return out;
            }
    }
    out.c1_crosses_eta_alpha = crossings(CurveView::of(c1), CurveView::of(alpha, eta.offset()), opt).events;
    out.c2_crosses_eta_inv_alpha =
        crossings(CurveView::of(c2), CurveView::of(alpha, eta.inverse().offset()), opt).events;
    out.found = !out.c1_crosses_eta_alpha.empty() && !out.c2_crosses_eta_inv_alpha.empty();
    if (!out.found) out.reason = "crossing conditions not met";
    return out;
}

}  // namespace torusflow
