#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "torusflow/cover.hpp"
#include "torusflow/gallery.hpp"

using namespace torusflow;
using std::numbers::pi;

namespace {

// Lemniscate x = sin t, y = sin t cos t on [-1, pi + 1]: one node at the
// origin, crossed at t = 0 and t = pi.
Trajectory figure_eight(double dt = 0.01) {
    Trajectory tr;
    tr.metric_name = "fixture";
    const int n = int(std::round((pi + 2.0) / dt));
    for (int i = 0; i <= n; ++i) {
        const double t = -1.0 + (pi + 2.0) * i / n;
        tr.t.push_back(t);
        tr.s.push_back(t);
        tr.pos.push_back({std::sin(t), std::sin(t) * std::cos(t)});
        tr.vel.push_back({std::cos(t), std::cos(2 * t)});
    }
    return tr;
}

Trajectory arc(Vec2 from, Vec2 to, double height, int n = 200) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i) {
        const double u = double(i) / n;
        pts.push_back(from + u * (to - from) + Vec2{0.0, height * std::sin(pi * u)});
    }
    return polyline_trajectory(pts);
}

}  // namespace

TEST(SelfIntersections, FigureEightHasOneNode) {
    const IntersectionReport r = self_intersections(figure_eight());
    ASSERT_EQ(r.count(), 1u);
    EXPECT_NEAR(r.events[0].t1, 0.0, 1e-8);
    EXPECT_NEAR(r.events[0].t2, pi, 1e-8);
    EXPECT_NEAR(r.events[0].point.x, 0.0, 1e-8);
    EXPECT_NEAR(r.events[0].point.y, 0.0, 1e-8);
    EXPECT_GT(r.events[0].margin, 0.5);
    EXPECT_TRUE(r.tangential.empty());
}

TEST(SelfIntersections, PolylineWithoutRefinementStillFindsNode) {
    Trajectory tr = figure_eight();
    tr.smooth = false;
    const IntersectionReport r = self_intersections(tr);
    ASSERT_EQ(r.count(), 1u);
    EXPECT_NEAR(r.events[0].t2, pi, 1e-4);
}

TEST(TranslateIntersections, FlatGeodesicsNeverCross) {
    const MetricSpec flat = gallery::flat();
    const Trajectory c = integrate(flat, UnitTangent::at_angle(flat, {0.1, 0.2}, 0.9), 400.0);
    EXPECT_EQ(self_intersections(c).count(), 0u);
    const IntersectionSetEstimate est = estimate_I_set(c, 3);
    EXPECT_EQ(est.growing_count(), 0);
    for (const auto& h : est.classes)
        for (const auto& k : h.counts) EXPECT_EQ(k.back(), 0) << h.rep.key();
}

TEST(TranslateIntersections, PrimitiveClassEnumeration) {
    const auto classes = primitive_classes(3);
    EXPECT_EQ(classes.size(), 16u);
    for (const auto& c : classes) {
        EXPECT_TRUE(c.primitive());
        EXPECT_EQ(c.class_rep(), c);
    }
    EXPECT_TRUE((DeckTransform{2, 4}).equivalent({-1, -2}));
    EXPECT_FALSE((DeckTransform{1, 2}).equivalent({2, 1}));
}

TEST(TranslateIntersections, OrderSwapNegatesSigns) {
    const MetricSpec spec = gallery::two_frequency();
    const Trajectory a = integrate(spec, UnitTangent::at_angle(spec, {0.125, 0.25}, 0.3), 60.0);
    const Trajectory b = integrate(spec, UnitTangent::at_angle(spec, {0.5, 0.75}, 2.0), 60.0);
    const IntersectionReport ab = crossings(CurveView::of(a), CurveView::of(b));
    const IntersectionReport ba = crossings(CurveView::of(b), CurveView::of(a));
    ASSERT_GT(ab.count(), 0u);
    ASSERT_EQ(ab.count(), ba.count());
    for (const auto& e : ab.events) {
        bool matched = false;
        for (const auto& f : ba.events)
            if (std::abs(e.t1 - f.t2) < 1e-9 && std::abs(e.t2 - f.t1) < 1e-9) {
                matched = true;
                EXPECT_EQ(e.sign, -f.sign);
                EXPECT_LT(norm(e.point - f.point), 1e-9);
            }
        EXPECT_TRUE(matched) << e.t1 << " " << e.t2;
    }
}

TEST(TranslateIntersections, CountsAreDeckEquivariant) {
    const MetricSpec spec = gallery::liouville();
    const UnitTangent v = UnitTangent::at_angle(spec, {0.25, 0.375}, 1.2);
    const Trajectory c = integrate(spec, v, 100.0);
    const Trajectory moved = integrate(spec, {{v.base.x - 2.0, v.base.y + 5.0}, v.velocity}, 100.0);
    for (const DeckTransform tau : {DeckTransform{0, 1}, DeckTransform{1, 0}, DeckTransform{1, 1}}) {
        EXPECT_EQ(translate_intersections(c, tau).count(), translate_intersections(moved, tau).count()) << tau.key();
    }
    // tau c against tau (eta c) reproduces c against eta c.
    const DeckTransform tau{3, -1}, eta{0, 1};
    const IntersectionReport base = translate_intersections(c, eta);
    const IntersectionReport shifted =
        crossings(CurveView::of(apply_deck(tau, c)), CurveView::of(c, tau.compose(eta).offset()));
    ASSERT_EQ(base.count(), shifted.count());
    for (std::size_t i = 0; i < base.count(); ++i) EXPECT_NEAR(base.events[i].t1, shifted.events[i].t1, 1e-9);
}

TEST(TranslateIntersections, StableUnderResolutionHalving) {
    const MetricSpec spec = gallery::two_frequency();
    const UnitTangent v = UnitTangent::at_angle(spec, {0.2, 0.1}, 0.7);
    IntegrationOptions fine;
    fine.sample_dt = 0.005;
    const Trajectory a = integrate(spec, v, 80.0), b = integrate(spec, v, 80.0, fine);
    for (const DeckTransform tau : {DeckTransform{0, 1}, DeckTransform{1, 0}, DeckTransform{1, -1}}) {
        const auto ra = translate_intersections(a, tau), rb = translate_intersections(b, tau);
        ASSERT_EQ(ra.count(), rb.count()) << tau.key();
        for (std::size_t i = 0; i < ra.count(); ++i) {
            EXPECT_NEAR(ra.events[i].t1, rb.events[i].t1, 1e-7);
            EXPECT_LT(norm(ra.events[i].point - rb.events[i].point), 1e-7);
        }
    }
    EXPECT_EQ(self_intersections(a).count(), self_intersections(b).count());
}

TEST(AsymptoticDirection, FlatSlopesAndVerticalTag) {
    const MetricSpec flat = gallery::flat();
    const DirectionEstimate d = asymptotic_direction(integrate(flat, {{0.3, 0.1}, {0.6, 0.8}}, 100.0));
    EXPECT_FALSE(d.rho.infinite);
    EXPECT_NEAR(d.rho.slope, 4.0 / 3.0, 1e-12);
    EXPECT_LT(d.diagnostic, 1e-9);

    const DirectionEstimate up = asymptotic_direction(integrate(flat, {{0.3, 0.1}, {0.0, -1.0}}, 100.0));
    EXPECT_TRUE(up.rho.infinite);
    EXPECT_EQ(up.rho.str(), "inf");
    EXPECT_EQ(RotationNumber::of({-2.0, -1.0}), RotationNumber::of({2.0, 1.0}));

    EXPECT_THROW(asymptotic_direction(integrate(flat, {{0, 0}, {1, 0}}, 5.0)), NotEscaping);
}

TEST(AsymptoticDirection, AntisymmetryOnFlatAndLiouville) {
    const MetricSpec flat = gallery::flat();
    EXPECT_LT(check_direction_antisymmetry(flat, UnitTangent::at_angle(flat, {0, 0}, 0.4), 100.0).residual, 1e-12);
    const MetricSpec liou = gallery::liouville();
    const AntisymmetryCheck chk =
        check_direction_antisymmetry(liou, UnitTangent::at_angle(liou, {0.1, 0.2}, 0.5), 400.0);
    EXPECT_LT(chk.residual, 0.05);
}

TEST(Strip, FlatLineHasZeroWidth) {
    const MetricSpec flat = gallery::flat();
    const Trajectory c = integrate(flat, {{0.0, 0.5}, {0.6, 0.8}}, 50.0);
    const Strip s = fit_strip(c, asymptotic_direction(c).direction);
    EXPECT_LT(s.width(), 1e-9);
    EXPECT_NEAR(s.lower, dot(perp(Vec2{0.6, 0.8}), Vec2{0.0, 0.5}), 1e-9);
}

TEST(TwoLoop, DetectsOrderedPairsOnly) {
    const auto ev = [](double a, double b) {
        IntersectionEvent e;
        e.t1 = a;
        e.t2 = b;
        return e;
    };
    const auto w = detect_two_loop({ev(1, 2), ev(3, 4)});
    ASSERT_TRUE(w.has_value());
    EXPECT_EQ(w->t1, 1);
    EXPECT_EQ(w->t4, 4);
    EXPECT_FALSE(detect_two_loop({ev(1, 4), ev(2, 3)}).has_value());  // nested
    EXPECT_FALSE(detect_two_loop({ev(1, 3), ev(2, 4)}).has_value());  // interleaved
    EXPECT_FALSE(detect_two_loop(figure_eight()).has_value());

    // Two consecutive small loops along a line.
    std::vector<Vec2> pts;
    for (int i = 0; i <= 4000; ++i) {
        const double t = i * 0.005;
        pts.push_back({t - 1.5 * std::sin(t), 1.5 * std::cos(t)});  // prolate cycloid
    }
    const auto loops = detect_two_loop(polyline_trajectory(pts));
    ASSERT_TRUE(loops.has_value());
    EXPECT_LT(loops->t2, loops->t3);
}

TEST(FundamentalConfiguration, SyntheticArcs) {
    const Trajectory alpha = polyline_trajectory({{-10.0, 0.0}, {10.0, 0.0}});
    const DeckTransform eta{0, 1};
    const auto good = detect_fundamental_configuration(arc({0, 0}, {1, 0}, 1.5), arc({2, 0}, {3, 0}, -1.5), alpha, eta);
    EXPECT_TRUE(good.found) << good.reason;
    EXPECT_EQ(good.c1_crosses_eta_alpha.size(), 2u);
    const auto bad = detect_fundamental_configuration(arc({0, 0}, {1, 0}, 1.5), arc({2, 0}, {3, 0}, 1.5), alpha, eta);
    EXPECT_FALSE(bad.found);
    const auto low = detect_fundamental_configuration(arc({0, 0}, {1, 0}, 0.5), arc({2, 0}, {3, 0}, -1.5), alpha, eta);
    EXPECT_FALSE(low.found);
    EXPECT_THROW(detect_fundamental_configuration(arc({0, 0}, {1, 0}, 1.5), arc({2, 0}, {3, 0}, -1.5), alpha, {1, 0}),
                 AxesNotDisjoint);
    const Trajectory diag = polyline_trajectory({{-10.0, -10.0}, {10.0, 10.0}});
    EXPECT_THROW(detect_fundamental_configuration(arc({0, 0}, {1, 1}, 1.5), arc({2, 2}, {3, 3}, -1.5), diag, {1, 1}),
                 AxesNotDisjoint);
}
