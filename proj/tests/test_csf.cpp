#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "torusflow/curve_shortening.hpp"
#include "torusflow/gallery.hpp"

using namespace torusflow;
using std::numbers::pi;

TEST(GeodesicCurvature, FlatCircleAndLine) {
    const MetricSpec flat = gallery::flat();
    for (double r : {0.1, 0.3}) {
        const auto k = geodesic_curvature(flat, ClosedCurve::circle({0.5, 0.5}, r, 512));
        for (double v : k) EXPECT_LT(std::abs(v * r - 1.0), 1e-3);
    }
    const auto k = geodesic_curvature(flat, ClosedCurve::line({1, 0}, {0.0, 0.3}, 64));
    for (double v : k) EXPECT_LT(std::abs(v), 1e-8);
}

TEST(GeodesicCurvature, ConformalCoordinateLine) {
    // For e^{2f}(dx^2 + dy^2) the line y = c traversed in +x has
    // k = -e^{-f} f_y.
    const double A = 0.1;
    const MetricSpec spec = gallery::conformal_bump(A);
    for (double y0 : {0.1, 0.3, 0.62}) {
        const ClosedCurve c = ClosedCurve::line({1, 0}, {0.0, y0}, 1024);
        const auto k = geodesic_curvature(spec, c);
        double worst = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double x = c.nodes[i].x;
            const double f = A * std::cos(kTwoPi * x) * std::cos(kTwoPi * y0);
            const double fy = -kTwoPi * A * std::cos(kTwoPi * x) * std::sin(kTwoPi * y0);
            worst = std::max(worst, std::abs(k[i] + std::exp(-f) * fy));
        }
        EXPECT_LT(worst, 1e-4) << y0;
    }
}

TEST(GeodesicCurvature, RejectsDegenerateSpacing) {
    ClosedCurve c = ClosedCurve::circle({0, 0}, 0.2, 16);
    c.nodes[3] = c.nodes[4];
    EXPECT_THROW(geodesic_curvature(gallery::flat(), c), DegenerateSpacing);
}

TEST(Csf, FlatCircleExtinctionTime) {
    const MetricSpec flat = gallery::flat();
    for (double r : {0.1, 0.2, 0.3}) {
        const CsfOutcome o = csf_evolve(flat, ClosedCurve::circle({0.5, 0.5}, r, 256));
        ASSERT_EQ(o.verdict, CsfVerdict::shrank_to_point) << r;
        EXPECT_NEAR(o.extinction_time, 0.5 * r * r, 0.05 * 0.5 * r * r) << r;
        for (std::size_t i = 1; i < o.history.size(); ++i)
            EXPECT_LT(o.history[i].length, o.history[i - 1].length + 1e-9);
        EXPECT_LT(o.max_extent, 2 * r + 1e-9);
    }
}

TEST(Csf, LengthDissipationIdentity) {
    const CsfOutcome o = csf_evolve(gallery::conformal_bump(), ClosedCurve::circle({0.4, 0.45}, 0.2, 256));
    std::size_t checked = 0;
    for (std::size_t i = 10; i + 1 < o.history.size() && o.history[i].length > 0.3; i += 25) {
        const auto& a = o.history[i];
        const auto& b = o.history[i + 1];
        const double rate = (b.length - a.length) / (b.time - a.time);
        const double expect = -0.5 * (a.int_k2 + b.int_k2);
        EXPECT_NEAR(rate, expect, 0.05 * std::abs(expect)) << a.time;
        ++checked;
    }
    EXPECT_GT(checked, 5u);
}

TEST(Csf, FlatWavyCurveStraightens) {
    const ClosedCurve c0 = ClosedCurve::from_function(
        {1, 0}, 128, [](double u) { return Vec2{u, 0.3 + 0.2 * std::sin(kTwoPi * u)}; });
    const CsfOutcome o = csf_evolve(gallery::flat(), c0);
    ASSERT_EQ(o.verdict, CsfVerdict::converged_to_geodesic);
    EXPECT_NEAR(o.curve.length, 1.0, 1e-3);
    EXPECT_EQ(o.curve.cls, (DeckTransform{1, 0}));
    EXPECT_FALSE(o.contractible_geodesic);
    double ymin = 1e9, ymax = -1e9;
    for (const Vec2& p : o.curve.nodes) ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
    EXPECT_LT(ymax - ymin, 1e-4);
}

TEST(Csf, ConformalBumpVerticalLineIsGeodesic) {
    const MetricSpec spec = gallery::conformal_bump();
    const ClosedCurve c0 = ClosedCurve::line({0, 1}, {0.5, 0.0}, 128);
    const double L0 = curve_length(spec, c0);
    const CsfOutcome o = csf_evolve(spec, c0);
    ASSERT_EQ(o.verdict, CsfVerdict::converged_to_geodesic);
    EXPECT_LE(o.curve.length, L0 + 1e-12);
    // Re-integrate from node 0 along the discrete tangent, one period.
    const Vec2 p = o.curve.node(0), d = o.curve.node(1) - o.curve.node(-1);
    const UnitTangent v = UnitTangent::along(spec, p, d);
    const UnitTangent w = flow_map(spec, v, o.curve.length);
    EXPECT_LT(norm(w.base - (p + Vec2{0.0, 1.0})), 1e-4);
}

TEST(Csf, RefinementChangesLengthLittle) {
    const MetricSpec spec = gallery::conformal_bump();
    const auto run = [&](std::size_t n) {
        return csf_evolve(spec, ClosedCurve::line({1, 0}, {0.0, 0.3}, n)).curve.length;
    };
    EXPECT_LT(std::abs(run(64) - run(128)), 1e-4);
}

TEST(MonotonicityProbe, ShrinkingCircleLeavesLine) {
    const MetricSpec flat = gallery::flat();
    const Trajectory seg = integrate(flat, {{0.0, 0.5}, {1.0, 0.0}}, 1.0);
    const MonotonicityHistory h =
        intersection_monotonicity_probe(flat, ClosedCurve::circle({0.5, 0.55}, 0.2, 128), seg);
    ASSERT_GT(h.counts.size(), 3u);
    EXPECT_EQ(h.counts.front(), 2);
    EXPECT_EQ(h.counts.back(), 0);
    EXPECT_TRUE(h.nonincreasing());

    const MonotonicityHistory z =
        intersection_monotonicity_probe(flat, ClosedCurve::circle({0.5, 0.2}, 0.1, 128), seg);
    for (int c : z.counts) EXPECT_EQ(c, 0);
}

TEST(MonotonicityProbe, WavyCurveAgainstAxisKeepsParity) {
    const MetricSpec spec = gallery::conformal_bump();
    // y = 0 is a geodesic by the reflection symmetry of the bump.
    const Trajectory axis = integrate(spec, UnitTangent::along(spec, {0.25, 0.0}, {1.0, 0.0}), 2.1);
    const ClosedCurve c0 = ClosedCurve::from_function(
        {1, 0}, 128, [](double u) { return Vec2{u, 0.15 + 0.3 * std::sin(kTwoPi * u)}; });
    const MonotonicityHistory h = intersection_monotonicity_probe(spec, c0, axis);
    ASSERT_FALSE(h.counts.empty());
    EXPECT_EQ(h.counts.front(), 4);
    EXPECT_TRUE(h.nonincreasing());
    EXPECT_EQ(h.counts.back() % 2, 0);
}

TEST(MonotonicityProbe, EndpointCollision) {
    const MetricSpec flat = gallery::flat();
    const Trajectory seg = integrate(flat, {{0.5, 0.5}, {1.0, 0.0}}, 0.5);
    EXPECT_THROW(intersection_monotonicity_probe(flat, ClosedCurve::circle({0.5, 0.6}, 0.1, 128), seg),
                 EndpointCollision);
}

TEST(ContractibleGeodesic, FlatHasNone) {
    std::vector<ClosedCurve> seeds;
    for (int i = 0; i < 4; ++i) seeds.push_back(ClosedCurve::circle({0.2 * i, 0.1 * i}, 0.05 + 0.05 * i, 64));
    EXPECT_FALSE(find_contractible_geodesic(gallery::flat(), seeds).has_value());
}

TEST(CsfIo, LogAndCurveCsv) {
    const CsfOutcome o = csf_evolve(gallery::flat(), ClosedCurve::circle({0, 0}, 0.05, 64));
    std::ostringstream log, curve;
    write_csf_log_csv(log, o, "h1");
    write_curve_csv(curve, ClosedCurve::line({2, 1}, {0, 0}, 8), "h1");
    EXPECT_NE(log.str().find("flow_time,length,max_k,node_count\n"), std::string::npos);
    EXPECT_NE(log.str().find("verdict=shrank_to_point"), std::string::npos);
    EXPECT_NE(curve.str().find("# deck_class=2/1"), std::string::npos);
}

TEST(Embeddedness, DetectsFigureEight) {
    EXPECT_TRUE(is_embedded(ClosedCurve::circle({0, 0}, 1.0, 32)));
    EXPECT_TRUE(is_embedded(ClosedCurve::line({1, 1}, {0, 0}, 16)));
    const ClosedCurve eight = ClosedCurve::from_function(
        {0, 0}, 64, [](double u) { return Vec2{std::sin(kTwoPi * u), std::sin(kTwoPi * u) * std::cos(kTwoPi * u)}; });
    EXPECT_FALSE(is_embedded(eight));
    const ClosedCurve loopy = ClosedCurve::from_function(
        {1, 0}, 64, [](double u) { return Vec2{u - 0.3 * std::sin(kTwoPi * u), 0.3 * std::cos(kTwoPi * u)}; });
    EXPECT_FALSE(is_embedded(loopy));
}
