#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "torusflow/flow.hpp"
#include "torusflow/gallery.hpp"

using namespace torusflow;

TEST(Integrate, FlatHorizontalLine) {
    const MetricSpec flat = gallery::flat();
    const Trajectory tr = integrate(flat, {{0.0, 0.0}, {1.0, 0.0}}, 2.5);
    ASSERT_EQ(tr.size(), 251u);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_NEAR(tr.pos[i].x, tr.t[i], 1e-12);
        EXPECT_EQ(tr.pos[i].y, 0.0);
        EXPECT_EQ(tr.vel[i], (Vec2{1.0, 0.0}));
    }
    EXPECT_DOUBLE_EQ(tr.horizon(), 2.5);
}

TEST(Integrate, FlatSlopedLineEndpoint) {
    const Trajectory tr = integrate(gallery::flat(), {{0.0, 0.0}, {0.6, 0.8}}, 5.0);
    EXPECT_NEAR(tr.pos.back().x, 3.0, 1e-12);
    EXPECT_NEAR(tr.pos.back().y, 4.0, 1e-12);
    EXPECT_NEAR(tr.s.back(), 5.0, 1e-12);
}

TEST(Integrate, StaysOnReflectionAxis) {
    // (1 + 0.2 cos 2 pi x)(dx^2 + dy^2) is symmetric under y -> -y.
    const MetricSpec spec = gallery::liouville(0.2, 0.0);
    const Trajectory tr = integrate(spec, UnitTangent::along(spec, {0.0, 0.0}, {1.0, 0.0}), 100.0);
    double worst = 0.0;
    for (const Vec2& p : tr.pos) worst = std::max(worst, std::abs(p.y));
    EXPECT_LT(worst, 1e-8);
    EXPECT_GT(tr.pos.back().x, 50.0);
}

TEST(Integrate, UnitSpeedAndArclength) {
    for (const MetricSpec& spec : gallery::all()) {
        const Trajectory tr = integrate(spec, UnitTangent::at_angle(spec, {0.1, 0.2}, 0.4), 50.0);
        EXPECT_LT(tr.max_speed_residual, 1e-6) << spec.name();
        for (std::size_t i = 0; i < tr.size(); i += 97) {
            EXPECT_NEAR(tr.s[i], tr.t[i], 1e-6 * std::max(1.0, tr.t[i])) << spec.name();
            if (i > 0) EXPECT_GE(tr.s[i], tr.s[i - 1]);
        }
    }
}

TEST(Integrate, RejectsBadArguments) {
    const MetricSpec flat = gallery::flat();
    EXPECT_THROW(integrate(flat, {{0, 0}, {1, 0}}, 0.0), ValidationError);
    IntegrationOptions o;
    o.max_samples = 10;
    EXPECT_THROW(integrate(flat, {{0, 0}, {1, 0}}, 1.0, o), ValidationError);
}

TEST(Integrate, ReportsStepFailure) {
    IntegrationOptions o;
    o.max_steps = 3;
    const MetricSpec spec = gallery::two_frequency();
    EXPECT_THROW(integrate(spec, UnitTangent::at_angle(spec, {0.1, 0.1}, 0.3), 10.0, o), StepFailure);
}

TEST(FlowMap, FlatAndIdentity) {
    const MetricSpec flat = gallery::flat();
    const UnitTangent w = flow_map(flat, {{0.0, 0.0}, {0.0, 1.0}}, 1.0);
    EXPECT_NEAR(w.base.x, 0.0, 1e-15);
    EXPECT_NEAR(w.base.y, 1.0, 1e-14);
    EXPECT_EQ(w.velocity, (Vec2{0.0, 1.0}));
    for (const MetricSpec& spec : gallery::all()) {
        const UnitTangent v = UnitTangent::at_angle(spec, {0.3, 0.6}, 1.1);
        const UnitTangent z = flow_map(spec, v, 0.0);
        EXPECT_EQ(z.base, v.base);
        EXPECT_EQ(z.velocity, v.velocity);
    }
}

TEST(FlowMap, GroupPropertyOnConformalBump) {
    const MetricSpec spec = gallery::conformal_bump();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 8; ++i) {
        const UnitTangent v = UnitTangent::at_angle(spec, {u(rng), u(rng)}, kTwoPi * u(rng));
        const double a = 7.0 * u(rng);
        const UnitTangent two = flow_map(spec, flow_map(spec, v, a), 7.0 - a);
        const UnitTangent one = flow_map(spec, v, 7.0);
        EXPECT_LT(phase_gap(one, two), 1e-7);
        const UnitTangent back = flow_map(spec, one.reversed(), 7.0).reversed();
        EXPECT_LT(phase_gap(back, v), 1e-7);
    }
}

TEST(FlowProperties, DeckEquivarianceIsExactForDyadicBases) {
    for (const MetricSpec& spec : gallery::all()) {
        const UnitTangent v = UnitTangent::at_angle(spec, {0.375, 0.8125}, 0.9);
        const Trajectory a = integrate(spec, v, 100.0);
        const Trajectory b = integrate(spec, {{v.base.x + 3.0, v.base.y - 2.0}, v.velocity}, 100.0);
        ASSERT_EQ(a.size(), b.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            worst = std::max(worst, norm(b.pos[i] - (a.pos[i] + Vec2{3.0, -2.0})));
            worst = std::max(worst, norm(b.vel[i] - a.vel[i]));
        }
        EXPECT_LT(worst, 1e-9) << spec.name();
    }
}

TEST(ClassifyRay, FlatLinesEscape) {
    const MetricSpec flat = gallery::flat();
    const Trajectory tr = integrate(flat, UnitTangent::at_angle(flat, {0.2, 0.3}, 0.7), 200.0);
    const RayClass rc = classify_ray(tr, 50.0, 5.0);
    EXPECT_EQ(rc.type, RayType::escaping);
    EXPECT_NEAR(rc.final_radius, 200.0, 1e-9);
}

TEST(ClassifyRay, SyntheticBoundedAndOscillating) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 2000; ++i) pts.push_back({3.0 * std::cos(i * 0.01), 3.0 * std::sin(i * 0.01) - 3.0});
    Trajectory tr = polyline_trajectory(pts);
    for (std::size_t i = 0; i < tr.size(); ++i) tr.t[i] = 0.1 * double(i);  // horizon 200
    const RayClass rc = classify_ray(tr, 50.0, 7.0);
    EXPECT_EQ(rc.type, RayType::bounded);
    EXPECT_LE(rc.max_radius, 6.0 + 1e-9);

    // Out to radius 40, back home, out again.
    std::vector<Vec2> osc;
    for (int i = 0; i <= 400; ++i) osc.push_back({i * 0.1, 0.0});
    for (int i = 400; i >= 0; --i) osc.push_back({i * 0.1, 0.5});
    for (int i = 0; i <= 300; ++i) osc.push_back({0.0, 0.5 + i * 0.1});
    Trajectory ot = polyline_trajectory(osc);
    const RayClass oc = classify_ray(ot, 50.0, 5.0);
    EXPECT_EQ(oc.type, RayType::oscillating);
    EXPECT_EQ(oc.returns_to_base, 1);

    EXPECT_THROW(classify_ray(integrate(gallery::flat(), {{0, 0}, {1, 0}}, 50.0)), HorizonTooShort);
}

TEST(TrajectoryCsv, HeaderAndColumns) {
    const Trajectory tr = integrate(gallery::flat(), {{0, 0}, {1, 0}}, 0.05);
    std::ostringstream out;
    write_trajectory_csv(out, tr, "abc");
    const std::string s = out.str();
    EXPECT_NE(s.find("# metric=flat"), std::string::npos);
    EXPECT_NE(s.find("config_hash=abc"), std::string::npos);
    EXPECT_NE(s.find("t,x,y,vx,vy,s\n"), std::string::npos);
}
