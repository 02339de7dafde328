#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "torusflow/gallery.hpp"
#include "torusflow/metric.hpp"
#include "torusflow/metric_io.hpp"

using namespace torusflow;
using std::numbers::pi;

namespace {

MetricSpec cos_x_metric() {
    // g11 = 1 + 0.3 cos(2 pi x), g22 = 1
    return MetricSpec::create("cosx", {{0, 0, 1.0, 0.0}, {1, 0, 0.3, 0.0}}, {}, {{0, 0, 1.0, 0.0}}, {}, 0.5);
}

MetricSpec conformal_cos_x(double a) { return gallery::conformal("conf-x", {{1, 0, a, 0.0}}); }

// Christoffel symbols from central differences of eval_metric only.
Christoffel fd_christoffel(const MetricSpec& spec, const Vec2& p, double h = 1e-5) {
    const Sym2 g = spec.metric_at(p);
    const Sym2 gx = 0.5 / h * (spec.metric_at({p.x + h, p.y}) + (-1.0) * spec.metric_at({p.x - h, p.y}));
    const Sym2 gy = 0.5 / h * (spec.metric_at({p.x, p.y + h}) + (-1.0) * spec.metric_at({p.x, p.y - h}));
    const Sym2* d[2] = {&gx, &gy};
    const Sym2 gi = g.inverse();
    Christoffel out;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double v = 0.0;
                for (int l = 0; l < 2; ++l)
                    v += 0.5 * gi.entry(k, l) * (d[i]->entry(j, l) + d[j]->entry(i, l) - d[l]->entry(i, j));
                out.at(k, i, j) = v;
            }
    return out;
}

}  // namespace

TEST(EvalMetric, FlatIsIdentityWithZeroPartials) {
    const MetricValue m = eval_metric(gallery::flat(), {0.3, 0.7});
    EXPECT_EQ(m.g, (Sym2{1.0, 0.0, 1.0}));
    EXPECT_EQ(m.dg_dx, Sym2{});
    EXPECT_EQ(m.dg_dy, Sym2{});
}

TEST(EvalMetric, CosineExtremum) {
    const MetricValue m = eval_metric(cos_x_metric(), {0.0, 0.0});
    EXPECT_DOUBLE_EQ(m.g.xx, 1.3);
    EXPECT_NEAR(m.dg_dx.xx, 0.0, 1e-15);
}

TEST(EvalMetric, QuarterPeriodDerivativeMatchesFiniteDifference) {
    const MetricSpec spec = cos_x_metric();
    const MetricValue m = eval_metric(spec, {0.25, 0.0});
    EXPECT_NEAR(m.g.xx, 1.0, 1e-15);
    EXPECT_NEAR(m.dg_dx.xx, -0.6 * pi, 1e-13);
    const double h = 1e-6;
    const double fd = (spec.metric_at({0.25 + h, 0.0}).xx - spec.metric_at({0.25 - h, 0.0}).xx) / (2 * h);
    EXPECT_NEAR(fd, -0.6 * pi, 1e-8);
}

TEST(EvalMetric, PeriodicUnderIntegerShifts) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const MetricSpec& spec : gallery::all()) {
        for (int i = 0; i < 200; ++i) {
            // Dyadic points shift exactly, so periodicity is bit-for-bit.
            const Vec2 p{std::ldexp(std::floor(u(rng) * 1024), -10), std::ldexp(std::floor(u(rng) * 1024), -10)};
            const int m = int(u(rng) * 20) - 10, n = int(u(rng) * 20) - 10;
            const MetricValue a = spec.eval(p), b = spec.eval({p.x + m, p.y + n});
            EXPECT_EQ(a.g, b.g);
            EXPECT_EQ(a.dg_dx, b.dg_dx);
            EXPECT_EQ(a.dg_dy, b.dg_dy);
            // Generic points agree to roundoff of the reduction.
            const Vec2 q{u(rng), u(rng)};
            EXPECT_NEAR(spec.metric_at(q).xx, spec.metric_at({q.x + m, q.y + n}).xx, 1e-12);
        }
    }
}

TEST(MetricSpecValidation, RejectsIndefiniteMetric) {
    EXPECT_THROW(MetricSpec::create("bad", {{0, 0, 1.0, 0.0}, {1, 0, 1.5, 0.0}}, {}, {{0, 0, 1.0, 0.0}}, {}, 0.1),
                 ValidationError);
    EXPECT_THROW(MetricSpec::create("bad", {{0, 0, 1.0, 0.0}}, {}, {{0, 0, 1.0, 0.0}}, {}, 0.0), ValidationError);
}

TEST(MetricSpecValidation, CertificateFlags) {
    EXPECT_TRUE(gallery::flat().certified());
    EXPECT_TRUE(gallery::liouville().certified());
    EXPECT_TRUE(gallery::conformal_bump().certified());
    // Passes the grid but not the l1 bound: 1 + 0.6cos + 0.6cos(2x) dips to 0.1 only.
    const MetricSpec tight =
        MetricSpec::create("tight", {{0, 0, 1.0, 0.0}, {1, 0, 0.6, 0.0}, {2, 0, 0.6, 0.0}}, {}, {{0, 0, 1.0, 0.0}},
                           {}, 1e-3);
    EXPECT_FALSE(tight.certified());
}

TEST(Christoffel, FlatIsZero) {
    const Christoffel c = christoffel(gallery::flat(), {0.4, 0.1});
    for (double v : c.c) EXPECT_EQ(v, 0.0);
}

TEST(Christoffel, ConformalFirstSymbolIsDfDx) {
    const double a = 0.1;
    const MetricSpec spec = conformal_cos_x(a);
    for (double x : {0.0, 0.1, 0.37, 0.8}) {
        const Christoffel c = christoffel(spec, {x, 0.3});
        const double dfdx = -kTwoPi * a * std::sin(kTwoPi * x);
        EXPECT_NEAR(c(0, 0, 0), dfdx, 1e-13);
        const Christoffel fd = fd_christoffel(spec, {x, 0.3});
        EXPECT_NEAR(fd(0, 0, 0), dfdx, 1e-8);
    }
}

TEST(Christoffel, SymmetricAndPeriodic) {
    const MetricSpec spec = gallery::two_frequency();
    const Vec2 p{0.123, 0.456};
    const Christoffel a = christoffel(spec, p), b = christoffel(spec, {p.x + 1.0, p.y});
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(a(k, 0, 1), a(k, 1, 0));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(a(k, i, j), b(k, i, j), 1e-11);
    }
}

TEST(Christoffel, AgreesWithFiniteDifferencesAtRandomPoints) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const MetricSpec general = MetricSpec::create(
        "general", {{0, 0, 2.0, 0.0}, {1, 2, 0.2, 0.1}}, {{0, 0, 0.3, 0.0}, {1, -1, 0.0, 0.1}},
        {{0, 0, 1.5, 0.0}, {0, 1, 0.2, -0.1}}, {{2, 1, 0.05, 0.02}}, 0.1);
    for (const MetricSpec& spec : {general, gallery::two_frequency(), gallery::liouville()}) {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const Vec2 p{u(rng), u(rng)};
            const Christoffel a = christoffel(spec, p), b = fd_christoffel(spec, p);
            double scale = 0.0;
            for (double v : a.c) scale = std::max(scale, std::abs(v));
            for (int k = 0; k < 8; ++k) worst = std::max(worst, std::abs(a.c[k] - b.c[k]) / std::max(scale, 1e-3));
        }
        EXPECT_LT(worst, 1e-5) << spec.name();
    }
}

TEST(GaussCurvature, FlatIsExactlyZero) {
    EXPECT_EQ(gauss_curvature(gallery::flat(), {0.2, 0.9}), 0.0);
    const MetricSpec skew = MetricSpec::create("skew", {{0, 0, 2.0, 0.0}}, {{0, 0, 0.5, 0.0}}, {{0, 0, 1.0, 0.0}}, {},
                                               0.5);
    EXPECT_EQ(max_abs_curvature(skew, 16).max_abs, 0.0);
}

TEST(GaussCurvature, ConformalClosedForm) {
    const MetricSpec spec = conformal_cos_x(0.1);
    EXPECT_NEAR(gauss_curvature(spec, {0.0, 0.0}), 0.4 * pi * pi * std::exp(-0.2), 1e-12);
    // K = -exp(-2f) * Laplacian(f) with the Laplacian by finite differences of f.
    const auto f = [](const Vec2& p) { return 0.1 * std::cos(kTwoPi * p.x); };
    const double h = 1e-4;
    for (const Vec2 p : {Vec2{0.1, 0.2}, Vec2{0.3, 0.9}, Vec2{0.77, 0.5}}) {
        const double lap = (f({p.x + h, p.y}) + f({p.x - h, p.y}) + f({p.x, p.y + h}) + f({p.x, p.y - h}) - 4 * f(p)) /
                           (h * h);
        EXPECT_NEAR(gauss_curvature(spec, p), -std::exp(-2 * f(p)) * lap, 1e-6);
    }
}

TEST(GaussCurvature, GaussBonnetOnGallery) {
    for (const MetricSpec& spec : gallery::all()) EXPECT_LT(std::abs(gauss_bonnet_integral(spec, 128)), 1e-6);
    const MetricSpec general = MetricSpec::create(
        "general", {{0, 0, 2.0, 0.0}, {1, 2, 0.2, 0.1}}, {{0, 0, 0.3, 0.0}, {1, -1, 0.0, 0.1}},
        {{0, 0, 1.5, 0.0}, {0, 1, 0.2, -0.1}}, {{2, 1, 0.05, 0.02}}, 0.1);
    EXPECT_LT(std::abs(gauss_bonnet_integral(general, 128)), 1e-6);
    EXPECT_GT(max_abs_curvature(general, 32).max_abs, 0.1);
}

TEST(MetricIo, RoundTripsAndReportsErrors) {
    const MetricSpec spec = gallery::two_frequency(0.5);
    const MetricSpec back = parse_metric_text(write_metric_text(spec));
    EXPECT_EQ(back.name(), spec.name());
    for (const Vec2 p : {Vec2{0.1, 0.2}, Vec2{-1.3, 2.7}}) EXPECT_EQ(back.metric_at(p), spec.metric_at(p));

    const std::string text =
        "# comment\nname = demo\nlambda_min = 0.5\n"
        "term component=g11 mx=0 my=0 cos=1 sin=0\n"
        "term component=g11 mx=1 my=0 cos=0.3 sin=0   # trailing comment\n"
        "term component=g22 mx=0 my=0 cos=1\n";
    const MetricSpec demo = parse_metric_text(text);
    EXPECT_DOUBLE_EQ(demo.metric_at({0.0, 0.0}).xx, 1.3);

    EXPECT_THROW(parse_metric_text("name = x\nterm component=g33 mx=0\nlambda_min=1\n"), ValidationError);
    EXPECT_THROW(parse_metric_text("name = x\nterm component=g11 mx=zero\nlambda_min=1\n"), ValidationError);
    EXPECT_THROW(parse_metric_text("name = x\nterm component=g11 mx=0 my=0 cos=1\n"), ValidationError);
    EXPECT_THROW(gallery::by_name("nope"), ValidationError);
    EXPECT_THROW(gallery::by_name("flat:1"), ValidationError);
    EXPECT_EQ(gallery::by_name("conformal-bump:0.3").name(), "conformal-bump:0.3");
}
