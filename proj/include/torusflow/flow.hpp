#pragma once

// Geodesic flow on the unit tangent bundle, integrated on the universal cover.
//
// The geodesic equation  x''^k + Gamma^k_ij x'^i x'^j = 0  is integrated with
// Dormand-Prince 5(4) and its 4th order continuous extension. Positions are
// carried as an integer cell plus a local offset in [0, 1)^2, so the numerics
// only ever see reduced coordinates: integer translates of the initial point
// produce bit-identical steps.

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "torusflow/errors.hpp"
#include "torusflow/metric.hpp"
#include "torusflow/vec2.hpp"

namespace torusflow {

struct UnitTangent {
    Vec2 base;
    Vec2 velocity;

    /// Unit tangent at `base` pointing along the Euclidean direction `dir`.
    static UnitTangent along(const MetricSpec& spec, const Vec2& base, const Vec2& dir) {
        return {base, dir / g_norm(spec, base, dir)};
    }
    static UnitTangent at_angle(const MetricSpec& spec, const Vec2& base, double angle) {
        return along(spec, base, {std::cos(angle), std::sin(angle)});
    }
    UnitTangent reversed() const { return {base, -velocity}; }
};

/// Phase-space distance used by the flow property checks.
inline double phase_gap(const UnitTangent& a, const UnitTangent& b) {
    return std::max(norm(a.base - b.base), norm(a.velocity - b.velocity));
}

struct IntegrationOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double sample_dt = 0.01;
    double h_max = 0.5;
    double h_min = 1e-12;
    std::size_t max_samples = 20'000'000;
    std::size_t max_steps = 100'000'000;
    /// Largest tolerated | |c'|_g - 1 | at any sample before StepFailure.
    double speed_tolerance = 1e-6;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec2> pos;
    std::vector<Vec2> vel;
    std::vector<double> s;
    UnitTangent initial;
    IntegrationOptions options;
    std::string metric_name;
    /// Samples come from the flow, so tangents are exact derivatives and
    /// Hermite refinement between samples is valid.
    bool smooth = true;
    double max_speed_residual = 0.0;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }
    double horizon() const { return t.empty() ? 0.0 : t.back(); }
    UnitTangent tangent(std::size_t i) const { return {pos[i], vel[i]}; }

    /// Prefix of the samples with t <= horizon.
    Trajectory truncated(double horizon) const {
        Trajectory out = *this;
        std::size_t n = 0;
        while (n < t.size() && t[n] <= horizon + 1e-12) ++n;
        out.t.resize(n);
        out.pos.resize(n);
        out.vel.resize(n);
        out.s.resize(n);
        return out;
    }
};

/// Trajectory through explicit points, not produced by the flow (fixtures,
/// hand-built test curves). Tangents are secant directions.
inline Trajectory polyline_trajectory(const std::vector<Vec2>& pts, std::string name = "polyline") {
    Trajectory tr;
    tr.metric_name = std::move(name);
    tr.smooth = false;
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0) acc += norm(pts[i] - pts[i - 1]);
        tr.t.push_back(acc);
        tr.s.push_back(acc);
        tr.pos.push_back(pts[i]);
        const Vec2 d = i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[i] - pts[i - 1];
        tr.vel.push_back(normalized(d));
    }
    if (!pts.empty()) tr.initial = {pts.front(), tr.vel.front()};
    return tr;
}

namespace detail {

using State = std::array<double, 5>;  // local x, local y, vx, vy, arclength

inline State geodesic_rhs(const MetricSpec& spec, const State& y) {
    const MetricValue m = spec.eval({y[0], y[1]});
    const Vec2 v{y[2], y[3]};
    const Vec2 acc = christoffel(m).contract(v, v);
    return {v.x, v.y, -acc.x, -acc.y, std::sqrt(m.g.quad(v))};
}

/// One accepted Dormand-Prince step with its dense-output coefficients.
struct Dopri5Step {
    double t0 = 0.0, h = 0.0;
    State r1{}, r2{}, r3{}, r4{}, r5{};

    State at(double t) const {
        const double th = (t - t0) / h, th1 = 1.0 - th;
        State out;
        for (int i = 0; i < 5; ++i) out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        return out;
    }
};

/// Drives the flow from v0 for time T, calling on_sample(t, pos, vel, s) at
/// t = 0, dt, 2dt, ... and at T. tangent_out receives the final state.
template <class OnSample>
void run_flow(const MetricSpec& spec, const UnitTangent& v0, double T, const IntegrationOptions& opt,
              double sample_dt, OnSample&& on_sample, UnitTangent* tangent_out, double* residual_out) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw ValidationError("integration horizon must be finite and >= 0");
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw ValidationError("integration tolerances must be positive");

    Cell cell{static_cast<long long>(std::floor(v0.base.x)), static_cast<long long>(std::floor(v0.base.y))};
    State y{v0.base.x - double(cell.x), v0.base.y - double(cell.y), v0.velocity.x, v0.velocity.y, 0.0};
    double max_residual = 0.0;

    const auto emit = [&](double t, const State& st, const Cell& c) {
        const Vec2 p{double(c.x) + st[0], double(c.y) + st[1]};
        const Vec2 v{st[2], st[3]};
        const double res = std::abs(std::sqrt(spec.metric_at({st[0], st[1]}).quad(v)) - 1.0);
        if (res > max_residual) max_residual = res;
        if (res > opt.speed_tolerance) throw StepFailure("unit-speed residual " + std::to_string(res), t);
        if (sample_dt > 0.0) on_sample(t, p, v, st[4]);
    };

    std::size_t next_sample = 0;
    std::size_t n_samples = 0;
    if (sample_dt > 0.0) {
        n_samples = static_cast<std::size_t>(std::floor(T / sample_dt + 1e-9)) + 1;
        if (n_samples > opt.max_samples)
            throw ValidationError("requested " + std::to_string(n_samples) + " samples exceeds max_samples");
    }
    auto sample_time = [&](std::size_t j) { return double(j) * sample_dt; };

    if (sample_dt > 0.0) {
        emit(0.0, y, cell);
        next_sample = 1;
    }
    if (T == 0.0) {
        if (tangent_out) *tangent_out = v0;
        if (residual_out) *residual_out = max_residual;
        return;
    }

    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                     a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                     d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                     d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

    double t = 0.0;
    double h = std::min({0.01, opt.h_max, T});
    State k1 = geodesic_rhs(spec, y);
    std::size_t steps = 0;
    Dopri5Step dense;

    while (t < T) {
        if (++steps > opt.max_steps) throw StepFailure("step budget exhausted", t);
        bool last = false;
        if (t + h >= T) {
            h = T - t;
            last = true;
        }
        State tmp, k2, k3, k4, k5, k6, k7, ynew;
        for (int i = 0; i < 5; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        k2 = geodesic_rhs(spec, tmp);
        for (int i = 0; i < 5; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = geodesic_rhs(spec, tmp);
        for (int i = 0; i < 5; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = geodesic_rhs(spec, tmp);
        for (int i = 0; i < 5; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = geodesic_rhs(spec, tmp);
        for (int i = 0; i < 5; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        k6 = geodesic_rhs(spec, tmp);
        for (int i = 0; i < 5; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        k7 = geodesic_rhs(spec, ynew);

        double err = 0.0;
        bool finite = true;
        for (int i = 0; i < 5; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            // Arclength is monitored, not controlled: bounding its relative error
            // would only cost steps without affecting the phase-space accuracy.
            if (i == 4) continue;
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double r = e / sc;
            err += r * r;
            if (!std::isfinite(ynew[i])) finite = false;
        }
        err = std::sqrt(err / 4.0);
        if (!finite || !std::isfinite(err)) {
            h *= 0.25;
            if (h < opt.h_min) throw StepFailure("non-finite state", t);
            continue;
        }
        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (h < opt.h_min) throw StepFailure("step size underflow: tolerance cannot be met", t);
            continue;
        }

        dense.t0 = t;
        dense.h = h;
        for (int i = 0; i < 5; ++i) {
            const double ydiff = ynew[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            dense.r1[i] = y[i];
            dense.r2[i] = ydiff;
            dense.r3[i] = bspl;
            dense.r4[i] = ydiff - h * k7[i] - bspl;
            dense.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        const double t_new = last ? T : t + h;
        if (sample_dt > 0.0) {
            while (next_sample < n_samples && sample_time(next_sample) <= t_new) {
                const double ts = sample_time(next_sample);
                emit(ts, ts == t_new ? ynew : dense.at(ts), cell);
                ++next_sample;
            }
        }
        t = t_new;
        y = ynew;
        k1 = k7;

        // Move whole cells out of the local offset; both subtractions are exact.
        for (int c = 0; c < 2; ++c) {
            const double fl = std::floor(y[c]);
            if (fl != 0.0) {
                y[c] -= fl;
                (c == 0 ? cell.x : cell.y) += static_cast<long long>(fl);
            }
        }
        const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 10.0);
        h = std::min(h * fac, opt.h_max);
    }
    if (sample_dt > 0.0) {
        const double tl = sample_time(n_samples - 1);
        if (tl < T - 1e-12) emit(T, y, cell);
    } else {
        emit(T, y, cell);
    }
    if (tangent_out)
        *tangent_out = {{double(cell.x) + y[0], double(cell.y) + y[1]}, {y[2], y[3]}};
    if (residual_out) *residual_out = max_residual;
}

}  // namespace detail

/// Samples the geodesic of v0 on [0, T] at uniform spacing opts.sample_dt.
inline Trajectory integrate(const MetricSpec& spec, const UnitTangent& v0, double T,
                            const IntegrationOptions& opts = {}) {
    if (!(T > 0.0)) throw ValidationError("integrate: horizon must be positive");
    if (!(opts.sample_dt > 0.0)) throw ValidationError("integrate: sample_dt must be positive");
    Trajectory tr;
    tr.initial = v0;
    tr.options = opts;
    tr.metric_name = spec.name();
    const double want = T / opts.sample_dt;
    if (!(want < double(opts.max_samples)))
        throw ValidationError("integrate: " + std::to_string(want) + " samples exceeds max_samples");
    const std::size_t n = static_cast<std::size_t>(want) + 2;
    tr.t.reserve(n);
    tr.pos.reserve(n);
    tr.vel.reserve(n);
    tr.s.reserve(n);
    detail::run_flow(
        spec, v0, T, opts, opts.sample_dt,
        [&](double t, const Vec2& p, const Vec2& v, double s) {
            tr.t.push_back(t);
            tr.pos.push_back(p);
            tr.vel.push_back(v);
            tr.s.push_back(s);
        },
        nullptr, &tr.max_speed_residual);
    return tr;
}

/// phi^t(v). Negative t flows the reversed tangent and reverses back.
inline UnitTangent flow_map(const MetricSpec& spec, const UnitTangent& v, double t,
                            const IntegrationOptions& opts = {}) {
    if (t == 0.0) return v;
    if (t < 0.0) return flow_map(spec, v.reversed(), -t, opts).reversed();
    UnitTangent out;
    detail::run_flow(spec, v, t, opts, 0.0, [](double, const Vec2&, const Vec2&, double) {}, &out, nullptr);
    return out;
}

enum class RayType { bounded, escaping, oscillating, undecided };

inline const char* ray_type_name(RayType r) {
    switch (r) {
        case RayType::bounded: return "bounded";
        case RayType::escaping: return "escaping";
        case RayType::oscillating: return "oscillating";
        case RayType::undecided: return "undecided";
    }
    return "?";
}

/// Finite-horizon verdict; evidence, never proof.
struct RayClass {
    RayType type = RayType::undecided;
    double max_radius = 0.0;
    double final_radius = 0.0;
    int returns_to_base = 0;
    double horizon = 0.0;
};

inline RayClass classify_ray(const Trajectory& tr, double r_escape = 50.0, double base_radius = 5.0) {
    if (tr.horizon() < 100.0) throw HorizonTooShort("classify_ray needs a horizon of at least 100");
    RayClass rc;
    rc.horizon = tr.horizon();
    const Vec2 origin = tr.pos.front();
    const std::size_t n = tr.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = norm(tr.pos[i] - origin);
    rc.final_radius = r.back();

    bool reached_half = false, reentered = false, oscillation = false;
    bool inside = true;
    for (std::size_t i = 0; i < n; ++i) {
        rc.max_radius = std::max(rc.max_radius, r[i]);
        if (r[i] > 0.5 * r_escape) {
            if (reentered) oscillation = true;
            reached_half = true;
        }
        const bool now_inside = r[i] <= base_radius;
        if (now_inside && !inside && reached_half) {
            ++rc.returns_to_base;
            reentered = true;
        }
        inside = now_inside;
    }

    bool monotone_tail = true;
    const double tail_start = 0.8 * tr.horizon();
    for (std::size_t i = 1; i < n; ++i)
        if (tr.t[i - 1] >= tail_start && r[i] < r[i - 1]) monotone_tail = false;

    if (rc.max_radius <= base_radius)
        rc.type = RayType::bounded;
    else if (rc.final_radius > r_escape && monotone_tail)
        rc.type = RayType::escaping;
    else if (oscillation)
        rc.type = RayType::oscillating;
    else
        rc.type = RayType::undecided;
    return rc;
}

/// Verdicts for c+ (from v) and c- (from -v), reported separately.
struct GeodesicClass {
    RayClass forward;
    RayClass backward;
};

inline GeodesicClass classify_geodesic(const MetricSpec& spec, const UnitTangent& v, double T,
                                       double r_escape = 50.0, double base_radius = 5.0,
                                       IntegrationOptions opts = {}) {
    opts.sample_dt = std::max(opts.sample_dt, 0.05);
    return {classify_ray(integrate(spec, v, T, opts), r_escape, base_radius),
            classify_ray(integrate(spec, v.reversed(), T, opts), r_escape, base_radius)};
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const std::string& config_hash = {}) {
    out.precision(17);
    out << "# metric=" << tr.metric_name << " rtol=" << tr.options.rtol << " atol=" << tr.options.atol
        << " sample_dt=" << tr.options.sample_dt << " max_speed_residual=" << tr.max_speed_residual;
    if (!config_hash.empty()) out << " config_hash=" << config_hash;
    out << "\n";
    out << "t,x,y,vx,vy,s\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
        out << tr.t[i] << "," << tr.pos[i].x << "," << tr.pos[i].y << "," << tr.vel[i].x << "," << tr.vel[i].y
            << "," << tr.s[i] << "\n";
}

}  // namespace torusflow
