#pragma once

// Rotation numbers as a function of launch angle at a fixed base point:
// grid sampling with adjacent-jump diagnostics, and bisection onto target
// slopes.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "torusflow/cover.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/parallel.hpp"

namespace torusflow {

struct RotationSample {
    double launch = 0.0;  // Euclidean launch angle
    bool escaping = false;
    Vec2 direction;
    RotationNumber rho;
};

inline IntegrationOptions rotation_flow_options() {
    IntegrationOptions o;
    o.sample_dt = 0.05;
    o.rtol = 1e-9;
    o.atol = 1e-9;
    return o;
}

inline RotationSample rotation_at(const MetricSpec& spec, const Vec2& base, double launch, double T,
                                  const IntegrationOptions& opt = rotation_flow_options()) {
    RotationSample s;
    s.launch = launch;
    try {
        const DirectionEstimate d = asymptotic_direction(integrate(spec, UnitTangent::at_angle(spec, base, launch), T, opt));
        s.escaping = true;
        s.direction = d.direction;
        s.rho = d.rho;
    } catch (const NotEscaping&) {
    }
    return s;
}

struct RotationField {
    Vec2 base;
    double horizon = 0.0;
    std::vector<RotationSample> samples;  // launch angles 2 pi i / n

    std::size_t non_escaping() const {
        std::size_t c = 0;
        for (const auto& s : samples) c += !s.escaping;
        return c;
    }
    /// Largest angle on S^1 between directions at cyclically adjacent launch
    /// angles; pairs with a non-escaping member are skipped.
    double max_adjacent_jump(std::size_t* where = nullptr) const {
        double best = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& a = samples[i];
            const auto& b = samples[(i + 1) % samples.size()];
            if (!a.escaping || !b.escaping) continue;
            const double j = angle_between(a.direction, b.direction);
            if (j > best) {
                best = j;
                if (where) *where = i;
            }
        }
        return best;
    }
};

inline RotationField rotation_field(const MetricSpec& spec, const Vec2& base, std::size_t n, double T,
                                    const IntegrationOptions& opt = rotation_flow_options()) {
    if (n < 2) throw ValidationError("rotation_field: need at least 2 angles");
    RotationField f;
    f.base = base;
    f.horizon = T;
    f.samples.resize(n);
    parallel_for(n, [&](std::size_t i) { f.samples[i] = rotation_at(spec, base, kTwoPi * double(i) / double(n), T, opt); });
    return f;
}

/// Jumps at n, 2n, 4n, ... angles; each refinement reuses the coarser grid.
struct RefinementHistory {
    std::vector<std::size_t> grid;
    std::vector<double> jump;
    bool decreasing() const {
        for (std::size_t i = 1; i < jump.size(); ++i)
            if (!(jump[i] < jump[i - 1])) return false;
        return jump.size() >= 2;
    }
};

inline RotationField refine(const MetricSpec& spec, const RotationField& coarse,
                            const IntegrationOptions& opt = rotation_flow_options()) {
    const std::size_t n = coarse.samples.size();
    RotationField f;
    f.base = coarse.base;
    f.horizon = coarse.horizon;
    f.samples.resize(2 * n);
    parallel_for(n, [&](std::size_t i) {
        f.samples[2 * i] = coarse.samples[i];
        f.samples[2 * i + 1] = rotation_at(spec, coarse.base, kTwoPi * double(2 * i + 1) / double(2 * n), coarse.horizon, opt);
    });
    return f;
}

inline RefinementHistory jump_under_refinement(const MetricSpec& spec, const Vec2& base, std::size_t n, double T,
                                               int levels = 2,
                                               const IntegrationOptions& opt = rotation_flow_options()) {
    RefinementHistory h;
    RotationField f = rotation_field(spec, base, n, T, opt);
    for (int l = 0;; ++l) {
        h.grid.push_back(f.samples.size());
        h.jump.push_back(f.max_adjacent_jump());
        if (l + 1 >= levels) break;
        f = refine(spec, f, opt);
    }
    return h;
}

struct RotationHit {
    double target = 0.0;
    bool hit = false;
    double launch = 0.0;
    double rho = 0.0;
    double error = 0.0;
    int iterations = 0;
};

namespace detail {

/// Signed projective offset of direction d from slope s, in (-pi/2, pi/2].
inline double slope_offset(const Vec2& d, double s) {
    double a = std::atan2(d.y, d.x) - std::atan(s);
    a = std::remainder(a, std::numbers::pi);
    return a;
}

}  // namespace detail

/// Finds a launch angle whose rotation number is `target` to within tol by
/// bisection on a sign change of the projective offset between adjacent
/// grid angles.
inline RotationHit hit_rotation_target(const MetricSpec& spec, const RotationField& field, double target,
                                       double tol = 1e-3, const IntegrationOptions& opt = rotation_flow_options()) {
    RotationHit out;
    out.target = target;
    const std::size_t n = field.samples.size();
    const double step = kTwoPi / double(n);
    for (std::size_t i = 0; i < n && !out.hit; ++i) {
        const RotationSample& a0 = field.samples[i];
        const RotationSample& b0 = field.samples[(i + 1) % n];
        if (!a0.escaping || !b0.escaping) continue;
        double fa = detail::slope_offset(a0.direction, target), fb = detail::slope_offset(b0.direction, target);
        // A sign change through +-pi/2 is a wrap, not a root.
        if (fa * fb > 0.0 || std::abs(fa - fb) > 1.0) continue;
        double lo = a0.launch, hi = a0.launch + step;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            const RotationSample m = rotation_at(spec, field.base, mid, field.horizon, opt);
            ++out.iterations;
            if (!m.escaping) break;
            const double fm = detail::slope_offset(m.direction, target);
            if (!m.rho.infinite && std::abs(m.rho.slope - target) < tol) {
                out.hit = true;
                out.launch = mid;
                out.rho = m.rho.slope;
                out.error = std::abs(m.rho.slope - target);
                break;
            }
            if ((fm < 0.0) == (fa < 0.0)) {
                lo = mid;
                fa = fm;
            } else {
                hi = mid;
            }
            if (hi - lo < 1e-14) break;
        }
    }
    return out;
}

/// Slopes p/q with |p|, q small, sorted by height then value.
inline std::vector<double> rational_targets(std::size_t count) {
    std::vector<std::pair<int, double>> all;
    for (int q = 1; q <= 8; ++q)
        for (int p = -8; p <= 8; ++p) {
            if (std::gcd(p, q) != 1) continue;
            all.emplace_back(std::max(std::abs(p), q), double(p) / q);
        }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
    });
    std::vector<double> out;
    for (const auto& [h, v] : all) {
        if (out.size() == count) break;
        out.push_back(v);
    }
    return out;
}

}  // namespace torusflow
