#pragma once

// Topological entropy estimates from separated sets.
//
// Sample points are drawn uniformly on the unit tangent bundle, their orbits
// are probed every dt_probe, and greedy (T, eps)-separated subsets are grown
// over a ladder of horizons, scales and sample prefixes. The dynamical
// distance is the maximum of the phase distance along the piecewise-linear
// interpolation of the probes, which makes it exact for linear flows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "torusflow/errors.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/metric.hpp"
#include "torusflow/parallel.hpp"

namespace torusflow {

struct PhasePoint {
    Vec2 base;      // in [0, 1)^2
    Vec2 tangent;   // unit g-norm
    Vec2 lift;      // cover representative used to integrate

    static PhasePoint from(const MetricSpec& spec, const Vec2& p, double angle) {
        const Vec2 b{p.x - std::floor(p.x), p.y - std::floor(p.y)};
        const UnitTangent v = UnitTangent::at_angle(spec, b, angle);
        return {b, v.velocity, b};
    }
    UnitTangent unit_tangent() const { return {lift, tangent}; }
};

namespace detail {

inline double wrap_half(double d) { return d - std::round(d); }

inline double wrap_pi(double a) {
    a = std::remainder(a, kTwoPi);
    return a;
}

inline double torus_dist(double dx, double dy) { return std::hypot(wrap_half(dx), wrap_half(dy)); }

}  // namespace detail

/// Flat quotient distance between bases plus the angle between the
/// Euclidean directions of the tangents, the latter scaled by angle_weight.
inline double phase_distance(const PhasePoint& u, const PhasePoint& v, double angle_weight = 1.0) {
    const double da = detail::wrap_pi(std::atan2(u.tangent.y, u.tangent.x) - std::atan2(v.tangent.y, v.tangent.x));
    return detail::torus_dist(u.base.x - v.base.x, u.base.y - v.base.y) + angle_weight * std::abs(da);
}

/// Probe samples (x mod 1, y mod 1, direction angle) for a batch of orbits.
class ProbeSet {
public:
    ProbeSet() = default;
    ProbeSet(std::size_t points, std::size_t samples, double dt)
        : points_(points), samples_(samples), dt_(dt), data_(points * samples * 3) {}

    std::size_t points() const { return points_; }
    std::size_t samples() const { return samples_; }
    double dt() const { return dt_; }
    double* row(std::size_t i) { return data_.data() + i * samples_ * 3; }
    const double* row(std::size_t i) const { return data_.data() + i * samples_ * 3; }

private:
    std::size_t points_ = 0, samples_ = 0;
    double dt_ = 0.0;
    std::vector<double> data_;
};

inline IntegrationOptions entropy_flow_options() {
    IntegrationOptions o;
    o.rtol = 1e-9;
    o.atol = 1e-9;
    return o;
}

/// Integrates every point to horizon T and stores probes at multiples of dt.
inline ProbeSet probe_orbits(const MetricSpec& spec, const std::vector<PhasePoint>& pts, double T, double dt,
                             const IntegrationOptions& base = entropy_flow_options()) {
    if (!(dt > 0.0) || !(T > 0.0)) throw ValidationError("probe_orbits: horizon and dt_probe must be positive");
    const double steps = T / dt;
    const std::size_t n = std::size_t(std::llround(steps));
    if (std::abs(steps - double(n)) > 1e-9 * steps) throw ValidationError("probe_orbits: horizon must be a multiple of dt_probe");
    ProbeSet ps(pts.size(), n + 1, dt);
    parallel_for(pts.size(), [&](std::size_t i) {
        double* r = ps.row(i);
        std::size_t k = 0;
        detail::run_flow(
            spec, pts[i].unit_tangent(), T, base, dt,
            [&](double, const Vec2& p, const Vec2& v, double) {
                if (k > n) return;
                r[3 * k] = p.x - std::floor(p.x);
                r[3 * k + 1] = p.y - std::floor(p.y);
                r[3 * k + 2] = std::atan2(v.y, v.x);
                ++k;
            },
            nullptr, nullptr);
        if (k != n + 1) throw StepFailure("probe_orbits: sample count mismatch", T);
    });
    return ps;
}

namespace detail {

/// Phase distance at a point of the linear interpolation between samples,
/// given unwrapped differences.
inline double interp_dist(double dx, double dy, double da, double w) {
    return torus_dist(dx, dy) + w * std::abs(wrap_pi(da));
}

/// Maximum phase distance over [0, samples_used) intervals of two probe
/// rows, or early exit as soon as it exceeds eps (returns a value > eps).
/// Within an interval each term is convex except at wrap points (a base
/// difference component at 1/2, the angle difference at pi), so the maximum
/// is attained at the ends or at those points.
inline double row_max_distance(const double* a, const double* b, std::size_t samples_used, double eps, double w) {
    auto diff = [&](std::size_t k, double& dx, double& dy, double& da) {
        dx = wrap_half(a[3 * k] - b[3 * k]);
        dy = wrap_half(a[3 * k + 1] - b[3 * k + 1]);
        da = wrap_pi(a[3 * k + 2] - b[3 * k + 2]);
    };
    double best = 0.0;
    double x1, y1, a1;
    const std::size_t last = samples_used - 1;
    diff(0, x1, y1, a1);
    best = interp_dist(x1, y1, a1, w);
    if (best > eps || samples_used == 1) return best;
    diff(last, x1, y1, a1);
    best = std::max(best, interp_dist(x1, y1, a1, w));
    if (best > eps) return best;
    // Scan backwards: separation usually shows late.
    for (std::size_t k = last; k > 0; --k) {
        double x0, y0, a0;
        diff(k - 1, x0, y0, a0);
        // Unwrapped increments across the interval.
        const double ex = x0 + wrap_half(x1 - x0), ey = y0 + wrap_half(y1 - y0), ea = a0 + wrap_pi(a1 - a0);
        double v = interp_dist(x0, y0, a0, w);
        const auto probe = [&](double s) {
            v = std::max(v, interp_dist(x0 + s * (ex - x0), y0 + s * (ey - y0), a0 + s * (ea - a0), w));
        };
        const auto crossings = [&](double p, double q, double level) {
            // Parameters s in (0, 1) where p + s (q - p) = level + integer * period.
            const double lo = std::min(p, q), hi = std::max(p, q);
            if (hi - lo <= 0.0) return;
            const double period = 2.0 * level;
            for (double c = std::ceil((lo - level) / period) * period + level; c < hi; c += period) probe((c - p) / (q - p));
        };
        crossings(x0, ex, 0.5);
        crossings(y0, ey, 0.5);
        crossings(a0, ea, kTwoPi * 0.5);
        best = std::max(best, v);
        if (best > eps) return best;
        x1 = x0, y1 = y0, a1 = a0;
    }
    return best;
}

}  // namespace detail

/// d_T(u, v): maximum phase distance along both orbits up to T, sampled
/// every dt_probe and interpolated linearly between probes.
inline double dynamical_distance(const MetricSpec& spec, const PhasePoint& u, const PhasePoint& v, double T,
                                 double dt_probe = 0.05, double angle_weight = 1.0) {
    const ProbeSet ps = probe_orbits(spec, {u, v}, T, dt_probe);
    return detail::row_max_distance(ps.row(0), ps.row(1), ps.samples(), std::numeric_limits<double>::infinity(),
                                    angle_weight);
}

/// Uniform sample on the unit tangent bundle: base uniform on the torus,
/// Euclidean direction angle uniform. Prefixes of a longer sample with the
/// same seed are the shorter samples.
inline std::vector<PhasePoint> sample_phase_points(const MetricSpec& spec, std::size_t M, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&] { return double(rng() >> 11) * 0x1.0p-53; };
    std::vector<PhasePoint> out;
    out.reserve(M);
    for (std::size_t i = 0; i < M; ++i) {
        const double x = unit(), y = unit(), a = kTwoPi * unit();
        out.push_back(PhasePoint::from(spec, {x, y}, a));
    }
    return out;
}

/// Greedy separated subset: scans candidates in order and keeps a point iff
/// it is eps-far from every kept point in d_T. `seed_set` must already be
/// separated; it is kept and extended.
inline std::vector<std::size_t> greedy_separated(const ProbeSet& ps, std::size_t M, std::size_t samples_used,
                                                 double eps, std::vector<std::size_t> seed_set = {},
                                                 double angle_weight = 1.0) {
    std::vector<char> in(M, 0);
    for (std::size_t i : seed_set) in[i] = 1;
    std::vector<std::size_t> kept = std::move(seed_set);
    for (std::size_t i = 0; i < M; ++i) {
        if (in[i]) continue;
        bool separated = true;
        // Newest first: recent keeps are as likely as any to be close.
        for (std::size_t k = kept.size(); k-- > 0;) {
            if (detail::row_max_distance(ps.row(i), ps.row(kept[k]), samples_used, eps, angle_weight) <= eps) {
                separated = false;
                break;
            }
        }
        if (separated) {
            kept.push_back(i);
            in[i] = 1;
        }
    }
    return kept;
}

inline std::size_t separated_set_size(const MetricSpec& spec, const std::vector<PhasePoint>& sample, double T,
                                      double eps, double dt_probe = 0.05) {
    const ProbeSet ps = probe_orbits(spec, sample, T, dt_probe);
    return greedy_separated(ps, sample.size(), ps.samples(), eps).size();
}

struct EntropyProtocol {
    std::size_t M = 4096;
    std::vector<double> horizons{20, 40, 80, 160};
    std::vector<double> epsilons{0.5, 0.25, 0.125};
    double dt_probe = 0.05;
    std::uint64_t seed = 1;
    /// Sample prefixes as fractions of M' = M / 2^k, smallest first; the last is M itself.
    int prefix_levels = 3;
    double angle_weight = 1.0;
    double saturation = 0.5;

    static EntropyProtocol calibration() { return {}; }
    /// Short horizons and coarse scales, for flows whose separated sets
    /// exhaust the calibration sample within a few time units.
    static EntropyProtocol coarse() {
        EntropyProtocol p;
        p.horizons = {1, 2, 3, 4};
        p.epsilons = {2.0, 1.5, 1.0};
        return p;
    }
    static EntropyProtocol preset(const std::string& name) {
        if (name == "calibration") return calibration();
        if (name == "coarse") return coarse();
        throw ValidationError("unknown entropy preset '" + name + "'");
    }
    std::vector<std::size_t> prefix_sizes() const {
        std::vector<std::size_t> out;
        for (int k = prefix_levels - 1; k >= 0; --k) out.push_back(std::max<std::size_t>(1, M >> k));
        return out;
    }
};

struct EntropyEstimate {
    EntropyProtocol protocol;
    std::string metric;
    std::vector<std::size_t> prefix_sizes;
    /// r[m][t][e]: kept-set sizes for prefix m, horizon t, scale e.
    std::vector<std::vector<std::vector<std::size_t>>> r;
    std::vector<double> slopes;  // per eps, full sample, final half of the T ladder
    double headline = 0.0;
    int headline_eps = -1;
    bool sample_limited = false;
    double eps_extrapolated = 0.0;

    std::size_t at(std::size_t m, std::size_t t, std::size_t e) const { return r[m][t][e]; }
    const std::vector<std::vector<std::size_t>>& full() const { return r.back(); }

    bool monotone_in_T() const {
        for (const auto& g : r)
            for (std::size_t t = 1; t < g.size(); ++t)
                for (std::size_t e = 0; e < g[t].size(); ++e)
                    if (g[t][e] < g[t - 1][e]) return false;
        return true;
    }
    /// Scales are stored largest first, so sizes must not decrease along e.
    bool monotone_in_eps() const {
        for (const auto& g : r)
            for (const auto& row : g)
                for (std::size_t e = 1; e < row.size(); ++e)
                    if (row[e] < row[e - 1]) return false;
        return true;
    }
    bool monotone_in_M() const {
        for (std::size_t m = 1; m < r.size(); ++m)
            for (std::size_t t = 0; t < r[m].size(); ++t)
                for (std::size_t e = 0; e < r[m][t].size(); ++e)
                    if (r[m][t][e] < r[m - 1][t][e]) return false;
        return true;
    }
};

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= double(n), my /= double(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline void summarize_entropy(EntropyEstimate& est) {
    const EntropyProtocol& p = est.protocol;
    const auto& g = est.full();
    const std::size_t nT = p.horizons.size(), nE = p.epsilons.size();
    const std::size_t first = nT / 2 > 0 && nT >= 2 ? nT - std::max<std::size_t>(2, nT - nT / 2) : 0;
    est.slopes.assign(nE, 0.0);
    for (std::size_t e = 0; e < nE; ++e) {
        std::vector<double> xs, ys;
        for (std::size_t t = first; t < nT; ++t) xs.push_back(p.horizons[t]), ys.push_back(std::log(double(g[t][e])));
        est.slopes[e] = xs.size() >= 2 ? least_squares_slope(xs, ys) : 0.0;
    }
    const double cap = p.saturation * double(est.prefix_sizes.back());
    est.headline_eps = -1;
    est.eps_extrapolated = 0.0;
    for (std::size_t e = 0; e < nE; ++e)
        if (double(g[nT - 1][e]) < cap) {
            est.headline_eps = int(e);
            est.eps_extrapolated = std::max(est.eps_extrapolated, est.slopes[e]);
        }
    est.sample_limited = est.headline_eps < 0;
    if (est.sample_limited) est.headline_eps = 0;
    est.headline = est.slopes[std::size_t(est.headline_eps)];
    if (est.sample_limited) est.eps_extrapolated = est.headline;
}

/// Each (prefix, T, eps) cell is seeded with the largest kept set among the
/// cells it dominates (smaller prefix, shorter horizon, larger eps) and then
/// extended greedily; every seed stays separated, so the grid is monotone in
/// all three directions by construction.
inline EntropyEstimate estimate_entropy(const MetricSpec& spec, EntropyProtocol p) {
    if (p.M == 0 || p.horizons.empty() || p.epsilons.empty()) throw ValidationError("estimate_entropy: empty protocol");
    std::sort(p.horizons.begin(), p.horizons.end());
    std::sort(p.epsilons.begin(), p.epsilons.end(), std::greater<>());
    if (p.prefix_levels < 1) p.prefix_levels = 1;
    for (double t : p.horizons) {
        const double k = t / p.dt_probe;
        if (t <= 0.0 || std::abs(k - std::round(k)) > 1e-9 * k)
            throw ValidationError("estimate_entropy: horizons must be positive multiples of dt_probe");
    }
    EntropyEstimate est;
    est.protocol = p;
    est.metric = spec.name();
    est.prefix_sizes = p.prefix_sizes();
    const std::vector<PhasePoint> sample = sample_phase_points(spec, p.M, p.seed);
    const ProbeSet ps = probe_orbits(spec, sample, p.horizons.back(), p.dt_probe);
    const std::size_t nM = est.prefix_sizes.size(), nT = p.horizons.size(), nE = p.epsilons.size();
    using Set = std::vector<std::size_t>;
    std::vector<std::vector<std::vector<Set>>> kept(nM, std::vector<std::vector<Set>>(nT, std::vector<Set>(nE)));
    est.r.assign(nM, std::vector<std::vector<std::size_t>>(nT, std::vector<std::size_t>(nE, 0)));
    for (std::size_t m = 0; m < nM; ++m)
        for (std::size_t t = 0; t < nT; ++t) {
            const std::size_t used = std::size_t(std::llround(p.horizons[t] / p.dt_probe)) + 1;
            for (std::size_t e = 0; e < nE; ++e) {
                const Set* seed = nullptr;
                auto consider = [&](const Set& s) {
                    if (!seed || s.size() > seed->size()) seed = &s;
                };
                if (m > 0) consider(kept[m - 1][t][e]);
                if (t > 0) consider(kept[m][t - 1][e]);
                if (e > 0) consider(kept[m][t][e - 1]);
                kept[m][t][e] = greedy_separated(ps, est.prefix_sizes[m], used, p.epsilons[e], seed ? *seed : Set{},
                                                 p.angle_weight);
                est.r[m][t][e] = kept[m][t][e].size();
            }
        }
    summarize_entropy(est);
    return est;
}

/// Direct check that a kept set is pairwise separated (used by tests).
inline bool verify_separated(const ProbeSet& ps, const std::vector<std::size_t>& kept, std::size_t samples_used,
                             double eps, double angle_weight = 1.0) {
    for (std::size_t a = 0; a < kept.size(); ++a)
        for (std::size_t b = a + 1; b < kept.size(); ++b)
            if (detail::row_max_distance(ps.row(kept[a]), ps.row(kept[b]), samples_used,
                                         std::numeric_limits<double>::infinity(), angle_weight) <= eps)
                return false;
    return true;
}

}  // namespace torusflow
