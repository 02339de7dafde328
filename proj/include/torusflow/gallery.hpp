#pragma once

// Built-in metrics. Names may carry parameters: "conformal-bump:0.3",
// "liouville:0.2,0.1", "two-frequency:0.8".

#include <charconv>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "torusflow/metric.hpp"

namespace torusflow::gallery {

namespace detail {

inline double min_det_on_grid(const MetricSpec& probe, int n = 64) {
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) lo = std::min(lo, probe.metric_at({double(i) / n, double(k) / n}).det());
    return lo;
}

/// Builds a spec declaring lambda_min as half the grid minimum of det g.
inline MetricSpec with_margin(std::string name, std::vector<FourierTerm> g11, std::vector<FourierTerm> g12,
                              std::vector<FourierTerm> g22, std::vector<FourierTerm> f) {
    const MetricSpec probe = MetricSpec::create(name, g11, g12, g22, f, 1e-300);
    const double lam = 0.5 * min_det_on_grid(probe);
    return MetricSpec::create(std::move(name), std::move(g11), std::move(g12), std::move(g22), std::move(f), lam);
}

inline std::string fmt_param(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

/// cos(2 pi x) cos(2 pi y) as two Fourier terms scaled by a.
inline std::vector<FourierTerm> cos_cos(double a) { return {{1, 1, 0.5 * a, 0.0}, {1, -1, 0.5 * a, 0.0}}; }

}  // namespace detail

inline MetricSpec flat() { return MetricSpec::create("flat", {{0, 0, 1.0, 0.0}}, {}, {{0, 0, 1.0, 0.0}}, {}, 0.5); }

/// exp(2f)(dx^2 + dy^2) with f = A cos(2 pi x) cos(2 pi y).
inline MetricSpec conformal_bump(double amplitude = 0.1) {
    return detail::with_margin("conformal-bump:" + detail::fmt_param(amplitude), {{0, 0, 1.0, 0.0}}, {},
                               {{0, 0, 1.0, 0.0}}, detail::cos_cos(amplitude));
}

/// Conformal metric exp(2f)|dx|^2 for an arbitrary exponent series.
inline MetricSpec conformal(std::string name, std::vector<FourierTerm> exponent) {
    return detail::with_margin(std::move(name), {{0, 0, 1.0, 0.0}}, {}, {{0, 0, 1.0, 0.0}}, std::move(exponent));
}

/// (1 + a cos(2 pi x) + b cos(2 pi y))(dx^2 + dy^2): separable, so the
/// geodesic flow is integrable.
inline MetricSpec liouville(double a = 0.2, double b = 0.1) {
    std::vector<FourierTerm> lam{{0, 0, 1.0, 0.0}};
    if (a != 0.0) lam.push_back({1, 0, a, 0.0});
    if (b != 0.0) lam.push_back({0, 1, b, 0.0});
    return detail::with_margin("liouville:" + detail::fmt_param(a) + "," + detail::fmt_param(b), lam, {}, lam, {});
}

/// Non-separable conformal metric with two incommensurate Fourier
/// directions; at the default amplitude lifted geodesics loop around the
/// peaks of the conformal factor.
inline MetricSpec two_frequency(double amplitude = 0.8) {
    std::vector<FourierTerm> f = detail::cos_cos(amplitude);
    f.push_back({2, 1, 0.0, 0.25 * amplitude});
    return detail::with_margin("two-frequency:" + detail::fmt_param(amplitude), {{0, 0, 1.0, 0.0}}, {},
                               {{0, 0, 1.0, 0.0}}, std::move(f));
}

inline const std::vector<std::string>& names() {
    static const std::vector<std::string> n{"flat", "conformal-bump", "liouville", "two-frequency"};
    return n;
}

inline std::vector<MetricSpec> all() { return {flat(), conformal_bump(), liouville(), two_frequency()}; }

/// Resolves "name" or "name:p1,p2". Throws ValidationError for unknown names.
inline MetricSpec by_name(std::string_view ref) {
    const auto colon = ref.find(':');
    const std::string_view base = ref.substr(0, colon);
    std::vector<double> params;
    if (colon != std::string_view::npos) {
        std::string_view rest = ref.substr(colon + 1);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string_view tok = rest.substr(0, comma);
            double v = 0.0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size())
                throw ValidationError("bad metric parameter '" + std::string(tok) + "' in '" + std::string(ref) + "'");
            params.push_back(v);
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    }
    auto param = [&](std::size_t i, double def) { return i < params.size() ? params[i] : def; };
    if (base == "flat" && params.empty()) return flat();
    if (base == "conformal-bump" && params.size() <= 1) return conformal_bump(param(0, 0.1));
    if (base == "liouville" && params.size() <= 2) return liouville(param(0, 0.2), param(1, 0.1));
    if (base == "two-frequency" && params.size() <= 1) return two_frequency(param(0, 0.8));
    throw ValidationError("unknown gallery metric '" + std::string(ref) + "'");
}

}  // namespace torusflow::gallery
