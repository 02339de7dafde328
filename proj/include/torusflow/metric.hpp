#pragma once

// Z^2-periodic Riemannian metrics on R^2 given by truncated Fourier series.
//
// A metric is g = exp(2 f) * G where G = [[g11, g12], [g12, g22]] and f are
// finite sums of terms  c*cos(2 pi (mx x + my y)) + s*sin(2 pi (mx x + my y)).
// With an empty exponent f this is the plain per-component Fourier metric;
// the exponent lets conformal metrics exp(2f)|dx|^2 be represented exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "torusflow/errors.hpp"
#include "torusflow/vec2.hpp"

namespace torusflow {

struct FourierTerm {
    int mode_x = 0;
    int mode_y = 0;
    double cos_coeff = 0.0;
    double sin_coeff = 0.0;
};

enum class Component { g11 = 0, g12 = 1, g22 = 2, exponent = 3 };

inline const char* component_name(Component c) {
    switch (c) {
        case Component::g11: return "g11";
        case Component::g12: return "g12";
        case Component::g22: return "g22";
        case Component::exponent: return "f";
    }
    return "?";
}

/// Value and partial derivatives up to second order of a scalar field.
struct Jet {
    double v = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    double dxx = 0.0;
    double dxy = 0.0;
    double dyy = 0.0;
};

struct MetricValue {
    Sym2 g;
    Sym2 dg_dx;
    Sym2 dg_dy;
    Vec2 point;
};

/// g and all partials up to second order; used by curvature computations.
struct MetricJet {
    Sym2 g, gx, gy, gxx, gxy, gyy;
};

/// Christoffel symbols of the second kind, Gamma^k_ij, symmetric in (i, j).
struct Christoffel {
    std::array<double, 8> c{};
    double operator()(int k, int i, int j) const { return c[k * 4 + i * 2 + j]; }
    double& at(int k, int i, int j) { return c[k * 4 + i * 2 + j]; }

    /// Gamma^k_ij v^i w^j for k = 0, 1.
    Vec2 contract(const Vec2& v, const Vec2& w) const {
        const auto comp = [&](int k) {
            return (*this)(k, 0, 0) * v.x * w.x + (*this)(k, 0, 1) * (v.x * w.y + v.y * w.x) +
                   (*this)(k, 1, 1) * v.y * w.y;
        };
        return {comp(0), comp(1)};
    }
};

namespace detail {

inline constexpr int kMaxMode = 32;

/// cos/sin(2 pi k t) for k = 0..kmax, built by angle addition from k = 1.
struct TrigTable {
    std::array<double, kMaxMode + 1> c{};
    std::array<double, kMaxMode + 1> s{};

    void fill(double t, int kmax) {
        c[0] = 1.0;
        s[0] = 0.0;
        if (kmax == 0) return;
        const double c1 = std::cos(kTwoPi * t);
        const double s1 = std::sin(kTwoPi * t);
        c[1] = c1;
        s[1] = s1;
        for (int k = 2; k <= kmax; ++k) {
            c[k] = c[k - 1] * c1 - s[k - 1] * s1;
            s[k] = s[k - 1] * c1 + c[k - 1] * s1;
        }
    }
    double cos_of(int k) const { return c[k < 0 ? -k : k]; }
    double sin_of(int k) const { return k < 0 ? -s[-k] : s[k]; }
};

/// Reduces a cover coordinate to [0, 1).
inline double reduce_unit(double t) {
    double r = t - std::floor(t);
    return r >= 1.0 ? 0.0 : r;
}

}  // namespace detail

class MetricSpec {
public:
    MetricSpec() = default;

    /// Validates positivity on a 64x64 grid and records whether the
    /// coefficient l1 certificate holds. Throws ValidationError on failure.
    static MetricSpec create(std::string name, std::vector<FourierTerm> g11, std::vector<FourierTerm> g12,
                             std::vector<FourierTerm> g22, std::vector<FourierTerm> exponent,
                             double lambda_min) {
        MetricSpec m;
        m.name_ = std::move(name);
        m.terms_[0] = std::move(g11);
        m.terms_[1] = std::move(g12);
        m.terms_[2] = std::move(g22);
        m.terms_[3] = std::move(exponent);
        m.lambda_min_ = lambda_min;
        m.validate();
        return m;
    }

    const std::string& name() const { return name_; }
    double lambda_min() const { return lambda_min_; }
    /// True when the l1 coefficient bound proves positive-definiteness
    /// everywhere; false means only the grid check passed.
    bool certified() const { return certified_; }
    const std::vector<FourierTerm>& terms(Component c) const { return terms_[static_cast<int>(c)]; }
    int max_mode() const { return max_mode_; }

    /// Constant coefficients and no exponent: the metric is exactly flat.
    bool is_constant() const {
        for (const auto& comp : terms_)
            for (const auto& t : comp)
                if ((t.mode_x != 0 || t.mode_y != 0) && (t.cos_coeff != 0.0 || t.sin_coeff != 0.0)) return false;
        return true;
    }

    MetricValue eval(const Vec2& p) const {
        const Vec2 r{detail::reduce_unit(p.x), detail::reduce_unit(p.y)};
        detail::TrigTable tx, ty;
        tx.fill(r.x, max_mode_);
        ty.fill(r.y, max_mode_);
        std::array<Jet, 4> j;
        for (int c = 0; c < 4; ++c) j[c] = series<1>(terms_[c], tx, ty);
        MetricValue out;
        out.point = p;
        if (terms_[3].empty()) {
            out.g = {j[0].v, j[1].v, j[2].v};
            out.dg_dx = {j[0].dx, j[1].dx, j[2].dx};
            out.dg_dy = {j[0].dy, j[1].dy, j[2].dy};
            return out;
        }
        const double e = std::exp(2.0 * j[3].v);
        const double ex = 2.0 * j[3].dx * e;
        const double ey = 2.0 * j[3].dy * e;
        out.g = {e * j[0].v, e * j[1].v, e * j[2].v};
        out.dg_dx = {ex * j[0].v + e * j[0].dx, ex * j[1].v + e * j[1].dx, ex * j[2].v + e * j[2].dx};
        out.dg_dy = {ey * j[0].v + e * j[0].dy, ey * j[1].v + e * j[1].dy, ey * j[2].v + e * j[2].dy};
        return out;
    }

    Sym2 metric_at(const Vec2& p) const { return eval(p).g; }

    MetricJet eval_jet(const Vec2& p) const {
        const Vec2 r{detail::reduce_unit(p.x), detail::reduce_unit(p.y)};
        detail::TrigTable tx, ty;
        tx.fill(r.x, max_mode_);
        ty.fill(r.y, max_mode_);
        std::array<Jet, 4> j;
        for (int c = 0; c < 4; ++c) j[c] = series<2>(terms_[c], tx, ty);
        const Jet& f = j[3];
        const double e = std::exp(2.0 * f.v);
        const Jet ej{e,
                     2.0 * f.dx * e,
                     2.0 * f.dy * e,
                     e * (2.0 * f.dxx + 4.0 * f.dx * f.dx),
                     e * (2.0 * f.dxy + 4.0 * f.dx * f.dy),
                     e * (2.0 * f.dyy + 4.0 * f.dy * f.dy)};
        auto prod = [&](const Jet& a) {
            return Jet{ej.v * a.v,
                       ej.dx * a.v + ej.v * a.dx,
                       ej.dy * a.v + ej.v * a.dy,
                       ej.dxx * a.v + 2.0 * ej.dx * a.dx + ej.v * a.dxx,
                       ej.dxy * a.v + ej.dx * a.dy + ej.dy * a.dx + ej.v * a.dxy,
                       ej.dyy * a.v + 2.0 * ej.dy * a.dy + ej.v * a.dyy};
        };
        const Jet a = prod(j[0]), b = prod(j[1]), c = prod(j[2]);
        return {{a.v, b.v, c.v},       {a.dx, b.dx, c.dx},    {a.dy, b.dy, c.dy},
                {a.dxx, b.dxx, c.dxx}, {a.dxy, b.dxy, c.dxy}, {a.dyy, b.dyy, c.dyy}};
    }

private:
    template <int Order>
    static Jet series(const std::vector<FourierTerm>& terms, const detail::TrigTable& tx,
                      const detail::TrigTable& ty) {
        Jet out;
        for (const auto& t : terms) {
            const double cx = tx.cos_of(t.mode_x), sx = tx.sin_of(t.mode_x);
            const double cy = ty.cos_of(t.mode_y), sy = ty.sin_of(t.mode_y);
            const double cp = cx * cy - sx * sy;
            const double sp = sx * cy + cx * sy;
            const double val = t.cos_coeff * cp + t.sin_coeff * sp;
            out.v += val;
            if (t.mode_x == 0 && t.mode_y == 0) continue;
            const double der = t.sin_coeff * cp - t.cos_coeff * sp;  // d/dphi
            const double kx = kTwoPi * t.mode_x, ky = kTwoPi * t.mode_y;
            out.dx += kx * der;
            out.dy += ky * der;
            if constexpr (Order >= 2) {
                out.dxx -= kx * kx * val;
                out.dxy -= kx * ky * val;
                out.dyy -= ky * ky * val;
            }
        }
        return out;
    }

    void validate() {
        if (!(lambda_min_ > 0.0)) throw ValidationError("metric '" + name_ + "': lambda_min must be positive");
        max_mode_ = 0;
        for (int c = 0; c < 4; ++c) {
            for (const auto& t : terms_[c]) {
                if (std::abs(t.mode_x) > detail::kMaxMode || std::abs(t.mode_y) > detail::kMaxMode)
                    throw ValidationError("metric '" + name_ + "': Fourier mode exceeds " +
                                          std::to_string(detail::kMaxMode));
                if (!std::isfinite(t.cos_coeff) || !std::isfinite(t.sin_coeff))
                    throw ValidationError("metric '" + name_ + "': non-finite coefficient");
                max_mode_ = std::max({max_mode_, std::abs(t.mode_x), std::abs(t.mode_y)});
            }
        }
        constexpr int n = 64;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                const Sym2 g = metric_at({double(i) / n, double(k) / n});
                if (!(g.xx > 0.0) || !(g.det() >= lambda_min_))
                    throw ValidationError("metric '" + name_ + "' fails positivity at (" +
                                          std::to_string(double(i) / n) + ", " + std::to_string(double(k) / n) +
                                          "): det = " + std::to_string(g.det()));
            }
        }
        // Sufficient certificate for G (exp(2f) > 0 never affects positivity):
        // each component lies within its l1 radius of its constant term.
        std::array<double, 3> base{}, radius{};
        for (int c = 0; c < 3; ++c) {
            for (const auto& t : terms_[c]) {
                if (t.mode_x == 0 && t.mode_y == 0)
                    base[c] += t.cos_coeff;
                else
                    radius[c] += std::abs(t.cos_coeff) + std::abs(t.sin_coeff);
            }
        }
        const double lo11 = base[0] - radius[0], lo22 = base[2] - radius[2];
        const double hi12 = std::abs(base[1]) + radius[1];
        certified_ = lo11 > 0.0 && lo22 > 0.0 && lo11 * lo22 - hi12 * hi12 > 0.0;
    }

    std::string name_;
    std::array<std::vector<FourierTerm>, 4> terms_;
    double lambda_min_ = 1.0;
    bool certified_ = false;
    int max_mode_ = 0;
};

inline MetricValue eval_metric(const MetricSpec& spec, const Vec2& p) { return spec.eval(p); }

inline Christoffel christoffel(const MetricValue& m) {
    const Sym2 gi = m.g.inverse();
    // d[l] holds the partial of g along coordinate l.
    const std::array<const Sym2*, 2> d{&m.dg_dx, &m.dg_dy};
    Christoffel out;
    for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
            std::array<double, 2> lower{};  // Gamma_{l ij}
            for (int l = 0; l < 2; ++l)
                lower[l] = 0.5 * (d[i]->entry(j, l) + d[j]->entry(i, l) - d[l]->entry(i, j));
            for (int k = 0; k < 2; ++k) {
                const double v = gi.entry(k, 0) * lower[0] + gi.entry(k, 1) * lower[1];
                out.at(k, i, j) = v;
                out.at(k, j, i) = v;
            }
        }
    }
    return out;
}

inline Christoffel christoffel(const MetricSpec& spec, const Vec2& p) { return christoffel(spec.eval(p)); }

/// Gauss curvature from the Brioschi formula with E = g11, F = g12, G = g22.
inline double gauss_curvature(const MetricJet& j) {
    const double E = j.g.xx, F = j.g.xy, G = j.g.yy;
    const double Eu = j.gx.xx, Ev = j.gy.xx, Fu = j.gx.xy, Fv = j.gy.xy, Gu = j.gx.yy, Gv = j.gy.yy;
    const double Evv = j.gyy.xx, Fuv = j.gxy.xy, Guu = j.gxx.yy;
    auto det3 = [](double a, double b, double c, double d, double e, double f, double g, double h, double i) {
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    };
    const double a = det3(-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,  //
                          Fv - 0.5 * Gu, E, F,                                //
                          0.5 * Gv, F, G);
    const double b = det3(0.0, 0.5 * Ev, 0.5 * Gu,  //
                          0.5 * Ev, E, F,           //
                          0.5 * Gu, F, G);
    const double w = E * G - F * F;
    return (a - b) / (w * w);
}

inline double gauss_curvature(const MetricSpec& spec, const Vec2& p) {
    if (spec.is_constant()) return 0.0;
    return gauss_curvature(spec.eval_jet(p));
}

/// Riemannian area-weighted integral of K over the fundamental domain
/// (periodic trapezoid rule, spectrally accurate for smooth metrics).
inline double gauss_bonnet_integral(const MetricSpec& spec, int n = 256) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const Vec2 p{double(i) / n, double(k) / n};
            const MetricJet j = spec.eval_jet(p);
            sum += gauss_curvature(j) * std::sqrt(j.g.det());
        }
    return sum / (double(n) * n);
}

struct CurvatureExtremum {
    double max_abs = 0.0;
    Vec2 where;
};

inline CurvatureExtremum max_abs_curvature(const MetricSpec& spec, int n = 256) {
    CurvatureExtremum out;
    if (spec.is_constant()) return out;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const Vec2 p{double(i) / n, double(k) / n};
            const double kv = std::abs(gauss_curvature(spec, p));
            if (kv > out.max_abs) out = {kv, p};
        }
    return out;
}

/// Riemannian length of a vector at p.
inline double g_norm(const MetricSpec& spec, const Vec2& p, const Vec2& v) {
    return std::sqrt(spec.metric_at(p).quad(v));
}

/// Riemannian length of the segment a->b by midpoint quadrature.
inline double segment_length(const MetricSpec& spec, const Vec2& a, const Vec2& b) {
    return g_norm(spec, 0.5 * (a + b), b - a);
}

}  // namespace torusflow
