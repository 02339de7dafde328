#pragma once

#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "torusflow/vec2.hpp"

namespace torusflow {

/// Translation (x, y) -> (x + m, y + n) of the universal cover.
struct DeckTransform {
    long long m = 0;
    long long n = 0;

    constexpr DeckTransform compose(const DeckTransform& o) const { return {m + o.m, n + o.n}; }
    constexpr DeckTransform inverse() const { return {-m, -n}; }
    constexpr DeckTransform power(long long k) const { return {k * m, k * n}; }
    constexpr bool trivial() const { return m == 0 && n == 0; }
    Vec2 offset() const { return {double(m), double(n)}; }
    Vec2 apply(const Vec2& p) const { return p + offset(); }

    /// gcd(|m|, |n|); zero for the identity.
    long long divisor() const { return std::gcd(std::llabs(m), std::llabs(n)); }
    /// Not a nontrivial power of another translation element.
    bool primitive() const { return !trivial() && divisor() == 1; }

    /// Representative of [tau]: the primitive vector with first nonzero
    /// coordinate positive. Undefined (returns identity) for the identity.
    DeckTransform class_rep() const {
        if (trivial()) return {};
        const long long d = divisor();
        DeckTransform r{m / d, n / d};
        if (r.m < 0 || (r.m == 0 && r.n < 0)) r = r.inverse();
        return r;
    }
    bool equivalent(const DeckTransform& o) const { return !trivial() && !o.trivial() && class_rep() == o.class_rep(); }
    long long sup_norm() const { return std::max(std::llabs(m), std::llabs(n)); }

    std::string key() const { return std::to_string(m) + "/" + std::to_string(n); }

    friend constexpr bool operator==(const DeckTransform&, const DeckTransform&) = default;
};

/// Class representatives [tau] with sup-norm at most `radius`, ordered by
/// sup-norm then lexicographically.
inline std::vector<DeckTransform> primitive_classes(int radius) {
    std::vector<DeckTransform> out;
    for (int r = 1; r <= radius; ++r)
        for (long long m = 0; m <= r; ++m)
            for (long long n = -r; n <= r; ++n) {
                const DeckTransform t{m, n};
                if (t.sup_norm() != r || !t.primitive() || !(t.class_rep() == t)) continue;
                out.push_back(t);
            }
    return out;
}

}  // namespace torusflow
