#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "errors.hpp"

namespace frontier::num {

inline constexpr double pi = std::numbers::pi;

// Solutions of y'' = c y with y(0)=0, y'(0)=1 (S) and y(0)=1, y'(0)=0 (C).
// Taylor branch keeps them smooth through c = 0.
inline double S(double x, double c) {
    const double z = c * x * x;
    if (std::abs(z) < 1e-3) {
        double term = x, sum = x;
        for (int n = 1; n < 8; ++n) {
            term *= z / ((2.0 * n) * (2.0 * n + 1.0));
            sum += term;
        }
        return sum;
    }
    if (c > 0) {
        const double s = std::sqrt(c);
        return std::sinh(s * x) / s;
    }
    const double s = std::sqrt(-c);
    return std::sin(s * x) / s;
}

inline double C(double x, double c) {
    const double z = c * x * x;
    if (std::abs(z) < 1e-3) {
        double term = 1.0, sum = 1.0;
        for (int n = 1; n < 8; ++n) {
            term *= z / ((2.0 * n - 1.0) * (2.0 * n));
            sum += term;
        }
        return sum;
    }
    if (c > 0) return std::cosh(std::sqrt(c) * x);
    return std::cos(std::sqrt(-c) * x);
}

// 1 - tanh(x) for x >= 0 without cancellation.
inline double one_minus_tanh(double x) {
    const double e = std::exp(-2.0 * x);
    return 2.0 * e / (1.0 + e);
}

// Bisection on a sign change; stops at the tolerance or when the midpoint no
// longer moves.
template <class F>
double bisect(F&& f, double lo, double hi, double abs_tol, double rel_tol = 0.0,
              int max_iter = 400) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw BracketError("bisection bracket has no sign change");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= std::max(abs_tol, rel_tol * std::abs(mid))) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace frontier::num
