#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "errors.hpp"

namespace frontier {

// Branching mechanism -a u + b u^alpha, or -a u + b u log u when alpha = 1.
struct CsbpParams {
    double a = 0;
    double b = 1;
    double alpha = 2;
};

namespace csbp {

inline void check(const CsbpParams& p) {
    if (!(p.b > 0)) throw DomainError("csbp: b must be > 0");
    if (!(p.alpha >= 1.0 && p.alpha <= 2.0)) throw DomainError("csbp: alpha must lie in [1, 2]");
}

inline double psi(const CsbpParams& p, double u) {
    if (!(u >= 0)) throw DomainError("csbp: psi needs u >= 0");
    if (p.alpha == 1.0) return -p.a * u + (u == 0 ? 0.0 : p.b * u * std::log(u));
    return -p.a * u + p.b * std::pow(u, p.alpha);
}

inline bool has_closed_form(const CsbpParams& p) { return p.a == 0 && p.alpha > 1.0 && p.alpha <= 2.0; }

inline double u_closed(const CsbpParams& p, double lambda, double t) {
    const double e = p.alpha - 1.0;
    return std::pow(std::pow(lambda, -e) + p.b * e * t, -1.0 / e);
}

// du/dt = -psi(u), classical RK4 with step doubling.
inline double u_rk4(const CsbpParams& p, double lambda, double t, double rel_tol = 1e-10) {
    auto f = [&](double u) { return -psi(p, std::max(u, 0.0)); };
    auto rk = [&](double u, double h) {
        const double k1 = f(u);
        const double k2 = f(u + 0.5 * h * k1);
        const double k3 = f(u + 0.5 * h * k2);
        const double k4 = f(u + h * k3);
        return u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    };
    double u = lambda, s = 0.0;
    double h = std::min(t, 1e-3 * std::max(1.0, t));
    // local tolerance per unit time keeps the global error near rel_tol
    const double tol = rel_tol * 1e-2;
    int guard = 0;
    while (t - s > 0) {
        if (++guard > 50'000'000) throw TruncationError("csbp: RK4 step control failed");
        h = std::min(h, t - s);
        const double full = rk(u, h);
        const double half = rk(rk(u, 0.5 * h), 0.5 * h);
        const double err = std::abs(half - full) / 15.0;
        const double scale = std::max(std::abs(half), std::numeric_limits<double>::min());
        if (err <= tol * scale || h < 1e-14 * std::max(1.0, t)) {
            s += h;
            u = half + (half - full) / 15.0;
            const double grow = err > 0 ? 0.9 * std::pow(tol * scale / err, 0.2) : 4.0;
            h *= std::min(4.0, std::max(1.0, grow));
        } else {
            h *= std::max(0.1, 0.9 * std::pow(tol * scale / err, 0.2));
        }
    }
    return u;
}

inline double u_flow(const CsbpParams& p, double lambda, double t) {
    check(p);
    if (!(lambda > 0)) throw DomainError("csbp: lambda must be > 0");
    if (!(t >= 0)) throw DomainError("csbp: t must be >= 0");
    if (t == 0) return lambda;
    return has_closed_form(p) ? u_closed(p, lambda, t) : u_rk4(p, lambda, t);
}

inline double laplace(const CsbpParams& p, double x0, double lambda, double t) {
    if (!(x0 >= 0)) throw DomainError("csbp: x0 must be >= 0");
    return std::exp(-x0 * u_flow(p, lambda, t));
}

struct LaplacePoint {
    double lambda;
    double value;
    double se;
};

struct FitResult {
    double b = 0;
    double chi2 = 0;
    double max_abs_z = 0;
    std::vector<double> fitted;
    std::vector<double> z;  // (empirical - fitted) / se
};

// One-parameter least squares in log b for exp(-x0 u_t(lambda)) with fixed a and alpha.
inline FitResult fit_b(const std::vector<LaplacePoint>& pts, double x0, double t, double alpha, double a = 0.0,
                       double log_b_lo = -12.0, double log_b_hi = 8.0) {
    if (pts.empty()) throw DomainError("csbp fit: no data");
    auto se_of = [](const LaplacePoint& q) { return std::max(q.se, 1e-12); };
    auto chi2 = [&](double lb) {
        const CsbpParams p{a, std::exp(lb), alpha};
        double s = 0;
        for (const auto& q : pts) {
            const double r = (q.value - laplace(p, x0, q.lambda, t)) / se_of(q);
            s += r * r;
        }
        return s;
    };
    // coarse scan guards against a flat start; Brent polishes
    const int n = 80;
    int best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double v = chi2(log_b_lo + (log_b_hi - log_b_lo) * i / n);
        if (v < best_v) best_v = v, best = i;
    }
    const double step = (log_b_hi - log_b_lo) / n;
    const double lo = log_b_lo + step * std::max(best - 1, 0);
    const double hi = log_b_lo + step * std::min(best + 1, n);
    const auto r = boost::math::tools::brent_find_minima(chi2, lo, hi, 52);
    FitResult out;
    out.b = std::exp(r.first);
    out.chi2 = r.second;
    const CsbpParams p{a, out.b, alpha};
    for (const auto& q : pts) {
        const double f = laplace(p, x0, q.lambda, t);
        out.fitted.push_back(f);
        out.z.push_back((q.value - f) / se_of(q));
        out.max_abs_z = std::max(out.max_abs_z, std::abs(out.z.back()));
    }
    return out;
}

}  // namespace csbp
}  // namespace frontier
