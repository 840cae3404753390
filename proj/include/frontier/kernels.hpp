#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "regimes.hpp"
#include "spectrum.hpp"

namespace frontier {

struct KernelConfig {
    double rho = 0;
    double L = 0;
    FiniteSpectrum spectrum;
    double tail_tol = 1e-12;  // exponentially convergent sums
    double algebraic_tol = 1e-10;  // resolvent-corrected sums, terms decay like k^-3
    int max_terms = 0;
};

// Solutions at spectral parameter lambda = lambda_inf + xi of (1/2)u'' + (r - 1/2)u = lambda u.
// phi(0) = 0, phi = S(x, 2 lambda + 1 - rho) on [0,1]; psi(L) = 0, psi = S(L - x, 2 lambda) on [1,L].
struct GreenComponents {
    double rho = 0, L = 0, xi = 0, lambda = 0, mu = 0;
    double s = 0;      // sqrt(2 lambda)
    double kappa = 0;  // 2 lambda + 1 - rho
    double wronskian = 0;  // psi phi' - psi' phi for the functions above (may overflow for large L)
    double w_scaled = 0;   // wronskian * e^{-s(L-1)}
    // f, g, w in the sin/sinh normalization: f = s sin(gamma) + gamma cos(gamma), etc.
    double f_val = 0, g_val = 0, w = 0;

    double phi(double x) const {
        if (x <= 1.0) return num::S(x, kappa);
        const double c = 2.0 * lambda;
        return num::S(1.0, kappa) * num::C(x - 1.0, c) + num::C(1.0, kappa) * num::S(x - 1.0, c);
    }
    double psi(double x) const {
        const double c = 2.0 * lambda;
        if (x >= 1.0) return num::S(L - x, c);
        return num::S(L - 1.0, c) * num::C(1.0 - x, kappa) + num::C(L - 1.0, c) * num::S(1.0 - x, kappa);
    }
    double dphi(double x) const {
        if (x <= 1.0) return num::C(x, kappa);
        const double c = 2.0 * lambda;
        return num::S(1.0, kappa) * c * num::S(x - 1.0, c) + num::C(1.0, kappa) * num::C(x - 1.0, c);
    }
    double dpsi(double x) const {
        const double c = 2.0 * lambda;
        if (x >= 1.0) return -num::C(L - x, c);
        return -num::S(L - 1.0, c) * kappa * num::S(1.0 - x, kappa) - num::C(L - 1.0, c) * num::C(1.0 - x, kappa);
    }

    // 2 psi(max) phi(min) / wronskian, i.e. int_0^inf e^{-lambda t} q_t dt, overflow free.
    double resolvent(double x, double y) const {
        const double a = std::min(x, y), b = std::max(x, y);
        return 2.0 * phi_hat(a) * psi_hat(b) / w_scaled * std::exp(s * (std::max(a, 1.0) - std::max(b, 1.0)));
    }

    // d/dy of the resolvent at y = L, for x < L.
    double resolvent_dy_at_L(double x) const {
        return -2.0 * phi_hat(x) / w_scaled * std::exp(s * (std::max(x, 1.0) - L));
    }

  private:
    static double S_hat(double u, double s) { return s > 0 ? -std::expm1(-2.0 * s * u) / (2.0 * s) : u; }
    static double C_hat(double u, double s) { return 0.5 * (1.0 + std::exp(-2.0 * s * u)); }

  public:
    // phi e^{-s max(x-1,0)}
    double phi_hat(double x) const {
        if (x <= 1.0) return num::S(x, kappa);
        return num::S(1.0, kappa) * C_hat(x - 1.0, s) + num::C(1.0, kappa) * S_hat(x - 1.0, s);
    }
    // psi e^{-s (L - max(x,1))}
    double psi_hat(double x) const {
        if (x >= 1.0) return S_hat(L - x, s);
        return S_hat(L - 1.0, s) * num::C(1.0 - x, kappa) + C_hat(L - 1.0, s) * num::S(1.0 - x, kappa);
    }
};

namespace kernels {

inline constexpr double t_min = 0.05;

inline KernelConfig make_config(double rho, double L, int max_terms = 20000, double tail_tol = 1e-12) {
    if (max_terms < 2) throw DomainError("max_terms must be >= 2");
    KernelConfig cfg;
    cfg.rho = rho;
    cfg.L = L;
    cfg.tail_tol = tail_tol;
    cfg.max_terms = max_terms;
    cfg.spectrum = spectrum::eigenvalues(rho, L, max_terms);
    return cfg;
}

inline GreenComponents green_components(const KernelConfig& cfg, double xi) {
    if (!(xi > 0.0)) throw DomainError("spectral shift xi must be > 0");
    GreenComponents gc;
    gc.rho = cfg.rho;
    gc.L = cfg.L;
    gc.xi = xi;
    gc.mu = cfg.spectrum.regime.mu;
    gc.lambda = cfg.spectrum.regime.lambda_inf + xi;
    if (std::abs(gc.lambda - cfg.spectrum.lambdas[0]) < 1e-12)
        throw SingularShift("lambda_inf + xi coincides with an eigenvalue");
    const double c = 2.0 * gc.lambda;
    gc.s = std::sqrt(c);
    gc.kappa = c + 1.0 - cfg.rho;
    const double S1 = num::S(1.0, gc.kappa), C1 = num::C(1.0, gc.kappa);
    const double u = gc.s * (cfg.L - 1.0);
    const double e2 = std::exp(-2.0 * u);
    const double fm = C1 / gc.s + S1, gm = S1 - C1 / gc.s;
    gc.w_scaled = 0.5 * (fm + gm * e2);
    gc.wronskian = gc.w_scaled * std::exp(u);
    // The reported f, g use sin(gamma), gamma cos(gamma); when kappa >= 0 (no real gamma) they are
    // reported divided by gamma.
    if (gc.kappa < 0) {
        const double g = std::sqrt(-gc.kappa);
        gc.f_val = gc.s * std::sin(g) + g * std::cos(g);
        gc.g_val = gc.s * std::sin(g) - g * std::cos(g);
    } else {
        gc.f_val = gc.s * S1 + C1;
        gc.g_val = gc.s * S1 - C1;
    }
    gc.w = gc.f_val * std::exp(u) + gc.g_val * std::exp(-u);
    return gc;
}

namespace detail {

struct Term {
    double value;
    double bound;
};

// Sums terms k = 0.. until five consecutive bounds fall below tol times the larger of |offset + sum|
// and |offset|; offset is a closed-form part the series corrects, so a result much smaller than
// that part is only resolved to tol * |offset| in absolute terms. floor_rel * (largest bound so far)
// is an absolute floor for sums that vanish.
template <class F>
double truncated_sum(const KernelConfig& cfg, F&& term, double tol, const char* what, double offset = 0.0,
                     double floor_rel = 1e-6, double* abs_sum = nullptr) {
    double sum = 0.0, max_bound = 0.0, mag = 0.0;
    int small = 0;
    const int n = static_cast<int>(cfg.spectrum.size());
    for (int k = 0; k < n; ++k) {
        const Term t = term(k);
        sum += t.value;
        mag += std::abs(t.value);
        if (abs_sum) *abs_sum = mag;
        max_bound = std::max(max_bound, t.bound);
        const double ref = std::max({std::abs(sum + offset), std::abs(offset), floor_rel * max_bound});
        small = (t.bound < tol * ref) ? small + 1 : 0;
        if (small >= 5) return sum;
    }
    throw TruncationError(std::string(what) + ": tail tolerance not met within " + std::to_string(n) +
                          " terms");
}

inline void check_point(const KernelConfig& cfg, double x) {
    if (!(x >= 0.0 && x <= cfg.L)) throw DomainError("point outside [0, L]");
}

inline void check_time(double t) {
    if (!(t >= t_min)) throw TruncationError("t below 0.05: spectral sum cannot be truncated reliably");
}

inline EigenfunctionHandle h(const KernelConfig& cfg, int k) { return spectrum::handle(cfg.spectrum, k + 1); }

}  // namespace detail

// q_t e^{-lambda_1 t}; keeps large-t evaluations finite.
inline double q_scaled(const KernelConfig& cfg, double x, double y, double t) {
    detail::check_point(cfg, x);
    detail::check_point(cfg, y);
    detail::check_time(t);
    if (y < x) std::swap(x, y);  // exact symmetry
    const auto& sp = cfg.spectrum;
    const double l1 = sp.lambdas[0];
    double mag = 0.0;
    const double sum = detail::truncated_sum(
        cfg,
        [&](int k) {
            const auto hk = detail::h(cfg, k);
            const double e = std::exp((sp.lambdas[k] - l1) * t) / sp.norm_sq[k];
            return detail::Term{e * spectrum::eval_v(hk, x) * spectrum::eval_v(hk, y),
                                e * sp.sup_v[k] * sp.sup_v[k]};
        },
        cfg.tail_tol, "q_t", 0.0, 1e-6, &mag);
    // below the rounding resolution of the sum the sign is noise; the tilt in p_t would amplify it
    const double resolution = 64.0 * std::numeric_limits<double>::epsilon() * mag;
    return std::abs(sum) <= resolution ? 0.0 : sum;
}

inline double q_t(const KernelConfig& cfg, double x, double y, double t) {
    return std::exp(cfg.spectrum.lambdas[0] * t) * q_scaled(cfg, x, y, t);
}

inline double p_t(const KernelConfig& cfg, double x, double y, double t) {
    const auto& sp = cfg.spectrum;
    const double qs = q_scaled(cfg, x, y, t);
    if (qs == 0.0) return 0.0;
    const double logp = sp.regime.mu * (x - y) + (sp.lambdas[0] - sp.regime.lambda_inf) * t + std::log(std::abs(qs));
    return std::copysign(std::exp(logp), qs);
}

inline double leading_term(const KernelConfig& cfg, double x, double y, double t) {
    if (y < x) std::swap(x, y);
    const auto h1 = detail::h(cfg, 0);
    return std::exp(h1.lambda_k * t) * spectrum::eval_v(h1, x) * spectrum::eval_v(h1, y) / h1.norm_sq;
}

// Structural factor e^{2 beta L - 5 pi^2 t / 8} + L e^{2 beta L - lambda_inf t / 2}; its constant is not
// known, so the caller supplies it.
inline double error_bound_M(double rho, double L, double t, double constant = 1.0) {
    const RegimeParams p = regimes::regime_params(rho);
    return constant * (std::exp(2.0 * p.beta * L - 0.625 * num::pi * num::pi * t) +
                       L * std::exp(2.0 * p.beta * L - 0.5 * p.lambda_inf * t));
}

// int_0^L p_t(x,y) dy, i.e. expected number of particles alive at t in the killed process.
inline double mass(const KernelConfig& cfg, double x, double t) {
    detail::check_point(cfg, x);
    detail::check_time(t);
    const auto& sp = cfg.spectrum;
    const double mu = sp.regime.mu, l1 = sp.lambdas[0];
    const double sum = detail::truncated_sum(
        cfg,
        [&](int k) {
            const auto hk = detail::h(cfg, k);
            const double e = std::exp((sp.lambdas[k] - l1) * t) / sp.norm_sq[k];
            const double m = spectrum::exp_moment(hk, mu);
            return detail::Term{e * spectrum::eval_v(hk, x) * m, e * sp.sup_v[k] * std::abs(m)};
        },
        cfg.tail_tol, "mass");
    return std::exp(mu * x + (l1 - sp.regime.lambda_inf) * t) * sum;
}

// E_x[sum_v e^{mu(X_v(t) - L)}] in the killed process.
inline double ytilde_mean(const KernelConfig& cfg, double x, double t) {
    detail::check_point(cfg, x);
    detail::check_time(t);
    const auto& sp = cfg.spectrum;
    const double mu = sp.regime.mu, l1 = sp.lambdas[0];
    const double sum = detail::truncated_sum(
        cfg,
        [&](int k) {
            const auto hk = detail::h(cfg, k);
            const double e = std::exp((sp.lambdas[k] - l1) * t) / sp.norm_sq[k];
            const double m = spectrum::exp_moment(hk, 0.0);
            return detail::Term{e * spectrum::eval_v(hk, x) * m, e * sp.sup_v[k] * std::abs(m)};
        },
        cfg.tail_tol, "ytilde_mean");
    return std::exp(mu * (x - cfg.L) + (l1 - sp.regime.lambda_inf) * t) * sum;
}

inline double green_closed(const GreenComponents& gc, double x, double y) {
    if (!(x > 0.0 && x < gc.L && y > 0.0 && y < gc.L)) throw DomainError("green function needs x, y in (0, L)");
    return std::exp(gc.mu * (x - y)) * gc.resolvent(x, y);
}

// Eigen-series of the resolvent, accelerated by subtracting the same series for the unperturbed
// Dirichlet operator on [0,L] and adding back its closed form.
inline double green_series(const KernelConfig& cfg, double x, double y, double xi) {
    if (!(x > 0.0 && x < cfg.L && y > 0.0 && y < cfg.L)) throw DomainError("green function needs x, y in (0, L)");
    if (!(xi > 0.0)) throw DomainError("spectral shift xi must be > 0");
    const auto& sp = cfg.spectrum;
    const double lam = sp.regime.lambda_inf + xi;
    if (std::abs(lam - sp.lambdas[0]) < 1e-12) throw SingularShift("lambda_inf + xi coincides with an eigenvalue");
    const double L = cfg.L;
    const double s = std::sqrt(2.0 * lam);
    const double a = std::min(x, y), b = std::max(x, y);
    const double h0 = std::exp(s * (a - b)) * (-std::expm1(-2.0 * s * a)) * (-std::expm1(-2.0 * s * (L - b))) /
                      (s * (-std::expm1(-2.0 * s * L)));
    const double series = detail::truncated_sum(
        cfg,
        [&](int k) {
            const auto hk = detail::h(cfg, k);
            const double pert = spectrum::eval_v(hk, x) * spectrum::eval_v(hk, y) / (sp.norm_sq[k] * (lam - sp.lambdas[k]));
            const double kk = (k + 1) * num::pi / L;
            const double l0 = -0.5 * kk * kk;
            const double free = std::sin(kk * x) * std::sin(kk * y) / (0.5 * L * (lam - l0));
            const double v = pert - free;
            return detail::Term{v, std::abs(v)};
        },
        cfg.algebraic_tol, "green_series", h0, 1e-2);
    return std::exp(sp.regime.mu * (x - y)) * (h0 + series);
}

namespace detail {

inline double exact_weight(double d, double a, double b) {
    // (e^{-d a} - e^{-d b}) / d, stable for small d
    if (std::abs(d) * (b - a) < 1e-8) return std::exp(-d * a) * (b - a) * (1.0 - 0.5 * d * (b - a));
    return std::exp(-d * a) * (-std::expm1(-d * (b - a))) / d;
}

// e^{u} erfc(v) without overflow.
inline double exp_erfc(double u, double v) {
    const double e = std::erfc(v);
    if (e == 0.0) return 0.0;
    return std::exp(u + std::log(e));
}

// int_0^h e^{-lam s} (2 pi s)^{-1/2} e^{-z^2/(2s)} ds
inline double gauss_time_integral(double z, double lam, double h) {
    const double a = std::abs(z), r = std::sqrt(2.0 * lam), q = std::sqrt(2.0 * h);
    if (r < 1e-6) return std::sqrt(2.0 * h / num::pi) * std::exp(-a * a / (2.0 * h)) - a * std::erfc(a / q);
    return (exp_erfc(-a * r, (a - r * h) / q) - exp_erfc(a * r, (a + r * h) / q)) / (2.0 * r);
}

// int_0^h e^{-lam s} z (2 pi s^3)^{-1/2} e^{-z^2/(2s)} ds, odd in z
inline double passage_time_integral(double z, double lam, double h) {
    const double a = std::abs(z), r = std::sqrt(2.0 * lam), q = std::sqrt(2.0 * h);
    const double v = 0.5 * (exp_erfc(-a * r, (a - r * h) / q) + exp_erfc(a * r, (a + r * h) / q));
    return z < 0 ? -v : v;
}

// One spectral coefficient: value, a bound on its magnitude, and the same coefficient for the
// unperturbed Dirichlet operator (1/2)d^2/dx^2 on [0,L].
struct Coef {
    double c;
    double bound;
    double c_free;
};

// Closed-form pieces for the interval [0, h]: resolvents at Lambda of the perturbed and free
// operators, and the free time integral by images.
struct HeadParts {
    double resolvent;
    double free_resolvent;
    double free_head;
};

// sum_k c_k int_a^b e^{-(lambda_inf - lambda_k)s} ds.  Intervals touching 0 use
// c_k w_k = c_k/(Lambda - lambda_k) + [c_k (w_k - 1/(Lambda-lambda_k)) - (same, free)] + free part,
// whose bracketed terms decay like k^-4.
template <class CoefFn, class HeadFn>
double time_integrated_sum(const KernelConfig& cfg, CoefFn&& coef, HeadFn&& head_parts, double a, double b,
                           const char* what) {
    const auto& sp = cfg.spectrum;
    const double li = sp.regime.lambda_inf;
    if (!(a >= 0.0 && b >= a)) throw DomainError("time interval must satisfy 0 <= a <= b");
    if (b == a) return 0.0;
    if (a >= t_min) {
        return truncated_sum(
            cfg,
            [&](int k) {
                const Coef c = coef(k);
                const double w = exact_weight(li - sp.lambdas[k], a, b);
                return Term{c.c * w, std::abs(c.bound) * w};
            },
            cfg.tail_tol, what);
    }
    if (a != 0.0) throw TruncationError("time intervals must start at 0 or at t >= 0.05");
    const double h = std::min(b, t_min);
    const double Lambda = li + 1.0;
    const HeadParts hp = head_parts(Lambda, h);
    const double closed = hp.resolvent + hp.free_head - hp.free_resolvent;
    const double L = cfg.L;
    const double rest = truncated_sum(
        cfg,
        [&](int k) {
            const Coef c = coef(k);
            const double kk = (k + 1) * num::pi / L;
            const double l0 = -0.5 * kk * kk;
            const double pert = c.c * (exact_weight(li - sp.lambdas[k], 0.0, h) - 1.0 / (Lambda - sp.lambdas[k]));
            const double free = c.c_free * (exact_weight(li - l0, 0.0, h) - 1.0 / (Lambda - l0));
            const double v = pert - free;
            return Term{v, std::abs(v)};
        },
        cfg.algebraic_tol, what, closed, 1e-2);
    double total = closed + rest;
    if (b > h) total += time_integrated_sum(cfg, coef, head_parts, h, b, what);
    return total;
}

inline constexpr int image_count = 4;

}  // namespace detail

// int_a^b p_s(x,y) ds.
inline double p_integral(const KernelConfig& cfg, double x, double y, double a, double b) {
    if (!(x > 0.0 && x < cfg.L && y > 0.0 && y < cfg.L)) throw DomainError("x, y must lie in (0, L)");
    const auto& sp = cfg.spectrum;
    const double L = cfg.L;
    auto coef = [&](int k) {
        const auto hk = detail::h(cfg, k);
        const double kk = (k + 1) * num::pi / L;
        return detail::Coef{spectrum::eval_v(hk, x) * spectrum::eval_v(hk, y) / sp.norm_sq[k],
                            sp.sup_v[k] * sp.sup_v[k] / sp.norm_sq[k],
                            std::sin(kk * x) * std::sin(kk * y) / (0.5 * L)};
    };
    auto head = [&](double Lambda, double h) {
        const double s = std::sqrt(2.0 * Lambda);
        const double lo = std::min(x, y), hi = std::max(x, y);
        const double free_res = std::exp(s * (lo - hi)) * (-std::expm1(-2.0 * s * lo)) *
                                (-std::expm1(-2.0 * s * (L - hi))) / (s * (-std::expm1(-2.0 * s * L)));
        double free_head = 0.0;
        for (int n = -detail::image_count; n <= detail::image_count; ++n) {
            free_head += detail::gauss_time_integral(y - x + 2.0 * n * L, sp.regime.lambda_inf, h) -
                         detail::gauss_time_integral(y + x + 2.0 * n * L, sp.regime.lambda_inf, h);
        }
        return detail::HeadParts{green_components(cfg, Lambda - sp.regime.lambda_inf).resolvent(x, y), free_res,
                                 free_head};
    };
    const double sum = detail::time_integrated_sum(cfg, coef, head, a, b, "p_integral");
    return std::exp(sp.regime.mu * (x - y)) * sum;
}

// A finite union of time intervals.
using TimeSet = std::vector<std::pair<double, double>>;

inline double ell(const FiniteSpectrum& sp, const TimeSet& S) {
    const double d = sp.regime.lambda_inf - sp.lambdas[0];
    double total = 0.0;
    for (const auto& [a, b] : S) {
        if (!(a >= 0.0 && b >= a)) throw DomainError("time interval must satisfy 0 <= a <= b");
        total += detail::exact_weight(d, a, b);
    }
    return total;
}

// I(x,S) = -1/2 int_S e^{-lambda_inf s} d_y q_s(x,y)|_{y=L} ds.
inline double flux_I(const KernelConfig& cfg, double x, const TimeSet& S) {
    if (!(x > 0.0 && x < cfg.L)) throw DomainError("x must lie in (0, L)");
    const auto& sp = cfg.spectrum;
    const double L = cfg.L;
    auto coef = [&](int k) {
        const auto hk = detail::h(cfg, k);
        const double dvL = spectrum::eval_dv(hk, L);
        const double kk = (k + 1) * num::pi / L;
        return detail::Coef{spectrum::eval_v(hk, x) * dvL / sp.norm_sq[k], sp.sup_v[k] * dvL / sp.norm_sq[k],
                            std::sin(kk * x) * kk * std::cos(kk * L) / (0.5 * L)};
    };
    auto head = [&](double Lambda, double h) {
        const double s = std::sqrt(2.0 * Lambda);
        const double free_res = -2.0 * std::exp(s * (x - L)) * (-std::expm1(-2.0 * s * x)) / (-std::expm1(-2.0 * s * L));
        // -1/2 d_y q0 at y = L is the image series of first-passage densities; the sum of c_free w
        // equals -2 times its time integral.
        double passage = 0.0;
        for (int n = -detail::image_count; n <= detail::image_count; ++n) {
            passage += 0.5 * (detail::passage_time_integral(L - x + 2.0 * n * L, sp.regime.lambda_inf, h) -
                              detail::passage_time_integral(L + x + 2.0 * n * L, sp.regime.lambda_inf, h));
        }
        return detail::HeadParts{green_components(cfg, Lambda - sp.regime.lambda_inf).resolvent_dy_at_L(x), free_res,
                                 -2.0 * passage};
    };
    double total = 0.0;
    for (const auto& [a, b] : S) total += detail::time_integrated_sum(cfg, coef, head, a, b, "flux_I");
    return -0.5 * total;
}

// Expected number of killings at L during S for one particle started at x.
inline double expected_hits(const KernelConfig& cfg, double x, const TimeSet& S) {
    return std::exp(cfg.spectrum.regime.mu * (x - cfg.L)) * flux_I(cfg, x, S);
}

}  // namespace kernels
}  // namespace frontier
