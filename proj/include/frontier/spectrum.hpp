#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "regimes.hpp"

namespace frontier {

struct Bracket {
    double lo;
    double hi;
};

// Eigen-data of (1/2) d^2/dx^2 + (rho-1)/2 1_[0,1] on [0,L] with Dirichlet ends.
// Eigenfunctions are normalized by v(1) = 1.
struct FiniteSpectrum {
    double rho = 0;
    double L = 0;
    int K = 0;
    RegimeParams regime{};
    std::vector<double> lambdas;
    std::vector<Bracket> brackets;
    std::vector<double> norm_sq;
    std::vector<double> sup_v;  // bound on |v_k| over [0,L]

    std::size_t size() const { return lambdas.size(); }
};

struct EigenfunctionHandle {
    int k;
    double lambda_k;
    double rho;
    double L;
    double norm_sq;
    double gamma_k;
};

namespace spectrum {

inline int count_positive(double rho) {
    regimes::check_rho(rho);
    const double v = std::sqrt(rho - 1.0) / num::pi + 0.5;
    return std::max(0, static_cast<int>(std::ceil(v)) - 1);
}

inline double L_min(double rho) {
    const double r = std::sqrt(rho - 1.0);
    return std::max(2.0, 1.0 - std::tan(r) / r) + 1.0;
}

// Matching function at x = 1 scaled to be O(1); a root is an eigenvalue.
inline double residual(double rho, double L, double lambda) {
    const double kappa = 2.0 * lambda + 1.0 - rho;
    const double c = 2.0 * lambda;
    const double a = L - 1.0;
    const double Sl = num::S(1.0, kappa), Cl = num::C(1.0, kappa);
    double Sr, Cr;
    if (c > 0 && std::sqrt(c) * a > 1.0) {
        const double s = std::sqrt(c);
        Sr = std::tanh(s * a) / s;
        Cr = 1.0;
    } else {
        Sr = num::S(a, c);
        Cr = num::C(a, c);
    }
    const double nl = std::sqrt(Cl * Cl + std::abs(kappa) * Sl * Sl);
    const double nr = std::sqrt(Cr * Cr + std::abs(c) * Sr * Sr);
    return (Sl * Cr + Cl * Sr) / (nl * nr);
}

namespace detail {

// Descending merge of the poles of the left and right cotangent-type branches.
class PoleSequence {
  public:
    PoleSequence(double rho, double L) : rho_(rho), L_(L) {}
    double next() {
        const double left = (rho_ - 1.0 - (k_ - 0.5) * (k_ - 0.5) * num::pi * num::pi) / 2.0;
        const double right = -(j_ - 0.5) * (j_ - 0.5) * num::pi * num::pi / (2.0 * (L_ - 1.0) * (L_ - 1.0));
        if (left >= right) {
            ++k_;
            return left;
        }
        ++j_;
        return right;
    }

  private:
    double rho_, L_;
    int k_ = 1, j_ = 1;
};

// int_0^a S(x,c)^2 dx / S(a,c)^2
inline double sqint_ratio(double a, double c) {
    const double z = c * a * a;
    if (std::abs(z) < 1e-3) {
        return a / 3.0 - 2.0 * a * z / 45.0 + 2.0 * a * z * z / 315.0 - 4.0 * a * z * z * z / 4725.0;
    }
    if (c > 0) {
        const double s = std::sqrt(c);
        const double sh = std::sinh(s * a);
        return 1.0 / (2.0 * s * std::tanh(s * a)) - a / (2.0 * sh * sh);
    }
    const double s = std::sqrt(-c);
    const double sn = std::sin(s * a);
    return (a / 2.0 - std::sin(2.0 * s * a) / (4.0 * s)) / (sn * sn);
}

// S(L-x,c)/S(L-1,c) for x in [1,L], overflow free.
inline double right_ratio(double L, double c, double x) {
    if (c > 0) {
        const double s = std::sqrt(c);
        if (s * (L - 1.0) > 1.0) {
            return std::exp(-s * (x - 1.0)) * std::expm1(-2.0 * s * (L - x)) /
                   std::expm1(-2.0 * s * (L - 1.0));
        }
    }
    return num::S(L - x, c) / num::S(L - 1.0, c);
}

inline double sup_bound(double rho, double L, double lambda) {
    const double kappa = 2.0 * lambda + 1.0 - rho;
    const double c = 2.0 * lambda;
    double b = 1.0;
    if (kappa < 0) b = std::max(b, 1.0 / std::abs(std::sin(std::sqrt(-kappa))));
    if (c < 0) b = std::max(b, 1.0 / std::abs(std::sin(std::sqrt(-c) * (L - 1.0))));
    return b;
}

}  // namespace detail

inline double norm_sq_of(double rho, double L, double lambda) {
    return detail::sqint_ratio(1.0, 2.0 * lambda + 1.0 - rho) + detail::sqint_ratio(L - 1.0, 2.0 * lambda);
}

inline FiniteSpectrum eigenvalues(double rho, double L, int n) {
    regimes::check_rho(rho);
    if (n < 1) throw DomainError("eigenvalue count must be >= 1");
    const double lmin = L_min(rho);
    if (!(L >= lmin))
        throw DomainError("interval length L = " + std::to_string(L) + " is below L_min(rho) = " +
                          std::to_string(lmin));
    FiniteSpectrum sp;
    sp.rho = rho;
    sp.L = L;
    sp.K = count_positive(rho);
    sp.regime = regimes::regime_params(rho);
    sp.lambdas.reserve(n);
    sp.brackets.reserve(n);

    detail::PoleSequence poles(rho, L);
    double hi = poles.next();
    auto f = [&](double lam) { return residual(rho, L, lam); };
    for (int m = 1; m <= n; ++m) {
        double lo = poles.next();
        Bracket br{lo, hi};
        if (m <= sp.K) {
            const double enc_lo = std::max(rho - 1.0 - m * m * num::pi * num::pi, 0.0) / 2.0;
            const double enc_hi = (rho - 1.0 - (m - 0.5) * (m - 0.5) * num::pi * num::pi) / 2.0;
            br.lo = std::max(br.lo, enc_lo);
            br.hi = std::min(br.hi, enc_hi);
            if (!(br.lo < br.hi))
                throw BracketError("empty positive-eigenvalue bracket for k = " + std::to_string(m));
        }
        double lam;
        if (br.hi - br.lo <= 1e-14 * std::max(1.0, std::abs(br.hi))) {
            lam = 0.5 * (br.lo + br.hi);  // coincident poles: the root sits on them
        } else {
            const double flo = f(br.lo), fhi = f(br.hi);
            if ((flo > 0) == (fhi > 0) && flo != 0.0 && fhi != 0.0)
                throw BracketError("no sign change in eigenvalue bracket k = " + std::to_string(m) +
                                   " (L too small for this rho?)");
            lam = num::bisect(f, br.lo, br.hi, 1e-16, 1e-16);
        }
        sp.lambdas.push_back(lam);
        sp.brackets.push_back(br);
        sp.norm_sq.push_back(norm_sq_of(rho, L, lam));
        sp.sup_v.push_back(detail::sup_bound(rho, L, lam));
        hi = lo;
    }
    return sp;
}

inline EigenfunctionHandle handle(const FiniteSpectrum& sp, int k) {
    if (k < 1 || k > static_cast<int>(sp.size())) throw DomainError("eigen index out of range");
    const double lam = sp.lambdas[k - 1];
    return {k, lam, sp.rho, sp.L, sp.norm_sq[k - 1], std::sqrt(std::max(0.0, sp.rho - 1.0 - 2.0 * lam))};
}

inline double eval_v(const EigenfunctionHandle& h, double x) {
    if (!(x >= 0.0 && x <= h.L)) throw DomainError("x outside [0, L]");
    if (x <= 1.0) {
        const double kappa = 2.0 * h.lambda_k + 1.0 - h.rho;
        return num::S(x, kappa) / num::S(1.0, kappa);
    }
    return detail::right_ratio(h.L, 2.0 * h.lambda_k, x);
}

// Derivative of v_k, one-sided at x = 1 from the right.
inline double eval_dv(const EigenfunctionHandle& h, double x) {
    if (!(x >= 0.0 && x <= h.L)) throw DomainError("x outside [0, L]");
    if (x < 1.0) {
        const double kappa = 2.0 * h.lambda_k + 1.0 - h.rho;
        return num::C(x, kappa) / num::S(1.0, kappa);
    }
    const double c = 2.0 * h.lambda_k;
    if (c > 0 && std::sqrt(c) * (h.L - 1.0) > 1.0) {
        const double s = std::sqrt(c);
        return -s * std::exp(-s * (x - 1.0)) * (1.0 + std::exp(-2.0 * s * (h.L - x))) /
               (-std::expm1(-2.0 * s * (h.L - 1.0)));
    }
    return -num::C(h.L - x, c) / num::S(h.L - 1.0, c);
}

inline double l2_norm_sq(const EigenfunctionHandle& h) { return h.norm_sq; }

inline double l2_norm_limit(double rho) {
    const RegimeParams p = regimes::regime_params(rho);
    if (!(p.lambda_inf > 0)) throw DomainError("norm limit requires the pushed regime");
    const double cg = std::cos(p.gamma);
    return ((rho - 1.0) * cg * cg + p.beta * p.beta * p.beta) /
           (2.0 * p.beta * p.gamma * p.gamma * cg * cg);
}

inline double decay_const_a(double rho) {
    return regimes::regime_params(rho).beta / l2_norm_limit(rho);
}

// Same constant written in the form that appears in the eigenvalue asymptotics.
inline double decay_const_a_alt(double rho) {
    const RegimeParams p = regimes::regime_params(rho);
    const double cg = std::cos(p.gamma);
    const double l2 = 2.0 * p.lambda_inf;
    return 2.0 * l2 * (rho - 1.0 - l2) * cg * cg / ((rho - 1.0) * cg * cg + std::pow(l2, 1.5));
}

// lambda_inf - lambda_1(L) without cancellation: bisection in the gap itself.
inline double principal_gap(double rho, double L) {
    const FiniteSpectrum sp = eigenvalues(rho, L, 1);
    const double li = sp.regime.lambda_inf;
    const double l1 = sp.lambdas[0];
    if (!(li > 0)) return li - l1;
    const double direct = li - l1;
    if (direct > 1e-6 || !(l1 > 0)) return direct;
    const double g0 = sp.regime.gamma, s0 = sp.regime.beta;
    auto F = [&](double h) {
        const double s = std::sqrt(2.0 * (li - h));
        const double g = std::sqrt(g0 * g0 + 2.0 * h);
        const double ds = -2.0 * h / (s + s0);
        const double dg = 2.0 * h / (g + g0);
        const double half = std::sin(dg / 2.0);
        const double dsin = 2.0 * std::cos((g + g0) / 2.0) * half;
        const double dcos = -2.0 * std::sin((g + g0) / 2.0) * half;
        const double dG = ds * std::sin(g) + s0 * dsin + dg * std::cos(g) + g0 * dcos;
        return dG - g * std::cos(g) * num::one_minus_tanh(s * (L - 1.0));
    };
    double lo = 1e-300, hi = 1e-5;
    if (!(F(lo) > 0 && F(hi) < 0)) return direct;
    for (int it = 0; it < 200 && hi / lo - 1.0 > 1e-15; ++it) {
        const double m = std::sqrt(lo * hi);
        if (F(m) > 0) lo = m; else hi = m;
    }
    return std::sqrt(lo * hi);
}

// g(L) = (1/2) sqrt(2 lambda_1) / ||v_1||^2 / sinh^2(sqrt(2 lambda_1)(L-1)), together with
// g(L) e^{2 beta (L-1)} which stays O(1).
struct GofL {
    double g;
    double g_scaled;
};

inline GofL g_of_L_full(double rho, double L) {
    const FiniteSpectrum sp = eigenvalues(rho, L, 1);
    const double l1 = sp.lambdas[0];
    if (!(l1 > 0)) throw DomainError("g(L) requires lambda_1 > 0");
    const double s = std::sqrt(2.0 * l1);
    const double u = s * (L - 1.0);
    const double em = std::exp(-2.0 * u);
    const double inv_sinh2_scaled = 4.0 / ((1.0 - em) * (1.0 - em));  // sinh^-2(u) e^{2u}
    const double pre = 0.5 * s / sp.norm_sq[0];
    const double beta = sp.regime.beta;
    return {pre * inv_sinh2_scaled * em,
            pre * inv_sinh2_scaled * std::exp(-2.0 * (s - beta) * (L - 1.0))};
}

inline double g_of_L(double rho, double L) { return g_of_L_full(rho, L).g; }

// int_0^L e^{-m y} v(y) dy for an eigenfunction with eigenvalue lambda.
inline double exp_moment(double rho, double L, double lambda, double m) {
    const double kappa = 2.0 * lambda + 1.0 - rho;
    const double c = 2.0 * lambda;
    const double a = L - 1.0;
    auto left = [&] {
        const double S1 = num::S(1.0, kappa), C1 = num::C(1.0, kappa);
        return (1.0 - std::exp(-m) * (C1 + m * S1)) / ((m * m - kappa) * S1);
    };
    double cot, inv_s;  // C(a)/S(a), 1/S(a)
    if (c > 0 && std::sqrt(c) * a > 1.0) {
        const double s = std::sqrt(c);
        cot = s / std::tanh(s * a);
        inv_s = 2.0 * s * std::exp(-s * a) / (-std::expm1(-2.0 * s * a));
    } else {
        const double Sa = num::S(a, c);
        cot = num::C(a, c) / Sa;
        inv_s = 1.0 / Sa;
    }
    const double right = (std::exp(-m * L) * inv_s - std::exp(-m) * (cot - m)) / (m * m - c);
    return left() + right;
}

inline double exp_moment(const EigenfunctionHandle& h, double m) {
    return exp_moment(h.rho, h.L, h.lambda_k, m);
}

// L -> infinity limit of int_0^L e^{-mu y} v_1(y) dy.
inline double exp_moment_limit(double rho) {
    const RegimeParams p = regimes::regime_params(rho);
    if (!(p.lambda_inf > 0)) throw DomainError("limit requires the pushed regime");
    const double kappa = -p.gamma * p.gamma;
    const double m = p.mu;
    const double S1 = num::S(1.0, kappa), C1 = num::C(1.0, kappa);
    const double left = (1.0 - std::exp(-m) * (C1 + m * S1)) / ((m * m - kappa) * S1);
    return left + std::exp(-m) / (m + p.beta);
}

inline double c0_of_rho(double rho) {
    return 0.5 / l2_norm_limit(rho) * exp_moment_limit(rho);
}

// As written for the N_t normalization.
inline double sigma_of_rho(double rho) {
    const RegimeParams p = regimes::regime_params(rho);
    return 2.0 / (c0_of_rho(rho) * std::exp(p.mu - p.beta));
}

// Normalization for which E[scale * N_t / N] -> 1 with N particles started at 1.
inline double mass_scale_of_rho(double rho) {
    const RegimeParams p = regimes::regime_params(rho);
    return 1.0 / (2.0 * c0_of_rho(rho) * std::exp(p.mu));
}

// w_1 = sinh(sqrt(2 lambda_1)(L-1)) v_1 and z = e^{mu(x-L)} w_1.
class PrincipalMode {
  public:
    PrincipalMode(double rho, double L) : PrincipalMode(eigenvalues(rho, L, 1)) {}
    explicit PrincipalMode(const FiniteSpectrum& sp)
        : rho_(sp.rho), L_(sp.L), mu_(sp.regime.mu), h_(handle(sp, 1)) {
        if (!(h_.lambda_k > 0)) throw DomainError("w_1 and z need lambda_1 > 0");
        s_ = std::sqrt(2.0 * h_.lambda_k);
        kappa_ = 2.0 * h_.lambda_k + 1.0 - rho_;
        S1_ = num::S(1.0, kappa_);
        // 0.5 (e^{(s-mu)(L-1)} - e^{-(s+mu)(L-1)}) = e^{mu(1-L)} sinh(s(L-1))
        z1_ = 0.5 * (std::exp((s_ - mu_) * (L_ - 1.0)) - std::exp(-(s_ + mu_) * (L_ - 1.0)));
    }

    double lambda1() const { return h_.lambda_k; }
    double mu() const { return mu_; }
    double L() const { return L_; }
    const EigenfunctionHandle& handle1() const { return h_; }

    double w1(double x) const {
        check(x);
        return std::sinh(s_ * (L_ - 1.0)) * eval_v(h_, x);
    }

    double z(double x) const {
        check(x);
        if (x >= 1.0) {
            const double d = L_ - x;
            return 0.5 * (std::exp((s_ - mu_) * d) - std::exp(-(s_ + mu_) * d));
        }
        return z1_ * std::exp(mu_ * (x - 1.0)) * num::S(x, kappa_) / S1_;
    }

  private:
    void check(double x) const {
        if (!(x >= 0.0 && x <= L_)) throw DomainError("x outside [0, L]");
    }
    double rho_, L_, mu_;
    EigenfunctionHandle h_;
    double s_ = 0, kappa_ = 0, S1_ = 1, z1_ = 0;
};

}  // namespace spectrum
}  // namespace frontier
