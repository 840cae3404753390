#pragma once

#include <cmath>
#include <string>

#include "errors.hpp"
#include "numerics.hpp"

namespace frontier {

enum class Regime { Pulled, SemiPushed, FullyPushed, Boundary };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::Pulled: return "pulled";
        case Regime::SemiPushed: return "semi_pushed";
        case Regime::FullyPushed: return "fully_pushed";
        case Regime::Boundary: return "boundary";
    }
    return "unknown";
}

struct RegimeParams {
    double rho;
    double lambda_inf;
    double mu;
    double beta;
    double gamma;
    double alpha;
    Regime regime;
};

struct RegimeThresholds {
    double rho1;
    double rho2;
    double mu_c;
};

namespace regimes {

inline constexpr double forbidden_tol = 1e-9;

inline double rho1() { return 1.0 + num::pi * num::pi / 4.0; }
inline double mu_c() { return 0.75 * std::sqrt(2.0); }

inline void check_rho(double rho) {
    if (!(rho > 1.0)) throw DomainError("rho must satisfy rho > 1, got " + std::to_string(rho));
    const double kmax = 2.0 * std::sqrt(rho - 1.0) / num::pi + 1.0;
    for (int k = 1; k <= static_cast<int>(kmax); ++k) {
        const double f = 1.0 + k * k * num::pi * num::pi / 4.0;
        if (std::abs(rho - f) < forbidden_tol)
            throw ForbiddenRho("rho is within 1e-9 of the excluded value 1 + k^2 pi^2/4, k = " +
                               std::to_string(k));
    }
}

// Root in gamma of beta sin(gamma) + gamma cos(gamma) = 0 on (pi/2, min(pi, sqrt(rho-1))).
inline double gamma_root(double rho) {
    const double top = std::min(num::pi, std::sqrt(rho - 1.0));
    auto G = [rho](double g) {
        const double b2 = rho - 1.0 - g * g;
        return std::sqrt(std::max(b2, 0.0)) * std::sin(g) + g * std::cos(g);
    };
    return num::bisect(G, num::pi / 2.0, top, 0.0);
}

inline double lambda_inf(double rho) {
    check_rho(rho);
    if (rho <= rho1()) return 0.0;
    const double g = gamma_root(rho);
    return 0.5 * (rho - 1.0 - g * g);
}

// Residual of -tan(gamma)/gamma = 1/sqrt(2 lambda) with gamma = sqrt(rho-1-2 lambda).
inline double eqlim_residual(double rho, double lambda) {
    const double g = std::sqrt(rho - 1.0 - 2.0 * lambda);
    return -std::tan(g) / g - 1.0 / std::sqrt(2.0 * lambda);
}

// Half-line principal eigenvalue of the perturbed Laplacian via x = sin^2(sqrt x) rho_pert.
inline double lambda_c_closed(double rho_pert) {
    const double x0 = num::pi * num::pi / 4.0;
    if (rho_pert <= x0) return 0.0;
    auto g = [rho_pert](double x) {
        const double s = std::sin(std::sqrt(x));
        return x - rho_pert * s * s;
    };
    const double x = num::bisect(g, x0, num::pi * num::pi, 0.0);
    return 0.5 * (rho_pert - x);
}

inline double mu_of_rho(double rho) { return std::sqrt(1.0 + 2.0 * lambda_inf(rho)); }

// Residual of tan(sqrt(rho-mu^2))/sqrt(rho-mu^2) = -1/sqrt(mu^2-1).
inline double murho_residual(double mu, double rho) {
    const double g = std::sqrt(rho - mu * mu);
    return std::tan(g) / g + 1.0 / std::sqrt(mu * mu - 1.0);
}

inline double alpha_of_mu(double mu) {
    if (!(mu > 1.0)) throw DomainError("alpha requires mu > 1 (pushed regime)");
    const double b = std::sqrt(mu * mu - 1.0);
    return (mu + b) / (mu - b);
}

inline double alpha_of_rho(double rho) {
    const double lam = lambda_inf(rho);
    if (!(lam > 0.0)) throw DomainError("alpha requires rho > 1 + pi^2/4 (pushed regime)");
    const double mu = std::sqrt(1.0 + 2.0 * lam);
    const double b = std::sqrt(2.0 * lam);
    return (mu + b) / (mu - b);
}

inline double compute_rho2() {
    static const double value = [] {
        const double mc = mu_c();
        const double bc = std::sqrt(mc * mc - 1.0);
        auto G = [bc](double g) { return bc * std::sin(g) + g * std::cos(g); };
        const double g = num::bisect(G, num::pi / 2.0, num::pi, 1e-15);
        return mc * mc + g * g;
    }();
    return value;
}

inline RegimeThresholds thresholds() { return {rho1(), compute_rho2(), mu_c()}; }

inline Regime classify(double rho) {
    if (!(rho > 1.0)) throw DomainError("rho must satisfy rho > 1, got " + std::to_string(rho));
    const double r1 = rho1(), r2 = compute_rho2();
    if (std::abs(rho - r1) < forbidden_tol || std::abs(rho - r2) < forbidden_tol) return Regime::Boundary;
    check_rho(rho);
    if (rho < r1) return Regime::Pulled;
    if (rho < r2) return Regime::SemiPushed;
    return Regime::FullyPushed;
}

inline RegimeParams regime_params(double rho) {
    const Regime reg = classify(rho);
    RegimeParams p{};
    p.rho = rho;
    p.regime = reg;
    p.lambda_inf = (std::abs(rho - rho1()) < forbidden_tol) ? 0.0 : lambda_inf(rho);
    p.mu = std::sqrt(1.0 + 2.0 * p.lambda_inf);
    p.beta = std::sqrt(2.0 * p.lambda_inf);
    p.gamma = std::sqrt(rho - 1.0 - 2.0 * p.lambda_inf);
    p.alpha = (p.mu + p.beta) / (p.mu - p.beta);
    return p;
}

inline bool is_pushed(double rho) { return rho > rho1() + forbidden_tol; }

}  // namespace regimes
}  // namespace frontier
