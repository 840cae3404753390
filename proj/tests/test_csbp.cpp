#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "frontier/csbp.hpp"

using namespace frontier;
using frontier::csbp::FitResult;
using frontier::csbp::LaplacePoint;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("branching mechanism", "[csbp]") {
    CHECK(csbp::psi({0, 2, 1.5}, 4.0) == 16.0);
    CHECK(csbp::psi({1, 1, 2}, 3.0) == 6.0);
    CHECK(csbp::psi({0, 1, 1}, 0.0) == 0.0);
    CHECK_THAT(csbp::psi({0, 1, 1}, std::exp(1.0)), WithinRel(std::exp(1.0), 1e-15));
    CHECK_THROWS_AS(csbp::psi({0, 1, 2}, -1.0), DomainError);
    CHECK_THROWS_AS(csbp::check({0, 0, 2}), DomainError);
    CHECK_THROWS_AS(csbp::check({0, 1, 2.5}), DomainError);
    CHECK_THROWS_AS(csbp::check({0, 1, 0.9}), DomainError);
}

TEST_CASE("flow at time zero is the identity", "[csbp]") {
    for (double alpha : {1.0, 1.3, 1.66, 2.0})
        for (double lam : {1e-3, 0.5, 2.0, 40.0}) CHECK(csbp::u_flow({0, 1, alpha}, lam, 0.0) == lam);
    CHECK_THROWS_AS(csbp::u_flow({0, 1, 2}, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(csbp::u_flow({0, 1, 2}, 1.0, -1.0), DomainError);
}

TEST_CASE("Feller diffusion flow", "[csbp]") {
    const CsbpParams p{0, 0.5, 2.0};
    for (double lam : {0.1, 1.0, 7.0})
        for (double t : {0.3, 2.0, 10.0}) CHECK_THAT(csbp::u_flow(p, lam, t), WithinRel(lam / (1 + 0.5 * lam * t), 1e-14));
}

TEST_CASE("closed form agrees with RK4", "[csbp]") {
    const CsbpParams p{0, 0.7, 1.66};
    CHECK_THAT(csbp::u_rk4(p, 2.0, 5.0), WithinRel(csbp::u_closed(p, 2.0, 5.0), 1e-8));
    for (double alpha : {1.2, 1.5, 1.9})
        for (double lam : {0.05, 1.0, 20.0}) {
            const CsbpParams q{0, 1.3, alpha};
            CHECK_THAT(csbp::u_rk4(q, lam, 3.0), WithinRel(csbp::u_closed(q, lam, 3.0), 1e-8));
        }
}

TEST_CASE("Neveu flow has the power form", "[csbp]") {
    const CsbpParams p{0, 0.8, 1.0};
    CHECK_FALSE(csbp::has_closed_form(p));
    for (double lam : {0.2, 0.9, 3.0, 50.0})
        for (double t : {0.5, 2.0, 6.0})
            CHECK_THAT(csbp::u_flow(p, lam, t), WithinRel(std::pow(lam, std::exp(-0.8 * t)), 1e-8));
}

TEST_CASE("semigroup property", "[csbp]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lam_d(0.01, 10.0), t_d(0.0, 4.0), al_d(1.0, 2.0);
    for (int i = 0; i < 30; ++i) {
        const CsbpParams p{i % 2 ? 0.3 : 0.0, 0.9, al_d(rng)};
        const double lam = lam_d(rng), s = t_d(rng), t = t_d(rng);
        INFO("alpha " << p.alpha << " a " << p.a << " lambda " << lam << " s " << s << " t " << t);
        CHECK_THAT(csbp::u_flow(p, csbp::u_flow(p, lam, s), t), WithinRel(csbp::u_flow(p, lam, s + t), 1e-8));
    }
}

TEST_CASE("Laplace transform properties", "[csbp]") {
    const CsbpParams p{0, 1.1, 1.63};
    CHECK(csbp::laplace(p, 0.0, 3.0, 2.0) == 1.0);
    CHECK_THAT(csbp::laplace(p, 2.0, 1e-9, 1.0), WithinAbs(1.0, 1e-8));
    // branching property
    CHECK_THAT(csbp::laplace(p, 1.5, 2.0, 1.0),
               WithinRel(csbp::laplace(p, 0.5, 2.0, 1.0) * csbp::laplace(p, 1.0, 2.0, 1.0), 1e-13));
    double prev = 1.0;
    for (double lam = 0.1; lam < 20; lam *= 1.5) {
        const double v = csbp::laplace(p, 1.0, lam, 1.0);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
    // d/dt E e^{-lambda X_t} at t = 0 equals psi(lambda) x0 e^{-lambda x0}
    const double lam = 1.7, x0 = 1.0, h = 1e-5;
    const double fd = (csbp::laplace(p, x0, lam, h) - csbp::laplace(p, x0, lam, 0.0)) / h;
    CHECK_THAT(fd, WithinRel(csbp::psi(p, lam) * x0 * std::exp(-lam * x0), 1e-3));
    CHECK_THROWS_AS(csbp::laplace(p, -1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("fit recovers the scale parameter", "[csbp]") {
    const double alpha = 1.63, t = 1.0, x0 = 1.0;
    for (double b_true : {0.05, 0.4, 2.5}) {
        std::vector<LaplacePoint> pts;
        for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const double v = csbp::laplace({0, b_true, alpha}, x0, lam, t);
            pts.push_back({lam, v, 1e-4});
        }
        const FitResult f = csbp::fit_b(pts, x0, t, alpha);
        CHECK_THAT(f.b, WithinRel(b_true, 1e-6));
        CHECK(f.max_abs_z < 1e-2);
        CHECK(f.fitted.size() == pts.size());
    }
    // a perturbed point shows up in z
    std::vector<LaplacePoint> pts;
    for (double lam : {0.5, 1.0, 2.0}) pts.push_back({lam, csbp::laplace({0, 0.4, alpha}, x0, lam, t), 1e-3});
    pts[1].value += 0.05;
    CHECK(csbp::fit_b(pts, x0, t, alpha).max_abs_z > 3.0);
}
