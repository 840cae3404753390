// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "frontier/bbm.hpp"
#include "frontier/cli.hpp"
#include "frontier/csbp.hpp"
#include "frontier/kernels.hpp"
#include "frontier/regimes.hpp"
#include "frontier/spectrum.hpp"
#include "frontier/stats.hpp"
#include "oracles.hpp"

using namespace frontier;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[violated] ";
        }
        detail << what << "; ";
    }
};

std::string sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1. threshold constants
void thresholds(Outcome& o) {
    const double r1 = regimes::rho1();
    const double pi = num::pi;
    o.require(std::abs(r1 - (1.0 + pi * pi / 4.0)) <= 2.0 * std::numeric_limits<double>::epsilon() * r1,
              "rho1 = 1 + pi^2/4 = " + sci(r1));
    const double r2 = regimes::compute_rho2();
    const double root = num::bisect([](double rho) { return regimes::alpha_of_rho(rho) - 2.0; }, 4.0, 4.5, 0.0);
    o.require(std::abs(r2 - root) <= 1e-8, "|rho2 - root(alpha = 2)| = " + sci(std::abs(r2 - root)));
    const double a = regimes::alpha_of_mu(regimes::mu_c());
    o.require(std::abs(a - 2.0) <= 1e-12, "|alpha(mu_c) - 2| = " + sci(std::abs(a - 2.0)));
}

// 2. lambda_inf from the limit equation against the closed form
void dual_oracle(Outcome& o) {
    const double r1 = regimes::rho1();
    double worst = 0;
    int n = 0;
    for (int i = 1; n < 50; ++i) {
        const double rho = r1 + (12.0 - r1) * i / 52.0;
        try {
            regimes::check_rho(rho);
        } catch (const ForbiddenRho&) {
            continue;
        }
        worst = std::max(worst, std::abs(regimes::lambda_inf(rho) - regimes::lambda_c_closed(rho - 1.0)));
        ++n;
    }
    o.require(n == 50, std::to_string(n) + " grid points");
    o.require(worst <= 1e-10, "max abs difference " + sci(worst));
}

// 3. principal eigenvalue convergence
void finite_L(Outcome& o) {
    const double beta = regimes::regime_params(4.0).beta;
    const double target = beta / spectrum::l2_norm_limit(4.0);
    for (auto [L, tol] : {std::pair{40.0, 0.02}, std::pair{80.0, 0.005}}) {
        // the gap is ~1e-17 at L = 80, far below the spacing of doubles near lambda_inf,
        // so it comes from the cancellation-free evaluation rather than a subtraction
        const double scaled = spectrum::principal_gap(4.0, L) * std::exp(2.0 * beta * (L - 1.0));
        o.require(rel(scaled, target) <= tol,
                  "L=" + sci(L) + ": relative error " + sci(rel(scaled, target)) + " (tol " + sci(tol) + ")");
    }
}

// 4. kernel identities
void kernel_identities(Outcome& o) {
    const KernelConfig c12 = kernels::make_config(4.0, 12.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(0.2, 11.8), ut(0.2, 3.0);
    double worst_ck = 0;
    for (int i = 0; i < 6; ++i) {
        const double x = ux(rng), y = ux(rng), s = ut(rng), t = ut(rng);
        auto f = [&](double z) { return kernels::q_t(c12, x, z, s) * kernels::q_t(c12, z, y, t); };
        const double lhs = oracle::simpson_pieces(f, {0.0, 1.0, std::min(x, y), std::max(x, y), 12.0}, 1e-12);
        worst_ck = std::max(worst_ck, rel(lhs, kernels::q_t(c12, x, y, s + t)));
    }
    o.require(worst_ck <= 1e-6, "semigroup max relative error " + sci(worst_ck));

    const KernelConfig c15 = kernels::make_config(4.0, 15.0, 100000);
    std::mt19937_64 rg(5);
    std::uniform_real_distribution<double> gx(0.01, 14.99), lxi(std::log(1e-3), std::log(1.0));
    double worst_g = 0;
    for (int i = 0; i < 100; ++i) {
        const double x = gx(rg), y = gx(rg), xi = std::exp(lxi(rg));
        const auto gc = kernels::green_components(c15, xi);
        worst_g = std::max(worst_g, rel(kernels::green_closed(gc, x, y), kernels::green_series(c15, x, y, xi)));
    }
    o.require(worst_g <= 1e-6, "green closed vs series max relative error " + sci(worst_g));

    double worst_w = 0;
    for (double xi : {1e-3, 0.1, 1.0, 5.0}) {
        const auto gc = kernels::green_components(c15, xi);
        for (double x : {0.25, 0.5, 1.5, 7.5, 14.5})
            worst_w = std::max(worst_w, rel(gc.psi(x) * gc.dphi(x) - gc.dpsi(x) * gc.phi(x), gc.wronskian));
    }
    o.require(worst_w <= 1e-8, "Wronskian max relative deviation " + sci(worst_w));

    std::mt19937_64 rb(3);
    std::uniform_real_distribution<double> bx(0.05, 11.95), bt(0.2, 30.0);
    int ok = 0;
    double max_ratio = 0;
    for (int i = 0; i < 20; ++i) {
        const double x = bx(rb), y = bx(rb), t = bt(rb);
        const double lhs = kernels::p_integral(c12, x, y, 0.0, t);
        const double rhs = std::exp(1.0) * kernels::green_closed(kernels::green_components(c12, 1.0 / t), x, y);
        ok += lhs <= rhs;
        max_ratio = std::max(max_ratio, lhs / rhs);
    }
    o.require(ok == 20, "integrated density <= e G_{1/t} at " + std::to_string(ok) + "/20 points, max ratio " +
                            sci(max_ratio));
}

// 5. first moments of the simulation
void moments(Outcome& o) {
    SimConfig c;
    c.rho = 4.0;
    c.barrier = 10.0;
    c.initial = {{5.0, 1}};
    c.t_max = 3.0;
    c.dt = 1e-3;
    c.replica_count = 100000;
    c.seed = 1;
    const spectrum::PrincipalMode pm(4.0, 10.0);
    const double z_pred = std::exp((pm.lambda1() - regimes::lambda_inf(4.0)) * 3.0) * pm.z(5.0);
    const KernelConfig kc = kernels::make_config(4.0, 10.0);
    const double r_pred = kernels::expected_hits(kc, 5.0, {{0.0, 3.0}});
    const Prediction zp{"Zprime", 3.0, z_pred, PredictionKind::Equality, 1};
    const Prediction rp{"R_cum", 3.0, r_pred, PredictionKind::Equality, 1};

    const auto card = stats::moment_scorecard(stats::summarize(bbm::run(c)), {zp, rp});
    const auto& z = card.rows[0];
    const auto& r = card.rows[1];
    o.require(z.pass, "E[Z'_3] = " + sci(z.empirical) + " +- " + sci(z.se) + " vs " + sci(z_pred) + " (z " + sci(z.z) + ")");
    o.require(r.pass, "E[R] = " + sci(r.empirical) + " +- " + sci(r.se) + " (Poisson floor) vs " + sci(r_pred) + " (z " +
                          sci(r.z) + ")");

    c.dt = 5e-4;
    const auto half = stats::moment_scorecard(stats::summarize(bbm::run(c)), {zp});
    const double shift = std::abs(half.rows[0].empirical - z.empirical);
    const double comb = std::hypot(half.rows[0].se, z.se);
    o.require(shift < 2.0 * comb, "dt halving shifts E[Z'] by " + sci(shift) + " = " + sci(shift / comb) + " combined SE");
}

// 6. distribution of W
void w_tail(Outcome& o) {
    const std::size_t n = 100000;
    const auto w = bbm::sample_W(4.0, 8.0, n, 1);
    const double cens = static_cast<double>(w.censored_replicas.size()) / static_cast<double>(n);
    const Estimate m = stats::mean_se(w.values);
    o.require(std::abs(m.value - 1.0) <= 3.0 * m.se, "E[W] = " + sci(m.value) + " +- " + sci(m.se));
    const auto k = static_cast<std::size_t>(std::round(std::sqrt(static_cast<double>(w.values.size()))));
    const TailReport tr = stats::hill(w.values, k);
    const double alpha = regimes::alpha_of_rho(4.0);
    o.require(std::abs(tr.alpha_hat - alpha) <= 0.15,
              "Hill alpha at k=" + std::to_string(k) + ": " + sci(tr.alpha_hat) + " vs " + sci(alpha));
    o.require(cens < 1e-4, "censoring rate " + sci(cens));
}

// 7. CSBP analytics
void csbp_analytics(Outcome& o) {
    double worst = 0;
    for (double alpha : {1.2, 1.5, 1.66, 1.9, 2.0})
        for (double lam : {0.05, 1.0, 2.0, 20.0})
            for (double t : {0.5, 5.0}) {
                const CsbpParams p{0, 0.7, alpha};
                worst = std::max(worst, rel(csbp::u_rk4(p, lam, t), csbp::u_closed(p, lam, t)));
            }
    o.require(worst <= 1e-8, "closed form vs RK4 max relative error " + sci(worst));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lam_d(0.01, 10.0), t_d(0.0, 4.0), al_d(1.0, 2.0);
    double worst_sg = 0;
    for (int i = 0; i < 30; ++i) {
        const CsbpParams p{i % 2 ? 0.3 : 0.0, 0.9, al_d(rng)};
        const double lam = lam_d(rng), s = t_d(rng), t = t_d(rng);
        worst_sg = std::max(worst_sg, rel(csbp::u_flow(p, csbp::u_flow(p, lam, s), t), csbp::u_flow(p, lam, s + t)));
    }
    o.require(worst_sg <= 1e-8, "semigroup max relative error " + sci(worst_sg));
}

// 8. scaled-down population-size limit
void csbp_limit(Outcome& o) {
    const RegimeParams rp = regimes::regime_params(4.0);
    const double N = 200.0;
    const double L = std::log(N) / (rp.mu - rp.beta);
    const double T = 0.5 * std::pow(N, rp.alpha - 1.0);
    const double scale = spectrum::mass_scale_of_rho(4.0);
    SimConfig c;
    c.rho = 4.0;
    c.scheme = Scheme::Exact;
    c.initial = {{1.0, 200}};
    c.reference_L = L;
    c.t_max = T;
    c.replica_count = 20000;
    c.seed = 1;
    const auto reps = bbm::run(c);
    std::vector<double> x;
    std::size_t censored = 0;
    for (const auto& r : reps) {
        if (r.status == RunStatus::Censored) {
            ++censored;
            continue;
        }
        x.push_back(scale * static_cast<double>(r.records.back().N) / N);
    }
    const Estimate mean = stats::mean_se(x);
    const double kernel_mean = scale * kernels::mass(kernels::make_config(4.0, 40.0), 1.0, T);
    o.detail << "L=" << sci(L) << " T=" << sci(T) << " censored=" << censored << "; mean of sigma N_T/N " << sci(mean.value)
             << " +- " << sci(mean.se) << " (first-moment kernel " << sci(kernel_mean) << "); ";

    const std::vector<double> lambdas{0.25, 0.5, 1.0, 2.0, 4.0};
    auto points = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> sub(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
        std::vector<csbp::LaplacePoint> pts;
        for (double lam : lambdas) {
            const Estimate e = stats::empirical_laplace(sub, lam);
            pts.push_back({lam, e.value, e.se});
        }
        return pts;
    };
    const auto all = csbp::fit_b(points(0, x.size()), 1.0, 0.5, rp.alpha);
    const auto h1 = csbp::fit_b(points(0, x.size() / 2), 1.0, 0.5, rp.alpha);
    const auto h2 = csbp::fit_b(points(x.size() / 2, x.size()), 1.0, 0.5, rp.alpha);
    std::ostringstream zs;
    for (std::size_t i = 0; i < all.z.size(); ++i) zs << (i ? "," : "") << sci(all.z[i]);
    o.require(all.max_abs_z <= 3.0, "fitted b=" + sci(all.b) + ", z per lambda [" + zs.str() + "]");
    o.require(rel(h1.b, all.b) <= 0.2 && rel(h2.b, all.b) <= 0.2,
              "half-sample b " + sci(h1.b) + " / " + sci(h2.b));
}

// 9. determinism across thread counts
void determinism(Outcome& o) {
    auto run = [](std::vector<std::string> args) {
        std::ostringstream out, err;
        const int code = cli::dispatch(args, out, err);
        return std::to_string(code) + "\n" + out.str();
    };
    const std::vector<std::vector<std::string>> commands{
        {"regimes", "--rho", "4", "--json"},
        {"spectrum", "--rho", "4", "--length", "20", "--count", "8"},
        {"kernel", "flux", "--rho", "4", "--length", "10", "--a", "0", "--b", "3", "--points", "5"},
        {"csbp", "--alpha", "1.63", "--b", "0.4", "--lambda", "2", "--t", "1"},
        {"simulate", "--rho", "4", "--barrier", "10", "--x0", "5", "--t-max", "1", "--record", "0.5", "--replicas",
         "200", "--seed", "9"},
        {"simulate", "--rho", "4", "--scheme", "exact", "--x0", "1", "--count", "20", "--t-max", "2", "--replicas",
         "200", "--seed", "9", "--json", "-"},
        {"escape", "--y", "4", "--samples", "500", "--seed", "9", "--json", "-"},
        {"escape", "--y", "4", "--samples", "500", "--seed", "9"}};
    int same = 0;
    for (const auto& cmd : commands) {
        std::string first;
        bool ok = true;
        for (const char* threads : {"1", "1", "2", "4"}) {
            auto args = cmd;
            if (cmd[0] == "simulate" || cmd[0] == "escape") {
                args.push_back("--threads");
                args.push_back(threads);
            }
            const std::string got = run(args);
            if (first.empty()) first = got;
            ok = ok && got == first && got[0] == '0';
        }
        same += ok;
    }
    o.require(same == static_cast<int>(commands.size()),
              std::to_string(same) + "/" + std::to_string(commands.size()) + " commands byte identical over threads 1,1,2,4");
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // wall-clock bound; 0 when stated only for an 8-core machine
    std::function<void(Outcome&)> body;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "threshold constants", 1.0, thresholds},
        {2, "dual-oracle eigenvalue check", 1.0, dual_oracle},
        {3, "finite-L spectral convergence", 1.0, finite_L},
        {4, "kernel identities", 30.0, kernel_identities},
        {5, "moment verification", 0.0, moments},
        {6, "W distribution", 0.0, w_tail},
        {7, "CSBP analytics", 1.0, csbp_analytics},
        {8, "scaled-down CSBP limit", 0.0, csbp_limit},
        {9, "determinism", 0.0, determinism},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int failures = 0;
    std::printf("threads: %u\n", bbm::thread_count(0));
    for (const auto& c : all) {
        if (!pick.empty() && !pick.count(c.id)) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0) o.require(secs < c.budget_s, "runtime " + sci(secs) + " s < " + sci(c.budget_s) + " s");
        failures += !o.pass;
        std::printf("%s  criterion %d  %-30s %8.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
