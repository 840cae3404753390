#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "errors.hpp"
#include "numerics.hpp"
#include "regimes.hpp"
#include "spectrum.hpp"

namespace frontier {

enum class BarrierMode { Kill, LogOnly };
enum class Scheme { Euler, Exact };
enum class RunStatus { Running, Extinct, TMax, Censored };

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Running: return "running";
        case RunStatus::Extinct: return "extinct";
        case RunStatus::TMax: return "t_max";
        case RunStatus::Censored: return "censored";
    }
    return "unknown";
}

struct InitialCluster {
    double position;
    std::size_t count;
};

struct SimConfig {
    double rho = 4.0;
    std::optional<double> drift;    // defaults to mu(rho)
    std::optional<double> barrier;  // right boundary L
    BarrierMode barrier_mode = BarrierMode::Kill;
    std::optional<double> reference_L;  // L used for Z, Y, Ytilde when there is no barrier
    double dt = 1e-3;
    double t_max = 1.0;
    std::vector<InitialCluster> initial{{1.0, 1}};
    std::uint64_t seed = 1;
    std::size_t replica_count = 1;
    std::size_t max_particles = 1'000'000;
    bool bridge_correction = true;
    std::vector<double> record_schedule;
    Scheme scheme = Scheme::Euler;
    unsigned threads = 0;  // 0: FRONTIER_THREADS or hardware concurrency
};

struct ObservableRecord {
    double t = 0;
    std::size_t N = 0;
    double Z = 0, Zprime = 0, Y = 0, Ytilde = 0;
    double M_max = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t R_cum = 0;
    RunStatus status = RunStatus::Running;
};

struct ReplicaResult {
    std::vector<ObservableRecord> records;
    RunStatus status = RunStatus::Running;
};

using Rng = std::mt19937_64;

struct ParticleState {
    double t = 0;
    std::vector<double> positions;
    std::vector<std::uint8_t> escaped;  // lineage touched the barrier (log-only mode)
    std::uint64_t R_cum = 0;
    std::uint64_t branch_events = 0;
    Rng rng;
};

namespace bbm {

inline double branching_rate(double rho, double x) { return (x >= 0.0 && x <= 1.0) ? 0.5 * rho : 0.5; }

// Fully resolved parameters shared by all replicas.
struct Model {
    SimConfig cfg;
    double mu = 1;
    double L_obs = std::numeric_limits<double>::quiet_NaN();
    std::shared_ptr<const spectrum::PrincipalMode> mode;  // null when z is unavailable
};

inline void validate(const SimConfig& c) {
    // rho = 1 (flat rate 1/2) is allowed when the drift is given explicitly
    if (!(c.rho > 1.0 || (c.rho == 1.0 && c.drift))) throw DomainError("rho must satisfy rho > 1");
    if (c.scheme == Scheme::Euler) {
        if (!(c.dt > 0.0 && c.dt <= 0.01 && c.dt * std::max(c.rho / 2.0, 1.0) <= 0.02))
            throw ConfigError("dt must satisfy 0 < dt <= 0.01 and dt * max(rho/2, 1) <= 0.02");
    }
    if (!(c.t_max > 0.0)) throw ConfigError("t_max must be positive");
    if (c.initial.empty()) throw ConfigError("initial configuration is empty");
    for (const auto& ic : c.initial) {
        if (!(ic.position > 0.0)) throw ConfigError("initial positions must be > 0");
        if (c.barrier && !(ic.position < *c.barrier)) throw ConfigError("initial positions must be < barrier");
    }
    if (c.barrier && !(*c.barrier > 1.0)) throw ConfigError("barrier must exceed 1");
    if (c.scheme == Scheme::Exact && c.barrier) throw ConfigError("the exact scheme supports absorption at 0 only");
    if (c.replica_count == 0) throw ConfigError("replica_count must be >= 1");
    for (std::size_t i = 0; i < c.record_schedule.size(); ++i) {
        const double t = c.record_schedule[i];
        if (!(t >= 0.0 && t <= c.t_max)) throw ConfigError("record times must lie in [0, t_max]");
        if (i > 0 && !(t > c.record_schedule[i - 1])) throw ConfigError("record schedule must be increasing");
    }
}

inline Model make_model(const SimConfig& c) {
    validate(c);
    Model m;
    m.cfg = c;
    if (m.cfg.record_schedule.empty() || m.cfg.record_schedule.back() < c.t_max)
        m.cfg.record_schedule.push_back(c.t_max);
    m.mu = c.drift ? *c.drift : regimes::mu_of_rho(c.rho);
    if (c.barrier) m.L_obs = *c.barrier;
    else if (c.reference_L) m.L_obs = *c.reference_L;
    if (std::isfinite(m.L_obs) && regimes::is_pushed(c.rho) && m.L_obs >= spectrum::L_min(c.rho)) {
        auto pm = std::make_shared<spectrum::PrincipalMode>(c.rho, m.L_obs);
        if (pm->lambda1() > 0 && m.mu > std::sqrt(2.0 * pm->lambda1())) m.mode = pm;
    }
    return m;
}

inline unsigned thread_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FRONTIER_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n) on a small pool; results must go to slot i.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    f(i);
                } catch (...) {
                    if (!failed.exchange(true)) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline ParticleState initial_state(const Model& m, std::size_t replica) {
    ParticleState st;
    st.rng.seed(num::stream_seed(m.cfg.seed, replica));
    for (const auto& ic : m.cfg.initial)
        for (std::size_t j = 0; j < ic.count; ++j) st.positions.push_back(ic.position);
    st.escaped.assign(st.positions.size(), 0);
    if (st.positions.size() > m.cfg.max_particles) throw CapacityExceeded("initial configuration exceeds max_particles");
    return st;
}

inline ObservableRecord observe(const ParticleState& st, const Model& m) {
    ObservableRecord r;
    r.t = st.t;
    r.N = st.positions.size();
    r.R_cum = st.R_cum;
    const double L = m.L_obs;
    const bool have_L = std::isfinite(L);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < st.positions.size(); ++i) {
        const double x = st.positions[i];
        mx = std::max(mx, x);
        if (!have_L || x > L) continue;
        const double e = std::exp(m.mu * (x - L));
        r.Ytilde += e;
        r.Y += std::min(x, 1.0) * e;
        if (m.mode) {
            const double z = m.mode->z(x);
            r.Z += z;
            if (!st.escaped[i]) r.Zprime += z;
        }
    }
    if (!have_L) r.Y = r.Ytilde = std::numeric_limits<double>::quiet_NaN();
    if (!m.mode) r.Z = r.Zprime = std::numeric_limits<double>::quiet_NaN();
    r.M_max = r.N ? mx : std::numeric_limits<double>::quiet_NaN();
    return r;
}

// One Euler step of length h. A branching particle duplicates at its pre-move position and does not
// move this step. Absorption uses the Brownian-bridge crossing probability exp(-2 d_pre d_post / h).
// Every particle consumes the same number of draws whatever happens to it, so for a fixed seed the
// set of branch events within a step is monotone in rho.
inline void step(ParticleState& st, const Model& m, double h) {
    const SimConfig& c = m.cfg;
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> unif;
    const double sh = std::sqrt(h);
    const bool has_barrier = c.barrier.has_value();
    const double L = has_barrier ? *c.barrier : 0.0;
    const std::size_t n = st.positions.size();
    std::vector<double> next, born;
    std::vector<std::uint8_t> next_esc, born_esc;
    next.reserve(n + n / 8 + 4);
    next_esc.reserve(n + n / 8 + 4);
    std::size_t deaths = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = st.positions[i];
        std::uint8_t esc = st.escaped[i];
        const double u = unif(st.rng);
        const double g = normal(st.rng);
        const double u0 = unif(st.rng);
        const double uL = has_barrier ? unif(st.rng) : 1.0;
        if (u < branching_rate(c.rho, x) * h) {
            if (n + born.size() + 1 - deaths > c.max_particles) throw CapacityExceeded("particle cap reached");
            next.push_back(x);
            next_esc.push_back(esc);
            born.push_back(x);
            born_esc.push_back(esc);
            ++st.branch_events;
            continue;
        }
        const double y = x - m.mu * h + sh * g;
        bool dead = y <= 0.0 || (c.bridge_correction && u0 < std::exp(-2.0 * x * y / h));
        if (!dead && has_barrier) {
            const bool crossed = y >= L || (c.bridge_correction && x < L && uL < std::exp(-2.0 * (L - x) * (L - y) / h));
            if (crossed) {
                if (c.barrier_mode == BarrierMode::Kill) {
                    ++st.R_cum;
                    dead = true;
                } else if (!esc) {
                    ++st.R_cum;
                    esc = 1;
                }
            }
        }
        if (dead) {
            ++deaths;
            continue;
        }
        next.push_back(y);
        next_esc.push_back(esc);
    }
    next.insert(next.end(), born.begin(), born.end());
    next_esc.insert(next_esc.end(), born_esc.begin(), born_esc.end());
    st.positions = std::move(next);
    st.escaped = std::move(next_esc);
    st.t += h;
}

// Exact evolution to time T with absorption at 0: exponential proposal clocks at rate rho/2,
// acceptance r(x)/(rho/2), and exact bridge killing between events.
inline void advance_exact(ParticleState& st, const Model& m, double T) {
    const SimConfig& c = m.cfg;
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> unif;
    const double rate = 0.5 * std::max(c.rho, 1.0);
    boost::random::exponential_distribution<double> expo(rate);
    struct P {
        double x, t;
    };
    std::vector<P> stack;
    stack.reserve(st.positions.size());
    for (auto it = st.positions.rbegin(); it != st.positions.rend(); ++it) stack.push_back({*it, st.t});
    std::vector<double> out;
    out.reserve(st.positions.size());
    while (!stack.empty()) {
        P p = stack.back();
        stack.pop_back();
        for (;;) {
            const double tau = expo(st.rng);
            const bool to_end = p.t + tau >= T;
            const double h = to_end ? T - p.t : tau;
            const double y = p.x - m.mu * h + std::sqrt(h) * normal(st.rng);
            if (y <= 0.0 || unif(st.rng) < std::exp(-2.0 * p.x * y / h)) break;
            if (to_end) {
                out.push_back(y);
                break;
            }
            p = {y, p.t + tau};
            if (unif(st.rng) * rate < branching_rate(c.rho, y)) {
                if (stack.size() + out.size() + 2 > c.max_particles) throw CapacityExceeded("particle cap reached");
                stack.push_back(p);
                ++st.branch_events;
            }
        }
    }
    st.positions = std::move(out);
    st.escaped.assign(st.positions.size(), 0);
    st.t = T;
}

inline ReplicaResult run_replica(const Model& m, std::size_t replica) {
    ReplicaResult res;
    ParticleState st = initial_state(m, replica);
    const auto& sched = m.cfg.record_schedule;
    try {
        for (double tr : sched) {
            if (!st.positions.empty()) {
                if (m.cfg.scheme == Scheme::Exact) {
                    if (tr > st.t) advance_exact(st, m, tr);
                } else {
                    while (tr - st.t > 1e-12 && !st.positions.empty()) {
                        const double h = std::min(m.cfg.dt, tr - st.t);
                        step(st, m, (tr - st.t - h < 1e-12) ? tr - st.t : h);
                    }
                }
            }
            st.t = tr;
            ObservableRecord r = observe(st, m);
            r.status = st.positions.empty() ? RunStatus::Extinct : RunStatus::Running;
            res.records.push_back(r);
        }
        res.status = st.positions.empty() ? RunStatus::Extinct : RunStatus::TMax;
    } catch (const CapacityExceeded&) {
        res.status = RunStatus::Censored;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = res.records.size(); k < sched.size(); ++k) {
            ObservableRecord r;
            r.t = sched[k];
            r.N = 0;
            r.Z = r.Zprime = r.Y = r.Ytilde = r.M_max = nan;
            r.R_cum = st.R_cum;
            r.status = RunStatus::Censored;
            res.records.push_back(r);
        }
    }
    if (res.status != RunStatus::Censored && !res.records.empty()) res.records.back().status = res.status;
    return res;
}

inline std::vector<ReplicaResult> run(const SimConfig& cfg) {
    const Model m = make_model(cfg);
    std::vector<ReplicaResult> out(cfg.replica_count);
    parallel_for(cfg.replica_count, thread_count(cfg.threads),
                 [&](std::size_t i) { out[i] = run_replica(m, i); });
    return out;
}

struct WSamples {
    std::vector<double> values;  // uncensored samples in replica order
    std::vector<std::size_t> censored_replicas;
    double y = 0;
};

// Descendants of one particle at 0 (rate 1/2, drift -mu) first hitting -y, rescaled by
// e^{-(mu - beta) y}. Event driven and exact: exponential lifetimes and bridge absorption.
inline WSamples sample_W(double rho, double y, std::size_t n_samples, std::uint64_t seed,
                         std::size_t max_particles = 10'000'000, unsigned threads = 0) {
    if (!(y >= 0.0)) throw DomainError("barrier depth y must be >= 0");
    const RegimeParams p = regimes::regime_params(rho);
    if (!(p.lambda_inf > 0)) throw DomainError("W requires the pushed regime");
    const double mu = p.mu;
    const double scale = std::exp(-(mu - p.beta) * y);
    std::vector<double> vals(n_samples);
    std::vector<std::uint8_t> cens(n_samples, 0);
    parallel_for(n_samples, thread_count(threads), [&](std::size_t i) {
        Rng rng(num::stream_seed(seed, i));
        boost::random::normal_distribution<double> normal;
        boost::random::uniform_01<double> unif;
        boost::random::exponential_distribution<double> expo(0.5);
        std::vector<double> stack{y};  // distance to the absorbing level
        std::uint64_t count = 0;
        while (!stack.empty()) {
            const double d = stack.back();
            stack.pop_back();
            if (d <= 0.0) {
                ++count;
                continue;
            }
            const double tau = expo(rng);
            const double e = d - mu * tau + std::sqrt(tau) * normal(rng);
            if (e <= 0.0 || unif(rng) < std::exp(-2.0 * d * e / tau)) {
                ++count;
                continue;
            }
            if (count + stack.size() + 2 > max_particles) {
                cens[i] = 1;
                return;
            }
            stack.push_back(e);
            stack.push_back(e);
        }
        vals[i] = scale * static_cast<double>(count);
    });
    WSamples out;
    out.y = y;
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (cens[i]) out.censored_replicas.push_back(i);
        else out.values.push_back(vals[i]);
    }
    return out;
}

}  // namespace bbm
}  // namespace frontier
