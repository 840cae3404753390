#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "bbm.hpp"
#include "errors.hpp"

namespace frontier {

struct TailReport {
    std::size_t k_order = 0;
    double alpha_hat = 0;
    double se_alpha = 0;
    std::vector<std::pair<std::size_t, double>> k_sensitivity;
    double spread = 0;  // (max - min) / alpha_hat over the k-grid
    bool no_power_law = false;
};

struct Estimate {
    double value = 0;
    double se = 0;
};

struct SummaryRow {
    std::string observable;
    double t = 0;
    double mean = 0;
    double se = 0;
    std::size_t n = 0;
};

struct RunSummary {
    std::vector<SummaryRow> rows;
    std::size_t replicas = 0;
    std::size_t censored = 0;
    std::size_t extinct = 0;
};

enum class PredictionKind { Equality, UpperBound };

struct Prediction {
    std::string observable;
    double t = 0;
    double value = 0;
    PredictionKind kind = PredictionKind::Equality;
    double constant = 1;  // frozen calibration constant for upper bounds
};

struct ScoreRow {
    std::string observable;
    double t = 0;
    double empirical = 0, se = 0, predicted = 0, z = 0;
    PredictionKind kind = PredictionKind::Equality;
    bool pass = false;
};

struct Scorecard {
    std::vector<ScoreRow> rows;
    bool all_pass = true;
    std::string policy =
        "equalities pass at |z| <= 3; upper bounds pass when empirical - 3 se <= constant * bound, "
        "with the constant calibrated once and frozen; R_cum uses se >= sqrt(predicted / n), the Poisson "
        "error under the prediction, since rare counts often give an empirical se of 0";
};

namespace stats {

inline constexpr double no_power_law_spread = 0.30;

// Mean and standard error; shifting by the first value keeps constant input exact.
inline Estimate mean_se(const std::vector<double>& v) {
    Estimate e;
    if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    const double s0 = v.front();
    double m = 0, m2 = 0;
    std::size_t n = 0;
    for (double x : v) {
        ++n;
        const double d = (x - s0) - m;
        m += d / static_cast<double>(n);
        m2 += d * ((x - s0) - m);
    }
    e.value = s0 + m;
    e.se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return e;
}

inline double hill_sorted(const std::vector<double>& desc, std::size_t k) {
    const double ref = std::log(desc[k]);
    double s = 0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(desc[i]) - ref;
    if (!(s > 0)) throw DomainError("hill: zero log-spacings, tail index undefined");
    return static_cast<double>(k) / s;
}

inline std::vector<std::size_t> hill_k_grid(std::size_t n) {
    std::vector<std::size_t> ks;
    const double hi = std::floor(static_cast<double>(n) / 2.0);
    for (double e : {0.4, 0.5, 0.6}) {
        const double k = std::clamp(std::round(std::pow(static_cast<double>(n), e)), 10.0, hi);
        ks.push_back(static_cast<std::size_t>(k));
    }
    return ks;
}

inline TailReport hill(std::vector<double> samples, std::size_t k) {
    const std::size_t n = samples.size();
    for (double x : samples)
        if (!(x > 0)) throw DomainError("hill: samples must be strictly positive");
    if (n < 20 || k < 10 || 2 * k > n) throw DomainError("hill: k must lie in [10, n/2]");
    std::sort(samples.begin(), samples.end(), std::greater<>());
    TailReport r;
    r.k_order = k;
    r.alpha_hat = hill_sorted(samples, k);
    r.se_alpha = r.alpha_hat / std::sqrt(static_cast<double>(k));
    double lo = r.alpha_hat, hi = r.alpha_hat;
    for (std::size_t kk : hill_k_grid(n)) {
        double a;
        try {
            a = hill_sorted(samples, kk);
        } catch (const DomainError&) {
            a = std::numeric_limits<double>::infinity();
        }
        r.k_sensitivity.emplace_back(kk, a);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    r.spread = (hi - lo) / r.alpha_hat;
    r.no_power_law = !(r.spread <= no_power_law_spread);
    return r;
}

inline TailReport hill_default(const std::vector<double>& samples) {
    const auto k = static_cast<std::size_t>(std::round(std::sqrt(static_cast<double>(samples.size()))));
    return hill(samples, std::clamp<std::size_t>(k, 10, samples.size() / 2));
}

inline Estimate empirical_laplace(const std::vector<double>& samples, double lambda) {
    if (!(lambda >= 0)) throw DomainError("empirical_laplace: lambda must be >= 0");
    std::vector<double> v;
    v.reserve(samples.size());
    for (double x : samples) v.push_back(std::exp(-lambda * x));
    return mean_se(v);
}

inline double field(const ObservableRecord& r, const std::string& name) {
    if (name == "N") return static_cast<double>(r.N);
    if (name == "Z") return r.Z;
    if (name == "Zprime") return r.Zprime;
    if (name == "Y") return r.Y;
    if (name == "Ytilde") return r.Ytilde;
    if (name == "M_max") return r.M_max;
    if (name == "R_cum") return static_cast<double>(r.R_cum);
    throw DomainError("unknown observable: " + name);
}

inline const std::vector<std::string>& observable_names() {
    static const std::vector<std::string> names{"N", "Z", "Zprime", "Y", "Ytilde", "M_max", "R_cum"};
    return names;
}

// Per-observable means over uncensored replicas. M_max averages only surviving replicas.
inline RunSummary summarize(const std::vector<ReplicaResult>& reps) {
    RunSummary s;
    s.replicas = reps.size();
    std::size_t n_times = 0;
    for (const auto& r : reps) {
        if (r.status == RunStatus::Censored) ++s.censored;
        if (r.status == RunStatus::Extinct) ++s.extinct;
        n_times = std::max(n_times, r.records.size());
    }
    for (std::size_t k = 0; k < n_times; ++k) {
        for (const auto& name : observable_names()) {
            std::vector<double> v;
            double t = 0;
            for (const auto& r : reps) {
                if (r.status == RunStatus::Censored || k >= r.records.size()) continue;
                t = r.records[k].t;
                const double x = field(r.records[k], name);
                if (std::isnan(x)) continue;
                v.push_back(x);
            }
            const Estimate e = mean_se(v);
            s.rows.push_back({name, t, e.value, e.se, v.size()});
        }
    }
    return s;
}

// Smallest constant C with empirical <= C * bound on every calibration row.
inline double calibrate_constant(const RunSummary& calib, const std::vector<Prediction>& bounds) {
    double c = 0;
    for (const auto& p : bounds)
        for (const auto& r : calib.rows)
            if (r.observable == p.observable && std::abs(r.t - p.t) <= 1e-9 * std::max(1.0, p.t) && p.value > 0)
                c = std::max(c, r.mean / p.value);
    return c;
}

inline Scorecard moment_scorecard(const RunSummary& run, const std::vector<Prediction>& preds) {
    if (run.rows.empty()) throw ScheduleMismatch("scorecard: empty run summary");
    Scorecard sc;
    for (const auto& p : preds) {
        const SummaryRow* hit = nullptr;
        for (const auto& r : run.rows)
            if (r.observable == p.observable && std::abs(r.t - p.t) <= 1e-9 * std::max(1.0, p.t)) hit = &r;
        if (!hit) throw ScheduleMismatch("scorecard: no empirical row for " + p.observable + " at t=" + std::to_string(p.t));
        ScoreRow row;
        row.observable = p.observable;
        row.t = p.t;
        row.empirical = hit->mean;
        row.kind = p.kind;
        row.predicted = p.kind == PredictionKind::Equality ? p.value : p.constant * p.value;
        row.se = hit->se;
        if (p.observable == "R_cum" && hit->n > 0)
            row.se = std::max(row.se, std::sqrt(std::abs(row.predicted) / static_cast<double>(hit->n)));
        const double diff = hit->mean - row.predicted;
        if (row.se > 0) row.z = diff / row.se;
        else row.z = diff == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
        row.pass = p.kind == PredictionKind::Equality ? std::abs(row.z) <= 3.0 : row.z <= 3.0;
        sc.all_pass = sc.all_pass && row.pass;
        sc.rows.push_back(row);
    }
    return sc;
}

}  // namespace stats
}  // namespace frontier
