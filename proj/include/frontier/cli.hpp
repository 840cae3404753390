#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <boost/version.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bbm.hpp"
#include "csbp.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "regimes.hpp"
#include "spectrum.hpp"
#include "stats.hpp"

namespace frontier {

inline constexpr const char* version = "0.1.0";

namespace cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, domain_failure = 1, verification_failure = 2, usage = 64 };

namespace detail {

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json versions() {
    return {{"frontier", version},
            {"cli11", CLI11_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"boost", BOOST_LIB_VERSION}};
}

inline json envelope(const json& config, const json& results, std::optional<std::uint64_t> seed) {
    json j;
    j["config"] = config;
    j["results"] = results;
    j["versions"] = versions();
    j["seed"] = seed ? json(*seed) : json(nullptr);
    return j;
}

inline std::string provenance(const std::string& command, const json& config) {
    std::string s = "# frontier " + std::string(version) + "\n# command: " + command + "\n# config: " + config.dump() + "\n";
    return s;
}

// temp file + rename, so readers never see a truncated file
inline void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
    }
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") out << content;
    else write_atomic(path, content);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Splits a CSV body into rows, skipping '#' comments and blank lines.
inline std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline double to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw Error("not a number: '" + s + "'");
    return v;
}

inline RunStatus parse_status(const std::string& s) {
    for (RunStatus r : {RunStatus::Running, RunStatus::Extinct, RunStatus::TMax, RunStatus::Censored})
        if (to_string(r) == s) return r;
    throw Error("unknown status: " + s);
}

inline const char* sim_columns = "replica,t,N,Z,Zprime,Y,Ytilde,M_max,R_cum,status";

inline std::vector<ReplicaResult> read_sim_csv(const std::string& text) {
    const auto rows = csv_rows(text);
    if (rows.empty()) throw ScheduleMismatch("simulation CSV has no header");
    std::string header;
    for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
    if (header != sim_columns) throw Error("unexpected simulation CSV header: " + header);
    std::vector<ReplicaResult> reps;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& c = rows[i];
        if (c.size() != 10) throw Error("malformed simulation CSV row " + std::to_string(i));
        const auto id = static_cast<std::size_t>(to_double(c[0]));
        if (id >= reps.size()) reps.resize(id + 1);
        ObservableRecord r;
        r.t = to_double(c[1]);
        r.N = static_cast<std::size_t>(to_double(c[2]));
        r.Z = to_double(c[3]);
        r.Zprime = to_double(c[4]);
        r.Y = to_double(c[5]);
        r.Ytilde = to_double(c[6]);
        r.M_max = to_double(c[7]);
        r.R_cum = static_cast<std::uint64_t>(to_double(c[8]));
        r.status = parse_status(c[9]);
        reps[id].records.push_back(r);
        reps[id].status = r.status;
    }
    return reps;
}

inline json summary_json(const RunSummary& s) {
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"observable", r.observable}, {"t", r.t}, {"mean", r.mean}, {"se", r.se}, {"n", r.n}});
    return {{"replicas", s.replicas}, {"censored", s.censored}, {"extinct", s.extinct}, {"rows", rows}};
}

inline json tail_json(const TailReport& r) {
    json ks = json::array();
    for (const auto& [k, a] : r.k_sensitivity) ks.push_back({{"k", k}, {"alpha_hat", a}});
    return {{"k", r.k_order},         {"alpha_hat", r.alpha_hat}, {"se", r.se_alpha},
            {"spread", r.spread},     {"no_power_law", r.no_power_law}, {"k_sensitivity", ks}};
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// CLI11 only reads config files attached to the top-level app, so subcommand files are expanded
// into flags here. A key already present on the command line is skipped: flags beat the file.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || args.empty() || args[0].rfind("-", 0) == 0) return args;
    auto given = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> extra;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty() || line[0] == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line without '=': " + line);
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (const auto dot = key.rfind('.'); dot != std::string::npos) key = key.substr(dot + 1);
        std::replace(key.begin(), key.end(), '_', '-');
        if (val.size() >= 2 && (val.front() == '"' || val.front() == '\'') && val.back() == val.front())
            val = val.substr(1, val.size() - 2);
        if (val.size() >= 2 && val.front() == '[' && val.back() == ']') {
            val = val.substr(1, val.size() - 2);
            val.erase(std::remove(val.begin(), val.end(), ' '), val.end());
        }
        const std::string flag = "--" + key;
        if (key == "config" || given(flag)) continue;
        if (val == "true") extra.push_back(flag);
        else if (val != "false") {
            extra.push_back(flag);
            extra.push_back(val);
        }
    }
    std::vector<std::string> out{args[0]};
    out.insert(out.end(), extra.begin(), extra.end());
    out.insert(out.end(), args.begin() + 1, args.end());
    return out;
}

struct Common {
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

}  // namespace detail

// Analytic first-moment predictions for a simulation config, at every record time t >= t_min.
inline std::vector<Prediction> predictions_for(const SimConfig& c) {
    const bbm::Model m = bbm::make_model(c);
    std::vector<Prediction> out;
    const double lam_inf = regimes::lambda_inf(c.rho);
    std::optional<KernelConfig> kc;
    if (c.barrier && !c.drift) kc = kernels::make_config(c.rho, *c.barrier);
    for (double t : m.cfg.record_schedule) {
        if (m.mode) {
            double z = 0;
            for (const auto& ic : c.initial) z += static_cast<double>(ic.count) * m.mode->z(ic.position);
            out.push_back({"Zprime", t, std::exp((m.mode->lambda1() - lam_inf) * t) * z, PredictionKind::Equality, 1});
        }
        if (!kc || t < kernels::t_min) continue;
        double n = 0, hits = 0;
        for (const auto& ic : c.initial) {
            const double w = static_cast<double>(ic.count);
            hits += w * kernels::expected_hits(*kc, ic.position, {{0.0, t}});
            if (c.barrier_mode == BarrierMode::Kill) n += w * kernels::mass(*kc, ic.position, t);
        }
        out.push_back({"R_cum", t, hits, PredictionKind::Equality, 1});
        if (c.barrier_mode == BarrierMode::Kill) out.push_back({"N", t, n, PredictionKind::Equality, 1});
    }
    return out;
}

inline json predictions_json(const std::vector<Prediction>& ps) {
    json a = json::array();
    for (const auto& p : ps)
        a.push_back({{"observable", p.observable},
                     {"t", p.t},
                     {"value", p.value},
                     {"kind", p.kind == PredictionKind::Equality ? "equality" : "upper_bound"},
                     {"constant", p.constant}});
    return a;
}

inline std::vector<Prediction> parse_predictions(const json& j) {
    const json& arr = j.contains("results") ? j.at("results").at("predictions") : j.at("predictions");
    std::vector<Prediction> out;
    for (const auto& e : arr) {
        Prediction p;
        p.observable = e.at("observable").get<std::string>();
        p.t = e.at("t").get<double>();
        p.value = e.at("value").get<double>();
        const std::string kind = e.value("kind", std::string("equality"));
        if (kind == "equality") p.kind = PredictionKind::Equality;
        else if (kind == "upper_bound") p.kind = PredictionKind::UpperBound;
        else throw Error("unknown prediction kind: " + kind);
        p.constant = e.value("constant", 1.0);
        out.push_back(p);
    }
    return out;
}

inline std::string scorecard_markdown(const Scorecard& sc) {
    std::ostringstream s;
    s << "| observable | t | kind | empirical | se | predicted | z | pass |\n";
    s << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : sc.rows)
        s << "| " << r.observable << " | " << detail::num(r.t) << " | "
          << (r.kind == PredictionKind::Equality ? "equality" : "upper_bound") << " | " << detail::num(r.empirical)
          << " | " << detail::num(r.se) << " | " << detail::num(r.predicted) << " | " << detail::num(r.z) << " | "
          << (r.pass ? "yes" : "NO") << " |\n";
    s << "\npolicy: " << sc.policy << "\n\nresult: " << (sc.all_pass ? "PASS" : "FAIL") << "\n";
    return s.str();
}

// Runs one command line (without the program name). Never calls exit().
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Semi-pushed front toolkit: spectral constants, kernels, BBM simulation, CSBP limits"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version));
    int verdict = ExitCode::ok;
    detail::Common common;
    std::string config_path;
    auto add_common = [&](CLI::App* sub, bool random) {
        sub->add_option("--config", config_path, "key=value file; flags given on the command line win");
        if (random) {
            sub->add_option("--seed", common.seed, "master seed")->capture_default_str();
            sub->add_option("--threads", common.threads, "worker threads (0: FRONTIER_THREADS or all cores)");
        }
    };

    // regimes
    auto* reg = app.add_subcommand("regimes", "regime constants for a given rho");
    double reg_rho = 4.0;
    bool reg_json = false;
    reg->add_option("--rho", reg_rho, "branching enhancement on [0,1]")->required();
    reg->add_flag("--json", reg_json, "print one JSON object");
    add_common(reg, false);
    reg->callback([&] {
        const RegimeParams p = regimes::regime_params(reg_rho);
        const RegimeThresholds th = regimes::thresholds();
        json j = {{"rho", reg_rho},       {"regime", to_string(p.regime)}, {"lambda_inf", p.lambda_inf},
                  {"mu", p.mu},           {"beta", p.beta},                {"gamma", p.gamma},
                  {"alpha", p.alpha},     {"rho1", th.rho1},               {"rho2", th.rho2}};
        if (reg_json) {
            out << j.dump(2) << "\n";
            return;
        }
        for (auto it = j.begin(); it != j.end(); ++it) {
            std::string key = it.key();
            key.resize(12, ' ');
            out << key << (it->is_string() ? it->get<std::string>() : detail::num(it->is_null() ? NAN : it->get<double>()))
                << "\n";
        }
    });

    // spectrum
    auto* spc = app.add_subcommand("spectrum", "first eigenvalues on [0, L]");
    double sp_rho = 4.0, sp_L = 10.0;
    int sp_count = 5;
    std::string sp_csv;
    spc->add_option("--rho", sp_rho)->required();
    spc->add_option("--length", sp_L)->required();
    spc->add_option("--count", sp_count)->capture_default_str();
    spc->add_option("--csv", sp_csv, "output path (default: stdout)");
    add_common(spec, false);
    spc->callback([&] {
        if (sp_count < 1) throw DomainError("count must be >= 1");
        const FiniteSpectrum fs = spectrum::eigenvalues(sp_rho, sp_L, sp_count);
        json cfg = {{"rho", sp_rho}, {"length", sp_L}, {"count", sp_count}};
        std::string s = detail::provenance("spectrum", cfg) + "k,lambda_k,bracket_lo,bracket_hi,norm_sq,residual\n";
        for (std::size_t k = 0; k < fs.size(); ++k)
            s += std::to_string(k + 1) + "," + detail::num(fs.lambdas[k]) + "," + detail::num(fs.brackets[k].lo) + "," +
                 detail::num(fs.brackets[k].hi) + "," + detail::num(fs.norm_sq[k]) + "," +
                 detail::num(spectrum::residual(sp_rho, sp_L, fs.lambdas[k])) + "\n";
        detail::emit(sp_csv, s, out);
    });

    // kernel
    auto* ker = app.add_subcommand("kernel", "heat kernel, Green function and boundary flux on a grid");
    std::string k_kind;
    double k_rho = 4.0, k_L = 10.0, k_x = 1.0, k_t = 1.0, k_xi = 0.5, k_a = 0.0, k_b = 1.0;
    int k_points = 21, k_terms = 20000;
    std::string k_csv;
    ker->add_option("kind", k_kind, "qt | pt | green | flux")
        ->required()
        ->check(CLI::IsMember({"qt", "pt", "green", "flux"}));
    ker->add_option("--rho", k_rho)->required();
    ker->add_option("--length", k_L)->required();
    ker->add_option("--x", k_x, "starting point (qt, pt, green)")->capture_default_str();
    ker->add_option("--t", k_t, "time (qt, pt)")->capture_default_str();
    ker->add_option("--xi", k_xi, "resolvent parameter (green)")->capture_default_str();
    ker->add_option("--a", k_a, "interval start (flux)")->capture_default_str();
    ker->add_option("--b", k_b, "interval end (flux)")->capture_default_str();
    ker->add_option("--points", k_points, "interior grid points")->capture_default_str();
    ker->add_option("--terms", k_terms, "eigenvalues kept in the series")->capture_default_str();
    ker->add_option("--csv", k_csv, "output path (default: stdout)");
    add_common(ker, false);
    ker->callback([&] {
        if (k_points < 1) throw DomainError("points must be >= 1");
        const KernelConfig kc = kernels::make_config(k_rho, k_L, k_terms);
        json cfg = {{"kind", k_kind}, {"rho", k_rho},   {"length", k_L}, {"points", k_points}, {"terms", k_terms}};
        std::string s;
        auto grid = [&](int i) { return k_L * (i + 1) / (k_points + 1.0); };
        if (k_kind == "qt" || k_kind == "pt") {
            cfg["x"] = k_x;
            cfg["t"] = k_t;
            s = detail::provenance("kernel", cfg) + "x,y,t,value\n";
            for (int i = 0; i < k_points; ++i) {
                const double y = grid(i);
                const double v = k_kind == "qt" ? kernels::q_t(kc, k_x, y, k_t) : kernels::p_t(kc, k_x, y, k_t);
                s += detail::num(k_x) + "," + detail::num(y) + "," + detail::num(k_t) + "," + detail::num(v) + "\n";
            }
        } else if (k_kind == "green") {
            cfg["x"] = k_x;
            cfg["xi"] = k_xi;
            const auto gc = kernels::green_components(kc, k_xi);
            s = detail::provenance("kernel", cfg) + "x,y,xi,value\n";
            for (int i = 0; i < k_points; ++i) {
                const double y = grid(i);
                s += detail::num(k_x) + "," + detail::num(y) + "," + detail::num(k_xi) + "," +
                     detail::num(kernels::green_closed(gc, k_x, y)) + "\n";
            }
        } else {
            cfg["a"] = k_a;
            cfg["b"] = k_b;
            s = detail::provenance("kernel", cfg) + "x,a,b,flux_I,expected_hits\n";
            for (int i = 0; i < k_points; ++i) {
                const double x = grid(i);
                const kernels::TimeSet S{{k_a, k_b}};
                s += detail::num(x) + "," + detail::num(k_a) + "," + detail::num(k_b) + "," +
                     detail::num(kernels::flux_I(kc, x, S)) + "," + detail::num(kernels::expected_hits(kc, x, S)) + "\n";
            }
        }
        detail::emit(k_csv, s, out);
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "branching Brownian motion replicas");
    SimConfig sc;
    std::optional<double> s_drift, s_barrier, s_refL;
    std::string s_mode = "kill", s_scheme = "euler", s_csv, s_json, s_pred;
    double s_x0 = 1.0;
    std::size_t s_count = 1;
    bool s_no_bridge = false;
    sim->add_option("--rho", sc.rho)->capture_default_str();
    sim->add_option("--drift", s_drift, "drift (default: mu(rho))");
    sim->add_option("--barrier", s_barrier, "upper level L");
    sim->add_option("--barrier-mode", s_mode)->check(CLI::IsMember({"kill", "log"}))->capture_default_str();
    sim->add_option("--reference-length", s_refL, "L used for z and Y when there is no barrier");
    sim->add_option("--dt", sc.dt)->capture_default_str();
    sim->add_option("--t-max", sc.t_max)->capture_default_str();
    sim->add_option("--x0", s_x0, "starting position")->capture_default_str();
    sim->add_option("--count", s_count, "particles at x0")->capture_default_str();
    sim->add_option("--replicas", sc.replica_count)->capture_default_str();
    sim->add_option("--max-particles", sc.max_particles)->capture_default_str();
    sim->add_option("--record", sc.record_schedule, "record times (t-max is always recorded)")->delimiter(',');
    sim->add_option("--scheme", s_scheme)->check(CLI::IsMember({"euler", "exact"}))->capture_default_str();
    sim->add_flag("--no-bridge", s_no_bridge, "disable the Brownian bridge crossing correction");
    sim->add_option("--csv", s_csv, "per-replica CSV (default: stdout when --json is absent)");
    sim->add_option("--json", s_json, "JSON summary path");
    sim->add_option("--predictions", s_pred, "write analytic first-moment predictions as JSON");
    add_common(sim, true);
    sim->callback([&] {
        sc.drift = s_drift;
        sc.barrier = s_barrier;
        sc.reference_L = s_refL;
        sc.barrier_mode = s_mode == "kill" ? BarrierMode::Kill : BarrierMode::LogOnly;
        sc.scheme = s_scheme == "euler" ? Scheme::Euler : Scheme::Exact;
        sc.bridge_correction = !s_no_bridge;
        sc.initial = {{s_x0, s_count}};
        sc.seed = common.seed;
        sc.threads = common.threads;
        // thread count is a performance knob and stays out of the echoed config
        json cfg = {{"rho", sc.rho},
                    {"drift", s_drift ? json(*s_drift) : json(nullptr)},
                    {"barrier", s_barrier ? json(*s_barrier) : json(nullptr)},
                    {"barrier_mode", s_mode},
                    {"reference_length", s_refL ? json(*s_refL) : json(nullptr)},
                    {"dt", sc.dt},
                    {"t_max", sc.t_max},
                    {"x0", s_x0},
                    {"count", s_count},
                    {"replicas", sc.replica_count},
                    {"max_particles", sc.max_particles},
                    {"record", sc.record_schedule},
                    {"scheme", s_scheme},
                    {"bridge_correction", sc.bridge_correction},
                    {"seed", sc.seed}};
        const auto reps = bbm::run(sc);
        if (!s_csv.empty() || s_json.empty()) {
            std::string s = detail::provenance("simulate", cfg) + detail::sim_columns + "\n";
            for (std::size_t i = 0; i < reps.size(); ++i)
                for (const auto& r : reps[i].records)
                    s += std::to_string(i) + "," + detail::num(r.t) + "," + std::to_string(r.N) + "," + detail::num(r.Z) +
                         "," + detail::num(r.Zprime) + "," + detail::num(r.Y) + "," + detail::num(r.Ytilde) + "," +
                         detail::num(r.M_max) + "," + std::to_string(r.R_cum) + "," + to_string(r.status) + "\n";
            detail::emit(s_csv, s, out);
        }
        if (!s_json.empty())
            detail::emit(s_json, detail::envelope(cfg, detail::summary_json(stats::summarize(reps)), sc.seed).dump(2) + "\n",
                         out);
        if (!s_pred.empty())
            detail::emit(s_pred,
                         detail::envelope(cfg, {{"predictions", predictions_json(predictions_for(sc))}}, sc.seed).dump(2) +
                             "\n",
                         out);
    });

    // escape
    auto* esc = app.add_subcommand("escape", "samples of W, the rescaled count of first hits of a lower level");
    double e_rho = 4.0, e_y = 8.0;
    std::size_t e_n = 1000, e_max = 10'000'000;
    std::string e_csv, e_json;
    esc->add_option("--rho", e_rho)->capture_default_str();
    esc->add_option("--y", e_y, "depth of the absorbing level")->capture_default_str();
    esc->add_option("--samples", e_n)->capture_default_str();
    esc->add_option("--max-particles", e_max)->capture_default_str();
    esc->add_option("--csv", e_csv, "per-sample CSV (default: stdout when --json is absent)");
    esc->add_option("--json", e_json, "JSON summary path");
    add_common(esc, true);
    esc->callback([&] {
        const auto w = bbm::sample_W(e_rho, e_y, e_n, common.seed, e_max, common.threads);
        json cfg = {{"rho", e_rho}, {"y", e_y}, {"samples", e_n}, {"max_particles", e_max}, {"seed", common.seed}};
        if (!e_csv.empty() || e_json.empty()) {
            std::string s = detail::provenance("escape", cfg) + "sample,W\n";
            std::size_t j = 0, c = 0;
            for (std::size_t i = 0; i < e_n; ++i) {
                if (c < w.censored_replicas.size() && w.censored_replicas[c] == i) {
                    s += std::to_string(i) + ",censored\n";
                    ++c;
                } else {
                    s += std::to_string(i) + "," + detail::num(w.values[j++]) + "\n";
                }
            }
            detail::emit(e_csv, s, out);
        }
        if (!e_json.empty()) {
            const Estimate m = stats::mean_se(w.values);
            json res = {{"n", w.values.size()},
                        {"censored", w.censored_replicas.size()},
                        {"censored_replicas", w.censored_replicas},
                        {"mean", m.value},
                        {"se", m.se},
                        {"alpha_theory", regimes::alpha_of_rho(e_rho)}};
            try {
                res["hill"] = detail::tail_json(stats::hill_default(w.values));
            } catch (const DomainError& e) {
                res["hill"] = nullptr;
                res["hill_error"] = e.what();
            }
            detail::emit(e_json, detail::envelope(cfg, res, common.seed).dump(2) + "\n", out);
        }
    });

    // csbp
    auto* cs = app.add_subcommand("csbp", "Laplace flow of a stable CSBP");
    CsbpParams cp{0.0, 1.0, 1.63};
    double c_x0 = 1.0, c_lambda = 1.0, c_t = 1.0;
    cs->add_option("--a", cp.a)->capture_default_str();
    cs->add_option("--b", cp.b)->capture_default_str();
    cs->add_option("--alpha", cp.alpha)->capture_default_str();
    cs->add_option("--x0", c_x0)->capture_default_str();
    cs->add_option("--lambda", c_lambda)->capture_default_str();
    cs->add_option("--t", c_t)->capture_default_str();
    add_common(cs, false);
    auto* fit = cs->add_subcommand("fit", "fit b to rows of (lambda, empirical Laplace value, se)");
    fit->fallthrough();
    std::string f_input;
    bool f_json = false;
    fit->add_option("--input", f_input, "CSV with columns lambda,value,se")->required();
    fit->add_flag("--json", f_json);
    cs->callback([&] {
        if (fit->parsed()) {
            std::vector<csbp::LaplacePoint> pts;
            const auto rows = detail::csv_rows(detail::read_file(f_input));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() < 3) throw Error("fit input needs lambda,value,se columns");
                if (i == 0 && rows[i][0] == "lambda") continue;
                pts.push_back({detail::to_double(rows[i][0]), detail::to_double(rows[i][1]), detail::to_double(rows[i][2])});
            }
            if (pts.empty()) throw DomainError("fit input has no rows");
            const auto f = csbp::fit_b(pts, c_x0, c_t, cp.alpha, cp.a);
            json res = {{"b", f.b}, {"chi2", f.chi2}, {"max_abs_z", f.max_abs_z}, {"fitted", f.fitted}, {"z", f.z}};
            if (f_json) {
                json cfg = {{"input", f_input}, {"a", cp.a}, {"alpha", cp.alpha}, {"x0", c_x0}, {"t", c_t}};
                out << detail::envelope(cfg, res, std::nullopt).dump(2) << "\n";
            } else {
                out << "b          " << detail::num(f.b) << "\nchi2       " << detail::num(f.chi2) << "\nmax_abs_z  "
                    << detail::num(f.max_abs_z) << "\n";
            }
            return;
        }
        csbp::check(cp);
        const double u = csbp::u_flow(cp, c_lambda, c_t);
        out << "u_t      " << detail::num(u) << "\nlaplace  " << detail::num(csbp::laplace(cp, c_x0, c_lambda, c_t)) << "\n";
    });

    // verify
    auto* ver = app.add_subcommand("verify", "score simulated means against analytic predictions");
    std::string v_csv, v_pred, v_md, v_json;
    ver->add_option("--csv", v_csv, "simulation CSV")->required();
    ver->add_option("--analytic", v_pred, "predictions JSON")->required();
    ver->add_option("--markdown", v_md, "scorecard markdown path (default: stdout)");
    ver->add_option("--json", v_json, "scorecard JSON path");
    add_common(ver, false);
    ver->callback([&] {
        const auto reps = detail::read_sim_csv(detail::read_file(v_csv));
        const auto preds = parse_predictions(json::parse(detail::read_file(v_pred)));
        const Scorecard card = stats::moment_scorecard(stats::summarize(reps), preds);
        detail::emit(v_md, scorecard_markdown(card), out);
        if (!v_json.empty()) {
            json rows = json::array();
            for (const auto& r : card.rows)
                rows.push_back({{"observable", r.observable}, {"t", r.t},
                                {"kind", r.kind == PredictionKind::Equality ? "equality" : "upper_bound"},
                                {"empirical", r.empirical}, {"se", r.se}, {"predicted", r.predicted}, {"z", r.z},
                                {"pass", r.pass}});
            json cfg = {{"csv", v_csv}, {"analytic", v_pred}};
            json res = {{"rows", rows}, {"all_pass", card.all_pass}, {"policy", card.policy}};
            detail::emit(v_json, detail::envelope(cfg, res, std::nullopt).dump(2) + "\n", out);
        }
        if (!card.all_pass) verdict = ExitCode::verification_failure;
    });

    try {
        const auto expanded = detail::expand_config(args);
        std::vector<std::string> rev(expanded.rbegin(), expanded.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return ExitCode::ok;
        }
        err << "error: " << e.what() << "\n";
        return ExitCode::usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return ExitCode::domain_failure;
    }
    return verdict;
}

}  // namespace cli
}  // namespace frontier
