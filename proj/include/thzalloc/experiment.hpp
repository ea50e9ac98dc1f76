#pragma once

// Experiment configuration (flat INI-style text), sweep execution over
// scenario/solver parameters, and CSV/JSON emission.

#include <cstdio>
#include <fstream>
#include <sstream>

#include "thzalloc/baselines.hpp"
#include "thzalloc/solver.hpp"

namespace thz {

/// Bracketed sections of `key = value` lines; '#' and ';' start comments.
struct IniFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    static IniFile parse(std::istream& in) {
        IniFile ini;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            size_t hash = line.find_first_of("#;");
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw InvariantError("config line " + std::to_string(lineno) +
                                         ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                ini.sections[section];
                continue;
            }
            size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw InvariantError("config line " + std::to_string(lineno) +
                                     ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key.empty())
                throw InvariantError("config line " + std::to_string(lineno) + ": empty key");
            ini.sections[section][key] = val;
        }
        return ini;
    }

    static IniFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvariantError("cannot open config file: " + path);
        return parse(in);
    }

    bool has(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        return s != sections.end() && s->second.count(key) > 0;
    }
    std::string get(const std::string& sec, const std::string& key,
                    const std::string& fallback) const {
        auto s = sections.find(sec);
        if (s == sections.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }
    double get_num(const std::string& sec, const std::string& key, double fallback) const {
        std::string v = get(sec, key, "");
        if (v.empty()) return fallback;
        size_t pos = 0;
        double out = std::stod(v, &pos);
        if (trim(v.substr(pos)) != "")
            throw InvariantError("config " + sec + "." + key + ": not a number: " + v);
        return out;
    }
    std::vector<std::string> get_list(const std::string& sec, const std::string& key) const {
        std::vector<std::string> out;
        std::string v = get(sec, key, "");
        std::string token;
        for (char c : v + ",") {
            if (c == ',' || c == ' ' || c == '\t') {
                if (!token.empty()) out.push_back(token);
                token.clear();
            } else
                token += c;
        }
        return out;
    }
};

enum class Strategy { ESB, ASB, DAMC, EQ };

inline std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::ESB: return "ESB";
        case Strategy::ASB: return "ASB";
        case Strategy::DAMC: return "DAMC";
        default: return "EQ";
    }
}

struct ExperimentConfig {
    ScenarioConfig scenario;
    BlockerModel blockers;

    double f_ref = 1.075e12, b_tot = 50e9, b_guard = 0.75e9, b_max = 4.5e9, delta = 1e3;
    double xi = 5e9, omega = 0.5e9, varsigma = 1e-3;

    AbsorptionFit fit{};
    int mc_order = 2, ap_cap = 3;
    double phi = 0.5, n0_dbm_hz = -174.0, gain_ap_dbi = 25.0, gain_user_dbi = 15.0;
    double l_thr = 1e-13, r_thr = 2e9, p_max_dbm = 3.2;
    double lemma_distance = 30.0;
    DamcOrientation damc_orientation = DamcOrientation::CenterBandsToLongLinks;

    SolverConfig solver;
    std::string sweep_variable;  // empty = single run at baseline
    std::vector<double> sweep_values;
    std::vector<uint64_t> seeds{1};
    std::vector<Strategy> strategies{Strategy::ESB};
    bool emit_timings = true;

    void validate() const {
        if (seeds.empty()) throw InvariantError("ExperimentConfig: seeds must be nonempty");
        if (strategies.empty())
            throw InvariantError("ExperimentConfig: strategies must be nonempty");
        if (!sweep_variable.empty()) {
            static const std::vector<std::string> ok = {"p_max",    "mc_order", "b_max",
                                                        "b_tot",    "lambda_b", "f_ref"};
            if (std::find(ok.begin(), ok.end(), sweep_variable) == ok.end())
                throw InvariantError("ExperimentConfig: unknown sweep variable " + sweep_variable);
            if (sweep_values.empty())
                throw InvariantError("ExperimentConfig: sweep values must be nonempty");
        }
        solver.validate();
    }
};

/// Default fit constants of the rising-slope region around 1.05 THz.
inline AbsorptionFit default_pacsr_fit() {
    AbsorptionFit fit;
    fit.sigma1 = -90.996;
    fit.sigma2 = 8.326e-11;
    fit.sigma3 = 0.0452;
    fit.f_lo = 1.025e12;
    fit.f_hi = 1.075e12;
    return fit;
}

inline ExperimentConfig load_experiment_config(const IniFile& ini) {
    ExperimentConfig cfg;
    cfg.scenario.room_w = ini.get_num("scenario", "room_w", 20.0);
    cfg.scenario.room_d = ini.get_num("scenario", "room_d", 20.0);
    cfg.scenario.num_users = static_cast<int>(ini.get_num("scenario", "num_users", 6));
    cfg.scenario.num_aps = static_cast<int>(ini.get_num("scenario", "num_aps", 4));
    cfg.scenario.h_ap = ini.get_num("scenario", "h_ap", 3.0);
    cfg.scenario.h_user = ini.get_num("scenario", "h_user", 1.3);
    cfg.blockers.lambda = ini.get_num("scenario", "lambda_b", 0.2);
    cfg.blockers.radius = ini.get_num("scenario", "r_blocker", 0.3);
    cfg.blockers.height = ini.get_num("scenario", "h_blocker", 1.7);
    cfg.blockers.speed = ini.get_num("scenario", "v_blocker", 1.0);

    cfg.f_ref = ini.get_num("spectrum", "f_ref", cfg.f_ref);
    cfg.b_tot = ini.get_num("spectrum", "b_tot", cfg.b_tot);
    cfg.b_guard = ini.get_num("spectrum", "b_guard", cfg.b_guard);
    cfg.b_max = ini.get_num("spectrum", "b_max", cfg.b_max);
    cfg.delta = ini.get_num("spectrum", "delta", cfg.delta);
    cfg.xi = ini.get_num("spectrum", "xi", cfg.xi);
    cfg.omega = ini.get_num("spectrum", "omega", cfg.omega);
    cfg.varsigma = ini.get_num("spectrum", "varsigma", cfg.varsigma);

    cfg.fit = default_pacsr_fit();
    if (ini.has("absorption", "csv")) {
        auto table = AbsorptionTable::load_csv(ini.get("absorption", "csv", ""));
        double lo = ini.get_num("absorption", "f_lo", cfg.fit.f_lo);
        double hi = ini.get_num("absorption", "f_hi", cfg.fit.f_hi);
        bool reflect = ini.get("absorption", "reflect", "off") == "on";
        cfg.fit = fit_exponential(table, lo, hi, reflect);
    } else {
        cfg.fit.sigma1 = ini.get_num("absorption", "sigma1", cfg.fit.sigma1);
        cfg.fit.sigma2 = ini.get_num("absorption", "sigma2", cfg.fit.sigma2);
        cfg.fit.sigma3 = ini.get_num("absorption", "sigma3", cfg.fit.sigma3);
        cfg.fit.f_lo = ini.get_num("absorption", "f_lo", cfg.fit.f_lo);
        cfg.fit.f_hi = ini.get_num("absorption", "f_hi", cfg.fit.f_hi);
    }

    cfg.mc_order = static_cast<int>(ini.get_num("solver", "mc_order", 2));
    cfg.ap_cap = static_cast<int>(ini.get_num("solver", "ap_cap", 3));
    cfg.phi = ini.get_num("solver", "phi", 0.5);
    cfg.n0_dbm_hz = ini.get_num("solver", "n0_dbm_hz", -174.0);
    cfg.gain_ap_dbi = ini.get_num("solver", "gain_ap_dbi", 25.0);
    cfg.gain_user_dbi = ini.get_num("solver", "gain_user_dbi", 15.0);
    cfg.l_thr = ini.get_num("solver", "l_thr", 1e-13);
    cfg.r_thr = ini.get_num("solver", "r_thr", 2e9);
    cfg.p_max_dbm = ini.get_num("solver", "p_max_dbm", 3.2);
    cfg.lemma_distance = ini.get_num("solver", "lemma_distance", 30.0);
    cfg.solver.lambda = ini.get_num("solver", "lambda", 200.0);
    cfg.solver.epsilon = ini.get_num("solver", "epsilon", 1e-6);
    cfg.solver.kkt_tol = ini.get_num("solver", "kkt_tol", 1e-6);
    cfg.solver.max_outer_iters = static_cast<int>(ini.get_num("solver", "max_outer_iters", 100));
    cfg.solver.max_inner_iters = static_cast<int>(ini.get_num("solver", "max_inner_iters", 400));
    std::string orient = ini.get("solver", "damc_orientation", "center");
    if (orient == "center")
        cfg.damc_orientation = DamcOrientation::CenterBandsToLongLinks;
    else if (orient == "edge")
        cfg.damc_orientation = DamcOrientation::EdgeBandsToLongLinks;
    else
        throw InvariantError("config solver.damc_orientation: expected center or edge");

    cfg.sweep_variable = ini.get("sweep", "variable", "");
    for (const auto& v : ini.get_list("sweep", "values")) cfg.sweep_values.push_back(std::stod(v));
    if (ini.has("sweep", "seeds")) {
        cfg.seeds.clear();
        for (const auto& v : ini.get_list("sweep", "seeds"))
            cfg.seeds.push_back(static_cast<uint64_t>(std::stoull(v)));
    }
    if (ini.has("sweep", "strategies")) {
        cfg.strategies.clear();
        for (const auto& v : ini.get_list("sweep", "strategies")) {
            if (v == "ESB") cfg.strategies.push_back(Strategy::ESB);
            else if (v == "ASB") cfg.strategies.push_back(Strategy::ASB);
            else if (v == "DAMC") cfg.strategies.push_back(Strategy::DAMC);
            else if (v == "EQ") cfg.strategies.push_back(Strategy::EQ);
            else throw InvariantError("config sweep.strategies: unknown strategy " + v);
        }
    }
    cfg.emit_timings = ini.get("output", "timings", "on") != "off";
    cfg.validate();
    return cfg;
}

/// Builds the full problem spec for one (sweep value, seed) cell. For the
/// mc_order sweep the user count is adjusted to hold S = I*N fixed.
inline ProblemSpec instantiate(const ExperimentConfig& cfg, const std::string& var, double value,
                               uint64_t seed) {
    ScenarioConfig sc = cfg.scenario;
    BlockerModel blk = cfg.blockers;
    ProblemSpec spec;
    spec.mode = Mode::ESB;
    spec.fit = cfg.fit;
    spec.f_ref = cfg.f_ref;
    spec.b_tot = cfg.b_tot;
    spec.b_guard = cfg.b_guard;
    spec.b_max = cfg.b_max;
    spec.delta = cfg.delta;
    spec.mc_order = cfg.mc_order;
    spec.ap_cap = cfg.ap_cap;
    spec.phi = cfg.phi;
    spec.n0 = dbm_to_watts(cfg.n0_dbm_hz);
    spec.gain_ap = db_to_linear(cfg.gain_ap_dbi);
    spec.gain_user = db_to_linear(cfg.gain_user_dbi);
    spec.l_thr = cfg.l_thr;
    spec.r_thr = cfg.r_thr;
    spec.p_max = dbm_to_watts(cfg.p_max_dbm);
    spec.penalty_lambda = cfg.solver.lambda;
    spec.epsilon = cfg.solver.epsilon;
    spec.lemma_distance = cfg.lemma_distance;

    if (var == "p_max") spec.p_max = dbm_to_watts(value);
    else if (var == "b_max") spec.b_max = value;
    else if (var == "b_tot") spec.b_tot = value;
    else if (var == "f_ref") spec.f_ref = value;
    else if (var == "lambda_b") blk.lambda = value;
    else if (var == "mc_order") {
        int n = static_cast<int>(value);
        int s_fixed = cfg.scenario.num_users * cfg.mc_order;
        if (n < 1 || s_fixed % n != 0)
            throw InvariantError("mc_order sweep: N must divide the fixed sub-band count");
        spec.mc_order = n;
        sc.num_users = s_fixed / n;
    } else if (!var.empty())
        throw InvariantError("unknown sweep variable " + var);

    sc.seed = seed;
    auto dep = standard_deployment(sc);
    spec.links = build_links(dep, blk);
    spec.sub = Substitution::uniform(spec.num_subbands(), cfg.xi, cfg.omega, cfg.varsigma);
    spec.validate();
    return spec;
}

struct RunRow {
    std::string sweep_var;
    double sweep_value = 0.0;
    uint64_t seed = 0;
    std::string strategy;
    double objective_bps = 0.0;
    double aggregate_bps = 0.0;
    double min_user_bps = 0.0;
    double spectral_eff = 0.0;
    double penalty_residual = 0.0;
    bool converged = false;
    double wall_ms = 0.0;
    std::string status = "ok";
    nlohmann::json report;
};

namespace detail {

inline SolveReport solve_fixed_assignment(const ProblemSpec& spec, const SolverConfig& scfg,
                                          AllocationState st) {
    auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    auto sub = build_subproblem(spec, st, FixedBlock::FixAssignment);
    if (!sub.feasible) {
        rep.infeasible = true;
        rep.message = sub.infeasibility;
        return rep;
    }
    auto sol = solve_convex(sub, scfg);
    if (!sol.converged) {
        rep.infeasible = true;
        rep.message = sol.message;
        return rep;
    }
    apply_power_block(sub, sol.v, spec, st);
    rep.state = st;
    rep.per_user_bps = user_throughput(st, spec);
    rep.objective = *std::min_element(rep.per_user_bps.begin(), rep.per_user_bps.end());
    rep.relaxed_objective = rep.objective;
    rep.outer_iters = 1;
    rep.feasibility_residuals = normalized_residuals(st, spec);
    rep.converged = max_residual(rep.feasibility_residuals) <= scfg.kkt_tol;
    rep.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace detail

/// Runs one strategy on one instantiated spec.
inline SolveReport run_strategy(const ProblemSpec& spec_esb, Strategy strat,
                                const ExperimentConfig& cfg) {
    switch (strat) {
        case Strategy::ESB:
            return solve_esb(spec_esb, cfg.solver);
        case Strategy::ASB: {
            ProblemSpec spec = spec_esb;
            spec.mode = spec.fit.sigma2 >= 0.0 ? Mode::ASB_PACSR : Mode::ASB_NACSR;
            return solve_asb(spec, cfg.solver);
        }
        case Strategy::DAMC: {
            auto plan = esb_plan(spec_esb.f_ref, spec_esb.b_tot, spec_esb.b_guard,
                                 spec_esb.num_subbands());
            auto st = damc_assign(spec_esb.links, plan, spec_esb.mc_order, spec_esb.ap_cap,
                                  cfg.damc_orientation);
            return detail::solve_fixed_assignment(spec_esb, cfg.solver, st);
        }
        default: {  // EQ: fixed equal powers, no optimization
            auto t0 = std::chrono::steady_clock::now();
            SolveReport rep;
            auto st = equal_power_equal_band(spec_esb, cfg.damc_orientation);
            rep.state = st;
            rep.per_user_bps = user_throughput(st, spec_esb);
            rep.objective = *std::min_element(rep.per_user_bps.begin(), rep.per_user_bps.end());
            rep.relaxed_objective = rep.objective;
            rep.outer_iters = 1;
            rep.feasibility_residuals = normalized_residuals(st, spec_esb);
            rep.converged = max_residual(rep.feasibility_residuals) <= cfg.solver.kkt_tol;
            if (!rep.converged) rep.message = "fixed equal-power point violates a threshold";
            rep.wall_time_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count();
            return rep;
        }
    }
}

inline std::vector<RunRow> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<double> values = cfg.sweep_values.empty() ? std::vector<double>{0.0}
                                                          : cfg.sweep_values;
    std::vector<RunRow> rows;
    for (double value : values)
        for (uint64_t seed : cfg.seeds) {
            ProblemSpec spec;
            bool spec_ok = true;
            std::string spec_err;
            try {
                spec = instantiate(cfg, cfg.sweep_variable, value, seed);
            } catch (const std::exception& e) {
                spec_ok = false;
                spec_err = e.what();
            }
            for (Strategy strat : cfg.strategies) {
                RunRow row;
                row.sweep_var = cfg.sweep_variable.empty() ? "none" : cfg.sweep_variable;
                row.sweep_value = value;
                row.seed = seed;
                row.strategy = strategy_name(strat);
                if (!spec_ok) {
                    row.status = "infeasible";
                    row.report = {{"message", spec_err}};
                    rows.push_back(row);
                    continue;
                }
                SolveReport rep;
                try {
                    rep = run_strategy(spec, strat, cfg);
                } catch (const std::exception& e) {
                    row.status = "infeasible";
                    row.report = {{"message", e.what()}};
                    rows.push_back(row);
                    continue;
                }
                if (rep.infeasible) {
                    row.status = "infeasible";
                } else {
                    row.objective_bps = rep.objective;
                    double agg = 0.0;
                    for (double r : rep.per_user_bps) agg += r;
                    row.aggregate_bps = agg;
                    row.min_user_bps = rep.objective;
                    row.spectral_eff = agg / spec.b_tot;
                    row.penalty_residual = rep.penalty_residual;
                    row.converged = rep.converged;
                    row.wall_ms = cfg.emit_timings ? rep.wall_time_ms : 0.0;
                    if (!rep.converged) row.status = "non-converged";
                }
                row.report = to_json(rep);
                if (!cfg.emit_timings) row.report["wall_ms"] = 0.0;
                rows.push_back(row);
            }
        }
    return rows;
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// CSV with the fixed column set; UTF-8, LF endings.
inline void emit_csv(const std::vector<RunRow>& rows, std::ostream& out) {
    out << "sweep_var,sweep_value,seed,strategy,objective_bps,aggregate_bps,min_user_bps,"
           "spectral_eff_bps_per_hz,penalty_residual,converged,wall_ms,status\n";
    for (const auto& r : rows) {
        out << r.sweep_var << ',' << format_number(r.sweep_value) << ',' << r.seed << ','
            << r.strategy << ',' << format_number(r.objective_bps) << ','
            << format_number(r.aggregate_bps) << ',' << format_number(r.min_user_bps) << ','
            << format_number(r.spectral_eff) << ',' << format_number(r.penalty_residual) << ','
            << (r.converged ? "true" : "false") << ',' << format_number(r.wall_ms) << ','
            << r.status << '\n';
    }
}

/// JSON array mirroring the per-run solve reports.
inline nlohmann::json emit_json(const std::vector<RunRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j;
        j["sweep_var"] = r.sweep_var;
        j["sweep_value"] = r.sweep_value;
        j["seed"] = r.seed;
        j["strategy"] = r.strategy;
        j["status"] = r.status;
        j["report"] = r.report;
        arr.push_back(j);
    }
    return arr;
}

}  // namespace thz
