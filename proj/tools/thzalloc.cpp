// Command-line front end: single solves, experiment sweeps, blockage-model
// validation, absorption-coefficient fitting, and the brute-force oracle.
//
// Exit codes: 0 ok, 2 config error, 3 infeasible, 4 solver non-convergence.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "thzalloc/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNonConverged = 4;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw thz::InvariantError("cannot write " + path);
    out << text;
}

int run_solve(const std::string& config_path, const std::string& out_path, bool asb) {
    thz::ExperimentConfig cfg;
    thz::ProblemSpec spec;
    try {
        cfg = thz::load_experiment_config(thz::IniFile::parse_file(config_path));
        spec = thz::instantiate(cfg, "", 0.0, cfg.seeds.front());
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    thz::SolveReport rep;
    try {
        if (asb) {
            spec.mode = spec.fit.sigma2 >= 0.0 ? thz::Mode::ASB_PACSR : thz::Mode::ASB_NACSR;
            rep = thz::solve_asb(spec, cfg.solver);
        } else {
            rep = thz::solve_esb(spec, cfg.solver);
        }
    } catch (const std::exception& e) {
        std::cerr << "solve error: " << e.what() << "\n";
        return kExitInfeasible;
    }
    write_text(out_path, thz::to_json(rep).dump(2) + "\n");
    if (rep.infeasible) return kExitInfeasible;
    return rep.converged ? kExitOk : kExitNonConverged;
}

int run_sweep_cmd(const std::string& config_path, std::string out_dir) {
    thz::ExperimentConfig cfg;
    try {
        cfg = thz::load_experiment_config(thz::IniFile::parse_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (const char* env = std::getenv("THZALLOC_OUT_DIR"); env && *env) out_dir = env;
    auto rows = thz::run_sweep(cfg);
    std::ostringstream csv;
    thz::emit_csv(rows, csv);
    if (out_dir.empty() || out_dir == "-") {
        std::cout << csv.str();
    } else {
        std::filesystem::create_directories(out_dir);
        write_text(out_dir + "/results.csv", csv.str());
        write_text(out_dir + "/runs.json", thz::emit_json(rows).dump(2) + "\n");
    }
    bool any_ok = false, any_non_conv = false;
    for (const auto& r : rows) {
        if (r.status == "ok") any_ok = true;
        if (r.status == "non-converged") any_non_conv = true;
    }
    if (!any_ok && !any_non_conv) return kExitInfeasible;
    if (!any_ok) return kExitNonConverged;
    return kExitOk;
}

int run_validate_blockage(const std::string& config_path, double r, double horizon,
                          double target_hw, uint64_t seed, const std::string& out_path) {
    thz::ExperimentConfig cfg;
    try {
        if (!config_path.empty())
            cfg = thz::load_experiment_config(thz::IniFile::parse_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    // Single AP/user pair at the requested horizontal separation, centered.
    thz::Deployment dep;
    dep.room_w = cfg.scenario.room_w;
    dep.room_d = cfg.scenario.room_d;
    dep.h_ap = cfg.scenario.h_ap;
    dep.h_user = cfg.scenario.h_user;
    double cx = dep.room_w / 2.0, cy = dep.room_d / 2.0;
    dep.user_positions = {{cx - r / 2.0, cy}};
    dep.ap_positions = {{cx + r / 2.0, cy}};
    auto blk = cfg.blockers;
    double closed = thz::non_blockage_probability(dep, blk, r);
    auto est = thz::simulate_blockage(dep, blk, 0, 0, horizon, 0.0, seed, target_hw);
    nlohmann::json j;
    j["r_m"] = r;
    j["closed_form"] = closed;
    j["simulated"] = est.fraction;
    j["half_width"] = est.half_width;
    j["replicas"] = est.replicas;
    j["abs_error"] = std::abs(est.fraction - closed);
    j["within_3hw"] = std::abs(est.fraction - closed) <= 3.0 * est.half_width;
    write_text(out_path, j.dump(2) + "\n");
    return kExitOk;
}

int run_fit_absorption(const std::string& csv_path, double f_lo, double f_hi, bool reflect,
                       bool regions, double region_threshold, const std::string& out_path) {
    nlohmann::json j;
    try {
        auto table = thz::AbsorptionTable::load_csv(csv_path);
        if (f_lo <= 0.0) f_lo = table.frequencies().front();
        if (f_hi <= 0.0) f_hi = table.frequencies().back();
        auto fit = thz::fit_exponential(table, f_lo, f_hi, reflect);
        j["sigma1"] = fit.sigma1;
        j["sigma2"] = fit.sigma2;
        j["sigma3"] = fit.sigma3;
        j["f_lo_hz"] = fit.f_lo;
        j["f_hi_hz"] = fit.f_hi;
        j["residual"] = fit.residual;
        j["degenerate"] = fit.degenerate;
        if (regions) {
            auto regs = thz::detect_regions(table, region_threshold);
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& rg : regs) {
                const char* kind = rg.kind == thz::RegionKind::PACSR   ? "PACSR"
                                   : rg.kind == thz::RegionKind::NACSR ? "NACSR"
                                   : rg.kind == thz::RegionKind::ACPR  ? "ACPR"
                                                                       : "TW";
                arr.push_back({{"kind", kind}, {"f_lo_hz", rg.f_lo}, {"f_hi_hz", rg.f_hi}});
            }
            j["regions"] = arr;
        }
    } catch (const std::exception& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitConfig;
    }
    write_text(out_path, j.dump(2) + "\n");
    return kExitOk;
}

int run_oracle(const std::string& config_path, int grid, long cap, int b_grid,
               const std::string& out_path) {
    thz::ExperimentConfig cfg;
    thz::ProblemSpec spec;
    try {
        cfg = thz::load_experiment_config(thz::IniFile::parse_file(config_path));
        spec = thz::instantiate(cfg, "", 0.0, cfg.seeds.front());
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    thz::OracleConfig ocfg;
    ocfg.power_grid_points = grid;
    ocfg.assignment_cap = cap;
    ocfg.bandwidth_grid_points = b_grid;
    auto res = thz::brute_force(spec, ocfg);
    nlohmann::json j;
    j["found"] = res.found;
    j["objective_bps"] = res.objective;
    j["assignments_enumerated"] = res.assignments_enumerated;
    if (!res.message.empty()) j["message"] = res.message;
    if (res.found) {
        j["x"] = thz::rle_encode(res.state.x);
        j["P_watts"] = res.state.p;
        j["B_hz"] = res.state.b;
    }
    write_text(out_path, j.dump(2) + "\n");
    return res.found ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-band THz spectrum-allocation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, out_dir = "-", csv_path;
    double r = 5.0, horizon = 200.0, target_hw = 0.008;
    uint64_t seed = 1;
    double f_lo = 0.0, f_hi = 0.0, region_threshold = 1.0;
    bool reflect = false, regions = false;
    int grid = 17, b_grid = 1;
    long cap = 200000;

    auto* s_esb = app.add_subcommand("solve-esb", "Equal sub-band solve");
    s_esb->add_option("--config", config_path, "experiment config file")->required();
    s_esb->add_option("--output", out_path, "report JSON path (default stdout)");

    auto* s_asb = app.add_subcommand("solve-asb", "Adaptive sub-band solve");
    s_asb->add_option("--config", config_path, "experiment config file")->required();
    s_asb->add_option("--output", out_path, "report JSON path (default stdout)");

    auto* s_sweep = app.add_subcommand("sweep", "Run an experiment sweep");
    s_sweep->add_option("--config", config_path, "experiment config file")->required();
    s_sweep->add_option("--out-dir", out_dir,
                        "output directory (THZALLOC_OUT_DIR overrides; default stdout CSV)");

    auto* s_blk = app.add_subcommand("validate-blockage",
                                     "Monte-Carlo check of the closed-form non-blockage model");
    s_blk->add_option("--config", config_path, "optional config for scenario constants");
    s_blk->add_option("--r", r, "horizontal link distance, m");
    s_blk->add_option("--horizon", horizon, "simulated seconds per replica");
    s_blk->add_option("--target-half-width", target_hw, "stop at this 95% CI half-width");
    s_blk->add_option("--seed", seed, "RNG seed");
    s_blk->add_option("--output", out_path, "JSON path (default stdout)");

    auto* s_fit = app.add_subcommand("fit-absorption",
                                     "Fit the three-constant absorption model to a CSV table");
    s_fit->add_option("--csv", csv_path, "CSV with header f_hz,k_per_m")->required();
    s_fit->add_option("--f-lo", f_lo, "fit window start, Hz (default table start)");
    s_fit->add_option("--f-hi", f_hi, "fit window end, Hz (default table end)");
    s_fit->add_flag("--reflect", reflect, "fit a falling-slope region by axis reflection");
    s_fit->add_flag("--regions", regions, "also report region classification");
    s_fit->add_option("--region-threshold", region_threshold, "K threshold for ACPR, 1/m");
    s_fit->add_option("--output", out_path, "JSON path (default stdout)");

    auto* s_oracle = app.add_subcommand("oracle", "Brute-force search on a toy instance");
    s_oracle->add_option("--config", config_path, "experiment config file")->required();
    s_oracle->add_option("--power-grid", grid, "log power grid points per link");
    s_oracle->add_option("--cap", cap, "max enumerated assignments");
    s_oracle->add_option("--bandwidth-grid", b_grid, "coarse bandwidth grid points");
    s_oracle->add_option("--output", out_path, "JSON path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (s_esb->parsed()) return run_solve(config_path, out_path, false);
        if (s_asb->parsed()) return run_solve(config_path, out_path, true);
        if (s_sweep->parsed()) return run_sweep_cmd(config_path, out_dir);
        if (s_blk->parsed())
            return run_validate_blockage(config_path, r, horizon, target_hw, seed, out_path);
        if (s_fit->parsed())
            return run_fit_absorption(csv_path, f_lo, f_hi, reflect, regions, region_threshold,
                                      out_path);
        if (s_oracle->parsed()) return run_oracle(config_path, grid, cap, b_grid, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
