// Acceptance suite: one PASS/FAIL line per shipping criterion, exit status 0
// only when all criteria hold. Invoked as `acceptance <source-dir>`.

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "thzalloc/experiment.hpp"

using namespace thz;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s: criterion %d (%s) — %s\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    if (!ok) ++g_failures;
}

ProblemSpec reference_spec(uint64_t seed) {
    ExperimentConfig cfg;
    cfg.fit = default_pacsr_fit();
    return instantiate(cfg, "", 0.0, seed);
}

double aggregate(const SolveReport& rep) {
    return std::accumulate(rep.per_user_bps.begin(), rep.per_user_bps.end(), 0.0);
}

bool binary(const std::vector<double>& x) {
    for (double v : x)
        if (std::abs(v) > 1e-9 && std::abs(v - 1.0) > 1e-9) return false;
    return true;
}

}  // namespace

int main(int, char**) {
    SolverConfig scfg;
    char buf[256];

    // 1. Equal sub-band layout: 12 bands of 3.4792 GHz tiling 50 GHz.
    {
        auto plan = esb_plan(1.075e12, 50e9, 0.75e9, 12);
        double width = plan.bandwidths.front();
        bool ok = std::abs(width - 3479166666.6666665) <= 1e-3;
        double used = (plan.num_subbands() - 1) * plan.b_guard;
        for (double b : plan.bandwidths) used += b;
        ok = ok && std::abs(used - 50e9) <= 1e-3;
        std::snprintf(buf, sizeof buf, "width = %.10g Hz", width);
        report(1, "equal sub-band width", ok, buf);
    }

    // 2. Closed-form non-blockage probability vs Monte-Carlo at r = 5 m.
    {
        Deployment dep;
        dep.user_positions = {{7.5, 10.0}};
        dep.ap_positions = {{12.5, 10.0}};
        BlockerModel blk;
        double closed = non_blockage_probability(dep, blk, 5.0);
        auto est = simulate_blockage(dep, blk, 0, 0, 200.0, 0.0, 7, 0.008);
        bool ok = est.half_width <= 0.01 &&
                  std::abs(est.fraction - closed) <= 3.0 * est.half_width;
        std::snprintf(buf, sizeof buf,
                      "closed %.6f, simulated %.6f, half-width %.6f, replicas %d", closed,
                      est.fraction, est.half_width, est.replicas);
        report(2, "blockage model validation", ok, buf);
    }

    // 3. SCA matches the brute-force oracle on a toy instance.
    {
        ExperimentConfig cfg;
        cfg.fit = default_pacsr_fit();
        cfg.scenario.num_users = 2;
        cfg.scenario.num_aps = 2;
        cfg.mc_order = 1;
        cfg.ap_cap = 2;
        cfg.b_tot = 7e9;
        auto spec = instantiate(cfg, "", 0.0, 1);
        OracleConfig ocfg;
        ocfg.power_grid_points = 33;
        auto oracle = brute_force(spec, ocfg);
        auto rep = solve_esb(spec, scfg);
        bool ok = oracle.found && !rep.infeasible &&
                  rep.objective >= 0.98 * oracle.objective &&
                  rep.objective <= oracle.objective * (1.0 + 1e-6);
        std::snprintf(buf, sizeof buf, "sca %.6g bps vs oracle %.6g bps (%ld assignments)",
                      rep.objective, oracle.objective, oracle.assignments_enumerated);
        report(3, "oracle equivalence on toy instance", ok, buf);
    }

    // 4. Adaptive widths dominate equal widths on five seeds.
    {
        bool ok = true;
        double mean_gain = 0.0;
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            auto spec = reference_spec(seed);
            auto esb = solve_esb(spec, scfg);
            ProblemSpec aspec = spec;
            aspec.mode = Mode::ASB_PACSR;
            auto asb = solve_asb(aspec, scfg);
            if (esb.infeasible || asb.infeasible || !asb.converged) ok = false;
            if (aggregate(asb) < aggregate(esb) - 1e-3) ok = false;
            if (asb.objective < esb.objective - 1e-3) ok = false;
            mean_gain += (asb.objective - esb.objective) / 5.0;
        }
        ok = ok && mean_gain > 0.0;
        std::snprintf(buf, sizeof buf, "mean min-throughput gain %.6g bps over 5 seeds",
                      mean_gain);
        report(4, "adaptive dominates equal widths", ok, buf);
    }

    // 5. The solver dominates the distance-aware heuristic on every seed.
    {
        bool ok = true;
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            auto spec = reference_spec(seed);
            auto esb = solve_esb(spec, scfg);
            ExperimentConfig cfg;
            cfg.fit = default_pacsr_fit();
            double best_damc = 0.0;
            for (auto orient : {DamcOrientation::CenterBandsToLongLinks,
                                DamcOrientation::EdgeBandsToLongLinks}) {
                cfg.damc_orientation = orient;
                auto damc = run_strategy(spec, Strategy::DAMC, cfg);
                if (!damc.infeasible) best_damc = std::max(best_damc, damc.objective);
            }
            if (esb.infeasible || esb.objective < best_damc - 1e-3) ok = false;
        }
        report(5, "solver dominates DAMC", ok, "checked both orientations on 5 seeds");
    }

    // 6. Concavity of the substituted program under the bound.
    {
        auto spec = reference_spec(1);
        spec.mode = Mode::ASB_PACSR;
        double bound = omega_bar(spec.fit, spec.f_ref, spec.lemma_distance, spec.links.d_max());
        spec.sub = Substitution::uniform(spec.num_subbands(), 5e9, 0.5 / bound, 1e-3);
        auto audit = check_concavity(spec, 100, 7);
        bool ok = audit.concave && audit.max_gain_curvature <= 1e-6 &&
                  audit.max_rate_curvature <= 1e-6 && audit.max_upper_dependence <= 1e-9;
        std::snprintf(buf, sizeof buf, "max relative curvature %.3g over %d probes",
                      std::max(audit.max_gain_curvature, audit.max_rate_curvature),
                      audit.probes);
        report(6, "concavity under the slope bound", ok, buf);
    }

    // 7. Penalty convergence and exact constraint satisfaction after rounding.
    {
        bool ok = true;
        double worst_pen = 0.0, worst_res = 0.0;
        for (uint64_t seed = 1; seed <= 3; ++seed) {
            auto rep = solve_esb(reference_spec(seed), scfg);
            if (rep.infeasible || !rep.converged || !binary(rep.state.x)) ok = false;
            worst_pen = std::max(worst_pen, rep.penalty_residual);
            for (const auto& [key, v] : rep.feasibility_residuals)
                worst_res = std::max(worst_res, v);
        }
        ok = ok && worst_pen < 1e-6 && worst_res <= 1e-6;
        std::snprintf(buf, sizeof buf, "worst penalty %.3g, worst normalized residual %.3g",
                      worst_pen, worst_res);
        report(7, "penalty convergence and feasibility", ok, buf);
    }

    // 8. Min-throughput grows with the transmit power budget.
    {
        ExperimentConfig cfg;
        cfg.fit = default_pacsr_fit();
        std::vector<double> powers = {2.2, 2.7, 3.2};
        bool ok = true;
        int sequences = 0;
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            double prev = -1.0;
            int points = 0;
            for (double dbm : powers) {
                auto spec = instantiate(cfg, "p_max", dbm, seed);
                auto rep = solve_esb(spec, scfg);
                if (rep.infeasible) continue;
                if (prev >= 0.0 && rep.objective < prev * (1.0 - 1e-6)) ok = false;
                prev = rep.objective;
                ++points;
            }
            if (points >= 2) ++sequences;
        }
        ok = ok && sequences >= 3;
        std::snprintf(buf, sizeof buf, "%d monotone power sequences across 5 seeds", sequences);
        report(8, "throughput trend in transmit power", ok, buf);
    }

    // 9. Adaptive solve pinned to the equal width reproduces the equal solve.
    {
        auto spec = reference_spec(1);
        auto esb = solve_esb(spec, scfg);
        ProblemSpec aspec = spec;
        aspec.mode = Mode::ASB_PACSR;
        aspec.b_max = spec.b_bar_tot() / spec.num_subbands();
        auto asb = solve_asb(aspec, scfg);
        bool ok = !esb.infeasible && !asb.infeasible &&
                  std::abs(asb.objective - esb.objective) <= 0.01 * esb.objective;
        std::snprintf(buf, sizeof buf, "pinned adaptive %.6g bps vs equal %.6g bps",
                      asb.objective, esb.objective);
        report(9, "pinned adaptive matches equal widths", ok, buf);
    }

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
