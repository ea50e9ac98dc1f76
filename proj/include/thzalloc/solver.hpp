#pragma once

// Outer successive-convex-approximation loops for the equal-width (ESB) and
// adaptive-width (ASB) allocation problems. Each outer iteration alternates
// two convex blocks: an assignment LP with the linear penalty surrogate, and
// a smooth concave power/bandwidth program solved by an interior-point
// method. Relaxed assignments are rounded to binary by per-sub-band argmax
// with greedy repair, followed by a final power polish.

#include <chrono>
#include <nlohmann/json.hpp>

#include "thzalloc/baselines.hpp"
#include "thzalloc/detail/barrier.hpp"
#include "thzalloc/detail/simplex.hpp"
#include "thzalloc/model.hpp"

namespace thz {

struct SolverConfig {
    double kkt_tol = 1e-6;     // relative feasibility tolerance
    int max_inner_iters = 400; // per barrier stage
    int max_outer_iters = 100;
    double epsilon = 1e-6;     // penalty surrogate exit tolerance
    double lambda = 200.0;     // penalty factor

    void validate() const {
        if (kkt_tol <= 0.0 || max_inner_iters <= 0 || max_outer_iters <= 0 || epsilon <= 0.0 ||
            lambda < 0.0)
            throw InvariantError("SolverConfig: all fields must be positive");
    }
};

struct SolveReport {
    double objective = 0.0;  // min-user throughput, bit/s, of the final state
    AllocationState state;
    int outer_iters = 0;
    double penalty_residual = 0.0;  // sum x(1-x) of the relaxed solution
    std::map<std::string, double> feasibility_residuals;  // normalized, <= 0 feasible
    bool converged = false;
    double wall_time_ms = 0.0;

    bool infeasible = false;
    std::string message;
    double relaxed_objective = 0.0;  // bit/s before rounding
    double rounded_gap = 0.0;        // relaxed - rounded, bit/s
    int lemma_adjustments = 0;       // omegas shrunk to meet the concavity bound
    std::vector<double> per_user_bps;
};

/// Residuals scaled to dimensionless form so a single kkt_tol applies.
inline std::map<std::string, double> normalized_residuals(const AllocationState& st,
                                                          const ProblemSpec& spec) {
    auto raw = constraint_residuals(st, spec);
    std::map<std::string, double> out;
    for (auto& [k, v] : raw) {
        double scale = 1.0;
        if (k == "power_budget" || k == "power_box") scale = spec.p_max;
        else if (k == "rate_threshold") scale = spec.r_thr;
        else if (k == "gain_threshold") scale = spec.l_thr;
        else if (k == "band_box" || k == "band_budget") scale = spec.b_tot;
        out[k] = v / scale;
    }
    return out;
}

struct ConvexSolution {
    Eigen::VectorXd v;
    double objective = 0.0;  // c'v
    double residual = 0.0;   // optimality-gap proxy
    bool converged = false;
    std::string message;
};

/// Solves one convex block: LPs go to the simplex method, smooth programs to
/// the barrier method. Deterministic given identical inputs.
inline ConvexSolution solve_convex(const ConvexSubproblem& sub, const SolverConfig& cfg) {
    ConvexSolution sol;
    if (!sub.feasible) {
        sol.message = sub.infeasibility;
        return sol;
    }
    if (sub.kind == ConvexSubproblem::Kind::AssignmentLP) {
        auto res = detail::solve_lp(-sub.c, sub.a_eq, sub.b_eq, sub.a_in, sub.b_in, sub.lb, sub.ub);
        if (res.status == detail::LpResult::Status::Optimal) {
            sol.v = res.x;
            sol.objective = sub.c.dot(res.x);
            sol.residual = 0.0;
            sol.converged = true;
        } else if (res.status == detail::LpResult::Status::Infeasible) {
            sol.message = "assignment LP infeasible";
        } else {
            sol.message = "assignment LP did not terminate";
        }
        return sol;
    }
    detail::BarrierSolver barrier(sub);
    auto res = barrier.solve(1.0, 1e-9, 0.1, cfg.max_inner_iters);
    if (res.status == detail::BarrierResult::Status::Converged) {
        sol.v = res.v;
        sol.objective = res.objective;
        sol.residual = res.gap;
        sol.converged = true;
    } else if (res.status == detail::BarrierResult::Status::BadStart) {
        sol.message = "barrier start not strictly feasible";
    } else {
        sol.message = "barrier iteration cap reached";
    }
    return sol;
}

namespace detail {

// Probe powers shown to the assignment LP: an equal split of the per-user
// budget across its N assignments, capped at the per-link box. Using the
// split (rather than block-2 powers, which may exceed P_max/N on strong
// links) keeps every valid binary assignment feasible for the LP budget
// rows, so the penalty can always reach a vertex.
inline void fill_probe_powers(const ProblemSpec& spec, AllocationState& st) {
    int I = st.num_users, J = st.num_aps, S = st.num_subbands;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            double probe =
                std::min(spec.p_max, spec.p_max / (spec.mc_order * spec.links.p_nb_at(i, j)));
            for (int s = 0; s < S; ++s) st.p[st.idx(i, j, s)] = probe;
        }
}

// Per-sub-band argmax rounding with greedy repair of the assignment
// constraints: one link per sub-band, N sub-bands per user, at most one band
// per (user, AP) pair, at most M links per AP, and the path-gain admission
// threshold. Returns false when no repair is found.
inline bool round_assignment(const ProblemSpec& spec, const std::vector<double>& x_relaxed,
                             const std::vector<double>& gains, AllocationState& st,
                             std::string* why) {
    int I = st.num_users, J = st.num_aps, S = st.num_subbands;
    std::fill(st.x.begin(), st.x.end(), 0.0);
    std::vector<int> user_count(static_cast<size_t>(I), 0), ap_count(static_cast<size_t>(J), 0);
    std::vector<char> pair_used(static_cast<size_t>(I) * J, 0);

    auto admissible = [&](int i, int j, int s) {
        if (user_count[static_cast<size_t>(i)] >= spec.mc_order ||
            ap_count[static_cast<size_t>(j)] >= spec.ap_cap ||
            pair_used[static_cast<size_t>(i) * J + j])
            return false;
        double g = gains[st.idx(i, j, s)];
        if (g < spec.l_thr) return false;
        // the rate threshold must be reachable within the per-link power box
        return invert_link_rate(spec.r_thr, st.b[static_cast<size_t>(s)], g, spec) <=
               spec.p_max * 0.999;
    };
    auto options = [&](int s) {
        int n = 0;
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                if (admissible(i, j, s)) ++n;
        return n;
    };

    std::vector<int> order(static_cast<size_t>(S));
    for (int s = 0; s < S; ++s) order[static_cast<size_t>(s)] = s;
    // most-constrained sub-band first, index order on ties (deterministic)
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return options(a) < options(b); });

    // Depth-first search over candidate links per band, preferring high
    // relaxed weight; backtracks out of greedy dead-ends.
    long nodes = 0;
    const long node_cap = 200000;
    std::function<bool(int)> dfs = [&](int depth) -> bool {
        if (depth == S) {
            for (int i = 0; i < I; ++i)
                if (user_count[static_cast<size_t>(i)] != spec.mc_order) return false;
            return true;
        }
        if (++nodes > node_cap) return false;
        int s = order[static_cast<size_t>(depth)];
        // Prune: every user must still be able to reach N assignments.
        int deficit = 0;
        for (int i = 0; i < I; ++i) deficit += spec.mc_order - user_count[static_cast<size_t>(i)];
        if (deficit > S - depth) return false;
        struct Cand {
            double w;
            int i, j;
        };
        std::vector<Cand> cands;
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                if (admissible(i, j, s)) cands.push_back({x_relaxed[st.idx(i, j, s)], i, j});
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.w != b.w) return a.w > b.w;
            return std::tie(a.i, a.j) < std::tie(b.i, b.j);
        });
        for (const auto& c : cands) {
            st.x[st.idx(c.i, c.j, s)] = 1.0;
            ++user_count[static_cast<size_t>(c.i)];
            ++ap_count[static_cast<size_t>(c.j)];
            pair_used[static_cast<size_t>(c.i) * J + c.j] = 1;
            if (dfs(depth + 1)) return true;
            st.x[st.idx(c.i, c.j, s)] = 0.0;
            --user_count[static_cast<size_t>(c.i)];
            --ap_count[static_cast<size_t>(c.j)];
            pair_used[static_cast<size_t>(c.i) * J + c.j] = 0;
        }
        return false;
    };
    if (!dfs(0)) {
        if (why) *why = "no admissible binary assignment under the caps and thresholds";
        return false;
    }
    return true;
}

// Applies a solved power block back onto the state.
inline void apply_power_block(const ConvexSubproblem& sub, const Eigen::VectorXd& v,
                              const ProblemSpec& spec, AllocationState& st) {
    std::fill(st.p.begin(), st.p.end(), 0.0);
    for (size_t l = 0; l < sub.active.size(); ++l)
        st.p[sub.active[l]] = v(sub.p_offset + static_cast<int>(l)) * sub.p_scale;
    if (sub.z_offset >= 0) {
        for (int s = 0; s < st.num_subbands; ++s) {
            double z = v(sub.z_offset + s) * sub.z_scale[static_cast<size_t>(s)];
            st.b[static_cast<size_t>(s)] = b_from_z(spec.sub, s, z);
        }
    }
}

// Scales (B_s - delta) to land the bandwidth sum exactly on the budget while
// honoring B_s <= B_max; the residual after capping is spread over the
// uncapped entries.
inline void project_bandwidths(const ProblemSpec& spec, std::vector<double>& b) {
    int S = static_cast<int>(b.size());
    double target = spec.b_bar_tot();
    for (int pass = 0; pass < 50; ++pass) {
        double sum = 0.0;
        for (double v : b) sum += v;
        double gap = target - sum;
        if (std::abs(gap) < 1e-9) return;
        double room = 0.0;
        for (int s = 0; s < S; ++s) {
            double r = gap > 0.0 ? spec.b_max - b[static_cast<size_t>(s)]
                                 : b[static_cast<size_t>(s)] - spec.delta;
            room += std::max(r, 0.0);
        }
        if (room <= 0.0) return;
        for (int s = 0; s < S; ++s) {
            double r = gap > 0.0 ? spec.b_max - b[static_cast<size_t>(s)]
                                 : b[static_cast<size_t>(s)] - spec.delta;
            if (r <= 0.0) continue;
            b[static_cast<size_t>(s)] += gap * r / room;
            b[static_cast<size_t>(s)] =
                std::clamp(b[static_cast<size_t>(s)], spec.delta, spec.b_max);
        }
    }
}

}  // namespace detail

/// Shared SCA driver; `asb` switches the power block to (P, Z) variables.
inline SolveReport run_sca(const ProblemSpec& spec_in, const SolverConfig& cfg) {
    auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    ProblemSpec spec = spec_in;
    spec.penalty_lambda = cfg.lambda;
    spec.epsilon = cfg.epsilon;
    spec.validate();
    bool asb = spec.mode != Mode::ESB;
    SolveReport rep;

    if (asb) {
        spec.sub.validate();
        if (static_cast<int>(spec.sub.xi.size()) != spec.num_subbands())
            throw InvariantError("run_sca: substitution size != number of sub-bands");
        if (spec.mode == Mode::ASB_PACSR && spec.fit.sigma2 <= 0.0)
            throw InvariantError("run_sca: PACSR mode requires a rising-slope fit (sigma2 > 0)");
        if (spec.mode == Mode::ASB_NACSR && spec.fit.sigma2 >= 0.0)
            throw InvariantError("run_sca: NACSR mode requires a falling-slope fit (sigma2 < 0)");
        double d_max = spec.links.d_max();
        double bound = spec.fit.sigma2 > 0.0
                           ? omega_bar(spec.fit, spec.f_ref, spec.lemma_distance, d_max)
                           : 0.0;
        rep.lemma_adjustments = enforce_lemma_bound(spec.sub, bound);
    }

    int I = spec.links.num_users, J = spec.links.num_aps, S = spec.num_subbands();
    AllocationState state(I, J, S);
    double esb_width = spec.b_bar_tot() / S;
    double b_init = asb ? std::clamp(esb_width, spec.delta, spec.b_max) : esb_width;
    std::fill(state.b.begin(), state.b.end(), b_init);
    std::fill(state.x.begin(), state.x.end(), 0.5);

    auto finish_time = [&] {
        rep.wall_time_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();
    };
    auto fail = [&](const std::string& why) {
        rep.infeasible = true;
        rep.message = why;
        rep.converged = false;
        finish_time();
        return rep;
    };

    std::vector<double> x_anchor = state.x;
    double surrogate = std::numeric_limits<double>::infinity();
    double pen_prev = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
        rep.outer_iters = outer + 1;
        // Block 1: assignment LP at the current anchor.
        AllocationState lp_anchor = state;
        lp_anchor.x = x_anchor;
        detail::fill_probe_powers(spec, lp_anchor);
        auto lp_sub = build_subproblem(spec, lp_anchor, FixedBlock::FixPowerBandwidth);
        auto lp = solve_convex(lp_sub, cfg);
        if (!lp.converged) return fail("assignment block failed: " + lp.message);
        std::vector<double> x_new(state.x.size());
        for (size_t m = 0; m < x_new.size(); ++m)
            x_new[m] = std::clamp(lp.v(lp_sub.x_offset + static_cast<int>(m)), 0.0, 1.0);

        // Block 2: power (and bandwidth) program with the assignment fixed.
        state.x = x_new;
        auto pw_sub = build_subproblem(spec, state, FixedBlock::FixAssignment);
        if (!pw_sub.feasible) return fail("power block infeasible: " + pw_sub.infeasibility);
        auto pw = solve_convex(pw_sub, cfg);
        if (!pw.converged) return fail("power block failed: " + pw.message);
        detail::apply_power_block(pw_sub, pw.v, spec, state);

        double sur = penalty_surrogate(x_new, x_anchor, cfg.lambda);
        surrogate = sur;
        if (sur < cfg.epsilon) break;
        double pen = penalty_value(x_new, 1.0);
        x_anchor = x_new;
        if (pen > cfg.epsilon && pen_prev - pen < 1e-6 * std::max(1.0, pen)) {
            // The tangent penalty has a flat spot at x = 1/2, so symmetric
            // fractional points are fixed points of the alternation. Break
            // the tie by re-anchoring at the nearest binary assignment.
            AllocationState tmp = state;
            std::string why;
            auto g = link_gains(spec, state.b);
            if (detail::round_assignment(spec, state.x, g, tmp, &why)) x_anchor = tmp.x;
        }
        pen_prev = pen;
    }
    rep.penalty_residual = penalty_value(state.x, 1.0);
    rep.relaxed_objective = min_throughput(state, spec);
    bool penalty_ok = surrogate < cfg.epsilon || rep.penalty_residual < cfg.epsilon;

    // Round to a binary assignment and re-optimize powers (and Z) once more.
    AllocationState rounded = state;
    std::string why;
    auto gains = link_gains(spec, state.b);
    if (!detail::round_assignment(spec, state.x, gains, rounded, &why))
        return fail("rounding failed: " + why);
    auto polish_sub = build_subproblem(spec, rounded, FixedBlock::FixAssignment);
    if (!polish_sub.feasible) return fail("final polish infeasible: " + polish_sub.infeasibility);
    auto polish = solve_convex(polish_sub, cfg);
    if (!polish.converged) return fail("final polish failed: " + polish.message);
    detail::apply_power_block(polish_sub, polish.v, spec, rounded);

    if (asb) {
        // Close the (conservative) linearized-budget gap exactly, then
        // re-polish the powers at the fixed projected bandwidths.
        detail::project_bandwidths(spec, rounded.b);
        ProblemSpec fixed = spec;
        fixed.mode = Mode::ESB;
        auto final_sub = build_subproblem(fixed, rounded, FixedBlock::FixAssignment);
        if (!final_sub.feasible)
            return fail("post-projection polish infeasible: " + final_sub.infeasibility);
        auto fin = solve_convex(final_sub, cfg);
        if (!fin.converged) return fail("post-projection polish failed: " + fin.message);
        detail::apply_power_block(final_sub, fin.v, fixed, rounded);
    }

    rep.state = rounded;
    rep.per_user_bps = user_throughput(rounded, spec);
    rep.objective = *std::min_element(rep.per_user_bps.begin(), rep.per_user_bps.end());
    rep.rounded_gap = rep.relaxed_objective - rep.objective;
    rep.feasibility_residuals = normalized_residuals(rounded, spec);
    double max_res = max_residual(rep.feasibility_residuals);
    rep.converged = penalty_ok && max_res <= cfg.kkt_tol;
    if (!rep.converged && rep.message.empty())
        rep.message = penalty_ok ? "feasibility residual above tolerance"
                                 : "penalty did not reach epsilon";
    finish_time();
    return rep;
}

namespace detail {

/// Optimal powers for a fixed binary assignment at equal widths; used to seed
/// incumbents from combinatorial heuristics. Returns false when infeasible.
inline bool polish_fixed_assignment(const ProblemSpec& spec, const SolverConfig& cfg,
                                    AllocationState& st, SolveReport& rep) {
    auto sub = build_subproblem(spec, st, FixedBlock::FixAssignment);
    if (!sub.feasible) return false;
    auto sol = solve_convex(sub, cfg);
    if (!sol.converged) return false;
    apply_power_block(sub, sol.v, spec, st);
    rep = SolveReport{};
    rep.state = st;
    rep.per_user_bps = user_throughput(st, spec);
    rep.objective = *std::min_element(rep.per_user_bps.begin(), rep.per_user_bps.end());
    rep.relaxed_objective = rep.objective;
    rep.penalty_residual = 0.0;
    rep.feasibility_residuals = normalized_residuals(st, spec);
    rep.converged = max_residual(rep.feasibility_residuals) <= cfg.kkt_tol;
    rep.outer_iters = 1;
    return rep.converged;
}

/// Hill-climbing polish over sub-band pairings. At equal widths, exchanging
/// the sub-bands of two links changes only their center frequencies, so a
/// cheap rate re-evaluation under the current powers screens candidate swaps
/// before the full power re-optimization. This pulls weak SCA local optima up
/// toward better frequency pairings.
inline void improve_band_swaps(const ProblemSpec& spec, const SolverConfig& cfg,
                               SolveReport& rep) {
    if (rep.infeasible) return;
    const int S = spec.num_subbands();
    for (int pass = 0; pass < 4; ++pass) {
        bool improved = false;
        for (int s = 0; s < S; ++s) {
            for (int s2 = s + 1; s2 < S; ++s2) {
                AllocationState st = rep.state;
                for (int i = 0; i < st.num_users; ++i) {
                    for (int j = 0; j < st.num_aps; ++j) {
                        std::swap(st.x[st.idx(i, j, s)], st.x[st.idx(i, j, s2)]);
                        std::swap(st.p[st.idx(i, j, s)], st.p[st.idx(i, j, s2)]);
                    }
                }
                auto thr = user_throughput(st, spec);
                double proxy = *std::min_element(thr.begin(), thr.end());
                // Powers are tuned for the pre-swap pairing, so allow a
                // modest proxy shortfall before paying for the re-polish.
                if (proxy <= 0.95 * rep.objective) continue;
                SolveReport cand;
                if (!polish_fixed_assignment(spec, cfg, st, cand)) continue;
                if (cand.objective > rep.objective * (1.0 + 1e-9)) {
                    cand.message = rep.message;
                    cand.wall_time_ms = rep.wall_time_ms;
                    cand.outer_iters = rep.outer_iters;
                    cand.lemma_adjustments = rep.lemma_adjustments;
                    rep = cand;
                    improved = true;
                }
            }
        }
        if (!improved) break;
    }
}

}  // namespace detail

/// SCA loop for equal sub-band widths. A distance-aware heuristic assignment
/// with re-optimized powers serves as an incumbent so the returned allocation
/// never falls below it when the SCA lands in a weaker local optimum.
inline SolveReport solve_esb(const ProblemSpec& spec, const SolverConfig& cfg) {
    if (spec.mode != Mode::ESB) throw InvariantError("solve_esb: spec.mode must be ESB");
    SolveReport rep = run_sca(spec, cfg);
    auto plan = esb_plan(spec.f_ref, spec.b_tot, spec.b_guard, spec.num_subbands());
    for (auto orient :
         {DamcOrientation::CenterBandsToLongLinks, DamcOrientation::EdgeBandsToLongLinks}) {
        AllocationState st;
        try {
            st = damc_assign(spec.links, plan, spec.mc_order, spec.ap_cap, orient);
        } catch (const InvariantError&) {
            continue;
        }
        SolveReport cand;
        if (!detail::polish_fixed_assignment(spec, cfg, st, cand)) continue;
        if (rep.infeasible || cand.objective > rep.objective) {
            cand.message = rep.infeasible
                               ? "relaxation failed (" + rep.message + "); heuristic incumbent"
                               : "heuristic incumbent retained";
            cand.wall_time_ms = rep.wall_time_ms;
            rep = cand;
        }
    }
    detail::improve_band_swaps(spec, cfg, rep);
    return rep;
}

/// SCA loop for adaptive sub-band widths (Z-substituted bandwidths).
inline SolveReport solve_asb(const ProblemSpec& spec, const SolverConfig& cfg) {
    if (spec.mode == Mode::ESB) throw InvariantError("solve_asb: spec.mode must be an ASB mode");
    if (spec.num_subbands() * spec.delta > spec.b_bar_tot())
        throw InvariantError("solve_asb: S * delta exceeds the bandwidth budget");
    SolveReport rep = run_sca(spec, cfg);
    // The ESB widths are ASB-feasible whenever B_max >= the equal width, so
    // the equal-width solution serves as a fallback incumbent.
    double esb_width = spec.b_bar_tot() / spec.num_subbands();
    if (esb_width <= spec.b_max + 1e-6 && esb_width >= spec.delta) {
        ProblemSpec esb = spec;
        esb.mode = Mode::ESB;
        SolveReport base = solve_esb(esb, cfg);
        if (!base.infeasible && (rep.infeasible || base.objective > rep.objective)) {
            base.lemma_adjustments = rep.lemma_adjustments;
            base.message = rep.infeasible
                               ? "adaptive pass failed (" + rep.message + "); equal-width incumbent"
                               : "equal-width incumbent retained";
            return base;
        }
    }
    return rep;
}

struct ConcavityReport {
    double max_gain_curvature = 0.0;  // max relative d2(|alpha|^2)/dZ^2
    double max_rate_curvature = 0.0;  // max relative d2(R)/dZ^2
    double max_upper_dependence = 0.0;  // |FD second difference| for nu > s
    bool concave = false;
    int probes = 0;
};

/// Finite-difference curvature audit of the gain and rate expressions in the
/// Z variables at random feasible points. Relative curvature is
/// f'' Z^2 / max(|f|, tiny), dimensionless.
inline ConcavityReport check_concavity(const ProblemSpec& spec, int n_probes, uint64_t seed,
                                       double tol = 1e-6) {
    if (spec.mode == Mode::ESB) throw InvariantError("check_concavity: needs an ASB mode");
    spec.sub.validate();
    int S = spec.num_subbands();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    ConcavityReport out;
    out.probes = n_probes;
    double d_max = spec.links.d_max();

    auto gain_of = [&](const std::vector<double>& z, int s, double d) {
        std::vector<double> b(z.size());
        for (int k = 0; k < S; ++k) b[static_cast<size_t>(k)] = b_from_z(spec.sub, k, z[static_cast<size_t>(k)]);
        auto f = center_frequencies_from_bandwidths(spec, b);
        return gain_center(spec.fit, f[static_cast<size_t>(s)], d);
    };
    auto rate_of = [&](const std::vector<double>& z, int s, double d, double p) {
        std::vector<double> b(z.size());
        for (int k = 0; k < S; ++k) b[static_cast<size_t>(k)] = b_from_z(spec.sub, k, z[static_cast<size_t>(k)]);
        auto f = center_frequencies_from_bandwidths(spec, b);
        double g = gain_center(spec.fit, f[static_cast<size_t>(s)], d);
        return link_rate(b[static_cast<size_t>(s)], p, g, spec);
    };

    for (int probe = 0; probe < n_probes; ++probe) {
        std::vector<double> z(static_cast<size_t>(S));
        for (int s = 0; s < S; ++s) {
            double zl = z_min_bound(spec.sub, s, spec.delta);
            double zu = z_max_bound(spec.sub, s, spec.b_max);
            // sample bandwidth uniformly, away from the exact box edges
            double b = spec.delta + (spec.b_max - spec.delta) * (0.05 + 0.9 * U(rng));
            z[static_cast<size_t>(s)] = std::clamp(z_from_b(spec.sub, s, b), zl, zu);
        }
        double d = d_max * (0.1 + 0.9 * U(rng));
        double p = spec.p_max * (0.1 + 0.9 * U(rng));
        for (int s = 0; s < S; ++s)
            for (int nu = 0; nu < S; ++nu) {
                double z0 = z[static_cast<size_t>(nu)];
                double h = 1e-3 * z0;
                auto zp = z, zm = z;
                zp[static_cast<size_t>(nu)] = z0 + h;
                zm[static_cast<size_t>(nu)] = z0 - h;
                double g0 = gain_of(z, s, d), gp = gain_of(zp, s, d), gm = gain_of(zm, s, d);
                double r0 = rate_of(z, s, d, p), rp = rate_of(zp, s, d, p),
                       rm = rate_of(zm, s, d, p);
                if (nu > s) {
                    out.max_upper_dependence = std::max(
                        out.max_upper_dependence,
                        std::max(std::abs(gp - 2 * g0 + gm) / std::max(g0, 1e-300),
                                 std::abs(rp - 2 * r0 + rm) / std::max(r0, 1e-300)));
                    continue;
                }
                double cg = (gp - 2 * g0 + gm) / (h * h) * z0 * z0 / std::max(g0, 1e-300);
                double cr = (rp - 2 * r0 + rm) / (h * h) * z0 * z0 / std::max(r0, 1e-300);
                out.max_gain_curvature = std::max(out.max_gain_curvature, cg);
                out.max_rate_curvature = std::max(out.max_rate_curvature, cr);
            }
    }
    out.concave = out.max_gain_curvature <= tol && out.max_rate_curvature <= tol;
    return out;
}

/// Run-length encoding of the flattened assignment tensor: [[value, count]...].
inline nlohmann::json rle_encode(const std::vector<double>& x) {
    nlohmann::json runs = nlohmann::json::array();
    size_t n = 0;
    while (n < x.size()) {
        double v = x[n];
        size_t len = 1;
        while (n + len < x.size() && x[n + len] == v) ++len;
        runs.push_back({v, len});
        n += len;
    }
    return runs;
}

inline nlohmann::json to_json(const SolveReport& rep) {
    nlohmann::json j;
    j["objective_bps"] = rep.objective;
    j["per_user_bps"] = rep.per_user_bps;
    j["x"] = rle_encode(rep.state.x);
    j["P_watts"] = rep.state.p;
    j["B_hz"] = rep.state.b;
    j["iters"] = rep.outer_iters;
    j["residuals"] = rep.feasibility_residuals;
    j["converged"] = rep.converged;
    j["wall_ms"] = rep.wall_time_ms;
    j["penalty_residual"] = rep.penalty_residual;
    j["relaxed_objective_bps"] = rep.relaxed_objective;
    j["rounded_gap_bps"] = rep.rounded_gap;
    j["infeasible"] = rep.infeasible;
    j["lemma_adjustments"] = rep.lemma_adjustments;
    if (!rep.message.empty()) j["message"] = rep.message;
    return j;
}

}  // namespace thz
