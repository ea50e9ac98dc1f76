#pragma once

// Benchmarks and verification oracles: distance-aware sub-band association
// (DAMC), an equal-power/equal-band baseline, and an exhaustive brute-force
// search for toy instances.

#include <algorithm>

#include "thzalloc/model.hpp"
#include "thzalloc/spectrum.hpp"

namespace thz {

struct OracleConfig {
    int power_grid_points = 17;   // logarithmic grid per link
    long assignment_cap = 200000; // refuse enumerations larger than this
    int bandwidth_grid_points = 1;  // >1 enables a coarse B grid (ASB oracle)

    void validate() const {
        if (power_grid_points < 2) throw InvariantError("OracleConfig: grid needs >= 2 points");
        if (assignment_cap < 1 || bandwidth_grid_points < 1)
            throw InvariantError("OracleConfig: cap and B grid must be positive");
    }
};

enum class DamcOrientation { CenterBandsToLongLinks, EdgeBandsToLongLinks };

namespace detail {

// N nearest APs per user under the per-AP cap: a global greedy sweep over
// (user, AP) pairs sorted by distance, then a least-loaded fallback pass.
inline std::vector<std::pair<int, int>> damc_association(const LinkTable& links, int mc_order,
                                                         int ap_cap) {
    int I = links.num_users, J = links.num_aps;
    if (static_cast<long>(I) * mc_order > static_cast<long>(J) * ap_cap)
        throw InvariantError("damc_association: AP capacity cannot host I*N links");
    struct Cand {
        double d;
        int i, j;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) cands.push_back({links.d_at(i, j), i, j});
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.d != b.d) return a.d < b.d;
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    std::vector<int> user_count(static_cast<size_t>(I), 0), ap_count(static_cast<size_t>(J), 0);
    std::vector<char> used(static_cast<size_t>(I) * J, 0);
    std::vector<std::pair<int, int>> assoc;
    for (const auto& c : cands) {
        if (user_count[static_cast<size_t>(c.i)] >= mc_order) continue;
        if (ap_count[static_cast<size_t>(c.j)] >= ap_cap) continue;
        if (used[static_cast<size_t>(c.i) * J + c.j]) continue;
        used[static_cast<size_t>(c.i) * J + c.j] = 1;
        ++user_count[static_cast<size_t>(c.i)];
        ++ap_count[static_cast<size_t>(c.j)];
        assoc.push_back({c.i, c.j});
    }
    // fallback for users the greedy sweep left short
    for (int i = 0; i < I; ++i)
        while (user_count[static_cast<size_t>(i)] < mc_order) {
            int best = -1;
            for (int j = 0; j < J; ++j) {
                if (used[static_cast<size_t>(i) * J + j]) continue;
                if (ap_count[static_cast<size_t>(j)] >= ap_cap) continue;
                if (best < 0 || ap_count[static_cast<size_t>(j)] < ap_count[static_cast<size_t>(best)])
                    best = j;
            }
            if (best < 0) {
                // Every AP not yet used by user i is full. Some AP j_star has
                // spare capacity (total load < J*ap_cap is impossible only if
                // the association is already complete), and any full AP j not
                // used by i hosts a user that does not use j_star (otherwise
                // j_star would be full). Move that link to j_star to free j.
                int j_star = -1;
                for (int j = 0; j < J; ++j)
                    if (ap_count[static_cast<size_t>(j)] < ap_cap) j_star = j;
                if (j_star < 0)
                    throw InvariantError("damc_association: AP capacity exhausted for user " +
                                         std::to_string(i));
                int freed = -1;
                for (auto& link : assoc) {
                    auto [ii, jj] = link;
                    if (ii == i || jj == j_star) continue;
                    if (used[static_cast<size_t>(i) * J + jj]) continue;
                    if (used[static_cast<size_t>(ii) * J + j_star]) continue;
                    used[static_cast<size_t>(ii) * J + jj] = 0;
                    --ap_count[static_cast<size_t>(jj)];
                    used[static_cast<size_t>(ii) * J + j_star] = 1;
                    ++ap_count[static_cast<size_t>(j_star)];
                    link.second = j_star;
                    freed = jj;
                    break;
                }
                if (freed < 0)
                    throw InvariantError("damc_association: no augmenting swap for user " +
                                         std::to_string(i));
                best = freed;
            }
            used[static_cast<size_t>(i) * J + best] = 1;
            ++user_count[static_cast<size_t>(i)];
            ++ap_count[static_cast<size_t>(best)];
            assoc.push_back({i, best});
        }
    return assoc;
}

}  // namespace detail

/// Distance-aware association and sub-band pairing: associated links sorted
/// by 3D distance descending are paired with sub-bands sorted by distance of
/// f_s from the transmission-window center (long links to center bands by
/// default; the `orientation` flag flips to edge bands).
inline AllocationState damc_assign(const LinkTable& links, const SpectrumPlan& plan, int mc_order,
                                   int ap_cap,
                                   DamcOrientation orientation =
                                       DamcOrientation::CenterBandsToLongLinks) {
    plan.validate();
    int I = links.num_users, J = links.num_aps, S = plan.num_subbands();
    if (S != I * mc_order)
        throw InvariantError("damc_assign: plan must carry S = I*N sub-bands");
    auto assoc = detail::damc_association(links, mc_order, ap_cap);
    std::stable_sort(assoc.begin(), assoc.end(), [&](const auto& a, const auto& b) {
        double da = links.d_at(a.first, a.second), db = links.d_at(b.first, b.second);
        if (da != db) return da > db;  // long links first
        return a < b;
    });
    auto f = center_frequencies(plan);
    double tw_center = plan.f_ref - 0.5 * plan.b_tot;
    std::vector<int> bands(static_cast<size_t>(S));
    for (int s = 0; s < S; ++s) bands[static_cast<size_t>(s)] = s;
    std::stable_sort(bands.begin(), bands.end(), [&](int a, int b) {
        double ca = std::abs(f[static_cast<size_t>(a)] - tw_center);
        double cb = std::abs(f[static_cast<size_t>(b)] - tw_center);
        if (ca != cb) return ca < cb;  // center bands first
        return a < b;
    });
    if (orientation == DamcOrientation::EdgeBandsToLongLinks)
        std::reverse(bands.begin(), bands.end());
    AllocationState st(I, J, S);
    st.b = plan.bandwidths;
    for (int k = 0; k < S; ++k) {
        auto [i, j] = assoc[static_cast<size_t>(k)];
        st.x[st.idx(i, j, bands[static_cast<size_t>(k)])] = 1.0;
    }
    return st;
}

/// DAMC assignment, equal widths, and the capped equal budget split
/// P = min(P_max, P_max / (N p_nb)) on every assigned link.
inline AllocationState equal_power_equal_band(const ProblemSpec& spec,
                                              DamcOrientation orientation =
                                                  DamcOrientation::CenterBandsToLongLinks) {
    auto plan = esb_plan(spec.f_ref, spec.b_tot, spec.b_guard, spec.num_subbands());
    auto st = damc_assign(spec.links, plan, spec.mc_order, spec.ap_cap, orientation);
    for (int i = 0; i < st.num_users; ++i)
        for (int j = 0; j < st.num_aps; ++j) {
            double p = std::min(spec.p_max,
                                spec.p_max / (spec.mc_order * spec.links.p_nb_at(i, j)));
            for (int s = 0; s < st.num_subbands; ++s) {
                size_t m = st.idx(i, j, s);
                if (st.x[m] > 0.0) st.p[m] = p;
            }
        }
    return st;
}

struct OracleResult {
    bool found = false;
    double objective = 0.0;  // bit/s
    AllocationState state;
    long assignments_enumerated = 0;
    std::string message;
};

namespace detail {

// Best min-throughput over the per-link log power grid for one fixed binary
// assignment and bandwidth vector; users decouple, so each user's links are
// gridded jointly and users combine by min.
inline bool oracle_power_search(const ProblemSpec& spec, const OracleConfig& cfg,
                                AllocationState& st, double& objective) {
    auto gains = link_gains(spec, st.b);
    int G = cfg.power_grid_points;
    std::vector<double> grid(static_cast<size_t>(G));
    for (int g = 0; g < G; ++g)
        grid[static_cast<size_t>(g)] =
            spec.p_max * std::pow(1e-3, 1.0 - static_cast<double>(g) / (G - 1));
    objective = std::numeric_limits<double>::infinity();
    for (int i = 0; i < st.num_users; ++i) {
        std::vector<size_t> mine;
        for (int j = 0; j < st.num_aps; ++j)
            for (int s = 0; s < st.num_subbands; ++s)
                if (st.x[st.idx(i, j, s)] > 0.0) mine.push_back(st.idx(i, j, s));
        int L = static_cast<int>(mine.size());
        double best = -1.0;
        std::vector<int> best_pick;
        std::vector<int> pick(static_cast<size_t>(L), 0);
        while (true) {
            double budget = 0.0, total = 0.0;
            bool ok = true;
            for (int l = 0; l < L && ok; ++l) {
                size_t m = mine[static_cast<size_t>(l)];
                int s = static_cast<int>(m % st.num_subbands);
                int j = static_cast<int>((m / st.num_subbands) % st.num_aps);
                double p = grid[static_cast<size_t>(pick[static_cast<size_t>(l)])];
                double rate = link_rate(st.b[static_cast<size_t>(s)], p, gains[m], spec);
                if (gains[m] < spec.l_thr || rate < spec.r_thr) ok = false;
                budget += spec.links.p_nb_at(i, j) * p;
                total += spec.links.p_nb_at(i, j) * rate;
            }
            if (ok && budget <= spec.p_max && total > best) {
                best = total;
                best_pick = pick;
            }
            int l = 0;
            for (; l < L; ++l) {
                if (++pick[static_cast<size_t>(l)] < G) break;
                pick[static_cast<size_t>(l)] = 0;
            }
            if (l == L) break;
        }
        if (best < 0.0) return false;  // no feasible power vector for user i
        for (int l = 0; l < L; ++l)
            st.p[mine[static_cast<size_t>(l)]] = grid[static_cast<size_t>(best_pick[static_cast<size_t>(l)])];
        objective = std::min(objective, best);
    }
    return true;
}

inline void oracle_bandwidth_grids(const ProblemSpec& spec, const OracleConfig& cfg,
                                   std::vector<std::vector<double>>& out) {
    int S = spec.num_subbands();
    double budget = spec.b_bar_tot();
    if (spec.mode == Mode::ESB || cfg.bandwidth_grid_points == 1) {
        out.push_back(std::vector<double>(static_cast<size_t>(S), budget / S));
        return;
    }
    // coarse grid: free choice on the first S-1 bands, remainder on the last
    int G = cfg.bandwidth_grid_points;
    std::vector<int> pick(static_cast<size_t>(S - 1), 0);
    while (true) {
        std::vector<double> b(static_cast<size_t>(S));
        double sum = 0.0;
        for (int s = 0; s < S - 1; ++s) {
            b[static_cast<size_t>(s)] =
                spec.delta + (spec.b_max - spec.delta) * pick[static_cast<size_t>(s)] / (G - 1);
            sum += b[static_cast<size_t>(s)];
        }
        double last = budget - sum;
        if (last >= spec.delta && last <= spec.b_max) {
            b[static_cast<size_t>(S - 1)] = last;
            out.push_back(b);
        }
        int s = 0;
        for (; s < S - 1; ++s) {
            if (++pick[static_cast<size_t>(s)] < G) break;
            pick[static_cast<size_t>(s)] = 0;
        }
        if (s == S - 1) break;
    }
}

}  // namespace detail

/// Exhaustive search over binary assignments (DFS with constraint pruning), a
/// per-link logarithmic power grid, and optionally a coarse bandwidth grid.
/// Exact up to grid resolution; refuses instances beyond the enumeration cap.
inline OracleResult brute_force(const ProblemSpec& spec, const OracleConfig& cfg) {
    spec.validate();
    cfg.validate();
    int I = spec.links.num_users, J = spec.links.num_aps, S = spec.num_subbands();

    OracleResult guard;
    if ((spec.mode == Mode::ESB || cfg.bandwidth_grid_points == 1) &&
        spec.b_bar_tot() / S > spec.b_max * (1.0 + 1e-12)) {
        guard.message = "equal sub-band width exceeds B_max";
        return guard;
    }

    // Count assignments before enumerating.
    std::vector<int> user_count(static_cast<size_t>(I), 0), ap_count(static_cast<size_t>(J), 0);
    std::vector<char> used(static_cast<size_t>(I) * J, 0);
    long count = 0;
    bool over_cap = false;
    std::function<void(int)> count_dfs = [&](int s) {
        if (over_cap) return;
        if (s == S) {
            for (int i = 0; i < I; ++i)
                if (user_count[static_cast<size_t>(i)] != spec.mc_order) return;
            if (++count > cfg.assignment_cap) over_cap = true;
            return;
        }
        for (int i = 0; i < I && !over_cap; ++i) {
            if (user_count[static_cast<size_t>(i)] >= spec.mc_order) continue;
            for (int j = 0; j < J; ++j) {
                if (ap_count[static_cast<size_t>(j)] >= spec.ap_cap) continue;
                if (used[static_cast<size_t>(i) * J + j]) continue;
                used[static_cast<size_t>(i) * J + j] = 1;
                ++user_count[static_cast<size_t>(i)];
                ++ap_count[static_cast<size_t>(j)];
                count_dfs(s + 1);
                used[static_cast<size_t>(i) * J + j] = 0;
                --user_count[static_cast<size_t>(i)];
                --ap_count[static_cast<size_t>(j)];
            }
        }
    };
    count_dfs(0);
    OracleResult res;
    if (over_cap) {
        res.message = "assignment count exceeds cap (> " + std::to_string(cfg.assignment_cap) +
                      ")";
        return res;
    }
    res.assignments_enumerated = count;

    std::vector<std::vector<double>> b_grids;
    detail::oracle_bandwidth_grids(spec, cfg, b_grids);

    AllocationState st(I, J, S);
    std::function<void(int)> dfs = [&](int s) {
        if (s == S) {
            for (int i = 0; i < I; ++i)
                if (user_count[static_cast<size_t>(i)] != spec.mc_order) return;
            for (const auto& b : b_grids) {
                AllocationState cand = st;
                cand.b = b;
                double obj = 0.0;
                if (detail::oracle_power_search(spec, cfg, cand, obj) &&
                    (!res.found || obj > res.objective)) {
                    res.found = true;
                    res.objective = obj;
                    res.state = cand;
                }
            }
            return;
        }
        for (int i = 0; i < I; ++i) {
            if (user_count[static_cast<size_t>(i)] >= spec.mc_order) continue;
            for (int j = 0; j < J; ++j) {
                if (ap_count[static_cast<size_t>(j)] >= spec.ap_cap) continue;
                if (used[static_cast<size_t>(i) * J + j]) continue;
                used[static_cast<size_t>(i) * J + j] = 1;
                ++user_count[static_cast<size_t>(i)];
                ++ap_count[static_cast<size_t>(j)];
                st.x[st.idx(i, j, s)] = 1.0;
                dfs(s + 1);
                st.x[st.idx(i, j, s)] = 0.0;
                used[static_cast<size_t>(i) * J + j] = 0;
                --user_count[static_cast<size_t>(i)];
                --ap_count[static_cast<size_t>(j)];
            }
        }
    };
    dfs(0);
    if (!res.found && res.message.empty())
        res.message = "no feasible binary allocation at the grid resolution";
    return res;
}

}  // namespace thz
