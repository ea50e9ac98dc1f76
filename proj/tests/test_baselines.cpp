#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "thzalloc/baselines.hpp"
#include "thzalloc/experiment.hpp"

using namespace thz;

namespace {

// Two users on a line with two APs; user 0 is closest to AP 0 and the
// distances are all distinct: (0,0) 1 m, (1,1) 3 m, (0,1) 11 m, (1,0) 13 m.
LinkTable line_links() {
    Deployment dep;
    dep.user_positions = {{4.0, 10.0}, {18.0, 10.0}};
    dep.ap_positions = {{5.0, 10.0}, {15.0, 10.0}};
    BlockerModel blk;
    return build_links(dep, blk);
}

ExperimentConfig toy_config() {
    ExperimentConfig cfg;
    cfg.fit = default_pacsr_fit();
    cfg.scenario.num_users = 2;
    cfg.scenario.num_aps = 2;
    cfg.mc_order = 1;
    cfg.ap_cap = 2;
    cfg.b_tot = 7e9;  // equal width 3.125 GHz < b_max
    return cfg;
}

}  // namespace

TEST_CASE("association pairs users with their nearest APs") {
    auto links = line_links();
    auto assoc = detail::damc_association(links, 1, 1);
    REQUIRE(assoc.size() == 2);
    std::set<std::pair<int, int>> got(assoc.begin(), assoc.end());
    CHECK(got.count({0, 0}) == 1);
    CHECK(got.count({1, 1}) == 1);
}

TEST_CASE("association completes under exact capacity saturation") {
    // I*N = J*M on the reference scenario (6*2 = 4*3): the greedy sweep can
    // dead-end and must repair itself with an augmenting swap.
    for (uint64_t seed = 1; seed <= 12; ++seed) {
        ScenarioConfig sc;
        sc.seed = seed;
        auto links = build_links(standard_deployment(sc), BlockerModel{});
        auto assoc = detail::damc_association(links, 2, 3);
        REQUIRE(assoc.size() == 12);
        std::vector<int> user_count(6, 0), ap_count(4, 0);
        std::set<std::pair<int, int>> distinct;
        for (auto [i, j] : assoc) {
            ++user_count[i];
            ++ap_count[j];
            distinct.insert({i, j});
        }
        CHECK(distinct.size() == 12);  // no duplicate (user, AP) pairs
        for (int c : user_count) CHECK(c == 2);
        for (int c : ap_count) CHECK(c <= 3);
    }
}

TEST_CASE("distance-aware band pairing is orientation sensitive") {
    auto links = line_links();
    // Dual connectivity (N = 2) so S = 4 bands with distinct center offsets;
    // the inner bands {1, 2} sit closest to the transmission-window center.
    auto plan = esb_plan(1.075e12, 7e9, 0.75e9, 4);
    auto center = damc_assign(links, plan, 2, 2, DamcOrientation::CenterBandsToLongLinks);
    auto edge = damc_assign(links, plan, 2, 2, DamcOrientation::EdgeBandsToLongLinks);
    // The longest link is (user 1, AP 0) at 13 m horizontal.
    auto band_of = [](const AllocationState& st, int i, int j) {
        for (int s = 0; s < st.num_subbands; ++s)
            if (st.x[st.idx(i, j, s)] == 1.0) return s;
        return -1;
    };
    int sc = band_of(center, 1, 0), se = band_of(edge, 1, 0);
    CHECK((sc == 1 || sc == 2));  // inner band
    CHECK((se == 0 || se == 3));  // outer band
    // Exactly one link per band in both orientations.
    for (const auto& st : {center, edge})
        for (int s = 0; s < 4; ++s) {
            double sum = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) sum += st.x[st.idx(i, j, s)];
            CHECK(sum == 1.0);
        }
}

TEST_CASE("equal power split respects the per-user budget") {
    auto cfg = toy_config();
    auto spec = instantiate(cfg, "", 0.0, 1);
    auto st = equal_power_equal_band(spec);
    for (int i = 0; i < st.num_users; ++i) {
        double budget = 0.0;
        for (int j = 0; j < st.num_aps; ++j)
            for (int s = 0; s < st.num_subbands; ++s) {
                size_t n = st.idx(i, j, s);
                if (st.x[n] == 0.0) continue;
                double expect =
                    std::min(spec.p_max, spec.p_max / (spec.mc_order * spec.links.p_nb_at(i, j)));
                CHECK_THAT(st.p[n], Catch::Matchers::WithinRel(expect, 1e-12));
                budget += spec.links.p_nb_at(i, j) * st.p[n];
            }
        CHECK(budget <= spec.p_max * (1.0 + 1e-9));
    }
}

TEST_CASE("brute force finds the toy optimum and bounds the SCA") {
    auto cfg = toy_config();
    auto spec = instantiate(cfg, "", 0.0, 1);
    OracleConfig ocfg;
    ocfg.power_grid_points = 33;
    auto oracle = brute_force(spec, ocfg);
    REQUIRE(oracle.found);
    // [DERIVED] 2 band-orderings x 2 APs x 2 APs = 8 admissible assignments.
    CHECK(oracle.assignments_enumerated == 8);
    CHECK(oracle.objective > 0.0);
    // The oracle state itself is feasible.
    auto res = constraint_residuals(oracle.state, spec);
    for (const auto& [key, v] : res) {
        INFO("residual " << key);
        CHECK(v <= 1e-6 * std::max(1.0, spec.p_max));
    }
    // The SCA result on the same instance is sandwiched by the oracle:
    // no better than the exact optimum, no worse than 2% below it.
    auto rep = solve_esb(spec, SolverConfig{});
    REQUIRE_FALSE(rep.infeasible);
    CHECK(rep.objective >= 0.98 * oracle.objective);
    CHECK(rep.objective <= oracle.objective * (1.0 + 1e-6));
}

TEST_CASE("brute force refuses oversized enumerations") {
    auto cfg = toy_config();
    auto spec = instantiate(cfg, "", 0.0, 1);
    OracleConfig ocfg;
    ocfg.assignment_cap = 4;  // below the true count of 8
    auto res = brute_force(spec, ocfg);
    CHECK_FALSE(res.found);
    CHECK(res.message.find("cap") != std::string::npos);
}

TEST_CASE("brute force rejects equal widths beyond the per-band cap") {
    auto cfg = toy_config();
    cfg.b_tot = 50e9;  // equal width 24.6 GHz >> b_max = 4.5 GHz
    auto spec = instantiate(cfg, "", 0.0, 1);
    auto res = brute_force(spec, OracleConfig{});
    CHECK_FALSE(res.found);
    CHECK(res.message.find("B_max") != std::string::npos);
}
