#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "thzalloc/spectrum.hpp"

using namespace thz;

namespace {

AbsorptionFit pacsr_fit() {
    AbsorptionFit fit;
    fit.sigma1 = -90.996;
    fit.sigma2 = 8.326e-11;
    fit.sigma3 = 0.0452;
    fit.f_lo = 1.025e12;
    fit.f_hi = 1.075e12;
    return fit;
}

}  // namespace

TEST_CASE("equal sub-band plan matches the reference layout") {
    auto plan = esb_plan(1.075e12, 50e9, 0.75e9, 12);
    REQUIRE(plan.num_subbands() == 12);
    // [PAPER] (50 GHz - 11 * 0.75 GHz) / 12 = 3.4792 GHz per sub-band.
    for (double b : plan.bandwidths)
        CHECK_THAT(b, Catch::Matchers::WithinRel(3479166666.6666665, 1e-12));
    auto f = center_frequencies(plan);
    // [DERIVED] f_1 = f_ref - B_1 / 2.
    CHECK_THAT(f[0], Catch::Matchers::WithinRel(1073260416666.6666, 1e-12));
    // Consecutive centers are one width plus one guard apart.
    for (size_t s = 1; s < f.size(); ++s)
        CHECK_THAT(f[s - 1] - f[s],
                   Catch::Matchers::WithinRel(3479166666.6666665 + 0.75e9, 1e-12));
    // The layout exactly consumes the spectrum of interest.
    double used = 0.0;
    for (double b : plan.bandwidths) used += b;
    used += (plan.num_subbands() - 1) * plan.b_guard;
    CHECK_THAT(used, Catch::Matchers::WithinRel(50e9, 1e-12));
    CHECK_THROWS_AS(esb_plan(1.075e12, 5e9, 0.75e9, 12), InvariantError);
}

TEST_CASE("bandwidth substitution round-trips") {
    auto sub = Substitution::uniform(12, 5e9, 0.5e9, 1e-3);
    sub.validate();
    for (double b : {1e6, 1e9, 3.4e9, 4.5e9}) {
        double z = z_from_b(sub, 3, b);
        CHECK_THAT(b_from_z(sub, 3, z), Catch::Matchers::WithinRel(b, 1e-9));
    }
    // [DERIVED] Z at B_max = 4.5 GHz: exp((4.5e9 - 5e9)/0.5e9)/1e-3 = e^{-1}/1e-3.
    CHECK_THAT(z_max_bound(sub, 0, 4.5e9),
               Catch::Matchers::WithinRel(367.87944117144235, 1e-12));
    CHECK(z_min_bound(sub, 0, 1e3) > 0.0);
    CHECK(z_min_bound(sub, 0, 1e3) < z_max_bound(sub, 0, 4.5e9));
    CHECK_THROWS_AS(b_from_z(sub, 0, 0.0), DomainError);
    CHECK_THROWS_AS(Substitution::uniform(3, 5e9, -1.0, 1e-3).validate(), InvariantError);
}

TEST_CASE("concavity bound and lemma enforcement") {
    auto fit = pacsr_fit();
    // [DERIVED] omega_bar = sigma2 (D K^(f_ref) e^{D sigma3} - 1) at D = 30 m.
    double bound = omega_bar(fit, 1.075e12, 30.0, 15.0);
    CHECK_THAT(bound, Catch::Matchers::WithinRel(2.5361430835530013e-09, 1e-12));
    CHECK_THROWS_AS(omega_bar(fit, 1.075e12, 10.0, 15.0), InvariantError);  // D <= d_max

    // The default omega = 0.5 GHz violates 1/omega > omega_bar
    // (1/omega_bar ~ 0.394 GHz), so all twelve entries get shrunk.
    auto sub = Substitution::uniform(12, 5e9, 0.5e9, 1e-3);
    CHECK_FALSE(lemma_compliant(sub, bound));
    CHECK(enforce_lemma_bound(sub, bound) == 12);
    CHECK(lemma_compliant(sub, bound));
    for (double w : sub.omega) CHECK_THAT(w, Catch::Matchers::WithinRel(0.9 / bound, 1e-12));
    // Already-compliant entries are untouched.
    CHECK(enforce_lemma_bound(sub, bound) == 0);
}

TEST_CASE("spectrum plan validation") {
    SpectrumPlan plan;
    plan.f_ref = 1.075e12;
    plan.b_tot = 50e9;
    plan.b_guard = 0.75e9;
    plan.bandwidths.assign(12, 3479166666.6666665);
    CHECK_NOTHROW(plan.validate());
    plan.bandwidths[0] = -1.0;
    CHECK_THROWS_AS(plan.validate(), InvariantError);
    plan.bandwidths[0] = 10e9;  // breaks the budget equality
    CHECK_THROWS_AS(plan.validate(), InvariantError);
}
