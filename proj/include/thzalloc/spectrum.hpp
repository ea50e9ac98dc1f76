#pragma once

// Sub-band layout arithmetic: bandwidth vectors, descending center
// frequencies, the equal-width plan, the B <-> Z variable substitution
// B_s = xi_s + omega_s log(varsigma_s Z_s), and the concavity bound on omega.

#include "thzalloc/absorption.hpp"
#include "thzalloc/common.hpp"

namespace thz {

struct SpectrumPlan {
    double f_ref = 0.0;  // Hz, end (highest) frequency of the spectrum of interest
    double b_tot = 0.0;  // Hz
    double b_guard = 0.0;  // Hz
    std::vector<double> bandwidths;  // Hz, indexed by sub-band, f_1 > ... > f_S

    int num_subbands() const { return static_cast<int>(bandwidths.size()); }

    void validate(double b_max = std::numeric_limits<double>::infinity()) const {
        if (bandwidths.empty()) throw InvariantError("SpectrumPlan: no sub-bands");
        double sum = 0.0;
        for (double b : bandwidths) {
            if (b < 0.0 || b > b_max + 1e-6)
                throw InvariantError("SpectrumPlan: bandwidth outside [0, B_max]");
            sum += b;
        }
        sum += (num_subbands() - 1) * b_guard;
        if (std::abs(sum - b_tot) > 1e-6)
            throw InvariantError("SpectrumPlan: bandwidths + guards do not add up to B_tot");
    }
};

/// f_s = f_ref - sum_{k<s} (B_k + B_g) - B_s / 2, strictly decreasing in s.
inline std::vector<double> center_frequencies(const SpectrumPlan& plan) {
    plan.validate();
    std::vector<double> f(plan.bandwidths.size());
    double edge = plan.f_ref;
    for (size_t s = 0; s < plan.bandwidths.size(); ++s) {
        f[s] = edge - 0.5 * plan.bandwidths[s];
        edge -= plan.bandwidths[s] + plan.b_guard;
    }
    return f;
}

/// Equal sub-band bandwidths: B_s = (B_tot - (S-1) B_g) / S.
inline SpectrumPlan esb_plan(double f_ref, double b_tot, double b_guard, int num_subbands) {
    if (num_subbands < 1) throw InvariantError("esb_plan: need at least one sub-band");
    double width = (b_tot - (num_subbands - 1) * b_guard) / num_subbands;
    if (width <= 0.0) throw InvariantError("esb_plan: guard bands exceed the total bandwidth");
    SpectrumPlan plan;
    plan.f_ref = f_ref;
    plan.b_tot = b_tot;
    plan.b_guard = b_guard;
    plan.bandwidths.assign(static_cast<size_t>(num_subbands), width);
    return plan;
}

/// Per-sub-band substitution constants (xi, omega, varsigma), all positive.
struct Substitution {
    std::vector<double> xi;        // Hz
    std::vector<double> omega;     // Hz
    std::vector<double> varsigma;  // dimensionless

    int size() const { return static_cast<int>(xi.size()); }

    void validate() const {
        if (xi.size() != omega.size() || xi.size() != varsigma.size() || xi.empty())
            throw InvariantError("Substitution: inconsistent sizes");
        for (size_t s = 0; s < xi.size(); ++s)
            if (xi[s] <= 0.0 || omega[s] <= 0.0 || varsigma[s] <= 0.0)
                throw InvariantError("Substitution: constants must be strictly positive");
    }

    static Substitution uniform(int num_subbands, double xi_v = 5e9, double omega_v = 0.5e9,
                                double varsigma_v = 1e-3) {
        Substitution sub;
        sub.xi.assign(static_cast<size_t>(num_subbands), xi_v);
        sub.omega.assign(static_cast<size_t>(num_subbands), omega_v);
        sub.varsigma.assign(static_cast<size_t>(num_subbands), varsigma_v);
        return sub;
    }
};

inline double b_from_z(const Substitution& sub, int s, double z) {
    if (z <= 0.0) throw DomainError("b_from_z: need Z > 0");
    return sub.xi[s] + sub.omega[s] * std::log(sub.varsigma[s] * z);
}

inline double z_from_b(const Substitution& sub, int s, double b) {
    return std::exp((b - sub.xi[s]) / sub.omega[s]) / sub.varsigma[s];
}

inline double z_min_bound(const Substitution& sub, int s, double delta) {
    return z_from_b(sub, s, delta);
}

inline double z_max_bound(const Substitution& sub, int s, double b_max) {
    return z_from_b(sub, s, b_max);
}

/// Concavity bound: omega_bar = sigma2 (D K^(f_ref) e^{D sigma3} - 1).
/// Gains and rates are concave in every Z_nu whenever 1/omega_nu > omega_bar.
inline double omega_bar(const AbsorptionFit& fit, double f_ref, double D, double d_max) {
    if (D <= d_max) throw InvariantError("omega_bar: need D > max link distance");
    return fit.sigma2 * (D * k_hat(fit, f_ref) * std::exp(D * fit.sigma3) - 1.0);
}

/// True when every 1/omega_s clears the bound.
inline bool lemma_compliant(const Substitution& sub, double bound) {
    for (double w : sub.omega)
        if (1.0 / w <= bound) return false;
    return true;
}

/// Shrink omegas to `factor / bound` where they violate the bound; returns the
/// number of entries adjusted.
inline int enforce_lemma_bound(Substitution& sub, double bound, double factor = 0.9) {
    if (bound <= 0.0) return 0;
    int changed = 0;
    for (double& w : sub.omega) {
        if (1.0 / w <= bound) {
            w = factor / bound;
            ++changed;
        }
    }
    return changed;
}

}  // namespace thz
