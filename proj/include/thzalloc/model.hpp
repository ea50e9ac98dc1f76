#pragma once

// Optimization-problem assembly: link rates, per-user throughputs, the full
// constraint set of the generalized allocation problem, the penalty
// relaxation of the binary assignment, and the two convex blocks (assignment
// LP / power-bandwidth program) consumed by the SCA solver.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <memory>

#include "thzalloc/scenario.hpp"
#include "thzalloc/spectrum.hpp"

namespace thz {

enum class Mode { ESB, ASB_PACSR, ASB_NACSR };

/// Relaxed assignment x in [0,1]^{I x J x S}, transmit powers P (W), and
/// sub-band bandwidths B (Hz).
struct AllocationState {
    int num_users = 0;
    int num_aps = 0;
    int num_subbands = 0;
    std::vector<double> x;  // I*J*S
    std::vector<double> p;  // I*J*S, W
    std::vector<double> b;  // S, Hz

    AllocationState() = default;
    AllocationState(int users, int aps, int subbands)
        : num_users(users), num_aps(aps), num_subbands(subbands),
          x(static_cast<size_t>(users) * aps * subbands, 0.0),
          p(static_cast<size_t>(users) * aps * subbands, 0.0),
          b(static_cast<size_t>(subbands), 0.0) {}

    size_t idx(int i, int j, int s) const {
        return (static_cast<size_t>(i) * num_aps + j) * num_subbands + s;
    }
};

struct ProblemSpec {
    LinkTable links;
    AbsorptionFit fit;
    Substitution sub;  // used in ASB modes
    Mode mode = Mode::ESB;

    double f_ref = 1.075e12;  // Hz
    double b_tot = 50e9;      // Hz
    double b_guard = 0.75e9;  // Hz
    double b_max = 4.5e9;     // Hz
    int mc_order = 2;         // N
    int ap_cap = 3;           // M

    double phi = 0.5;
    double n0 = dbm_to_watts(-174.0);       // W/Hz
    double gain_ap = db_to_linear(25.0);    // linear
    double gain_user = db_to_linear(15.0);  // linear
    double l_thr = 1e-13;
    double r_thr = 2e9;                // bit/s
    double p_max = dbm_to_watts(3.2);  // W per user

    double penalty_lambda = 200.0;
    double epsilon = 1e-6;
    double delta = 1e3;            // Hz, lower bandwidth bound in ASB mode
    double lemma_distance = 30.0;  // D, m; must exceed every link distance

    int num_subbands() const { return links.num_users * mc_order; }
    double b_bar_tot() const { return b_tot - (num_subbands() - 1) * b_guard; }
    double antenna_product() const { return gain_ap * gain_user; }

    void validate() const {
        if (mc_order < 1 || mc_order > links.num_aps)
            throw InvariantError("ProblemSpec: need 1 <= N <= J");
        if (phi <= 0.0 || phi > 1.0) throw InvariantError("ProblemSpec: phi in (0, 1]");
        if (penalty_lambda < 0.0 || epsilon <= 0.0)
            throw InvariantError("ProblemSpec: need lambda >= 0 and epsilon > 0");
        if (static_cast<long>(links.num_users) * mc_order >
            static_cast<long>(links.num_aps) * ap_cap)
            throw InvariantError("ProblemSpec: AP capacity cannot host I*N links");
    }
};

/// Shannon-style rate with duty-cycle phi; continuous extension R = 0 at B = 0.
inline double link_rate(double bandwidth, double power, double gain, const ProblemSpec& spec) {
    if (bandwidth < 0.0 || power < 0.0 || gain < 0.0)
        throw DomainError("link_rate: negative input");
    if (bandwidth == 0.0) return 0.0;
    double snr = power * spec.antenna_product() * gain / (spec.n0 * bandwidth);
    return bandwidth * spec.phi * std::log2(1.0 + snr);
}

/// Power needed to reach `rate` at the given bandwidth and gain.
inline double invert_link_rate(double rate, double bandwidth, double gain,
                               const ProblemSpec& spec) {
    if (rate <= 0.0) return 0.0;
    double snr = std::exp2(rate / (bandwidth * spec.phi)) - 1.0;
    return snr * spec.n0 * bandwidth / (spec.antenna_product() * gain);
}

/// Center-frequency path gain |alpha|^2 = rho e^{-K^(f) d} / (f d)^2.
inline double gain_center(const AbsorptionFit& fit, double f_center, double d) {
    double rho = kSpeedOfLight / (4.0 * M_PI);
    rho *= rho;
    return rho * std::exp(-k_hat(fit, f_center) * d) / (f_center * f_center * d * d);
}

/// a_{s,k}: 1 below the diagonal, 1/2 on it, 0 above (0-based indices).
inline double subband_overlap_coeff(int s, int k) {
    if (s > k) return 1.0;
    if (s == k) return 0.5;
    return 0.0;
}

/// f_s = F_s - sum_k a_{s,k} B_k with F_s = f_ref - s * B_g (s 0-based).
inline std::vector<double> center_frequencies_from_bandwidths(const ProblemSpec& spec,
                                                              const std::vector<double>& b) {
    int S = static_cast<int>(b.size());
    std::vector<double> f(b.size());
    double cum = 0.0;
    for (int s = 0; s < S; ++s) {
        double F_s = spec.f_ref - s * spec.b_guard;
        f[s] = F_s - cum - 0.5 * b[s];
        cum += b[s];
    }
    return f;
}

/// Per-link center-frequency gains for the current bandwidth vector.
inline std::vector<double> link_gains(const ProblemSpec& spec, const std::vector<double>& b) {
    auto f = center_frequencies_from_bandwidths(spec, b);
    int I = spec.links.num_users, J = spec.links.num_aps, S = static_cast<int>(b.size());
    std::vector<double> g(static_cast<size_t>(I) * J * S);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            double d = spec.links.d_at(i, j);
            for (int s = 0; s < S; ++s)
                g[(static_cast<size_t>(i) * J + j) * S + s] = gain_center(spec.fit, f[s], d);
        }
    return g;
}

/// R_i = sum_{j,s} x_{ijs} p_nb(r_ij) R^nb_{ijs}.
inline std::vector<double> user_throughput(const AllocationState& st, const ProblemSpec& spec) {
    auto gains = link_gains(spec, st.b);
    std::vector<double> out(static_cast<size_t>(st.num_users), 0.0);
    for (int i = 0; i < st.num_users; ++i)
        for (int j = 0; j < st.num_aps; ++j)
            for (int s = 0; s < st.num_subbands; ++s) {
                size_t n = st.idx(i, j, s);
                if (st.x[n] == 0.0) continue;
                out[i] += st.x[n] * spec.links.p_nb_at(i, j) *
                          link_rate(st.b[s], st.p[n], gains[n], spec);
            }
    return out;
}

inline double min_throughput(const AllocationState& st, const ProblemSpec& spec) {
    auto r = user_throughput(st, spec);
    return *std::min_element(r.begin(), r.end());
}

/// Signed violations (<= 0 feasible), max over instances per constraint family.
/// Equality families report the absolute mismatch.
inline std::map<std::string, double> constraint_residuals(const AllocationState& st,
                                                          const ProblemSpec& spec) {
    auto gains = link_gains(spec, st.b);
    int I = st.num_users, J = st.num_aps, S = st.num_subbands;
    std::map<std::string, double> res;
    auto acc = [&](const std::string& key, double v) {
        auto it = res.find(key);
        if (it == res.end() || v > it->second) res[key] = v;
    };

    for (int i = 0; i < I; ++i) {
        double budget = 0.0, order = 0.0;
        for (int j = 0; j < J; ++j)
            for (int s = 0; s < S; ++s) {
                size_t n = st.idx(i, j, s);
                budget += spec.links.p_nb_at(i, j) * st.x[n] * st.p[n];
                order += st.x[n];
            }
        acc("power_budget", budget - spec.p_max);
        acc("mc_order", std::abs(order - spec.mc_order));
    }
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            double per_link = 0.0;
            for (int s = 0; s < S; ++s) {
                size_t n = st.idx(i, j, s);
                per_link += st.x[n];
                acc("power_box", std::max(st.p[n] - spec.p_max, -st.p[n]));
                acc("x_box", std::max(st.x[n] - 1.0, -st.x[n]));
                acc("gain_threshold", st.x[n] * spec.l_thr - gains[n]);
                double rate = link_rate(st.b[s], st.p[n], gains[n], spec);
                acc("rate_threshold", st.x[n] * spec.r_thr - rate);
            }
            acc("per_link", per_link - 1.0);
        }
    for (int s = 0; s < S; ++s) {
        double per_band = 0.0;
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j) per_band += st.x[st.idx(i, j, s)];
        acc("per_subband", std::abs(per_band - 1.0));
        acc("band_box", std::max(st.b[s] - spec.b_max, -st.b[s]));
    }
    for (int j = 0; j < J; ++j) {
        double cap = 0.0;
        for (int i = 0; i < I; ++i)
            for (int s = 0; s < S; ++s) cap += st.x[st.idx(i, j, s)];
        acc("ap_cap", cap - spec.ap_cap);
    }
    double bsum = 0.0;
    for (double b : st.b) bsum += b;
    acc("band_budget", std::abs(bsum + (S - 1) * spec.b_guard - spec.b_tot));
    return res;
}

inline double max_residual(const std::map<std::string, double>& res) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [k, v] : res) m = std::max(m, v);
    return m;
}

/// Lambda * sum(x - x^2); zero exactly on binary x.
inline double penalty_value(const std::vector<double>& x, double lambda) {
    double s = 0.0;
    for (double v : x) s += v - v * v;
    return lambda * s;
}

/// First-order upper bound Lambda * sum(x (1 - 2 xa) + xa^2); tangent to the
/// penalty at x = xa.
inline double penalty_surrogate(const std::vector<double>& x, const std::vector<double>& x_anchor,
                                double lambda) {
    double s = 0.0;
    for (size_t n = 0; n < x.size(); ++n)
        s += x[n] * (1.0 - 2.0 * x_anchor[n]) + x_anchor[n] * x_anchor[n];
    return lambda * s;
}

// ---------------------------------------------------------------------------
// Convex sub-blocks

enum class FixedBlock { FixAssignment, FixPowerBandwidth };

/// Concave constraint g(v) >= 0 with analytic gradient (grad may be null;
/// when non-null it is resized and overwritten).
struct SmoothConstraint {
    std::string name;
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> eval;
};

/// Self-describing concave maximization:
///   maximize c'v  s.t.  A_eq v = b_eq, A_in v <= b_in, g_k(v) >= 0, lb <= v <= ub.
/// Pure LPs carry no smooth constraints. Variables are pre-scaled to O(1);
/// the layout fields recover the physical allocation.
struct ConvexSubproblem {
    enum class Kind { AssignmentLP, PowerBandwidth };
    Kind kind = Kind::AssignmentLP;
    int num_vars = 0;
    Eigen::VectorXd c, lb, ub;
    Eigen::MatrixXd a_eq, a_in;
    Eigen::VectorXd b_eq, b_in;
    std::vector<SmoothConstraint> smooth;
    Eigen::VectorXd v0;  // strictly feasible start (PowerBandwidth kind)

    bool feasible = true;
    std::string infeasibility;

    // layout: v(0) is the epigraph throughput variable in units of rate_scale
    double rate_scale = 1e9;
    int x_offset = 1;            // AssignmentLP: x at [1 .. I*J*S]
    std::vector<size_t> active;  // PowerBandwidth: flat (i,j,s) indices
    int p_offset = 1;
    int z_offset = -1;  // -1 when bandwidths are fixed
    double p_scale = 1.0;
    std::vector<double> z_scale;

    std::shared_ptr<const void> context;  // keeps smooth-constraint state alive
};

namespace detail {

// Shared state for the power/bandwidth block's smooth constraints.
struct PowerBlockContext {
    ProblemSpec spec;
    std::vector<double> anchor_b;  // bandwidths when ESB (fixed)
    std::vector<double> anchor_x;  // x values of the active links
    std::vector<std::array<int, 3>> links;  // (i, j, s) per active var
    bool asb = false;
    int num_subbands = 0;
    int p_offset = 1, z_offset = -1;
    double p_scale = 1.0, rate_scale = 1e9;
    std::vector<double> z_scale;

    struct Point {
        std::vector<double> b, f, z;
    };

    Point decode(const Eigen::VectorXd& v) const {
        Point pt;
        if (asb) {
            pt.z.resize(static_cast<size_t>(num_subbands));
            pt.b.resize(pt.z.size());
            for (int s = 0; s < num_subbands; ++s) {
                pt.z[s] = v(z_offset + s) * z_scale[s];
                pt.b[s] = b_from_z(spec.sub, s, pt.z[s]);
            }
        } else {
            pt.b = anchor_b;
        }
        pt.f = center_frequencies_from_bandwidths(spec, pt.b);
        return pt;
    }

    // |alpha|^2 and optional d|alpha|^2/dZ_k for k <= s.
    double alpha_sq(const Point& pt, int s, double d, std::vector<double>* dz) const {
        double a2 = gain_center(spec.fit, pt.f[s], d);
        if (dz) {
            dz->assign(pt.b.size(), 0.0);
            double dlog_df = -d * k_hat_derivative(spec.fit, pt.f[s]) - 2.0 / pt.f[s];
            for (int k = 0; k <= s; ++k) {
                double df_dz = -subband_overlap_coeff(s, k) * spec.sub.omega[k] / pt.z[k];
                (*dz)[k] = a2 * dlog_df * df_dz;
            }
        }
        return a2;
    }

    double rate(double B, double P, double a2, double* dP, double* dB, double* dA) const {
        double cg = spec.antenna_product();
        double snr = P * cg * a2 / (spec.n0 * B);
        double ln2 = std::log(2.0);
        if (dP) *dP = (spec.phi / (ln2 * spec.n0)) * cg * a2 / (1.0 + snr);
        if (dB) *dB = spec.phi * (std::log2(1.0 + snr) - snr / ((1.0 + snr) * ln2));
        if (dA) *dA = (B * spec.phi / ln2) * (P * cg / (spec.n0 * B)) / (1.0 + snr);
        return B * spec.phi * std::log2(1.0 + snr);
    }

    // Rate of active link l with gradient accumulation into grad (pre-zeroed).
    double link_rate_grad(const Eigen::VectorXd& v, const Point& pt, int l,
                          Eigen::VectorXd* grad, double weight) const {
        auto [i, j, s] = links[static_cast<size_t>(l)];
        double d = spec.links.d_at(i, j);
        std::vector<double> da;
        double a2 = alpha_sq(pt, s, d, (grad && asb) ? &da : nullptr);
        double P = v(p_offset + l) * p_scale;
        double dP = 0, dB = 0, dA = 0;
        double R = rate(pt.b[s], P, a2, grad ? &dP : nullptr, grad ? &dB : nullptr,
                        grad ? &dA : nullptr);
        if (grad) {
            (*grad)(p_offset + l) += weight * dP * p_scale / rate_scale;
            if (asb) {
                (*grad)(z_offset + s) +=
                    weight * dB * (spec.sub.omega[s] / pt.z[s]) * z_scale[s] / rate_scale;
                for (int k = 0; k <= s; ++k)
                    (*grad)(z_offset + k) += weight * dA * da[k] * z_scale[k] / rate_scale;
            }
        }
        return R;
    }
};

}  // namespace detail

/// Assignment LP (fix powers/bandwidths): variables [t_Gbps, x...]; objective
/// t - Lambda sum x (1 - 2 x_anchor) subject to the assignment polytope, the
/// weighted power budgets, and threshold-derived upper bounds on x.
inline ConvexSubproblem build_assignment_lp(const ProblemSpec& spec,
                                            const AllocationState& anchor) {
    int I = spec.links.num_users, J = spec.links.num_aps, S = spec.num_subbands();
    auto gains = link_gains(spec, anchor.b);
    int n = 1 + I * J * S;
    ConvexSubproblem sp;
    sp.kind = ConvexSubproblem::Kind::AssignmentLP;
    sp.num_vars = n;
    sp.c = Eigen::VectorXd::Zero(n);
    sp.c(0) = 1.0;
    sp.lb = Eigen::VectorXd::Zero(n);
    sp.ub = Eigen::VectorXd::Ones(n);
    sp.ub(0) = 1e6;  // Gbit/s headroom for the epigraph variable

    auto xv = [&](int i, int j, int s) { return 1 + static_cast<int>(anchor.idx(i, j, s)); };

    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            for (int s = 0; s < S; ++s) {
                size_t m = anchor.idx(i, j, s);
                sp.c(xv(i, j, s)) = -spec.penalty_lambda * (1.0 - 2.0 * anchor.x[m]);
                // admission caps use the best rate the power box allows; the
                // thresholds are enforced exactly in the power block
                double rate_cap = link_rate(anchor.b[s], spec.p_max, gains[m], spec);
                double u = std::min(gains[m] / spec.l_thr, rate_cap / spec.r_thr);
                // the margin keeps binding thresholds strictly satisfiable
                // downstream without ever blocking exact binarity
                sp.ub(xv(i, j, s)) = u >= 1.0 ? 1.0 : std::max(0.0, u * (1.0 - 1e-4));
            }

    int n_eq = I + S;
    int n_in = I + I * J + J + I;  // t rows, per-link, AP caps, power budgets
    sp.a_eq = Eigen::MatrixXd::Zero(n_eq, n);
    sp.b_eq = Eigen::VectorXd::Zero(n_eq);
    sp.a_in = Eigen::MatrixXd::Zero(n_in, n);
    sp.b_in = Eigen::VectorXd::Zero(n_in);

    int row = 0;
    for (int i = 0; i < I; ++i, ++row) {  // sum_{j,s} x = N
        for (int j = 0; j < J; ++j)
            for (int s = 0; s < S; ++s) sp.a_eq(row, xv(i, j, s)) = 1.0;
        sp.b_eq(row) = spec.mc_order;
    }
    for (int s = 0; s < S; ++s, ++row) {  // sum_{i,j} x = 1
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j) sp.a_eq(row, xv(i, j, s)) = 1.0;
        sp.b_eq(row) = 1.0;
    }
    row = 0;
    for (int i = 0; i < I; ++i, ++row) {  // t <= R_i (Gbit/s units)
        sp.a_in(row, 0) = 1.0;
        for (int j = 0; j < J; ++j)
            for (int s = 0; s < S; ++s) {
                size_t m = anchor.idx(i, j, s);
                double r = spec.links.p_nb_at(i, j) *
                           link_rate(anchor.b[s], anchor.p[m], gains[m], spec);
                sp.a_in(row, xv(i, j, s)) = -r / sp.rate_scale;
            }
    }
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j, ++row) {  // sum_s x <= 1
            for (int s = 0; s < S; ++s) sp.a_in(row, xv(i, j, s)) = 1.0;
            sp.b_in(row) = 1.0;
        }
    for (int j = 0; j < J; ++j, ++row) {  // AP cap
        for (int i = 0; i < I; ++i)
            for (int s = 0; s < S; ++s) sp.a_in(row, xv(i, j, s)) = 1.0;
        sp.b_in(row) = spec.ap_cap;
    }
    for (int i = 0; i < I; ++i, ++row) {  // weighted power budget
        for (int j = 0; j < J; ++j)
            for (int s = 0; s < S; ++s) {
                size_t m = anchor.idx(i, j, s);
                // charge at least the power the rate threshold demands, so
                // the LP never selects a link set whose thresholds cannot be
                // funded in the power block
                double p_thr = invert_link_rate(spec.r_thr * 1.01, anchor.b[s], gains[m], spec);
                double p_row = std::min(spec.p_max, std::max(anchor.p[m], p_thr));
                sp.a_in(row, xv(i, j, s)) = spec.links.p_nb_at(i, j) * p_row / spec.p_max;
            }
        sp.b_in(row) = 1.0;
    }
    return sp;
}

/// Power/bandwidth block (fix assignment): smooth concave maximization of the
/// epigraph variable under per-user throughput couplings, rate and gain
/// thresholds on assigned links, power budgets, and (ASB) the linearized
/// bandwidth budget in Z. Also constructs a strictly feasible start; when the
/// rate thresholds cannot be met within the power budget the block is
/// reported infeasible.
inline ConvexSubproblem build_power_block(const ProblemSpec& spec, const AllocationState& anchor) {
    int I = spec.links.num_users, J = spec.links.num_aps, S = spec.num_subbands();
    bool asb = spec.mode != Mode::ESB;
    ConvexSubproblem sp;
    sp.kind = ConvexSubproblem::Kind::PowerBandwidth;
    sp.p_scale = spec.p_max;

    auto ctx = std::make_shared<detail::PowerBlockContext>();
    ctx->spec = spec;
    ctx->asb = asb;
    ctx->num_subbands = S;
    ctx->p_scale = spec.p_max;
    ctx->rate_scale = sp.rate_scale;

    const double x_tol = 1e-9;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            for (int s = 0; s < S; ++s) {
                size_t m = anchor.idx(i, j, s);
                if (anchor.x[m] > x_tol) {
                    sp.active.push_back(m);
                    ctx->links.push_back({i, j, s});
                    ctx->anchor_x.push_back(anchor.x[m]);
                }
            }
    int L = static_cast<int>(sp.active.size());
    if (L == 0) {
        sp.feasible = false;
        sp.infeasibility = "no active links in assignment";
        return sp;
    }

    int n = 1 + L + (asb ? S : 0);
    sp.num_vars = n;
    sp.p_offset = 1;
    sp.z_offset = asb ? 1 + L : -1;
    ctx->p_offset = sp.p_offset;
    ctx->z_offset = sp.z_offset;
    sp.c = Eigen::VectorXd::Zero(n);
    sp.c(0) = 1.0;
    sp.lb = Eigen::VectorXd::Zero(n);
    sp.ub = Eigen::VectorXd::Ones(n);
    sp.ub(0) = 1e6;

    // Start from the anchor bandwidths, pulled fractionally inside the budget
    // so that the linearized budget row starts strictly slack.
    std::vector<double> b0 = anchor.b;
    if (asb) {
        sp.z_scale.resize(static_cast<size_t>(S));
        for (int s = 0; s < S; ++s) {
            b0[s] = spec.delta + (anchor.b[s] - spec.delta) * (1.0 - 1e-6);
            b0[s] = std::clamp(b0[s], spec.delta, spec.b_max);
            double zmin = z_min_bound(spec.sub, s, spec.delta);
            double zmax = z_max_bound(spec.sub, s, spec.b_max);
            sp.z_scale[s] = zmax;
            sp.lb(sp.z_offset + s) = zmin / zmax;
        }
        ctx->z_scale = sp.z_scale;
    } else {
        ctx->anchor_b = anchor.b;
    }

    // Linear inequality rows: per-user power budget (+ ASB linearized budget).
    int n_in = I + (asb ? 1 : 0);
    sp.a_in = Eigen::MatrixXd::Zero(n_in, n);
    sp.b_in = Eigen::VectorXd::Zero(n_in);
    for (int i = 0; i < I; ++i) sp.b_in(i) = 1.0;
    for (int l = 0; l < L; ++l) {
        auto [i, j, s] = ctx->links[static_cast<size_t>(l)];
        (void)s;
        sp.a_in(i, sp.p_offset + l) = spec.links.p_nb_at(i, j) * ctx->anchor_x[l];
    }
    if (asb) {
        // sum_s omega_s log(varsigma_s Z_s) <= B_bar_tot - sum xi, linearized
        // at the start point (the tangent over-estimates log, so the
        // restriction is conservative and contains the start).
        double rhs = spec.b_bar_tot();
        for (int s = 0; s < S; ++s) rhs -= spec.sub.xi[s];
        double lin_const = 0.0;
        int row = I;
        for (int s = 0; s < S; ++s) {
            double za = z_from_b(spec.sub, s, b0[s]);
            sp.a_in(row, sp.z_offset + s) = spec.sub.omega[s] / za * sp.z_scale[s];
            lin_const += spec.sub.omega[s] * (std::log(spec.sub.varsigma[s] * za) - 1.0);
        }
        sp.b_in(row) = rhs - lin_const;
        double nrm = sp.a_in.row(row).norm();
        sp.a_in.row(row) /= nrm;
        sp.b_in(row) /= nrm;
    }

    // Smooth concave constraints: per-user throughput epigraph rows, per-link
    // rate thresholds, and (ASB) per-link gain thresholds.
    for (int i = 0; i < I; ++i) {
        std::vector<int> mine;
        for (int l = 0; l < L; ++l)
            if (ctx->links[static_cast<size_t>(l)][0] == i) mine.push_back(l);
        if (mine.empty()) continue;
        sp.smooth.push_back({"throughput_user_" + std::to_string(i),
            [ctx, mine](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
                if (grad) {
                    grad->resize(v.size());
                    grad->setZero();
                }
                auto pt = ctx->decode(v);
                double total = 0.0;
                for (int l : mine) {
                    auto [i2, j, s] = ctx->links[static_cast<size_t>(l)];
                    (void)s;
                    double w = ctx->spec.links.p_nb_at(i2, j) *
                               ctx->anchor_x[static_cast<size_t>(l)];
                    total += w * ctx->link_rate_grad(v, pt, l, grad, w);
                }
                if (grad) (*grad)(0) -= 1.0;
                return total / ctx->rate_scale - v(0);
            }});
    }
    for (int l = 0; l < L; ++l) {
        sp.smooth.push_back({"rate_thr_" + std::to_string(l),
            [ctx, l](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
                if (grad) {
                    grad->resize(v.size());
                    grad->setZero();
                }
                auto pt = ctx->decode(v);
                double R = ctx->link_rate_grad(v, pt, l, grad, 1.0);
                double target = ctx->anchor_x[static_cast<size_t>(l)] * ctx->spec.r_thr;
                return (R - target) / ctx->rate_scale;
            }});
        if (asb) {
            sp.smooth.push_back({"gain_thr_" + std::to_string(l),
                [ctx, l](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
                    if (grad) {
                        grad->resize(v.size());
                        grad->setZero();
                    }
                    auto pt = ctx->decode(v);
                    auto [i, j, s] = ctx->links[static_cast<size_t>(l)];
                    double d = ctx->spec.links.d_at(i, j);
                    std::vector<double> da;
                    double a2 = ctx->alpha_sq(pt, s, d, grad ? &da : nullptr);
                    if (grad)
                        for (int k = 0; k <= s; ++k)
                            (*grad)(ctx->z_offset + k) += da[k] * ctx->z_scale[k] / ctx->spec.l_thr;
                    double target = ctx->anchor_x[static_cast<size_t>(l)] * ctx->spec.l_thr;
                    return (a2 - target) / ctx->spec.l_thr;
                }});
        }
    }

    // Strictly feasible start: per-link powers meeting x R_thr with margin,
    // remaining per-user budget spread across that user's links.
    {
        Eigen::VectorXd v0 = Eigen::VectorXd::Zero(n);
        if (asb)
            for (int s = 0; s < S; ++s)
                v0(sp.z_offset + s) = std::clamp(z_from_b(spec.sub, s, b0[s]) / sp.z_scale[s],
                                                 sp.lb(sp.z_offset + s) * (1.0 + 1e-12), 1.0);
        auto f0 = center_frequencies_from_bandwidths(spec, b0);
        std::vector<double> p_req(static_cast<size_t>(L), 0.0);
        std::vector<double> budget_used(static_cast<size_t>(I), 0.0);
        bool ok = true;
        std::string why;
        for (int l = 0; l < L && ok; ++l) {
            auto [i, j, s] = ctx->links[static_cast<size_t>(l)];
            double a2 = gain_center(spec.fit, f0[s], spec.links.d_at(i, j));
            double xv = ctx->anchor_x[static_cast<size_t>(l)];
            if (a2 <= xv * spec.l_thr) {
                ok = false;
                why = "gain threshold unreachable on an assigned link";
                break;
            }
            double need = invert_link_rate(xv * spec.r_thr * (1.0 + 1e-6), b0[s], a2, spec);
            need = std::max(need, 1e-9 * spec.p_max);
            if (need > spec.p_max) {
                ok = false;
                why = "rate threshold above the per-link power cap";
                break;
            }
            p_req[static_cast<size_t>(l)] = need;
            budget_used[static_cast<size_t>(i)] += spec.links.p_nb_at(i, j) * xv * need;
        }
        if (ok)
            for (int i = 0; i < I; ++i)
                if (budget_used[static_cast<size_t>(i)] >= spec.p_max * (1.0 - 1e-9)) {
                    ok = false;
                    why = "rate thresholds exceed the power budget of user " + std::to_string(i);
                }
        if (!ok) {
            sp.feasible = false;
            sp.infeasibility = why;
            return sp;
        }
        for (int i = 0; i < I; ++i) {
            double weight_sum = 0.0;
            for (int l = 0; l < L; ++l)
                if (ctx->links[static_cast<size_t>(l)][0] == i)
                    weight_sum += spec.links.p_nb_at(i, ctx->links[static_cast<size_t>(l)][1]) *
                                  ctx->anchor_x[static_cast<size_t>(l)];
            double slack = spec.p_max * (1.0 - 1e-6) - budget_used[static_cast<size_t>(i)];
            for (int l = 0; l < L; ++l) {
                auto [i2, j, s] = ctx->links[static_cast<size_t>(l)];
                (void)j;
                (void)s;
                if (i2 != i) continue;
                double p = p_req[static_cast<size_t>(l)];
                if (slack > 0.0 && weight_sum > 0.0)
                    p = std::min(p + 0.5 * slack / weight_sum, spec.p_max * (1.0 - 1e-9));
                v0(sp.p_offset + l) = p / sp.p_scale;
            }
        }
        // Epigraph start strictly below the smallest throughput.
        double tmin = std::numeric_limits<double>::infinity();
        auto pt = ctx->decode(v0);
        for (int i = 0; i < I; ++i) {
            double total = 0.0;
            bool any = false;
            for (int l = 0; l < L; ++l) {
                auto [i2, j, s] = ctx->links[static_cast<size_t>(l)];
                (void)j;
                (void)s;
                if (i2 != i) continue;
                any = true;
                double w = spec.links.p_nb_at(i2, ctx->links[static_cast<size_t>(l)][1]) *
                           ctx->anchor_x[static_cast<size_t>(l)];
                total += w * ctx->link_rate_grad(v0, pt, l, nullptr, w);
            }
            if (any) tmin = std::min(tmin, total / sp.rate_scale);
        }
        v0(0) = std::max(0.0, 0.99 * tmin);
        sp.v0 = v0;
    }

    sp.context = ctx;
    return sp;
}

/// Build one SCA block at the given anchor. FixPowerBandwidth yields the
/// assignment LP; FixAssignment yields the power/bandwidth program.
inline ConvexSubproblem build_subproblem(const ProblemSpec& spec, const AllocationState& anchor,
                                         FixedBlock fixed) {
    spec.validate();
    if (spec.mode != Mode::ESB && spec.num_subbands() * spec.delta > spec.b_bar_tot()) {
        ConvexSubproblem sp;
        sp.feasible = false;
        sp.infeasibility = "S * delta exceeds usable bandwidth budget";
        return sp;
    }
    if (static_cast<double>(spec.num_subbands()) * spec.b_max < spec.b_bar_tot()) {
        ConvexSubproblem sp;
        sp.feasible = false;
        sp.infeasibility = "S * B_max below the bandwidth budget";
        return sp;
    }
    return fixed == FixedBlock::FixPowerBandwidth ? build_assignment_lp(spec, anchor)
                                                  : build_power_block(spec, anchor);
}

}  // namespace thz
