#pragma once

// Dense two-phase primal simplex with explicit variable bounds (nonbasic
// variables rest at either bound; the ratio test allows bound flips).
// Bland's rule is used throughout, so the method cannot cycle. Problem sizes
// in this library are tiny (tens of rows, hundreds of columns), so the basis
// is refactorized from scratch every pivot.

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "thzalloc/common.hpp"

namespace thz::detail {

struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded, IterLimit };
    Status status = Status::IterLimit;
    Eigen::VectorXd x;   // structural variables only
    double objective = 0.0;
};

class BoundedSimplex {
  public:
    // minimize c'x  s.t.  A x = b,  lb <= x <= ub  (ub may be +inf).
    // Callers add slack columns for inequalities before constructing.
    BoundedSimplex(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd lb, Eigen::VectorXd ub)
        : a_(std::move(a)), b_(std::move(b)), lb_(std::move(lb)), ub_(std::move(ub)) {}

    LpResult minimize(const Eigen::VectorXd& c, int max_iters = 20000) {
        const int m = static_cast<int>(a_.rows());
        const int n = static_cast<int>(a_.cols());
        // Phase 1: artificial columns form the initial basis.
        Eigen::MatrixXd A(m, n + m);
        A.leftCols(n) = a_;
        A.rightCols(m).setZero();
        Eigen::VectorXd lb(n + m), ub(n + m);
        lb.head(n) = lb_;
        ub.head(n) = ub_;
        lb.tail(m).setZero();
        ub.tail(m).setConstant(kInf);

        status_.assign(static_cast<size_t>(n + m), AtLower);
        x_ = Eigen::VectorXd::Zero(n + m);
        for (int j = 0; j < n; ++j) {
            if (std::isfinite(lb(j)))
                x_(j) = lb(j);
            else if (std::isfinite(ub(j))) {
                x_(j) = ub(j);
                status_[static_cast<size_t>(j)] = AtUpper;
            } else
                x_(j) = 0.0;
        }
        Eigen::VectorXd resid = b_ - A.leftCols(n) * x_.head(n);
        basis_.resize(static_cast<size_t>(m));
        for (int r = 0; r < m; ++r) {
            A(r, n + r) = resid(r) >= 0.0 ? 1.0 : -1.0;
            x_(n + r) = std::abs(resid(r));
            basis_[static_cast<size_t>(r)] = n + r;
            status_[static_cast<size_t>(n + r)] = Basic;
        }
        Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
        c1.tail(m).setOnes();
        LpResult res;
        if (!iterate(A, c1, lb, ub, max_iters)) {
            res.status = LpResult::Status::IterLimit;
            return res;
        }
        double b_scale = m > 0 ? b_.cwiseAbs().maxCoeff() : 0.0;
        if (x_.tail(m).sum() > 1e-7 * (1.0 + b_scale)) {
            res.status = LpResult::Status::Infeasible;
            return res;
        }
        // Phase 2: lock the artificials at zero and optimize the real cost.
        for (int r = 0; r < m; ++r) {
            lb(n + r) = 0.0;
            ub(n + r) = 0.0;
        }
        Eigen::VectorXd c2 = Eigen::VectorXd::Zero(n + m);
        c2.head(n) = c;
        if (!iterate(A, c2, lb, ub, max_iters)) {
            res.status = LpResult::Status::IterLimit;
            return res;
        }
        if (unbounded_) {
            res.status = LpResult::Status::Unbounded;
            return res;
        }
        res.status = LpResult::Status::Optimal;
        res.x = x_.head(n);
        res.objective = c.dot(res.x);
        return res;
    }

  private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    static constexpr double kTol = 1e-9;
    enum VarStatus { AtLower, AtUpper, Basic };

    Eigen::MatrixXd a_;
    Eigen::VectorXd b_, lb_, ub_;
    Eigen::VectorXd x_;
    std::vector<int> basis_;
    std::vector<VarStatus> status_;
    bool unbounded_ = false;

    // Runs primal simplex to optimality. Returns false on iteration limit.
    // Pricing is Dantzig (steepest reduced cost); after a long degenerate
    // streak it switches to Bland's rule, which cannot cycle.
    bool iterate(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, const Eigen::VectorXd& lb,
                 const Eigen::VectorXd& ub, int max_iters) {
        const int m = static_cast<int>(A.rows());
        const int nt = static_cast<int>(A.cols());
        unbounded_ = false;
        int degenerate_streak = 0;
        bool bland = false;
        for (int it = 0; it < max_iters; ++it) {
            Eigen::MatrixXd B(m, m);
            Eigen::VectorXd cB(m);
            for (int r = 0; r < m; ++r) {
                B.col(r) = A.col(basis_[static_cast<size_t>(r)]);
                cB(r) = c(basis_[static_cast<size_t>(r)]);
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
            // Recompute the basic values from scratch to stop numerical drift
            // across pivots.
            Eigen::VectorXd rhs = b_;
            for (int j = 0; j < nt; ++j)
                if (status_[static_cast<size_t>(j)] != Basic && x_(j) != 0.0)
                    rhs -= A.col(j) * x_(j);
            Eigen::VectorXd xB = lu.solve(rhs);
            for (int r = 0; r < m; ++r) x_(basis_[static_cast<size_t>(r)]) = xB(r);
            Eigen::VectorXd y = lu.transpose().solve(cB);

            int enter = -1;
            double dir = 0.0, best = kTol;
            for (int j = 0; j < nt; ++j) {
                if (status_[static_cast<size_t>(j)] == Basic) continue;
                if (lb(j) == ub(j)) continue;  // fixed
                double d = c(j) - y.dot(A.col(j));
                double improve = status_[static_cast<size_t>(j)] == AtLower ? -d : d;
                if (improve > best) {
                    enter = j;
                    dir = status_[static_cast<size_t>(j)] == AtLower ? 1.0 : -1.0;
                    best = improve;
                    if (bland) break;  // lowest improving index
                }
            }
            if (enter < 0) return true;  // optimal

            Eigen::VectorXd w = lu.solve(A.col(enter));  // x_B changes by -dir*w per step
            double step = std::isfinite(ub(enter)) && std::isfinite(lb(enter))
                              ? ub(enter) - lb(enter)
                              : kInf;
            int leave = -1;       // row index of leaving basic variable
            bool leave_up = false;  // leaving variable hits its upper bound
            for (int r = 0; r < m; ++r) {
                double delta = -dir * w(r);
                int jb = basis_[static_cast<size_t>(r)];
                double cand;
                bool hits_up;
                if (delta > kTol) {
                    cand = (ub(jb) - x_(jb)) / delta;
                    hits_up = true;
                } else if (delta < -kTol) {
                    cand = (lb(jb) - x_(jb)) / delta;
                    hits_up = false;
                } else
                    continue;
                if (!std::isfinite(cand)) continue;
                cand = std::max(cand, 0.0);
                // Bland tie-break: prefer the smaller step, then the smaller
                // basic variable index.
                if (cand < step - kTol ||
                    (cand < step + kTol && leave >= 0 &&
                     jb < basis_[static_cast<size_t>(leave)])) {
                    step = cand;
                    leave = r;
                    leave_up = hits_up;
                }
            }
            if (!std::isfinite(step)) {
                unbounded_ = true;
                return true;
            }
            if (step < 1e-12) {
                if (++degenerate_streak > 2 * m + 50) bland = true;
            } else {
                degenerate_streak = 0;
            }
            // Apply the step.
            x_(enter) += dir * step;
            for (int r = 0; r < m; ++r) x_(basis_[static_cast<size_t>(r)]) -= dir * step * w(r);
            if (leave < 0) {
                // bound flip: entering variable moved to its other bound
                status_[static_cast<size_t>(enter)] = dir > 0.0 ? AtUpper : AtLower;
                x_(enter) = dir > 0.0 ? ub(enter) : lb(enter);
            } else {
                int jb = basis_[static_cast<size_t>(leave)];
                status_[static_cast<size_t>(jb)] = leave_up ? AtUpper : AtLower;
                x_(jb) = leave_up ? ub(jb) : lb(jb);
                basis_[static_cast<size_t>(leave)] = enter;
                status_[static_cast<size_t>(enter)] = Basic;
            }
        }
        return false;
    }
};

/// minimize c'x  s.t.  A_eq x = b_eq, A_in x <= b_in, lb <= x <= ub.
inline LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a_eq,
                         const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& a_in,
                         const Eigen::VectorXd& b_in, const Eigen::VectorXd& lb,
                         const Eigen::VectorXd& ub) {
    const int n = static_cast<int>(c.size());
    const int me = static_cast<int>(a_eq.rows());
    const int mi = static_cast<int>(a_in.rows());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(me + mi, n + mi);
    Eigen::VectorXd b(me + mi), lbt(n + mi), ubt(n + mi), ct = Eigen::VectorXd::Zero(n + mi);
    if (me > 0) {
        A.topLeftCorner(me, n) = a_eq;
        b.head(me) = b_eq;
    }
    if (mi > 0) {
        A.bottomLeftCorner(mi, n) = a_in;
        A.bottomRightCorner(mi, mi).setIdentity();
        b.tail(mi) = b_in;
    }
    lbt.head(n) = lb;
    ubt.head(n) = ub;
    lbt.tail(mi).setZero();
    ubt.tail(mi).setConstant(std::numeric_limits<double>::infinity());
    ct.head(n) = c;
    BoundedSimplex simplex(A, b, lbt, ubt);
    LpResult res = simplex.minimize(ct);
    if (res.status == LpResult::Status::Optimal) res.x = res.x.head(n).eval();
    return res;
}

}  // namespace thz::detail
