#pragma once

// Log-barrier interior-point method for the smooth concave block. The inner
// minimizations use limited-memory BFGS with an Armijo backtracking line
// search that treats any point outside the strict interior as +infinity.
// All constraint functions supply analytic gradients.

#include <Eigen/Dense>
#include <deque>

#include "thzalloc/model.hpp"

namespace thz::detail {

struct BarrierResult {
    enum class Status { Converged, IterLimit, BadStart };
    Status status = Status::IterLimit;
    Eigen::VectorXd v;
    double objective = 0.0;  // c'v at the returned point
    double gap = 0.0;        // mu * (number of barrier terms), duality-gap proxy
    int inner_iterations = 0;
};

class BarrierSolver {
  public:
    explicit BarrierSolver(const ConvexSubproblem& sp) : sp_(sp) {}

    BarrierResult solve(double mu0 = 1.0, double mu_min = 1e-9, double shrink = 0.1,
                        int max_inner = 400) {
        BarrierResult res;
        Eigen::VectorXd v = sp_.v0;
        if (v.size() != sp_.num_vars || !strictly_feasible(v)) {
            res.status = BarrierResult::Status::BadStart;
            return res;
        }
        int n_terms = count_terms();
        int total_inner = 0;
        for (double mu = mu0; mu >= mu_min; mu *= shrink) {
            double tol = std::max(1e-9, 1e-2 * mu);
            total_inner += lbfgs(v, mu, tol, max_inner);
        }
        res.status = BarrierResult::Status::Converged;
        res.v = v;
        res.objective = sp_.c.dot(v);
        res.gap = mu_min / shrink * n_terms;
        res.inner_iterations = total_inner;
        return res;
    }

  private:
    const ConvexSubproblem& sp_;

    int count_terms() const {
        int n = static_cast<int>(sp_.b_in.size()) + static_cast<int>(sp_.smooth.size());
        for (int j = 0; j < sp_.num_vars; ++j) {
            if (std::isfinite(sp_.lb(j))) ++n;
            if (std::isfinite(sp_.ub(j))) ++n;
        }
        return n;
    }

    bool strictly_feasible(const Eigen::VectorXd& v) const {
        for (int j = 0; j < sp_.num_vars; ++j)
            if (v(j) <= sp_.lb(j) || v(j) >= sp_.ub(j)) return false;
        if (sp_.b_in.size() > 0 && ((sp_.b_in - sp_.a_in * v).array() <= 0.0).any()) return false;
        for (const auto& g : sp_.smooth)
            if (g.eval(v, nullptr) <= 0.0) return false;
        return true;
    }

    // Barrier objective phi(v) = -c'v - mu * sum(log terms); +inf outside the
    // strict interior. Gradient written when grad != nullptr.
    double eval(const Eigen::VectorXd& v, double mu, Eigen::VectorXd* grad) const {
        const double inf = std::numeric_limits<double>::infinity();
        double phi = -sp_.c.dot(v);
        if (grad) *grad = -sp_.c;
        for (int j = 0; j < sp_.num_vars; ++j) {
            if (std::isfinite(sp_.lb(j))) {
                double s = v(j) - sp_.lb(j);
                if (s <= 0.0) return inf;
                phi -= mu * std::log(s);
                if (grad) (*grad)(j) -= mu / s;
            }
            if (std::isfinite(sp_.ub(j))) {
                double s = sp_.ub(j) - v(j);
                if (s <= 0.0) return inf;
                phi -= mu * std::log(s);
                if (grad) (*grad)(j) += mu / s;
            }
        }
        if (sp_.b_in.size() > 0) {
            Eigen::VectorXd slack = sp_.b_in - sp_.a_in * v;
            if ((slack.array() <= 0.0).any()) return inf;
            phi -= mu * slack.array().log().sum();
            if (grad)
                for (int r = 0; r < slack.size(); ++r)
                    *grad += (mu / slack(r)) * sp_.a_in.row(r).transpose();
        }
        Eigen::VectorXd gg;
        for (const auto& g : sp_.smooth) {
            double val = g.eval(v, grad ? &gg : nullptr);
            if (val <= 0.0) return inf;
            phi -= mu * std::log(val);
            if (grad) *grad -= (mu / val) * gg;
        }
        return phi;
    }

    // Minimizes phi(., mu) from v in place; returns iterations used.
    int lbfgs(Eigen::VectorXd& v, double mu, double grad_tol, int max_inner) const {
        const int mem = 10;
        std::deque<Eigen::VectorXd> S, Y;
        Eigen::VectorXd grad(sp_.num_vars), grad_new(sp_.num_vars);
        double phi = eval(v, mu, &grad);
        int it = 0;
        for (; it < max_inner; ++it) {
            if (grad.lpNorm<Eigen::Infinity>() < grad_tol) break;
            // two-loop recursion
            Eigen::VectorXd q = grad;
            std::vector<double> alpha(S.size());
            for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
                double rho = 1.0 / Y[static_cast<size_t>(k)].dot(S[static_cast<size_t>(k)]);
                alpha[static_cast<size_t>(k)] = rho * S[static_cast<size_t>(k)].dot(q);
                q -= alpha[static_cast<size_t>(k)] * Y[static_cast<size_t>(k)];
            }
            if (!S.empty()) {
                double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
                q *= gamma;
            }
            for (size_t k = 0; k < S.size(); ++k) {
                double rho = 1.0 / Y[k].dot(S[k]);
                double beta = rho * Y[k].dot(q);
                q += (alpha[k] - beta) * S[k];
            }
            Eigen::VectorXd dir = -q;
            double slope = grad.dot(dir);
            if (slope >= 0.0) {  // fall back to steepest descent
                dir = -grad;
                slope = -grad.squaredNorm();
                S.clear();
                Y.clear();
            }
            double t = 1.0, phi_new = 0.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                Eigen::VectorXd vt = v + t * dir;
                phi_new = eval(vt, mu, nullptr);
                if (std::isfinite(phi_new) && phi_new <= phi + 1e-4 * t * slope) {
                    v = vt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;
            phi_new = eval(v, mu, &grad_new);
            Eigen::VectorXd s = t * dir;
            Eigen::VectorXd y = grad_new - grad;
            if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
                S.push_back(s);
                Y.push_back(y);
                if (static_cast<int>(S.size()) > mem) {
                    S.pop_front();
                    Y.pop_front();
                }
            }
            grad = grad_new;
            phi = phi_new;
        }
        return it;
    }
};

}  // namespace thz::detail
