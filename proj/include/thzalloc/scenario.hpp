#pragma once

// Indoor deployment geometry, blocker statistics, the closed-form
// non-blockage probability p_nb(r) = zeta * exp(-eta_B r), and a Monte-Carlo
// mobility simulator that validates it.

#include <random>

#include "thzalloc/common.hpp"

namespace thz {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Deployment {
    double room_w = 20.0;  // m
    double room_d = 20.0;  // m
    double h_ap = 3.0;     // m
    double h_user = 1.3;   // m
    std::vector<Point2> ap_positions;
    std::vector<Point2> user_positions;

    void validate() const {
        if (h_ap <= h_user) throw InvariantError("Deployment: need h_ap > h_user");
        if (ap_positions.empty() || user_positions.empty())
            throw InvariantError("Deployment: need at least one AP and one user");
        auto inside = [&](const Point2& p) {
            return p.x >= 0.0 && p.x <= room_w && p.y >= 0.0 && p.y <= room_d;
        };
        for (const auto& p : ap_positions)
            if (!inside(p)) throw InvariantError("Deployment: AP outside room");
        for (const auto& p : user_positions)
            if (!inside(p)) throw InvariantError("Deployment: user outside room");
    }
};

struct BlockerModel {
    double lambda = 0.2;  // 1/m^2
    double radius = 0.3;  // m
    double height = 1.7;  // m
    double speed = 1.0;   // m/s

    void validate(const Deployment& dep) const {
        if (lambda < 0.0) throw InvariantError("BlockerModel: lambda must be >= 0");
        if (!(dep.h_ap > height && height > dep.h_user))
            throw InvariantError("BlockerModel: need h_ap > h_blocker > h_user");
    }
};

/// Per-link horizontal distance, 3D distance, and non-blockage probability.
struct LinkTable {
    int num_users = 0;
    int num_aps = 0;
    std::vector<double> r;     // I*J horizontal, m
    std::vector<double> d;     // I*J 3D, m
    std::vector<double> p_nb;  // I*J in (0, 1]
    double zeta = 1.0;
    double eta = 0.0;  // 1/m

    size_t idx(int i, int j) const {
        return static_cast<size_t>(i) * static_cast<size_t>(num_aps) + static_cast<size_t>(j);
    }
    double r_at(int i, int j) const { return r[idx(i, j)]; }
    double d_at(int i, int j) const { return d[idx(i, j)]; }
    double p_nb_at(int i, int j) const { return p_nb[idx(i, j)]; }
    double d_max() const {
        double m = 0;
        for (double v : d) m = std::max(m, v);
        return m;
    }
};

inline double non_blockage_probability(const Deployment& dep, const BlockerModel& blk, double r) {
    double zeta = std::exp(-2.0 * blk.lambda * blk.radius * blk.radius);
    double eta = 2.0 * blk.lambda * blk.radius * (blk.height - dep.h_user) / (dep.h_ap - dep.h_user);
    return zeta * std::exp(-eta * r);
}

inline LinkTable build_links(const Deployment& dep, const BlockerModel& blk) {
    dep.validate();
    blk.validate(dep);
    LinkTable t;
    t.num_users = static_cast<int>(dep.user_positions.size());
    t.num_aps = static_cast<int>(dep.ap_positions.size());
    t.zeta = std::exp(-2.0 * blk.lambda * blk.radius * blk.radius);
    t.eta = 2.0 * blk.lambda * blk.radius * (blk.height - dep.h_user) / (dep.h_ap - dep.h_user);
    double dz = dep.h_ap - dep.h_user;
    t.r.resize(static_cast<size_t>(t.num_users) * t.num_aps);
    t.d.resize(t.r.size());
    t.p_nb.resize(t.r.size());
    for (int i = 0; i < t.num_users; ++i) {
        for (int j = 0; j < t.num_aps; ++j) {
            double dx = dep.user_positions[i].x - dep.ap_positions[j].x;
            double dy = dep.user_positions[i].y - dep.ap_positions[j].y;
            double r = std::sqrt(dx * dx + dy * dy);
            t.r[t.idx(i, j)] = r;
            t.d[t.idx(i, j)] = std::sqrt(dz * dz + r * r);
            t.p_nb[t.idx(i, j)] = t.zeta * std::exp(-t.eta * r);
        }
    }
    return t;
}

struct BlockageEstimate {
    double fraction = 1.0;   // empirical non-blocked time fraction
    double half_width = 0.0; // 95% confidence half-width across replicas
    int replicas = 0;
};

namespace detail {

// A link is blocked when the blocker center falls inside the shadowing zone
// of the closed-form model: the rectangle of half-width r_B around the
// horizontal projection of the ray sub-segment where the ray height lies in
// [h_user, h_blocker], extended by r_B/2 beyond each end (total end-cap area
// 2 r_B^2, matching the zeta factor).
inline bool blocks(double bx, double by, double ux, double uy, double ex, double ey, double rb) {
    double vx = ex - ux, vy = ey - uy;
    double wx = bx - ux, wy = by - uy;
    double len = std::sqrt(vx * vx + vy * vy);
    double along = len > 0.0 ? (wx * vx + wy * vy) / len : 0.0;
    if (along < -0.5 * rb || along > len + 0.5 * rb) return false;
    double perp2 = wx * wx + wy * wy - along * along;
    return perp2 < rb * rb;
}

}  // namespace detail

/// Time-average non-blockage fraction of link (i, j) under PPP blockers moving
/// with the random directional model (fixed heading, constant speed, toroidal
/// wrapping). Replicas are independent PPP draws; the CI comes from the
/// across-replica spread. Sampling stops once the 95% half-width drops below
/// `target_half_width` (or after `max_replicas`).
inline BlockageEstimate simulate_blockage(const Deployment& dep, const BlockerModel& blk, int i,
                                          int j, double horizon_s, double dt_s, uint64_t seed,
                                          double target_half_width = 0.0,
                                          int max_replicas = 256) {
    dep.validate();
    blk.validate(dep);
    if (dep.room_w <= 0.0 || dep.room_d <= 0.0)
        throw InvariantError("simulate_blockage: empty room");
    if (i < 0 || j < 0 || i >= static_cast<int>(dep.user_positions.size()) ||
        j >= static_cast<int>(dep.ap_positions.size()))
        throw InvariantError("simulate_blockage: link index out of range");
    if (dt_s <= 0.0) dt_s = blk.speed > 0.0 ? blk.radius / (10.0 * blk.speed) : horizon_s / 100.0;

    double ux = dep.user_positions[i].x, uy = dep.user_positions[i].y;
    double ax = dep.ap_positions[j].x, ay = dep.ap_positions[j].y;
    // Shadowing sub-segment: ray height reaches h_blocker at fraction tau.
    double tau = (blk.height - dep.h_user) / (dep.h_ap - dep.h_user);
    double ex = ux + tau * (ax - ux), ey = uy + tau * (ay - uy);
    if (blk.lambda == 0.0) return {1.0, 0.0, 1};

    std::mt19937_64 rng(seed);
    std::vector<double> fractions;
    double mean = 0.0, hw = std::numeric_limits<double>::infinity();
    int steps = std::max(1, static_cast<int>(horizon_s / dt_s));
    const int min_replicas = 8;
    for (int rep = 0; rep < max_replicas; ++rep) {
        double area = dep.room_w * dep.room_d;
        std::poisson_distribution<int> pois(blk.lambda * area);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        int nb = pois(rng);
        std::vector<double> bx(nb), by(nb), hx(nb), hy(nb);
        for (int n = 0; n < nb; ++n) {
            bx[n] = U(rng) * dep.room_w;
            by[n] = U(rng) * dep.room_d;
            double ang = U(rng) * 2.0 * M_PI;
            hx[n] = blk.speed * std::cos(ang);
            hy[n] = blk.speed * std::sin(ang);
        }
        long unblocked = 0;
        for (int s = 0; s < steps; ++s) {
            bool blocked = false;
            for (int n = 0; n < nb && !blocked; ++n)
                blocked = detail::blocks(bx[n], by[n], ux, uy, ex, ey, blk.radius);
            if (!blocked) ++unblocked;
            for (int n = 0; n < nb; ++n) {
                bx[n] += hx[n] * dt_s;
                by[n] += hy[n] * dt_s;
                // toroidal wrap keeps the spatial distribution uniform
                bx[n] -= dep.room_w * std::floor(bx[n] / dep.room_w);
                by[n] -= dep.room_d * std::floor(by[n] / dep.room_d);
            }
        }
        fractions.push_back(static_cast<double>(unblocked) / steps);
        if (static_cast<int>(fractions.size()) >= min_replicas) {
            mean = 0.0;
            for (double v : fractions) mean += v;
            mean /= fractions.size();
            double var = 0.0;
            for (double v : fractions) var += (v - mean) * (v - mean);
            var /= (fractions.size() - 1);
            hw = 1.96 * std::sqrt(var / fractions.size());
            if (target_half_width > 0.0 && hw <= target_half_width) break;
        }
    }
    if (fractions.size() < 2) {
        mean = fractions.empty() ? 1.0 : fractions[0];
        hw = 0.0;
    }
    return {mean, hw, static_cast<int>(fractions.size())};
}

struct ScenarioConfig {
    double room_w = 20.0;
    double room_d = 20.0;
    int num_users = 6;
    int num_aps = 4;
    double h_ap = 3.0;
    double h_user = 1.3;
    uint64_t seed = 1;
};

/// 20x20 m room with APs on the symmetric grid (quarter points for J = 4,
/// a regular grid otherwise) and users drawn uniformly from the given seed.
inline Deployment standard_deployment(const ScenarioConfig& cfg) {
    Deployment dep;
    dep.room_w = cfg.room_w;
    dep.room_d = cfg.room_d;
    dep.h_ap = cfg.h_ap;
    dep.h_user = cfg.h_user;
    if (cfg.num_aps == 4) {
        dep.ap_positions = {{0.25 * cfg.room_w, 0.25 * cfg.room_d},
                            {0.25 * cfg.room_w, 0.75 * cfg.room_d},
                            {0.75 * cfg.room_w, 0.25 * cfg.room_d},
                            {0.75 * cfg.room_w, 0.75 * cfg.room_d}};
    } else {
        int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.num_aps))));
        for (int n = 0; n < cfg.num_aps; ++n) {
            int gx = n % side, gy = n / side;
            dep.ap_positions.push_back({(gx + 0.5) * cfg.room_w / side,
                                        (gy + 0.5) * cfg.room_d / side});
        }
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int n = 0; n < cfg.num_users; ++n) {
        double x = U(rng) * cfg.room_w;
        double y = U(rng) * cfg.room_d;
        dep.user_positions.push_back({x, y});
    }
    dep.validate();
    return dep;
}

}  // namespace thz
