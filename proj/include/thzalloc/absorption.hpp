#pragma once

// Molecular-absorption physics: K(f) tables, the exponential surrogate
// K^(f) = exp(s1 + s2 f) + s3, slope-region detection, and THz path gain.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "thzalloc/common.hpp"

namespace thz {

/// Tabulated molecular absorption coefficient, ascending in frequency.
class AbsorptionTable {
  public:
    AbsorptionTable(std::vector<double> f_hz, std::vector<double> k_per_m)
        : f_(std::move(f_hz)), k_(std::move(k_per_m)) {
        if (f_.size() != k_.size() || f_.size() < 3)
            throw InvariantError("AbsorptionTable: need >= 3 (f, K) samples");
        for (size_t n = 0; n < f_.size(); ++n) {
            if (n > 0 && f_[n] <= f_[n - 1])
                throw InvariantError("AbsorptionTable: frequencies must be strictly increasing");
            if (k_[n] < 0.0) throw InvariantError("AbsorptionTable: coefficients must be >= 0");
        }
    }

    const std::vector<double>& frequencies() const { return f_; }
    const std::vector<double>& coefficients() const { return k_; }
    double f_min() const { return f_.front(); }
    double f_max() const { return f_.back(); }
    size_t size() const { return f_.size(); }

    /// Linear interpolation of K at f; f must lie within the table range.
    double k_at(double f) const {
        if (f < f_min() || f > f_max())
            throw RangeError("AbsorptionTable: frequency outside table range");
        auto it = std::lower_bound(f_.begin(), f_.end(), f);
        size_t hi = static_cast<size_t>(it - f_.begin());
        if (hi == 0) return k_.front();
        if (hi >= f_.size()) return k_.back();
        size_t lo = hi - 1;
        double w = (f - f_[lo]) / (f_[hi] - f_[lo]);
        return k_[lo] + w * (k_[hi] - k_[lo]);
    }

    /// CSV with header "f_hz,k_per_m", ascending rows.
    static AbsorptionTable load_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw RangeError("AbsorptionTable: cannot open " + path);
        std::string line;
        std::getline(in, line);  // header
        std::vector<double> f, k;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string a, b;
            std::getline(ss, a, ',');
            std::getline(ss, b, ',');
            f.push_back(std::stod(a));
            k.push_back(std::stod(b));
        }
        return AbsorptionTable(std::move(f), std::move(k));
    }

    void save_csv(const std::string& path) const {
        std::ofstream out(path);
        out << "f_hz,k_per_m\n";
        char buf[64];
        for (size_t n = 0; n < f_.size(); ++n) {
            std::snprintf(buf, sizeof buf, "%.10e,%.10e\n", f_[n], k_[n]);
            out << buf;
        }
    }

  private:
    std::vector<double> f_;
    std::vector<double> k_;
};

/// Fitted exponential surrogate for K(f) over a band.
struct AbsorptionFit {
    double sigma1 = 0.0;   // dimensionless
    double sigma2 = 0.0;   // 1/Hz; > 0 for a PACSR fit, < 0 for NACSR
    double sigma3 = 0.0;   // 1/m additive floor
    double f_lo = 0.0;     // Hz
    double f_hi = 0.0;     // Hz
    double residual = 0.0; // RMS 1/m over the fitted samples
    bool degenerate = false;  // constant model explained the data at least as well
};

enum class RegionKind { PACSR, NACSR, ACPR, TWFlat };

struct SlopeRegion {
    RegionKind kind;
    double f_lo;  // Hz
    double f_hi;  // Hz
};

inline const char* to_string(RegionKind k) {
    switch (k) {
        case RegionKind::PACSR: return "PACSR";
        case RegionKind::NACSR: return "NACSR";
        case RegionKind::ACPR: return "ACPR";
        default: return "TW-flat";
    }
}

/// K^(f) = exp(sigma1 + sigma2 f) + sigma3.
inline double k_hat(const AbsorptionFit& fit, double f) {
    return std::exp(fit.sigma1 + fit.sigma2 * f) + fit.sigma3;
}

inline double k_hat_derivative(const AbsorptionFit& fit, double f) {
    return fit.sigma2 * std::exp(fit.sigma1 + fit.sigma2 * f);
}

/// |H(f,d)|^2 = (c / (4 pi f d))^2 * exp(-K d).
inline double channel_power_gain(double f, double d, double K) {
    if (f <= 0.0 || d <= 0.0) throw DomainError("channel_power_gain: need f > 0 and d > 0");
    if (K < 0.0) throw DomainError("channel_power_gain: need K >= 0");
    double spread = kSpeedOfLight / (4.0 * M_PI * f * d);
    return spread * spread * std::exp(-K * d);
}

namespace detail {

struct ExpFitWork {
    double sigma1, sigma2, sse;
};

// Linear LS of log(K - s3) = s1 + s2 f, then SSE of the full model in K space.
inline ExpFitWork fit_given_sigma3(const std::vector<double>& f, const std::vector<double>& k,
                                   double s3) {
    size_t n = f.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double f0 = f.front();  // center the abscissa for conditioning
    for (size_t m = 0; m < n; ++m) {
        double y = std::log(std::max(k[m] - s3, 1e-300));
        double x = f[m] - f0;
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double dn = static_cast<double>(n);
    double denom = dn * sxx - sx * sx;
    double s2 = (dn * sxy - sx * sy) / denom;
    double s1c = (sy - s2 * sx) / dn;
    double s1 = s1c - s2 * f0;
    double sse = 0;
    for (size_t m = 0; m < n; ++m) {
        double r = std::exp(s1 + s2 * f[m]) + s3 - k[m];
        sse += r * r;
    }
    return {s1, s2, sse};
}

// One Gauss-Newton refinement pass on (s1, s2, s3); returns false if it stalls.
inline bool gauss_newton_refine(const std::vector<double>& f, const std::vector<double>& k,
                                double& s1, double& s2, double& s3) {
    for (int it = 0; it < 60; ++it) {
        // Normal equations for residual r_m = exp(s1 + s2 f) + s3 - k.
        double A[3][3] = {};
        double b[3] = {};
        double sse = 0;
        for (size_t m = 0; m < f.size(); ++m) {
            double e = std::exp(s1 + s2 * f[m]);
            double r = e + s3 - k[m];
            double J[3] = {e, e * f[m], 1.0};
            for (int a = 0; a < 3; ++a) {
                b[a] -= J[a] * r;
                for (int c = 0; c < 3; ++c) A[a][c] += J[a] * J[c];
            }
            sse += r * r;
        }
        // Solve 3x3 via Cramer with Levenberg damping.
        double lam = 1e-12 * (A[0][0] + A[1][1] + A[2][2]);
        for (int a = 0; a < 3; ++a) A[a][a] += lam;
        double det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                     A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                     A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
        if (std::abs(det) < 1e-300) return false;
        auto solve = [&](int col) {
            double M[3][3];
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) M[a][c] = (c == col) ? b[a] : A[a][c];
            return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                    M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                    M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])) / det;
        };
        double d1 = solve(0), d2 = solve(1), d3 = solve(2);
        double step = 1.0;
        double ns1 = s1, ns2 = s2, ns3 = s3;
        for (int bt = 0; bt < 30; ++bt) {
            ns1 = s1 + step * d1;
            ns2 = s2 + step * d2;
            ns3 = std::max(0.0, s3 + step * d3);
            double nsse = 0;
            for (size_t m = 0; m < f.size(); ++m) {
                double r = std::exp(ns1 + ns2 * f[m]) + ns3 - k[m];
                nsse += r * r;
            }
            if (nsse <= sse) break;
            step *= 0.5;
        }
        double moved = std::abs(ns1 - s1) + std::abs(ns2 - s2) * f.back() + std::abs(ns3 - s3);
        s1 = ns1; s2 = ns2; s3 = ns3;
        if (moved < 1e-14) break;
    }
    return true;
}

}  // namespace detail

/// Least-squares fit of exp(s1 + s2 f) + s3 to the table samples on [band].
/// `reflect` fits on a reversed frequency axis (NACSR support); the returned
/// fit then carries sigma2 < 0 and evaluates directly via k_hat.
inline AbsorptionFit fit_exponential(const AbsorptionTable& table, double f_lo, double f_hi,
                                     bool reflect = false) {
    if (f_lo < table.f_min() || f_hi > table.f_max() || f_lo >= f_hi)
        throw RangeError("fit_exponential: band outside table range");
    std::vector<double> f, k;
    for (size_t n = 0; n < table.size(); ++n) {
        double fn = table.frequencies()[n];
        if (fn >= f_lo && fn <= f_hi) {
            f.push_back(fn);
            k.push_back(table.coefficients()[n]);
        }
    }
    if (f.size() < 3) throw InvariantError("fit_exponential: fewer than 3 samples in band");

    if (reflect) {
        // Fit K~(u) on u = f_lo + f_hi - f, which must be increasing in u.
        std::vector<double> fr(f.size()), kr(f.size());
        for (size_t n = 0; n < f.size(); ++n) {
            fr[n] = f_lo + f_hi - f[f.size() - 1 - n];
            kr[n] = k[f.size() - 1 - n];
        }
        AbsorptionTable t2(fr, kr);
        AbsorptionFit g = fit_exponential(t2, f_lo, f_hi, false);
        AbsorptionFit out = g;
        out.sigma1 = g.sigma1 + g.sigma2 * (f_lo + f_hi);
        out.sigma2 = -g.sigma2;
        out.f_lo = f_lo;
        out.f_hi = f_hi;
        return out;
    }

    for (size_t n = 1; n < k.size(); ++n)
        if (k[n] <= k[n - 1])
            throw InvariantError(
                "fit_exponential: K not strictly increasing on band (region mismatch; "
                "use reflect for an NACSR)");

    double kmin = *std::min_element(k.begin(), k.end());
    // Seed sigma3 by golden-section search on [0, kmin).
    double lo = 0.0, hi = kmin * (1.0 - 1e-9);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = detail::fit_given_sigma3(f, k, a).sse;
    double fb = detail::fit_given_sigma3(f, k, b).sse;
    for (int it = 0; it < 200; ++it) {
        if (fa < fb) {
            hi = b; b = a; fb = fa;
            a = hi - gr * (hi - lo);
            fa = detail::fit_given_sigma3(f, k, a).sse;
        } else {
            lo = a; a = b; fa = fb;
            b = lo + gr * (hi - lo);
            fb = detail::fit_given_sigma3(f, k, b).sse;
        }
        if (hi - lo < 1e-12 * kmin) break;
    }
    double s3 = 0.5 * (lo + hi);
    auto w = detail::fit_given_sigma3(f, k, s3);
    double s1 = w.sigma1, s2 = w.sigma2;
    detail::gauss_newton_refine(f, k, s1, s2, s3);

    AbsorptionFit fit;
    fit.sigma1 = s1;
    fit.sigma2 = s2;
    fit.sigma3 = s3;
    fit.f_lo = f_lo;
    fit.f_hi = f_hi;
    double sse = 0;
    for (size_t n = 0; n < f.size(); ++n) {
        double r = k_hat(fit, f[n]) - k[n];
        sse += r * r;
    }
    fit.residual = std::sqrt(sse / static_cast<double>(f.size()));

    // Compare against the constant model K = mean(k); flag a degenerate fit.
    double mean = 0;
    for (double v : k) mean += v;
    mean /= static_cast<double>(k.size());
    double sse_const = 0;
    for (double v : k) sse_const += (v - mean) * (v - mean);
    if (sse_const <= sse) {
        fit.degenerate = true;
        fit.sigma1 = std::log(1e-300);  // exponential amplitude floored
        fit.sigma2 = 0.0;
        fit.sigma3 = mean;
        fit.residual = std::sqrt(sse_const / static_cast<double>(k.size()));
    }
    return fit;
}

namespace detail {

template <typename F>
double adaptive_simpson(F&& fn, double a, double b, double fa, double fm, double fb, double tol,
                        int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = fn(lm), frm = fn(rm);
    double h = b - a;
    double whole = h / 6.0 * (fa + 4.0 * fm + fb);
    double left = h / 12.0 * (fa + 4.0 * flm + fm);
    double right = h / 12.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(fn, a, m, fa, flm, fm, tol / 2.0, depth - 1) +
           adaptive_simpson(fn, m, b, fm, frm, fb, tol / 2.0, depth - 1);
}

}  // namespace detail

/// Band-mean power gain (1/B) * integral of |H(f,d)|^2 over [fc - B/2, fc + B/2],
/// with K from a table (interpolated). Adaptive Simpson, tolerance relative to
/// the center-frequency gain.
inline double band_averaged_gain(const AbsorptionTable& table, double f_center, double B,
                                 double d) {
    if (B <= 0.0) throw DomainError("band_averaged_gain: need B > 0");
    double a = f_center - 0.5 * B, b = f_center + 0.5 * B;
    if (a < table.f_min() || b > table.f_max())
        throw RangeError("band_averaged_gain: band exits table range");
    auto integrand = [&](double f) { return channel_power_gain(f, d, table.k_at(f)); };
    double center = integrand(f_center);
    double tol = 1e-4 * center * B;
    double integral = detail::adaptive_simpson(integrand, a, b, integrand(a), center,
                                               integrand(b), tol, 40);
    return integral / B;
}

/// Same, with K from a fitted surrogate.
inline double band_averaged_gain(const AbsorptionFit& fit, double f_center, double B, double d) {
    if (B <= 0.0) throw DomainError("band_averaged_gain: need B > 0");
    double a = f_center - 0.5 * B, b = f_center + 0.5 * B;
    auto integrand = [&](double f) { return channel_power_gain(f, d, k_hat(fit, f)); };
    double center = integrand(f_center);
    double tol = 1e-4 * center * B;
    double integral = detail::adaptive_simpson(integrand, a, b, integrand(a), center,
                                               integrand(b), tol, 40);
    return integral / B;
}

/// Partition the table range into maximal slope-sign runs inside TWs
/// (K < threshold) and ACPRs (K >= threshold). Output tiles the range.
inline std::vector<SlopeRegion> detect_regions(const AbsorptionTable& table,
                                               double k_tw_threshold = 1.0) {
    const auto& f = table.frequencies();
    const auto& k = table.coefficients();
    std::vector<SlopeRegion> out;
    auto classify = [&](size_t n) {
        // Interval [f_n, f_{n+1}].
        if (k[n] >= k_tw_threshold || k[n + 1] >= k_tw_threshold) return RegionKind::ACPR;
        if (k[n + 1] > k[n]) return RegionKind::PACSR;
        if (k[n + 1] < k[n]) return RegionKind::NACSR;
        return RegionKind::TWFlat;
    };
    for (size_t n = 0; n + 1 < f.size(); ++n) {
        RegionKind kind = classify(n);
        if (!out.empty() && out.back().kind == kind) {
            out.back().f_hi = f[n + 1];
        } else {
            out.push_back({kind, f[n], f[n + 1]});
        }
    }
    return out;
}

}  // namespace thz
