#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace thz {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Invariant or precondition violation on a domain object.
struct InvariantError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Value outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Requested data lies outside the available table/fit range.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// dBm to watts.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (int k = 0; k < n; ++k) v[static_cast<size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    return v;
}

}  // namespace thz
