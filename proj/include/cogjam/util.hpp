#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>

namespace cogjam {

/// Raised for invalid user-supplied configuration (bad variances, empty sweeps, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a caller violates an API contract (mismatched lengths, bad brackets, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Raised when a numerical routine fails to converge or loses validity.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Kahan-compensated accumulator. Summation order is the caller's insertion
/// order, which we keep fixed everywhere so aggregates are reproducible.
class KahanSum {
public:
    void add(double x) {
        const double y = x - compensation_;
        const double t = total_ + y;
        compensation_ = (t - total_) - y;
        total_ = t;
    }
    double value() const { return total_; }

private:
    double total_ = 0.0;
    double compensation_ = 0.0;
};

/// Weighted sum over states in fixed index order with compensated summation.
template <typename F>
double weighted_sum(std::span<const double> weights, F&& term) {
    KahanSum acc;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc.add(weights[i] * term(i));
    }
    return acc.value();
}

/// Shortest-faithful decimal text for a double (17 significant digits).
inline std::string fmt_float(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace cogjam
