#pragma once

// Shared numerical kernels: scalar bisection, the central-cut ellipsoid
// method for the 2-D and 3-D dual searches, and a brute-force jamming
// allocator used as an independent oracle in tests.

#include <functional>
#include <optional>
#include <vector>

#include "cogjam/fading.hpp"
#include "cogjam/metrics.hpp"

namespace cogjam {

struct BisectionSpec {
    double lo = 0.0;
    double hi = 0.0;
    double tol_abs = 0.0;
    double tol_rel = 1e-12;
    int max_iter = 200;
};

/// Root of a sign-changing residual on [lo, hi]. The final bracket always
/// contains the returned midpoint and its width is <= max(tol_abs, tol_rel*|x|).
double bisect_monotone(const std::function<double(double)>& residual, const BisectionSpec& spec);

/// Smallest x in [lo, hi] where a monotone predicate turns true.
double bisect_predicate(const std::function<bool(double)>& predicate, const BisectionSpec& spec);

/// Ellipsoid {x : (x-c)^T P^{-1} (x-c) <= 1} stored as center c and shape P
/// (row-major, symmetric positive definite).
struct Ellipsoid {
    std::vector<double> center;
    std::vector<double> shape;

    std::size_t dim() const { return center.size(); }
    double shape_at(std::size_t i, std::size_t j) const { return shape[i * dim() + j]; }

    static Ellipsoid ball(std::vector<double> center, double radius);
};

enum class EllipsoidStatus { converged, early_exit, iteration_cap };

struct EllipsoidStop {
    double size_tol = 1e-7;  // stop when sqrt(g^T P g) falls below this
    int max_iter = 2000;
};

/// Exit as soon as an oracle value drops below threshold * (1 + norm_scale *
/// ||x||). A zero norm_scale gives a plain value threshold; the scaled form
/// keeps positively homogeneous dual functions from tripping the exit on
/// rounding noise amplified by large dual points.
struct EarlyExit {
    double threshold = 0.0;
    double norm_scale = 0.0;
};

struct EllipsoidResult {
    std::vector<double> point;  // best feasible query point seen
    double value = 0.0;         // oracle value at `point`
    EllipsoidStatus status = EllipsoidStatus::converged;
    int iterations = 0;
    int restarts = 0;
    Ellipsoid final_state;      // ellipsoid after the last update
};

/// value + subgradient of the convex objective at a feasible query point.
using SubgradientOracle =
    std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>;

/// Central-cut ellipsoid minimization. Coordinates flagged in `nonneg` are
/// constrained to be >= 0: the query point passed to the oracle is the center
/// projected onto the feasible orthant, and when the center itself is outside
/// the cut uses the violated constraint's gradient instead of the oracle
/// subgradient. Returns early with status `early_exit` as soon as an oracle
/// value drops below `early_exit_below` (used to certify infeasibility).
EllipsoidResult ellipsoid_minimize(const SubgradientOracle& oracle, Ellipsoid init,
                                   const EllipsoidStop& stop,
                                   std::optional<EarlyExit> early_exit,
                                   const std::vector<bool>& nonneg);

/// ellipsoid_minimize on a ball around `center`, restarting with a 10x radius
/// (up to 3 restarts) when the minimizer appears to sit on the initial
/// boundary, i.e. the ball was likely too small to contain the dual optimum.
EllipsoidResult dual_search(const SubgradientOracle& oracle, std::vector<double> center,
                            double radius, const EllipsoidStop& stop,
                            std::optional<EarlyExit> early_exit,
                            const std::vector<bool>& nonneg);

enum class JamObjective { non_outage, relative_rate_fixed_p };

struct BruteForceResult {
    std::vector<double> allocation;
    double value = 0.0;
};

/// Exhaustive search over per-state candidate jamming powers. Keeps
/// allocations whose weighted average power is within the budget and returns
/// a maximizer of the objective. Throws ContractError when the combination
/// count exceeds `max_combinations`.
BruteForceResult brute_force_jam(const StateEnsemble& ensemble, const NoiseModel& noise,
                                 double P, double Q,
                                 const std::vector<std::vector<double>>& grids,
                                 JamObjective objective,
                                 std::size_t max_combinations = 10'000'000);

}  // namespace cogjam
