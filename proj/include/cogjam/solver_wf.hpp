#pragma once

// Delay-tolerant jamming solver against a water-filling transmitter: the
// transmitter re-allocates its power over fading states in response to the
// jamming profile, coupling all states through the water-level dual `beta`.
// The search runs in three layers: an outer scan over beta within its
// feasible regime, a bisection over the rate-ratio target t per beta, and a
// 3-D dual (mu, lambda, zeta) ellipsoid per (beta, t). Loop-back gains are
// ignored throughout (perfect-cancellation model).

#include <array>
#include <utility>
#include <vector>

#include "cogjam/fading.hpp"
#include "cogjam/metrics.hpp"

namespace cogjam {

struct WaterfillProfile {
    double beta = 0.0;      // dual water-level parameter; level = 1/(ln2*beta)
    std::vector<double> p;  // per-state transmit powers
};

/// Transmitter's best response to a jamming profile: powers
/// p = [1/(ln2*beta) - (g2*q + sigma0^2)/g0]^+ with beta bisected so the
/// weighted mean power equals P.
WaterfillProfile waterfill(const StateEnsemble& ensemble, const JammingPolicy& policy, double P,
                           const NoiseModel& noise);

/// Water-level dual under no jamming; the upper end of the feasible regime.
double beta_max(const StateEnsemble& ensemble, double P, const NoiseModel& noise);

/// Whether some budget-feasible jamming profile lets the transmitter meet its
/// average power exactly at this beta (2-D dual check over (lambda, zeta)).
bool feasibility_beta(const StateEnsemble& ensemble, double P, const NoiseModel& noise, double Q,
                      double beta);

/// Lower end of the feasible beta regime, found by bisection over
/// (0, beta_max]; equals beta_max when the budget buys nothing (Q = 0).
double beta_min(const StateEnsemble& ensemble, double P, const NoiseModel& noise, double Q);

struct SubproblemP3 {
    double q = 0.0;
    double value = 0.0;
    // Candidate picked: jam the state dead (transmitter allocates nothing),
    // jam to the rate-equality point, or concede failure at the stationary
    // point of the failure branch.
    enum class Branch { kill, success, failure } branch = Branch::failure;
};

/// Per-state maximizer of mu*(X - t)*r0 - lambda*q - zeta*p over q >= 0 at a
/// fixed water-level dual beta.
SubproblemP3 dual_subproblem_p3(const FadingState& state, const NoiseModel& noise, double beta,
                                double mu, double lambda, double zeta, double t);

struct FeasibilityP33 {
    bool feasible = false;
    JammingPolicy policy;            // budget-repaired
    TxPowerProfile tx;               // transmitter re-waterfilled against `policy`
    double achieved = 0.0;           // relative rate under the re-waterfilled response
    std::array<double, 3> duals{};   // (mu, lambda, zeta)
};

FeasibilityP33 feasibility_p33(const StateEnsemble& ensemble, double P, const NoiseModel& noise,
                               double Q, double beta, double t);

struct BetaScanPoint {
    double beta = 0.0;
    double t_achieved = 0.0;     // relative rate of the best recovered policy
    double feasible_tmax = 0.0;  // dual-feasible lower bound from the t-bisection
    double avg_jam_power = 0.0;
};

struct WfSolution {
    JammingPolicy policy;
    TxPowerProfile tx;
    double beta_star = 0.0;
    double t_star = 0.0;
    std::array<double, 3> duals{};
    std::pair<double, double> beta_regime{0.0, 0.0};  // (beta_min, beta_max)
    std::vector<BetaScanPoint> beta_scan;
};

/// Outer search: uniform beta grid over the feasible regime (optionally
/// refined by golden-section around the grid argmax), inner t-bisection per
/// beta, best achieved policy wins; ties resolve to the smaller beta.
WfSolution solve_wf(const StateEnsemble& ensemble, double P, const NoiseModel& noise, double Q,
                    int beta_grid_size = 32, bool golden_refine = false, double t_tol = 1e-3);

}  // namespace cogjam
