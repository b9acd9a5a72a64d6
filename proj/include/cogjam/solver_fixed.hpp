#pragma once

// Delay-tolerant jamming solver under fixed transmit power: maximize the
// relative eavesdropping rate by bisecting over a rate-ratio target t, each
// step checking feasibility through a 2-D dual (mu, lambda) minimized with
// the ellipsoid method and closed-form per-state subproblems. Loop-back
// gains are ignored throughout (perfect-cancellation model).

#include <array>
#include <vector>

#include "cogjam/fading.hpp"
#include "cogjam/metrics.hpp"

namespace cogjam {

struct SubproblemP2 {
    double q = 0.0;
    double value = 0.0;
    bool success = false;  // monitor decodes after jamming q
};

/// Per-state maximizer of mu*(X - t)*r0 - lambda*q over q >= 0. Either jams
/// to the rate-equality point (success) or picks the interior stationary
/// point of the failure branch, whichever achieves the larger value.
SubproblemP2 dual_subproblem_p2(const FadingState& state, double P, const NoiseModel& noise,
                                double mu, double lambda, double t);

struct DualValueP2 {
    double value = 0.0;                    // dual function at (mu, lambda)
    std::array<double, 2> subgradient{};   // (E[(X-t) r0], Q - E[q])
};

DualValueP2 dual_value_p2(const StateEnsemble& ensemble, double P, const NoiseModel& noise,
                          double Q, double mu, double lambda, double t);

struct FeasibilityP22 {
    bool feasible = false;
    JammingPolicy policy;       // budget-repaired policy (feasible case)
    double achieved = 0.0;      // relative rate of `policy`
    double mu_star = 0.0;
    double lambda_star = 0.0;
};

/// Dual feasibility check for the target ratio t: infeasible iff some dual
/// iterate drives the dual function below -feas_tol. On the feasible side the
/// best policy harvested across iterates is returned.
FeasibilityP22 feasibility_p22(const StateEnsemble& ensemble, double P, const NoiseModel& noise,
                               double Q, double t);

struct TProbe {
    double t = 0.0;
    bool feasible = false;
    double achieved = 0.0;
};

struct FixedPowerSolution {
    JammingPolicy policy;
    double t_star = 0.0;  // achieved relative rate of the returned policy
    double mu_star = 0.0;
    double lambda_star = 0.0;
    std::vector<TProbe> trace;
};

FixedPowerSolution solve_fixed(const StateEnsemble& ensemble, double P, const NoiseModel& noise,
                               double Q, double t_tol = 1e-3);

}  // namespace cogjam
