#include "cogjam/solver_outage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cogjam/numopt.hpp"
#include "cogjam/util.hpp"

namespace cogjam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

OutageSolution& finish(const StateEnsemble& ensemble, const std::vector<double>& cost,
                       OutageSolution& solution) {
    KahanSum success_mass;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const bool free_success = cost[i] <= 0.0;
        const bool jammed = solution.policy.q[i] > 0.0;
        success_mass.add((free_success || jammed) ? ensemble.weights[i] : 0.0);
    }
    solution.non_outage = success_mass.value();
    return solution;
}

}  // namespace

double required_power(const FadingState& state, const NoiseModel& noise) {
    if (state.g1 <= 0.0) {
        return kInf;  // the monitor hears nothing
    }
    const double numerator = state.g0 * noise.sigma1_sq / state.g1 - noise.sigma0_sq;
    if (state.g2 <= 0.0) {
        return numerator > 0.0 ? kInf : (numerator == 0.0 ? 0.0 : -kInf);
    }
    return numerator / state.g2;
}

double required_power_si(const FadingState& state, const NoiseModel& noise) {
    const double numerator = state.g0 * noise.sigma1_sq - state.g1 * noise.sigma0_sq;
    if (numerator <= 0.0) {
        return 0.0;  // success at q = 0
    }
    const double denominator = state.g1 * state.g2 - state.g0 * state.phi;
    if (denominator <= 0.0) {
        return kInf;  // jamming hurts the monitor at least as much as the receiver
    }
    return numerator / denominator;
}

double success_power(const FadingState& state, const NoiseModel& noise) {
    const double q = required_power_si(state, noise);
    if (q == 0.0 || !std::isfinite(q)) {
        return q;
    }
    if (success_indicator(state, 1.0, q, noise)) {
        return q;
    }
    // Rounding in the closed form can leave the comparison short by noise of
    // the order eps * (largest term); escalate geometrically until it clears.
    for (double bump = 4.0 * std::numeric_limits<double>::epsilon(); bump <= 1e-6;
         bump *= 4.0) {
        const double candidate = q * (1.0 + bump);
        if (success_indicator(state, 1.0, candidate, noise)) {
            return candidate;
        }
    }
    return kInf;  // comparison is rounding-dominated; no trustworthy finite power
}

OutageSolution solve_outage(const StateEnsemble& ensemble, double Q, const NoiseModel& noise,
                            bool with_si) {
    if (Q < 0.0) {
        throw ContractError("jamming budget must be non-negative");
    }
    const std::size_t n = ensemble.size();

    std::vector<double> cost(n);
    for (std::size_t i = 0; i < n; ++i) {
        FadingState s = ensemble.states[i];
        if (!with_si) {
            s.phi = 0.0;
        }
        cost[i] = success_power(s, noise);
    }

    OutageSolution solution;
    solution.policy.q.assign(n, 0.0);
    solution.policy.label = with_si ? "cognitive-si" : "cognitive";

    std::vector<std::size_t> jammable;
    jammable.reserve(n);
    KahanSum total_needed;
    for (std::size_t i = 0; i < n; ++i) {
        if (cost[i] > 0.0 && std::isfinite(cost[i])) {
            jammable.push_back(i);
            total_needed.add(ensemble.weights[i] * cost[i]);
        }
    }
    std::sort(jammable.begin(), jammable.end(), [&](std::size_t a, std::size_t b) {
        return cost[a] != cost[b] ? cost[a] < cost[b] : a < b;
    });

    if (total_needed.value() <= Q) {
        // Slack budget: jam every state that can be helped.
        for (std::size_t i : jammable) {
            solution.policy.q[i] = cost[i];
        }
        solution.lambda_star = 0.0;
        solution.threshold = kInf;
    } else {
        // Greedy by ascending required power until the budget runs out; the
        // first state left out defines the threshold.
        KahanSum spent;
        std::size_t boundary = jammable.size();
        for (std::size_t k = 0; k < jammable.size(); ++k) {
            const std::size_t i = jammable[k];
            const double next = spent.value() + ensemble.weights[i] * cost[i];
            if (next > Q) {
                boundary = k;
                break;
            }
            solution.policy.q[i] = cost[i];
            spent.add(ensemble.weights[i] * cost[i]);
        }

        if (boundary == jammable.size()) {
            // Rounding placed the whole set within the budget after all.
            solution.lambda_star = 0.0;
            solution.threshold = kInf;
            return finish(ensemble, cost, solution);
        }
        const double boundary_cost = cost[jammable[boundary]];
        const double min_cost = cost[jammable.front()];
        // The budget residual Q - sum{w*c : 0 < c < 1/lambda} is monotone in
        // lambda and crosses zero at the threshold; the bisection recovers the
        // dual variable the threshold rule corresponds to.
        const auto residual = [&](double lambda) {
            const double threshold = 1.0 / lambda;
            KahanSum used;
            for (std::size_t i : jammable) {
                if (cost[i] < threshold) {
                    used.add(ensemble.weights[i] * cost[i]);
                } else {
                    break;  // jammable is sorted ascending
                }
            }
            return Q - used.value();
        };
        BisectionSpec spec;
        spec.lo = 0.5 / cost[jammable.back()];
        // Margin keeps 1/hi strictly below the smallest cost despite the
        // double rounding in the reciprocal.
        spec.hi = (1.0 + 1e-9) / min_cost;
        spec.tol_rel = 1e-10;
        if (residual(spec.lo) >= 0.0) {
            // Degenerate bracket (single distinct cost); the threshold sits at
            // the boundary state's cost.
            solution.lambda_star = 1.0 / boundary_cost;
        } else {
            solution.lambda_star = bisect_monotone(residual, spec);
        }
        solution.threshold = 1.0 / solution.lambda_star;
    }
    return finish(ensemble, cost, solution);
}

}  // namespace cogjam
