#include "cogjam/numopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cogjam/util.hpp"

namespace cogjam {

namespace {

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

bool bracket_small_enough(double lo, double hi, const BisectionSpec& spec) {
    const double mid = 0.5 * (lo + hi);
    return (hi - lo) <= std::max(spec.tol_abs, spec.tol_rel * std::abs(mid));
}

}  // namespace

double bisect_monotone(const std::function<double(double)>& residual,
                       const BisectionSpec& spec) {
    if (!(spec.lo < spec.hi)) {
        throw ContractError("bisection bracket requires lo < hi");
    }
    double lo = spec.lo;
    double hi = spec.hi;
    const double f_lo = residual(lo);
    const double f_hi = residual(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if (sign_of(f_lo) == sign_of(f_hi)) {
        throw SolverError("bisection residual has no sign change over the bracket");
    }
    const int lo_sign = sign_of(f_lo);
    for (int iter = 0; iter < spec.max_iter; ++iter) {
        if (bracket_small_enough(lo, hi, spec)) {
            return 0.5 * (lo + hi);
        }
        const double mid = 0.5 * (lo + hi);
        const double f_mid = residual(mid);
        if (f_mid == 0.0) return mid;
        if (sign_of(f_mid) == lo_sign) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw SolverError("bisection failed to converge within max_iter");
}

double bisect_predicate(const std::function<bool(double)>& predicate,
                        const BisectionSpec& spec) {
    if (!(spec.lo < spec.hi)) {
        throw ContractError("bisection bracket requires lo < hi");
    }
    double lo = spec.lo;
    double hi = spec.hi;
    if (predicate(lo)) return lo;
    if (!predicate(hi)) {
        throw SolverError("predicate does not flip over the bracket");
    }
    for (int iter = 0; iter < spec.max_iter; ++iter) {
        if (bracket_small_enough(lo, hi, spec)) {
            return 0.5 * (lo + hi);
        }
        const double mid = 0.5 * (lo + hi);
        if (predicate(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    throw SolverError("bisection failed to converge within max_iter");
}

Ellipsoid Ellipsoid::ball(std::vector<double> center, double radius) {
    if (!(radius > 0.0)) {
        throw ContractError("ellipsoid radius must be positive");
    }
    Ellipsoid e;
    const std::size_t n = center.size();
    e.center = std::move(center);
    e.shape.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        e.shape[i * n + i] = radius * radius;
    }
    return e;
}

EllipsoidResult ellipsoid_minimize(const SubgradientOracle& oracle, Ellipsoid ell,
                                   const EllipsoidStop& stop,
                                   std::optional<EarlyExit> early_exit,
                                   const std::vector<bool>& nonneg) {
    const std::size_t n = ell.dim();
    if (nonneg.size() != n) {
        throw ContractError("nonneg mask dimension mismatch");
    }

    EllipsoidResult result;
    result.value = std::numeric_limits<double>::infinity();
    result.status = EllipsoidStatus::iteration_cap;

    int resets_left = 1;
    std::vector<double> query(n), cut(n), shape_g(n);
    for (int iter = 0; iter < stop.max_iter; ++iter) {
        result.iterations = iter + 1;

        // Feasible query point: center clamped onto the nonnegative orthant.
        int violated = -1;
        for (std::size_t i = 0; i < n; ++i) {
            query[i] = ell.center[i];
            if (nonneg[i] && query[i] < 0.0) {
                query[i] = 0.0;
                if (violated < 0) violated = static_cast<int>(i);
            }
        }

        auto [value, subgrad] = oracle(query);
        if (value < result.value) {
            result.value = value;
            result.point = query;
        }
        if (early_exit) {
            double cutoff = early_exit->threshold;
            if (early_exit->norm_scale > 0.0) {
                double norm_sq = 0.0;
                for (double v : query) norm_sq += v * v;
                cutoff *= 1.0 + early_exit->norm_scale * std::sqrt(norm_sq);
            }
            if (value < cutoff) {
                result.status = EllipsoidStatus::early_exit;
                result.final_state = std::move(ell);
                return result;
            }
        }

        // Cut direction: constraint gradient when the center left the orthant,
        // otherwise the objective subgradient.
        if (violated >= 0) {
            std::fill(cut.begin(), cut.end(), 0.0);
            cut[static_cast<std::size_t>(violated)] = -1.0;
        } else {
            if (subgrad.size() != n) {
                throw ContractError("oracle subgradient dimension mismatch");
            }
            cut = subgrad;
        }

        double g_shape_g = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += ell.shape[i * n + j] * cut[j];
            }
            shape_g[i] = acc;
            g_shape_g += cut[i] * acc;
        }
        if (!(g_shape_g > 0.0) || !std::isfinite(g_shape_g)) {
            // The shape matrix degenerated below double precision. Reset once
            // to a tiny ball around the incumbent; a second loss means the
            // search has collapsed to numerical resolution.
            if (resets_left-- > 0 && !result.point.empty()) {
                double norm = 0.0;
                for (double v : result.point) norm += v * v;
                ell = Ellipsoid::ball(result.point, 1e-6 * (1.0 + std::sqrt(norm)));
                continue;
            }
            result.status = EllipsoidStatus::converged;
            result.final_state = std::move(ell);
            return result;
        }
        const double norm = std::sqrt(g_shape_g);
        if (norm <= stop.size_tol) {
            result.status = EllipsoidStatus::converged;
            result.final_state = std::move(ell);
            return result;
        }

        // Central-cut update.
        const double nd = static_cast<double>(n);
        const double step = 1.0 / ((nd + 1.0) * norm);
        for (std::size_t i = 0; i < n; ++i) {
            ell.center[i] -= step * shape_g[i];
        }
        const double scale = nd * nd / (nd * nd - 1.0);
        const double rank1 = 2.0 / ((nd + 1.0) * g_shape_g);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                const double updated =
                    scale * (ell.shape[i * n + j] - rank1 * shape_g[i] * shape_g[j]);
                ell.shape[i * n + j] = updated;
                ell.shape[j * n + i] = updated;
            }
        }
    }
    result.final_state = std::move(ell);
    return result;
}

EllipsoidResult dual_search(const SubgradientOracle& oracle, std::vector<double> center,
                            double radius, const EllipsoidStop& stop,
                            std::optional<EarlyExit> early_exit,
                            const std::vector<bool>& nonneg) {
    const std::size_t n = center.size();
    EllipsoidResult result;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        result = ellipsoid_minimize(oracle, Ellipsoid::ball(center, radius), stop, early_exit,
                                    nonneg);
        result.restarts = attempt;
        if (result.status == EllipsoidStatus::early_exit) {
            return result;
        }
        double dist_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = result.point[i] - center[i];
            dist_sq += d * d;
        }
        // Best point well inside the ball: the optimum was contained.
        if (std::sqrt(dist_sq) < 0.9 * radius) {
            return result;
        }
        radius *= 10.0;
    }
    return result;
}

BruteForceResult brute_force_jam(const StateEnsemble& ensemble, const NoiseModel& noise,
                                 double P, double Q,
                                 const std::vector<std::vector<double>>& grids,
                                 JamObjective objective, std::size_t max_combinations) {
    const std::size_t n = ensemble.size();
    if (grids.size() != n) {
        throw ContractError("grid count does not match ensemble size");
    }
    std::size_t combinations = 1;
    for (const auto& g : grids) {
        if (g.empty()) {
            throw ContractError("empty candidate grid");
        }
        if (combinations > max_combinations / g.size()) {
            throw ContractError("brute-force combination count exceeds the cap");
        }
        combinations *= g.size();
    }

    const double budget = Q + 1e-12 * (1.0 + std::abs(Q));
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> current(n);
    for (std::size_t i = 0; i < n; ++i) {
        current[i] = grids[i][0];
    }

    BruteForceResult best;
    best.value = -std::numeric_limits<double>::infinity();

    const auto evaluate = [&]() {
        const double avg_q =
            weighted_sum(ensemble.weights, [&](std::size_t i) { return current[i]; });
        if (avg_q > budget) return;
        double value = 0.0;
        if (objective == JamObjective::non_outage) {
            value = weighted_sum(ensemble.weights, [&](std::size_t i) {
                return success_indicator(ensemble.states[i], 1.0, current[i], noise) ? 1.0 : 0.0;
            });
        } else {
            KahanSum total_rate;
            KahanSum eaves_rate;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& s = ensemble.states[i];
                const double r0 = rate(sinr_receiver(s, P, current[i], noise));
                total_rate.add(ensemble.weights[i] * r0);
                if (success_indicator(s, P, current[i], noise)) {
                    eaves_rate.add(ensemble.weights[i] * r0);
                }
            }
            value = total_rate.value() > 0.0 ? eaves_rate.value() / total_rate.value() : 0.0;
        }
        if (value > best.value) {
            best.value = value;
            best.allocation = current;
        }
    };

    // Odometer enumeration in deterministic order; first maximizer wins ties.
    while (true) {
        evaluate();
        std::size_t pos = 0;
        while (pos < n) {
            if (++idx[pos] < grids[pos].size()) {
                current[pos] = grids[pos][idx[pos]];
                break;
            }
            idx[pos] = 0;
            current[pos] = grids[pos][0];
            ++pos;
        }
        if (pos == n) break;
    }
    if (best.allocation.empty()) {
        // No feasible allocation (can only happen when every grid lacks an
        // affordable entry); report the all-min allocation as infeasible zero.
        throw SolverError("no feasible allocation in the brute-force grid");
    }
    return best;
}

}  // namespace cogjam
