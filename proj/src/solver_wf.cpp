#include "cogjam/solver_wf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cogjam/numopt.hpp"
#include "cogjam/solver_outage.hpp"
#include "cogjam/util.hpp"

namespace cogjam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;

double water_level(double beta) { return 1.0 / (kLn2 * beta); }

double feasibility_tolerance(double Q, double P) {
    return 1e-8 * (1.0 + std::abs(Q) + std::abs(P));
}

/// Interference floor seen by the transmitter on one state, in transmit-power
/// units: p is positive when the water level clears it.
double floor_of(const FadingState& s, double q, const NoiseModel& noise) {
    return (s.g2 * q + noise.sigma0_sq) / s.g0;
}

double tx_power_at(const FadingState& s, double q, double level, const NoiseModel& noise) {
    return std::max(0.0, level - floor_of(s, q, noise));
}

double tx_rate_at(const FadingState& s, double q, double level, const NoiseModel& noise) {
    const double f = floor_of(s, q, noise);
    return f < level ? std::log2(level / f) : 0.0;
}

/// Mean transmit power under water level `level` against policy `q`.
double mean_tx_power(const StateEnsemble& ensemble, const std::vector<double>& q, double level,
                     const NoiseModel& noise) {
    return weighted_sum(ensemble.weights, [&](std::size_t i) {
        return tx_power_at(ensemble.states[i], q[i], level, noise);
    });
}

/// Fixed per-state quantities for one water-level dual.
struct BetaState {
    double q_kill = 0.0;     // smallest q pushing the state's floor to the level
    double q_succ = kInf;    // jam-to-equality power (nudged), +inf if impossible
    bool succ_admissible = false;  // q_succ < q_kill
    double rate_succ = 0.0;
    double p_succ = 0.0;
    double rate_idle = 0.0;  // rate at q = 0
    double p_idle = 0.0;     // transmit power at q = 0
    // hot-loop constants
    double floor_slope = 0.0;   // g2/g0
    double floor_at_zero = 0.0; // sigma0^2/g0
    double stat_num = 0.0;      // g0/ln2, numerator scale of the stationary point
    double stat_off = 0.0;      // sigma0^2/g2
};

struct BetaCache {
    double beta = 0.0;
    double level = 0.0;
    double log2_level = 0.0;
    std::vector<BetaState> states;
};

BetaCache build_cache(const StateEnsemble& ensemble, const NoiseModel& noise, double beta) {
    BetaCache cache;
    cache.beta = beta;
    cache.level = water_level(beta);
    cache.states.resize(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const auto& s = ensemble.states[i];
        auto& c = cache.states[i];
        c.q_kill = std::max(0.0, (s.g0 * cache.level - noise.sigma0_sq) / s.g2);
        c.q_succ = success_power(s, noise);
        c.succ_admissible = c.q_succ < c.q_kill;
        if (c.succ_admissible) {
            c.rate_succ = tx_rate_at(s, c.q_succ, cache.level, noise);
            c.p_succ = tx_power_at(s, c.q_succ, cache.level, noise);
        }
        c.rate_idle = tx_rate_at(s, 0.0, cache.level, noise);
        c.p_idle = tx_power_at(s, 0.0, cache.level, noise);
        c.floor_slope = s.g2 / s.g0;
        c.floor_at_zero = noise.sigma0_sq / s.g0;
        c.stat_num = s.g0 / kLn2;
        c.stat_off = noise.sigma0_sq / s.g2;
    }
    cache.log2_level = std::log2(cache.level);
    return cache;
}

struct P3Choice {
    double q = 0.0;
    double value = 0.0;
    double tx_rate = 0.0;
    double tx_power = 0.0;
    SubproblemP3::Branch branch = SubproblemP3::Branch::kill;
};

/// Per-iterate dual context with the products hoisted out of the state loop.
struct DualContext {
    double mu = 0.0;
    double lambda = 0.0;
    double zeta = 0.0;
    double t = 0.0;
    double t_mu = 0.0;       // t * mu
    double mu_one_t = 0.0;   // mu * (1 - t)

    DualContext(double mu_, double lambda_, double zeta_, double t_)
        : mu(mu_), lambda(lambda_), zeta(zeta_), t(t_), t_mu(t_ * mu_),
          mu_one_t(mu_ * (1.0 - t_)) {}
};

/// Closed-form inner maximization for one state. Three candidates: kill the
/// state, jam to equality, or stop at the failure branch's stationary point.
P3Choice solve_state_p3(const FadingState& s, const BetaState& c, const BetaCache& cache,
                        const DualContext& d) {
    P3Choice pick;
    if (c.q_kill <= 0.0) {
        // The transmitter skips this state even unjammed.
        return pick;
    }

    const double v_kill = -d.lambda * c.q_kill;

    double v_succ = -kInf;
    if (c.succ_admissible) {
        v_succ = d.mu_one_t * c.rate_succ - d.lambda * c.q_succ - d.zeta * c.p_succ;
    }

    // Failure branch: stationary point of the concave objective, clamped into
    // the region below both the kill and the equality powers.
    const double denom = s.g0 * d.lambda - d.zeta * s.g2;
    double q_fail = std::min(c.q_kill, c.q_succ);
    if (denom > 0.0) {
        const double stationary = c.stat_num * d.t_mu / denom - c.stat_off;
        q_fail = std::min(q_fail, stationary);
    }
    q_fail = std::max(0.0, q_fail);
    double rate_fail;
    double p_fail;
    if (q_fail == 0.0) {
        rate_fail = c.rate_idle;
        p_fail = c.p_idle;
    } else if (q_fail == c.q_succ) {
        rate_fail = c.rate_succ;
        p_fail = c.p_succ;
    } else {
        const double floor = c.floor_at_zero + c.floor_slope * q_fail;
        rate_fail = floor < cache.level ? cache.log2_level - std::log2(floor) : 0.0;
        p_fail = std::max(0.0, cache.level - floor);
    }
    const double v_fail = -d.t_mu * rate_fail - d.lambda * q_fail - d.zeta * p_fail;

    // Max value; ties prefer the smaller power, then success over the rest.
    pick.q = c.q_kill;
    pick.value = v_kill;
    pick.tx_rate = 0.0;
    pick.tx_power = 0.0;
    pick.branch = SubproblemP3::Branch::kill;
    const auto better = [&](double v, double q) {
        return v > pick.value || (v == pick.value && q < pick.q);
    };
    if (better(v_fail, q_fail)) {
        pick = {q_fail, v_fail, rate_fail, p_fail, SubproblemP3::Branch::failure};
    }
    if (c.succ_admissible && (v_succ > pick.value || (v_succ == pick.value && c.q_succ <= pick.q))) {
        pick = {c.q_succ, v_succ, c.rate_succ, c.p_succ, SubproblemP3::Branch::success};
    }
    return pick;
}

struct DualPolicyP3 {
    std::vector<double> q;
    std::vector<char> branch;
    double avg_power = 0.0;
};

DualPolicyP3 policy_at_duals_p3(const StateEnsemble& ensemble, const BetaCache& cache,
                                double mu, double lambda, double zeta, double t) {
    DualPolicyP3 out;
    const std::size_t n = ensemble.size();
    out.q.resize(n);
    out.branch.resize(n);
    KahanSum power;
    const DualContext d(mu, lambda, zeta, t);
    for (std::size_t i = 0; i < n; ++i) {
        const P3Choice pick = solve_state_p3(ensemble.states[i], cache.states[i], cache, d);
        out.q[i] = pick.q;
        out.branch[i] = static_cast<char>(pick.branch);
        power.add(ensemble.weights[i] * pick.q);
    }
    out.avg_power = power.value();
    return out;
}

/// Budget-binding recovery: policies depend on the duals only through their
/// ratios, so fix mu = 1, keep the power-coupling dual, and sweep lambda
/// until the jamming budget binds.
std::vector<DualPolicyP3> sweep_recovery_p3(const StateEnsemble& ensemble,
                                            const BetaCache& cache, double Q, double zeta,
                                            double t) {
    std::vector<DualPolicyP3> candidates;
    double lo = 1e-12;
    DualPolicyP3 at_lo = policy_at_duals_p3(ensemble, cache, 1.0, lo, zeta, t);
    if (at_lo.avg_power <= Q) {
        candidates.push_back(std::move(at_lo));
        return candidates;
    }
    double hi = 1.0;
    DualPolicyP3 at_hi = policy_at_duals_p3(ensemble, cache, 1.0, hi, zeta, t);
    int guard = 0;
    while (at_hi.avg_power > Q && guard++ < 20) {
        hi *= 10.0;
        at_hi = policy_at_duals_p3(ensemble, cache, 1.0, hi, zeta, t);
    }
    for (int iter = 0; iter < 50; ++iter) {
        const double mid = std::sqrt(lo * hi);
        DualPolicyP3 at_mid = policy_at_duals_p3(ensemble, cache, 1.0, mid, zeta, t);
        if (at_mid.avg_power > Q) {
            lo = mid;
        } else {
            hi = mid;
            at_hi = std::move(at_mid);
        }
    }
    candidates.push_back(std::move(at_hi));
    candidates.push_back(policy_at_duals_p3(ensemble, cache, 1.0, lo, zeta, t));
    return candidates;
}

/// Budget repair mirroring the fixed-power solver: scale failure powers, then
/// kill powers, then strip jammed success states by cost/benefit.
void repair_budget_p3(const StateEnsemble& ensemble, const BetaCache& cache, double t, double Q,
                      std::vector<double>& q, std::vector<char>& branch) {
    const std::size_t n = ensemble.size();
    const auto average = [&]() {
        return weighted_sum(ensemble.weights, [&](std::size_t i) { return q[i]; });
    };
    const auto scale_class = [&](SubproblemP3::Branch which, double excess) {
        KahanSum total;
        for (std::size_t i = 0; i < n; ++i) {
            if (branch[i] == static_cast<char>(which)) total.add(ensemble.weights[i] * q[i]);
        }
        if (total.value() <= 0.0) return excess;
        const double removable = std::min(total.value(), excess);
        const double scale = (total.value() - removable) / total.value();
        for (std::size_t i = 0; i < n; ++i) {
            if (branch[i] == static_cast<char>(which)) q[i] *= scale;
        }
        return excess - removable;
    };

    double avg = average();
    if (avg <= Q) return;
    double excess = avg - Q;
    excess = scale_class(SubproblemP3::Branch::failure, excess);
    if (excess > 0.0) {
        excess = scale_class(SubproblemP3::Branch::kill, excess);
    }
    avg = average();
    if (avg <= Q) return;

    std::vector<std::size_t> jammed;
    for (std::size_t i = 0; i < n; ++i) {
        if (branch[i] == static_cast<char>(SubproblemP3::Branch::success) && q[i] > 0.0) {
            jammed.push_back(i);
        }
    }
    const auto cost_benefit = [&](std::size_t i) {
        const auto& c = cache.states[i];
        const double benefit = (1.0 - t) * c.rate_succ + t * c.rate_idle;
        return benefit > 0.0 ? q[i] / benefit : kInf;
    };
    std::sort(jammed.begin(), jammed.end(), [&](std::size_t a, std::size_t b) {
        const double ra = cost_benefit(a);
        const double rb = cost_benefit(b);
        return ra != rb ? ra > rb : a < b;
    });
    for (std::size_t i : jammed) {
        if (avg <= Q) break;
        avg -= ensemble.weights[i] * q[i];
        q[i] = 0.0;
        branch[i] = static_cast<char>(SubproblemP3::Branch::failure);
    }
}

}  // namespace

WaterfillProfile waterfill(const StateEnsemble& ensemble, const JammingPolicy& policy, double P,
                           const NoiseModel& noise) {
    if (!(P > 0.0)) {
        throw ContractError("average transmit power must be positive");
    }
    if (policy.q.size() != ensemble.size()) {
        throw ContractError("policy length does not match ensemble");
    }
    double floor_min = kInf;
    double floor_max = 0.0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const double f = floor_of(ensemble.states[i], policy.q[i], noise);
        floor_min = std::min(floor_min, f);
        floor_max = std::max(floor_max, f);
    }
    // Mean power is monotone decreasing in beta; bracket by the water levels
    // at which it is zero and at least P, then bisect.
    double beta_hi = 1.0 / (kLn2 * floor_min);
    double beta_lo = 1.0 / (kLn2 * (floor_max + P));
    double beta = 0.5 * (beta_lo + beta_hi);
    for (int iter = 0; iter < 200; ++iter) {
        beta = 0.5 * (beta_lo + beta_hi);
        const double mean = mean_tx_power(ensemble, policy.q, water_level(beta), noise);
        if (std::abs(mean - P) <= 1e-13 * P) {
            break;
        }
        if (mean > P) {
            beta_lo = beta;
        } else {
            beta_hi = beta;
        }
        if (beta_hi - beta_lo <= 1e-16 * beta_hi) {
            beta = beta_lo;  // prefer the overshooting side of a degenerate bracket
            break;
        }
    }

    WaterfillProfile profile;
    profile.beta = beta;
    profile.p.resize(ensemble.size());
    const double level = water_level(beta);
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        profile.p[i] = tx_power_at(ensemble.states[i], policy.q[i], level, noise);
    }
    const double achieved = mean_tx_power(ensemble, policy.q, level, noise);
    if (std::abs(achieved - P) > 1e-8 * P) {
        throw SolverError("water-filling bisection missed the power budget");
    }
    return profile;
}

double beta_max(const StateEnsemble& ensemble, double P, const NoiseModel& noise) {
    return waterfill(ensemble, baseline_passive(ensemble), P, noise).beta;
}

bool feasibility_beta(const StateEnsemble& ensemble_in, double P, const NoiseModel& noise,
                      double Q, double beta) {
    const StateEnsemble ensemble = zero_si(ensemble_in);
    const std::size_t n = ensemble.size();
    const double level = water_level(beta);
    std::vector<double> q_kill(n), p_idle(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = ensemble.states[i];
        q_kill[i] = std::max(0.0, (s.g0 * level - noise.sigma0_sq) / s.g2);
        p_idle[i] = tx_power_at(s, 0.0, level, noise);
    }

    const SubgradientOracle oracle = [&](const std::vector<double>& x) {
        const double lambda = x[0];
        const double zeta = x[1];
        double value = 0.0;
        double power = 0.0;
        double tx_power = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = ensemble.weights[i];
            const double v_jam = -lambda * q_kill[i];
            const double v_idle = -zeta * p_idle[i];
            if (v_idle <= v_jam) {  // idle wins ties only strictly; jam on equality
                value += w * v_jam;
                power += w * q_kill[i];
            } else {
                value += w * v_idle;
                tx_power += w * p_idle[i];
            }
        }
        std::vector<double> subgrad = {Q - power, P - tx_power};
        return std::make_pair(value + lambda * Q + zeta * P, std::move(subgrad));
    };

    const double feas_tol = feasibility_tolerance(Q, P);
    EllipsoidResult search =
        dual_search(oracle, {1.0, 1.0}, 1e3, EllipsoidStop{}, EarlyExit{-feas_tol, 1.0}, {true, false});
    return search.status != EllipsoidStatus::early_exit;
}

double beta_min(const StateEnsemble& ensemble, double P, const NoiseModel& noise, double Q) {
    const double bmax = beta_max(ensemble, P, noise);
    if (Q == 0.0) {
        return bmax;  // only the passive profile satisfies the power coupling
    }
    if (!feasibility_beta(ensemble, P, noise, Q, bmax)) {
        // q = 0 witnesses feasibility at beta_max analytically; a numerical
        // false negative collapses the regime to the single point.
        return bmax;
    }
    BisectionSpec spec;
    spec.lo = bmax * 1e-9;
    spec.hi = bmax;
    spec.tol_rel = 1e-4;
    return bisect_predicate(
        [&](double beta) { return feasibility_beta(ensemble, P, noise, Q, beta); }, spec);
}

SubproblemP3 dual_subproblem_p3(const FadingState& state_in, const NoiseModel& noise, double beta,
                                double mu, double lambda, double zeta, double t) {
    FadingState state = state_in;
    state.phi = 0.0;
    StateEnsemble single;
    single.states = {state};
    single.weights = {1.0};
    const BetaCache cache = build_cache(single, noise, beta);
    const P3Choice pick = solve_state_p3(state, cache.states[0], cache,
                                         DualContext(mu, lambda, zeta, t));
    SubproblemP3 out;
    out.q = pick.q;
    out.value = pick.value;
    out.branch = pick.branch;
    return out;
}

namespace {

struct P33Check {
    bool feasible = false;
    std::array<double, 3> dual_point{};
};

/// Dual feasibility certificate search only; no primal recovery.
P33Check p33_check(const StateEnsemble& ensemble, const BetaCache& cache, double P,
                   double Q, double t) {
    const std::size_t n = ensemble.size();
    // Internal dual values: plain fixed-order sums are deterministic and the
    // accumulation error sits far below the feasibility tolerance.
    const SubgradientOracle oracle = [&](const std::vector<double>& x) {
        const DualContext d(x[0], x[1], x[2], t);
        double value = 0.0;
        double power = 0.0;
        double tx_power = 0.0;
        double total_rate = 0.0;
        double eaves_rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = ensemble.weights[i];
            const P3Choice pick = solve_state_p3(ensemble.states[i], cache.states[i], cache, d);
            value += w * pick.value;
            power += w * pick.q;
            tx_power += w * pick.tx_power;
            total_rate += w * pick.tx_rate;
            if (pick.branch == SubproblemP3::Branch::success) {
                eaves_rate += w * pick.tx_rate;
            }
        }
        std::vector<double> subgrad = {eaves_rate - t * total_rate, Q - power, P - tx_power};
        return std::make_pair(value + d.lambda * Q + d.zeta * P, std::move(subgrad));
    };
    const double feas_tol = feasibility_tolerance(Q, P);
    EllipsoidResult search = dual_search(oracle, {1.0, 1.0, 1.0}, 1e3, EllipsoidStop{}, EarlyExit{-feas_tol, 1.0},
                                         {true, true, false});
    P33Check out;
    out.feasible = search.status != EllipsoidStatus::early_exit;
    out.dual_point = {search.point[0], search.point[1], search.point[2]};
    return out;
}

/// Primal recovery at one (beta, t): scan the power-coupling dual over a
/// coarse signed grid, bind the budget with a lambda sweep at each value,
/// repair, and judge every candidate by its relative rate under the
/// re-waterfilled transmitter (the quantity the outer search maximizes).
FeasibilityP33 p33_recover(const StateEnsemble& ensemble, const NoiseModel& noise,
                           const BetaCache& cache, double P, double Q, double t,
                           const std::array<double, 3>& dual_hint) {
    struct Candidate {
        std::vector<double> q;
        std::vector<char> branch;
        std::array<double, 3> duals;
    };
    std::vector<Candidate> candidates;
    {
        DualPolicyP3 at_hint = policy_at_duals_p3(ensemble, cache, dual_hint[0],
                                                  dual_hint[1], dual_hint[2], t);
        candidates.push_back({std::move(at_hint.q), std::move(at_hint.branch), dual_hint});
    }
    // Natural scale for the power-coupling dual: average unjammed rate per
    // unit of transmit power.
    KahanSum idle_rate;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        idle_rate.add(ensemble.weights[i] * cache.states[i].rate_idle);
    }
    const double unit = std::max(idle_rate.value() / P, 1e-12);
    std::vector<double> zeta_grid = {0.0,         0.25 * unit, -0.25 * unit, unit,
                                     -unit,       4.0 * unit,  -4.0 * unit};
    const double hint_ratio =
        dual_hint[0] > 1e-9 ? dual_hint[2] / dual_hint[0] : dual_hint[2];
    zeta_grid.push_back(hint_ratio);
    for (double zeta : zeta_grid) {
        for (DualPolicyP3& swept : sweep_recovery_p3(ensemble, cache, Q, zeta, t)) {
            candidates.push_back(
                {std::move(swept.q), std::move(swept.branch), {1.0, 0.0, zeta}});
        }
    }

    FeasibilityP33 out;
    out.feasible = true;
    double best_achieved = -kInf;
    for (auto& cand : candidates) {
        repair_budget_p3(ensemble, cache, t, Q, cand.q, cand.branch);
        JammingPolicy policy;
        policy.q = std::move(cand.q);
        policy.label = "cognitive-wf";
        WaterfillProfile wf = waterfill(ensemble, policy, P, noise);
        TxPowerProfile tx;
        tx.p = std::move(wf.p);
        tx.mode = TxMode::waterfilling;
        tx.beta = wf.beta;
        const EvalReport report = evaluate_policy(ensemble, policy, tx, noise);
        if (report.relative_rate > best_achieved) {
            best_achieved = report.relative_rate;
            out.policy = std::move(policy);
            out.tx = std::move(tx);
            out.achieved = report.relative_rate;
            out.duals = cand.duals;
        }
    }
    return out;
}

/// Coordinate refinement of a policy against the re-waterfilled objective.
/// The dual recovery is exact only up to the largest state weight, so this
/// gap is worth closing exactly where single states carry real mass; the
/// quadratic cost keeps it restricted to small ensembles.
void polish_small_ensemble(const StateEnsemble& ensemble, const NoiseModel& noise, double P,
                           double Q, JammingPolicy& policy, TxPowerProfile& tx,
                           double& achieved) {
    const std::size_t n = ensemble.size();
    if (n > 128) return;
    const auto evaluate = [&](const JammingPolicy& p, TxPowerProfile& tx_out) {
        WaterfillProfile wf = waterfill(ensemble, p, P, noise);
        tx_out.p = std::move(wf.p);
        tx_out.mode = TxMode::waterfilling;
        tx_out.beta = wf.beta;
        return evaluate_policy(ensemble, p, tx_out, noise).relative_rate;
    };
    bool improved = true;
    for (int pass = 0; pass < 3 && improved; ++pass) {
        improved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double spent_elsewhere =
                policy.average_power(ensemble) - ensemble.weights[i] * policy.q[i];
            const double cap = (Q - spent_elsewhere) / ensemble.weights[i];
            if (!(cap > 0.0)) continue;
            std::vector<double> candidates = {0.0, cap};
            const double req = success_power(ensemble.states[i], noise);
            if (req > 0.0 && req <= cap) candidates.push_back(req);
            const double level = water_level(tx.beta);
            const double kill =
                (ensemble.states[i].g0 * level - noise.sigma0_sq) / ensemble.states[i].g2;
            if (kill > 0.0 && kill <= cap) candidates.push_back(kill);
            for (int k = 1; k <= 12; ++k) {
                candidates.push_back(cap * k / 13.0);
            }
            for (double q : candidates) {
                if (q == policy.q[i]) continue;
                JammingPolicy trial = policy;
                trial.q[i] = q;
                TxPowerProfile trial_tx;
                const double value = evaluate(trial, trial_tx);
                if (value > achieved + 1e-12) {
                    achieved = value;
                    policy = std::move(trial);
                    tx = std::move(trial_tx);
                    improved = true;
                }
            }
        }
    }
}

}  // namespace

FeasibilityP33 feasibility_p33(const StateEnsemble& ensemble_in, double P,
                               const NoiseModel& noise, double Q, double beta, double t) {
    const StateEnsemble ensemble = zero_si(ensemble_in);
    const BetaCache cache = build_cache(ensemble, noise, beta);
    const P33Check check = p33_check(ensemble, cache, P, Q, t);
    if (!check.feasible) {
        FeasibilityP33 out;
        out.feasible = false;
        return out;
    }
    return p33_recover(ensemble, noise, cache, P, Q, t, check.dual_point);
}

WfSolution solve_wf(const StateEnsemble& ensemble_in, double P, const NoiseModel& noise,
                    double Q, int beta_grid_size, bool golden_refine, double t_tol) {
    if (beta_grid_size < 3) {
        throw ContractError("beta grid needs at least 3 points");
    }
    if (Q < 0.0) {
        throw ContractError("jamming budget must be non-negative");
    }
    const StateEnsemble ensemble = zero_si(ensemble_in);

    WfSolution solution;
    const double bmax = beta_max(ensemble, P, noise);

    // Passive floor: always a valid policy, and the exact optimum at Q = 0.
    {
        JammingPolicy passive = baseline_passive(ensemble);
        passive.label = "cognitive-wf";
        WaterfillProfile wf = waterfill(ensemble, passive, P, noise);
        TxPowerProfile tx;
        tx.p = wf.p;
        tx.mode = TxMode::waterfilling;
        tx.beta = wf.beta;
        const EvalReport report = evaluate_policy(ensemble, passive, tx, noise);
        solution.policy = std::move(passive);
        solution.tx = std::move(tx);
        solution.beta_star = bmax;
        solution.t_star = report.relative_rate;
    }

    if (Q == 0.0) {
        solution.beta_regime = {bmax, bmax};
        solution.beta_scan.push_back(
            {bmax, solution.t_star, solution.t_star, 0.0});
        return solution;
    }

    const double bmin = beta_min(ensemble, P, noise, Q);
    solution.beta_regime = {bmin, bmax};

    // Inner search at one beta: bisect the rate-ratio target with fast dual
    // certificates, then run one primal recovery at the settled target.
    const auto solve_at_beta = [&](double beta) {
        BetaScanPoint point;
        point.beta = beta;
        const BetaCache cache = build_cache(ensemble, noise, beta);
        std::array<double, 3> dual_hint = {1.0, 1.0, 1.0};
        const auto probe = [&](double t) {
            const P33Check check = p33_check(ensemble, cache, P, Q, t);
            if (check.feasible) {
                dual_hint = check.dual_point;
            }
            return check.feasible;
        };
        double lo = 0.0;
        double hi = 1.0;
        if (probe(1.0)) {
            lo = 1.0;
        } else {
            probe(0.0);  // seed the dual hint
            while (hi - lo > t_tol) {
                const double mid = 0.5 * (lo + hi);
                if (probe(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        point.feasible_tmax = lo;
        FeasibilityP33 rec = p33_recover(ensemble, noise, cache, P, Q, lo, dual_hint);
        point.t_achieved = rec.achieved;
        point.avg_jam_power = rec.policy.average_power(ensemble);
        if (rec.achieved > solution.t_star) {
            solution.t_star = rec.achieved;
            solution.policy = std::move(rec.policy);
            solution.tx = std::move(rec.tx);
            solution.duals = rec.duals;
            solution.beta_star = beta;
        }
        return point;
    };

    if (bmax - bmin <= 1e-12 * bmax) {
        solution.beta_scan.push_back(solve_at_beta(bmax));
        polish_small_ensemble(ensemble, noise, P, Q, solution.policy, solution.tx,
                              solution.t_star);
        return solution;
    }
    for (int k = 0; k < beta_grid_size; ++k) {
        const double frac = static_cast<double>(k) / (beta_grid_size - 1);
        const double beta = bmin + frac * (bmax - bmin);
        solution.beta_scan.push_back(solve_at_beta(beta));
    }

    if (golden_refine) {
        // Golden-section around the grid argmax; the scan is empirically
        // unimodal but correctness does not rely on it.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < solution.beta_scan.size(); ++i) {
            if (solution.beta_scan[i].t_achieved > solution.beta_scan[arg].t_achieved) {
                arg = i;
            }
        }
        const std::size_t lo_i = arg > 0 ? arg - 1 : arg;
        const std::size_t hi_i = arg + 1 < solution.beta_scan.size() ? arg + 1 : arg;
        double a = solution.beta_scan[lo_i].beta;
        double b = solution.beta_scan[hi_i].beta;
        constexpr double kInvPhi = 0.6180339887498949;
        double x1 = b - kInvPhi * (b - a);
        double x2 = a + kInvPhi * (b - a);
        BetaScanPoint p1 = solve_at_beta(x1);
        BetaScanPoint p2 = solve_at_beta(x2);
        solution.beta_scan.push_back(p1);
        solution.beta_scan.push_back(p2);
        for (int iter = 0; iter < 8; ++iter) {
            if (p1.t_achieved >= p2.t_achieved) {
                b = x2;
                x2 = x1;
                p2 = p1;
                x1 = b - kInvPhi * (b - a);
                p1 = solve_at_beta(x1);
                solution.beta_scan.push_back(p1);
            } else {
                a = x1;
                x1 = x2;
                p1 = p2;
                x2 = a + kInvPhi * (b - a);
                p2 = solve_at_beta(x2);
                solution.beta_scan.push_back(p2);
            }
        }
        std::sort(solution.beta_scan.begin(), solution.beta_scan.end(),
                  [](const BetaScanPoint& l, const BetaScanPoint& r) { return l.beta < r.beta; });
    }
    polish_small_ensemble(ensemble, noise, P, Q, solution.policy, solution.tx, solution.t_star);
    return solution;
}

}  // namespace cogjam
