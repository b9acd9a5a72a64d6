#include "doctest.h"

#include <cmath>
#include <limits>

#include "cogjam/numopt.hpp"
#include "cogjam/solver_outage.hpp"
#include "cogjam/util.hpp"

using namespace cogjam;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const NoiseModel unit_noise{1.0, 1.0};

StateEnsemble random_small_ensemble(SplitMix64& rng, std::size_t max_states) {
    StateEnsemble e;
    const std::size_t n = 1 + rng.next() % max_states;
    e.states.resize(n);
    e.weights.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e.states[i] = {rng.next_exponential(1.0), rng.next_exponential(0.2),
                       rng.next_exponential(0.3), 0.0};
        e.weights[i] = 0.1 + rng.next_unit_open();
        total += e.weights[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        e.weights[i] /= total;
    }
    // Exact renormalization of the last weight so the masses sum to one.
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) partial += e.weights[i];
    e.weights[n - 1] = 1.0 - partial;
    return e;
}

}  // namespace

TEST_CASE("required power closed form") {
    CHECK(required_power({1.0, 0.5, 1.0, 0.0}, unit_noise) == doctest::Approx(1.0));
    CHECK(required_power({0.1, 1.0, 1.0, 0.0}, unit_noise) == doctest::Approx(-0.9));
    CHECK(required_power({1.0, 0.5, 0.0, 0.0}, unit_noise) == kInf);
    CHECK(required_power({1.0, 0.0, 1.0, 0.0}, unit_noise) == kInf);
}

TEST_CASE("required power with residual self-interference") {
    SplitMix64 rng{41};
    for (int trial = 0; trial < 200; ++trial) {
        FadingState s{rng.next_exponential(1.0), rng.next_exponential(0.2),
                      rng.next_exponential(0.3), 0.0};
        const double plain = required_power(s, unit_noise);
        const double si = required_power_si(s, unit_noise);
        if (plain > 0.0) {
            CHECK(si == doctest::Approx(plain).epsilon(1e-12));
        } else {
            CHECK(si == 0.0);
        }
    }
    CHECK(required_power_si({1.0, 1.0, 1.0, 0.5}, NoiseModel{1.0, 2.0}) ==
          doctest::Approx(2.0));
    // Leakage exactly cancels the jamming gain: no finite power works.
    CHECK(required_power_si({1.0, 1.0, 1.0, 1.0}, NoiseModel{1.0, 2.0}) == kInf);
}

TEST_CASE("success power always satisfies the indicator") {
    SplitMix64 rng{4242};
    for (int trial = 0; trial < 2000; ++trial) {
        FadingState s{rng.next_exponential(1.0), rng.next_exponential(0.2),
                      rng.next_exponential(0.3), rng.next_exponential(1e-3)};
        const double q = success_power(s, unit_noise);
        if (std::isfinite(q)) {
            CHECK(success_indicator(s, 1.0, q, unit_noise));
            CHECK(q == doctest::Approx(required_power_si(s, unit_noise)).epsilon(1e-12));
        }
    }
}

TEST_CASE("two-state budget split jams the cheaper state") {
    StateEnsemble e;
    e.states = {{1.0, 0.5, 1.0, 0.0}, {2.0, 0.5, 1.0, 0.0}};  // required 1.0 and 3.0
    e.weights = {0.5, 0.5};
    const OutageSolution sol = solve_outage(e, 1.0, unit_noise, false);
    CHECK(sol.non_outage == doctest::Approx(0.5));
    CHECK(sol.policy.q[0] == doctest::Approx(1.0));
    CHECK(sol.policy.q[1] == 0.0);
    CHECK(sol.policy.average_power(e) <= 1.0 + 1e-9);
    CHECK(sol.lambda_star == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(sol.threshold == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("all states free: full success without jamming") {
    StateEnsemble e;
    e.states = {{0.1, 2.0, 1.0, 0.0}, {0.2, 1.0, 1.0, 0.0}};
    e.weights = {0.5, 0.5};
    const OutageSolution sol = solve_outage(e, 5.0, unit_noise, false);
    CHECK(sol.non_outage == doctest::Approx(1.0));
    CHECK(sol.policy.q == std::vector<double>{0.0, 0.0});
    CHECK(sol.lambda_star == 0.0);
}

TEST_CASE("large budget saturates every jammable state") {
    SplitMix64 rng{7};
    StateEnsemble e = random_small_ensemble(rng, 12);
    KahanSum needed;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double c = success_power(e.states[i], unit_noise);
        if (c > 0.0 && std::isfinite(c)) needed.add(e.weights[i] * c);
    }
    const OutageSolution sol = solve_outage(e, needed.value() * 1.0001 + 1.0, unit_noise, false);
    double reachable = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (std::isfinite(success_power(e.states[i], unit_noise))) reachable += e.weights[i];
    }
    CHECK(sol.non_outage == doctest::Approx(reachable));
}

TEST_CASE("matches the brute-force oracle within one state's weight") {
    SplitMix64 rng{555};
    const NoiseModel noise{1.0, 1.0};
    for (int trial = 0; trial < 40; ++trial) {
        StateEnsemble e = random_small_ensemble(rng, 10);
        const double Q = rng.next_exponential(3.0);
        std::vector<std::vector<double>> grids(e.size());
        double max_weight = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double c = success_power(e.states[i], noise);
            grids[i] = {0.0};
            if (c > 0.0 && std::isfinite(c)) grids[i].push_back(c);
            max_weight = std::max(max_weight, e.weights[i]);
        }
        const BruteForceResult brute =
            brute_force_jam(e, noise, 100.0, Q, grids, JamObjective::non_outage);
        const OutageSolution sol = solve_outage(e, Q, noise, false);
        CHECK(sol.non_outage <= brute.value + 1e-12);
        CHECK(sol.non_outage >= brute.value - max_weight - 1e-12);
    }
}

TEST_CASE("dominates the baselines and is monotone in the budget") {
    RayleighConfig config;
    config.n_states = 3000;
    const StateEnsemble e = sample_rayleigh(config, 2024);
    const auto tx = TxPowerProfile::fixed_power(100.0, e.size());
    double prev = -1.0;
    for (double q_db : {0.0, 5.0, 10.0, 15.0, 20.0, 25.0}) {
        const double Q = db_to_linear(q_db);
        const OutageSolution sol = solve_outage(e, Q, unit_noise, false);
        CHECK(sol.non_outage >= prev - 1e-12);
        prev = sol.non_outage;
        CHECK(sol.policy.average_power(e) <= Q + 1e-9);
        const EvalReport own = evaluate_policy(e, sol.policy, tx, unit_noise);
        CHECK(own.non_outage_prob == doctest::Approx(sol.non_outage).epsilon(1e-12));
        for (const JammingPolicy& baseline :
             {baseline_constant(e, Q), baseline_onoff(e, Q, unit_noise), baseline_passive(e)}) {
            const EvalReport rep = evaluate_policy(e, baseline, tx, unit_noise);
            CHECK(sol.non_outage >= rep.non_outage_prob - 1e-9);
        }
    }
}

TEST_CASE("jammed states sit below the reported threshold") {
    SplitMix64 rng{31};
    StateEnsemble e = random_small_ensemble(rng, 12);
    const OutageSolution sol = solve_outage(e, 0.8, unit_noise, false);
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (sol.policy.q[i] > 0.0) {
            const double c = success_power(e.states[i], unit_noise);
            CHECK(sol.policy.q[i] == c);
            CHECK(c < sol.threshold * (1.0 + 1e-8));
        }
    }
}

TEST_CASE("a binding budget is spent up to at most one boundary state") {
    SplitMix64 rng{808};
    for (int trial = 0; trial < 50; ++trial) {
        StateEnsemble e = random_small_ensemble(rng, 12);
        const double Q = rng.next_exponential(1.0);
        const OutageSolution sol = solve_outage(e, Q, unit_noise, false);
        if (sol.lambda_star <= 0.0) continue;
        const double spent = sol.policy.average_power(e);
        CHECK(spent <= Q + 1e-9);
        // The slack is smaller than the mass of the boundary state: the
        // cheapest jammable state that was left out.
        double boundary_cost = kInf;
        double boundary_mass = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double c = success_power(e.states[i], unit_noise);
            if (sol.policy.q[i] == 0.0 && c > 0.0 && c < boundary_cost) {
                boundary_cost = c;
                boundary_mass = e.weights[i] * c;
            }
        }
        REQUIRE(std::isfinite(boundary_cost));
        CHECK(Q - spent < boundary_mass + 1e-12);
    }
}

TEST_CASE("zero loop-back gains make both solver variants identical") {
    RayleighConfig config;
    config.n_states = 500;
    const StateEnsemble e = sample_rayleigh(config, 88);
    const OutageSolution plain = solve_outage(e, 10.0, unit_noise, false);
    const OutageSolution si = solve_outage(e, 10.0, unit_noise, true);
    CHECK(plain.policy.q == si.policy.q);
    CHECK(plain.non_outage == si.non_outage);
    CHECK(plain.lambda_star == si.lambda_star);
}

TEST_CASE("residual self-interference never helps") {
    GeometryConfig g;
    g.rx = {500.0, 0.0};
    g.eaves = {500.0, 500.0};
    g.jammer = {500.0, 500.0};
    const StateEnsemble e = sample_geometric(g, 5000, 3);
    const NoiseModel noise{1e-8, 1e-8};
    for (double q_dbm : {25.0, 30.0, 35.0, 40.0}) {
        const double Q = db_to_linear(q_dbm);
        const double with_si = solve_outage(e, Q, noise, true).non_outage;
        const double without = solve_outage(zero_si(e), Q, noise, false).non_outage;
        CHECK(with_si <= without + 1e-12);
    }
}

TEST_CASE("zero budget degenerates to the passive policy") {
    SplitMix64 rng{66};
    StateEnsemble e = random_small_ensemble(rng, 8);
    const OutageSolution sol = solve_outage(e, 0.0, unit_noise, false);
    for (double q : sol.policy.q) CHECK(q == 0.0);
    const auto tx = TxPowerProfile::fixed_power(10.0, e.size());
    const EvalReport passive = evaluate_policy(e, baseline_passive(e), tx, unit_noise);
    CHECK(sol.non_outage == doctest::Approx(passive.non_outage_prob));
}
