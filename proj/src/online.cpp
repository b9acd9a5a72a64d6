#include "cogjam/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cogjam/util.hpp"

namespace cogjam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ProbeOracle make_probe_oracle(const FadingState& state, const NoiseModel& noise) {
    return [state, noise](double q) { return success_indicator(state, 1.0, q, noise); };
}

double probe_required(const ProbeOracle& oracle, const ProbeSchedule& schedule) {
    if (!(schedule.q_init > 0.0) || !(schedule.probe_cap > 0.0) ||
        !(schedule.probe_tol > 0.0)) {
        throw ContractError("probe schedule needs positive q_init, cap and tolerance");
    }
    if (oracle(0.0)) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = std::min(schedule.q_init, schedule.probe_cap);
    while (!oracle(hi)) {
        lo = hi;
        if (hi >= schedule.probe_cap) {
            return kInf;
        }
        hi = std::min(2.0 * hi, schedule.probe_cap);
    }
    // Iteration cap keeps the probe count within its budget; when the power
    // sits below the very first probe the refinement is absolute rather than
    // relative, which only over-jams by a sliver of q_init.
    const int max_steps = static_cast<int>(std::ceil(std::log2(1.0 / schedule.probe_tol))) + 1;
    for (int step = 0; step < max_steps && hi - lo > schedule.probe_tol * hi; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (oracle(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;  // the successful end of the bracket, so jamming here works
}

double probe_required(const FadingState& state, const NoiseModel& noise, double probe_tol,
                      double probe_cap, double q_init) {
    return probe_required(make_probe_oracle(state, noise),
                          ProbeSchedule{q_init, probe_tol, probe_cap});
}

OnlineTrace run_online(const StateEnsemble& blocks, const NoiseModel& noise,
                       const OnlineConfig& config) {
    if (config.n_blocks < 1) {
        throw ContractError("online horizon needs at least one block");
    }
    if (blocks.size() < config.n_blocks) {
        throw ContractError("ensemble has fewer states than the online horizon");
    }
    if (config.chi < 0.0 || config.tau_init < 0.0) {
        throw ContractError("threshold parameters must be non-negative");
    }
    ProbeSchedule schedule;
    schedule.q_init = config.Q / 100.0;
    schedule.probe_tol = config.probe_tol;
    schedule.probe_cap = config.probe_cap > 0.0 ? config.probe_cap : 1e6 * config.Q;

    OnlineTrace trace;
    trace.blocks.resize(config.n_blocks);
    double tau = config.tau_init;
    KahanSum spent;
    std::size_t successes = 0;
    for (std::size_t nu = 0; nu < config.n_blocks; ++nu) {
        const ProbeOracle oracle = make_probe_oracle(blocks.states[nu], noise);
        const double required = probe_required(oracle, schedule);
        const double q = required <= tau ? required : 0.0;
        const bool success = required <= tau;  // required = 0 succeeds unaided
        spent.add(q);
        const double running_avg = spent.value() / static_cast<double>(nu + 1);
        trace.blocks[nu] = {tau, q, success, running_avg};
        if (success) {
            ++successes;
        }
        tau = running_avg < config.Q ? tau + config.chi : tau - config.chi;
        tau = std::max(0.0, tau);
    }
    trace.non_outage =
        static_cast<double>(successes) / static_cast<double>(config.n_blocks);
    trace.avg_power = spent.value() / static_cast<double>(config.n_blocks);

    const std::size_t tail = std::max<std::size_t>(1, config.n_blocks / 10);
    KahanSum tail_tau;
    for (std::size_t nu = config.n_blocks - tail; nu < config.n_blocks; ++nu) {
        tail_tau.add(trace.blocks[nu].tau);
    }
    trace.tail_mean_threshold = tail_tau.value() / static_cast<double>(tail);
    return trace;
}

std::string online_trace_csv(const OnlineTrace& trace) {
    std::ostringstream oss;
    oss << "block,tau,q_used,success,running_avg_power\n";
    for (std::size_t i = 0; i < trace.blocks.size(); ++i) {
        const auto& b = trace.blocks[i];
        oss << (i + 1) << ',' << fmt_float(b.tau) << ',' << fmt_float(b.q_used) << ','
            << (b.success ? 1 : 0) << ',' << fmt_float(b.running_avg_power) << '\n';
    }
    return oss.str();
}

}  // namespace cogjam
