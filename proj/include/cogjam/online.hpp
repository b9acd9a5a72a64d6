#pragma once

// Practical online jamming over a finite horizon of blocks. The monitor does
// not see the suspicious or jamming channels directly; per block it learns
// the required jamming power through a success/failure probe oracle and runs
// a threshold policy whose threshold adapts to track the power budget.

#include <cstddef>
#include <functional>
#include <vector>

#include "cogjam/fading.hpp"
#include "cogjam/metrics.hpp"

namespace cogjam {

/// Answers "does eavesdropping succeed at jamming power q?" for one hidden
/// block. The decision logic below sees channels only through this closure.
using ProbeOracle = std::function<bool(double)>;

ProbeOracle make_probe_oracle(const FadingState& state, const NoiseModel& noise);

struct ProbeSchedule {
    double q_init = 0.0;    // first probe power (doubled until success)
    double probe_tol = 1e-3;  // relative bracket width of the final bisection
    double probe_cap = 0.0;   // give up above this power
};

/// Learn the required jamming power: exponential doubling to bracket it, then
/// bisection. Returns 0 when the block succeeds unaided and +inf when even
/// the cap fails (jamming cannot help this block).
double probe_required(const ProbeOracle& oracle, const ProbeSchedule& schedule);
double probe_required(const FadingState& state, const NoiseModel& noise, double probe_tol,
                      double probe_cap, double q_init);

struct OnlineConfig {
    std::size_t n_blocks = 0;
    double tau_init = 0.0;   // starting threshold
    double chi = 0.0;        // threshold step size
    double Q = 0.0;          // average jamming power budget
    double probe_tol = 1e-3;
    double probe_cap = 0.0;  // defaults to 1e6 * Q when zero
};

struct OnlineBlock {
    double tau = 0.0;      // threshold used in this block
    double q_used = 0.0;
    bool success = false;
    double running_avg_power = 0.0;  // average including this block
};

struct OnlineTrace {
    std::vector<OnlineBlock> blocks;
    double non_outage = 0.0;
    double avg_power = 0.0;
    double tail_mean_threshold = 0.0;  // mean threshold over the last 10% of blocks
};

/// Blocks are the ensemble's states in order; the first config.n_blocks of
/// them are consumed. Threshold update: raise by chi while the running
/// average power (including the current block) is below Q, otherwise lower,
/// floored at zero.
OnlineTrace run_online(const StateEnsemble& blocks, const NoiseModel& noise,
                       const OnlineConfig& config);

/// Trace CSV with header `block,tau,q_used,success,running_avg_power`.
std::string online_trace_csv(const OnlineTrace& trace);

}  // namespace cogjam
