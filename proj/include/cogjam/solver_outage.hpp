#pragma once

// Delay-sensitive jamming solver: maximize the eavesdropping non-outage
// probability under an average jamming power budget, with or without
// residual self-interference. The optimal policy is a threshold rule on the
// per-state required jamming power.

#include "cogjam/fading.hpp"
#include "cogjam/metrics.hpp"

namespace cogjam {

struct OutageSolution {
    JammingPolicy policy;
    double lambda_star = 0.0;  // dual variable of the power budget
    double threshold = 0.0;    // 1/lambda_star; +inf when the budget is slack
    double non_outage = 0.0;
};

/// Minimal jamming power that makes the monitor's rate match the receiver's:
/// (g0*sigma1^2/g1 - sigma0^2)/g2. Values <= 0 mean eavesdropping succeeds
/// without jamming; +inf when no finite power can help (g1 = 0, or g2 = 0
/// with a positive numerator).
double required_power(const FadingState& state, const NoiseModel& noise);

/// Residual-self-interference variant:
/// (g0*sigma1^2 - g1*sigma0^2)/(g1*g2 - g0*phi). Returns 0 when the state
/// succeeds unaided and +inf when the loop-back leakage outruns the jamming
/// gain (g1*g2 - g0*phi <= 0 with a positive numerator).
double required_power_si(const FadingState& state, const NoiseModel& noise);

/// required_power_si nudged upward by at most a few ulps so that jamming at
/// exactly the returned value always passes the success indicator; rounding
/// in the closed form can otherwise land one ulp short of equality. Uses the
/// state's loop-back gain as stored (zero it for the perfect-SIC view).
double success_power(const FadingState& state, const NoiseModel& noise);

/// Threshold-optimal jamming under the average power budget Q. With
/// `with_si` false the states' loop-back gains are treated as zero.
OutageSolution solve_outage(const StateEnsemble& ensemble, double Q, const NoiseModel& noise,
                            bool with_si);

}  // namespace cogjam
