#pragma once

// Per-state link quantities (SINR/SNR, rates, success indicator), baseline
// jamming policies, and aggregation of a policy into performance metrics.
// All internal math is linear; dB conversion happens at configuration time.

#include <string>
#include <vector>

#include "cogjam/fading.hpp"

namespace cogjam {

struct NoiseModel {
    double sigma0_sq = 1.0;  // noise power at the suspicious receiver
    double sigma1_sq = 1.0;  // noise power at the monitor
};

/// Per-state jamming power assignment, one entry per ensemble state.
struct JammingPolicy {
    std::vector<double> q;
    std::string label;

    double average_power(const StateEnsemble& ensemble) const;
};

enum class TxMode { fixed, waterfilling };

/// Transmit powers per state. `beta` is the dual water-level parameter and is
/// meaningful only in waterfilling mode.
struct TxPowerProfile {
    std::vector<double> p;
    TxMode mode = TxMode::fixed;
    double beta = 0.0;

    static TxPowerProfile fixed_power(double P, std::size_t n_states);
};

struct EvalReport {
    double non_outage_prob = 0.0;
    double avg_suspicious_rate = 0.0;
    double avg_eavesdrop_rate = 0.0;
    double relative_rate = 0.0;
    double avg_jamming_power = 0.0;
};

/// SINR at the suspicious receiver: g0*p / (g2*q + sigma0^2).
double sinr_receiver(const FadingState& state, double p, double q, const NoiseModel& noise);

/// SNR (or SINR under residual self-interference) at the monitor:
/// g1*p / (phi*q + sigma1^2).
double snr_monitor(const FadingState& state, double p, double q, const NoiseModel& noise);

/// Shannon rate in bps/Hz.
double rate(double snr_or_sinr);

/// True when the monitor's rate is no smaller than the receiver's. Equality
/// counts as success. Evaluated on cross-multiplied terms, so the outcome is
/// exactly invariant to the (positive) transmit power.
bool success_indicator(const FadingState& state, double p, double q, const NoiseModel& noise);

EvalReport evaluate_policy(const StateEnsemble& ensemble, const JammingPolicy& policy,
                           const TxPowerProfile& tx, const NoiseModel& noise);

/// q = Q on every state.
JammingPolicy baseline_constant(const StateEnsemble& ensemble, double Q);

/// No jamming on states that succeed on their own, budget spread evenly (in
/// the average-power sense) over the rest. All-zero when no state needs help.
JammingPolicy baseline_onoff(const StateEnsemble& ensemble, double Q, const NoiseModel& noise);

/// q = 0 everywhere.
JammingPolicy baseline_passive(const StateEnsemble& ensemble);

/// CSV row `label,Q,non_outage,avg_rate_suspicious,avg_rate_eavesdrop,relative_rate,avg_jam_power`.
std::string eval_report_csv_row(const std::string& label, double Q, const EvalReport& report);

}  // namespace cogjam
