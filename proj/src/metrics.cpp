#include "cogjam/metrics.hpp"

#include <cmath>
#include <sstream>

#include "cogjam/util.hpp"

namespace cogjam {

double JammingPolicy::average_power(const StateEnsemble& ensemble) const {
    if (q.size() != ensemble.size()) {
        throw ContractError("policy length does not match ensemble");
    }
    return weighted_sum(ensemble.weights, [&](std::size_t i) { return q[i]; });
}

TxPowerProfile TxPowerProfile::fixed_power(double P, std::size_t n_states) {
    if (!(P > 0.0)) {
        throw ContractError("fixed transmit power must be positive");
    }
    TxPowerProfile profile;
    profile.p.assign(n_states, P);
    profile.mode = TxMode::fixed;
    return profile;
}

double sinr_receiver(const FadingState& state, double p, double q, const NoiseModel& noise) {
    return state.g0 * p / (state.g2 * q + noise.sigma0_sq);
}

double snr_monitor(const FadingState& state, double p, double q, const NoiseModel& noise) {
    return state.g1 * p / (state.phi * q + noise.sigma1_sq);
}

double rate(double snr_or_sinr) { return std::log2(1.0 + snr_or_sinr); }

bool success_indicator(const FadingState& state, double /*p*/, double q,
                       const NoiseModel& noise) {
    // g1*p/(phi*q + s1) >= g0*p/(g2*q + s0), with the positive p cancelled.
    return state.g1 * (state.g2 * q + noise.sigma0_sq) >=
           state.g0 * (state.phi * q + noise.sigma1_sq);
}

EvalReport evaluate_policy(const StateEnsemble& ensemble, const JammingPolicy& policy,
                           const TxPowerProfile& tx, const NoiseModel& noise) {
    const std::size_t n = ensemble.size();
    if (policy.q.size() != n || tx.p.size() != n) {
        throw ContractError("policy/transmit profile length does not match ensemble");
    }
    KahanSum success_mass;
    KahanSum suspicious_rate;
    KahanSum eavesdrop_rate;
    KahanSum jamming_power;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = ensemble.states[i];
        const double w = ensemble.weights[i];
        const double q = policy.q[i];
        const double p = tx.p[i];
        const double r0 = rate(sinr_receiver(s, p, q, noise));
        const bool x = success_indicator(s, p, q, noise);
        success_mass.add(w * (x ? 1.0 : 0.0));
        suspicious_rate.add(w * r0);
        eavesdrop_rate.add(w * (x ? r0 : 0.0));
        jamming_power.add(w * q);
    }
    EvalReport report;
    report.non_outage_prob = success_mass.value();
    report.avg_suspicious_rate = suspicious_rate.value();
    report.avg_eavesdrop_rate = eavesdrop_rate.value();
    report.relative_rate = report.avg_suspicious_rate > 0.0
                               ? report.avg_eavesdrop_rate / report.avg_suspicious_rate
                               : 0.0;
    report.avg_jamming_power = jamming_power.value();
    return report;
}

JammingPolicy baseline_constant(const StateEnsemble& ensemble, double Q) {
    if (Q < 0.0) {
        throw ContractError("constant jamming power must be non-negative");
    }
    JammingPolicy policy;
    policy.q.assign(ensemble.size(), Q);
    policy.label = "constant";
    return policy;
}

JammingPolicy baseline_onoff(const StateEnsemble& ensemble, double Q, const NoiseModel& noise) {
    if (Q < 0.0) {
        throw ContractError("on-off jamming budget must be non-negative");
    }
    JammingPolicy policy;
    policy.q.assign(ensemble.size(), 0.0);
    policy.label = "onoff";
    KahanSum needy_mass;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const auto& s = ensemble.states[i];
        // Needs jamming when the suspicious link is strictly better at q = 0.
        if (s.g0 * noise.sigma1_sq > s.g1 * noise.sigma0_sq) {
            needy_mass.add(ensemble.weights[i]);
        }
    }
    if (needy_mass.value() <= 0.0) {
        return policy;
    }
    const double q_on = Q / needy_mass.value();
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const auto& s = ensemble.states[i];
        if (s.g0 * noise.sigma1_sq > s.g1 * noise.sigma0_sq) {
            policy.q[i] = q_on;
        }
    }
    return policy;
}

JammingPolicy baseline_passive(const StateEnsemble& ensemble) {
    JammingPolicy policy;
    policy.q.assign(ensemble.size(), 0.0);
    policy.label = "passive";
    return policy;
}

std::string eval_report_csv_row(const std::string& label, double Q, const EvalReport& report) {
    std::ostringstream oss;
    oss << label << ',' << fmt_float(Q) << ',' << fmt_float(report.non_outage_prob) << ','
        << fmt_float(report.avg_suspicious_rate) << ',' << fmt_float(report.avg_eavesdrop_rate)
        << ',' << fmt_float(report.relative_rate) << ',' << fmt_float(report.avg_jamming_power);
    return oss.str();
}

}  // namespace cogjam
