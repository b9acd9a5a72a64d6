#include "cogjam/fading.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "cogjam/util.hpp"

namespace cogjam {

namespace {

double sq(double x) { return x * x; }

double distance(const Vec2& a, const Vec2& b) {
    return std::sqrt(sq(a.x - b.x) + sq(a.y - b.y));
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<double> uniform_weights(std::size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

// Per-link streams: 0 -> g0, 1 -> g1, 2 -> g2, 3 -> loop-back.
enum : std::uint64_t { kStreamG0 = 0, kStreamG1 = 1, kStreamG2 = 2, kStreamLoopback = 3 };

void fill_exponential(std::vector<FadingState>& states, double FadingState::* field,
                      double mean, std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 rng = SplitMix64::substream(seed, stream);
    for (auto& s : states) {
        s.*field = rng.next_exponential(mean);
    }
}

}  // namespace

SplitMix64 SplitMix64::substream(std::uint64_t seed, std::uint64_t stream) {
    return SplitMix64{mix64(seed + 0x9E3779B97F4A7C15ull * (stream + 1))};
}

void StateEnsemble::validate() const {
    if (states.empty()) {
        throw ConfigError("ensemble has no states");
    }
    if (weights.size() != states.size()) {
        throw ConfigError("ensemble weight/state count mismatch");
    }
    KahanSum total;
    for (double w : weights) {
        if (!(w > 0.0)) {
            throw ConfigError("ensemble weights must be strictly positive");
        }
        total.add(w);
    }
    if (std::abs(total.value() - 1.0) > 1e-12) {
        throw ConfigError("ensemble weights must sum to 1 within 1e-12");
    }
    for (const auto& s : states) {
        if (!(std::isfinite(s.g0) && std::isfinite(s.g1) && std::isfinite(s.g2) &&
              std::isfinite(s.phi)) ||
            s.g0 < 0.0 || s.g1 < 0.0 || s.g2 < 0.0 || s.phi < 0.0) {
            throw ConfigError("fading gains must be finite and non-negative");
        }
    }
}

StateEnsemble sample_rayleigh(const RayleighConfig& config, std::uint64_t seed) {
    if (!(config.var0 > 0.0 && config.var1 > 0.0 && config.var2 > 0.0)) {
        throw ConfigError("Rayleigh variances must be positive");
    }
    if (config.n_states < 1) {
        throw ConfigError("n_states must be at least 1");
    }
    StateEnsemble ensemble;
    ensemble.seed = seed;
    ensemble.label = "rayleigh";
    ensemble.states.resize(config.n_states);
    fill_exponential(ensemble.states, &FadingState::g0, config.var0, seed, kStreamG0);
    fill_exponential(ensemble.states, &FadingState::g1, config.var1, seed, kStreamG1);
    fill_exponential(ensemble.states, &FadingState::g2, config.var2, seed, kStreamG2);
    ensemble.weights = uniform_weights(config.n_states);
    return ensemble;
}

StateEnsemble sample_geometric(const GeometryConfig& config, std::size_t n_states,
                               std::uint64_t seed) {
    if (!(config.iota > 0.0) || !(config.d0 > 0.0) || !(config.kappa > 0.0)) {
        throw ConfigError("pathloss parameters must be positive");
    }
    if (n_states < 1) {
        throw ConfigError("n_states must be at least 1");
    }
    const double d_tx_rx = distance(config.tx, config.rx);
    const double d_tx_eaves = distance(config.tx, config.eaves);
    const double d_jam_rx = distance(config.jammer, config.rx);
    if (!(d_tx_rx > 0.0 && d_tx_eaves > 0.0 && d_jam_rx > 0.0)) {
        throw ConfigError("node positions give a zero-length link");
    }
    const auto pathloss = [&](double d) {
        return config.iota * std::pow(d / config.d0, -config.kappa);
    };
    const double sic = db_to_linear(config.sic_db);

    StateEnsemble ensemble;
    ensemble.seed = seed;
    ensemble.label = config.colocated() ? "geometric-colocated" : "geometric-separate";
    ensemble.states.resize(n_states);
    fill_exponential(ensemble.states, &FadingState::g0, pathloss(d_tx_rx), seed, kStreamG0);
    fill_exponential(ensemble.states, &FadingState::g1, pathloss(d_tx_eaves), seed, kStreamG1);
    fill_exponential(ensemble.states, &FadingState::g2, pathloss(d_jam_rx), seed, kStreamG2);

    if (config.colocated()) {
        const double mean_loopback = db_to_linear(config.colocated_loopback_db);
        if (config.loopback == LoopbackModel::fixed_gain) {
            const double phi = mean_loopback / sic;
            for (auto& s : ensemble.states) {
                s.phi = phi;
            }
        } else {
            SplitMix64 rng = SplitMix64::substream(seed, kStreamLoopback);
            for (auto& s : ensemble.states) {
                s.phi = rng.next_exponential(mean_loopback) / sic;
            }
        }
    } else {
        // Separate antennas: the loop-back path is an ordinary faded channel
        // over the inter-antenna distance, then reduced by the cancellation.
        const double d_loop = distance(config.eaves, config.jammer);
        if (!(d_loop > 0.0)) {
            throw ConfigError("separate antennas must not share a position");
        }
        SplitMix64 rng = SplitMix64::substream(seed, kStreamLoopback);
        const double mean_loopback = pathloss(d_loop);
        for (auto& s : ensemble.states) {
            s.phi = rng.next_exponential(mean_loopback) / sic;
        }
    }
    ensemble.weights = uniform_weights(n_states);
    return ensemble;
}

StateEnsemble zero_si(const StateEnsemble& ensemble) {
    StateEnsemble out = ensemble;
    for (auto& s : out.states) {
        s.phi = 0.0;
    }
    return out;
}

void write_ensemble_csv(std::ostream& out, const StateEnsemble& ensemble) {
    out << "index,weight,g0,g1,g2,phi\n";
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const auto& s = ensemble.states[i];
        out << i << ',' << fmt_float(ensemble.weights[i]) << ',' << fmt_float(s.g0) << ','
            << fmt_float(s.g1) << ',' << fmt_float(s.g2) << ',' << fmt_float(s.phi) << '\n';
    }
}

std::string ensemble_csv(const StateEnsemble& ensemble) {
    std::ostringstream oss;
    write_ensemble_csv(oss, ensemble);
    return oss.str();
}

}  // namespace cogjam
