#pragma once

// Finite fading-state ensembles for the surveillance link simulator.
//
// An ensemble is a weighted i.i.d. sample standing in for the continuous
// joint distribution of the channel power gains; every expectation in the
// solvers is a weighted sum over it. Sampling is fully deterministic:
// identical (config, seed) pairs produce byte-identical ensembles on any
// platform.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cogjam {

/// One joint fading realization (all gains linear power gains).
///   g0  - suspicious transmitter -> suspicious receiver
///   g1  - suspicious transmitter -> eavesdropping antenna
///   g2  - jamming antenna -> suspicious receiver
///   phi - effective loop-back gain after self-interference cancellation
///         (0 means perfect cancellation)
struct FadingState {
    double g0 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    double phi = 0.0;
};

struct StateEnsemble {
    std::vector<FadingState> states;
    std::vector<double> weights;  // strictly positive, sums to 1 within 1e-12
    std::uint64_t seed = 0;
    std::string label;

    std::size_t size() const { return states.size(); }

    /// Throws ConfigError if the invariants above do not hold.
    void validate() const;
};

/// Normalized Rayleigh setup: each |h|^2 gain is exponential with mean equal
/// to the configured variance of the underlying complex coefficient.
struct RayleighConfig {
    double var0 = 1.0;
    double var1 = 0.1;
    double var2 = 0.1;
    std::size_t n_states = 0;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class LoopbackModel {
    fixed_gain,  // constant loop-back gain for co-located antennas (default)
    rayleigh,    // exponential draw around the mean loop-back gain
};

/// Geometric pathloss setup. Link means follow iota * (d/d0)^(-kappa).
/// When the eavesdropping and jamming antennas share a position, the
/// loop-back gain before cancellation is `colocated_loopback_db`; otherwise
/// it is pathloss over the inter-antenna distance with Rayleigh fading.
struct GeometryConfig {
    Vec2 tx;
    Vec2 rx;
    Vec2 eaves;
    Vec2 jammer;
    double iota = 1e-6;  // reference pathloss (linear) at d0
    double d0 = 10.0;
    double kappa = 3.0;
    double sic_db = 110.0;
    double colocated_loopback_db = -15.0;
    LoopbackModel loopback = LoopbackModel::fixed_gain;

    bool colocated() const { return eaves.x == jammer.x && eaves.y == jammer.y; }
};

StateEnsemble sample_rayleigh(const RayleighConfig& config, std::uint64_t seed);
StateEnsemble sample_geometric(const GeometryConfig& config, std::size_t n_states,
                               std::uint64_t seed);

/// Copy of the ensemble with all loop-back gains zeroed (perfect-SIC view).
StateEnsemble zero_si(const StateEnsemble& ensemble);

/// CSV with header `index,weight,g0,g1,g2,phi` and 17-digit floats.
void write_ensemble_csv(std::ostream& out, const StateEnsemble& ensemble);
std::string ensemble_csv(const StateEnsemble& ensemble);

/// SplitMix64: the repository-wide pseudo random generator. Substreams are
/// derived from (seed, stream index) so each channel link draws from its own
/// independent sequence.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double strictly inside (0, 1): 53-bit mantissa, half-ulp offset.
    double next_unit_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    /// Inverse-CDF exponential draw; strictly positive for mean > 0.
    double next_exponential(double mean) { return -mean * std::log(next_unit_open()); }

    static SplitMix64 substream(std::uint64_t seed, std::uint64_t stream);
};

}  // namespace cogjam
