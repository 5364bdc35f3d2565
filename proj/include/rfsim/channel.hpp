#pragma once

#include <cstdint>
#include <string>

#include "rfsim/common.hpp"
#include "rfsim/rng.hpp"
#include "rfsim/signal.hpp"

namespace rfsim {

// Composite multipath taps between one transceiver pair for one session,
// normalized to unit channel gain (sum |h[l]|^2 = 1).
struct ChannelRealization {
    CVec taps;
    std::uint16_t tx_id = 0;
    std::uint16_t rx_id = 0;
    std::uint16_t session_id = 0;
};

// Describes when/where a capture happened. A new (time_label, location_label)
// pair means a fresh session-specific channel draw.
struct SessionDescriptor {
    int day = 1;
    std::string time_label = "t1";
    std::string location_label = "l1";
    PayloadKind payload_mode = PayloadKind::Random;

    std::string key() const {
        return "d" + std::to_string(day) + "/" + time_label + "/" + location_label;
    }
};

// Multipath environment around the receiver endpoints. Each receiver has a
// fixed shared tap component (the scatterers near it that every incoming
// signal passes through); rho_env controls how much of a channel draw comes
// from that shared component versus a fresh per-session draw.
struct EnvironmentModel {
    std::uint64_t seed = 0;
    double rho_env = 0.4;
    int n_taps = 5;
    double pdp_decay = 1.0;  // tap l power proportional to e^{-pdp_decay * l}

    EnvironmentModel() = default;
    EnvironmentModel(std::uint64_t seed_, double rho, int taps, double decay = 1.0)
        : seed(seed_), rho_env(rho), n_taps(taps), pdp_decay(decay) {
        if (!(rho_env >= 0.0 && rho_env <= 1.0))
            throw InvalidInput("EnvironmentModel: rho_env must be in [0, 1]");
        if (n_taps < 1 || n_taps > 16) throw InvalidInput("EnvironmentModel: n_taps must be in [1, 16]");
        if (!(pdp_decay >= 0.0)) throw InvalidInput("EnvironmentModel: pdp_decay must be >= 0");
    }

    // The receiver's shared tap component; a pure function of (seed, rx_id).
    CVec shared_taps(std::uint16_t rx_id) const;
};

// Draws taps = normalize(sqrt(rho_env) * shared_taps(rx) + sqrt(1-rho_env) * fresh),
// where fresh taps are zero-mean complex Gaussian with the exponential power
// delay profile, independent per (pair, session, rng stream).
ChannelRealization draw_channel(const EnvironmentModel& env, const SessionDescriptor& session,
                                std::uint16_t tx_id, std::uint16_t rx_id, Rng& rng);

// n_points-point DFT of the zero-padded taps.
CVec freq_response(const ChannelRealization& ch, int n_points);

inline IqBuffer apply_link(const IqBuffer& x, const LinkImpairments& link, const ChannelRealization& ch,
                           double noise_std, Rng& rng) {
    return apply_link(x, link, ch.taps, noise_std, rng);
}

}  // namespace rfsim
