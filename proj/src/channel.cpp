#include "rfsim/channel.hpp"

#include "rfsim/dft.hpp"

namespace rfsim {

namespace {

// Exponential power delay profile, normalized to unit total power.
RVec pdp_weights(int n_taps, double decay) {
    RVec w(n_taps);
    for (int l = 0; l < n_taps; ++l) w[l] = std::exp(-decay * l);
    w /= w.sum();
    return w;
}

CVec draw_pdp_taps(int n_taps, double decay, Rng& rng) {
    const RVec w = pdp_weights(n_taps, decay);
    CVec taps(n_taps);
    for (int l = 0; l < n_taps; ++l) taps[l] = std::sqrt(w[l]) * rng.complex_normal();
    return taps;
}

}  // namespace

CVec EnvironmentModel::shared_taps(std::uint16_t rx_id) const {
    Rng rng(derive_seed(seed, "env-shared/" + std::to_string(rx_id)));
    CVec taps = draw_pdp_taps(n_taps, pdp_decay, rng);
    taps.normalize();
    return taps;
}

ChannelRealization draw_channel(const EnvironmentModel& env, const SessionDescriptor& session,
                                std::uint16_t tx_id, std::uint16_t rx_id, Rng& rng) {
    // The session labels and pair ids are folded into the stream so that a new
    // (time, location) pair always yields a fresh session-specific draw, even
    // if a caller reuses one rng across pairs.
    const std::uint64_t base = rng.next_u64();
    Rng local(derive_seed(base, "chan-fresh/" + session.key() + "/" + std::to_string(tx_id) + "/" +
                                    std::to_string(rx_id)));
    const CVec fresh = draw_pdp_taps(env.n_taps, env.pdp_decay, local);

    CVec taps = std::sqrt(env.rho_env) * env.shared_taps(rx_id) + std::sqrt(1.0 - env.rho_env) * fresh;
    taps.normalize();

    ChannelRealization ch;
    ch.taps = std::move(taps);
    ch.tx_id = tx_id;
    ch.rx_id = rx_id;
    return ch;
}

CVec freq_response(const ChannelRealization& ch, int n_points) {
    if (n_points < ch.taps.size())
        throw InvalidInput("freq_response: n_points must be >= tap count");
    CVec padded(n_points);
    padded.setZero();
    padded.head(ch.taps.size()) = ch.taps;
    return dft_forward(padded);
}

}  // namespace rfsim
