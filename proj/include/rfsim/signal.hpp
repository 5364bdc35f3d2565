#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rfsim/common.hpp"
#include "rfsim/rng.hpp"

namespace rfsim {

// Transmit- or receive-side hardware imperfections of one transceiver:
// IQ amplitude/phase imbalance (eps, dphi), oscillator frequency offset
// contribution (d_omega, rad/s) and initial phase offset (psi, rad).
struct ImpairmentProfile {
    double eps = 0.0;
    double dphi = 0.0;
    double d_omega = 0.0;
    double psi = 0.0;

    ImpairmentProfile() = default;
    ImpairmentProfile(double eps_, double dphi_, double d_omega_, double psi_)
        : eps(eps_), dphi(dphi_), d_omega(d_omega_), psi(psi_) {
        if (!(eps >= 0.0 && eps <= 0.2))
            throw InvalidInput("ImpairmentProfile: eps must be in [0, 0.2], got " + std::to_string(eps));
        if (!(dphi >= -0.3 && dphi <= 0.3))
            throw InvalidInput("ImpairmentProfile: dphi must be in [-0.3, 0.3] rad, got " + std::to_string(dphi));
    }

    // IQ-imbalance mixing coefficients. An ideal branch has alpha = 1, beta = 0;
    // beta weighs the conjugate image that imbalance leaks into the signal.
    Complex alpha() const { return {std::cos(dphi), eps * std::sin(dphi)}; }
    Complex beta() const { return {eps * std::cos(dphi), -std::sin(dphi)}; }

    static ImpairmentProfile ideal() { return {}; }
};

// Composite TX->RX coefficients: eta scales the direct term, kappa the
// conjugate image term, and the residual CFO/phase are RX minus TX.
std::pair<Complex, Complex> compute_eta_kappa(const ImpairmentProfile& tx, const ImpairmentProfile& rx);

struct LinkImpairments {
    ImpairmentProfile tx;
    ImpairmentProfile rx;
    Complex eta{1.0, 0.0};
    Complex kappa{0.0, 0.0};
    double d_omega_rt = 0.0;
    double psi_rt = 0.0;

    LinkImpairments() = default;
    LinkImpairments(const ImpairmentProfile& tx_, const ImpairmentProfile& rx_) : tx(tx_), rx(rx_) {
        std::tie(eta, kappa) = compute_eta_kappa(tx, rx);
        d_omega_rt = rx.d_omega - tx.d_omega;
        psi_rt = rx.psi - tx.psi;
    }

    static LinkImpairments ideal() { return {}; }
};

enum class PayloadKind : std::uint8_t { Random = 0, Repeated = 1 };

// Repeated mode regenerates the exact same payload bits from `seed` on every
// call, so every frame is bit-identical; Random mode consumes the caller's
// bit stream.
struct PayloadMode {
    PayloadKind kind = PayloadKind::Random;
    std::uint64_t seed = 0;

    static PayloadMode random(std::uint64_t seed) { return {PayloadKind::Random, seed}; }
    static PayloadMode repeated(std::uint64_t seed) { return {PayloadKind::Repeated, seed}; }
};

constexpr double kDefaultSamplePeriod = 1.0 / 192000.0;

struct FrameSpec {
    int n_fft = 64;
    int cp_len = 16;
    int n_symbols = 3;
    PayloadMode payload_mode{};
    double t_s = kDefaultSamplePeriod;
    // Header counter for Random-mode frames; Repeated-mode headers always use 0
    // so the whole frame stays bit-identical.
    std::uint32_t frame_index = 0;

    void validate() const {
        if (n_fft < 32) throw InvalidInput("FrameSpec: n_fft must be >= 32 to carry the 64-bit header");
        if (cp_len < 0 || cp_len > n_fft) throw InvalidInput("FrameSpec: cp_len must be in [0, n_fft]");
        if (n_symbols != 3) throw InvalidInput("FrameSpec: frames carry exactly 3 OFDM symbols");
        if (!(t_s > 0.0)) throw InvalidInput("FrameSpec: sample period must be positive");
    }

    int samples_per_frame() const { return n_symbols * (n_fft + cp_len); }
};

// A complex baseband sample sequence with its sample period.
struct IqBuffer {
    CVec samples;
    double t_s = kDefaultSamplePeriod;

    IqBuffer() = default;
    IqBuffer(CVec s, double t_s_) : samples(std::move(s)), t_s(t_s_) {
        if (!samples.allFinite()) throw InvalidInput("IqBuffer: samples must be finite");
    }
};

// Gray-mapped unit-energy QPSK: bit pair (b_I, b_Q) -> ((1-2 b_I) + j (1-2 b_Q)) / sqrt(2).
CVec qpsk_map(const std::vector<std::uint8_t>& bits);

// Builds one OFDM frame: symbol 1 carries the 64-bit header (frame counter,
// payload-mode tag, CRC-32 of those 32 bits) zero-padded to n_fft subcarriers;
// the remaining symbols carry payload bits. Each symbol is the unitary IDFT of
// its subcarriers with a cp_len cyclic prefix prepended.
IqBuffer build_frame(const FrameSpec& spec, Rng& rng);

// Full link distortion of one buffer:
//   r[n] = sum_l h[l] x[n-l]                     (x[m] = 0 for m < 0)
//   y[n] = eta e^{-j phi(n)} r[n] + kappa e^{+j phi(n)} conj(r[n]) + w[n]
// with phi(n) = n * d_omega_rt * t_s + psi_rt and w circularly-symmetric
// complex Gaussian of per-component standard deviation noise_std/sqrt(2).
IqBuffer apply_link(const IqBuffer& x, const LinkImpairments& link, const CVec& taps, double noise_std,
                    Rng& rng);

// noise_std for a target SNR against unit-power transmit frames through a
// unit-gain channel.
inline double noise_std_for_snr_db(double snr_db) { return std::sqrt(std::pow(10.0, -snr_db / 10.0)); }

}  // namespace rfsim
