#include "rfsim/signal.hpp"

#include "rfsim/crc32.hpp"
#include "rfsim/dft.hpp"

namespace rfsim {

std::pair<Complex, Complex> compute_eta_kappa(const ImpairmentProfile& tx, const ImpairmentProfile& rx) {
    const Complex a_t = tx.alpha(), b_t = tx.beta();
    const Complex a_r = rx.alpha(), b_r = rx.beta();
    const Complex eta = a_r * a_t + b_r * std::conj(b_t);
    const Complex kappa = a_r * b_t + b_r * std::conj(a_t);
    return {eta, kappa};
}

CVec qpsk_map(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 2 != 0) throw InvalidInput("qpsk_map: bit count must be even");
    const double s = 1.0 / std::sqrt(2.0);
    CVec out(bits.size() / 2);
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        const double i = bits[2 * k] ? -s : s;
        const double q = bits[2 * k + 1] ? -s : s;
        out[k] = Complex(i, q);
    }
    return out;
}

namespace {

// Serializes a 16-bit counter and 16-bit mode tag little-endian, appends the
// CRC-32 of those four bytes, and expands to 64 bits MSB-first per byte.
std::vector<std::uint8_t> header_bits(std::uint16_t counter, std::uint16_t mode_tag) {
    std::uint8_t bytes[8];
    bytes[0] = static_cast<std::uint8_t>(counter & 0xFF);
    bytes[1] = static_cast<std::uint8_t>(counter >> 8);
    bytes[2] = static_cast<std::uint8_t>(mode_tag & 0xFF);
    bytes[3] = static_cast<std::uint8_t>(mode_tag >> 8);
    const std::uint32_t crc = crc32(bytes, 4);
    bytes[4] = static_cast<std::uint8_t>(crc & 0xFF);
    bytes[5] = static_cast<std::uint8_t>((crc >> 8) & 0xFF);
    bytes[6] = static_cast<std::uint8_t>((crc >> 16) & 0xFF);
    bytes[7] = static_cast<std::uint8_t>(crc >> 24);

    std::vector<std::uint8_t> bits(64);
    for (int b = 0; b < 8; ++b)
        for (int i = 0; i < 8; ++i) bits[8 * b + i] = (bytes[b] >> (7 - i)) & 1;
    return bits;
}

// Subcarrier vectors are scaled to total energy n_fft before the unitary IDFT
// so every symbol (including the zero-padded header) carries unit average
// sample power; the SNR bookkeeping relies on unit-power frames.
void append_symbol(CVec& frame, Eigen::Index offset, const CVec& subcarriers, int cp_len) {
    const double energy = subcarriers.squaredNorm();
    const CVec time =
        idft_unitary(subcarriers * std::sqrt(static_cast<double>(subcarriers.size()) / energy));
    frame.segment(offset, cp_len) = time.tail(cp_len);
    frame.segment(offset + cp_len, time.size()) = time;
}

}  // namespace

IqBuffer build_frame(const FrameSpec& spec, Rng& rng) {
    spec.validate();

    const bool repeated = spec.payload_mode.kind == PayloadKind::Repeated;
    const std::uint16_t counter = repeated ? 0 : static_cast<std::uint16_t>(spec.frame_index & 0xFFFF);
    const std::uint16_t mode_tag = static_cast<std::uint16_t>(spec.payload_mode.kind);

    CVec header(spec.n_fft);
    header.setZero();
    header.head(32) = qpsk_map(header_bits(counter, mode_tag));

    const std::size_t payload_bit_count = static_cast<std::size_t>(spec.n_symbols - 1) * 2 * spec.n_fft;
    std::vector<std::uint8_t> payload_bits;
    if (repeated) {
        Rng fixed(spec.payload_mode.seed);
        payload_bits = fixed.bits(payload_bit_count);
    } else {
        payload_bits = rng.bits(payload_bit_count);
    }
    const CVec payload_syms = qpsk_map(payload_bits);

    CVec frame(spec.samples_per_frame());
    const int sym_len = spec.n_fft + spec.cp_len;
    append_symbol(frame, 0, header, spec.cp_len);
    for (int s = 1; s < spec.n_symbols; ++s) {
        const CVec sub = payload_syms.segment(static_cast<Eigen::Index>(s - 1) * spec.n_fft, spec.n_fft);
        append_symbol(frame, static_cast<Eigen::Index>(s) * sym_len, sub, spec.cp_len);
    }
    return {std::move(frame), spec.t_s};
}

IqBuffer apply_link(const IqBuffer& x, const LinkImpairments& link, const CVec& taps, double noise_std,
                    Rng& rng) {
    if (x.samples.size() == 0) throw InvalidInput("apply_link: empty input buffer");
    if (taps.size() == 0) throw InvalidInput("apply_link: empty channel taps");
    if (noise_std < 0.0) throw InvalidInput("apply_link: noise_std must be >= 0");

    const Eigen::Index n_samples = x.samples.size();
    const Eigen::Index n_taps = taps.size();

    CVec y(n_samples);
    for (Eigen::Index n = 0; n < n_samples; ++n) {
        Complex r{0.0, 0.0};
        const Eigen::Index l_max = std::min(n_taps - 1, n);
        for (Eigen::Index l = 0; l <= l_max; ++l) r += taps[l] * x.samples[n - l];

        const double phi = static_cast<double>(n) * link.d_omega_rt * x.t_s + link.psi_rt;
        const Complex rot = std::polar(1.0, -phi);
        y[n] = link.eta * rot * r + link.kappa * std::conj(rot) * std::conj(r);
        if (noise_std > 0.0) y[n] += noise_std * rng.complex_normal();
    }
    return {std::move(y), x.t_s};
}

}  // namespace rfsim
