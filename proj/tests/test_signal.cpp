#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rfsim/signal.hpp"

using namespace rfsim;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}

TEST_CASE("qpsk gray mapping convention") {
    const CVec one = qpsk_map({0, 0});
    CHECK(one.size() == 1);
    CHECK(one[0].real() == doctest::Approx(kInvSqrt2).epsilon(1e-15));
    CHECK(one[0].imag() == doctest::Approx(kInvSqrt2).epsilon(1e-15));

    const CVec two = qpsk_map({0, 0, 1, 1});
    CHECK(two[0] == Complex(kInvSqrt2, kInvSqrt2));
    CHECK(two[1] == Complex(-kInvSqrt2, -kInvSqrt2));

    CHECK_THROWS_AS(qpsk_map({0, 1, 0}), InvalidInput);
}

TEST_CASE("qpsk symbols have unit mean power") {
    Rng rng(42);
    const auto bits = rng.bits(128);
    const CVec syms = qpsk_map(bits);
    // brute-force power sum over the mapped sequence
    double power = 0.0;
    for (Eigen::Index i = 0; i < syms.size(); ++i) power += std::norm(syms[i]);
    CHECK(power / double(syms.size()) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("impairment profile validation and derived coefficients") {
    CHECK_THROWS_AS(ImpairmentProfile(0.25, 0.0, 0.0, 0.0), InvalidInput);
    CHECK_THROWS_AS(ImpairmentProfile(0.1, 0.4, 0.0, 0.0), InvalidInput);
    CHECK_THROWS_AS(ImpairmentProfile(-0.01, 0.0, 0.0, 0.0), InvalidInput);

    // |alpha|^2 - |beta|^2 = (1 - eps^2) cos(2 dphi)
    for (double eps : {0.0, 0.05, 0.2}) {
        for (double dphi : {-0.3, -0.1, 0.0, 0.2, 0.3}) {
            const ImpairmentProfile p(eps, dphi, 0.0, 0.0);
            const double lhs = std::norm(p.alpha()) - std::norm(p.beta());
            const double rhs = (1.0 - eps * eps) * std::cos(2.0 * dphi);
            CHECK(std::abs(lhs - rhs) < 1e-12);
        }
    }
}

TEST_CASE("eta/kappa closed forms") {
    SUBCASE("ideal pair is the identity link") {
        const auto [eta, kappa] = compute_eta_kappa(ImpairmentProfile::ideal(), ImpairmentProfile::ideal());
        CHECK(eta == Complex(1.0, 0.0));
        CHECK(kappa == Complex(0.0, 0.0));
    }
    SUBCASE("impaired tx against ideal rx reduces to tx alpha/beta") {
        const ImpairmentProfile tx(0.05, 0.1, 0.0, 0.0);
        const auto [eta, kappa] = compute_eta_kappa(tx, ImpairmentProfile::ideal());
        CHECK(std::abs(eta - Complex(std::cos(0.1), 0.05 * std::sin(0.1))) < 1e-15);
        CHECK(std::abs(kappa - Complex(0.05 * std::cos(0.1), -std::sin(0.1))) < 1e-15);
    }
    SUBCASE("generic pair matches the term-by-term oracle") {
        const ImpairmentProfile tx(0.03, 0.05, 0.0, 0.0);
        const ImpairmentProfile rx(0.02, -0.04, 0.0, 0.0);
        const auto [eta, kappa] = compute_eta_kappa(tx, rx);
        const auto [eta_o, kappa_o] = oracle::eta_kappa(0.03, 0.05, 0.02, -0.04);
        CHECK(std::abs(eta - eta_o) < 1e-15);
        CHECK(std::abs(kappa - kappa_o) < 1e-15);
    }
}

TEST_CASE("link impairments derived fields") {
    const ImpairmentProfile tx(0.02, 0.01, 2.0 * kPi * 100.0, 0.5);
    const ImpairmentProfile rx(0.03, -0.02, 2.0 * kPi * 40.0, -0.2);
    const LinkImpairments link(tx, rx);
    CHECK(link.d_omega_rt == doctest::Approx(2.0 * kPi * -60.0));
    CHECK(link.psi_rt == doctest::Approx(-0.7));
    const auto [eta, kappa] = compute_eta_kappa(tx, rx);
    CHECK(link.eta == eta);
    CHECK(link.kappa == kappa);
}

TEST_CASE("frame structure") {
    FrameSpec spec;
    CHECK(spec.samples_per_frame() == 240);

    SUBCASE("repeated mode is bit-identical across calls and frame indices") {
        spec.payload_mode = PayloadMode::repeated(7);
        Rng rng_a(1), rng_b(2);
        const IqBuffer a = build_frame(spec, rng_a);
        spec.frame_index = 55;  // ignored in repeated mode
        const IqBuffer b = build_frame(spec, rng_b);
        REQUIRE(a.samples.size() == 240);
        CHECK(a.samples == b.samples);
    }
    SUBCASE("random mode differs across calls") {
        spec.payload_mode = PayloadMode::random(7);
        Rng rng(7);
        const IqBuffer a = build_frame(spec, rng);
        const IqBuffer b = build_frame(spec, rng);
        CHECK(a.samples != b.samples);
        // header symbol is identical (same counter), payload sections differ
        CHECK(a.samples.head(80) == b.samples.head(80));
        CHECK(a.samples.tail(160) != b.samples.tail(160));
    }
    SUBCASE("cyclic prefix equals the symbol tail") {
        spec.payload_mode = PayloadMode::random(3);
        Rng rng(3);
        const IqBuffer frame = build_frame(spec, rng);
        for (int s = 0; s < 3; ++s) {
            const auto sym = frame.samples.segment(s * 80, 80);
            CHECK(sym.head(16) == sym.segment(64, 16));
        }
    }
    SUBCASE("identical spec and seed give bit-identical frames") {
        spec.payload_mode = PayloadMode::random(99);
        Rng rng_a(99), rng_b(99);
        const IqBuffer a = build_frame(spec, rng_a);
        const IqBuffer b = build_frame(spec, rng_b);
        CHECK(a.samples == b.samples);
    }
    SUBCASE("frames average unit sample power") {
        spec.payload_mode = PayloadMode::random(11);
        Rng rng(11);
        double power = 0.0;
        const int frames = 50;
        for (int f = 0; f < frames; ++f) power += build_frame(spec, rng).samples.squaredNorm();
        power /= frames * 240.0;
        CHECK(power == doctest::Approx(1.0).epsilon(0.05));
    }
    SUBCASE("spec validation") {
        Rng rng(0);
        FrameSpec bad = spec;
        bad.n_fft = 16;
        CHECK_THROWS_AS((void)build_frame(bad, rng), InvalidInput);
        bad = spec;
        bad.cp_len = -1;
        CHECK_THROWS_AS((void)build_frame(bad, rng), InvalidInput);
    }
}

TEST_CASE("apply_link identity and errors") {
    Rng rng(5);
    FrameSpec spec;
    spec.payload_mode = PayloadMode::random(5);
    const IqBuffer x = build_frame(spec, rng);
    CVec one_tap(1);
    one_tap[0] = Complex(1.0, 0.0);

    SUBCASE("ideal link over an identity channel is exact") {
        Rng noise(0);
        const IqBuffer y = apply_link(x, LinkImpairments::ideal(), one_tap, 0.0, noise);
        CHECK((y.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("cfo-only link is a pure per-sample rotation") {
        ImpairmentProfile rx_prof(0.0, 0.0, 2.0 * kPi * 50.0, 0.0);
        const LinkImpairments link(ImpairmentProfile::ideal(), rx_prof);
        Rng noise(0);
        const IqBuffer y = apply_link(x, link, one_tap, 0.0, noise);
        double max_err = 0.0;
        for (Eigen::Index n = 0; n < x.samples.size(); ++n) {
            const Complex expected =
                std::exp(Complex(0.0, -double(n) * 2.0 * kPi * 50.0 * x.t_s)) * x.samples[n];
            max_err = std::max(max_err, std::abs(y.samples[n] - expected));
        }
        CHECK(max_err < 1e-12);
    }
    SUBCASE("errors") {
        Rng noise(0);
        CHECK_THROWS_AS((void)apply_link(IqBuffer{}, LinkImpairments::ideal(), one_tap, 0.0, noise),
                        InvalidInput);
        CHECK_THROWS_AS((void)apply_link(x, LinkImpairments::ideal(), CVec{}, 0.0, noise), InvalidInput);
        CHECK_THROWS_AS((void)apply_link(x, LinkImpairments::ideal(), one_tap, -0.1, noise), InvalidInput);
    }
}

TEST_CASE("apply_link matches the direct-sum oracle") {
    SUBCASE("small case at tight tolerance") {
        Rng rng(17);
        CVec x(8);
        for (int i = 0; i < 8; ++i) x[i] = rng.complex_normal();
        CVec taps(3);
        for (int i = 0; i < 3; ++i) taps[i] = rng.complex_normal();
        const ImpairmentProfile tx(0.05, 0.1, 2.0 * kPi * 300.0, 0.4);
        const ImpairmentProfile rx(0.02, -0.07, 2.0 * kPi * -120.0, -1.0);
        const LinkImpairments link(tx, rx);

        Rng noise(0);
        const IqBuffer y = apply_link(IqBuffer(x, kDefaultSamplePeriod), link, taps, 0.0, noise);
        const CVec expected = oracle::receive_chain(x, link.eta, link.kappa, link.d_omega_rt,
                                                    link.psi_rt, kDefaultSamplePeriod, taps);
        CHECK((y.samples - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("100 seeded random instances") {
        for (int instance = 0; instance < 100; ++instance) {
            Rng rng(1000 + instance);
            const int len = 1 + int(rng.below(512));
            const int n_taps = 1 + int(rng.below(8));
            CVec x(len);
            for (int i = 0; i < len; ++i) x[i] = rng.complex_normal();
            CVec taps(n_taps);
            for (int i = 0; i < n_taps; ++i) taps[i] = rng.complex_normal();
            const ImpairmentProfile tx(0.2 * rng.uniform01(), 0.6 * rng.uniform01() - 0.3,
                                       2.0 * kPi * (2000.0 * rng.uniform01() - 1000.0),
                                       2.0 * kPi * rng.uniform01());
            const ImpairmentProfile rx(0.2 * rng.uniform01(), 0.6 * rng.uniform01() - 0.3,
                                       2.0 * kPi * (2000.0 * rng.uniform01() - 1000.0),
                                       2.0 * kPi * rng.uniform01());
            const LinkImpairments link(tx, rx);

            Rng noise(0);
            const IqBuffer y =
                apply_link(IqBuffer(x, kDefaultSamplePeriod), link, taps, 0.0, noise);
            const CVec expected = oracle::receive_chain(x, link.eta, link.kappa, link.d_omega_rt,
                                                        link.psi_rt, kDefaultSamplePeriod, taps);
            REQUIRE((y.samples - expected).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("image term nulls without iq imbalance") {
    // beta_T = beta_R = 0 forces kappa = 0; the link is then a pure rotation.
    const ImpairmentProfile tx(0.0, 0.0, 2.0 * kPi * 500.0, 1.0);
    const ImpairmentProfile rx(0.0, 0.0, 2.0 * kPi * -200.0, 0.3);
    const LinkImpairments link(tx, rx);
    CHECK(std::abs(link.kappa) == 0.0);

    Rng rng(23);
    CVec x(64);
    for (int i = 0; i < 64; ++i) x[i] = rng.complex_normal();
    CVec one_tap(1);
    one_tap[0] = Complex(1.0, 0.0);
    Rng noise(0);
    const IqBuffer y = apply_link(IqBuffer(x, kDefaultSamplePeriod), link, one_tap, 0.0, noise);
    for (int n = 0; n < 64; ++n) CHECK(std::abs(std::abs(y.samples[n]) - std::abs(x[n])) < 1e-12);
}

TEST_CASE("real-linearity of the noiseless link") {
    Rng rng(31);
    CVec x1(32), x2(32);
    for (int i = 0; i < 32; ++i) {
        x1[i] = rng.complex_normal();
        x2[i] = rng.complex_normal();
    }
    CVec taps(4);
    for (int i = 0; i < 4; ++i) taps[i] = rng.complex_normal();
    const LinkImpairments link(ImpairmentProfile(0.1, 0.2, 2.0 * kPi * 700.0, 0.9),
                               ImpairmentProfile(0.05, -0.1, 2.0 * kPi * 150.0, -0.4));

    auto run = [&](const CVec& x) {
        Rng noise(0);
        return apply_link(IqBuffer(x, kDefaultSamplePeriod), link, taps, 0.0, noise).samples;
    };

    // additive over inputs
    const CVec sum_out = run(x1 + x2);
    CHECK((sum_out - (run(x1) + run(x2))).cwiseAbs().maxCoeff() < 1e-12);
    // real scaling commutes (complex scaling does not, due to the conjugate term)
    const double c = -2.75;
    CHECK((run(c * x1) - c * run(x1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noise statistics") {
    const Eigen::Index n = 200000;
    CVec zeros = CVec::Zero(n);
    CVec one_tap(1);
    one_tap[0] = Complex(1.0, 0.0);
    const double noise_std = 0.35;
    Rng noise(77);
    const IqBuffer y =
        apply_link(IqBuffer(zeros, kDefaultSamplePeriod), LinkImpairments::ideal(), one_tap, noise_std, noise);
    const double var = y.samples.squaredNorm() / double(n);
    CHECK(var == doctest::Approx(noise_std * noise_std).epsilon(0.02));
}

TEST_CASE("noise std from target snr") {
    CHECK(noise_std_for_snr_db(20.0) == doctest::Approx(0.1));
    CHECK(noise_std_for_snr_db(0.0) == doctest::Approx(1.0));
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(noise_std_for_snr_db(inf) == 0.0);
}
