#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rfsim/analysis.hpp"
#include "rfsim/channel.hpp"
#include "rfsim/dataset.hpp"

using namespace rfsim;

namespace {

struct CorrStats {
    double mean_abs;     // average of |corr| per draw pair
    double signed_mean;  // average of corr per draw pair (the Fig-style estimate)
};

// Pearson(|H_a|, |H_b|) statistics over paired draws from two sessions.
CorrStats cross_session_corr(double rho_env, int n_pairs, std::uint64_t seed) {
    const EnvironmentModel env(seed, rho_env, 5);
    const SessionDescriptor sess_a{1, "t1", "l1", PayloadKind::Random};
    const SessionDescriptor sess_b{1, "t2", "l2", PayloadKind::Random};
    Rng rng_a(derive_seed(seed, "a")), rng_b(derive_seed(seed, "b"));
    double total_abs = 0.0, total = 0.0;
    for (int i = 0; i < n_pairs; ++i) {
        const auto ch_a = draw_channel(env, sess_a, 1, kApNode, rng_a);
        const auto ch_b = draw_channel(env, sess_b, 1, kApNode, rng_b);
        const RVec mag_a = freq_response(ch_a, 64).cwiseAbs();
        const RVec mag_b = freq_response(ch_b, 64).cwiseAbs();
        const double r = pearson(mag_a, mag_b);
        total_abs += std::abs(r);
        total += r;
    }
    return {total_abs / n_pairs, total / n_pairs};
}

}  // namespace

TEST_CASE("environment model validation") {
    CHECK_THROWS_AS(EnvironmentModel(1, -0.1, 5), InvalidInput);
    CHECK_THROWS_AS(EnvironmentModel(1, 1.1, 5), InvalidInput);
    CHECK_THROWS_AS(EnvironmentModel(1, 0.5, 0), InvalidInput);
    CHECK_THROWS_AS(EnvironmentModel(1, 0.5, 17), InvalidInput);
}

TEST_CASE("draws are unit-gain normalized") {
    const EnvironmentModel env(99, 0.4, 5);
    const SessionDescriptor sess{1, "t1", "l1", PayloadKind::Random};
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto ch = draw_channel(env, sess, std::uint16_t(1 + i % 4), kApNode, rng);
        CHECK(ch.taps.size() == 5);
        CHECK(std::abs(ch.taps.squaredNorm() - 1.0) < 1e-12);
    }
}

TEST_CASE("determinism and session sensitivity") {
    const EnvironmentModel env(7, 0.4, 5);
    const SessionDescriptor sess{1, "t1", "l1", PayloadKind::Random};
    Rng rng_a(5), rng_b(5);
    const auto a = draw_channel(env, sess, 2, kApNode, rng_a);
    const auto b = draw_channel(env, sess, 2, kApNode, rng_b);
    CHECK(a.taps == b.taps);

    // a new (time, location) pair yields a fresh draw even from an equal stream
    Rng rng_c(5);
    const SessionDescriptor other{1, "t2", "l1", PayloadKind::Random};
    const auto c = draw_channel(env, other, 2, kApNode, rng_c);
    CHECK(a.taps != c.taps);
}

TEST_CASE("degenerate mixing rho_env = 1 freezes the channel per receiver") {
    const EnvironmentModel env(13, 1.0, 5);
    Rng rng(3);
    const auto a = draw_channel(env, {1, "t1", "l1", PayloadKind::Random}, 1, kApNode, rng);
    const auto b = draw_channel(env, {2, "t9", "l7", PayloadKind::Random}, 3, kApNode, rng);
    CHECK((a.taps - b.taps).cwiseAbs().maxCoeff() < 1e-15);
    const auto c = draw_channel(env, {1, "t1", "l1", PayloadKind::Random}, 1, kEveNode, rng);
    CHECK(a.taps != c.taps);  // different receiver endpoint, different shared taps
}

TEST_CASE("independent sessions decorrelate at rho_env = 0") {
    CHECK(std::abs(cross_session_corr(0.0, 200, 2024).signed_mean) < 0.15);
}

TEST_CASE("cross-session correlation stays below 0.5 at the default mix") {
    CHECK(std::abs(cross_session_corr(0.4, 200, 2024).signed_mean) < 0.5);
}

TEST_CASE("correlation is monotone in rho_env") {
    double prev = -1.0;
    for (double rho : {0.0, 0.3, 0.6, 0.9}) {
        const double corr = cross_session_corr(rho, 200, 512).mean_abs;
        CHECK(corr >= prev);
        prev = corr;
    }
}

TEST_CASE("frequency response") {
    SUBCASE("impulse gives a flat spectrum") {
        ChannelRealization ch;
        ch.taps = CVec::Zero(1);
        ch.taps[0] = Complex(1.0, 0.0);
        const CVec h = freq_response(ch, 64);
        REQUIRE(h.size() == 64);
        for (int k = 0; k < 64; ++k) CHECK(std::abs(h[k] - Complex(1.0, 0.0)) < 1e-12);
    }
    SUBCASE("unit delay rotates one turn across the band") {
        ChannelRealization ch;
        ch.taps = CVec::Zero(2);
        ch.taps[1] = Complex(1.0, 0.0);
        const CVec h = freq_response(ch, 4);
        CHECK(std::abs(h[0] - Complex(1.0, 0.0)) < 1e-12);
        CHECK(std::abs(h[1] - Complex(0.0, -1.0)) < 1e-12);
        CHECK(std::abs(h[2] - Complex(-1.0, 0.0)) < 1e-12);
        CHECK(std::abs(h[3] - Complex(0.0, 1.0)) < 1e-12);
    }
    SUBCASE("matches the direct DFT oracle") {
        const EnvironmentModel env(5, 0.4, 5);
        Rng rng(8);
        const auto ch = draw_channel(env, {1, "t1", "l1", PayloadKind::Random}, 1, kApNode, rng);
        const CVec fast = freq_response(ch, 64);
        const CVec slow = oracle::direct_dft(ch.taps, 64);
        CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("n_points below the tap count is rejected") {
        ChannelRealization ch;
        ch.taps = CVec::Zero(5);
        CHECK_THROWS_AS((void)freq_response(ch, 4), InvalidInput);
    }
}
