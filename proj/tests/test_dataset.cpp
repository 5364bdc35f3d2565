#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "rfsim/dataset.hpp"

using namespace rfsim;

namespace {

ScenarioConfig small_config(std::uint64_t seed, int frames = 20) {
    ScenarioConfig cfg = ScenarioConfig::defaults(seed);
    cfg.frames_per_device = frames;
    return cfg;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
}

IqBuffer ramp_buffer(int n) {
    CVec samples(n);
    for (int i = 0; i < n; ++i) samples[i] = Complex(i, -i);
    return {samples, kDefaultSamplePeriod};
}

}  // namespace

TEST_CASE("window_stream counts and contents") {
    SUBCASE("exactly one window at the boundary length") {
        const auto w = window_stream(ramp_buffer(256), 64);
        CHECK(w.cols() == 1);
    }
    SUBCASE("length 320 yields two windows offset by the stride") {
        const auto w = window_stream(ramp_buffer(320), 64);
        REQUIRE(w.cols() == 2);
        // enumeration: starts at samples 0 and 64
        CHECK(w(0, 1) == 64.0);
        CHECK(w(256, 1) == -64.0);
    }
    SUBCASE("window content equals the source slice, element-exact") {
        const IqBuffer buf = ramp_buffer(400);
        const auto w = window_stream(buf, 32);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (int i = 0; i < 256; ++i) {
                CHECK(w(i, j) == buf.samples[j * 32 + i].real());
                CHECK(w(256 + i, j) == buf.samples[j * 32 + i].imag());
            }
        }
    }
    SUBCASE("short buffers give an empty result, not an error") {
        CHECK(window_stream(ramp_buffer(255), 64).cols() == 0);
    }
    SUBCASE("count formula by enumeration") {
        for (int len : {256, 257, 300, 479, 480, 4800}) {
            for (int stride : {1, 17, 64, 256}) {
                Eigen::Index expected = 0;
                for (int start = 0; start + 256 <= len; start += stride) ++expected;
                CHECK(window_count(len, stride) == expected);
            }
        }
    }
}

TEST_CASE("synth_scenario shape and labels") {
    const ScenarioConfig cfg = small_config(42);
    const auto bundles = synth_scenario(cfg);
    REQUIRE(bundles.size() == 6);
    for (const auto& name : bundle_names()) REQUIRE(bundles.count(name) == 1);

    const Eigen::Index per_device = window_count(20 * 240, 64);
    CHECK(per_device == (20 * 240 - 256) / 64 + 1);

    SUBCASE("window counts follow the enumeration formula") {
        for (const auto& [name, b] : bundles) CHECK(b.windows.cols() == 4 * per_device);
    }
    SUBCASE("label integrity: AP bundles carry device ids, attack bundles carry only EVE") {
        for (const auto& name : {"trs1", "tes1", "trs2", "tes2"}) {
            const auto& b = bundles.at(name);
            std::set<std::uint16_t> seen(b.labels.begin(), b.labels.end());
            CHECK(seen == std::set<std::uint16_t>{1, 2, 3, 4});
        }
        for (const auto& name : {"as1", "as2"}) {
            const auto& b = bundles.at(name);
            for (auto label : b.labels) CHECK(label == kEveLabel);
            CHECK(b.raw.size() == 4);  // one capture per device
        }
    }
    SUBCASE("repeated-payload sessions reuse one fixed frame across devices and frames") {
        FrameSpec spec = cfg.frame;
        spec.payload_mode = PayloadMode::repeated(cfg.repeated_payload_seed());
        Rng rng(0);
        const IqBuffer fixed = build_frame(spec, rng);
        // trs2 uses the repeated mode: every transmitted frame is bit-identical,
        // so Eve's raw captures in as2 must be length frames*240 with windows
        // that repeat with period 240 after the channel settles.
        const auto& as2 = bundles.at("as2");
        for (const auto& capture : as2.raw) {
            REQUIRE(capture.samples.size() == 20 * 240);
            CHECK(capture.payload_mode == PayloadKind::Repeated);
        }
        CHECK(fixed.samples.size() == 240);
    }
    SUBCASE("random sessions differ across devices") {
        const auto& trs1 = bundles.at("trs1");
        CHECK(trs1.windows.col(0) != trs1.windows.col(per_device));
    }
}

TEST_CASE("synthesis is deterministic") {
    const auto a = synth_scenario(small_config(7, 6));
    const auto b = synth_scenario(small_config(7, 6));
    for (const auto& name : bundle_names()) {
        CHECK(a.at(name).windows == b.at(name).windows);
        CHECK(a.at(name).labels == b.at(name).labels);
    }
    const auto c = synth_scenario(small_config(8, 6));
    CHECK(a.at("trs1").windows != c.at("trs1").windows);
}

TEST_CASE("standardize") {
    SUBCASE("per-source pooled stats become 0/1") {
        auto bundles = synth_scenario(small_config(3, 4));
        DatasetBundle& b = bundles.at("trs1");
        standardize(b);
        CHECK(b.standardized);
        REQUIRE(b.stats.size() == 4);
        for (std::uint16_t d = 1; d <= 4; ++d) {
            double sum = 0.0, count = 0.0;
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (b.labels[j] != d) continue;
                sum += b.windows.col(j).cast<double>().sum();
                count += kWindowValues;
            }
            const double mean = sum / count;
            double sq = 0.0;
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (b.labels[j] != d) continue;
                sq += (b.windows.col(j).cast<double>().array() - mean).square().sum();
            }
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(std::sqrt(sq / count) - 1.0) < 1e-9);
        }
    }
    SUBCASE("sources with different raw power standardize to identical stats") {
        DatasetBundle b;
        b.windows.resize(kWindowValues, 8);
        b.labels.assign(8, 1);
        b.session_ids.assign(8, 0);
        b.payload_modes.assign(8, PayloadKind::Random);
        Rng rng(3);
        for (int j = 0; j < 8; ++j) {
            const double scale = j < 4 ? 1.0 : 40.0;  // device 2 is 40x louder
            b.labels[j] = j < 4 ? 1 : 2;
            for (int i = 0; i < kWindowValues; ++i)
                b.windows(i, j) = float(scale * rng.normal() + (j < 4 ? 0.5 : -20.0));
        }
        standardize(b);
        // direct recomputation: both sources pooled to mean 0, std 1
        for (std::uint16_t d : {1, 2}) {
            double sum = 0.0, sq = 0.0;
            for (int j = 0; j < 8; ++j) {
                if (b.labels[j] != d) continue;
                sum += b.windows.col(j).cast<double>().sum();
            }
            const double mean = sum / (4.0 * kWindowValues);
            for (int j = 0; j < 8; ++j) {
                if (b.labels[j] != d) continue;
                sq += (b.windows.col(j).cast<double>().array() - mean).square().sum();
            }
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(std::sqrt(sq / (4.0 * kWindowValues)) - 1.0) < 1e-9);
        }
    }
    SUBCASE("constant windows are degenerate") {
        DatasetBundle b;
        b.windows = Eigen::MatrixXd::Constant(kWindowValues, 4, 2.5);
        b.labels.assign(4, 1);
        b.session_ids.assign(4, 0);
        b.payload_modes.assign(4, PayloadKind::Random);
        CHECK_THROWS_AS(standardize(b), DegenerateData);
    }
    SUBCASE("a source with a single window is rejected") {
        DatasetBundle b;
        b.windows = Eigen::MatrixXd::Random(kWindowValues, 3);
        b.labels = {1, 1, 2};
        b.session_ids.assign(3, 0);
        b.payload_modes.assign(3, PayloadKind::Random);
        CHECK_THROWS_AS(standardize(b), InvalidInput);
    }
    SUBCASE("double standardization is rejected") {
        auto bundles = synth_scenario(small_config(3, 4));
        DatasetBundle& b = bundles.at("tes1");
        standardize(b);
        CHECK_THROWS_AS(standardize(b), InvalidInput);
    }
}

TEST_CASE("stratified split") {
    auto bundles = synth_scenario(small_config(11, 10));
    DatasetBundle& b = bundles.at("trs1");
    standardize(b);
    const auto [train_b, val_b] = split_train_val(b, 55);
    CHECK(train_b.role == BundleRole::Train);
    CHECK(val_b.role == BundleRole::Val);
    CHECK(train_b.size() + val_b.size() == b.size());
    CHECK(train_b.standardized);

    // per-device ratio 70:30 within one window
    for (std::uint16_t d = 1; d <= 4; ++d) {
        const auto count = [&](const DatasetBundle& part) {
            return std::count(part.labels.begin(), part.labels.end(), d);
        };
        const double n_train = double(count(train_b));
        const double n_total = n_train + double(count(val_b));
        CHECK(std::abs(n_train - 0.7 * n_total) <= 1.0);
    }

    // deterministic and disjoint: re-splitting gives identical parts
    const auto [train_c, val_c] = split_train_val(b, 55);
    CHECK(train_b.windows == train_c.windows);
    CHECK(val_b.windows == val_c.windows);
}

TEST_CASE("bundle round-trip") {
    const std::string path = "test_bundle_roundtrip.rffp";
    auto bundles = synth_scenario(small_config(19, 4));
    const DatasetBundle& original = bundles.at("as1");

    save_bundle(original, path);
    const DatasetBundle loaded = load_bundle(path);
    CHECK(loaded.role == original.role);
    // files store f32: the loaded bundle is the f32 projection of the original
    CHECK(loaded.windows == original.windows.cast<float>().cast<double>());
    CHECK(loaded.labels == original.labels);
    CHECK(loaded.session_ids == original.session_ids);
    CHECK(loaded.raw.size() == original.raw.size());
    for (std::size_t i = 0; i < loaded.raw.size(); ++i) {
        // raw samples are stored as f32 pairs; loading re-widens them
        CHECK(loaded.raw[i].samples.size() == original.raw[i].samples.size());
        CHECK(loaded.raw[i].t_s == original.raw[i].t_s);
        for (Eigen::Index k = 0; k < loaded.raw[i].samples.size(); ++k) {
            CHECK(loaded.raw[i].samples[k].real() == double(float(original.raw[i].samples[k].real())));
            CHECK(loaded.raw[i].samples[k].imag() == double(float(original.raw[i].samples[k].imag())));
        }
    }

    // byte-for-byte re-serialization
    const std::string path2 = "test_bundle_roundtrip2.rffp";
    save_bundle(loaded, path2);
    const std::string bytes1 = read_file(path);
    const std::string bytes2 = read_file(path2);
    CHECK(bytes1 == bytes2);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("bundle format errors") {
    const std::string path = "test_bundle_errors.rffp";
    auto bundles = synth_scenario(small_config(23, 4));
    DatasetBundle& b = bundles.at("trs1");
    standardize(b);
    save_bundle(b, path);
    const std::string bytes = read_file(path);

    SUBCASE("truncation names the failing offset") {
        write_file(path, bytes.substr(0, 100));
        try {
            (void)load_bundle(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.byte_offset <= 100);
            CHECK(std::string(e.what()).find("offset") != std::string::npos);
        }
    }
    SUBCASE("bad magic is rejected at offset 0") {
        std::string corrupted = bytes;
        corrupted[0] = 'X';
        write_file(path, corrupted);
        try {
            (void)load_bundle(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.byte_offset == 0);
        }
    }
    SUBCASE("version mismatch is rejected at offset 4") {
        std::string corrupted = bytes;
        corrupted[4] = 9;
        write_file(path, corrupted);
        try {
            (void)load_bundle(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.byte_offset == 4);
        }
    }
    SUBCASE("trailing bytes are rejected") {
        write_file(path, bytes + "zz");
        CHECK_THROWS_AS((void)load_bundle(path), FormatError);
    }
    std::remove(path.c_str());
}

TEST_CASE("empty bundle round-trips as a header-only file") {
    const std::string path = "test_bundle_empty.rffp";
    DatasetBundle empty;
    empty.windows.resize(kWindowValues, 0);
    save_bundle(empty, path);
    // magic(4) + version(2) + flags(2) + count(4) + rows(2) + cols(2) + stats count(2)
    CHECK(read_file(path).size() == 18);
    const DatasetBundle loaded = load_bundle(path);
    CHECK(loaded.size() == 0);
    CHECK(loaded.raw.empty());
    std::remove(path.c_str());
}

TEST_CASE("scenario config validation") {
    ScenarioConfig cfg = ScenarioConfig::defaults(1);
    cfg.n_devices = 3;
    CHECK_THROWS_AS(synth_scenario(cfg), InvalidInput);  // profile count mismatch
    cfg = ScenarioConfig::defaults(1);
    cfg.frames_per_device = 0;
    CHECK_THROWS_AS(synth_scenario(cfg), InvalidInput);
    cfg = ScenarioConfig::defaults(1);
    cfg.sessions[0].payload_mode = PayloadKind::Repeated;
    CHECK_THROWS_AS(synth_scenario(cfg), InvalidInput);
}
