#include "rfsim/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace rfsim {

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

Eigen::MatrixXd window_stream(const IqBuffer& iq, int stride) {
    if (stride < 1) throw InvalidInput("window_stream: stride must be >= 1");
    const Eigen::Index k = window_count(iq.samples.size(), stride);
    Eigen::MatrixXd out(kWindowValues, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index start = j * stride;
        for (int i = 0; i < kWindowLen; ++i) {
            const Complex& c = iq.samples[start + i];
            out(i, j) = c.real();
            out(kWindowLen + i, j) = c.imag();
        }
    }
    return out;
}

const std::vector<std::string>& bundle_names() {
    static const std::vector<std::string> names = {"trs1", "tes1", "trs2", "tes2", "as1", "as2"};
    return names;
}

ScenarioConfig ScenarioConfig::defaults(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.master_seed = seed;
    const double tau = 2.0 * kPi;
    cfg.devices = {
        ImpairmentProfile(0.020, 0.05, tau * 60.0, 0.3),
        ImpairmentProfile(0.035, -0.04, tau * 300.0, 1.1),
        ImpairmentProfile(0.050, 0.03, tau * -450.0, -0.8),
        ImpairmentProfile(0.028, -0.06, tau * 800.0, 2.0),
    };
    cfg.ap = ImpairmentProfile(0.015, 0.02, tau * 90.0, 0.7);
    cfg.eve = ImpairmentProfile(0.042, 0.07, tau * -700.0, -1.4);
    cfg.env = EnvironmentModel(derive_seed(seed, "env"), 0.4, 5);
    cfg.sessions = {
        {1, "t1", "l1", PayloadKind::Random},
        {1, "t2", "l2", PayloadKind::Random},
        {2, "t3", "l4", PayloadKind::Repeated},
        {2, "t4", "l4", PayloadKind::Repeated},
    };
    return cfg;
}

void ScenarioConfig::validate() const {
    if (n_devices < 2) throw InvalidInput("ScenarioConfig: need at least 2 devices");
    if (static_cast<int>(devices.size()) != n_devices)
        throw InvalidInput("ScenarioConfig: device profile count must equal n_devices");
    if (frames_per_device < 1) throw InvalidInput("ScenarioConfig: frames_per_device must be >= 1");
    if (stride < 1) throw InvalidInput("ScenarioConfig: stride must be >= 1");
    if (!std::isfinite(snr_db)) throw InvalidInput("ScenarioConfig: snr_db must be finite");
    frame.validate();
    if (sessions.size() != 4) throw InvalidInput("ScenarioConfig: scenario has exactly 4 sessions");
    const PayloadKind expected[4] = {PayloadKind::Random, PayloadKind::Random, PayloadKind::Repeated,
                                     PayloadKind::Repeated};
    for (int i = 0; i < 4; ++i)
        if (sessions[i].payload_mode != expected[i])
            throw InvalidInput("ScenarioConfig: session " + std::to_string(i + 1) +
                               " has the wrong payload mode for its role");
}

namespace {

// Concatenated frames of one device within one session. Random payloads use a
// per-(session, device) bit stream; repeated payloads rebuild the one fixed
// frame every time.
IqBuffer device_stream(const ScenarioConfig& cfg, const SessionDescriptor& session, int device) {
    FrameSpec spec = cfg.frame;
    if (session.payload_mode == PayloadKind::Repeated) {
        spec.payload_mode = PayloadMode::repeated(cfg.repeated_payload_seed());
    } else {
        spec.payload_mode = PayloadMode::random(
            derive_seed(cfg.master_seed, "payload/" + session.key() + "/dev" + std::to_string(device)));
    }
    Rng bit_stream(spec.payload_mode.seed);

    const int frame_len = spec.samples_per_frame();
    CVec stream(static_cast<Eigen::Index>(cfg.frames_per_device) * frame_len);
    for (int f = 0; f < cfg.frames_per_device; ++f) {
        spec.frame_index = static_cast<std::uint32_t>(f);
        const IqBuffer frame = build_frame(spec, bit_stream);
        stream.segment(static_cast<Eigen::Index>(f) * frame_len, frame_len) = frame.samples;
    }
    return {std::move(stream), spec.t_s};
}

struct ReceivePath {
    std::uint16_t node;
    const ImpairmentProfile* profile;
    const char* tag;
};

IqBuffer receive(const ScenarioConfig& cfg, const IqBuffer& stream, const SessionDescriptor& session,
                 int device, const ReceivePath& path, double noise_std) {
    const LinkImpairments link(cfg.devices[device - 1], *path.profile);
    Rng chan_rng(derive_seed(cfg.master_seed,
                             "chan/" + session.key() + "/" + std::to_string(device) + "/" + path.tag));
    const ChannelRealization ch =
        draw_channel(cfg.env, session, static_cast<std::uint16_t>(device), path.node, chan_rng);
    Rng noise_rng(derive_seed(cfg.master_seed,
                              "noise/" + session.key() + "/" + std::to_string(device) + "/" + path.tag));
    return apply_link(stream, link, ch, noise_std, noise_rng);
}

}  // namespace

std::map<std::string, DatasetBundle> synth_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const double noise_std = noise_std_for_snr_db(cfg.snr_db);
    const Eigen::Index frame_len = cfg.frame.samples_per_frame();
    const Eigen::Index wc = window_count(static_cast<Eigen::Index>(cfg.frames_per_device) * frame_len,
                                         cfg.stride);

    struct Pass {
        const char* ap_bundle;
        int session;
        BundleRole ap_role;
        const char* eve_bundle;  // nullptr when Eve is not listening
    };
    const Pass passes[4] = {
        {"trs1", 0, BundleRole::Train, "as1"},
        {"tes1", 1, BundleRole::Test, nullptr},
        {"trs2", 2, BundleRole::Train, "as2"},
        {"tes2", 3, BundleRole::Test, nullptr},
    };

    std::map<std::string, DatasetBundle> out;
    for (const Pass& pass : passes) {
        const SessionDescriptor& session = cfg.sessions[pass.session];
        const auto sid = static_cast<std::uint16_t>(pass.session);

        DatasetBundle& ap_bundle = out[pass.ap_bundle];
        ap_bundle.role = pass.ap_role;
        ap_bundle.windows.resize(kWindowValues, static_cast<Eigen::Index>(cfg.n_devices) * wc);

        DatasetBundle* eve_bundle = nullptr;
        if (pass.eve_bundle) {
            eve_bundle = &out[pass.eve_bundle];
            eve_bundle->role = BundleRole::Attack;
            eve_bundle->windows.resize(kWindowValues, static_cast<Eigen::Index>(cfg.n_devices) * wc);
        }

        for (int d = 1; d <= cfg.n_devices; ++d) {
            const IqBuffer stream = device_stream(cfg, session, d);

            const IqBuffer at_ap = receive(cfg, stream, session, d, {kApNode, &cfg.ap, "ap"}, noise_std);
            ap_bundle.windows.middleCols(static_cast<Eigen::Index>(d - 1) * wc, wc) =
                window_stream(at_ap, cfg.stride);
            for (Eigen::Index j = 0; j < wc; ++j) {
                ap_bundle.labels.push_back(static_cast<std::uint16_t>(d));
                ap_bundle.session_ids.push_back(sid);
                ap_bundle.payload_modes.push_back(session.payload_mode);
            }

            if (eve_bundle) {
                const IqBuffer at_eve =
                    receive(cfg, stream, session, d, {kEveNode, &cfg.eve, "eve"}, noise_std);
                eve_bundle->windows.middleCols(static_cast<Eigen::Index>(d - 1) * wc, wc) =
                    window_stream(at_eve, cfg.stride);
                for (Eigen::Index j = 0; j < wc; ++j) {
                    eve_bundle->labels.push_back(kEveLabel);
                    eve_bundle->session_ids.push_back(sid);
                    eve_bundle->payload_modes.push_back(session.payload_mode);
                }
                eve_bundle->raw.push_back(
                    {kEveLabel, sid, session.payload_mode, at_eve.t_s, at_eve.samples});
            }
        }
    }
    return out;
}

void standardize(DatasetBundle& bundle) {
    if (bundle.standardized) throw InvalidInput("standardize: bundle is already standardized");

    std::map<std::uint16_t, std::vector<Eigen::Index>> by_label;
    for (std::size_t j = 0; j < bundle.size(); ++j) by_label[bundle.labels[j]].push_back(j);

    for (auto& [label, cols] : by_label) {
        if (cols.size() < 2)
            throw InvalidInput("standardize: source " + std::to_string(label) + " has fewer than 2 windows");

        const double count = static_cast<double>(cols.size()) * kWindowValues;
        double sum = 0.0;
        for (Eigen::Index j : cols) sum += bundle.windows.col(j).sum();
        const double mean = sum / count;

        double sq = 0.0;
        for (Eigen::Index j : cols) sq += (bundle.windows.col(j).array() - mean).square().sum();
        const double std_dev = std::sqrt(sq / count);
        if (!(std_dev > 1e-12 * std::max(1.0, std::abs(mean))))
            throw DegenerateData("standardize: source " + std::to_string(label) + " has zero variance");

        for (Eigen::Index j : cols)
            bundle.windows.col(j) = (bundle.windows.col(j).array() - mean) / std_dev;
        bundle.stats[label] = {mean, std_dev};
    }
    bundle.standardized = true;
}

std::pair<DatasetBundle, DatasetBundle> split_train_val(const DatasetBundle& bundle, std::uint64_t seed,
                                                        double train_frac) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw InvalidInput("split_train_val: train_frac must be in (0, 1)");

    std::map<std::uint16_t, std::vector<Eigen::Index>> by_label;
    for (std::size_t j = 0; j < bundle.size(); ++j) by_label[bundle.labels[j]].push_back(j);

    std::vector<Eigen::Index> train_idx, val_idx;
    for (auto& [label, cols] : by_label) {
        Rng rng(derive_seed(seed, "split/" + std::to_string(label)));
        for (std::size_t i = cols.size(); i > 1; --i)
            std::swap(cols[i - 1], cols[rng.below(i)]);
        const auto n_train = static_cast<std::size_t>(std::llround(train_frac * cols.size()));
        train_idx.insert(train_idx.end(), cols.begin(), cols.begin() + n_train);
        val_idx.insert(val_idx.end(), cols.begin() + n_train, cols.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    auto take = [&](const std::vector<Eigen::Index>& idx, BundleRole role) {
        DatasetBundle out;
        out.role = role;
        out.stats = bundle.stats;
        out.standardized = bundle.standardized;
        out.windows.resize(kWindowValues, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            out.windows.col(j) = bundle.windows.col(idx[j]);
            out.labels.push_back(bundle.labels[idx[j]]);
            out.session_ids.push_back(bundle.session_ids[idx[j]]);
            out.payload_modes.push_back(bundle.payload_modes[idx[j]]);
        }
        return out;
    };
    return {take(train_idx, BundleRole::Train), take(val_idx, BundleRole::Val)};
}

// ---------------------------------------------------------------------------
// Bundle file format (all little-endian):
//   "RFFP" | u16 version=1 | u16 flags | u32 window count | u16 rows=2 | u16 cols=256
//   per window: u16 label | u16 session_id | u8 payload_mode | 512 x f32
//   stats table: u16 entry count | entries {u16 label, f64 mean, f64 std}
//   if flags bit 0: u32 capture count |
//     per capture {u16 label, u16 session_id, u8 payload_mode, f64 t_s, u32 n, n x (f32 re, f32 im)}
// flags: bit 0 = raw captures present, bit 1 = standardized, bits 2-3 = role.
// ---------------------------------------------------------------------------

namespace {

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { bytes(&v, 2); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("write failed");
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == size_; }
    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > size_) throw FormatError("truncated file", pos_);
        const std::uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    std::uint8_t u8() { return *take(1); }
    std::uint16_t u16() {
        std::uint16_t v;
        std::memcpy(&v, take(2), 2);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        std::memcpy(&v, take(4), 4);
        return v;
    }
    float f32() {
        float v;
        std::memcpy(&v, take(4), 4);
        return v;
    }
    double f64() {
        double v;
        std::memcpy(&v, take(8), 8);
        return v;
    }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

constexpr char kBundleMagic[4] = {'R', 'F', 'F', 'P'};
constexpr std::uint16_t kBundleVersion = 1;

}  // namespace

void save_bundle(const DatasetBundle& bundle, const std::string& path) {
    Writer w(path);
    w.bytes(kBundleMagic, 4);
    w.u16(kBundleVersion);
    std::uint16_t flags = 0;
    if (!bundle.raw.empty()) flags |= 1u;
    if (bundle.standardized) flags |= 2u;
    flags |= static_cast<std::uint16_t>(static_cast<unsigned>(bundle.role) << 2);
    w.u16(flags);
    w.u32(static_cast<std::uint32_t>(bundle.size()));
    w.u16(2);
    w.u16(kWindowLen);

    for (std::size_t j = 0; j < bundle.size(); ++j) {
        w.u16(bundle.labels[j]);
        w.u16(bundle.session_ids[j]);
        w.u8(static_cast<std::uint8_t>(bundle.payload_modes[j]));
        const Eigen::Matrix<float, Eigen::Dynamic, 1> col = bundle.windows.col(j).cast<float>();
        w.bytes(col.data(), sizeof(float) * kWindowValues);
    }

    w.u16(static_cast<std::uint16_t>(bundle.stats.size()));
    for (const auto& [label, s] : bundle.stats) {
        w.u16(label);
        w.f64(s.mean);
        w.f64(s.std);
    }

    if (!bundle.raw.empty()) {
        w.u32(static_cast<std::uint32_t>(bundle.raw.size()));
        for (const RawCapture& c : bundle.raw) {
            w.u16(c.label);
            w.u16(c.session_id);
            w.u8(static_cast<std::uint8_t>(c.payload_mode));
            w.f64(c.t_s);
            w.u32(static_cast<std::uint32_t>(c.samples.size()));
            for (Eigen::Index i = 0; i < c.samples.size(); ++i) {
                w.f32(static_cast<float>(c.samples[i].real()));
                w.f32(static_cast<float>(c.samples[i].imag()));
            }
        }
    }
    w.close();
}

DatasetBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(data.data(), data.size());

    if (std::memcmp(r.take(4), kBundleMagic, 4) != 0) throw FormatError("bad magic", 0);
    if (r.u16() != kBundleVersion) throw FormatError("unsupported version", 4);
    const std::uint16_t flags = r.u16();
    const std::uint32_t count = r.u32();
    if (r.u16() != 2) throw FormatError("unexpected window row count", r.pos() - 2);
    if (r.u16() != kWindowLen) throw FormatError("unexpected window column count", r.pos() - 2);

    DatasetBundle bundle;
    bundle.role = static_cast<BundleRole>((flags >> 2) & 3u);
    bundle.standardized = (flags & 2u) != 0;
    bundle.windows.resize(kWindowValues, count);
    for (std::uint32_t j = 0; j < count; ++j) {
        bundle.labels.push_back(r.u16());
        bundle.session_ids.push_back(r.u16());
        bundle.payload_modes.push_back(static_cast<PayloadKind>(r.u8()));
        Eigen::Matrix<float, Eigen::Dynamic, 1> col(kWindowValues);
        std::memcpy(col.data(), r.take(sizeof(float) * kWindowValues), sizeof(float) * kWindowValues);
        bundle.windows.col(j) = col.cast<double>();
    }

    const std::uint16_t n_stats = r.u16();
    for (std::uint16_t i = 0; i < n_stats; ++i) {
        const std::uint16_t label = r.u16();
        const double mean = r.f64();
        const double std_dev = r.f64();
        bundle.stats[label] = {mean, std_dev};
    }

    if (flags & 1u) {
        const std::uint32_t n_raw = r.u32();
        for (std::uint32_t i = 0; i < n_raw; ++i) {
            RawCapture c;
            c.label = r.u16();
            c.session_id = r.u16();
            c.payload_mode = static_cast<PayloadKind>(r.u8());
            c.t_s = r.f64();
            const std::uint32_t n = r.u32();
            c.samples.resize(n);
            for (std::uint32_t k = 0; k < n; ++k) {
                const double re = r.f32();
                const double im = r.f32();
                c.samples[k] = Complex(re, im);
            }
            bundle.raw.push_back(std::move(c));
        }
    }
    if (!r.done()) throw FormatError("trailing bytes after bundle", r.pos());
    return bundle;
}

}  // namespace rfsim
