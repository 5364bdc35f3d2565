#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rfsim/channel.hpp"
#include "rfsim/common.hpp"
#include "rfsim/signal.hpp"

namespace rfsim {

// Window label 0 is reserved for Eve; legitimate devices are 1..n_devices.
constexpr std::uint16_t kEveLabel = 0;

// Node ids for channel endpoints (distinct from window labels).
constexpr std::uint16_t kApNode = 100;
constexpr std::uint16_t kEveNode = 101;

enum class BundleRole : std::uint8_t { Train = 0, Val = 1, Test = 2, Attack = 3 };

struct SourceStats {
    double mean = 0.0;
    double std = 1.0;
};

// A pre-windowing capture kept alongside the windows of attack bundles, so
// replay runs can re-transmit exactly what Eve recorded.
struct RawCapture {
    std::uint16_t label = kEveLabel;
    std::uint16_t session_id = 0;
    PayloadKind payload_mode = PayloadKind::Random;
    double t_s = kDefaultSamplePeriod;
    CVec samples;
};

// Labeled I/Q windows. Windows are stored as one 512 x n matrix, column j =
// window j flattened row-major: entries 0..255 are the I row, 256..511 the Q
// row of the 2 x 256 window. In-memory values are double; files store f32, so
// a loaded bundle holds the f32 projection of what was saved.
struct DatasetBundle {
    BundleRole role = BundleRole::Train;
    Eigen::MatrixXd windows;
    std::vector<std::uint16_t> labels;
    std::vector<std::uint16_t> session_ids;
    std::vector<PayloadKind> payload_modes;
    std::map<std::uint16_t, SourceStats> stats;
    bool standardized = false;
    std::vector<RawCapture> raw;

    std::size_t size() const { return labels.size(); }

    // 2 x 256 view of window j.
    Eigen::Map<const Eigen::Matrix<double, 2, 256, Eigen::RowMajor>> window(std::size_t j) const {
        return Eigen::Map<const Eigen::Matrix<double, 2, 256, Eigen::RowMajor>>(windows.col(j).data());
    }
};

constexpr int kWindowLen = 256;
constexpr int kWindowValues = 2 * kWindowLen;

// Slices a buffer into 2 x 256 windows advancing by `stride`; the trailing
// remainder is dropped. Returns the 512 x k window matrix (see DatasetBundle
// for the layout); short buffers yield zero columns.
Eigen::MatrixXd window_stream(const IqBuffer& iq, int stride);

inline Eigen::Index window_count(Eigen::Index buffer_len, int stride) {
    return buffer_len < kWindowLen ? 0 : (buffer_len - kWindowLen) / stride + 1;
}

// The six-bundle capture scenario: four device sessions recorded at the AP
// (random payloads at two time/location pairs, repeated payloads at two more)
// plus Eve's simultaneous captures of the two training sessions.
struct ScenarioConfig {
    int n_devices = 4;
    int frames_per_device = 2000;
    double snr_db = 20.0;
    int stride = 64;
    FrameSpec frame;
    std::vector<ImpairmentProfile> devices;  // one transmit profile per device
    ImpairmentProfile ap;                    // receive side of the access point
    ImpairmentProfile eve;                   // Eve's transceiver (RX when capturing, TX when attacking)
    EnvironmentModel env;
    std::vector<SessionDescriptor> sessions;
    std::uint64_t master_seed = 1337;

    void validate() const;
    std::uint64_t repeated_payload_seed() const { return derive_seed(master_seed, "payload-repeated"); }

    static ScenarioConfig defaults(std::uint64_t master_seed);
};

// Bundle names in canonical order.
const std::vector<std::string>& bundle_names();

// Synthesizes every bundle of the scenario. Deterministic: (cfg, master_seed)
// fixes every byte. Attack bundles additionally carry the raw captures.
std::map<std::string, DatasetBundle> synth_scenario(const ScenarioConfig& cfg);

// Per-source standardization: for each label present, fit scalar mean/std over
// all flattened I and Q values of that label's windows in this bundle, then
// subtract/divide. Stats are recorded in the bundle.
void standardize(DatasetBundle& bundle);

// Deterministic stratified split; fractions are per label, train share 0.7.
std::pair<DatasetBundle, DatasetBundle> split_train_val(const DatasetBundle& bundle, std::uint64_t seed,
                                                        double train_frac = 0.7);

void save_bundle(const DatasetBundle& bundle, const std::string& path);
DatasetBundle load_bundle(const std::string& path);

}  // namespace rfsim
