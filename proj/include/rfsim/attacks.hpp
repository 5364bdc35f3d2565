#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rfsim/channel.hpp"
#include "rfsim/cnn.hpp"
#include "rfsim/dataset.hpp"

namespace rfsim {

// What an attack run produced: how the classifier distributed Eve's windows
// over the legitimate classes, plus the rejected share when a confidence
// threshold was active. class_fractions[i] is the share assigned to device
// i+1; fractions and the rejection share sum to 1.
struct AttackReport {
    std::vector<double> class_fractions;
    double rejection_fraction = 0.0;
    double untargeted_success = 1.0;  // 1 - rejection: accepted as any device
    int dominant_class = 0;           // device id absorbing the most windows
    double dominant_rate = 0.0;
    std::size_t window_count = 0;
    std::optional<double> tau;
};

struct AttackSpec {
    enum class Kind { Replay, NaiveImpersonation };
    Kind kind = Kind::Replay;
    std::string name;            // artifact file prefix
    std::string source_bundle;   // Replay: name of the Eve-captured bundle
    PayloadKind payload = PayloadKind::Random;  // NaiveImpersonation mode
    std::optional<double> tau;
};

// Tallies predictions into a report; tau, when present, counts windows with
// max_prob < tau as rejected.
AttackReport summarize_predictions(const std::vector<Prediction>& preds, int n_classes,
                                   std::optional<double> tau);

// The confidence-threshold defense applied to a prediction list.
AttackReport apply_rejection(const std::vector<Prediction>& preds, int n_classes, double tau);

// Re-transmits every raw capture of an attack bundle through Eve's own
// transmit hardware and the Eve->AP channel, then windows the result. The
// replayed signal therefore carries Eve's impairments stacked on whatever the
// original transmitter and the capture path already imprinted.
Eigen::MatrixXd replay_windows(const DatasetBundle& as_bundle, const ImpairmentProfile& eve_tx,
                               const ImpairmentProfile& ap_rx, const ChannelRealization& eve_to_ap,
                               double snr_db, int stride, Rng& rng);

AttackReport run_replay(const CnnModel<float>& model, const DatasetBundle& as_bundle,
                        const ImpairmentProfile& eve_tx, const ImpairmentProfile& ap_rx,
                        const ChannelRealization& eve_to_ap, double snr_db, int stride, Rng& rng,
                        std::optional<double> tau = std::nullopt);

// Eve transmits freshly built frames in the requested payload mode through her
// own hardware and a fresh Eve->AP channel draw. Repeated mode reuses the
// observed fixed-frame payload seed; Random mode uses fresh bits.
struct ImpersonationRun {
    FrameSpec frame;        // base frame parameters; payload_mode set per run
    PayloadMode payload;
    ImpairmentProfile eve_tx;
    int n_frames = 100;
    std::optional<double> tau;
};

AttackReport run_impersonation(const CnnModel<float>& model, const ImpersonationRun& run,
                               const ImpairmentProfile& ap_rx, const EnvironmentModel& env,
                               const SessionDescriptor& session, double snr_db, int stride, Rng& rng);

// Serialization: one CSV row per class plus a rejection row, and a structured
// JSON document with the full report.
std::string report_to_csv(const AttackReport& report);
std::string report_to_json(const AttackReport& report);

}  // namespace rfsim
