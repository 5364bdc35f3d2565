#include "rfsim/attacks.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace rfsim {

AttackReport summarize_predictions(const std::vector<Prediction>& preds, int n_classes,
                                   std::optional<double> tau) {
    if (tau && !(*tau >= 0.0 && *tau <= 1.0))
        throw InvalidInput("attack report: tau must be in [0, 1]");
    AttackReport report;
    report.tau = tau;
    report.window_count = preds.size();
    report.class_fractions.assign(n_classes, 0.0);

    std::size_t rejected = 0;
    std::vector<std::size_t> counts(n_classes, 0);
    for (const Prediction& p : preds) {
        if (tau && p.max_prob < *tau) {
            ++rejected;
        } else {
            ++counts[p.klass];
        }
    }
    const double total = preds.empty() ? 1.0 : static_cast<double>(preds.size());
    for (int c = 0; c < n_classes; ++c)
        report.class_fractions[c] = static_cast<double>(counts[c]) / total;
    report.rejection_fraction = static_cast<double>(rejected) / total;
    report.untargeted_success = 1.0 - report.rejection_fraction;

    report.dominant_class = 1;
    for (int c = 0; c < n_classes; ++c) {
        if (report.class_fractions[c] > report.dominant_rate) {
            report.dominant_rate = report.class_fractions[c];
            report.dominant_class = c + 1;
        }
    }
    return report;
}

AttackReport apply_rejection(const std::vector<Prediction>& preds, int n_classes, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("apply_rejection: tau must be in [0, 1]");
    return summarize_predictions(preds, n_classes, tau);
}

Eigen::MatrixXd replay_windows(const DatasetBundle& as_bundle, const ImpairmentProfile& eve_tx,
                               const ImpairmentProfile& ap_rx, const ChannelRealization& eve_to_ap,
                               double snr_db, int stride, Rng& rng) {
    if (as_bundle.raw.empty())
        throw InvalidInput("replay: attack bundle carries no raw captures");

    const LinkImpairments link(eve_tx, ap_rx);
    const double noise_std = noise_std_for_snr_db(snr_db);

    std::vector<Eigen::MatrixXd> per_capture;
    Eigen::Index total = 0;
    for (const RawCapture& capture : as_bundle.raw) {
        const IqBuffer received =
            apply_link(IqBuffer(capture.samples, capture.t_s), link, eve_to_ap, noise_std, rng);
        per_capture.push_back(window_stream(received, stride));
        total += per_capture.back().cols();
    }
    Eigen::MatrixXd windows(kWindowValues, total);
    Eigen::Index at = 0;
    for (const auto& block : per_capture) {
        windows.middleCols(at, block.cols()) = block;
        at += block.cols();
    }
    return windows;
}

namespace {

// Standardizes attack windows with stats fitted on Eve's own data, then
// classifies them.
std::vector<Prediction> classify_as_eve(const CnnModel<float>& model, Eigen::MatrixXd windows) {
    DatasetBundle bundle;
    bundle.role = BundleRole::Attack;
    const Eigen::Index n = windows.cols();
    bundle.windows = std::move(windows);
    bundle.labels.assign(n, kEveLabel);
    bundle.session_ids.assign(n, 0);
    bundle.payload_modes.assign(n, PayloadKind::Random);
    standardize(bundle);
    return predict_batch(model, bundle.windows);
}

}  // namespace

AttackReport run_replay(const CnnModel<float>& model, const DatasetBundle& as_bundle,
                        const ImpairmentProfile& eve_tx, const ImpairmentProfile& ap_rx,
                        const ChannelRealization& eve_to_ap, double snr_db, int stride, Rng& rng,
                        std::optional<double> tau) {
    Eigen::MatrixXd windows = replay_windows(as_bundle, eve_tx, ap_rx, eve_to_ap, snr_db, stride, rng);
    const auto preds = classify_as_eve(model, std::move(windows));
    return summarize_predictions(preds, model.spec.n_classes, tau);
}

AttackReport run_impersonation(const CnnModel<float>& model, const ImpersonationRun& run,
                               const ImpairmentProfile& ap_rx, const EnvironmentModel& env,
                               const SessionDescriptor& session, double snr_db, int stride, Rng& rng) {
    if (run.n_frames < 1) throw InvalidInput("impersonation: n_frames must be >= 1");

    FrameSpec spec = run.frame;
    spec.payload_mode = run.payload;
    Rng bit_stream(run.payload.seed);

    const int frame_len = spec.samples_per_frame();
    CVec stream(static_cast<Eigen::Index>(run.n_frames) * frame_len);
    for (int f = 0; f < run.n_frames; ++f) {
        spec.frame_index = static_cast<std::uint32_t>(f);
        stream.segment(static_cast<Eigen::Index>(f) * frame_len, frame_len) =
            build_frame(spec, bit_stream).samples;
    }

    const ChannelRealization eve_to_ap = draw_channel(env, session, kEveNode, kApNode, rng);
    const LinkImpairments link(run.eve_tx, ap_rx);
    const IqBuffer received = apply_link(IqBuffer(std::move(stream), spec.t_s), link, eve_to_ap,
                                         noise_std_for_snr_db(snr_db), rng);

    const auto preds = classify_as_eve(model, window_stream(received, stride));
    return summarize_predictions(preds, model.spec.n_classes, run.tau);
}

std::string report_to_csv(const AttackReport& report) {
    std::ostringstream out;
    out << "outcome,fraction\n";
    char buf[64];
    for (std::size_t c = 0; c < report.class_fractions.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.6f", report.class_fractions[c]);
        out << "device" << (c + 1) << "," << buf << "\n";
    }
    std::snprintf(buf, sizeof(buf), "%.6f", report.rejection_fraction);
    out << "rejection," << buf << "\n";
    return out.str();
}

std::string report_to_json(const AttackReport& report) {
    nlohmann::ordered_json j;
    j["window_count"] = report.window_count;
    j["class_fractions"] = report.class_fractions;
    j["rejection_fraction"] = report.rejection_fraction;
    j["untargeted_success"] = report.untargeted_success;
    j["dominant_class"] = report.dominant_class;
    j["dominant_rate"] = report.dominant_rate;
    if (report.tau)
        j["tau"] = *report.tau;
    else
        j["tau"] = nullptr;
    return j.dump(2) + "\n";
}

}  // namespace rfsim
