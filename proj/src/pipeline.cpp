#include "rfsim/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rfsim/cnn_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace rfsim {

namespace {

// Exclusive lock on an output directory; held for the duration of a command.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw std::runtime_error("output directory is locked by another run (remove " +
                                     path_.string() + " if stale)");
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("missing file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_resolved_config(const ExperimentConfig& cfg) {
    write_text(fs::path(cfg.out_dir) / "resolved.ini", experiment_config_to_ini(cfg));
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::vector<std::string> device_pair_labels(int n_devices) {
    std::vector<std::string> labels;
    for (int d = 1; d <= n_devices; ++d) labels.push_back("dev" + std::to_string(d));
    return labels;
}

// Monte-Carlo channel draws for one session/receiver over every device pair;
// stream labels pin each draw sequence to (master seed, session, pair).
std::map<std::string, std::vector<ChannelRealization>> draw_csi_set(const ScenarioConfig& sc,
                                                                    const SessionDescriptor& session,
                                                                    std::uint16_t rx_node,
                                                                    const char* rx_tag, int reps) {
    std::map<std::string, std::vector<ChannelRealization>> set;
    for (int d = 1; d <= sc.n_devices; ++d) {
        Rng rng(derive_seed(sc.master_seed,
                            "csi/" + session.key() + "/" + std::to_string(d) + "/" + rx_tag));
        auto& chans = set["dev" + std::to_string(d)];
        for (int r = 0; r < reps; ++r)
            chans.push_back(draw_channel(sc.env, session, static_cast<std::uint16_t>(d), rx_node, rng));
    }
    return set;
}

void write_csi_artifacts(const ExperimentConfig& cfg, const std::string& name,
                         const CorrelationMatrix& corr) {
    const fs::path dir(cfg.out_dir);
    write_matrix_csv(corr.values, corr.labels, corr.labels, (dir / ("csi_" + name + ".csv")).string());
    render_heatmap(corr.values, corr.labels, corr.labels, "CSI correlation: " + name,
                   (dir / ("csi_" + name + ".svg")).string());
    ordered_json j;
    j["name"] = name;
    j["mean_abs_corr"] = corr.values.cwiseAbs().mean();
    double off_diag = 0.0;
    int off_count = 0;
    for (Eigen::Index i = 0; i < corr.values.rows(); ++i)
        for (Eigen::Index k = 0; k < corr.values.cols(); ++k)
            if (i != k) {
                off_diag += std::abs(corr.values(i, k));
                ++off_count;
            }
    j["mean_abs_offdiag_corr"] = off_count ? off_diag / off_count : 0.0;
    write_text(dir / ("csi_" + name + ".json"), j.dump(2) + "\n");
}

std::string checkpoint_stem(const std::string& checkpoint_path) {
    return fs::path(checkpoint_path).stem().string();
}

SessionDescriptor attack_session(PayloadKind payload) {
    return {3, "t5", "l_eve", payload};
}

}  // namespace

std::uint64_t split_seed(const ExperimentConfig& cfg, const std::string& bundle_name) {
    return derive_seed(cfg.master_seed, "split/" + bundle_name);
}

std::string cmd_synth(const ExperimentConfig& cfg) {
    DirLock lock(cfg.out_dir);
    write_resolved_config(cfg);

    const auto bundles = synth_scenario(cfg.scenario);
    for (const auto& name : bundle_names())
        save_bundle(bundles.at(name), (fs::path(cfg.out_dir) / (name + ".rffp")).string());

    // Figure inputs: correlation of the session channel distributions, both
    // across the two random-payload sessions at the AP and between the AP's
    // and Eve's view of the first training session.
    constexpr int kReps = 200;
    constexpr int kPoints = 64;
    const auto trs1_ap = draw_csi_set(cfg.scenario, cfg.scenario.sessions[0], kApNode, "ap", kReps);
    const auto tes1_ap = draw_csi_set(cfg.scenario, cfg.scenario.sessions[1], kApNode, "ap", kReps);
    const auto trs1_eve = draw_csi_set(cfg.scenario, cfg.scenario.sessions[0], kEveNode, "eve", kReps);
    write_csi_artifacts(cfg, "trs1_tes1", csi_correlation(trs1_ap, tes1_ap, kPoints));
    write_csi_artifacts(cfg, "trs1_as1", csi_correlation(trs1_ap, trs1_eve, kPoints));
    return cfg.out_dir;
}

TrainReport cmd_train(const ExperimentConfig& cfg, const std::string& bundle_name) {
    DirLock lock(cfg.out_dir);
    write_resolved_config(cfg);

    const fs::path bundle_path = fs::path(cfg.out_dir) / (bundle_name + ".rffp");
    if (!fs::exists(bundle_path)) throw MissingInput("missing bundle: " + bundle_path.string());
    DatasetBundle bundle = load_bundle(bundle_path.string());
    standardize(bundle);
    const auto [train_b, val_b] = split_train_val(bundle, split_seed(cfg, bundle_name));

    CnnSpec spec;
    spec.n_classes = cfg.scenario.n_devices;
    CnnModel<float> model =
        CnnModel<float>::init(spec, derive_seed(cfg.master_seed, "model/" + bundle_name));
    model.train_stats = bundle.stats;

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.master_seed, "train/" + bundle_name);
    const TrainReport report = train(model, train_b, val_b, tc);

    save_model(model, (fs::path(cfg.out_dir) / ("model_" + bundle_name + ".rfnn")).string());

    std::ostringstream csv;
    csv << "epoch,train_loss,train_acc,val_acc\n";
    for (const auto& e : report.epochs)
        csv << e.epoch << "," << fmt(e.train_loss) << "," << fmt(e.train_acc) << "," << fmt(e.val_acc)
            << "\n";
    write_text(fs::path(cfg.out_dir) / ("metrics_" + bundle_name + ".csv"), csv.str());

    ordered_json j;
    j["bundle"] = bundle_name;
    j["best_epoch"] = report.best_epoch;
    j["best_val_acc"] = report.best_val_acc;
    j["epochs_run"] = report.epochs.size();
    write_text(fs::path(cfg.out_dir) / ("train_report_" + bundle_name + ".json"), j.dump(2) + "\n");
    return report;
}

EvalResult cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    const std::string& bundle_name, const std::string& split,
                    std::optional<double> tau) {
    DirLock lock(cfg.out_dir);
    if (!fs::exists(checkpoint_path)) throw MissingInput("missing checkpoint: " + checkpoint_path);
    const fs::path bundle_path = fs::path(cfg.out_dir) / (bundle_name + ".rffp");
    if (!fs::exists(bundle_path)) throw MissingInput("missing bundle: " + bundle_path.string());
    if (split != "all" && split != "train" && split != "val")
        throw InvalidInput("eval: split must be all, train or val");

    const CnnModel<float> model = load_model(checkpoint_path);
    DatasetBundle bundle = load_bundle(bundle_path.string());
    standardize(bundle);
    if (split != "all") {
        auto [train_b, val_b] = split_train_val(bundle, split_seed(cfg, bundle_name));
        bundle = split == "train" ? std::move(train_b) : std::move(val_b);
    }
    for (std::uint16_t label : bundle.labels)
        if (label == kEveLabel)
            throw InvalidInput("eval: bundle contains attacker windows; use the attack command");

    const auto preds = predict_batch(model, bundle.windows);
    std::vector<LabeledPrediction> labeled;
    labeled.reserve(preds.size());
    for (std::size_t j = 0; j < preds.size(); ++j) {
        std::optional<int> predicted = preds[j].klass + 1;
        if (tau && preds[j].max_prob < *tau) predicted.reset();
        labeled.emplace_back(static_cast<int>(bundle.labels[j]), predicted);
    }
    const ConfusionMatrix cm = confusion(labeled, model.spec.n_classes);

    EvalResult result;
    result.cm = cm;
    result.accuracy = cm.accuracy();
    result.artifact_stem = checkpoint_stem(checkpoint_path) + "_" + bundle_name +
                           (split == "all" ? "" : "_" + split);

    std::vector<std::string> row_labels, col_labels;
    for (int d = 1; d <= model.spec.n_classes; ++d) {
        row_labels.push_back("dev" + std::to_string(d));
        col_labels.push_back("dev" + std::to_string(d));
    }
    if (cm.has_rejection) col_labels.push_back("reject");

    const fs::path dir(cfg.out_dir);
    const Eigen::MatrixXd frac = cm.fractions();
    write_matrix_csv(frac, row_labels, col_labels,
                     (dir / ("confusion_" + result.artifact_stem + ".csv")).string());
    render_heatmap(frac, row_labels, col_labels, "Confusion: " + result.artifact_stem,
                   (dir / ("confusion_" + result.artifact_stem + ".svg")).string());

    ordered_json j;
    j["checkpoint"] = checkpoint_stem(checkpoint_path);
    j["bundle"] = bundle_name;
    j["split"] = split;
    j["accuracy"] = result.accuracy;
    j["window_count"] = preds.size();
    ordered_json pairs = ordered_json::array();
    for (const auto& [victim, target, rate] : consistent_misclassification(cm, 0.5)) {
        ordered_json p;
        p["victim"] = victim;
        p["impostor_target"] = target;
        p["rate"] = rate;
        pairs.push_back(p);
    }
    j["consistent_misclassification"] = pairs;
    write_text(dir / ("accuracy_" + result.artifact_stem + ".json"), j.dump(2) + "\n");
    return result;
}

std::vector<AttackReport> cmd_attack(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                                     std::optional<double> tau_override) {
    DirLock lock(cfg.out_dir);
    if (!fs::exists(checkpoint_path)) throw MissingInput("missing checkpoint: " + checkpoint_path);
    const CnnModel<float> model = load_model(checkpoint_path);
    const fs::path dir(cfg.out_dir);

    std::vector<AttackReport> reports;
    for (const AttackSpec& spec : cfg.attacks) {
        const std::optional<double> tau = tau_override ? tau_override : (spec.tau ? spec.tau : cfg.tau);
        Rng rng(derive_seed(cfg.master_seed, "attack/" + spec.name));
        AttackReport report;

        if (spec.kind == AttackSpec::Kind::Replay) {
            const fs::path src = dir / (spec.source_bundle + ".rffp");
            if (!fs::exists(src)) throw MissingInput("missing attack bundle: " + src.string());
            const DatasetBundle as_bundle = load_bundle(src.string());
            const SessionDescriptor session = attack_session(PayloadKind::Random);
            Rng chan_rng(derive_seed(cfg.master_seed, "attack-chan/" + spec.name));
            const ChannelRealization eve_to_ap =
                draw_channel(cfg.scenario.env, session, kEveNode, kApNode, chan_rng);
            report = run_replay(model, as_bundle, cfg.scenario.eve, cfg.scenario.ap, eve_to_ap,
                                cfg.scenario.snr_db, cfg.scenario.stride, rng, tau);
        } else {
            ImpersonationRun run;
            run.frame = cfg.scenario.frame;
            run.eve_tx = cfg.scenario.eve;
            run.n_frames = cfg.scenario.frames_per_device;
            run.tau = tau;
            run.payload = spec.payload == PayloadKind::Repeated
                              ? PayloadMode::repeated(cfg.scenario.repeated_payload_seed())
                              : PayloadMode::random(
                                    derive_seed(cfg.master_seed, "attack-payload/" + spec.name));
            report = run_impersonation(model, run, cfg.scenario.ap, cfg.scenario.env,
                                       attack_session(spec.payload), cfg.scenario.snr_db,
                                       cfg.scenario.stride, rng);
        }

        write_text(dir / ("attack_" + spec.name + ".csv"), report_to_csv(report));
        ordered_json j = nlohmann::ordered_json::parse(report_to_json(report));
        j["name"] = spec.name;
        j["kind"] = spec.kind == AttackSpec::Kind::Replay ? "replay" : "impersonation";
        write_text(dir / ("attack_" + spec.name + ".json"), j.dump(2) + "\n");
        reports.push_back(report);
    }
    return reports;
}

std::string cmd_report(const std::string& out_dir) {
    const fs::path dir(out_dir);
    std::vector<std::string> missing;
    auto need = [&](const std::string& name) {
        if (!fs::exists(dir / name)) missing.push_back(name);
        return (dir / name).string();
    };

    const std::string resolved = need("resolved.ini");
    for (const auto& name : bundle_names()) need(name + ".rffp");
    need("metrics_trs1.csv");
    need("metrics_trs2.csv");
    const std::string train1 = need("train_report_trs1.json");
    const std::string train2 = need("train_report_trs2.json");
    const std::string conf1_svg = need("confusion_model_trs1_tes1.svg");
    const std::string conf2_svg = need("confusion_model_trs2_tes2.svg");
    const std::string acc1 = need("accuracy_model_trs1_tes1.json");
    const std::string acc2 = need("accuracy_model_trs2_tes2.json");
    const std::string csi1_svg = need("csi_trs1_tes1.svg");
    const std::string csi2_svg = need("csi_trs1_as1.svg");
    const std::string csi1 = need("csi_trs1_tes1.json");
    const std::string csi2 = need("csi_trs1_as1.json");

    std::vector<std::string> attack_jsons;
    if (fs::exists(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("attack_", 0) == 0 && entry.path().extension() == ".json")
                attack_jsons.push_back(name);
        }
    }
    std::sort(attack_jsons.begin(), attack_jsons.end());
    if (attack_jsons.size() < 2) missing.push_back("attack_*.json (need at least 2 attack reports)");

    if (!missing.empty()) {
        std::string msg = "missing artifacts:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw IncompleteReport(msg);
    }

    auto load_json = [&](const std::string& path) { return ordered_json::parse(read_text(path)); };
    const auto t1 = load_json(train1);
    const auto t2 = load_json(train2);
    const auto a1 = load_json(acc1);
    const auto a2 = load_json(acc2);
    const auto c1 = load_json(csi1);
    const auto c2 = load_json(csi2);

    // Seed from the resolved config copy.
    std::string seed_line = "unknown";
    {
        std::istringstream in(read_text(resolved));
        std::string line;
        while (std::getline(in, line))
            if (line.rfind("seed = ", 0) == 0) {
                seed_line = line.substr(7);
                break;
            }
    }

    std::ostringstream md;
    md << "# Experiment summary\n\n";
    md << "Master seed: " << seed_line << "\n\n";
    md << "## Training\n\n";
    md << "| model | best epoch | best validation accuracy |\n|---|---|---|\n";
    md << "| model_trs1 | " << t1["best_epoch"] << " | " << fmt(t1["best_val_acc"].get<double>())
       << " |\n";
    md << "| model_trs2 | " << t2["best_epoch"] << " | " << fmt(t2["best_val_acc"].get<double>())
       << " |\n\n";
    md << "Per-epoch metrics: [metrics_trs1.csv](metrics_trs1.csv), "
          "[metrics_trs2.csv](metrics_trs2.csv)\n\n";

    md << "## Domain shift\n\n";
    auto domain_block = [&](const ordered_json& a, const std::string& svg, const std::string& model,
                            const std::string& bundle) {
        md << "`" << model << "` on `" << bundle << "`: accuracy " << fmt(a["accuracy"].get<double>())
           << " ([confusion heatmap](" << svg << "))\n\n";
        if (!a["consistent_misclassification"].empty()) {
            md << "Consistent misclassification (rate >= 0.5):\n\n";
            for (const auto& p : a["consistent_misclassification"])
                md << "- device " << p["victim"] << " -> device " << p["impostor_target"] << " at "
                   << fmt(p["rate"].get<double>()) << "\n";
            md << "\n";
        } else {
            md << "No consistent-misclassification pair at rate >= 0.5.\n\n";
        }
    };
    domain_block(a1, "confusion_model_trs1_tes1.svg", "model_trs1", "tes1");
    domain_block(a2, "confusion_model_trs2_tes2.svg", "model_trs2", "tes2");

    md << "## CSI correlation\n\n";
    md << "- trs1 vs tes1: mean |corr| " << fmt(c1["mean_abs_corr"].get<double>())
       << " ([heatmap](csi_trs1_tes1.svg))\n";
    md << "- trs1 vs as1: mean |corr| " << fmt(c2["mean_abs_corr"].get<double>())
       << " ([heatmap](csi_trs1_as1.svg))\n\n";

    md << "## Attacks\n\n";
    md << "| attack | kind | dominant class | dominant rate | rejection | untargeted success |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& name : attack_jsons) {
        const auto a = load_json((dir / name).string());
        md << "| [" << a["name"].get<std::string>() << "](" << name << ") | "
           << a["kind"].get<std::string>() << " | device " << a["dominant_class"] << " | "
           << fmt(a["dominant_rate"].get<double>()) << " | " << fmt(a["rejection_fraction"].get<double>())
           << " | " << fmt(a["untargeted_success"].get<double>()) << " |\n";
    }
    md << "\n";

    write_text(dir / "summary.md", md.str());
    return (dir / "summary.md").string();
}

}  // namespace rfsim
