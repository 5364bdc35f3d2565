#pragma once

#include <optional>
#include <string>

#include "rfsim/analysis.hpp"
#include "rfsim/attacks.hpp"
#include "rfsim/cnn.hpp"
#include "rfsim/config.hpp"

namespace rfsim {

// A required file (bundle, checkpoint) is absent.
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The report command found prior pipeline artifacts missing; the message
// lists them.
struct IncompleteReport : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalResult {
    ConfusionMatrix cm;
    double accuracy = 0.0;
    std::string artifact_stem;
};

// Synthesizes and stores the six scenario bundles plus the CSI-correlation
// figure inputs. Returns the output directory used.
std::string cmd_synth(const ExperimentConfig& cfg);

// Trains on the named bundle (70/30 stratified split) and stores the
// checkpoint, per-epoch metrics CSV and a small training-report JSON.
TrainReport cmd_train(const ExperimentConfig& cfg, const std::string& bundle_name);

// Evaluates a checkpoint against a bundle (optionally only its train/val
// split) and stores confusion artifacts plus an accuracy summary.
EvalResult cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    const std::string& bundle_name, const std::string& split = "all",
                    std::optional<double> tau = std::nullopt);

// Runs every attack in the config against a checkpoint; stores one CSV and
// one JSON report per attack. `tau_override` replaces any configured
// threshold.
std::vector<AttackReport> cmd_attack(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                                     std::optional<double> tau_override = std::nullopt);

// Collates every artifact of a finished pipeline run into summary.md.
std::string cmd_report(const std::string& out_dir);

// Derived seed helpers shared between commands (split/model/train streams).
std::uint64_t split_seed(const ExperimentConfig& cfg, const std::string& bundle_name);

}  // namespace rfsim
