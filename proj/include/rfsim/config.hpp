#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rfsim/attacks.hpp"
#include "rfsim/cnn.hpp"
#include "rfsim/dataset.hpp"

namespace rfsim {

// Everything one experiment needs: the capture scenario, the training recipe,
// the attack list and the output location. Parsed from a sectioned key=value
// file; the schema is strict and unknown sections or keys are rejected.
struct ExperimentConfig {
    ScenarioConfig scenario;
    TrainConfig train;
    std::vector<AttackSpec> attacks;
    std::optional<double> tau;
    std::string out_dir = "runs/default";
    std::uint64_t master_seed = 1337;

    static ExperimentConfig defaults(std::uint64_t seed);
};

// Loads a config file over the defaults. `seed_override` (from --seed) wins
// over the file's seed; every derived seed downstream follows the final value.
// An empty path yields the built-in defaults.
ExperimentConfig load_experiment_config(const std::string& path,
                                        std::optional<std::uint64_t> seed_override);

// Canonical serialization of the resolved config; reruns with equal configs
// produce byte-identical copies.
std::string experiment_config_to_ini(const ExperimentConfig& cfg);

}  // namespace rfsim
