// rffp: config-driven experiment runner chaining dataset synthesis, CNN
// training, evaluation, attack simulation and report generation.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rfsim/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config file (defaults used when omitted)");
    cmd->add_option("--out", args.out, "output directory (overrides the config)");
    cmd->add_option("--seed", args.seed, "master seed (overrides the config)");
}

rfsim::ExperimentConfig resolve(const CommonArgs& args) {
    rfsim::ExperimentConfig cfg = rfsim::load_experiment_config(args.config, args.seed);
    if (!args.out.empty()) cfg.out_dir = args.out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rffp: RF fingerprinting security testbed"};
    app.require_subcommand(1);

    CommonArgs synth_args, train_args, eval_args, attack_args, report_args;
    std::string train_bundle = "trs1", eval_bundle, eval_split = "all", checkpoint;
    std::optional<double> tau;

    CLI::App* synth = app.add_subcommand("synth", "synthesize the six scenario bundles");
    add_common(synth, synth_args);

    CLI::App* train = app.add_subcommand("train", "train the classifier on a bundle");
    add_common(train, train_args);
    train->add_option("--bundle", train_bundle, "bundle name (default trs1)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint against a bundle");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    eval->add_option("--bundle", eval_bundle, "bundle name")->required();
    eval->add_option("--split", eval_split, "all, train or val (default all)");
    eval->add_option("--tau", tau, "confidence threshold; predictions below it count as rejected");

    CLI::App* attack = app.add_subcommand("attack", "run the configured attacks against a checkpoint");
    add_common(attack, attack_args);
    attack->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    attack->add_option("--tau", tau, "confidence threshold override for every attack");

    CLI::App* report = app.add_subcommand("report", "collate artifacts into summary.md");
    add_common(report, report_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const auto dir = rfsim::cmd_synth(resolve(synth_args));
            std::cout << "bundles written to " << dir << "\n";
        } else if (train->parsed()) {
            const auto cfg = resolve(train_args);
            const auto rep = rfsim::cmd_train(cfg, train_bundle);
            std::cout << "trained on " << train_bundle << ": best val accuracy " << rep.best_val_acc
                      << " (epoch " << rep.best_epoch << ")\n";
        } else if (eval->parsed()) {
            const auto cfg = resolve(eval_args);
            const auto res = rfsim::cmd_eval(cfg, checkpoint, eval_bundle, eval_split, tau);
            std::cout << "accuracy on " << eval_bundle
                      << (eval_split == "all" ? "" : ":" + eval_split) << " = " << res.accuracy
                      << "\n";
        } else if (attack->parsed()) {
            const auto cfg = resolve(attack_args);
            const auto reports = rfsim::cmd_attack(cfg, checkpoint, tau);
            for (std::size_t i = 0; i < reports.size(); ++i)
                std::cout << cfg.attacks[i].name << ": dominant class " << reports[i].dominant_class
                          << " at " << reports[i].dominant_rate << ", rejection "
                          << reports[i].rejection_fraction << "\n";
        } else if (report->parsed()) {
            const auto cfg = resolve(report_args);
            const auto path = rfsim::cmd_report(cfg.out_dir);
            std::cout << "summary written to " << path << "\n";
        }
    } catch (const rfsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const rfsim::TrainingFailure& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return 3;
    } catch (const rfsim::MissingInput& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 4;
    } catch (const rfsim::IncompleteReport& e) {
        std::cerr << "incomplete report inputs: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
