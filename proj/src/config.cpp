#include "rfsim/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rfsim {

ExperimentConfig ExperimentConfig::defaults(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.master_seed = seed;
    cfg.scenario = ScenarioConfig::defaults(seed);
    cfg.train.seed = derive_seed(seed, "train");
    cfg.attacks = {
        {AttackSpec::Kind::Replay, "replay_as1", "as1", PayloadKind::Random, std::nullopt},
        {AttackSpec::Kind::NaiveImpersonation, "imp_repeated", "", PayloadKind::Repeated, std::nullopt},
        {AttackSpec::Kind::NaiveImpersonation, "imp_random", "", PayloadKind::Random, std::nullopt},
    };
    return cfg;
}

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

SectionMap parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    SectionMap sections;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header at line " + std::to_string(line_no));
            section = line.substr(1, line.size() - 2);
            sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        if (section.empty()) throw ConfigError("key '" + key + "' appears before any section");
        if (sections[section].count(key))
            throw ConfigError("duplicate key '" + section + "." + key + "'");
        sections[section][key] = value;
    }
    return sections;
}

double parse_double(const std::string& section, const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for '" + section + "." + key + "': " + value);
    }
}

long long parse_int(const std::string& section, const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for '" + section + "." + key + "': " + value);
    }
}

std::uint64_t parse_u64(const std::string& section, const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid unsigned integer for '" + section + "." + key + "': " + value);
    }
}

// A consumed-key tracker so leftovers can be reported by name.
class Section {
public:
    Section(const SectionMap& map, std::string name) : name_(std::move(name)) {
        const auto it = map.find(name_);
        if (it != map.end()) entries_ = &it->second;
    }
    bool exists() const { return entries_ != nullptr; }

    template <typename F>
    void take(const std::string& key, F&& apply) {
        if (!entries_) return;
        const auto it = entries_->find(key);
        if (it == entries_->end()) return;
        apply(it->second);
        consumed_.insert(key);
    }
    void finish() const {
        if (!entries_) return;
        for (const auto& [key, value] : *entries_)
            if (!consumed_.count(key))
                throw ConfigError("unknown key '" + name_ + "." + key + "'");
    }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    const std::map<std::string, std::string>* entries_ = nullptr;
    std::set<std::string> consumed_;
};

void apply_profile(const SectionMap& map, const std::string& name, ImpairmentProfile& profile) {
    Section s(map, name);
    double eps = profile.eps, dphi = profile.dphi, psi = profile.psi;
    double cfo_hz = profile.d_omega / (2.0 * kPi);
    s.take("eps", [&](const std::string& v) { eps = parse_double(name, "eps", v); });
    s.take("dphi", [&](const std::string& v) { dphi = parse_double(name, "dphi", v); });
    s.take("cfo_hz", [&](const std::string& v) { cfo_hz = parse_double(name, "cfo_hz", v); });
    s.take("psi", [&](const std::string& v) { psi = parse_double(name, "psi", v); });
    s.finish();
    try {
        profile = ImpairmentProfile(eps, dphi, 2.0 * kPi * cfo_hz, psi);
    } catch (const InvalidInput& e) {
        throw ConfigError("[" + name + "]: " + e.what());
    }
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path,
                                        std::optional<std::uint64_t> seed_override) {
    SectionMap map;
    if (!path.empty()) map = parse_ini(path);

    // The master seed is resolved first; every default that derives from it
    // must see the final value.
    std::uint64_t seed = 1337;
    {
        Section exp(map, "experiment");
        exp.take("seed", [&](const std::string& v) { seed = parse_u64("experiment", "seed", v); });
        // other experiment keys are consumed again below
    }
    if (seed_override) seed = *seed_override;

    ExperimentConfig cfg = ExperimentConfig::defaults(seed);

    Section exp(map, "experiment");
    exp.take("seed", [](const std::string&) {});
    exp.take("out", [&](const std::string& v) { cfg.out_dir = v; });
    exp.take("tau", [&](const std::string& v) { cfg.tau = parse_double("experiment", "tau", v); });
    exp.finish();

    Section sc(map, "scenario");
    sc.take("n_devices",
            [&](const std::string& v) { cfg.scenario.n_devices = (int)parse_int("scenario", "n_devices", v); });
    sc.take("frames_per_device", [&](const std::string& v) {
        cfg.scenario.frames_per_device = (int)parse_int("scenario", "frames_per_device", v);
    });
    sc.take("snr_db", [&](const std::string& v) { cfg.scenario.snr_db = parse_double("scenario", "snr_db", v); });
    sc.take("stride", [&](const std::string& v) { cfg.scenario.stride = (int)parse_int("scenario", "stride", v); });
    sc.take("n_fft", [&](const std::string& v) { cfg.scenario.frame.n_fft = (int)parse_int("scenario", "n_fft", v); });
    sc.take("cp_len", [&](const std::string& v) { cfg.scenario.frame.cp_len = (int)parse_int("scenario", "cp_len", v); });
    sc.take("sample_rate", [&](const std::string& v) {
        const double rate = parse_double("scenario", "sample_rate", v);
        if (!(rate > 0)) throw ConfigError("scenario.sample_rate must be positive");
        cfg.scenario.frame.t_s = 1.0 / rate;
    });
    sc.finish();

    // Device list may have been resized; extra devices must be fully specified.
    if (cfg.scenario.n_devices < 2) throw ConfigError("scenario.n_devices must be >= 2");
    if (static_cast<int>(cfg.scenario.devices.size()) > cfg.scenario.n_devices)
        cfg.scenario.devices.resize(cfg.scenario.n_devices);
    while (static_cast<int>(cfg.scenario.devices.size()) < cfg.scenario.n_devices) {
        const std::string name = "scenario.device" + std::to_string(cfg.scenario.devices.size() + 1);
        if (!Section(map, name).exists())
            throw ConfigError("missing section [" + name + "] for device " +
                              std::to_string(cfg.scenario.devices.size() + 1));
        cfg.scenario.devices.emplace_back();
    }
    for (int d = 1; d <= cfg.scenario.n_devices; ++d)
        apply_profile(map, "scenario.device" + std::to_string(d), cfg.scenario.devices[d - 1]);
    apply_profile(map, "scenario.ap", cfg.scenario.ap);
    apply_profile(map, "scenario.eve", cfg.scenario.eve);

    Section ch(map, "channel");
    double rho = cfg.scenario.env.rho_env;
    int n_taps = cfg.scenario.env.n_taps;
    double decay = cfg.scenario.env.pdp_decay;
    ch.take("rho_env", [&](const std::string& v) { rho = parse_double("channel", "rho_env", v); });
    ch.take("n_taps", [&](const std::string& v) { n_taps = (int)parse_int("channel", "n_taps", v); });
    ch.take("pdp_decay", [&](const std::string& v) { decay = parse_double("channel", "pdp_decay", v); });
    ch.finish();
    try {
        cfg.scenario.env = EnvironmentModel(derive_seed(seed, "env"), rho, n_taps, decay);
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("[channel]: ") + e.what());
    }

    Section tr(map, "train");
    tr.take("learning_rate",
            [&](const std::string& v) { cfg.train.learning_rate = parse_double("train", "learning_rate", v); });
    tr.take("beta1", [&](const std::string& v) { cfg.train.beta1 = parse_double("train", "beta1", v); });
    tr.take("beta2", [&](const std::string& v) { cfg.train.beta2 = parse_double("train", "beta2", v); });
    tr.take("epsilon", [&](const std::string& v) { cfg.train.epsilon = parse_double("train", "epsilon", v); });
    tr.take("batch_size",
            [&](const std::string& v) { cfg.train.batch_size = (int)parse_int("train", "batch_size", v); });
    tr.take("max_epochs",
            [&](const std::string& v) { cfg.train.max_epochs = (int)parse_int("train", "max_epochs", v); });
    tr.take("patience", [&](const std::string& v) { cfg.train.patience = (int)parse_int("train", "patience", v); });
    tr.take("dropout1", [&](const std::string& v) { cfg.train.dropout1 = parse_double("train", "dropout1", v); });
    tr.take("dropout2", [&](const std::string& v) { cfg.train.dropout2 = parse_double("train", "dropout2", v); });
    tr.finish();
    try {
        cfg.train.validate();
        cfg.scenario.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }

    // Attack sections replace the default list when any are present.
    std::vector<std::string> attack_sections;
    for (const auto& [name, entries] : map)
        if (name.rfind("attack.", 0) == 0) attack_sections.push_back(name);
    if (!attack_sections.empty()) {
        cfg.attacks.clear();
        for (const std::string& section_name : attack_sections) {
            AttackSpec spec;
            spec.name = section_name.substr(7);
            if (spec.name.empty()) throw ConfigError("attack section needs a name: [attack.<name>]");
            Section a(map, section_name);
            std::string kind;
            a.take("kind", [&](const std::string& v) { kind = v; });
            a.take("source", [&](const std::string& v) { spec.source_bundle = v; });
            a.take("payload", [&](const std::string& v) {
                if (v == "repeated")
                    spec.payload = PayloadKind::Repeated;
                else if (v == "random")
                    spec.payload = PayloadKind::Random;
                else
                    throw ConfigError("'" + section_name + ".payload' must be repeated or random");
            });
            a.take("tau",
                   [&](const std::string& v) { spec.tau = parse_double(section_name, "tau", v); });
            a.finish();
            if (kind == "replay") {
                spec.kind = AttackSpec::Kind::Replay;
                if (spec.source_bundle.empty()) spec.source_bundle = "as1";
            } else if (kind == "impersonation") {
                spec.kind = AttackSpec::Kind::NaiveImpersonation;
            } else {
                throw ConfigError("'" + section_name + ".kind' must be replay or impersonation");
            }
            if (spec.tau && !(*spec.tau >= 0.0 && *spec.tau <= 1.0))
                throw ConfigError("'" + section_name + ".tau' must be in [0, 1]");
            cfg.attacks.push_back(spec);
        }
    }
    if (cfg.tau && !(*cfg.tau >= 0.0 && *cfg.tau <= 1.0))
        throw ConfigError("'experiment.tau' must be in [0, 1]");

    // Reject sections the schema does not know at all.
    const std::set<std::string> known = {"experiment", "scenario", "scenario.ap", "scenario.eve",
                                         "channel", "train"};
    for (const auto& [name, entries] : map) {
        if (known.count(name) || name.rfind("attack.", 0) == 0) continue;
        if (name.rfind("scenario.device", 0) == 0) {
            const std::string tail = name.substr(15);
            bool numeric = !tail.empty() && tail.find_first_not_of("0123456789") == std::string::npos;
            if (numeric && std::stoi(tail) >= 1 && std::stoi(tail) <= cfg.scenario.n_devices) continue;
        }
        throw ConfigError("unknown section '[" + name + "]'");
    }
    return cfg;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_profile(std::ostringstream& out, const std::string& name, const ImpairmentProfile& p) {
    out << "[" << name << "]\n";
    out << "eps = " << fmt_double(p.eps) << "\n";
    out << "dphi = " << fmt_double(p.dphi) << "\n";
    out << "cfo_hz = " << fmt_double(p.d_omega / (2.0 * kPi)) << "\n";
    out << "psi = " << fmt_double(p.psi) << "\n\n";
}

}  // namespace

std::string experiment_config_to_ini(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[experiment]\n";
    out << "seed = " << cfg.master_seed << "\n";
    out << "out = " << cfg.out_dir << "\n";
    if (cfg.tau) out << "tau = " << fmt_double(*cfg.tau) << "\n";
    out << "\n[scenario]\n";
    out << "n_devices = " << cfg.scenario.n_devices << "\n";
    out << "frames_per_device = " << cfg.scenario.frames_per_device << "\n";
    out << "snr_db = " << fmt_double(cfg.scenario.snr_db) << "\n";
    out << "stride = " << cfg.scenario.stride << "\n";
    out << "n_fft = " << cfg.scenario.frame.n_fft << "\n";
    out << "cp_len = " << cfg.scenario.frame.cp_len << "\n";
    out << "sample_rate = " << fmt_double(1.0 / cfg.scenario.frame.t_s) << "\n\n";
    for (int d = 1; d <= cfg.scenario.n_devices; ++d)
        emit_profile(out, "scenario.device" + std::to_string(d), cfg.scenario.devices[d - 1]);
    emit_profile(out, "scenario.ap", cfg.scenario.ap);
    emit_profile(out, "scenario.eve", cfg.scenario.eve);
    out << "[channel]\n";
    out << "rho_env = " << fmt_double(cfg.scenario.env.rho_env) << "\n";
    out << "n_taps = " << cfg.scenario.env.n_taps << "\n";
    out << "pdp_decay = " << fmt_double(cfg.scenario.env.pdp_decay) << "\n";
    out << "\n[train]\n";
    out << "learning_rate = " << fmt_double(cfg.train.learning_rate) << "\n";
    out << "beta1 = " << fmt_double(cfg.train.beta1) << "\n";
    out << "beta2 = " << fmt_double(cfg.train.beta2) << "\n";
    out << "epsilon = " << fmt_double(cfg.train.epsilon) << "\n";
    out << "batch_size = " << cfg.train.batch_size << "\n";
    out << "max_epochs = " << cfg.train.max_epochs << "\n";
    out << "patience = " << cfg.train.patience << "\n";
    out << "dropout1 = " << fmt_double(cfg.train.dropout1) << "\n";
    out << "dropout2 = " << fmt_double(cfg.train.dropout2) << "\n";
    for (const AttackSpec& a : cfg.attacks) {
        out << "\n[attack." << a.name << "]\n";
        out << "kind = " << (a.kind == AttackSpec::Kind::Replay ? "replay" : "impersonation") << "\n";
        if (a.kind == AttackSpec::Kind::Replay)
            out << "source = " << a.source_bundle << "\n";
        else
            out << "payload = " << (a.payload == PayloadKind::Repeated ? "repeated" : "random") << "\n";
        if (a.tau) out << "tau = " << fmt_double(*a.tau) << "\n";
    }
    return out.str();
}

}  // namespace rfsim
