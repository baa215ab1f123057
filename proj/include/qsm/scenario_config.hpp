#pragma once

// Scenario configuration: a JSON document merged over per-preset defaults, then
// validated field by field. Every problem found is reported at once.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsm/programmed_register.hpp"

namespace qsm {

using Json = nlohmann::ordered_json;

struct PresetInfo {
    std::string name;
    std::string description;
    std::vector<std::string> channels;  // data files the preset can emit
};

inline const std::vector<PresetInfo>& preset_registry() {
    static const std::vector<PresetInfo> presets = {
        {"fig-position", "optimal open-loop force steering a packet from p(0) to p_hat, with the uncontrolled companion",
         {"controlled", "uncontrolled", "analytic"}},
        {"fig-feedback", "feedback under a wrong model frequency: no feedback, feedback, ideal path and a gain sweep",
         {"no_feedback", "feedback", "ideal", "alpha_sweep"}},
        {"coupled-correlation", "normal-mode frequencies and ground-state covariance of two coupled oscillators",
         {"y1_mode", "y2_mode", "covariance_sweep"}},
        {"programmed-effective", "two-branch programmed potential versus its static effective potential",
         {"programmed", "effective", "tick_sweep", "cross_programmed"}},
        {"resonance-shift", "steady driven amplitude as the detuned frequency approaches the drive",
         {"response", "amplitude_sweep"}},
        {"optimality-certificate", "randomized constrained perturbations and closure of the optimal force",
         {"trials", "closure"}},
        {"stability-suite", "energy constancy, Lyapunov descent and numerical invariants of the propagator",
         {"autonomous", "driven", "feedback_tail"}},
        {"custom", "single controlled oscillator built from the physics block", {"trajectory"}},
    };
    return presets;
}

inline const PresetInfo* find_preset(const std::string& name) {
    for (const auto& p : preset_registry())
        if (p.name == name) return &p;
    return nullptr;
}

inline std::vector<std::pair<std::string, std::string>> list_presets() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : preset_registry()) out.emplace_back(p.name, p.description);
    return out;
}

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& ps) {
        std::string s = "invalid scenario config:";
        for (const auto& p : ps) s += "\n  - " + p;
        return s;
    }
    std::vector<std::string> problems_;
};

struct DriveConfig {
    double amplitude = 0.0;
    double freq = 0.0;
};

struct PhysicsConfig {
    double omega_true = 1.0;
    double omega_model = 1.0;
    double p0 = 1.0;
    double p_hat = 5.0;
    double T = 5.0;
    double alpha = 0.0;
    double k = 0.0;
    double coupling_k = 0.0;
    double sigma0 = 1.0 / std::numbers::sqrt2;
    DriveConfig drive;
};

struct NumericsConfig {
    std::size_t grid_n = 1024;
    std::optional<std::pair<double, double>> domain;  // nullopt: auto
    std::optional<double> dt;                         // nullopt: auto
    std::size_t record_every = 8;
};

struct ProgrammedConfig {
    double branch_offset = 1.0;
    std::optional<double> tau_c;  // nullopt: auto (one step)
    TickRule tick_rule = TickRule::coherent;
    bool cross_system = false;
    std::size_t grid_n_2d = 256;
};

struct SweepConfig {
    std::vector<double> alpha;
    std::vector<double> coupling_k;
    std::vector<double> big_omega;
    std::vector<double> tau_multiples;
};

struct CertificateConfig {
    std::size_t trials = 100;
    std::size_t closure_problems = 50;
};

struct OutputSpec {
    std::string channel;
    std::string path;
};

struct ScenarioConfig {
    std::string preset;
    PhysicsConfig physics;
    NumericsConfig numerics;
    ProgrammedConfig programmed;
    SweepConfig sweep;
    CertificateConfig certificate;
    std::optional<std::uint64_t> seed;
    std::vector<OutputSpec> outputs;
};

namespace detail {

inline Json base_defaults() {
    return Json::parse(R"({
        "preset": "custom",
        "physics": {"omega_true": 1.0, "omega_model": 1.0, "p0": 1.0, "p_hat": 5.0, "T": 5.0,
                    "alpha": 0.0, "k": 0.0, "coupling_k": 0.0, "sigma0": 0.70710678118654757,
                    "drive": {"amplitude": 0.0, "freq": 0.0}},
        "numerics": {"grid_n": 1024, "domain": "auto", "dt": "auto", "record_every": 8},
        "programmed": {"branch_offset": 1.0, "tau_c": "auto", "tick_rule": "coherent",
                       "cross_system": false, "grid_n_2d": 256},
        "sweep": {"alpha": [], "coupling_k": [], "big_omega": [], "tau_multiples": []},
        "certificate": {"trials": 100, "closure_problems": 50},
        "seed": 12345,
        "outputs": "all"
    })");
}

inline Json preset_overrides(const std::string& name) {
    if (name == "fig-feedback")
        return Json::parse(R"({"physics": {"omega_model": 1.5, "alpha": 10.0}, "sweep": {"alpha": [0, 2, 10, 50]}})");
    if (name == "coupled-correlation")
        return Json::parse(R"({"physics": {"p0": 0.5, "T": 25.0, "coupling_k": 1.5},
                               "numerics": {"grid_n": 128}, "sweep": {"coupling_k": [0, 0.5, 1.5]}})");
    if (name == "programmed-effective")
        return Json::parse(R"({"numerics": {"domain": [-10, 10]}, "sweep": {"tau_multiples": [1, 2, 4, 8]}})");
    if (name == "resonance-shift")
        return Json::parse(R"({"physics": {"p0": 0.0, "T": 400.0, "drive": {"amplitude": 0.05, "freq": 1.2}},
                               "numerics": {"grid_n": 512}, "sweep": {"big_omega": [1.0, 1.1, 1.19]}})");
    if (name == "stability-suite")
        return Json::parse(R"({"physics": {"k": 0.5, "alpha": 10.0, "drive": {"amplitude": 0.2, "freq": 2.0}}})");
    return Json::object();
}

/// Flags keys in `doc` that have no counterpart in `schema`.
inline void unknown_keys(const Json& doc, const Json& schema, const std::string& prefix, std::vector<std::string>& errs) {
    if (!doc.is_object() || !schema.is_object()) return;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!schema.contains(it.key()))
            errs.push_back("unknown field '" + path + "'");
        else
            unknown_keys(it.value(), schema.at(it.key()), path, errs);
    }
}

class Reader {
public:
    Reader(const Json& doc, std::vector<std::string>& errs) : doc_(doc), errs_(errs) {}

    const Json* find(const std::string& dotted) const {
        const Json* cur = &doc_;
        std::stringstream ss(dotted);
        std::string part;
        while (std::getline(ss, part, '.')) {
            if (!cur->is_object() || !cur->contains(part)) return nullptr;
            cur = &cur->at(part);
        }
        return cur;
    }

    double number(const std::string& path, double fallback) {
        const Json* v = find(path);
        if (!v) {
            errs_.push_back("missing field '" + path + "'");
            return fallback;
        }
        if (!v->is_number()) {
            errs_.push_back("field '" + path + "' must be a number");
            return fallback;
        }
        const double d = v->get<double>();
        if (!std::isfinite(d)) errs_.push_back("field '" + path + "' must be finite");
        return d;
    }

    std::optional<double> number_or_auto(const std::string& path) {
        const Json* v = find(path);
        if (v && v->is_string() && v->get<std::string>() == "auto") return std::nullopt;
        if (v && !v->is_number()) {
            errs_.push_back("field '" + path + "' must be a number or \"auto\"");
            return std::nullopt;
        }
        return number(path, 0.0);
    }

    std::size_t count(const std::string& path, std::size_t fallback) {
        const Json* v = find(path);
        if (!v) {
            errs_.push_back("missing field '" + path + "'");
            return fallback;
        }
        if (!v->is_number_integer() || v->get<long long>() < 0) {
            errs_.push_back("field '" + path + "' must be a non-negative integer");
            return fallback;
        }
        return static_cast<std::size_t>(v->get<long long>());
    }

    bool boolean(const std::string& path, bool fallback) {
        const Json* v = find(path);
        if (!v || !v->is_boolean()) {
            errs_.push_back("field '" + path + "' must be true or false");
            return fallback;
        }
        return v->get<bool>();
    }

    std::string text(const std::string& path, std::string fallback) {
        const Json* v = find(path);
        if (!v || !v->is_string()) {
            errs_.push_back("field '" + path + "' must be a string");
            return fallback;
        }
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& path) {
        const Json* v = find(path);
        std::vector<double> out;
        if (!v || !v->is_array()) {
            errs_.push_back("field '" + path + "' must be an array of numbers");
            return out;
        }
        for (const auto& e : *v) {
            if (!e.is_number() || !std::isfinite(e.get<double>())) {
                errs_.push_back("field '" + path + "' must contain only finite numbers");
                return {};
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

private:
    const Json& doc_;
    std::vector<std::string>& errs_;
};

inline bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::string available_presets() {
    std::string s;
    for (const auto& p : preset_registry()) s += (s.empty() ? "" : ", ") + p.name;
    return s;
}

}  // namespace detail

/// Preset defaults merged with nothing; the starting point of every config.
inline Json preset_defaults(const std::string& name) {
    Json doc = detail::base_defaults();
    doc.merge_patch(detail::preset_overrides(name));
    doc["preset"] = name;
    return doc;
}

/// Builds a validated config from a user document. `preset_override` (from the command
/// line) wins over the document's own "preset" field.
inline ScenarioConfig parse_config(const Json& user, const std::optional<std::string>& preset_override = std::nullopt) {
    std::vector<std::string> errs;
    if (!user.is_object()) throw ConfigError({"config root must be a JSON object"});

    std::string preset;
    if (preset_override)
        preset = *preset_override;
    else if (user.contains("preset") && user.at("preset").is_string())
        preset = user.at("preset").get<std::string>();
    if (preset.empty()) throw ConfigError({"no preset given; available presets: " + detail::available_presets()});
    const PresetInfo* info = find_preset(preset);
    if (!info) throw ConfigError({"unknown preset '" + preset + "'; available presets: " + detail::available_presets()});

    Json doc = preset_defaults(preset);
    detail::unknown_keys(user, doc, "", errs);
    doc.merge_patch(user);
    doc["preset"] = preset;

    detail::Reader r(doc, errs);
    ScenarioConfig c;
    c.preset = preset;

    auto& ph = c.physics;
    ph.omega_true = r.number("physics.omega_true", 1.0);
    ph.omega_model = r.number("physics.omega_model", 1.0);
    ph.p0 = r.number("physics.p0", 1.0);
    ph.p_hat = r.number("physics.p_hat", 5.0);
    ph.T = r.number("physics.T", 5.0);
    ph.alpha = r.number("physics.alpha", 0.0);
    ph.k = r.number("physics.k", 0.0);
    ph.coupling_k = r.number("physics.coupling_k", 0.0);
    ph.sigma0 = r.number("physics.sigma0", 1.0 / std::numbers::sqrt2);
    ph.drive.amplitude = r.number("physics.drive.amplitude", 0.0);
    ph.drive.freq = r.number("physics.drive.freq", 0.0);
    if (!(ph.omega_true > 0.0)) errs.push_back("physics.omega_true must be > 0");
    if (!(ph.omega_model > 0.0)) errs.push_back("physics.omega_model must be > 0");
    if (!(ph.T > 0.0)) errs.push_back("physics.T must be > 0");
    if (ph.alpha < 0.0) errs.push_back("physics.alpha must be >= 0");
    if (ph.coupling_k < 0.0) errs.push_back("physics.coupling_k must be >= 0");
    if (!(ph.sigma0 > 0.0)) errs.push_back("physics.sigma0 must be > 0");
    if (!(ph.omega_true * ph.omega_true + ph.k > 0.0)) errs.push_back("physics.k leaves omega_true^2 + k <= 0 (unbound)");

    auto& nu = c.numerics;
    nu.grid_n = r.count("numerics.grid_n", 1024);
    if (nu.grid_n < 16 || !detail::power_of_two(nu.grid_n)) errs.push_back("numerics.grid_n must be a power of two >= 16");
    if (const Json* d = r.find("numerics.domain")) {
        if (d->is_string() && d->get<std::string>() == "auto") {
        } else if (d->is_array() && d->size() == 2 && (*d)[0].is_number() && (*d)[1].is_number()) {
            const double lo = (*d)[0].get<double>(), hi = (*d)[1].get<double>();
            if (!(std::isfinite(lo) && std::isfinite(hi) && hi > lo))
                errs.push_back("numerics.domain must satisfy x_min < x_max");
            nu.domain = std::make_pair(lo, hi);
        } else {
            errs.push_back("numerics.domain must be \"auto\" or [x_min, x_max]");
        }
    }
    nu.dt = r.number_or_auto("numerics.dt");
    if (nu.dt && !(*nu.dt > 0.0)) errs.push_back("numerics.dt must be > 0");
    if (nu.dt && *nu.dt > ph.T) errs.push_back("numerics.dt must not exceed physics.T");
    nu.record_every = r.count("numerics.record_every", 8);
    if (nu.record_every < 1) errs.push_back("numerics.record_every must be >= 1");

    auto& pr = c.programmed;
    pr.branch_offset = r.number("programmed.branch_offset", 1.0);
    pr.tau_c = r.number_or_auto("programmed.tau_c");
    if (pr.tau_c && !(*pr.tau_c > 0.0)) errs.push_back("programmed.tau_c must be > 0");
    const std::string rule = r.text("programmed.tick_rule", "coherent");
    if (rule == "coherent")
        pr.tick_rule = TickRule::coherent;
    else if (rule == "permutation")
        pr.tick_rule = TickRule::permutation;
    else
        errs.push_back("programmed.tick_rule must be \"coherent\" or \"permutation\"");
    pr.cross_system = r.boolean("programmed.cross_system", false);
    pr.grid_n_2d = r.count("programmed.grid_n_2d", 256);
    if (pr.grid_n_2d < 16 || !detail::power_of_two(pr.grid_n_2d))
        errs.push_back("programmed.grid_n_2d must be a power of two >= 16");

    c.sweep.alpha = r.numbers("sweep.alpha");
    c.sweep.coupling_k = r.numbers("sweep.coupling_k");
    c.sweep.big_omega = r.numbers("sweep.big_omega");
    c.sweep.tau_multiples = r.numbers("sweep.tau_multiples");
    for (double a : c.sweep.alpha)
        if (a < 0.0) errs.push_back("sweep.alpha entries must be >= 0");
    for (double k : c.sweep.coupling_k)
        if (k < 0.0) errs.push_back("sweep.coupling_k entries must be >= 0");
    for (double w : c.sweep.big_omega) {
        if (!(w > 0.0)) errs.push_back("sweep.big_omega entries must be > 0");
        if (std::abs(w - ph.drive.freq) < 1e-6) errs.push_back("sweep.big_omega entries must differ from physics.drive.freq");
    }
    for (double m : c.sweep.tau_multiples)
        if (!(m >= 1.0) || m != std::floor(m)) errs.push_back("sweep.tau_multiples entries must be integers >= 1");

    c.certificate.trials = r.count("certificate.trials", 100);
    c.certificate.closure_problems = r.count("certificate.closure_problems", 50);
    if (preset == "optimality-certificate" && c.certificate.trials < 1) errs.push_back("certificate.trials must be >= 1");

    if (const Json* s = r.find("seed"); s && !s->is_null()) {
        if (s->is_number_unsigned() || (s->is_number_integer() && s->get<long long>() >= 0))
            c.seed = s->get<std::uint64_t>();
        else
            errs.push_back("seed must be a non-negative integer");
    }
    if (!c.seed && (preset == "optimality-certificate" || preset == "stability-suite"))
        errs.push_back("seed is required for preset '" + preset + "' (randomized checks)");

    const Json* outs = r.find("outputs");
    if (outs && outs->is_string() && outs->get<std::string>() == "all") {
        for (const auto& ch : info->channels) c.outputs.push_back({ch, ch + ".csv"});
    } else if (outs && outs->is_array()) {
        for (const auto& o : *outs) {
            if (!o.is_object() || !o.contains("channel") || !o.at("channel").is_string()) {
                errs.push_back("outputs entries need a string 'channel'");
                continue;
            }
            OutputSpec spec{o.at("channel").get<std::string>(), ""};
            spec.path = o.contains("path") && o.at("path").is_string() ? o.at("path").get<std::string>() : spec.channel + ".csv";
            if (std::find(info->channels.begin(), info->channels.end(), spec.channel) == info->channels.end()) {
                std::string known;
                for (const auto& ch : info->channels) known += (known.empty() ? "" : ", ") + ch;
                errs.push_back("outputs: unknown channel '" + spec.channel + "' for preset '" + preset + "' (known: " + known + ")");
            }
            c.outputs.push_back(spec);
        }
    } else {
        errs.push_back("outputs must be \"all\" or a list of {channel, path}");
    }

    if (!errs.empty()) throw ConfigError(errs);
    return c;
}

inline ScenarioConfig load_config(const std::string& path, const std::optional<std::string>& preset_override = std::nullopt) {
    std::ifstream is(path);
    if (!is) throw ConfigError({"cannot read config file '" + path + "'"});
    Json doc;
    try {
        doc = Json::parse(is, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError({"config file '" + path + "' is not valid JSON: " + e.what()});
    }
    return parse_config(doc, preset_override);
}

/// Serializes a config; auto fields appear as their resolved values once a run has filled them in.
inline Json to_json(const ScenarioConfig& c) {
    Json j;
    j["preset"] = c.preset;
    const auto& ph = c.physics;
    j["physics"] = {{"omega_true", ph.omega_true}, {"omega_model", ph.omega_model}, {"p0", ph.p0},
                    {"p_hat", ph.p_hat}, {"T", ph.T}, {"alpha", ph.alpha}, {"k", ph.k},
                    {"coupling_k", ph.coupling_k}, {"sigma0", ph.sigma0},
                    {"drive", {{"amplitude", ph.drive.amplitude}, {"freq", ph.drive.freq}}}};
    const auto& nu = c.numerics;
    j["numerics"] = {{"grid_n", nu.grid_n},
                     {"domain", nu.domain ? Json::array({nu.domain->first, nu.domain->second}) : Json("auto")},
                     {"dt", nu.dt ? Json(*nu.dt) : Json("auto")},
                     {"record_every", nu.record_every}};
    const auto& pr = c.programmed;
    j["programmed"] = {{"branch_offset", pr.branch_offset},
                       {"tau_c", pr.tau_c ? Json(*pr.tau_c) : Json("auto")},
                       {"tick_rule", pr.tick_rule == TickRule::coherent ? "coherent" : "permutation"},
                       {"cross_system", pr.cross_system},
                       {"grid_n_2d", pr.grid_n_2d}};
    j["sweep"] = {{"alpha", c.sweep.alpha}, {"coupling_k", c.sweep.coupling_k}, {"big_omega", c.sweep.big_omega},
                  {"tau_multiples", c.sweep.tau_multiples}};
    j["certificate"] = {{"trials", c.certificate.trials}, {"closure_problems", c.certificate.closure_problems}};
    j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
    Json outs = Json::array();
    for (const auto& o : c.outputs) outs.push_back({{"channel", o.channel}, {"path", o.path}});
    j["outputs"] = outs;
    return j;
}

}  // namespace qsm
