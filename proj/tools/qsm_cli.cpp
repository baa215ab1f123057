#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qsm/scenarios.hpp"

namespace {

enum class Verbosity { quiet, normal, verbose };

void print_summary(const qsm::RunSummary& s, Verbosity v) {
    if (v == Verbosity::quiet) return;
    for (const auto& c : s.checks)
        std::printf("%s  %-36s %s  [%s]\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    qsm::format_number(c.value).c_str(), c.requirement.c_str());
    std::printf("%s: %s (%.2f s)\n", s.scenario.c_str(), s.all_passed() ? "all checks passed" : "checks FAILED",
                s.wall_time);
    for (const auto& f : s.files) std::printf("  wrote %s\n", f.c_str());
}

qsm::Logger make_logger(Verbosity v) {
    if (v != Verbosity::verbose) return {};
    return [](const std::string& msg) { std::fprintf(stderr, "[qsm] %s\n", msg.c_str()); };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steering quantum wavepackets with classical control: scenario runner"};
    app.require_subcommand(1);
    bool quiet = false, verbose = false;
    app.add_flag("-q,--quiet", quiet, "print nothing but errors");
    app.add_flag("-v,--verbose", verbose, "log pipeline progress to stderr");

    auto* run = app.add_subcommand("run", "run a scenario from a config file");
    std::string config_path;
    std::optional<std::string> preset;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    run->add_option("--config", config_path, "scenario config (JSON)")->required();
    run->add_option("--preset", preset, "override the config's preset");
    run->add_option("--out-dir", out_dir, "directory for data files and summary.json");
    run->add_option("--seed", seed, "override the config's seed");

    app.add_subcommand("list-presets", "list available presets");

    auto* check = app.add_subcommand("check", "run a preset with its defaults and report its checks");
    std::string suite;
    check->add_option("--suite", suite, "preset name or 'all'")->required();

    CLI11_PARSE(app, argc, argv);
    const Verbosity v = quiet ? Verbosity::quiet : verbose ? Verbosity::verbose : Verbosity::normal;

    try {
        if (app.got_subcommand("list-presets")) {
            for (const auto& [name, description] : qsm::list_presets()) std::printf("%-24s %s\n", name.c_str(), description.c_str());
            return 0;
        }
        if (app.got_subcommand("run")) {
            auto cfg = qsm::load_config(config_path, preset);
            if (seed) cfg.seed = *seed;
            std::optional<std::filesystem::path> dir;
            if (out_dir) dir = *out_dir;
            const auto summary = qsm::run_scenario(cfg, dir, make_logger(v));
            print_summary(summary, v);
            return summary.all_passed() ? 0 : 1;
        }
        std::vector<std::string> names;
        if (suite == "all") {
            for (const auto& p : qsm::preset_registry())
                if (p.name != "custom") names.push_back(p.name);
        } else {
            names.push_back(suite);
        }
        bool ok = true;
        for (const auto& name : names) {
            const auto summary = qsm::run_scenario(qsm::parse_config(qsm::Json::object(), name), std::nullopt, make_logger(v));
            print_summary(summary, v);
            ok = ok && summary.all_passed();
        }
        return ok ? 0 : 1;
    } catch (const qsm::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
