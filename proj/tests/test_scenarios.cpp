#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qsm/scenarios.hpp"

using namespace qsm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qsm_test_" + name);
    fs::remove_all(p);
    return p;
}

bool mentions(const ConfigError& e, const std::string& s) {
    return std::any_of(e.problems().begin(), e.problems().end(),
                       [&](const std::string& p) { return p.find(s) != std::string::npos; });
}

ScenarioConfig preset(const std::string& name, Json patch = Json::object()) { return parse_config(patch, name); }

}  // namespace

TEST(Presets, RegistryContents) {
    const auto presets = list_presets();
    for (const char* name : {"fig-position", "fig-feedback", "coupled-correlation", "programmed-effective",
                             "resonance-shift", "optimality-certificate", "stability-suite"}) {
        EXPECT_TRUE(std::any_of(presets.begin(), presets.end(), [&](const auto& p) { return p.first == name; })) << name;
    }
    for (const auto& [name, description] : presets) EXPECT_FALSE(description.empty()) << name;
}

TEST(Presets, UnknownOrEmptyPresetNamesTheAvailableOnes) {
    try {
        parse_config(Json{{"preset", "fig-nonexistent"}});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_TRUE(mentions(e, "fig-nonexistent"));
        EXPECT_TRUE(mentions(e, "fig-position"));
        EXPECT_TRUE(mentions(e, "stability-suite"));
    }
    EXPECT_THROW(parse_config(Json::object()), ConfigError);
    EXPECT_THROW(parse_config(Json{{"preset", ""}}), ConfigError);
}

TEST(Config, CommandLinePresetWinsOverFile) {
    const auto c = parse_config(Json{{"preset", "fig-position"}}, std::string("fig-feedback"));
    EXPECT_EQ(c.preset, "fig-feedback");
    EXPECT_EQ(c.physics.omega_model, 1.5);
}

TEST(Config, PresetDefaultsAndOverrides) {
    const auto c = preset("fig-feedback", Json::parse(R"({"physics": {"alpha": 2.0}})"));
    EXPECT_EQ(c.physics.alpha, 2.0);
    EXPECT_EQ(c.physics.omega_model, 1.5);
    EXPECT_EQ(c.sweep.alpha, (std::vector<double>{0, 2, 10, 50}));
    EXPECT_FALSE(c.numerics.dt.has_value());
    EXPECT_FALSE(c.numerics.domain.has_value());
    EXPECT_EQ(c.outputs.size(), 4u);
}

TEST(Config, ValidationListsEveryOffendingField) {
    Json doc = Json::parse(R"({
        "preset": "optimality-certificate",
        "physics": {"T": -1.0, "omgea_true": 2.0},
        "numerics": {"grid_n": 100, "domain": [3, -3]},
        "programmed": {"tick_rule": "sometimes"},
        "seed": null,
        "outputs": [{"channel": "nonsense"}]
    })");
    doc["physics"]["p0"] = NAN;
    try {
        parse_config(doc);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_TRUE(mentions(e, "physics.T"));
        EXPECT_TRUE(mentions(e, "physics.omgea_true"));
        EXPECT_TRUE(mentions(e, "physics.p0"));
        EXPECT_TRUE(mentions(e, "numerics.grid_n"));
        EXPECT_TRUE(mentions(e, "numerics.domain"));
        EXPECT_TRUE(mentions(e, "programmed.tick_rule"));
        EXPECT_TRUE(mentions(e, "seed is required"));
        EXPECT_TRUE(mentions(e, "nonsense"));
        EXPECT_GE(e.problems().size(), 8u);
    }
}

TEST(Config, SweepFrequencyMayNotSitOnTheDrive) {
    try {
        preset("resonance-shift", Json::parse(R"({"sweep": {"big_omega": [1.0, 1.2]}})"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_TRUE(mentions(e, "sweep.big_omega"));
    }
}

TEST(Config, RoundTripThroughJson) {
    const auto c = preset("programmed-effective", Json::parse(R"({"programmed": {"tau_c": 0.0025, "tick_rule": "permutation"}})"));
    const Json j = to_json(c);
    const auto back = parse_config(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.programmed.tick_rule, TickRule::permutation);
    ASSERT_TRUE(back.numerics.domain.has_value());
    EXPECT_EQ(back.numerics.domain->first, -10.0);
}

TEST(Config, LoadReportsUnreadableAndMalformedFiles) {
    EXPECT_THROW(load_config("/nonexistent/qsm.json"), ConfigError);
    const fs::path dir = scratch("malformed");
    write_file_atomic(dir / "bad.json", "{ \"preset\": ");
    EXPECT_THROW(load_config((dir / "bad.json").string()), ConfigError);
}

TEST(Csv, HeaderAndSeventeenDigitRendering) {
    Trajectory tr;
    tr.times = {0.0, 0.5};
    tr.mean_x = {1.0, 0.1};
    tr.spread = {0.5, 0.5};
    tr.norm = {1.0, 1.0};
    tr.energy = {0.5, 0.5};
    tr.force_expect = {0.0, 0.0};
    tr.cost_accum = {0.0, 0.0};
    const auto text = render_csv(to_table(tr));
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,mean_x,sigma,norm,energy,force_expect,cost_accum");
    EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
    for (double v : {0.1, 1.0 / 3.0, 5e-300, -2.5e10}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Csv, AtomicWriteLeavesNoTemporary) {
    const fs::path dir = scratch("atomic");
    write_file_atomic(dir / "nested" / "a.txt", "hello\n");
    EXPECT_EQ(slurp(dir / "nested" / "a.txt"), "hello\n");
    EXPECT_FALSE(fs::exists(dir / "nested" / "a.txt.tmp"));
}

TEST(RunScenario, FigPositionReachesTargetAndCompanionEndsAtCosine) {
    const auto s = run_scenario(preset("fig-position"));
    ASSERT_NE(s.find("grid_endpoint"), nullptr);
    EXPECT_TRUE(s.find("grid_endpoint")->passed);
    EXPECT_NEAR(s.observables["grid_endpoint"].get<double>(), 5.0, 0.02);
    EXPECT_NEAR(s.observables["uncontrolled_endpoint"].get<double>(), 0.283662185463226, 0.01);
    EXPECT_NEAR(s.observables["cost_J"].get<double>(), 8.438466557263, 1e-6);
    EXPECT_TRUE(s.all_passed());
}

TEST(RunScenario, EveryCheckAppearsOnceWithAnExplicitVerdict) {
    const auto s = run_scenario(preset("optimality-certificate"));
    const Json j = s.to_json();
    std::vector<std::string> names;
    for (const auto& c : j["checks"]) {
        EXPECT_TRUE(c["passed"].is_boolean());
        EXPECT_TRUE(c.contains("value"));
        names.push_back(c["name"].get<std::string>());
    }
    std::sort(names.begin(), names.end());
    EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
    EXPECT_EQ(names.size(), 4u);
}

TEST(RunScenario, AutoFieldsAreResolvedInTheSummary) {
    const auto s = run_scenario(preset("fig-position"));
    EXPECT_TRUE(s.config["numerics"]["dt"].is_number());
    EXPECT_DOUBLE_EQ(s.config["numerics"]["dt"].get<double>(), 5.0 / 4096);
    ASSERT_TRUE(s.config["numerics"]["domain"].is_array());
    EXPECT_EQ(s.config["numerics"]["domain"][1].get<double>(), 11.0);  // ceil(5 + 8 sigma0)
}

TEST(RunScenario, ByteIdenticalOutputsForIdenticalConfig) {
    const auto cfg = preset("fig-position");
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const auto sa = run_scenario(cfg, a);
    const auto sb = run_scenario(cfg, b);
    ASSERT_EQ(sa.files, sb.files);
    ASSERT_EQ(sa.files.size(), 4u);
    for (const auto& f : sa.files) {
        if (f == "summary.json") continue;
        const auto ta = slurp(a / f);
        EXPECT_FALSE(ta.empty());
        EXPECT_EQ(ta, slurp(b / f)) << f;
    }
}

TEST(RunScenario, SeededCertificateIsReproducible) {
    const auto a = run_scenario(preset("optimality-certificate", Json{{"seed", 77}}));
    const auto b = run_scenario(preset("optimality-certificate", Json{{"seed", 77}}));
    EXPECT_EQ(a.observables, b.observables);
}

TEST(RunScenario, ResolvedConfigReproducesTheSummary) {
    const auto first = run_scenario(preset("fig-position"));
    const auto again = run_scenario(parse_config(first.config));
    EXPECT_EQ(first.observables, again.observables);
    EXPECT_EQ(first.config, again.config);
    ASSERT_EQ(first.checks.size(), again.checks.size());
    for (std::size_t i = 0; i < first.checks.size(); ++i) EXPECT_EQ(first.checks[i].value, again.checks[i].value);
}

TEST(RunScenario, OnlyRequestedChannelsAreWritten) {
    const fs::path dir = scratch("channels");
    const auto s = run_scenario(preset("fig-position", Json::parse(R"({"outputs": [{"channel": "controlled", "path": "c.csv"}]})")), dir);
    EXPECT_EQ(s.files, (std::vector<std::string>{"c.csv", "summary.json"}));
    EXPECT_TRUE(fs::exists(dir / "c.csv"));
    EXPECT_FALSE(fs::exists(dir / "uncontrolled.csv"));
    const Json summary = Json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary["scenario"], "fig-position");
    EXPECT_TRUE(summary["all_passed"].get<bool>());
}

TEST(RunScenario, BoundaryAbortCarriesScenarioContext) {
    const auto cfg = preset("custom", Json::parse(R"({"numerics": {"domain": [-6, 6], "grid_n": 256}})"));
    try {
        run_scenario(cfg);
        FAIL() << "expected ScenarioAbort";
    } catch (const ScenarioAbort& e) {
        EXPECT_NE(std::string(e.what()).find("scenario 'custom'"), std::string::npos);
        EXPECT_GT(e.time(), 0.0);
    }
}

TEST(RunScenario, ProgrammedPresetRecordsMismatchChannel) {
    const auto s = run_scenario(preset("programmed-effective", Json::parse(R"({"sweep": {"tau_multiples": []}})")));
    EXPECT_GT(s.observables["fidelity"].get<double>(), 0.999);
    EXPECT_DOUBLE_EQ(s.observables["tau_c"].get<double>(), 5.0 / 4096);
    EXPECT_EQ(s.config["programmed"]["tau_c"].get<double>(), 5.0 / 4096);
}
