#pragma once

// Preset pipelines: synthesis, evolution, attached checks and data emission.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsm/analysis.hpp"
#include "qsm/control.hpp"
#include "qsm/csv.hpp"
#include "qsm/programmed_register.hpp"
#include "qsm/propagator.hpp"
#include "qsm/scenario_config.hpp"
#include "qsm/stability.hpp"

namespace qsm {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string requirement;
};

struct RunSummary {
    std::string scenario;
    Json config;  // resolved: every "auto" field holds the value used
    Json observables = Json::object();
    std::vector<CheckResult> checks;
    std::vector<std::string> files;
    double wall_time = 0.0;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }

    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    Json to_json() const {
        Json j;
        j["scenario"] = scenario;
        j["config"] = config;
        j["observables"] = observables;
        Json cs = Json::array();
        for (const auto& c : checks)
            cs.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"requirement", c.requirement}});
        j["checks"] = cs;
        j["all_passed"] = all_passed();
        j["files"] = files;
        j["wall_time_s"] = wall_time;
        return j;
    }
};

/// A runtime abort inside a scenario, with the scenario name prepended.
class ScenarioAbort : public BoundaryViolation {
public:
    ScenarioAbort(const std::string& scenario, const BoundaryViolation& cause)
        : BoundaryViolation(cause.time(), "scenario '" + scenario + "': " + cause.what()) {}
};

using Logger = std::function<void(const std::string&)>;

namespace detail {

class RunContext {
public:
    RunContext(const ScenarioConfig& cfg, const Logger& log) : cfg(cfg), resolved(cfg), log_(log) {}

    const ScenarioConfig& cfg;
    ScenarioConfig resolved;
    Json observables = Json::object();
    std::vector<CheckResult> checks;
    std::vector<std::pair<std::string, Table>> channels;

    void check(const std::string& name, double value, bool passed, const std::string& requirement) {
        for (const auto& c : checks)
            if (c.name == name) throw std::logic_error("duplicate check '" + name + "'");
        checks.push_back({name, passed, value, requirement});
        note(std::string(passed ? "PASS " : "FAIL ") + name + " = " + format_number(value) + " (" + requirement + ")");
    }

    void emit(const std::string& channel, Table t) { channels.emplace_back(channel, std::move(t)); }

    void note(const std::string& msg) const {
        if (log_) log_(msg);
    }

    /// Step size used by every run of the scenario. "auto" picks T / N with N = 4096 * 2^m,
    /// the smallest such N keeping dt * omega_max <= 0.05.
    double dt(double omega_max) {
        if (!resolved.numerics.dt) {
            const double T = cfg.physics.T;
            double n = 4096.0;
            while (T / n * omega_max > 0.05) n *= 2.0;
            resolved.numerics.dt = T / n;
        }
        return *resolved.numerics.dt;
    }

    EvolutionSpec spec(double t_final) const { return {*resolved.numerics.dt, t_final, cfg.numerics.record_every}; }

    /// Domain for a packet reaching `extent` with widths up to `sigma_bound`.
    Grid grid(double extent, double sigma_bound, std::size_t n) {
        if (!resolved.numerics.domain) {
            const Grid g = auto_grid(extent, sigma_bound, n);
            resolved.numerics.domain = std::make_pair(g.x_min(), g.x_max());
        }
        return make_grid(resolved.numerics.domain->first, resolved.numerics.domain->second, n);
    }
    Grid grid(double extent, double sigma_bound) { return grid(extent, sigma_bound, cfg.numerics.grid_n); }

private:
    const Logger& log_;
};

/// Largest width a real gaussian of initial width sigma0 reaches in a well of frequency w.
inline double width_bound(double sigma0, double w) { return std::max(sigma0, 1.0 / (2.0 * sigma0 * w)); }

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline Table trajectory_table(Trajectory tr, const ControlLaw& law) {
    annotate_cost(tr, law);
    return to_table(tr);
}

inline bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

inline std::string num(double v) { return format_number(v); }

// --- presets -------------------------------------------------------------------------

inline void run_fig_position(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const SteeringProblem prob(ph.omega_model, ph.p0, ph.p_hat, ph.T);
    const HarmonicPotential truth(ph.omega_true);
    const auto law = ControlLaw::open_loop(optimal_force(prob), ph.k);
    const auto idle = ControlLaw::open_loop(TimeProfile::zero(), ph.k);
    const ControlledHarmonic controlled(truth, law), uncontrolled(truth, idle);
    const double big_omega = detuned_frequency(ph.omega_true, ph.k);

    ctx.dt(big_omega);
    const auto oracle = gaussian_moment_path(ph.p0, ph.sigma0, truth, law, ctx.spec(ph.T));
    const auto idle_oracle = ehrenfest_path(ph.p0, 0.0, uncontrolled, ctx.spec(ph.T));
    const Grid g = ctx.grid(std::max(max_abs(oracle.mean_x), max_abs(idle_oracle.mean_x)), width_bound(ph.sigma0, big_omega));
    const auto wf = gaussian_init(g, {ph.p0, ph.sigma0});

    const auto run = evolve(wf, controlled, ctx.spec(ph.T)).trajectory;
    const auto idle_run = evolve(wf, uncontrolled, ctx.spec(ph.T)).trajectory;

    const double grid_end = run.mean_x.back();
    const double analytic_end = analytic_center(ph.p0, ph.omega_true, ph.k, optimal_force(prob), ph.T);
    const double ode_end = oracle.mean_x.back();
    const double deviation = max_abs_difference(run.mean_x, oracle.mean_x);
    const double idle_expected = ph.p0 * std::cos(big_omega * ph.T);
    const double idle_end = idle_run.mean_x.back();
    const double J = control_cost(law, open_loop_moments(ph.p0, ph.sigma0, ph.omega_true, law), ph.T).J;

    ctx.observables["force_amplitude"] = optimal_force_amplitude(prob);
    ctx.observables["grid_endpoint"] = grid_end;
    ctx.observables["analytic_endpoint"] = analytic_end;
    ctx.observables["ehrenfest_endpoint"] = ode_end;
    ctx.observables["max_grid_analytic_deviation"] = deviation;
    ctx.observables["uncontrolled_endpoint"] = idle_end;
    ctx.observables["cost_J"] = J;

    ctx.check("grid_endpoint", grid_end, std::abs(grid_end - ph.p_hat) <= 0.02, "|<x>(T) - p_hat| <= 0.02");
    ctx.check("analytic_endpoint", analytic_end, std::abs(analytic_end - ph.p_hat) <= 1e-6, "|p(T) - p_hat| <= 1e-6");
    ctx.check("ehrenfest_endpoint", ode_end, std::abs(ode_end - ph.p_hat) <= 1e-6, "|p(T) - p_hat| <= 1e-6");
    ctx.check("grid_vs_analytic_path", deviation, deviation < 0.01, "max |grid - analytic| < 0.01");
    ctx.check("uncontrolled_endpoint", idle_end, std::abs(idle_end - idle_expected) <= 0.01,
              "|<x>(T) - p0 cos(W T)| <= 0.01 with p0 cos(W T) = " + num(idle_expected));

    ctx.emit("controlled", trajectory_table(run, law));
    ctx.emit("uncontrolled", trajectory_table(idle_run, idle));
    ctx.emit("analytic", trajectory_table(oracle, law));
}

inline void run_fig_feedback(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const SteeringProblem prob(ph.omega_model, ph.p0, ph.p_hat, ph.T);
    const HarmonicPotential truth(ph.omega_true), model(ph.omega_model);
    const auto ref = reference_path(prob);

    std::vector<double> alphas = ctx.cfg.sweep.alpha;
    alphas.push_back(0.0);
    alphas.push_back(ph.alpha);
    double stiff = 0.0;
    for (double a : alphas) stiff = std::max(stiff, a);
    ctx.dt(std::max(detuned_frequency(ph.omega_true, ph.k + stiff), ph.omega_model));

    struct Run {
        Trajectory oracle, grid;
        double endpoint, oracle_endpoint, deviation, J;
    };
    std::map<double, Trajectory> oracles;
    double extent = 0.0;
    for (double a : alphas) {
        auto tr = ehrenfest_path(ph.p0, 0.0, ControlledHarmonic(truth, feedback_law(prob, a)), ctx.spec(ph.T));
        extent = std::max(extent, max_abs(tr.mean_x));
        oracles[a] = std::move(tr);
    }
    const auto ideal_law = ControlLaw::open_loop(optimal_force(prob));
    const auto ideal_oracle = ehrenfest_path(ph.p0, 0.0, ControlledHarmonic(model, ideal_law), ctx.spec(ph.T));
    extent = std::max(extent, max_abs(ideal_oracle.mean_x));
    const Grid g = ctx.grid(extent, width_bound(ph.sigma0, std::min(ph.omega_true, ph.omega_model)));
    const auto wf = gaussian_init(g, {ph.p0, ph.sigma0});

    std::map<double, Run> runs;
    auto run = [&](double a) -> const Run& {
        if (auto it = runs.find(a); it != runs.end()) return it->second;
        const auto law = ControlLaw(ph.k, optimal_force(prob), a, a > 0.0 ? std::optional(ref) : std::nullopt);
        auto tr = evolve(wf, ControlledHarmonic(truth, law), ctx.spec(ph.T)).trajectory;
        annotate_cost(tr, law);
        Run r{oracles.at(a), tr, tr.mean_x.back(), oracles.at(a).mean_x.back(),
              max_deviation(tr.times, tr.mean_x, [&](double t) { return ref(t); }), tr.cost_accum.back()};
        return runs.emplace(a, std::move(r)).first->second;
    };

    const Run& open = run(0.0);
    const Run& fb = run(ph.alpha);
    const auto ideal = evolve(wf, ControlledHarmonic(model, ideal_law), ctx.spec(ph.T)).trajectory;

    const double err_open = std::abs(open.endpoint - ph.p_hat), err_fb = std::abs(fb.endpoint - ph.p_hat);
    ctx.observables["no_feedback_endpoint"] = open.endpoint;
    ctx.observables["no_feedback_oracle_endpoint"] = open.oracle_endpoint;
    ctx.observables["feedback_endpoint"] = fb.endpoint;
    ctx.observables["feedback_oracle_endpoint"] = fb.oracle_endpoint;
    ctx.observables["ideal_endpoint"] = ideal.mean_x.back();
    ctx.observables["J_no_feedback"] = open.J;
    ctx.observables["J_feedback"] = fb.J;

    ctx.check("no_feedback_matches_oracle", open.endpoint, std::abs(open.endpoint - open.oracle_endpoint) <= 0.02,
              "|grid - oracle| <= 0.02 with oracle " + num(open.oracle_endpoint));
    ctx.check("feedback_matches_oracle", fb.endpoint, std::abs(fb.endpoint - fb.oracle_endpoint) <= 0.02,
              "|grid - oracle| <= 0.02 with oracle " + num(fb.oracle_endpoint));
    const double ratio = err_open / err_fb;
    ctx.check("feedback_error_reduction", ratio, ratio >= 5.0, "no-feedback error / feedback error >= 5");
    ctx.check("feedback_costs_more", fb.J, fb.J > open.J, "J(alpha) > J(0) = " + num(open.J));

    ctx.emit("no_feedback", trajectory_table(open.grid, ControlLaw::open_loop(optimal_force(prob), ph.k)));
    ctx.emit("feedback", trajectory_table(fb.grid, ControlLaw(ph.k, optimal_force(prob), ph.alpha,
                                                                ph.alpha > 0.0 ? std::optional(ref) : std::nullopt)));
    ctx.emit("ideal", trajectory_table(ideal, ideal_law));

    if (!ctx.cfg.sweep.alpha.empty()) {
        std::vector<double> a_col, end_col, dev_col, j_col;
        for (double a : ctx.cfg.sweep.alpha) {
            const Run& r = run(a);
            a_col.push_back(a);
            end_col.push_back(r.endpoint);
            dev_col.push_back(r.deviation);
            j_col.push_back(r.J);
        }
        ctx.observables["sweep_alpha"] = a_col;
        ctx.observables["sweep_max_deviation"] = dev_col;
        ctx.observables["sweep_J"] = j_col;
        if (a_col.size() >= 2) {
            ctx.check("sweep_deviation_decreasing", dev_col.back(), strictly_decreasing(dev_col),
                      "max path deviation strictly decreasing in alpha");
            ctx.check("sweep_cost_increasing", j_col.back(), strictly_increasing(j_col), "J strictly increasing in alpha");
        }
        Table t;
        t.add("alpha", a_col);
        t.add("endpoint", end_col);
        t.add("max_deviation", dev_col);
        t.add("J", j_col);
        ctx.emit("alpha_sweep", std::move(t));
    }
}

/// Ground-state covariance of the coupled pair: (1 / (2 w1) - 1 / (2 w2)) / 2.
inline double coupled_covariance(double omega, double k) {
    const auto m = normal_modes(CoupledPotential(omega, k));
    return 0.25 * (1.0 / m.sum_mode - 1.0 / m.diff_mode);
}

inline void run_coupled_correlation(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const CoupledPotential pot(ph.omega_true, ph.coupling_k);
    const auto modes = normal_modes(pot);
    double w_max = modes.diff_mode;
    for (double k : ctx.cfg.sweep.coupling_k) w_max = std::max(w_max, normal_modes(CoupledPotential(ph.omega_true, k)).diff_mode);
    ctx.dt(w_max);
    const Grid g = ctx.grid(std::abs(ph.p0), width_bound(ph.sigma0, modes.sum_mode));
    const auto spec = ctx.spec(ph.T);

    auto mode_run = [&](double sign) {
        auto tr = evolve(product_state(g, {ph.p0, ph.sigma0}, {sign * ph.p0, ph.sigma0}), pot, spec).trajectory;
        std::vector<double> y(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) y[i] = (tr.mean_x[i] + sign * tr.mean_x2[i]) / std::numbers::sqrt2;
        return std::make_pair(std::move(tr), zero_crossing_frequency(tr.times, y));
    };
    const auto [y1_tr, f1] = mode_run(1.0);
    const auto [y2_tr, f2] = mode_run(-1.0);
    ctx.observables["y1_frequency"] = f1;
    ctx.observables["y2_frequency"] = f2;
    ctx.observables["y1_expected"] = modes.sum_mode;
    ctx.observables["y2_expected"] = modes.diff_mode;
    ctx.check("y1_frequency", f1, std::abs(f1 / modes.sum_mode - 1.0) <= 0.01, "within 1% of " + num(modes.sum_mode));
    ctx.check("y2_frequency", f2, std::abs(f2 / modes.diff_mode - 1.0) <= 0.01, "within 1% of " + num(modes.diff_mode));
    const auto idle = ControlLaw::open_loop(TimeProfile::zero());
    ctx.emit("y1_mode", trajectory_table(y1_tr, idle));
    ctx.emit("y2_mode", trajectory_table(y2_tr, idle));

    // ground states held over one period of the slow mode
    auto measured_cov = [&](double k) {
        const CoupledPotential p(ph.omega_true, k);
        const double period = 2.0 * std::numbers::pi / normal_modes(p).sum_mode;
        return evolve(normal_mode_ground_state(g, p), p, ctx.spec(period)).trajectory.covariance.back();
    };
    const double cov = measured_cov(ph.coupling_k);
    const double cov_expected = coupled_covariance(ph.omega_true, ph.coupling_k);
    ctx.observables["ground_covariance"] = cov;
    ctx.observables["ground_covariance_expected"] = cov_expected;
    ctx.check("ground_covariance", cov, std::abs(cov - cov_expected) <= 0.005, "within 0.005 of " + num(cov_expected));

    if (!ctx.cfg.sweep.coupling_k.empty()) {
        std::vector<double> ks, covs, expected;
        for (double k : ctx.cfg.sweep.coupling_k) {
            ks.push_back(k);
            covs.push_back(k == ph.coupling_k ? cov : measured_cov(k));
            expected.push_back(coupled_covariance(ph.omega_true, k));
        }
        ctx.observables["sweep_coupling_k"] = ks;
        ctx.observables["sweep_covariance"] = covs;
        if (ks.size() >= 2)
            ctx.check("covariance_increasing", covs.back(), strictly_increasing(covs), "covariance strictly increasing in k");
        Table t;
        t.add("k", ks);
        t.add("covariance", covs);
        t.add("expected", expected);
        ctx.emit("covariance_sweep", std::move(t));
    }
}

inline void run_programmed_effective(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const auto& pc = ctx.cfg.programmed;
    const auto pair = displaced_pair(ph.omega_true, pc.branch_offset);
    const double dt = ctx.dt(ph.omega_true);
    if (!ctx.resolved.programmed.tau_c) ctx.resolved.programmed.tau_c = dt;
    const double tau_c = *ctx.resolved.programmed.tau_c;
    const Grid g = ctx.grid(std::abs(ph.p0) + std::abs(pc.branch_offset), width_bound(ph.sigma0, ph.omega_true));
    const auto spec = ctx.spec(ph.T);
    const auto wf = gaussian_init(g, {ph.p0, ph.sigma0});
    const auto reference = evolve(wf, EffectivePotential(pair), spec);
    const auto init = classify_init(wf, pair.program_fn());

    struct Row {
        double fidelity, max_mismatch, mean_mismatch, total_norm;
    };
    std::map<std::size_t, Row> rows;
    std::optional<ProgrammedEvolution> main_run;
    auto run = [&](double tau) -> const Row& {
        const TickSchedule schedule{tau, pc.tick_rule};
        const std::size_t every = schedule.steps_per_tick(spec.step_size());
        if (auto it = rows.find(every); it != rows.end()) return it->second;
        auto ev = evolve_programmed(init, pair, schedule, spec);
        Row r{marginal_fidelity(ev.state, reference.state), ev.max_pre_tick_mismatch(), ev.mean_pre_tick_mismatch(),
              total_norm(ev.state)};
        if (std::abs(tau - tau_c) <= 1e-9 * tau_c) main_run = std::move(ev);
        return rows.emplace(every, r).first->second;
    };

    const Row main = run(tau_c);
    ctx.observables["tau_c"] = tau_c;
    ctx.observables["fidelity"] = main.fidelity;
    ctx.observables["max_pre_tick_mismatch"] = main.max_mismatch;
    ctx.observables["final_total_norm"] = main.total_norm;
    ctx.check("fidelity_vs_effective", main.fidelity, main.fidelity > 0.999, "fidelity at tau_c > 0.999");
    ctx.emit("programmed", trajectory_table(main_run->trajectory, ControlLaw::open_loop(TimeProfile::zero())));
    ctx.emit("effective", trajectory_table(reference.trajectory, ControlLaw::open_loop(TimeProfile::zero())));

    std::vector<double> mult = ctx.cfg.sweep.tau_multiples;
    if (!mult.empty()) {
        std::sort(mult.begin(), mult.end());
        mult.erase(std::unique(mult.begin(), mult.end()), mult.end());
        std::vector<double> taus, fid, wmax, wmean, norms;
        std::map<double, double> by_multiple;
        for (double m : mult) {
            const Row& r = run(m * dt);
            taus.push_back(m * dt);
            fid.push_back(r.fidelity);
            wmax.push_back(r.max_mismatch);
            wmean.push_back(r.mean_mismatch);
            norms.push_back(r.total_norm);
            by_multiple[m] = r.max_mismatch;
        }
        ctx.observables["sweep_tau_c"] = taus;
        ctx.observables["sweep_fidelity"] = fid;
        ctx.observables["sweep_max_pre_tick_mismatch"] = wmax;
        if (by_multiple.count(1.0) && by_multiple.count(8.0))
            ctx.check("mismatch_grows_with_interval", by_multiple[8.0], by_multiple[8.0] > by_multiple[1.0],
                      "pre-tick mismatch at 8 dt > at 1 dt = " + num(by_multiple[1.0]));
        for (double m : mult)
            if (by_multiple.count(2.0 * m)) {
                const double ratio = by_multiple[2.0 * m] / by_multiple[m];
                ctx.check("mismatch_halving_" + std::to_string(static_cast<long>(2 * m)) + "dt_over_" +
                              std::to_string(static_cast<long>(m)) + "dt",
                          ratio, ratio >= 1.5 && ratio <= 2.5, "mismatch ratio on doubling tau_c in [1.5, 2.5]");
            }
        Table t;
        t.add("tau_c", taus);
        t.add("fidelity", fid);
        t.add("max_pre_tick_mismatch", wmax);
        t.add("mean_pre_tick_mismatch", wmean);
        t.add("total_norm", norms);
        ctx.emit("tick_sweep", std::move(t));
    }

    if (pc.cross_system) {
        const Grid g2 = make_grid(g.x_min(), g.x_max(), pc.grid_n_2d);
        const auto s = cross_classify_init(product_state(g2, {ph.p0, ph.sigma0}, {-ph.p0, ph.sigma0}), pair.program_fn());
        const auto ev = evolve_cross_programmed(s, pair, TickSchedule{tau_c, pc.tick_rule}, spec);
        double worst = 0.0;
        for (double w : ev.pre_tick_mismatch) worst = std::max(worst, w);
        ctx.observables["cross_final_covariance"] = ev.trajectory.covariance.back();
        ctx.observables["cross_max_pre_tick_mismatch"] = worst;
        ctx.emit("cross_programmed", trajectory_table(ev.trajectory, ControlLaw::open_loop(TimeProfile::zero())));
    }
}

inline void run_resonance_shift(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const Drive drive{ph.drive.amplitude, ph.drive.freq};
    const double w = drive.freq;
    std::vector<double> omegas = ctx.cfg.sweep.big_omega;
    if (omegas.empty()) omegas.push_back(detuned_frequency(ph.omega_true, ph.k));
    std::sort(omegas.begin(), omegas.end(), [w](double a, double b) { return std::abs(a - w) > std::abs(b - w); });

    double w_max = std::abs(w), extent = std::abs(ph.p0), narrowest = INFINITY;
    for (double big : omegas) {
        w_max = std::max(w_max, big);
        narrowest = std::min(narrowest, big);
        // free oscillation plus the steady response, each bounded by the steady amplitude
        extent = std::max(extent, std::abs(ph.p0) + 2.0 * std::abs(drive.amplitude / (big * big - w * w)));
    }
    ctx.dt(w_max);
    const Grid g = ctx.grid(extent, width_bound(ph.sigma0, narrowest));
    const auto wf = gaussian_init(g, {ph.p0, ph.sigma0});

    std::vector<double> ks, amp_w, amp_free, predicted;
    Trajectory closest;
    ControlLaw closest_law;
    for (double big : omegas) {
        const double k = big * big - ph.omega_true * ph.omega_true;
        const auto law = ControlLaw::open_loop(TimeProfile::zero(), k).with_drive(drive);
        auto tr = evolve(wf, ControlledHarmonic(HarmonicPotential(ph.omega_true), law), ctx.spec(ph.T)).trajectory;
        const auto fit = fit_sinusoids(tr.times, tr.mean_x, {w, big});
        ks.push_back(k);
        amp_w.push_back(fit[0].amplitude());
        amp_free.push_back(fit[1].amplitude());
        predicted.push_back(std::abs(drive.amplitude / (big * big - w * w)));
        closest = std::move(tr);
        closest_law = law;
    }
    ctx.observables["big_omega"] = omegas;
    ctx.observables["steady_amplitude"] = amp_w;
    ctx.observables["steady_amplitude_predicted"] = predicted;
    ctx.check("amplitude_increases_toward_drive", amp_w.back(), strictly_increasing(amp_w),
              "steady amplitude strictly increasing as Omega approaches w = " + num(w));
    ctx.emit("response", trajectory_table(closest, closest_law));
    Table t;
    t.add("big_omega", omegas);
    t.add("k", ks);
    t.add("steady_amplitude", amp_w);
    t.add("free_amplitude", amp_free);
    t.add("predicted", predicted);
    ctx.emit("amplitude_sweep", std::move(t));
}

/// Closed-form minimum effort A^2 (2 w T - sin 2 w T) / (4 w).
inline double optimal_cost_closed_form(const SteeringProblem& prob) {
    const double a = optimal_force_amplitude(prob);
    return a * a * prob.denominator() / (4.0 * prob.omega_model());
}

inline void run_optimality_certificate(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const std::uint64_t seed = *ctx.cfg.seed;
    const SteeringProblem prob(ph.omega_model, ph.p0, ph.p_hat, ph.T);

    const auto rep = optimality_certificate(prob, ctx.cfg.certificate.trials, seed);
    std::vector<double> idx, cost, residual, status;
    for (std::size_t i = 0; i < rep.trials.size(); ++i) {
        idx.push_back(static_cast<double>(i));
        cost.push_back(rep.trials[i].cost);
        residual.push_back(rep.trials[i].constraint_residual);
        status.push_back(static_cast<double>(rep.trials[i].status));
    }
    ctx.observables["optimal_cost"] = rep.optimal_cost;
    ctx.observables["trials_passed"] = rep.passed();
    ctx.check("perturbations_cost_more", static_cast<double>(rep.passed()), rep.all_passed(),
              std::to_string(rep.trials.size()) + " of " + std::to_string(rep.trials.size()) + " trials pass");
    Table trials;
    trials.add("trial", idx);
    trials.add("cost", cost);
    trials.add("constraint_residual", residual);
    trials.add("status", status);
    ctx.emit("trials", std::move(trials));

    const auto law = ControlLaw::open_loop(optimal_force(prob));
    const double j_quad = control_cost(law, open_loop_moments(ph.p0, ph.sigma0, ph.omega_model, law), ph.T).J;
    const double j_closed = optimal_cost_closed_form(prob);
    ctx.observables["J_quadrature"] = j_quad;
    ctx.observables["J_closed_form"] = j_closed;
    ctx.check("cost_matches_closed_form", j_quad, std::abs(j_quad / j_closed - 1.0) <= 1e-3,
              "within 1e-3 relative of " + num(j_closed));

    const auto bad = check_perturbation(prob, random_perturbation(prob, seed, false));
    ctx.check("unprojected_perturbation_flagged", bad.constraint_residual, bad.status == TrialStatus::constraint_violation,
              "endpoint-moving perturbation reported as constraint violation");

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> omega(0.2, 3.0), start(-3.0, 3.0), target(-5.0, 5.0), horizon(0.5, 10.0);
    std::vector<double> c_idx, c_omega, c_p0, c_phat, c_T, c_end, c_err;
    double worst = 0.0;
    for (std::size_t i = 0; i < ctx.cfg.certificate.closure_problems; ++i) {
        const double o = omega(rng), p0 = start(rng), ph_ = target(rng), T = horizon(rng);
        const SteeringProblem p(o, p0, ph_, T);
        const double end = analytic_center(p0, o, 0.0, optimal_force(p), T);
        c_idx.push_back(static_cast<double>(i));
        c_omega.push_back(o);
        c_p0.push_back(p0);
        c_phat.push_back(ph_);
        c_T.push_back(T);
        c_end.push_back(end);
        c_err.push_back(std::abs(end - ph_));
        worst = std::max(worst, std::abs(end - ph_));
    }
    if (!c_idx.empty()) {
        ctx.observables["closure_max_error"] = worst;
        ctx.check("closure", worst, worst <= 1e-6,
                  "max |p(T) - p_hat| <= 1e-6 over " + std::to_string(c_idx.size()) + " problems");
        Table closure;
        closure.add("problem", c_idx);
        closure.add("omega", c_omega);
        closure.add("p0", c_p0);
        closure.add("p_hat", c_phat);
        closure.add("T", c_T);
        closure.add("endpoint", c_end);
        closure.add("error", c_err);
        ctx.emit("closure", std::move(closure));
    }
}

inline void run_stability_suite(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const auto autonomous = static_harmonic(ph.omega_true, ph.k);
    const double big_omega = detuned_frequency(ph.omega_true, ph.k);
    const SteeringProblem matched(ph.omega_true, ph.p0, ph.p_hat, ph.T);
    const auto fb_law = feedback_law(matched, ph.alpha);
    const ControlledHarmonic feedback(HarmonicPotential(ph.omega_true), fb_law);
    const auto drive_law = ControlLaw::open_loop(TimeProfile::zero(), ph.k).with_drive({ph.drive.amplitude, ph.drive.freq});
    const ControlledHarmonic driven(HarmonicPotential(ph.omega_true), drive_law);
    const double dt = ctx.dt(std::max({big_omega, feedback.max_frequency(), driven.max_frequency()}));

    const auto fb_oracle = ehrenfest_path(ph.p0, 0.0, feedback, ctx.spec(ph.T));
    const double extent = std::max({max_abs(fb_oracle.mean_x), std::abs(ph.p0) + std::abs(ph.p_hat)});
    const Grid g = ctx.grid(extent, width_bound(ph.sigma0, std::min(big_omega, ph.omega_true)));
    const auto wf = gaussian_init(g, {ph.p0, ph.sigma0});
    const auto idle = ControlLaw::open_loop(TimeProfile::zero(), ph.k);

    // norm over 10^4 steps
    const auto long_run = evolve(wf, autonomous, EvolutionSpec{dt, 1e4 * dt, 500}).trajectory;
    double norm_drift = 0.0;
    for (double n : long_run.norm) norm_drift = std::max(norm_drift, std::abs(n - 1.0));
    ctx.observables["norm_drift"] = norm_drift;
    ctx.check("norm_drift", norm_drift, norm_drift < 1e-9, "max |norm - 1| over 1e4 steps < 1e-9");

    // energy over one period of the autonomous well
    const double period = 2.0 * std::numbers::pi / big_omega;
    const auto steps = static_cast<std::size_t>(std::ceil(period / dt));
    const auto period_run = evolve(wf, autonomous, EvolutionSpec::with_steps(period, steps, ctx.cfg.numerics.record_every));
    const auto drift = energy_drift(period_run.trajectory, autonomous);
    ctx.observables["energy_drift_per_period"] = drift.value;
    ctx.check("energy_drift_per_period", drift.value, drift.applicable && drift.value < 1e-6,
              "relative energy drift over one period < 1e-6");
    ctx.emit("autonomous", trajectory_table(period_run.trajectory, idle));

    LyapunovSpec energy_candidate;
    energy_candidate.candidate = [](const Observables& o, double) { return o.energy; };
    const auto energy_rep = lyapunov_verify(energy_candidate, period_run.trajectory);
    ctx.check("lyapunov_energy_nonincreasing", energy_rep.max_derivative, energy_rep.passed(),
              "dE/dt <= 1e-6 on the autonomous run");

    // linearity of one step on random superpositions
    std::mt19937_64 rng(*ctx.cfg.seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> center(-2.0, 2.0), width(0.4, 1.0), kick(-1.0, 1.0);
    double linearity = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = gaussian_init(g, {center(rng), width(rng), kick(rng)});
        const auto b = gaussian_init(g, {center(rng), width(rng), kick(rng)});
        const cplx ca{nd(rng), nd(rng)}, cb{nd(rng), nd(rng)};
        WaveFunction mix(g);
        for (std::size_t i = 0; i < g.size(); ++i) mix.amplitudes[i] = ca * a.amplitudes[i] + cb * b.amplitudes[i];
        const double t = 0.1 * trial;
        const auto lhs = step(mix, feedback, t, dt);
        const auto sa = step(a, feedback, t, dt), sb = step(b, feedback, t, dt);
        for (std::size_t i = 0; i < g.size(); ++i)
            linearity = std::max(linearity, std::abs(lhs.amplitudes[i] - (ca * sa.amplitudes[i] + cb * sb.amplitudes[i])));
    }
    ctx.observables["linearity_residual"] = linearity;
    ctx.check("linearity", linearity, linearity < 1e-12, "max residual per step < 1e-12");

    // gaussian closure and the matched feedback tail
    const auto fb_run = evolve(gaussian_init(g, {ph.p0, 0.4}), feedback, ctx.spec(ph.T));
    const double kurt = std::abs(excess_kurtosis(fb_run.state));
    ctx.observables["excess_kurtosis"] = kurt;
    ctx.check("gaussian_closure", kurt, kurt < 1e-3, "|excess kurtosis| < 1e-3 under a quadratic potential");
    const auto tail_run = evolve(wf, feedback, ctx.spec(ph.T)).trajectory;
    LyapunovSpec tail;
    tail.candidate = [p = ph.p_hat](const Observables& o, double) { return (o.mean - p) * (o.mean - p); };
    tail.equilibrium = ph.p_hat;
    tail.start_time = 0.6 * ph.T;
    tail.mode = DescentMode::envelope;
    tail.region_lo = g.x_min();
    tail.region_hi = g.x_max();
    const auto tail_rep = lyapunov_verify(tail, tail_run);
    ctx.observables["feedback_tail_violations"] = tail_rep.violations;
    ctx.check("lyapunov_feedback_tail", static_cast<double>(tail_rep.violations), tail_rep.passed(),
              "(<x> - p_hat)^2 envelope non-increasing after t = " + num(tail.start_time));
    ctx.emit("feedback_tail", trajectory_table(tail_run, fb_law));

    // second order in the step
    const auto open = ControlledHarmonic(HarmonicPotential(ph.omega_true), ControlLaw::open_loop(optimal_force(matched)));
    const auto ideal = reference_path(matched);
    auto err = [&](std::size_t n) {
        const auto tr = evolve(wf, open, EvolutionSpec::with_steps(ph.T, n, 4)).trajectory;
        return max_deviation(tr.times, tr.mean_x, [&](double t) { return ideal(t); });
    };
    const double ratio = err(128) / err(256);
    ctx.observables["convergence_ratio"] = ratio;
    ctx.check("second_order_convergence", ratio, ratio >= 3.0, "error ratio on halving dt >= 3");

    // driven runs are exempt from energy constancy
    const auto driven_run = evolve(wf, driven, ctx.spec(ph.T)).trajectory;
    const auto driven_drift = energy_drift(driven_run, driven);
    ctx.observables["driven_energy_change"] = driven_drift.value;
    ctx.check("driven_energy_not_checked", driven_drift.value, !driven_drift.applicable,
              "energy constancy not applied to a driven run");
    ctx.emit("driven", trajectory_table(driven_run, drive_law));
}

inline void run_custom(RunContext& ctx) {
    const auto& ph = ctx.cfg.physics;
    const SteeringProblem prob(ph.omega_model, ph.p0, ph.p_hat, ph.T);
    std::optional<Drive> drive;
    if (ph.drive.amplitude != 0.0) drive = Drive{ph.drive.amplitude, ph.drive.freq};
    const ControlLaw law(ph.k, optimal_force(prob), ph.alpha, ph.alpha > 0.0 ? std::optional(reference_path(prob)) : std::nullopt,
                         drive);
    const ControlledHarmonic pot(HarmonicPotential(ph.omega_true), law);
    ctx.dt(pot.max_frequency());
    const auto oracle = ehrenfest_path(ph.p0, 0.0, pot, ctx.spec(ph.T));
    const Grid g = ctx.grid(max_abs(oracle.mean_x),
                            width_bound(ph.sigma0, detuned_frequency(ph.omega_true, ph.k + ph.alpha)));
    const auto tr = evolve(gaussian_init(g, {ph.p0, ph.sigma0}), pot, ctx.spec(ph.T)).trajectory;
    const double deviation = max_abs_difference(tr.mean_x, oracle.mean_x);
    double norm_drift = 0.0;
    for (double n : tr.norm) norm_drift = std::max(norm_drift, std::abs(n - 1.0));
    ctx.observables["endpoint"] = tr.mean_x.back();
    ctx.observables["oracle_endpoint"] = oracle.mean_x.back();
    ctx.observables["cost_J"] = control_cost(law, tr).J;
    ctx.check("grid_matches_ehrenfest", deviation, deviation < 0.02, "max |grid - Ehrenfest| < 0.02");
    ctx.check("norm_drift", norm_drift, norm_drift < 1e-9, "max |norm - 1| < 1e-9");
    ctx.emit("trajectory", trajectory_table(tr, law));
}

}  // namespace detail

/// Runs the preset pipeline. With `out_dir`, writes the requested channels and summary.json
/// (each file atomically). Boundary aborts propagate as ScenarioAbort.
inline RunSummary run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                               const Logger& log = {}) {
    const auto started = std::chrono::steady_clock::now();
    detail::RunContext ctx(cfg, log);
    ctx.note("running scenario '" + cfg.preset + "'");
    try {
        if (cfg.preset == "fig-position")
            detail::run_fig_position(ctx);
        else if (cfg.preset == "fig-feedback")
            detail::run_fig_feedback(ctx);
        else if (cfg.preset == "coupled-correlation")
            detail::run_coupled_correlation(ctx);
        else if (cfg.preset == "programmed-effective")
            detail::run_programmed_effective(ctx);
        else if (cfg.preset == "resonance-shift")
            detail::run_resonance_shift(ctx);
        else if (cfg.preset == "optimality-certificate")
            detail::run_optimality_certificate(ctx);
        else if (cfg.preset == "stability-suite")
            detail::run_stability_suite(ctx);
        else if (cfg.preset == "custom")
            detail::run_custom(ctx);
        else
            throw ConfigError({"unknown preset '" + cfg.preset + "'; available presets: " + detail::available_presets()});
    } catch (const BoundaryViolation& e) {
        throw ScenarioAbort(cfg.preset, e);
    }

    RunSummary s;
    s.scenario = cfg.preset;
    s.config = to_json(ctx.resolved);
    s.observables = std::move(ctx.observables);
    s.checks = std::move(ctx.checks);

    if (out_dir) {
        for (const auto& o : cfg.outputs) {
            const auto it = std::find_if(ctx.channels.begin(), ctx.channels.end(),
                                         [&](const auto& c) { return c.first == o.channel; });
            if (it == ctx.channels.end()) {
                ctx.note("channel '" + o.channel + "' not produced by this configuration; skipped");
                continue;
            }
            write_csv(*out_dir / o.path, it->second);
            s.files.push_back(o.path);
        }
    }
    s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (out_dir) {
        write_file_atomic(*out_dir / "summary.json", s.to_json().dump(2) + "\n");
        s.files.push_back("summary.json");
    }
    return s;
}

}  // namespace qsm
