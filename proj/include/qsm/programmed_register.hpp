#pragma once

// A position coordinate joined to a computational register C. Each register value
// carries its own amplitude array over the grid; between control ticks every
// component evolves under its own potential branch, and a tick recomputes C from x
// across the whole superposition.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qsm/potentials.hpp"
#include "qsm/propagator.hpp"
#include "qsm/trajectory.hpp"
#include "qsm/wavefunction.hpp"

namespace qsm {

/// How a tick moves amplitude sitting in the wrong register component.
enum class TickRule {
    /// Route the register-summed amplitude sum_C psi_C(x) into component program(x) and
    /// clear the others. Keeps the summed amplitude exactly; not norm preserving when
    /// components overlap at a point.
    coherent,
    /// Per point, exchange the dominant component with component program(x). A
    /// permutation, hence unitary; minority amplitude stays where it is.
    permutation,
};

struct TickSchedule {
    double tau_c = 0.0;
    TickRule rule = TickRule::coherent;

    /// Number of propagation steps between ticks; tau_c must be a positive integer multiple of dt.
    std::size_t steps_per_tick(double dt) const {
        if (!(tau_c > 0.0)) throw std::invalid_argument("tick schedule: tau_c must be > 0");
        if (tau_c < dt * (1.0 - 1e-9)) throw std::invalid_argument("tick schedule: tau_c must be >= dt");
        const double ratio = tau_c / dt;
        const double r = std::round(ratio);
        if (std::abs(ratio - r) > 1e-6 * r) throw std::invalid_argument("tick schedule: tau_c is not a multiple of dt");
        return static_cast<std::size_t>(r);
    }
};

struct RegisterState {
    Grid grid;
    std::array<std::vector<cplx>, 2> components;

    explicit RegisterState(Grid g) : grid(g) {
        for (auto& c : components) c.assign(g.size(), cplx{});
    }
};

/// Two coupled systems on a square grid; component index is 2 * C1 + C2.
struct RegisterState2D {
    Grid grid;
    std::array<std::vector<cplx>, 4> components;

    explicit RegisterState2D(Grid g) : grid(g) {
        for (auto& c : components) c.assign(g.size() * g.size(), cplx{});
    }
};

inline double total_norm(const RegisterState& s) {
    double t = 0.0;
    for (const auto& c : s.components) t += detail::sum_sq(c);
    return t * s.grid.dx();
}

inline double total_norm(const RegisterState2D& s) {
    double t = 0.0;
    for (const auto& c : s.components) t += detail::sum_sq(c);
    const double dx = s.grid.dx();
    return t * dx * dx;
}

/// Routes the amplitude at x into component program(x).
inline RegisterState classify_init(const WaveFunction& wf, const BitProgram& program) {
    RegisterState s(wf.grid);
    for (std::size_t i = 0; i < wf.grid.size(); ++i) s.components[program(wf.grid.x(i)) ? 1 : 0][i] = wf.amplitudes[i];
    return s;
}

inline double mismatch_weight(const RegisterState& s, const BitProgram& program) {
    double w = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) w += std::norm(s.components[program(s.grid.x(i)) ? 0 : 1][i]);
    return w * s.grid.dx();
}

inline RegisterState control_tick(RegisterState s, const BitProgram& program, TickRule rule = TickRule::coherent) {
    auto& c0 = s.components[0];
    auto& c1 = s.components[1];
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const bool target = program(s.grid.x(i));
        if (rule == TickRule::coherent) {
            const cplx sum = c0[i] + c1[i];
            c0[i] = target ? cplx{} : sum;
            c1[i] = target ? sum : cplx{};
        } else {
            const bool dominant = std::norm(c1[i]) > std::norm(c0[i]);
            if (dominant != target) std::swap(c0[i], c1[i]);
        }
    }
    return s;
}

/// Register-summed amplitude sum_C psi_C(x). Equals the physical wavefunction whenever
/// every point occupies a single component, as it does right after a coherent tick.
inline WaveFunction marginal_amplitude(const RegisterState& s) {
    WaveFunction wf(s.grid);
    for (std::size_t i = 0; i < s.grid.size(); ++i) wf.amplitudes[i] = s.components[0][i] + s.components[1][i];
    return wf;
}

/// |<ref|m>| / ||m|| for the marginal amplitude m.
inline double marginal_fidelity(const RegisterState& s, const WaveFunction& ref) {
    const WaveFunction m = marginal_amplitude(s);
    return std::min(1.0, std::abs(inner_product(ref, m)) / std::sqrt(norm(m)));
}

struct ProgrammedEvolution {
    RegisterState state;
    Trajectory trajectory;           // observables of the marginal amplitude; mismatch_weight channel
    std::vector<double> tick_times;  // one entry per tick
    std::vector<double> pre_tick_mismatch;

    double max_pre_tick_mismatch() const {
        return pre_tick_mismatch.empty() ? 0.0 : *std::max_element(pre_tick_mismatch.begin(), pre_tick_mismatch.end());
    }
    double mean_pre_tick_mismatch() const {
        if (pre_tick_mismatch.empty()) return 0.0;
        double s = 0.0;
        for (double w : pre_tick_mismatch) s += w;
        return s / static_cast<double>(pre_tick_mismatch.size());
    }
};

namespace detail {

inline void record_programmed(Trajectory& tr, const RegisterState& s, const ProgrammedPair& pair, double t) {
    WaveFunction m = marginal_amplitude(s);
    const double nm = norm(m);
    tr.times.push_back(t);
    tr.norm.push_back(total_norm(s));
    tr.mismatch_weight.push_back(mismatch_weight(s, pair.program_fn()));
    // Moments of the marginal density, normalized by its own weight.
    scale(m.amplitudes, 1.0 / std::sqrt(nm));
    tr.mean_x.push_back(mean_position(m));
    tr.spread.push_back(spread(m));
    double e = 0.0;
    for (int c = 0; c < 2; ++c) {
        WaveFunction comp(s.grid, s.components[c]);
        e += kinetic_energy(comp);
        for (std::size_t i = 0; i < s.grid.size(); ++i) e += pair.branch(c == 1, s.grid.x(i)) * std::norm(comp.amplitudes[i]) * s.grid.dx();
    }
    tr.energy.push_back(e);
}

}  // namespace detail

/// Alternates block-diagonal evolution (component C feels branch C, no coupling between
/// components) with a control tick every tau_c. The mismatch weight is sampled just
/// before each tick; trajectory records are also taken before that step's tick.
inline ProgrammedEvolution evolve_programmed(RegisterState state, const ProgrammedPair& pair,
                                             const TickSchedule& schedule, const EvolutionSpec& spec) {
    spec.validate();
    const std::size_t n = spec.steps();
    const double dt = spec.step_size();
    const std::size_t every = n == 0 ? 1 : schedule.steps_per_tick(dt);

    const SplitStepper stepper(state.grid, dt);
    std::array<std::vector<cplx>, 2> kick;
    for (int c = 0; c < 2; ++c) {
        kick[c].resize(state.grid.size());
        for (std::size_t i = 0; i < state.grid.size(); ++i)
            kick[c][i] = std::polar(1.0, -pair.branch(c == 1, state.grid.x(i)) * dt);
    }

    ProgrammedEvolution out{state, {}, {}, {}};
    detail::record_programmed(out.trajectory, state, pair, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (int c = 0; c < 2; ++c) {
            auto& psi = state.components[c];
            stepper.kinetic_half(psi);
            for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kick[c][i];
            stepper.kinetic_half(psi);
        }
        const std::size_t done = s + 1;
        const double t = static_cast<double>(done) * dt;
        if (done % spec.record_every == 0 || done == n) detail::record_programmed(out.trajectory, state, pair, t);
        if (done % every == 0) {
            out.tick_times.push_back(t);
            out.pre_tick_mismatch.push_back(mismatch_weight(state, pair.program_fn()));
            state = control_tick(std::move(state), pair.program_fn(), schedule.rule);
        }
    }
    out.state = std::move(state);
    return out;
}

// --- two cross-programmed systems ------------------------------------------------

namespace detail {

/// Register index for the cross program: C1 from x2, C2 from x1.
inline std::size_t cross_target(const BitProgram& program, double x1, double x2) {
    return 2 * static_cast<std::size_t>(program(x2)) + static_cast<std::size_t>(program(x1));
}

}  // namespace detail

inline RegisterState2D cross_classify_init(const WaveFunction2D& wf, const BitProgram& program = sign_program()) {
    RegisterState2D s(wf.grid);
    const std::size_t n = wf.grid.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            s.components[detail::cross_target(program, wf.grid.x(i), wf.grid.x(j))][i * n + j] = wf.amplitudes[i * n + j];
    return s;
}

inline double mismatch_weight(const RegisterState2D& s, const BitProgram& program = sign_program()) {
    const std::size_t n = s.grid.size();
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t target = detail::cross_target(program, s.grid.x(i), s.grid.x(j));
            for (std::size_t c = 0; c < 4; ++c)
                if (c != target) w += std::norm(s.components[c][i * n + j]);
        }
    const double dx = s.grid.dx();
    return w * dx * dx;
}

/// Sets C1 from the sign of x2 and C2 from the sign of x1 at every point of the superposition.
inline RegisterState2D cross_program_tick(RegisterState2D s, TickRule rule = TickRule::coherent,
                                          const BitProgram& program = sign_program()) {
    const std::size_t n = s.grid.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t p = i * n + j;
            const std::size_t target = detail::cross_target(program, s.grid.x(i), s.grid.x(j));
            if (rule == TickRule::coherent) {
                cplx sum{};
                for (auto& c : s.components) {
                    sum += c[p];
                    c[p] = cplx{};
                }
                s.components[target][p] = sum;
            } else {
                std::size_t dominant = 0;
                for (std::size_t c = 1; c < 4; ++c)
                    if (std::norm(s.components[c][p]) > std::norm(s.components[dominant][p])) dominant = c;
                if (dominant != target) std::swap(s.components[dominant][p], s.components[target][p]);
            }
        }
    return s;
}

inline WaveFunction2D marginal_amplitude(const RegisterState2D& s) {
    WaveFunction2D wf(s.grid);
    for (const auto& c : s.components)
        for (std::size_t p = 0; p < c.size(); ++p) wf.amplitudes[p] += c[p];
    return wf;
}

struct CrossProgrammedEvolution {
    RegisterState2D state;
    Trajectory trajectory;
    std::vector<double> pre_tick_mismatch;
};

/// Component (C1, C2) evolves under V(x1, C1) + V(x2, C2) between ticks.
inline CrossProgrammedEvolution evolve_cross_programmed(RegisterState2D state, const ProgrammedPair& pair,
                                                        const TickSchedule& schedule, const EvolutionSpec& spec) {
    spec.validate();
    const std::size_t n_steps = spec.steps();
    const double dt = spec.step_size();
    const std::size_t every = n_steps == 0 ? 1 : schedule.steps_per_tick(dt);
    const std::size_t n = state.grid.size();
    const SplitStepper2D stepper(state.grid, dt);

    std::array<std::vector<cplx>, 4> kick;
    for (std::size_t c = 0; c < 4; ++c) {
        const bool c1 = (c >> 1) & 1U, c2 = c & 1U;
        kick[c].resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                kick[c][i * n + j] =
                    std::polar(1.0, -(pair.branch(c1, state.grid.x(i)) + pair.branch(c2, state.grid.x(j))) * dt);
    }

    auto record = [&](Trajectory& tr, const RegisterState2D& s, double t) {
        WaveFunction2D m = marginal_amplitude(s);
        detail::scale(m.amplitudes, 1.0 / std::sqrt(norm(m)));
        const auto mo = moments(m);
        tr.times.push_back(t);
        tr.mean_x.push_back(mo.mean1);
        tr.mean_x2.push_back(mo.mean2);
        tr.spread.push_back(std::sqrt(mo.var1));
        tr.covariance.push_back(mo.covariance);
        tr.norm.push_back(total_norm(s));
        tr.mismatch_weight.push_back(mismatch_weight(s, pair.program_fn()));
    };

    CrossProgrammedEvolution out{state, {}, {}};
    record(out.trajectory, state, 0.0);
    for (std::size_t s = 0; s < n_steps; ++s) {
        for (std::size_t c = 0; c < 4; ++c) {
            auto& psi = state.components[c];
            stepper.kinetic_half(psi);
            for (std::size_t p = 0; p < psi.size(); ++p) psi[p] *= kick[c][p];
            stepper.kinetic_half(psi);
        }
        const std::size_t done = s + 1;
        const double t = static_cast<double>(done) * dt;
        if (done % spec.record_every == 0 || done == n_steps) record(out.trajectory, state, t);
        if (done % every == 0) {
            out.pre_tick_mismatch.push_back(mismatch_weight(state, pair.program_fn()));
            state = cross_program_tick(std::move(state), schedule.rule, pair.program_fn());
        }
    }
    out.state = std::move(state);
    return out;
}

}  // namespace qsm
