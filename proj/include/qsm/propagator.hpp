#pragma once

#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsm/fft.hpp"
#include "qsm/potentials.hpp"
#include "qsm/quadrature.hpp"
#include "qsm/trajectory.hpp"
#include "qsm/wavefunction.hpp"

namespace qsm {

/// Time stepping parameters. The step actually taken is t_final / steps(), which
/// equals dt whenever dt divides t_final.
struct EvolutionSpec {
    double dt = 0.0;
    double t_final = 0.0;
    std::size_t record_every = 8;

    std::size_t steps() const {
        if (t_final == 0.0) return 0;
        return static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
    }

    double step_size() const { return t_final == 0.0 ? dt : t_final / static_cast<double>(steps()); }

    /// Throws if the spec is malformed or under-resolves `omega_max`.
    void validate(double omega_max = 0.0) const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("evolution: dt must be finite and > 0");
        if (!(t_final >= 0.0) || !std::isfinite(t_final))
            throw std::invalid_argument("evolution: t_final must be finite and >= 0");
        if (t_final > 0.0 && dt > t_final) throw std::invalid_argument("evolution: dt exceeds t_final");
        if (record_every < 1) throw std::invalid_argument("evolution: record_every must be >= 1");
        if (step_size() * omega_max >= 0.1) {
            std::ostringstream os;
            os << "evolution: dt * omega_max = " << step_size() * omega_max << " violates the 0.1 resolution guard";
            throw std::invalid_argument(os.str());
        }
    }

    static EvolutionSpec with_steps(double t_final, std::size_t steps, std::size_t record_every = 8) {
        return {t_final / static_cast<double>(steps), t_final, record_every};
    }
};

/// Raised when a packet comes within 4 spreads of the periodic domain edge.
class BoundaryViolation : public std::runtime_error {
public:
    BoundaryViolation(double time, const std::string& what) : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

namespace detail {

inline void check_clearance(const Grid& g, double mean, double sigma, double t, const char* axis) {
    const double lo = mean - 4.0 * sigma, hi = mean + 4.0 * sigma;
    if (lo < g.x_min() || hi > g.x_max()) {
        std::ostringstream os;
        os << "boundary proximity at t = " << t << ": " << axis << " packet [" << lo << ", " << hi
           << "] (mean +- 4 sigma) leaves domain [" << g.x_min() << ", " << g.x_max() << "]";
        throw BoundaryViolation(t, os.str());
    }
}

}  // namespace detail

/// Second-order Strang stepper: half kinetic, full potential at the midpoint time, half kinetic.
class SplitStepper {
public:
    SplitStepper(const Grid& grid, double dt) : grid_(grid), dt_(dt), xs_(grid.points()), half_kinetic_(grid.size()) {
        const auto ks = grid.wavenumbers();
        for (std::size_t j = 0; j < ks.size(); ++j) half_kinetic_[j] = std::polar(1.0, -0.25 * ks[j] * ks[j] * dt);
    }

    double dt() const noexcept { return dt_; }
    const Grid& grid() const noexcept { return grid_; }

    void kinetic_half(std::vector<cplx>& psi) const {
        fft::forward(psi);
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= half_kinetic_[j];
        fft::backward(psi);
    }

    /// Multiplies by exp(-i V(x) dt) for a potential already evaluated at the step midpoint.
    template <class V>
    void potential_kick(std::vector<cplx>& psi, const V& v_of_x) const {
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -v_of_x(xs_[i]) * dt_);
    }

    /// Advances amplitudes from t to t + dt.
    template <Potential1D P>
    void advance(std::vector<cplx>& psi, const P& potential, double t) const {
        const double tm = t + 0.5 * dt_;
        kinetic_half(psi);
        potential_kick(psi, [&](double x) { return potential(x, tm); });
        kinetic_half(psi);
    }

private:
    Grid grid_;
    double dt_;
    std::vector<double> xs_;
    std::vector<cplx> half_kinetic_;
};

template <Potential1D P>
WaveFunction step(WaveFunction wf, const P& potential, double t, double dt) {
    SplitStepper(wf.grid, dt).advance(wf.amplitudes, potential, t);
    return wf;
}

struct Evolution {
    WaveFunction state;
    Trajectory trajectory;
};

using ControlHook = std::function<void(WaveFunction&, double)>;

namespace detail {

template <Potential1D P>
void record(Trajectory& tr, const WaveFunction& wf, const P& potential, double t, bool check_boundary) {
    const double mu = mean_position(wf);
    const double sigma = spread(wf);
    tr.times.push_back(t);
    tr.mean_x.push_back(mu);
    tr.spread.push_back(sigma);
    tr.norm.push_back(norm(wf));
    tr.energy.push_back(energy(wf, potential, t));
    if (check_boundary) check_clearance(wf.grid, mu, sigma, t, "x");
}

}  // namespace detail

/// Repeated Strang steps with observables recorded every `record_every` steps and at
/// the final time. `hook`, when given, runs after every step.
template <Potential1D P>
Evolution evolve(WaveFunction wf, const P& potential, const EvolutionSpec& spec, const ControlHook& hook = {},
                 bool check_boundary = true) {
    spec.validate();
    const std::size_t n = spec.steps();
    const double dt = spec.step_size();
    Trajectory tr;
    detail::record(tr, wf, potential, 0.0, check_boundary);
    if (n == 0) return {std::move(wf), std::move(tr)};

    const SplitStepper stepper(wf.grid, dt);
    for (std::size_t s = 0; s < n; ++s) {
        const double t = static_cast<double>(s) * dt;
        stepper.advance(wf.amplitudes, potential, t);
        if (hook) hook(wf, t + dt);
        const std::size_t done = s + 1;
        if (done % spec.record_every == 0 || done == n)
            detail::record(tr, wf, potential, static_cast<double>(done) * dt, check_boundary);
    }
    return {std::move(wf), std::move(tr)};
}

// --- 2D ---------------------------------------------------------------------------

class SplitStepper2D {
public:
    SplitStepper2D(const Grid& grid, double dt) : grid_(grid), dt_(dt), xs_(grid.points()) {
        const std::size_t n = grid.size();
        const auto ks = grid.wavenumbers();
        half_kinetic_.resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                half_kinetic_[i * n + j] = std::polar(1.0, -0.25 * (ks[i] * ks[i] + ks[j] * ks[j]) * dt);
    }

    double dt() const noexcept { return dt_; }

    void kinetic_half(std::vector<cplx>& psi) const {
        const std::size_t n = grid_.size();
        fft::forward_2d(psi, n);
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= half_kinetic_[j];
        fft::backward_2d(psi, n);
    }

    template <class V>
    void potential_kick(std::vector<cplx>& psi, const V& v_of_xy) const {
        const std::size_t n = grid_.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) psi[i * n + j] *= std::polar(1.0, -v_of_xy(xs_[i], xs_[j]) * dt_);
    }

    template <Potential2D P>
    void advance(std::vector<cplx>& psi, const P& potential, double t) const {
        const double tm = t + 0.5 * dt_;
        kinetic_half(psi);
        potential_kick(psi, [&](double a, double b) { return potential(a, b, tm); });
        kinetic_half(psi);
    }

private:
    Grid grid_;
    double dt_;
    std::vector<double> xs_;
    std::vector<cplx> half_kinetic_;
};

struct Evolution2D {
    WaveFunction2D state;
    Trajectory trajectory;
};

namespace detail {

template <Potential2D P>
void record(Trajectory& tr, const WaveFunction2D& wf, const P& potential, double t, bool check_boundary) {
    const auto m = moments(wf);
    tr.times.push_back(t);
    tr.mean_x.push_back(m.mean1);
    tr.mean_x2.push_back(m.mean2);
    tr.spread.push_back(std::sqrt(m.var1));
    tr.covariance.push_back(m.covariance);
    tr.norm.push_back(norm(wf));
    tr.energy.push_back(energy(wf, potential, t));
    if (check_boundary) {
        check_clearance(wf.grid, m.mean1, std::sqrt(m.var1), t, "x1");
        check_clearance(wf.grid, m.mean2, std::sqrt(m.var2), t, "x2");
    }
}

}  // namespace detail

template <Potential2D P>
Evolution2D evolve(WaveFunction2D wf, const P& potential, const EvolutionSpec& spec, bool check_boundary = true) {
    spec.validate();
    const std::size_t n = spec.steps();
    const double dt = spec.step_size();
    Trajectory tr;
    detail::record(tr, wf, potential, 0.0, check_boundary);
    if (n == 0) return {std::move(wf), std::move(tr)};
    const SplitStepper2D stepper(wf.grid, dt);
    for (std::size_t s = 0; s < n; ++s) {
        stepper.advance(wf.amplitudes, potential, static_cast<double>(s) * dt);
        const std::size_t done = s + 1;
        if (done % spec.record_every == 0 || done == n)
            detail::record(tr, wf, potential, static_cast<double>(done) * dt, check_boundary);
    }
    return {std::move(wf), std::move(tr)};
}

// --- closed forms and the expectation-value oracle --------------------------------

/// Packet center at time T under V = (omega^2 + k) x^2 / 2 - f(t) x, starting at rest at p0:
/// p(T) = p0 cos(W T) + (1/W) int_0^T f(t) sin(W (T - t)) dt with W = sqrt(omega^2 + k).
template <class F>
double analytic_center(double p0, double omega, double k, const F& force, double T) {
    const double w2 = omega * omega + k;
    if (!(w2 > 0.0)) throw std::invalid_argument("analytic_center: omega^2 + k must be > 0");
    const double w = std::sqrt(w2);
    const double conv = integrate([&](double t) { return force(t) * std::sin(w * (T - t)); }, 0.0, T);
    return p0 * std::cos(w * T) + conv / w;
}

/// Width of an initially real gaussian in a harmonic well of frequency Omega (hbar = m = 1):
/// sigma(t)^2 = sigma0^2 cos^2(Omega t) + sin^2(Omega t) / (4 sigma0^2 Omega^2).
inline double analytic_spread(double sigma0, double omega, double t) {
    if (!(sigma0 > 0.0) || !(omega > 0.0)) throw std::invalid_argument("analytic_spread: sigma0 and Omega must be > 0");
    const double c = std::cos(omega * t), s = std::sin(omega * t);
    return std::sqrt(sigma0 * sigma0 * c * c + s * s / (4.0 * sigma0 * sigma0 * omega * omega));
}

template <class P>
concept QuadraticPotential = requires(const P& p, double t) {
    { p.quadratic_form(t) } -> std::same_as<std::optional<QuadraticForm>>;
};

/// Integrates the expectation-value dynamics p'' = -c(t) p + g(t) with classical RK4 at the
/// spec's step size. Exact for potentials at most quadratic in x; anything else is rejected.
template <QuadraticPotential P>
Trajectory ehrenfest_path(double p0, double v0, const P& potential, const EvolutionSpec& spec) {
    spec.validate();
    if (!potential.quadratic_form(0.0))
        throw std::invalid_argument("ehrenfest_path: potential is not quadratic; expectation dynamics would not close");
    using State = std::array<double, 2>;
    auto rhs = [&](const State& y, State& dydt, double t) {
        const auto q = potential.quadratic_form(t);
        if (!q) throw std::invalid_argument("ehrenfest_path: potential stopped being quadratic");
        dydt[0] = y[1];
        dydt[1] = -q->curvature * y[0] + q->force;
    };
    boost::numeric::odeint::runge_kutta4<State> rk4;
    const std::size_t n = spec.steps();
    const double dt = spec.step_size();
    State y{p0, v0};
    Trajectory tr;
    tr.times.push_back(0.0);
    tr.mean_x.push_back(p0);
    for (std::size_t s = 0; s < n; ++s) {
        rk4.do_step(rhs, y, static_cast<double>(s) * dt, dt);
        const std::size_t done = s + 1;
        if (done % spec.record_every == 0 || done == n) {
            tr.times.push_back(static_cast<double>(done) * dt);
            tr.mean_x.push_back(y[0]);
        }
    }
    return tr;
}

inline Trajectory ehrenfest_path(double p0, double v0, const HarmonicPotential& h, const ControlLaw& c,
                                 const EvolutionSpec& spec) {
    return ehrenfest_path(p0, v0, ControlledHarmonic(h, c), spec);
}

}  // namespace qsm
