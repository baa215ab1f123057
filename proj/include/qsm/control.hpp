#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsm/potentials.hpp"
#include "qsm/propagator.hpp"
#include "qsm/quadrature.hpp"
#include "qsm/trajectory.hpp"

namespace qsm {

/// Steer the packet center from p0 (at rest) to p_hat at time T, given a model frequency.
class SteeringProblem {
public:
    SteeringProblem(double omega_model, double p0, double p_hat, double T)
        : omega_(omega_model), p0_(p0), p_hat_(p_hat), T_(T) {
        if (!(omega_model > 0.0) || !std::isfinite(omega_model))
            throw std::invalid_argument("steering problem: omega_model must be finite and > 0");
        if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("steering problem: T must be finite and > 0");
        if (!std::isfinite(p0) || !std::isfinite(p_hat))
            throw std::invalid_argument("steering problem: p0 and p_hat must be finite");
        if (!(denominator() > 0.0)) throw std::invalid_argument("steering problem: 2 w T - sin(2 w T) vanishes");
    }

    double omega_model() const noexcept { return omega_; }
    double p0() const noexcept { return p0_; }
    double p_hat() const noexcept { return p_hat_; }
    double T() const noexcept { return T_; }

    /// 2 w T - sin(2 w T); positive for every T > 0.
    double denominator() const noexcept { return 2.0 * omega_ * T_ - std::sin(2.0 * omega_ * T_); }

private:
    double omega_, p0_, p_hat_, T_;
};

/// Amplitude A of the minimum-effort force A sin(w (T - t)).
inline double optimal_force_amplitude(const SteeringProblem& prob) {
    const double w = prob.omega_model();
    return 4.0 * w * w * (prob.p_hat() - prob.p0() * std::cos(w * prob.T())) / prob.denominator();
}

/// Minimum of int f^2 dt subject to p(T) = p_hat for the k = 0 plant.
inline TimeProfile optimal_force(const SteeringProblem& prob) {
    const double a = optimal_force_amplitude(prob);
    const double w = prob.omega_model(), T = prob.T();
    return TimeProfile([a, w, T](double t) { return a * std::sin(w * (T - t)); });
}

/// Model-predicted center under the optimal force. Uses the closed form of the
/// convolution of A sin(w (T - s)) with sin(w (t - s)) over [0, t].
inline TimeProfile reference_path(const SteeringProblem& prob) {
    const double a = optimal_force_amplitude(prob);
    const double w = prob.omega_model(), T = prob.T(), p0 = prob.p0();
    return TimeProfile([a, w, T, p0](double t) {
        const double conv =
            0.5 * a * (t * std::cos(w * (T - t)) - (std::sin(w * (T + t)) - std::sin(w * (T - t))) / (2.0 * w));
        return p0 * std::cos(w * t) + conv / w;
    });
}

/// Open-loop force f_ideal plus the tracking spring -alpha (x - p_ref(t)).
inline ControlLaw feedback_law(const SteeringProblem& prob, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("feedback_law: alpha must be >= 0");
    return ControlLaw(0.0, optimal_force(prob), alpha, reference_path(prob));
}

inline double detuned_frequency(double omega, double k) {
    const double w2 = omega * omega + k;
    if (!(w2 > 0.0)) throw std::invalid_argument("detuned_frequency: omega^2 + k must be > 0");
    return std::sqrt(w2);
}

// --- cost -------------------------------------------------------------------------

struct Moments {
    double mean = 0.0;
    std::optional<double> second;  // <x^2>
};

/// J = int <F_c^2> dt and isolated contributions of each force component
/// (cross terms are in J only).
struct CostReport {
    double J = 0.0;
    double spring_term = 0.0;    // int k^2 <x^2>
    double force_term = 0.0;     // int f^2
    double feedback_term = 0.0;  // int alpha^2 <(x - p_ref)^2>
};

namespace detail {

struct CostIntegrands {
    double total, spring, force, feedback;
};

inline CostIntegrands cost_integrands(const ControlLaw& c, double t, const Moments& m) {
    const double stiff = c.k() + c.alpha();
    const double f = c.force()(t);
    const double g = c.uniform_force(t);
    if (stiff != 0.0 && !m.second)
        throw std::invalid_argument("control_cost: second moment required when k + alpha != 0");
    const double x2 = m.second.value_or(0.0);
    const double pr = c.ref(t);
    return {stiff * stiff * x2 - 2.0 * stiff * g * m.mean + g * g, c.k() * c.k() * x2, f * f,
            c.alpha() * c.alpha() * (x2 - 2.0 * pr * m.mean + pr * pr)};
}

}  // namespace detail

using MomentSource = std::function<Moments(double)>;

/// Cost by adaptive quadrature over continuous moments.
inline CostReport control_cost(const ControlLaw& c, const MomentSource& moments, double T) {
    CostReport r;
    auto part = [&](auto member) {
        return integrate([&](double t) { return detail::cost_integrands(c, t, moments(t)).*member; }, 0.0, T, 1e-10);
    };
    r.J = part(&detail::CostIntegrands::total);
    r.spring_term = part(&detail::CostIntegrands::spring);
    r.force_term = part(&detail::CostIntegrands::force);
    r.feedback_term = part(&detail::CostIntegrands::feedback);
    return r;
}

/// Cost by trapezoidal integration over recorded first and second moments.
inline CostReport control_cost(const ControlLaw& c, const Trajectory& tr) {
    tr.validate();
    const bool have_second = tr.spread.size() == tr.size();
    CostReport r;
    detail::CostIntegrands prev{};
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Moments m{tr.mean_x[i], std::nullopt};
        if (have_second) m.second = tr.spread[i] * tr.spread[i] + tr.mean_x[i] * tr.mean_x[i];
        const auto cur = detail::cost_integrands(c, tr.times[i], m);
        if (i > 0) {
            const double h = 0.5 * (tr.times[i] - tr.times[i - 1]);
            r.J += h * (prev.total + cur.total);
            r.spring_term += h * (prev.spring + cur.spring);
            r.force_term += h * (prev.force + cur.force);
            r.feedback_term += h * (prev.feedback + cur.feedback);
        }
        prev = cur;
    }
    return r;
}

/// Fills force_expect (<F_c>) and cost_accum (running trapezoidal J) on a trajectory.
inline void annotate_cost(Trajectory& tr, const ControlLaw& c) {
    tr.validate();
    const bool have_second = tr.spread.size() == tr.size();
    tr.force_expect.assign(tr.size(), 0.0);
    tr.cost_accum.assign(tr.size(), 0.0);
    double prev = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.times[i];
        Moments m{tr.mean_x[i], std::nullopt};
        if (have_second) m.second = tr.spread[i] * tr.spread[i] + tr.mean_x[i] * tr.mean_x[i];
        tr.force_expect[i] = c.control_force(tr.mean_x[i], t);
        const double cur = detail::cost_integrands(c, t, m).total;
        if (i > 0) tr.cost_accum[i] = tr.cost_accum[i - 1] + 0.5 * (t - tr.times[i - 1]) * (prev + cur);
        prev = cur;
    }
}

/// Gaussian moments of an open-loop run (alpha = 0) from the closed forms.
inline MomentSource open_loop_moments(double p0, double sigma0, double omega, const ControlLaw& c) {
    if (c.alpha() != 0.0) throw std::invalid_argument("open_loop_moments: feedback laws need the ODE moment path");
    const double big_omega = detuned_frequency(omega, c.k());
    return [=](double t) {
        const double mu = analytic_center(p0, omega, c.k(), c.force(), t);
        const double s = analytic_spread(sigma0, big_omega, t);
        return Moments{mu, s * s + mu * mu};
    };
}

/// Moments of a gaussian under any harmonic law: Ehrenfest mean plus closed-form width,
/// sampled on the spec's step grid.
inline Trajectory gaussian_moment_path(double p0, double sigma0, const HarmonicPotential& h, const ControlLaw& c,
                                       const EvolutionSpec& spec) {
    Trajectory tr = ehrenfest_path(p0, 0.0, h, c, spec);
    const double big_omega = detuned_frequency(h.omega(), c.k() + c.alpha());
    tr.spread.reserve(tr.size());
    for (double t : tr.times) tr.spread.push_back(analytic_spread(sigma0, big_omega, t));
    return tr;
}

// --- optimality certificate ------------------------------------------------------------

enum class TrialStatus { pass, fail, constraint_violation };

struct TrialResult {
    double cost = 0.0;
    double constraint_residual = 0.0;  // int delta_f(t) sin(w (T - t)) dt
    TrialStatus status = TrialStatus::pass;
};

struct CertificateReport {
    double optimal_cost = 0.0;
    std::vector<TrialResult> trials;

    std::size_t passed() const {
        std::size_t n = 0;
        for (const auto& t : trials) n += t.status == TrialStatus::pass;
        return n;
    }
    bool all_passed() const { return passed() == trials.size(); }
};

/// Checks one perturbation of the optimal force. A perturbation that moves the endpoint
/// (non-zero constraint residual) is reported as such instead of being compared.
inline TrialResult check_perturbation(const SteeringProblem& prob, const TimeProfile& delta,
                                      double constraint_tol = 1e-9) {
    const auto f_star = optimal_force(prob);
    const double w = prob.omega_model(), T = prob.T();
    const double j_star = integrate([&](double t) { return f_star(t) * f_star(t); }, 0.0, T);
    TrialResult r;
    r.constraint_residual = integrate([&](double t) { return delta(t) * std::sin(w * (T - t)); }, 0.0, T);
    r.cost = integrate([&](double t) { const double f = f_star(t) + delta(t); return f * f; }, 0.0, T);
    if (std::abs(r.constraint_residual) > constraint_tol)
        r.status = TrialStatus::constraint_violation;
    else
        r.status = r.cost >= j_star - 1e-9 ? TrialStatus::pass : TrialStatus::fail;
    return r;
}

/// Random smooth perturbation sum_{n<=8} c_n sin(n pi t / T) with unit-normal coefficients.
/// With `project`, the component along sin(w (T - t)) is removed so p(T) is unchanged.
inline TimeProfile random_perturbation(const SteeringProblem& prob, std::uint64_t seed, bool project = true) {
    constexpr int modes = 8;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> coef(modes);
    for (auto& c : coef) c = normal(rng);
    const double T = prob.T(), w = prob.omega_model();
    auto raw = [coef, T](double t) {
        double s = 0.0;
        for (int n = 1; n <= modes; ++n) s += coef[n - 1] * std::sin(n * std::numbers::pi * t / T);
        return s;
    };
    double lambda = 0.0;
    if (project) {
        auto g = [w, T](double t) { return std::sin(w * (T - t)); };
        const double num = integrate([&](double t) { return raw(t) * g(t); }, 0.0, T);
        const double den = integrate([&](double t) { return g(t) * g(t); }, 0.0, T);
        lambda = num / den;
    }
    return TimeProfile([raw, lambda, w, T](double t) { return raw(t) - lambda * std::sin(w * (T - t)); });
}

/// Per-trial seeds are derived from the master seed, so trials are reproducible and independent.
inline CertificateReport optimality_certificate(const SteeringProblem& prob, std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("optimality_certificate: trials must be >= 1");
    const auto f_star = optimal_force(prob);
    CertificateReport rep;
    rep.optimal_cost = integrate([&](double t) { return f_star(t) * f_star(t); }, 0.0, prob.T());
    std::seed_seq master{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::vector<std::uint64_t> seeds(trials);
    {
        std::vector<std::uint32_t> words(2 * trials);
        master.generate(words.begin(), words.end());
        for (std::size_t i = 0; i < trials; ++i)
            seeds[i] = (static_cast<std::uint64_t>(words[2 * i]) << 32) | words[2 * i + 1];
    }
    rep.trials.reserve(trials);
    for (std::size_t i = 0; i < trials; ++i) rep.trials.push_back(check_perturbation(prob, random_perturbation(prob, seeds[i])));
    return rep;
}

// --- coupling ---------------------------------------------------------------------

/// Control forces k (x2 - x1) on the first oscillator and k (x1 - x2) on the second.
class CouplingLaw {
public:
    explicit CouplingLaw(double k) : k_(k) {
        if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("coupling_law: k must be finite and >= 0");
    }
    double k() const noexcept { return k_; }
    std::pair<double, double> forces(double x1, double x2) const { return {k_ * (x2 - x1), k_ * (x1 - x2)}; }
    /// Potential generating the forces: k (x1 - x2)^2 / 2.
    double potential(double x1, double x2) const { return 0.5 * k_ * (x1 - x2) * (x1 - x2); }
    /// Bare pair plus control, which equals CoupledPotential(omega, k).
    double induced_potential(double omega, double x1, double x2) const {
        return 0.5 * omega * omega * (x1 * x1 + x2 * x2) + potential(x1, x2);
    }

private:
    double k_;
};

inline CouplingLaw coupling_law(double k) { return CouplingLaw(k); }

}  // namespace qsm
