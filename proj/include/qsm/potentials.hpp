#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qsm {

/// A real function of time. Either a continuous callable or a table that is
/// linearly interpolated (and held constant outside its range).
class TimeProfile {
public:
    TimeProfile() : fn_(std::make_shared<std::function<double(double)>>([](double) { return 0.0; })), zero_(true) {}

    explicit TimeProfile(std::function<double(double)> fn)
        : fn_(std::make_shared<std::function<double(double)>>(std::move(fn))) {
        if (!*fn_) throw std::invalid_argument("time profile: empty callable");
    }

    static TimeProfile zero() { return TimeProfile(); }
    static TimeProfile constant(double v) {
        return TimeProfile([v](double) { return v; });
    }

    static TimeProfile tabulated(std::vector<double> times, std::vector<double> values) {
        if (times.size() != values.size() || times.size() < 2)
            throw std::invalid_argument("time profile: table needs >= 2 matching samples");
        if (!std::is_sorted(times.begin(), times.end()) ||
            std::adjacent_find(times.begin(), times.end()) != times.end())
            throw std::invalid_argument("time profile: table times must be strictly increasing");
        return TimeProfile([ts = std::move(times), vs = std::move(values)](double t) {
            if (t <= ts.front()) return vs.front();
            if (t >= ts.back()) return vs.back();
            const auto hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
            const std::size_t lo = hi - 1;
            const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
            return vs[lo] + w * (vs[hi] - vs[lo]);
        });
    }

    double operator()(double t) const { return (*fn_)(t); }

    /// True only for profiles built as identically zero.
    bool is_zero() const noexcept { return zero_; }

private:
    // Shared so copies stay cheap; the callable itself is never mutated.
    std::shared_ptr<const std::function<double(double)>> fn_;
    bool zero_ = false;
};

/// Bare confining potential V(x) = omega^2 x^2 / 2 (unit mass).
class HarmonicPotential {
public:
    explicit HarmonicPotential(double omega) : omega_(omega) {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw std::invalid_argument("harmonic potential: omega must be finite and > 0");
    }
    double omega() const noexcept { return omega_; }
    double operator()(double x) const noexcept { return 0.5 * omega_ * omega_ * x * x; }

private:
    double omega_;
};

/// Spatially uniform sinusoidal force A sin(w t); enters the potential as -A sin(w t) x.
struct Drive {
    double amplitude = 0.0;
    double freq = 0.0;
    double force(double t) const noexcept { return amplitude * std::sin(freq * t); }
};

/// Quadratic-plus-linear potential at a fixed time: curvature x^2/2 - force x.
struct QuadraticForm {
    double curvature = 0.0;  // coefficient c in c x^2 / 2
    double force = 0.0;      // uniform force g in -g x
};

/// Controller parameterization of V_c(x,t) = (k + alpha) x^2/2 - (alpha p_ref(t) + f(t) + drive(t)) x.
class ControlLaw {
public:
    ControlLaw() = default;

    ControlLaw(double k, TimeProfile force, double alpha = 0.0, std::optional<TimeProfile> ref_path = std::nullopt,
               std::optional<Drive> drive = std::nullopt)
        : k_(k), force_(std::move(force)), alpha_(alpha), ref_path_(std::move(ref_path)), drive_(drive) {
        if (!std::isfinite(k)) throw std::invalid_argument("control law: k must be finite");
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw std::invalid_argument("control law: alpha must be finite and >= 0");
        if (alpha > 0.0 && !ref_path_)
            throw std::invalid_argument("control law: a reference path is required when alpha > 0");
    }

    static ControlLaw open_loop(TimeProfile force, double k = 0.0) { return ControlLaw(k, std::move(force)); }

    double k() const noexcept { return k_; }
    double alpha() const noexcept { return alpha_; }
    const TimeProfile& force() const noexcept { return force_; }
    const std::optional<TimeProfile>& ref_path() const noexcept { return ref_path_; }
    const std::optional<Drive>& drive() const noexcept { return drive_; }

    ControlLaw with_drive(Drive d) const {
        ControlLaw c = *this;
        c.drive_ = d;
        return c;
    }

    double ref(double t) const { return ref_path_ ? (*ref_path_)(t) : 0.0; }

    /// Uniform (x-independent) part of the controller force: alpha p_ref(t) + f(t).
    double uniform_force(double t) const { return alpha_ * ref(t) + force_(t); }

    double drive_force(double t) const { return drive_ ? drive_->force(t) : 0.0; }

    /// Controller force F_c(x, t) = -(k + alpha) x + alpha p_ref(t) + f(t). The drive is external.
    double control_force(double x, double t) const { return -(k_ + alpha_) * x + uniform_force(t); }

private:
    double k_ = 0.0;
    TimeProfile force_;
    double alpha_ = 0.0;
    std::optional<TimeProfile> ref_path_;
    std::optional<Drive> drive_;
};

inline double eval_controlled(const HarmonicPotential& h, const ControlLaw& c, double x, double t) {
    const double curvature = h.omega() * h.omega() + c.k() + c.alpha();
    return 0.5 * curvature * x * x - (c.uniform_force(t) + c.drive_force(t)) * x;
}

/// Callable V(x, t) for a harmonic plant under a control law.
class ControlledHarmonic {
public:
    ControlledHarmonic(HarmonicPotential h, ControlLaw c) : h_(h), c_(std::move(c)) {}

    double operator()(double x, double t) const { return eval_controlled(h_, c_, x, t); }

    std::optional<QuadraticForm> quadratic_form(double t) const {
        return QuadraticForm{h_.omega() * h_.omega() + c_.k() + c_.alpha(), c_.uniform_force(t) + c_.drive_force(t)};
    }

    bool autonomous() const {
        return c_.alpha() == 0.0 && !c_.drive() && c_.force().is_zero();
    }

    /// Largest angular frequency in play, used for step-size guards.
    double max_frequency() const {
        double w2 = h_.omega() * h_.omega() + c_.k() + c_.alpha();
        double w = std::sqrt(std::max(w2, 0.0));
        if (c_.drive()) w = std::max(w, std::abs(c_.drive()->freq));
        return w;
    }

    const HarmonicPotential& harmonic() const noexcept { return h_; }
    const ControlLaw& law() const noexcept { return c_; }

private:
    HarmonicPotential h_;
    ControlLaw c_;
};

/// Free harmonic oscillator, optionally with a static spring modification k.
inline ControlledHarmonic static_harmonic(double omega, double k = 0.0) {
    return ControlledHarmonic(HarmonicPotential(omega), ControlLaw::open_loop(TimeProfile::zero(), k));
}

using SpatialFunction = std::function<double(double)>;
using BitProgram = std::function<bool(double)>;

/// C = 0 for x <= 0 and C = 1 for x > 0; the boundary point belongs to branch 0.
inline BitProgram sign_program() {
    return [](double x) { return x > 0.0; };
}

inline BitProgram constant_program(bool bit) {
    return [bit](double) { return bit; };
}

/// Two potential branches V(x, 0), V(x, 1) and the program choosing between them.
class ProgrammedPair {
public:
    ProgrammedPair(SpatialFunction v0, SpatialFunction v1, BitProgram program)
        : v0_(std::move(v0)), v1_(std::move(v1)), program_(std::move(program)) {
        if (!v0_ || !v1_ || !program_) throw std::invalid_argument("programmed pair: empty branch or program");
    }

    double branch(bool c, double x) const { return c ? v1_(x) : v0_(x); }
    bool program(double x) const { return program_(x); }
    const BitProgram& program_fn() const noexcept { return program_; }

private:
    SpatialFunction v0_;
    SpatialFunction v1_;
    BitProgram program_;
};

inline double effective_potential(const ProgrammedPair& p, double x) { return p.branch(p.program(x), x); }

/// Two displaced harmonic wells omega^2 (x + d)^2 / 2 and omega^2 (x - d)^2 / 2 under the sign program.
inline ProgrammedPair displaced_pair(double omega, double offset, BitProgram program = sign_program()) {
    const double w2 = omega * omega;
    return ProgrammedPair([w2, offset](double x) { return 0.5 * w2 * (x + offset) * (x + offset); },
                          [w2, offset](double x) { return 0.5 * w2 * (x - offset) * (x - offset); },
                          std::move(program));
}

/// Callable V(x, t) view of a programmed pair's effective potential.
class EffectivePotential {
public:
    explicit EffectivePotential(ProgrammedPair pair) : pair_(std::move(pair)) {}
    double operator()(double x, double /*t*/) const { return effective_potential(pair_, x); }
    std::optional<QuadraticForm> quadratic_form(double) const { return std::nullopt; }
    bool autonomous() const { return true; }

private:
    ProgrammedPair pair_;
};

/// Pair of oscillators coupled by the control forces k(x2 - x1), k(x1 - x2).
class CoupledPotential {
public:
    CoupledPotential(double omega, double k) : omega_(omega), k_(k) {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw std::invalid_argument("coupled potential: omega must be finite and > 0");
        if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("coupled potential: k must be finite and >= 0");
    }

    double omega() const noexcept { return omega_; }
    double k() const noexcept { return k_; }
    /// Detuned single-oscillator frequency sqrt(omega^2 + k).
    double big_omega() const noexcept { return std::sqrt(omega_ * omega_ + k_); }

    double operator()(double x1, double x2, double /*t*/ = 0.0) const {
        return 0.5 * (omega_ * omega_ + k_) * (x1 * x1 + x2 * x2) - k_ * (x1 * x2);
    }

private:
    double omega_;
    double k_;
};

inline double coupled_effective(const CoupledPotential& c, double x1, double x2) { return c(x1, x2); }

struct NormalModes {
    double sum_mode;   // frequency of y1 = (x1 + x2)/sqrt(2)
    double diff_mode;  // frequency of y2 = (x1 - x2)/sqrt(2)
};

inline NormalModes normal_modes(const CoupledPotential& c) {
    const double w2 = c.omega() * c.omega();
    const double diff2 = w2 + 2.0 * c.k();
    if (!(diff2 > 0.0)) throw std::invalid_argument("normal modes: omega^2 + 2k must be > 0 (unbound mode)");
    return {c.omega(), std::sqrt(diff2)};
}

/// (x1, x2) -> (y1, y2) with y1 = (x1 + x2)/sqrt(2), y2 = (x1 - x2)/sqrt(2). The map is its own inverse.
inline std::pair<double, double> rotate_modes(double a, double b) {
    const double s = 1.0 / std::sqrt(2.0);
    return {s * (a + b), s * (a - b)};
}

}  // namespace qsm
