#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qsm/trajectory.hpp"

namespace qsm {

struct DriftReport {
    double value = 0.0;
    bool relative = true;     // false when E(0) == 0 and the absolute drift is reported
    bool applicable = true;   // false for non-autonomous runs; value is still filled in
};

/// max |E(t) - E(0)| / |E(0)| over the recorded energy channel.
inline DriftReport energy_drift(const Trajectory& tr, bool autonomous = true) {
    if (tr.energy.empty()) throw std::invalid_argument("energy_drift: trajectory has no energy channel");
    const double e0 = tr.energy.front();
    double worst = 0.0;
    for (double e : tr.energy) worst = std::max(worst, std::abs(e - e0));
    DriftReport r;
    r.applicable = autonomous;
    if (e0 == 0.0) {
        r.relative = false;
        r.value = worst;
    } else {
        r.value = worst / std::abs(e0);
    }
    return r;
}

template <class P>
DriftReport energy_drift(const Trajectory& tr, const P& potential) {
    return energy_drift(tr, potential.autonomous());
}

/// The recorded moments that stand in for the system state.
struct Observables {
    double mean = 0.0;
    double spread = 0.0;
    double energy = 0.0;
};

enum class DescentMode {
    pointwise,  // every finite-difference derivative must be <= tolerance
    envelope,   // successive local maxima of the candidate must not increase
};

struct LyapunovSpec {
    std::function<double(const Observables&, double)> candidate;
    double region_lo = -INFINITY;
    double region_hi = INFINITY;
    double equilibrium = 0.0;
    double tolerance = 1e-6;
    double start_time = 0.0;  // samples before this are ignored (transient)
    DescentMode mode = DescentMode::pointwise;
};

struct LyapunovReport {
    double max_derivative = 0.0;
    std::size_t intervals = 0;
    std::size_t violations = 0;
    bool stayed_in_region = true;
    std::optional<double> exit_time;  // first recorded time outside the region
    bool equilibrium_ok = true;       // candidate vanishes at the equilibrium

    double violation_fraction() const {
        return intervals == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(intervals);
    }
    bool passed() const { return violations == 0 && stayed_in_region; }
};

namespace detail {

inline Observables observables_at(const Trajectory& tr, std::size_t i) {
    Observables o;
    o.mean = tr.mean_x[i];
    if (!tr.spread.empty()) o.spread = tr.spread[i];
    if (!tr.energy.empty()) o.energy = tr.energy[i];
    return o;
}

}  // namespace detail

/// Evaluates the candidate along the trajectory and checks for descent. Samples after the
/// mean leaves the region are not judged.
inline LyapunovReport lyapunov_verify(const LyapunovSpec& spec, const Trajectory& tr) {
    if (!spec.candidate) throw std::invalid_argument("lyapunov_verify: empty candidate");
    if (!(spec.region_lo < spec.region_hi)) throw std::invalid_argument("lyapunov_verify: empty region");
    tr.validate();

    LyapunovReport r;
    r.equilibrium_ok = std::abs(spec.candidate(Observables{spec.equilibrium, 0.0, 0.0}, 0.0)) <= 1e-9;

    std::vector<double> ts, vs;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (tr.times[i] < spec.start_time) continue;
        const double m = tr.mean_x[i];
        if (m < spec.region_lo || m > spec.region_hi) {
            r.stayed_in_region = false;
            r.exit_time = tr.times[i];
            break;
        }
        ts.push_back(tr.times[i]);
        vs.push_back(spec.candidate(detail::observables_at(tr, i), tr.times[i]));
    }
    if (ts.size() < 2) return r;

    r.max_derivative = -INFINITY;
    for (std::size_t i = 1; i < ts.size(); ++i)
        r.max_derivative = std::max(r.max_derivative, (vs[i] - vs[i - 1]) / (ts[i] - ts[i - 1]));

    if (spec.mode == DescentMode::pointwise) {
        r.intervals = ts.size() - 1;
        for (std::size_t i = 1; i < ts.size(); ++i)
            if ((vs[i] - vs[i - 1]) / (ts[i] - ts[i - 1]) > spec.tolerance) ++r.violations;
    } else {
        std::vector<double> peaks{vs.front()};
        for (std::size_t i = 1; i + 1 < vs.size(); ++i)
            if (vs[i] >= vs[i - 1] && vs[i] > vs[i + 1]) peaks.push_back(vs[i]);
        r.intervals = peaks.size() - 1;
        for (std::size_t i = 1; i < peaks.size(); ++i)
            if (peaks[i] - peaks[i - 1] > spec.tolerance) ++r.violations;
    }
    return r;
}

}  // namespace qsm
