#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsm/fft.hpp"
#include "qsm/grid.hpp"
#include "qsm/potentials.hpp"

namespace qsm {

using cplx = std::complex<double>;

template <class P>
concept Potential1D = requires(const P& p, double x, double t) {
    { p(x, t) } -> std::convertible_to<double>;
};

template <class P>
concept Potential2D = requires(const P& p, double x1, double x2, double t) {
    { p(x1, x2, t) } -> std::convertible_to<double>;
};

/// Complex amplitudes on a 1D grid.
struct WaveFunction {
    Grid grid;
    std::vector<cplx> amplitudes;

    explicit WaveFunction(Grid g) : grid(g), amplitudes(g.size()) {}
    WaveFunction(Grid g, std::vector<cplx> amps) : grid(g), amplitudes(std::move(amps)) {
        if (amplitudes.size() != grid.size()) throw std::invalid_argument("wavefunction: amplitude count != grid size");
    }
};

/// Complex amplitudes on a square 2D grid, row-major with index i1 * n + i2 (x1 along rows).
struct WaveFunction2D {
    Grid grid;
    std::vector<cplx> amplitudes;

    explicit WaveFunction2D(Grid g) : grid(g), amplitudes(g.size() * g.size()) {}
    WaveFunction2D(Grid g, std::vector<cplx> amps) : grid(g), amplitudes(std::move(amps)) {
        if (amplitudes.size() != grid.size() * grid.size())
            throw std::invalid_argument("wavefunction2d: amplitude count != n*n");
    }
};

/// Analytic gaussian packet parameters (hbar = m = 1).
struct GaussianState {
    double center = 0.0;
    double spread = 1.0 / std::numbers::sqrt2;
    double momentum = 0.0;
    double phase = 0.0;
};

namespace detail {

inline double sum_sq(const std::vector<cplx>& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return s;
}

inline void scale(std::vector<cplx>& a, double f) {
    for (auto& v : a) v *= f;
}

inline cplx gaussian_amplitude(const GaussianState& s, double x) {
    const double d = x - s.center;
    const double env = std::exp(-d * d / (4.0 * s.spread * s.spread)) / std::sqrt(std::sqrt(2.0 * std::numbers::pi) * s.spread);
    return env * std::polar(1.0, s.momentum * x + s.phase);
}

inline void check_packet_support(const Grid& grid, const GaussianState& s) {
    if (!(s.spread > 0.0) || !std::isfinite(s.spread)) throw std::invalid_argument("gaussian: spread must be > 0");
    const double lo = s.center - 6.0 * s.spread, hi = s.center + 6.0 * s.spread;
    if (!grid.contains(lo) || !grid.contains(hi))
        throw std::invalid_argument("gaussian: packet support [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                    "] exceeds domain [" + std::to_string(grid.x_min()) + ", " +
                                    std::to_string(grid.x_max()) + "]");
}

}  // namespace detail

inline double norm(const WaveFunction& wf) { return detail::sum_sq(wf.amplitudes) * wf.grid.dx(); }
inline double norm(const WaveFunction2D& wf) {
    const double dx = wf.grid.dx();
    return detail::sum_sq(wf.amplitudes) * dx * dx;
}

/// Rescales to unit norm. Used once at construction; evolution never renormalizes.
inline void normalize(WaveFunction& wf) {
    const double n = norm(wf);
    if (!(n > 0.0)) throw std::invalid_argument("normalize: zero state");
    detail::scale(wf.amplitudes, 1.0 / std::sqrt(n));
}
inline void normalize(WaveFunction2D& wf) {
    const double n = norm(wf);
    if (!(n > 0.0)) throw std::invalid_argument("normalize: zero state");
    detail::scale(wf.amplitudes, 1.0 / std::sqrt(n));
}

inline WaveFunction gaussian_init(const Grid& grid, const GaussianState& s) {
    detail::check_packet_support(grid, s);
    WaveFunction wf(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) wf.amplitudes[i] = detail::gaussian_amplitude(s, grid.x(i));
    normalize(wf);
    return wf;
}

/// Product of two independent gaussian packets, one per axis.
inline WaveFunction2D product_state(const Grid& grid, const GaussianState& s1, const GaussianState& s2) {
    detail::check_packet_support(grid, s1);
    detail::check_packet_support(grid, s2);
    const std::size_t n = grid.size();
    std::vector<cplx> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = detail::gaussian_amplitude(s1, grid.x(i));
        b[i] = detail::gaussian_amplitude(s2, grid.x(i));
    }
    WaveFunction2D wf(grid);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) wf.amplitudes[i * n + j] = a[i] * b[j];
    normalize(wf);
    return wf;
}

/// Ground state of the coupled pair, built from its normal modes:
/// psi ~ exp(-(w1 y1^2 + w2 y2^2) / 2), optionally displaced to (c1, c2).
inline WaveFunction2D normal_mode_ground_state(const Grid& grid, const CoupledPotential& pot, double c1 = 0.0,
                                               double c2 = 0.0) {
    const auto [w1, w2] = normal_modes(pot);
    const std::size_t n = grid.size();
    WaveFunction2D wf(grid);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto [y1, y2] = rotate_modes(grid.x(i) - c1, grid.x(j) - c2);
            wf.amplitudes[i * n + j] = std::exp(-0.5 * (w1 * y1 * y1 + w2 * y2 * y2));
        }
    normalize(wf);
    return wf;
}

inline double mean_position(const WaveFunction& wf) {
    double s = 0.0;
    for (std::size_t i = 0; i < wf.grid.size(); ++i) s += wf.grid.x(i) * std::norm(wf.amplitudes[i]);
    return s * wf.grid.dx();
}

/// Central moment <(x - <x>)^order>.
inline double central_moment(const WaveFunction& wf, int order) {
    const double mu = mean_position(wf);
    double s = 0.0;
    for (std::size_t i = 0; i < wf.grid.size(); ++i) s += std::pow(wf.grid.x(i) - mu, order) * std::norm(wf.amplitudes[i]);
    return s * wf.grid.dx();
}

inline double spread(const WaveFunction& wf) { return std::sqrt(central_moment(wf, 2)); }

/// <(x-mu)^4> / sigma^4 - 3; zero for any gaussian density.
inline double excess_kurtosis(const WaveFunction& wf) {
    const double m2 = central_moment(wf, 2);
    return central_moment(wf, 4) / (m2 * m2) - 3.0;
}

inline double kinetic_energy(const WaveFunction& wf) {
    std::vector<cplx> phi = wf.amplitudes;
    fft::forward(phi);
    const auto ks = wf.grid.wavenumbers();
    double s = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) s += 0.5 * ks[j] * ks[j] * std::norm(phi[j]);
    // Parseval: sum |phi_k|^2 = n sum |psi_j|^2
    return s * wf.grid.dx() / static_cast<double>(phi.size());
}

template <Potential1D P>
double potential_energy(const WaveFunction& wf, const P& potential, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < wf.grid.size(); ++i) s += potential(wf.grid.x(i), t) * std::norm(wf.amplitudes[i]);
    return s * wf.grid.dx();
}

/// <T + V> with the kinetic term evaluated spectrally.
template <Potential1D P>
double energy(const WaveFunction& wf, const P& potential, double t = 0.0) {
    return kinetic_energy(wf) + potential_energy(wf, potential, t);
}

inline cplx inner_product(const WaveFunction& a, const WaveFunction& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("inner product: grid mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return s * a.grid.dx();
}

/// |<a|b>|, clamped to [0, 1].
inline double fidelity(const WaveFunction& a, const WaveFunction& b) {
    return std::min(1.0, std::abs(inner_product(a, b)));
}

/// Mirror image x -> -x on the grid [-x_max, -x_min). Uses periodicity: the x_min
/// point is identified with x_max and so maps onto itself.
inline WaveFunction reflect(const WaveFunction& wf) {
    const std::size_t n = wf.grid.size();
    WaveFunction out(Grid(-wf.grid.x_max(), -wf.grid.x_min(), n));
    for (std::size_t i = 0; i < n; ++i) out.amplitudes[i] = wf.amplitudes[(n - i) % n];
    return out;
}

// --- 2D observables -------------------------------------------------------------

struct Moments2D {
    double mean1 = 0.0, mean2 = 0.0;
    double var1 = 0.0, var2 = 0.0;
    double covariance = 0.0;
};

inline Moments2D moments(const WaveFunction2D& wf) {
    const std::size_t n = wf.grid.size();
    const double dx = wf.grid.dx();
    const auto xs = wf.grid.points();
    double m1 = 0, m2 = 0, s11 = 0, s22 = 0, s12 = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double p = std::norm(wf.amplitudes[i * n + j]);
            m1 += xs[i] * p;
            m2 += xs[j] * p;
            s11 += xs[i] * xs[i] * p;
            s22 += xs[j] * xs[j] * p;
            s12 += xs[i] * xs[j] * p;
        }
    const double w = dx * dx;
    m1 *= w, m2 *= w, s11 *= w, s22 *= w, s12 *= w;
    return {m1, m2, s11 - m1 * m1, s22 - m2 * m2, s12 - m1 * m2};
}

/// <x1 x2> - <x1><x2>.
inline double covariance(const WaveFunction2D& wf) { return moments(wf).covariance; }

inline double kinetic_energy(const WaveFunction2D& wf) {
    const std::size_t n = wf.grid.size();
    std::vector<cplx> phi = wf.amplitudes;
    fft::forward_2d(phi, n);
    const auto ks = wf.grid.wavenumbers();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s += 0.5 * (ks[i] * ks[i] + ks[j] * ks[j]) * std::norm(phi[i * n + j]);
    const double dx = wf.grid.dx();
    return s * dx * dx / static_cast<double>(n * n);
}

template <Potential2D P>
double energy(const WaveFunction2D& wf, const P& potential, double t = 0.0) {
    const std::size_t n = wf.grid.size();
    const auto xs = wf.grid.points();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s += potential(xs[i], xs[j], t) * std::norm(wf.amplitudes[i * n + j]);
    const double dx = wf.grid.dx();
    return kinetic_energy(wf) + s * dx * dx;
}

inline cplx inner_product(const WaveFunction2D& a, const WaveFunction2D& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("inner product: grid mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    const double dx = a.grid.dx();
    return s * dx * dx;
}

inline double fidelity(const WaveFunction2D& a, const WaveFunction2D& b) {
    return std::min(1.0, std::abs(inner_product(a, b)));
}

}  // namespace qsm
