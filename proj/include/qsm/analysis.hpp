#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qsm {

/// Angular frequency from the mean spacing of zero crossings of (v - offset), located by
/// linear interpolation. Needs at least two crossings.
inline double zero_crossing_frequency(const std::vector<double>& t, const std::vector<double>& v, double offset = 0.0) {
    if (t.size() != v.size()) throw std::invalid_argument("zero_crossing_frequency: length mismatch");
    std::vector<double> crossings;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double a = v[i - 1] - offset, b = v[i] - offset;
        if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) crossings.push_back(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
    }
    if (crossings.size() < 2) throw std::runtime_error("zero_crossing_frequency: fewer than two crossings");
    const double half_period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
    return std::numbers::pi / half_period;
}

struct SinusoidComponent {
    double freq;
    double cos_coeff;
    double sin_coeff;
    double amplitude() const { return std::hypot(cos_coeff, sin_coeff); }
};

/// Least-squares fit of v(t) ~ c + sum_j (a_j cos w_j t + b_j sin w_j t) at known frequencies.
inline std::vector<SinusoidComponent> fit_sinusoids(const std::vector<double>& t, const std::vector<double>& v,
                                                    const std::vector<double>& freqs) {
    if (t.size() != v.size()) throw std::invalid_argument("fit_sinusoids: length mismatch");
    const auto cols = static_cast<Eigen::Index>(1 + 2 * freqs.size());
    if (static_cast<Eigen::Index>(t.size()) < cols) throw std::invalid_argument("fit_sinusoids: too few samples");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), cols);
    Eigen::VectorXd y(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        a(r, 0) = 1.0;
        for (std::size_t j = 0; j < freqs.size(); ++j) {
            a(r, static_cast<Eigen::Index>(1 + 2 * j)) = std::cos(freqs[j] * t[i]);
            a(r, static_cast<Eigen::Index>(2 + 2 * j)) = std::sin(freqs[j] * t[i]);
        }
        y(r) = v[i];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
    std::vector<SinusoidComponent> out;
    for (std::size_t j = 0; j < freqs.size(); ++j)
        out.push_back({freqs[j], c(static_cast<Eigen::Index>(1 + 2 * j)), c(static_cast<Eigen::Index>(2 + 2 * j))});
    return out;
}

inline double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("max_abs_difference: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// max_i |v_i - f(t_i)|
template <class F>
double max_deviation(const std::vector<double>& t, const std::vector<double>& v, const F& f) {
    if (t.size() != v.size()) throw std::invalid_argument("max_deviation: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, std::abs(v[i] - f(t[i])));
    return m;
}

}  // namespace qsm
