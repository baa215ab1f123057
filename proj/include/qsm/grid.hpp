#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsm {

/// Uniform periodic grid on [x_min, x_max). Point i sits at x_min + i*dx.
class Grid {
public:
    Grid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
        if (!std::isfinite(x_min) || !std::isfinite(x_max))
            throw std::invalid_argument("grid: bounds must be finite");
        if (!(x_max > x_min))
            throw std::invalid_argument("grid: empty domain [" + std::to_string(x_min) + ", " +
                                        std::to_string(x_max) + "]");
        if (n < 16)
            throw std::invalid_argument("grid: n = " + std::to_string(n) + " is below the minimum of 16");
        if ((n & (n - 1)) != 0)
            throw std::invalid_argument("grid: n = " + std::to_string(n) + " is not a power of two");
    }

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t size() const noexcept { return n_; }
    double length() const noexcept { return x_max_ - x_min_; }
    double dx() const noexcept { return length() / static_cast<double>(n_); }
    double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx(); }

    std::vector<double> points() const {
        std::vector<double> xs(n_);
        for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
        return xs;
    }

    /// Angular wavenumbers in FFT order; the Nyquist bin carries -pi/dx.
    std::vector<double> wavenumbers() const {
        std::vector<double> ks(n_);
        const double dk = 2.0 * std::numbers::pi / length();
        const auto half = static_cast<std::ptrdiff_t>(n_ / 2);
        for (std::size_t j = 0; j < n_; ++j) {
            auto m = static_cast<std::ptrdiff_t>(j);
            if (m >= half) m -= static_cast<std::ptrdiff_t>(n_);
            ks[j] = dk * static_cast<double>(m);
        }
        return ks;
    }

    bool contains(double x) const noexcept { return x >= x_min_ && x <= x_max_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    double x_min_;
    double x_max_;
    std::size_t n_;
};

inline Grid make_grid(double x_min, double x_max, std::size_t n) { return Grid(x_min, x_max, n); }

/// Symmetric domain [-L, L] wide enough that a packet following `max_abs_center`
/// keeps `margin_widths` spreads of clearance. L is rounded up to an integer.
inline Grid auto_grid(double max_abs_center, double sigma0, std::size_t n = 1024,
                      double margin_widths = 8.0) {
    const double half = std::ceil(std::abs(max_abs_center) + margin_widths * sigma0);
    return Grid(-half, half, n);
}

}  // namespace qsm
