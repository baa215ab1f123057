#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsm {

/// Time series of observables. `times` and `mean_x` are always present; any other
/// channel is either empty (not recorded) or exactly as long as `times`.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> mean_x;
    std::vector<double> spread;
    std::vector<double> norm;
    std::vector<double> energy;
    std::vector<double> force_expect;
    std::vector<double> cost_accum;
    // 2D runs
    std::vector<double> mean_x2;
    std::vector<double> covariance;
    // programmed-register runs
    std::vector<double> mismatch_weight;

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }

    void validate() const {
        const std::size_t n = times.size();
        auto check = [n](const std::vector<double>& c, const char* name, bool required) {
            if ((required || !c.empty()) && c.size() != n)
                throw std::logic_error(std::string("trajectory: channel '") + name + "' has " +
                                       std::to_string(c.size()) + " samples, expected " + std::to_string(n));
        };
        check(mean_x, "mean_x", true);
        check(spread, "spread", false);
        check(norm, "norm", false);
        check(energy, "energy", false);
        check(force_expect, "force_expect", false);
        check(cost_accum, "cost_accum", false);
        check(mean_x2, "mean_x2", false);
        check(covariance, "covariance", false);
        check(mismatch_weight, "mismatch_weight", false);
        for (std::size_t i = 1; i < n; ++i)
            if (!(times[i] > times[i - 1])) throw std::logic_error("trajectory: times not strictly increasing");
    }
};

}  // namespace qsm
