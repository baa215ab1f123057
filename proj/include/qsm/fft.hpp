#pragma once

// Thin FFTW wrapper. Plans are created once per shape under a lock and then
// executed through the new-array interface, which FFTW documents as thread safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qsm::fft {

using cplx = std::complex<double>;

namespace detail {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

// Keyed by (rows, cols); rows == 0 marks a 1D transform of length cols.
inline const PlanPair& plans(std::size_t rows, std::size_t cols) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find({rows, cols});
    if (it != cache.end()) return it->second;

    const std::size_t total = rows == 0 ? cols : rows * cols;
    std::vector<cplx> scratch(total);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    if (rows == 0) {
        const int n = static_cast<int>(cols);
        p.forward = fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, flags);
        p.backward = fftw_plan_dft_1d(n, data, data, FFTW_BACKWARD, flags);
    } else {
        const int r = static_cast<int>(rows), c = static_cast<int>(cols);
        p.forward = fftw_plan_dft_2d(r, c, data, data, FFTW_FORWARD, flags);
        p.backward = fftw_plan_dft_2d(r, c, data, data, FFTW_BACKWARD, flags);
    }
    if (p.forward == nullptr || p.backward == nullptr) throw std::runtime_error("fftw: plan creation failed");
    return cache.emplace(std::pair{rows, cols}, p).first->second;
}

inline fftw_complex* as_fftw(std::span<cplx> data) { return reinterpret_cast<fftw_complex*>(data.data()); }

inline void scale(std::span<cplx> data, double factor) {
    for (auto& v : data) v *= factor;
}

}  // namespace detail

/// In-place unnormalized forward transform.
inline void forward(std::span<cplx> data) {
    const auto& p = detail::plans(0, data.size());
    fftw_execute_dft(p.forward, detail::as_fftw(data), detail::as_fftw(data));
}

/// In-place inverse transform, normalized so that backward(forward(x)) == x.
inline void backward(std::span<cplx> data) {
    const auto& p = detail::plans(0, data.size());
    fftw_execute_dft(p.backward, detail::as_fftw(data), detail::as_fftw(data));
    detail::scale(data, 1.0 / static_cast<double>(data.size()));
}

/// Row-major n x n transforms.
inline void forward_2d(std::span<cplx> data, std::size_t n) {
    if (data.size() != n * n) throw std::invalid_argument("fft: 2D buffer size mismatch");
    const auto& p = detail::plans(n, n);
    fftw_execute_dft(p.forward, detail::as_fftw(data), detail::as_fftw(data));
}

inline void backward_2d(std::span<cplx> data, std::size_t n) {
    if (data.size() != n * n) throw std::invalid_argument("fft: 2D buffer size mismatch");
    const auto& p = detail::plans(n, n);
    fftw_execute_dft(p.backward, detail::as_fftw(data), detail::as_fftw(data));
    detail::scale(data, 1.0 / static_cast<double>(data.size()));
}

}  // namespace qsm::fft
