#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <fftw3.h>

#include "pact/core.hpp"

namespace pact {

/// Real <-> half-complex transforms of a fixed length, backed by FFTW with
/// estimate-only planning (deterministic plans, no wisdom files).
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        if (n == 0) throw ContractViolation("RealFft: length must be positive");
        real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_, real_, FFTW_ESTIMATE);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    /// DFT of x zero-padded (or truncated) to the transform length.
    std::vector<std::complex<double>> forward(std::span<const double> x) {
        for (std::size_t i = 0; i < n_; ++i) real_[i] = i < x.size() ? x[i] : 0.0;
        fftw_execute(fwd_);
        std::vector<std::complex<double>> out(bins());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec_[k][0], spec_[k][1]};
        return out;
    }

    /// Inverse DFT including the 1/n normalization.
    std::vector<double> inverse(std::span<const std::complex<double>> X) {
        require_size(X.size(), bins(), "RealFft::inverse");
        for (std::size_t k = 0; k < X.size(); ++k) {
            spec_[k][0] = X[k].real();
            spec_[k][1] = X[k].imag();
        }
        fftw_execute(inv_);
        std::vector<double> out(n_);
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = real_[i] * s;
        return out;
    }

private:
    std::size_t n_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

/// Smallest 2^a 3^b 5^c >= n.
inline std::size_t fft_friendly_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

/// Full linear convolution (length a+b-1) through zero-padded FFTs.
inline std::vector<double> linear_convolution(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t n = a.size() + b.size() - 1;
    RealFft fft(fft_friendly_size(n));
    auto A = fft.forward(a);
    const auto B = fft.forward(b);
    for (std::size_t k = 0; k < A.size(); ++k) A[k] *= B[k];
    auto out = fft.inverse(A);
    out.resize(n);
    return out;
}

}  // namespace pact
