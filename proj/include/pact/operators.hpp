#pragma once

#include <algorithm>
#include <span>

#include "pact/core.hpp"
#include "pact/differential.hpp"
#include "pact/dtcwt.hpp"
#include "pact/geometry.hpp"
#include "pact/power_iteration.hpp"

namespace pact {

// LinearMap adapters over flat vectors, for norm estimation and for the
// adjoint tests.

struct IdentityOp {
    std::size_t n = 0;
    std::size_t rows() const { return n; }
    std::size_t cols() const { return n; }
    void apply(std::span<const double> x, std::span<double> y) const { std::copy(x.begin(), x.end(), y.begin()); }
    void apply_adjoint(std::span<const double> x, std::span<double> y) const {
        std::copy(x.begin(), x.end(), y.begin());
    }
};

/// u -> grad u; adjoint r -> -div r.
struct GradientOp {
    std::size_t nx = 0, ny = 0;
    std::size_t rows() const { return 2 * nx * ny; }
    std::size_t cols() const { return nx * ny; }
    void apply(std::span<const double> x, std::span<double> y) const {
        std::fill(y.begin(), y.end(), 0.0);
        const std::size_t n = nx * ny;
        detail::dx_forward(x, nx, ny, y.subspan(0, n));
        detail::dy_forward(x, nx, ny, y.subspan(n, n));
    }
    void apply_adjoint(std::span<const double> r, std::span<double> x) const {
        std::fill(x.begin(), x.end(), 0.0);
        const std::size_t n = nx * ny;
        detail::dx_div(r.subspan(0, n), nx, ny, x);
        detail::dy_div(r.subspan(n, n), nx, ny, x);
        for (double& v : x) v = -v;
    }
};

/// (u, v) -> (grad u - v, E v), the regularizer block of the TGV model.
/// Domain layout [u, v.x, v.y]; range layout [r.x, r.y, s.xx, s.yy, s.xy].
/// The adjoint is taken under the pairing that counts s.xy twice.
struct TgvBlockOp {
    std::size_t nx = 0, ny = 0;
    std::size_t rows() const { return 5 * nx * ny; }
    std::size_t cols() const { return 3 * nx * ny; }
    void apply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = nx * ny;
        std::fill(y.begin(), y.end(), 0.0);
        auto u = x.subspan(0, n), vx = x.subspan(n, n), vy = x.subspan(2 * n, n);
        detail::dx_forward(u, nx, ny, y.subspan(0, n));
        detail::dy_forward(u, nx, ny, y.subspan(n, n));
        for (std::size_t p = 0; p < n; ++p) {
            y[p] -= vx[p];
            y[n + p] -= vy[p];
        }
        detail::dx_forward(vx, nx, ny, y.subspan(2 * n, n));
        detail::dy_forward(vy, nx, ny, y.subspan(3 * n, n));
        std::vector<double> t(n, 0.0);
        detail::dy_forward(vx, nx, ny, t);
        detail::dx_forward(vy, nx, ny, t);
        for (std::size_t p = 0; p < n; ++p) y[4 * n + p] = 0.5 * t[p];
    }
    void apply_adjoint(std::span<const double> y, std::span<double> x) const {
        const std::size_t n = nx * ny;
        std::fill(x.begin(), x.end(), 0.0);
        auto rx = y.subspan(0, n), ry = y.subspan(n, n);
        auto sxx = y.subspan(2 * n, n), syy = y.subspan(3 * n, n), sxy = y.subspan(4 * n, n);
        auto u = x.subspan(0, n), vx = x.subspan(n, n), vy = x.subspan(2 * n, n);
        detail::dx_div(rx, nx, ny, u);
        detail::dy_div(ry, nx, ny, u);
        detail::dx_div(sxx, nx, ny, vx);
        detail::dy_div(sxy, nx, ny, vx);
        detail::dy_div(syy, nx, ny, vy);
        detail::dx_div(sxy, nx, ny, vy);
        for (std::size_t p = 0; p < n; ++p) {
            u[p] = -u[p];
            vx[p] = -vx[p] - rx[p];
            vy[p] = -vy[p] - ry[p];
        }
    }
};

struct WaveletOp {
    std::size_t nx = 0, ny = 0;
    int levels = 3;
    std::size_t rows() const { return 4 * nx * ny; }
    std::size_t cols() const { return nx * ny; }
    void apply(std::span<const double> x, std::span<double> y) const {
        Image u(nx, ny, std::vector<double>(x.begin(), x.end()));
        const WaveletCoeffs w = dtcwt_forward(u, levels);
        std::copy(w.values().begin(), w.values().end(), y.begin());
    }
    void apply_adjoint(std::span<const double> y, std::span<double> x) const {
        WaveletCoeffs w(nx, ny, levels);
        std::copy(y.begin(), y.end(), w.values().begin());
        const Image u = dtcwt_inverse(w);
        std::copy(u.values().begin(), u.values().end(), x.begin());
    }
};

struct RegularizerNorms {
    double grad = 0.0;
    double tgv_block = 0.0;
    double wavelet = 0.0;
};

/// Power-iteration norms of grad, the TGV block [[grad, -I], [0, E]] and the
/// wavelet transform on `grid` (wavelet skipped, reported 0, when the grid is
/// not divisible by 2^levels).
inline RegularizerNorms operator_norms(const ImageGrid& grid, int levels, int iters = 100, std::uint64_t seed = 7) {
    RegularizerNorms n;
    n.grad = estimate_norm(GradientOp{grid.nx(), grid.ny()}, iters, seed);
    n.tgv_block = estimate_norm(TgvBlockOp{grid.nx(), grid.ny()}, iters, seed);
    const std::size_t m = std::size_t{1} << levels;
    if (levels >= 1 && grid.nx() % m == 0 && grid.ny() % m == 0)
        n.wavelet = estimate_norm(WaveletOp{grid.nx(), grid.ny(), levels}, iters, seed);
    return n;
}

}  // namespace pact
