#pragma once

#include <span>

#include "pact/core.hpp"

namespace pact {

// Forward differences with Neumann boundary (the difference leaving the grid
// is zero) on unit grid spacing. The divergence operators are the exact
// negative adjoints, so <grad u, r> = -<u, div r>.

namespace detail {

// out += forward difference of u along x (columns).
inline void dx_forward(std::span<const double> u, std::size_t nx, std::size_t ny, std::span<double> out) {
    for (std::size_t i = 0; i < ny; ++i)
        for (std::size_t j = 0; j + 1 < nx; ++j) out[i * nx + j] += u[i * nx + j + 1] - u[i * nx + j];
}

inline void dy_forward(std::span<const double> u, std::size_t nx, std::size_t ny, std::span<double> out) {
    for (std::size_t i = 0; i + 1 < ny; ++i)
        for (std::size_t j = 0; j < nx; ++j) out[i * nx + j] += u[(i + 1) * nx + j] - u[i * nx + j];
}

// out += -dx_forward^T r
inline void dx_div(std::span<const double> r, std::size_t nx, std::size_t ny, std::span<double> out) {
    if (nx < 2) return;
    for (std::size_t i = 0; i < ny; ++i) {
        const std::size_t row = i * nx;
        out[row] += r[row];
        for (std::size_t j = 1; j + 1 < nx; ++j) out[row + j] += r[row + j] - r[row + j - 1];
        out[row + nx - 1] -= r[row + nx - 2];
    }
}

inline void dy_div(std::span<const double> r, std::size_t nx, std::size_t ny, std::span<double> out) {
    if (ny < 2) return;
    for (std::size_t j = 0; j < nx; ++j) out[j] += r[j];
    for (std::size_t i = 1; i + 1 < ny; ++i)
        for (std::size_t j = 0; j < nx; ++j) out[i * nx + j] += r[i * nx + j] - r[(i - 1) * nx + j];
    for (std::size_t j = 0; j < nx; ++j) out[(ny - 1) * nx + j] -= r[(ny - 2) * nx + j];
}

}  // namespace detail

inline void grad(const Image& u, VectorField& out) {
    out = VectorField(u.nx(), u.ny());
    detail::dx_forward(u.values(), u.nx(), u.ny(), out.x());
    detail::dy_forward(u.values(), u.nx(), u.ny(), out.y());
}

inline VectorField grad(const Image& u) {
    VectorField g;
    grad(u, g);
    return g;
}

inline Image div(const VectorField& r) {
    Image out(r.nx(), r.ny());
    detail::dx_div(r.x(), r.nx(), r.ny(), out.values());
    detail::dy_div(r.y(), r.nx(), r.ny(), out.values());
    return out;
}

/// Symmetrized gradient (grad v + grad v^T) / 2 with the same forward stencil.
inline SymTensorField sym_grad(const VectorField& v) {
    const std::size_t nx = v.nx(), ny = v.ny();
    SymTensorField e(nx, ny);
    detail::dx_forward(v.x(), nx, ny, e.xx());
    detail::dy_forward(v.y(), nx, ny, e.yy());
    std::vector<double> tmp(nx * ny, 0.0);
    detail::dy_forward(v.x(), nx, ny, tmp);
    detail::dx_forward(v.y(), nx, ny, tmp);
    auto xy = e.xy();
    for (std::size_t p = 0; p < tmp.size(); ++p) xy[p] = 0.5 * tmp[p];
    return e;
}

/// Negative adjoint of sym_grad under the pairing that counts xy twice.
inline VectorField sym_div(const SymTensorField& s) {
    const std::size_t nx = s.nx(), ny = s.ny();
    VectorField out(nx, ny);
    detail::dx_div(s.xx(), nx, ny, out.x());
    detail::dy_div(s.xy(), nx, ny, out.x());
    detail::dy_div(s.yy(), nx, ny, out.y());
    detail::dx_div(s.xy(), nx, ny, out.y());
    return out;
}

}  // namespace pact
