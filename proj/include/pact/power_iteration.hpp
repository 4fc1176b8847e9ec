#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "pact/core.hpp"
#include "pact/rng.hpp"

namespace pact {

/// A linear map between flat real vectors with an adjoint. The adjoint must be
/// taken with respect to whatever inner product the range carries; power
/// iteration only ever measures lengths in the domain.
template <class Op>
concept LinearMap = requires(const Op& op, std::span<const double> in, std::span<double> out) {
    { op.rows() } -> std::convertible_to<std::size_t>;
    { op.cols() } -> std::convertible_to<std::size_t>;
    op.apply(in, out);
    op.apply_adjoint(in, out);
};

/// Operator norm by power iteration on A*A from a seeded random start.
/// Returns sqrt of the Rayleigh quotient after `iters` steps; 0 for the zero
/// operator.
template <LinearMap Op>
double estimate_norm(const Op& A, int iters = 100, std::uint64_t seed = 1) {
    if (iters < 1) throw InvalidConfig("estimate_norm: iters must be >= 1");
    const std::size_t n = A.cols();
    if (n == 0) return 0.0;
    Rng rng(seed);
    std::vector<double> x(n), ax(A.rows()), y(n);
    for (double& v : x) v = rng.normal();
    double nx = vec::norm2(x);
    for (double& v : x) v /= nx;

    double rayleigh = 0.0;
    for (int it = 0; it < iters; ++it) {
        A.apply(x, ax);
        A.apply_adjoint(ax, y);
        rayleigh = vec::dot(x, y);
        const double ny = vec::norm2(y);
        if (!(ny > 0.0)) return 0.0;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
    }
    return std::sqrt(std::max(rayleigh, 0.0));
}

}  // namespace pact
