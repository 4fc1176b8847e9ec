#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "pact/core.hpp"
#include "pact/dtcwt.hpp"

namespace pact {

/// prox of gamma F1* for F1(q) = 1/2 ||q - f||^2:  (q - gamma f) / (1 + gamma).
inline void prox_fidelity_dual(std::span<double> q, std::span<const double> f, double gamma) {
    require_size(f.size(), q.size(), "prox_fidelity_dual");
    if (!(gamma > 0.0)) throw ContractViolation("prox_fidelity_dual: gamma must be > 0");
    const double s = 1.0 / (1.0 + gamma);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = (q[i] - gamma * f[i]) * s;
}

namespace detail {
inline double ball_scale(double radius, double n) {
    const double m = std::max(radius, n);
    return m > 0.0 ? radius / m : 0.0;
}
}  // namespace detail

// Pointwise projections onto {|r|_2 <= radius}: r * radius / max(radius, |r|_2).
// They serve as prox of gamma F* for every weighted L1 penalty F, independent
// of gamma.

inline void prox_ball_dual(std::span<double> r, double radius) {
    if (!(radius >= 0.0)) throw ContractViolation("prox_ball_dual: radius must be >= 0");
    for (double& v : r) v *= detail::ball_scale(radius, std::abs(v));
}

inline void prox_ball_dual(VectorField& r, double radius) {
    if (!(radius >= 0.0)) throw ContractViolation("prox_ball_dual: radius must be >= 0");
    auto x = r.x(), y = r.y();
    for (std::size_t p = 0; p < x.size(); ++p) {
        const double s = detail::ball_scale(radius, std::hypot(x[p], y[p]));
        x[p] *= s;
        y[p] *= s;
    }
}

/// Frobenius norm of the symmetric tensor (xy counted twice).
inline void prox_ball_dual(SymTensorField& t, double radius) {
    if (!(radius >= 0.0)) throw ContractViolation("prox_ball_dual: radius must be >= 0");
    auto a = t.xx(), b = t.yy(), c = t.xy();
    for (std::size_t p = 0; p < a.size(); ++p) {
        const double n = std::sqrt(a[p] * a[p] + b[p] * b[p] + 2.0 * c[p] * c[p]);
        const double s = detail::ball_scale(radius, n);
        a[p] *= s;
        b[p] *= s;
        c[p] *= s;
    }
}

/// Complex modulus on the directional subbands. The scaling band carries no
/// penalty, so its dual set is {0}.
inline void prox_ball_dual(WaveletCoeffs& w, double radius) {
    if (!(radius >= 0.0)) throw ContractViolation("prox_ball_dual: radius must be >= 0");
    for (int j = 1; j <= w.levels(); ++j)
        for (int o = 0; o < 6; ++o) {
            auto re = w.real(j, o), im = w.imag(j, o);
            for (std::size_t p = 0; p < re.size(); ++p) {
                const double s = detail::ball_scale(radius, std::hypot(re[p], im[p]));
                re[p] *= s;
                im[p] *= s;
            }
        }
    for (int t = 0; t < 4; ++t) {
        auto sc = w.scaling(t);
        std::fill(sc.begin(), sc.end(), 0.0);
    }
}

// Pointwise L1 penalties matching the projections above (unit weight).

inline double l1_norm(const VectorField& r) {
    double s = 0.0;
    auto x = r.x(), y = r.y();
    for (std::size_t p = 0; p < x.size(); ++p) s += std::hypot(x[p], y[p]);
    return s;
}

inline double l1_norm(const SymTensorField& t) {
    double s = 0.0;
    auto a = t.xx(), b = t.yy(), c = t.xy();
    for (std::size_t p = 0; p < a.size(); ++p) s += std::sqrt(a[p] * a[p] + b[p] * b[p] + 2.0 * c[p] * c[p]);
    return s;
}

inline double l1_norm(const WaveletCoeffs& w) {
    double s = 0.0;
    for (int j = 1; j <= w.levels(); ++j)
        for (int o = 0; o < 6; ++o) {
            auto re = w.real(j, o), im = w.imag(j, o);
            for (std::size_t p = 0; p < re.size(); ++p) s += std::hypot(re[p], im[p]);
        }
    return s;
}

}  // namespace pact
