#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pact/core.hpp"
#include "pact/fft.hpp"
#include "pact/forward_operator.hpp"
#include "pact/geometry.hpp"
#include "pact/power_iteration.hpp"
#include "pact/signal_chain.hpp"

namespace pact {

// ---------------------------------------------------------------------------
// Filtered backprojection

namespace detail {

// Band-limited ramp kernel on unit sample spacing, lags -(n-1)..(n-1).
inline std::vector<double> ramp_kernel(std::size_t n) {
    std::vector<double> h(2 * n - 1, 0.0);
    const std::size_t c = n - 1;
    h[c] = 0.25;
    for (std::size_t k = 1; k < n; k += 2) {
        const double v = -1.0 / (std::numbers::pi * std::numbers::pi * double(k) * double(k));
        h[c + k] = v;
        h[c - k] = v;
    }
    return h;
}

// Filtered traces: t * ramp(f / t).
inline std::vector<double> fbp_filter(std::span<const double> f, std::size_t nd, const TimeSampling& ts) {
    const std::size_t nt = ts.nt;
    const auto kernel = ramp_kernel(nt);
    std::vector<double> out(nd * nt, 0.0), g(nt);
    for (std::size_t d = 0; d < nd; ++d) {
        for (std::size_t k = 0; k < nt; ++k) {
            const double t = ts.time(k);
            g[k] = t > 0.0 ? f[d * nt + k] / t : 0.0;
        }
        const auto c = linear_convolution(g, kernel);
        for (std::size_t k = 0; k < nt; ++k) out[d * nt + k] = ts.time(k) * c[k + nt - 1];
    }
    return out;
}

inline Image backproject(std::span<const double> filtered, const ImageGrid& grid, const DetectorSet& det,
                         const TimeSampling& ts, const AcousticConfig& ac) {
    Image u(grid.nx(), grid.ny());
    const double w = 1.0 / static_cast<double>(det.size());
    const double last = static_cast<double>(ts.nt - 1);
    for (std::size_t i = 0; i < grid.ny(); ++i)
        for (std::size_t j = 0; j < grid.nx(); ++j) {
            const Vec2 x = grid.world_of(i, j);
            double s = 0.0;
            for (std::size_t d = 0; d < det.size(); ++d) {
                const double pos = (distance(x, det[d]) / ac.c0 - ts.t0) / ts.dt;
                if (!(pos >= 0.0 && pos <= last)) continue;
                s += sample_linear(filtered.subspan(d * ts.nt, ts.nt), pos);
            }
            u(i, j) = w * s;
        }
    return u;
}

inline Image fbp_raw(std::span<const double> f, const ImageGrid& grid, const DetectorSet& det,
                     const TimeSampling& ts, const AcousticConfig& ac) {
    const auto filtered = fbp_filter(f, det.size(), ts);
    return backproject(filtered, grid, det, ts, ac);
}

}  // namespace detail

/// Unit point source used for calibration: a disc of `radius_px` pixels about
/// the centre pixel. A single pixel is blurred by the bilinear basis and the
/// filter, so normalizing its peak would over-amplify extended structures.
inline Image calibration_source(const ImageGrid& grid, double radius_px = 2.0) {
    Image u(grid.nx(), grid.ny());
    const double ci = static_cast<double>(grid.ny() / 2), cj = static_cast<double>(grid.nx() / 2);
    for (std::size_t i = 0; i < grid.ny(); ++i)
        for (std::size_t j = 0; j < grid.nx(); ++j)
            if (std::hypot(double(i) - ci, double(j) - cj) <= radius_px) u(i, j) = 1.0;
    return u;
}

/// Data of the calibration source, evaluating only rows whose circle passes
/// near it.
inline std::vector<double> calibration_data(const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                                            const AcousticConfig& ac, double radius_px = 2.0) {
    const Image u = calibration_source(grid, radius_px);
    const Vec2 c = grid.world_of(grid.ny() / 2, grid.nx() / 2);
    const double reach = (radius_px + 1.5) * grid.h();
    std::vector<double> out(det.size() * ts.nt, 0.0);
    for (std::size_t d = 0; d < det.size(); ++d) {
        const double dist = distance(det[d], c);
        for (std::size_t k = 0; k < ts.nt; ++k) {
            const double R = ac.c0 * ts.time(k);
            if (std::abs(R - dist) > reach) continue;
            double s = 0.0;
            detail::circle_quadrature(grid, det[d], R, QuadratureOptions{},
                                      [&](std::uint32_t col, double w) { s += w * u.values()[col]; });
            out[d * ts.nt + k] = s;
        }
    }
    return out;
}

/// Gain that maps the raw filtered backprojection of the calibration source
/// to a peak of 1.
inline double fbp_calibration(const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                              const AcousticConfig& ac, double radius_px = 2.0) {
    const auto f = calibration_data(grid, det, ts, ac, radius_px);
    const Image raw = detail::fbp_raw(f, grid, det, ts, ac);
    const double peak = *std::max_element(raw.values().begin(), raw.values().end());
    if (!(peak > 0.0)) throw InvalidGeometry("fbp: centre pixel is not seen by the detectors in the time window");
    return 1.0 / peak;
}

/// Ramp-filtered backprojection of preprocessed data f (circle integrals):
/// each trace is divided by t, ramp filtered in time, multiplied by t and
/// backprojected along |x - x_d| = c0 t with uniform detector weights.
/// `gain` <= 0 computes the point-source calibration.
inline Image fbp(const MeasurementSeries& f, const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                 const AcousticConfig& ac, double gain = 0.0) {
    if (f.unit() != SeriesUnit::preprocessed) throw InvalidInput("fbp: expects a preprocessed-f series");
    require_size(f.detectors(), det.size(), "fbp: detectors");
    require_size(f.sampling().nt, ts.nt, "fbp: time samples");
    if (!(gain > 0.0)) gain = fbp_calibration(grid, det, ts, ac);
    Image u = detail::fbp_raw(f.values(), grid, det, ts, ac);
    for (double& v : u.values()) v *= gain;
    return u;
}

// ---------------------------------------------------------------------------
// Tikhonov-regularized least squares

struct LstResult {
    Image u;
    int iterations = 0;
    double relative_residual = 0.0;  // |b - A u| / |b| of the normal equations
    bool converged = false;
};

/// Solves (K^T K + alpha I) u = K^T f by conjugate gradients from u = 0.
/// Non-convergence is reported through `converged`, with the last iterate.
template <LinearMap Op>
LstResult lst(const Op& K, std::span<const double> f, double alpha, std::size_t nx, std::size_t ny,
              double cg_tol = 1e-10, int cg_maxiter = 2000) {
    if (!(alpha > 0.0)) throw InvalidConfig("lst: alpha must be > 0");
    if (!(cg_tol > 0.0) || cg_maxiter < 1) throw InvalidConfig("lst: cg_tol must be > 0 and cg_maxiter >= 1");
    require_size(K.cols(), nx * ny, "lst: operator columns");
    require_size(f.size(), K.rows(), "lst: data length");
    const std::size_t n = K.cols();
    std::vector<double> b(n), u(n, 0.0), r(n), p(n), ap(n), kp(K.rows());
    K.apply_adjoint(f, b);
    auto normal = [&](std::span<const double> x, std::span<double> out) {
        K.apply(x, kp);
        K.apply_adjoint(kp, out);
        vec::axpy(alpha, x, out);
    };

    LstResult res;
    const double bn = vec::norm2(b);
    if (bn == 0.0) {
        res.u = Image(nx, ny);
        res.converged = true;
        return res;
    }
    r = b;
    p = r;
    double rr = vec::dot(r, r);
    while (res.iterations < cg_maxiter && std::sqrt(rr) > cg_tol * bn) {
        normal(p, ap);
        const double a = rr / vec::dot(p, ap);
        vec::axpy(a, p, u);
        vec::axpy(-a, ap, r);
        const double rr_new = vec::dot(r, r);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + (rr_new / rr) * p[i];
        rr = rr_new;
        ++res.iterations;
    }
    // true residual rather than the recursively updated one
    normal(u, ap);
    for (std::size_t i = 0; i < n; ++i) ap[i] = b[i] - ap[i];
    res.relative_residual = vec::norm2(ap) / bn;
    res.converged = std::sqrt(rr) <= cg_tol * bn;
    res.u = Image(nx, ny, std::move(u));
    return res;
}

}  // namespace pact
