#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <thread>
#include <numbers>
#include <string>
#include <vector>

#include "pact/geometry.hpp"
#include "pact/hash.hpp"
#include "pact/sparse_operator.hpp"

namespace pact {

struct QuadratureOptions {
    // Maximum arc length of one quadrature piece, in pixel pitches.
    double max_piece = 0.25;
};

namespace detail {

// Calls emit(column, weight) for every (pixel, arc-length weight) pair of the
// circular integral of the bilinear interpolant of an image on `grid` over the
// circle |x - center| = radius. Pixels outside the grid count as zero.
//
// The circle is cut at every crossing with a pixel-center line, so each piece
// stays inside one bilinear cell where the integrand is smooth; pieces are
// further split to at most max_piece*h and integrated with 2-point
// Gauss-Legendre.
template <class Emit>
void circle_quadrature(const ImageGrid& grid, Vec2 center, double radius, const QuadratureOptions& opt,
                       Emit&& emit) {
    if (!(radius > 0.0)) return;
    const double h = grid.h();
    const Vec2 o = grid.origin();
    const double nx = static_cast<double>(grid.nx());
    const double ny = static_cast<double>(grid.ny());
    const double two_pi = 2.0 * std::numbers::pi;

    // Support of the interpolant: fractional pixel coordinates in (-1, n).
    const double xmin = o.x - h, xmax = o.x + nx * h;
    const double ymin = o.y - h, ymax = o.y + ny * h;
    if (center.x + radius <= xmin || center.x - radius >= xmax || center.y + radius <= ymin ||
        center.y - radius >= ymax)
        return;
    // Circle strictly encloses the support box: nothing to integrate.
    {
        const double dx = std::max(std::abs(xmin - center.x), std::abs(xmax - center.x));
        const double dy = std::max(std::abs(ymin - center.y), std::abs(ymax - center.y));
        if (dx * dx + dy * dy < radius * radius) return;
    }

    std::vector<double> cuts;
    cuts.reserve(2 * (grid.nx() + grid.ny()) + 8);
    cuts.push_back(0.0);
    auto add_angle = [&](double a) {
        if (a < 0) a += two_pi;
        if (a >= two_pi) a -= two_pi;
        cuts.push_back(a);
    };
    // Vertical lines x = o.x + j*h, j = -1..nx.
    {
        const long jlo = std::max(-1L, static_cast<long>(std::floor((center.x - radius - o.x) / h)));
        const long jhi = std::min(static_cast<long>(grid.nx()), static_cast<long>(std::ceil((center.x + radius - o.x) / h)));
        for (long j = jlo; j <= jhi; ++j) {
            const double c = (o.x + static_cast<double>(j) * h - center.x) / radius;
            if (c <= -1.0 || c >= 1.0) continue;
            const double a = std::acos(c);
            add_angle(a);
            add_angle(-a);
        }
    }
    // Horizontal lines y = o.y + i*h, i = -1..ny.
    {
        const long ilo = std::max(-1L, static_cast<long>(std::floor((center.y - radius - o.y) / h)));
        const long ihi = std::min(static_cast<long>(grid.ny()), static_cast<long>(std::ceil((center.y + radius - o.y) / h)));
        for (long i = ilo; i <= ihi; ++i) {
            const double s = (o.y + static_cast<double>(i) * h - center.y) / radius;
            if (s <= -1.0 || s >= 1.0) continue;
            const double a = std::asin(s);
            add_angle(a);
            add_angle(std::numbers::pi - a);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(two_pi);

    const double gauss = 0.5 / std::sqrt(3.0);
    const double max_piece = opt.max_piece * h;
    const long nxl = static_cast<long>(grid.nx()), nyl = static_cast<long>(grid.ny());

    auto stencil = [&](double theta, double w) {
        const double fx = (center.x + radius * std::cos(theta) - o.x) / h;
        const double fy = (center.y + radius * std::sin(theta) - o.y) / h;
        const double jf = std::floor(fx), if_ = std::floor(fy);
        const double tx = fx - jf, ty = fy - if_;
        const long j0 = static_cast<long>(jf), i0 = static_cast<long>(if_);
        const double wx[2] = {1.0 - tx, tx};
        const double wy[2] = {1.0 - ty, ty};
        for (int di = 0; di < 2; ++di) {
            const long i = i0 + di;
            if (i < 0 || i >= nyl) continue;
            for (int dj = 0; dj < 2; ++dj) {
                const long j = j0 + dj;
                if (j < 0 || j >= nxl) continue;
                const double c = w * wy[di] * wx[dj];
                if (c != 0.0) emit(static_cast<std::uint32_t>(i * nxl + j), c);
            }
        }
    };

    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double a = cuts[p], b = cuts[p + 1];
        if (b <= a) continue;
        const double mid = 0.5 * (a + b);
        const double mx = center.x + radius * std::cos(mid);
        const double my = center.y + radius * std::sin(mid);
        if (mx <= xmin || mx >= xmax || my <= ymin || my >= ymax) continue;
        const double len = radius * (b - a);
        const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(len / max_piece)));
        const double da = (b - a) / static_cast<double>(m);
        const double half_len = 0.5 * radius * da;
        for (std::size_t s = 0; s < m; ++s) {
            const double c = a + (static_cast<double>(s) + 0.5) * da;
            stencil(c - gauss * da, half_len);
            stencil(c + gauss * da, half_len);
        }
    }
}

}  // namespace detail

/// Assembles the discrete circular-integral operator: row (d, k) integrates
/// the bilinear interpolant of u over the circle of radius c0*t_k about
/// detector d. Weights are arc lengths in meters.
inline SparseOperator assemble_K(const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                                 const AcousticConfig& ac, const QuadratureOptions& opt = {}) {
    if (!std::isfinite(ac.c0 * (ts.t0 + static_cast<double>(ts.nt) * ts.dt)))
        throw InvalidConfig("assemble_K: non-finite maximum radius");
    if (grid.pixels() > 0xFFFFFFFFull) throw InvalidGeometry("assemble_K: grid too large for 32-bit columns");

    const std::size_t rows = det.size() * ts.nt;
    const std::size_t cols = grid.pixels();
    std::vector<std::uint64_t> row_ptr(rows + 1, 0);
    std::vector<std::uint32_t> col_idx;
    std::vector<double> weights;

    std::vector<double> acc(cols, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::size_t d = 0; d < det.size(); ++d) {
        for (std::size_t k = 0; k < ts.nt; ++k) {
            const std::size_t r = d * ts.nt + k;
            touched.clear();
            detail::circle_quadrature(grid, det[d], ac.c0 * ts.time(k), opt, [&](std::uint32_t c, double w) {
                if (acc[c] == 0.0) touched.push_back(c);
                acc[c] += w;
            });
            std::sort(touched.begin(), touched.end());
            for (std::uint32_t c : touched) {
                col_idx.push_back(c);
                weights.push_back(acc[c]);
                acc[c] = 0.0;
            }
            row_ptr[r + 1] = weights.size();
        }
    }
    return SparseOperator(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(weights), ts.nt);
}

/// K u without storing K: same quadrature as assemble_K, one row at a time.
inline std::vector<double> forward_apply(const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                                         const AcousticConfig& ac, std::span<const double> u,
                                         const QuadratureOptions& opt = {}) {
    require_size(u.size(), grid.pixels(), "forward_apply image");
    std::vector<double> out(det.size() * ts.nt, 0.0);
    for (std::size_t d = 0; d < det.size(); ++d)
        for (std::size_t k = 0; k < ts.nt; ++k) {
            double s = 0.0;
            detail::circle_quadrature(grid, det[d], ac.c0 * ts.time(k), opt,
                                      [&](std::uint32_t c, double w) { s += w * u[c]; });
            out[d * ts.nt + k] = s;
        }
    return out;
}

/// Column `col` of K (the data of a unit value in one pixel), computed
/// without assembling the whole matrix.
inline std::vector<double> operator_column(const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                                           const AcousticConfig& ac, std::size_t col,
                                           const QuadratureOptions& opt = {}) {
    std::vector<double> out(det.size() * ts.nt, 0.0);
    const std::size_t i = col / grid.nx(), j = col % grid.nx();
    const Vec2 p = grid.world_of(i, j);
    const double reach = 1.5 * grid.h();
    for (std::size_t d = 0; d < det.size(); ++d) {
        const double dist = distance(det[d], p);
        for (std::size_t k = 0; k < ts.nt; ++k) {
            const double R = ac.c0 * ts.time(k);
            if (std::abs(R - dist) > reach) continue;
            double s = 0.0;
            detail::circle_quadrature(grid, det[d], R, opt, [&](std::uint32_t c, double w) {
                if (c == col) s += w;
            });
            out[d * ts.nt + k] = s;
        }
    }
    return out;
}

/// Stable key of everything the assembled matrix depends on.
inline std::uint64_t operator_key(const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                                  const AcousticConfig& ac, const QuadratureOptions& opt = {}) {
    Fnv1a hs;
    hs.add(std::string_view("pact-K-v1"));
    hs.add(static_cast<std::uint64_t>(grid.nx()));
    hs.add(static_cast<std::uint64_t>(grid.ny()));
    hs.add(grid.h());
    hs.add(grid.origin().x);
    hs.add(grid.origin().y);
    hs.add(static_cast<std::uint64_t>(det.size()));
    for (const Vec2& p : det.positions()) {
        hs.add(p.x);
        hs.add(p.y);
    }
    hs.add(ts.t0);
    hs.add(ts.dt);
    hs.add(static_cast<std::uint64_t>(ts.nt));
    hs.add(ac.c0);
    hs.add(opt.max_piece);
    return hs.value();
}

/// assemble_K with an on-disk cache in `cache_dir` (empty: no caching).
inline SparseOperator assemble_K_cached(const ImageGrid& grid, const DetectorSet& det, const TimeSampling& ts,
                                        const AcousticConfig& ac, const std::string& cache_dir,
                                        const QuadratureOptions& opt = {}) {
    if (cache_dir.empty()) return assemble_K(grid, det, ts, ac, opt);
    namespace fs = std::filesystem;
    fs::create_directories(cache_dir);
    const fs::path file = fs::path(cache_dir) / ("K_" + hex64(operator_key(grid, det, ts, ac, opt)) + ".bin");
    if (fs::exists(file)) {
        SparseOperator K = load_operator(file.string());
        if (K.rows() == det.size() * ts.nt && K.cols() == grid.pixels() && K.ordering_nt() == ts.nt) return K;
    }
    SparseOperator K = assemble_K(grid, det, ts, ac, opt);
    const fs::path tmp =
        file.string() + "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ".tmp";
    save_operator(tmp.string(), K);
    fs::rename(tmp, file);
    return K;
}

}  // namespace pact
