#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <cstdint>
#include <string>
#include <vector>

#include "pact/core.hpp"
#include "pact/geometry.hpp"
#include "pact/image_io.hpp"
#include "pact/rng.hpp"

namespace pact {

enum class PhantomKind { piecewise_constant, smooth_disc, vascular };

inline const char* to_string(PhantomKind k) {
    switch (k) {
        case PhantomKind::piecewise_constant: return "piecewise";
        case PhantomKind::smooth_disc: return "smooth_disc";
        default: return "vascular";
    }
}

inline PhantomKind phantom_kind_from_string(const std::string& s) {
    if (s == "piecewise") return PhantomKind::piecewise_constant;
    if (s == "smooth_disc") return PhantomKind::smooth_disc;
    if (s == "vascular") return PhantomKind::vascular;
    throw InvalidConfig("unknown phantom kind '" + s + "'");
}

struct Phantom {
    Image image;
    PhantomKind kind = PhantomKind::piecewise_constant;
    std::optional<Image> segmentation;  // 1 inside the structure, 0 elsewhere
};

// ---------------------------------------------------------------------------
// Piecewise constant

/// Shapes live in normalized coordinates: (0,0) is the lower-left corner of
/// the grid extent, (1,1) the upper right. Later shapes paint over earlier ones.
struct Shape {
    enum class Type { disc, rect } type = Type::disc;
    double cx = 0.5, cy = 0.5;
    double a = 0.1;  // radius (disc) or half width (rect)
    double b = 0.1;  // half height (rect)
    double value = 1.0;

    bool contains(double x, double y) const {
        if (type == Type::disc) return (x - cx) * (x - cx) + (y - cy) * (y - cy) < a * a;
        return std::abs(x - cx) < a && std::abs(y - cy) < b;
    }
    bool inside_unit_square() const {
        const double hx = a, hy = type == Type::disc ? a : b;
        return cx - hx >= 0.0 && cx + hx <= 1.0 && cy - hy >= 0.0 && cy + hy <= 1.0;
    }
};

/// Default layout: two discs, squares, two elongated bars and a low-contrast
/// square inside a square, with seeded sub-percent jitter of the centres.
inline std::vector<Shape> piecewise_layout(std::uint64_t seed) {
    using T = Shape::Type;
    std::vector<Shape> s = {
        {T::disc, 0.30, 0.30, 0.12, 0.12, 1.0},  {T::rect, 0.72, 0.72, 0.15, 0.15, 0.6},
        {T::rect, 0.72, 0.72, 0.06, 0.06, 0.7},  {T::rect, 0.32, 0.76, 0.18, 0.03, 0.8},
        {T::disc, 0.74, 0.26, 0.07, 0.07, 0.4},  {T::rect, 0.53, 0.35, 0.02, 0.15, 0.9},
        {T::rect, 0.15, 0.56, 0.045, 0.045, 0.5},
    };
    Rng rng(seed);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double dx = rng.uniform(-0.012, 0.012), dy = rng.uniform(-0.012, 0.012);
        const std::size_t anchor = k == 2 ? 1 : k;  // the inset follows its square
        s[k].cx = s[k].cx + (anchor == k ? dx : s[1].cx - 0.72);
        s[k].cy = s[k].cy + (anchor == k ? dy : s[1].cy - 0.72);
    }
    return s;
}

inline Image rasterize(const ImageGrid& grid, const std::vector<Shape>& shapes) {
    Image u(grid.nx(), grid.ny());
    for (const Shape& s : shapes)
        if (!s.inside_unit_square()) throw InvalidConfig("phantom: shape exceeds the grid");
    for (std::size_t i = 0; i < grid.ny(); ++i)
        for (std::size_t j = 0; j < grid.nx(); ++j) {
            const double x = (j + 0.5) / grid.nx(), y = (i + 0.5) / grid.ny();
            for (const Shape& s : shapes)
                if (s.contains(x, y)) u(i, j) = s.value;
        }
    return u;
}

inline Phantom phantom_piecewise(const ImageGrid& grid, std::uint64_t seed = 1) {
    if (grid.nx() < 64 || grid.ny() < 64) throw InvalidConfig("phantom_piecewise: grid must be at least 64x64");
    Phantom p;
    p.kind = PhantomKind::piecewise_constant;
    p.image = rasterize(grid, piecewise_layout(seed));
    return p;
}

// ---------------------------------------------------------------------------
// Smooth disc

/// Disc of world radius R = r_frac * min(nx, ny) * h about the grid centre with
/// value exp(-decay (R - r)): 1 at the rim, exp(-decay R) at the centre.
inline Phantom phantom_smooth_disc(const ImageGrid& grid, double r_frac = 0.35, double decay = 300.0) {
    if (!(r_frac > 0.0 && r_frac <= 0.5)) throw InvalidConfig("phantom_smooth_disc: radius fraction must lie in (0, 0.5]");
    if (!(decay >= 0.0)) throw InvalidConfig("phantom_smooth_disc: decay must be >= 0");
    const double R = r_frac * static_cast<double>(std::min(grid.nx(), grid.ny())) * grid.h();
    const Vec2 c = grid.center();
    Phantom p;
    p.kind = PhantomKind::smooth_disc;
    p.image = Image(grid.nx(), grid.ny());
    for (std::size_t i = 0; i < grid.ny(); ++i)
        for (std::size_t j = 0; j < grid.nx(); ++j) {
            const double r = distance(grid.world_of(i, j), c);
            if (r <= R) p.image(i, j) = std::exp(-decay * (R - r));
        }
    return p;
}

// ---------------------------------------------------------------------------
// Vascular

/// Normalizes a grayscale image by its maximum, resamples it to the grid and
/// sets everything below `threshold` to exactly 0.
inline Phantom phantom_vascular(const Image& raw, const ImageGrid& grid, double threshold = 0.05) {
    Image u = (raw.nx() == grid.nx() && raw.ny() == grid.ny()) ? raw : resample_bilinear(raw, grid.nx(), grid.ny());
    const double mx = u.size() ? *std::max_element(u.values().begin(), u.values().end()) : 0.0;
    Phantom p;
    p.kind = PhantomKind::vascular;
    Image seg(grid.nx(), grid.ny());
    for (std::size_t k = 0; k < u.size(); ++k) {
        double v = mx > 0.0 ? std::clamp(u.values()[k] / mx, 0.0, 1.0) : 0.0;
        if (v < threshold) v = 0.0;
        u.values()[k] = v;
        seg.values()[k] = v > 0.0 ? 1.0 : 0.0;
    }
    p.image = std::move(u);
    p.segmentation = std::move(seg);
    return p;
}

inline Phantom phantom_vascular(const std::string& path, const ImageGrid& grid, double threshold = 0.05) {
    return phantom_vascular(read_pgm(path).pixels, grid, threshold);
}

/// Synthetic retina-like vessel tree in [0, 1]: branches grow from a disc near
/// the left edge as jittered random walks and bifurcate with thinning widths.
/// Vessels have a chord-length cross profile.
inline Image synth_vessel_tree(std::size_t n, std::uint64_t seed = 1) {
    struct Seg {
        double x0, y0, x1, y1, w, amp;
    };
    struct Tip {
        double x, y, ang, w, amp;
        int depth;
    };
    Rng rng(seed);
    std::vector<Seg> segs;
    std::vector<Tip> tips;
    const double ox = 0.18, oy = 0.5;
    for (int k = 0; k < 4; ++k) {
        const double ang = (-0.75 + 0.5 * k) * 0.5 * std::numbers::pi + rng.uniform(-0.15, 0.15);
        tips.push_back({ox, oy, ang, 0.014, rng.uniform(0.75, 1.0), 0});
    }
    const double step = 0.02;
    while (!tips.empty()) {
        Tip t = tips.back();
        tips.pop_back();
        const int len = 8 + static_cast<int>(rng.uniform(0.0, 8.0));
        for (int s = 0; s < len; ++s) {
            t.ang += rng.uniform(-0.25, 0.25);
            const double nx = t.x + step * std::cos(t.ang), ny = t.y + step * std::sin(t.ang);
            if (nx < 0.03 || nx > 0.97 || ny < 0.03 || ny > 0.97) {
                t.depth = 99;
                break;
            }
            segs.push_back({t.x, t.y, nx, ny, t.w, t.amp});
            t.x = nx;
            t.y = ny;
        }
        if (t.depth < 4 && t.w > 0.004) {
            const double spread = rng.uniform(0.35, 0.7);
            for (int b = -1; b <= 1; b += 2)
                tips.push_back({t.x, t.y, t.ang + b * spread, t.w * 0.75, t.amp * rng.uniform(0.85, 1.0), t.depth + 1});
        }
    }

    Image u(n, n);
    const double px = 1.0 / static_cast<double>(n);
    for (const Seg& s : segs) {
        const double r = s.w;
        const auto lo = [&](double a, double b) {
            return static_cast<std::size_t>(std::max(0.0, std::floor((std::min(a, b) - r) / px)));
        };
        const auto hi = [&](double a, double b) {
            return std::min(n - 1, static_cast<std::size_t>(std::ceil((std::max(a, b) + r) / px)));
        };
        const double dx = s.x1 - s.x0, dy = s.y1 - s.y0, l2 = dx * dx + dy * dy;
        for (std::size_t i = lo(s.y0, s.y1); i <= hi(s.y0, s.y1); ++i)
            for (std::size_t j = lo(s.x0, s.x1); j <= hi(s.x0, s.x1); ++j) {
                const double x = (j + 0.5) * px, y = (i + 0.5) * px;
                const double t = std::clamp(((x - s.x0) * dx + (y - s.y0) * dy) / l2, 0.0, 1.0);
                const double ex = x - s.x0 - t * dx, ey = y - s.y0 - t * dy;
                const double q = 1.0 - (ex * ex + ey * ey) / (r * r);
                if (q > 0.0) u(i, j) = std::max(u(i, j), s.amp * std::sqrt(q));
            }
    }
    return u;
}

// ---------------------------------------------------------------------------

/// Mean over factor x factor blocks (grid sizes must be divisible).
inline Image downsample_box(const Image& u, std::size_t factor) {
    if (factor == 0 || u.nx() % factor || u.ny() % factor)
        throw InvalidConfig("downsample_box: image size must be divisible by the factor");
    Image out(u.nx() / factor, u.ny() / factor);
    const double w = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t i = 0; i < u.ny(); ++i)
        for (std::size_t j = 0; j < u.nx(); ++j) out(i / factor, j / factor) += w * u(i, j);
    return out;
}

}  // namespace pact
