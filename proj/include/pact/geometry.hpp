#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pact/core.hpp"

namespace pact {

/// Pixel grid in world coordinates (meters). Pixel (i, j) has its center at
/// origin + (j*h, i*h).
class ImageGrid {
public:
    ImageGrid(std::size_t nx, std::size_t ny, double h, Vec2 origin)
        : nx_(nx), ny_(ny), h_(h), origin_(origin) {
        if (nx == 0 || ny == 0) throw InvalidGeometry("ImageGrid: nx and ny must be >= 1");
        if (!(h > 0.0) || !std::isfinite(h)) throw InvalidGeometry("ImageGrid: pixel pitch must be > 0");
    }

    /// Grid of nx by ny pixels of pitch h centered on `center`.
    static ImageGrid centered(std::size_t nx, std::size_t ny, double h, Vec2 center = {}) {
        const double ox = center.x - 0.5 * static_cast<double>(nx - 1) * h;
        const double oy = center.y - 0.5 * static_cast<double>(ny - 1) * h;
        return ImageGrid(nx, ny, h, {ox, oy});
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t pixels() const { return nx_ * ny_; }
    double h() const { return h_; }
    Vec2 origin() const { return origin_; }
    Vec2 center() const {
        return origin_ + Vec2{0.5 * static_cast<double>(nx_ - 1) * h_,
                              0.5 * static_cast<double>(ny_ - 1) * h_};
    }

    Vec2 world_of(std::size_t i, std::size_t j) const {
        return {origin_.x + static_cast<double>(j) * h_, origin_.y + static_cast<double>(i) * h_};
    }

    /// Index (i, j) of the pixel whose center is nearest to p; nullopt outside.
    std::optional<std::pair<std::size_t, std::size_t>> index_of(Vec2 p) const {
        const double fj = std::round((p.x - origin_.x) / h_);
        const double fi = std::round((p.y - origin_.y) / h_);
        if (fi < 0 || fj < 0 || fi >= static_cast<double>(ny_) || fj >= static_cast<double>(nx_))
            return std::nullopt;
        return std::pair{static_cast<std::size_t>(fi), static_cast<std::size_t>(fj)};
    }

    /// Same extent, `factor` times more pixels per axis.
    ImageGrid refined(std::size_t factor) const {
        return centered(nx_ * factor, ny_ * factor, h_ / static_cast<double>(factor), center());
    }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t nx_;
    std::size_t ny_;
    double h_;
    Vec2 origin_;
};

struct TimeSampling {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t nt = 1;

    TimeSampling() = default;
    TimeSampling(double t0_, double dt_, std::size_t nt_) : t0(t0_), dt(dt_), nt(nt_) {
        if (!(t0 >= 0.0) || !std::isfinite(t0)) throw InvalidConfig("TimeSampling: t0 must be >= 0");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidConfig("TimeSampling: dt must be > 0");
        if (nt == 0) throw InvalidConfig("TimeSampling: nt must be >= 1");
    }

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double t_end() const { return time(nt - 1); }
    friend bool operator==(const TimeSampling&, const TimeSampling&) = default;
};

struct AcousticConfig {
    double c0 = 1500.0;

    AcousticConfig() = default;
    explicit AcousticConfig(double c) : c0(c) {
        if (!(c > 0.0) || !std::isfinite(c)) throw InvalidConfig("AcousticConfig: c0 must be > 0");
    }
    friend bool operator==(const AcousticConfig&, const AcousticConfig&) = default;
};

/// How a detector set was built; kept alongside the positions for sidecars.
struct DetectorProvenance {
    Vec2 center;
    double radius = 0.0;
    double span_deg = 0.0;
    double start_deg = 0.0;
    std::size_t count = 0;
    std::size_t rotations = 1;
    double rotation_step_deg = 0.0;
    std::size_t subsample = 0;  // 0: all positions kept
};

class DetectorSet {
public:
    DetectorSet() = default;
    DetectorSet(std::vector<Vec2> positions, DetectorProvenance prov)
        : positions_(std::move(positions)), prov_(prov) {
        check_distinct(positions_, 1e-12);
    }

    std::size_t size() const { return positions_.size(); }
    const std::vector<Vec2>& positions() const { return positions_; }
    const Vec2& operator[](std::size_t d) const { return positions_[d]; }
    const DetectorProvenance& provenance() const { return prov_; }

    static void check_distinct(const std::vector<Vec2>& pts, double tol) {
        // Sort a copy by x so the check stays n log n for the usual sizes.
        std::vector<Vec2> s(pts);
        std::sort(s.begin(), s.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
        for (std::size_t a = 0; a < s.size(); ++a) {
            for (std::size_t b = a + 1; b < s.size() && s[b].x - s[a].x <= tol; ++b) {
                if (distance(s[a], s[b]) <= tol)
                    throw InvalidGeometry("DetectorSet: duplicate detector positions");
            }
        }
    }

private:
    std::vector<Vec2> positions_;
    DetectorProvenance prov_;
};

namespace detail {
inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
}  // namespace detail

/// `count` detectors on an arc of `radius` about `center`, starting at
/// `start_deg` (counterclockwise from +x) and spanning `span_deg`. A full
/// circle places them at start + k*360/count; a partial arc includes both
/// endpoints, and a single detector sits at the arc midpoint.
inline DetectorSet build_arc_detectors(Vec2 center, double radius, double span_deg, std::size_t count,
                                       double start_deg = 0.0) {
    if (count < 1) throw InvalidGeometry("build_arc_detectors: count must be >= 1");
    if (!(radius > 0.0)) throw InvalidGeometry("build_arc_detectors: radius must be > 0");
    if (!(span_deg > 0.0) || span_deg > 360.0)
        throw InvalidGeometry("build_arc_detectors: span must lie in (0, 360]");

    std::vector<Vec2> pos;
    pos.reserve(count);
    const bool full = span_deg == 360.0;
    for (std::size_t k = 0; k < count; ++k) {
        double a;
        if (count == 1)
            a = start_deg + 0.5 * span_deg;
        else if (full)
            a = start_deg + span_deg * static_cast<double>(k) / static_cast<double>(count);
        else
            a = start_deg + span_deg * static_cast<double>(k) / static_cast<double>(count - 1);
        const double r = detail::deg2rad(a);
        pos.push_back({center.x + radius * std::cos(r), center.y + radius * std::sin(r)});
    }
    DetectorProvenance prov{center, radius, span_deg, start_deg, count, 1, 0.0, 0};
    return DetectorSet(std::move(pos), prov);
}

/// Union of `base` rotated by k*step_deg about its arc center, k = 0..n_rot-1,
/// ordered rotation-major.
inline DetectorSet apply_rotation_schedule(const DetectorSet& base, std::size_t n_rot, double step_deg) {
    if (n_rot < 1) throw InvalidGeometry("apply_rotation_schedule: n_rot must be >= 1");
    const Vec2 c = base.provenance().center;
    std::vector<Vec2> pos;
    pos.reserve(base.size() * n_rot);
    for (std::size_t k = 0; k < n_rot; ++k) {
        const double r = detail::deg2rad(step_deg * static_cast<double>(k));
        const double cs = std::cos(r), sn = std::sin(r);
        for (const Vec2& p : base.positions()) {
            const Vec2 d = p - c;
            pos.push_back({c.x + cs * d.x - sn * d.y, c.y + sn * d.x + cs * d.y});
        }
    }
    DetectorProvenance prov = base.provenance();
    prov.rotations = n_rot;
    prov.rotation_step_deg = step_deg;
    return DetectorSet(std::move(pos), prov);  // throws on coincident positions
}

/// Keeps `n` of the detectors, uniformly spread in polar angle about the arc
/// center. Used for the compressive-sampling sweeps.
inline DetectorSet subsample_uniform(const DetectorSet& full, std::size_t n) {
    if (n < 1 || n > full.size())
        throw InvalidGeometry("subsample_uniform: requested " + std::to_string(n) + " of " +
                              std::to_string(full.size()) + " detectors");
    const Vec2 c = full.provenance().center;
    std::vector<std::pair<double, Vec2>> by_angle;
    by_angle.reserve(full.size());
    for (const Vec2& p : full.positions()) {
        double a = std::atan2(p.y - c.y, p.x - c.x);
        if (a < 0) a += 2.0 * std::numbers::pi;
        by_angle.emplace_back(a, p);
    }
    std::stable_sort(by_angle.begin(), by_angle.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Vec2> pos;
    pos.reserve(n);
    const std::size_t m = full.size();
    for (std::size_t k = 0; k < n; ++k) pos.push_back(by_angle[(k * m) / n].second);
    DetectorProvenance prov = full.provenance();
    prov.subsample = n;
    return DetectorSet(std::move(pos), prov);
}

}  // namespace pact
