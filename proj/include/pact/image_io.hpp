#pragma once

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "pact/core.hpp"

namespace pact {

// Grayscale PGM (P2 / P5, 8 or 16 bit) and CSV image files. PGM files store
// the top row first; images here have row 0 at the bottom (smallest y), so
// rows are flipped on both read and write.

struct GrayImage {
    Image pixels;  // raw sample values
    unsigned maxval = 255;
};

namespace detail {

inline std::string pnm_token(std::istream& is) {
    std::string tok;
    char c;
    while (is.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(is, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

}  // namespace detail

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open image '" + path + "'");
    const std::string magic = detail::pnm_token(is);
    if (magic != "P2" && magic != "P5") throw IoError("'" + path + "' is not a PGM file (magic " + magic + ")");
    std::size_t w = 0, h = 0;
    unsigned maxval = 0;
    try {
        w = std::stoul(detail::pnm_token(is));
        h = std::stoul(detail::pnm_token(is));
        maxval = static_cast<unsigned>(std::stoul(detail::pnm_token(is)));
    } catch (const std::exception&) {
        throw IoError("'" + path + "': malformed PGM header");
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw IoError("'" + path + "': unsupported PGM header");

    GrayImage g{Image(w, h), maxval};
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            unsigned v = 0;
            if (magic == "P2") {
                const std::string t = detail::pnm_token(is);
                if (t.empty()) throw IoError("'" + path + "': truncated PGM data");
                v = static_cast<unsigned>(std::stoul(t));
            } else if (maxval < 256) {
                const int b = is.get();
                if (b == EOF) throw IoError("'" + path + "': truncated PGM data");
                v = static_cast<unsigned>(b);
            } else {
                const int hi = is.get(), lo = is.get();
                if (lo == EOF) throw IoError("'" + path + "': truncated PGM data");
                v = (static_cast<unsigned>(hi) << 8) | static_cast<unsigned>(lo);
            }
            g.pixels(h - 1 - r, c) = static_cast<double>(std::min(v, maxval));
        }
    return g;
}

/// Binary PGM of `u` mapped linearly from [lo, hi] to [0, maxval] with clipping.
inline void write_pgm(const std::string& path, const Image& u, double lo, double hi, unsigned maxval = 255) {
    if (maxval == 0 || maxval > 65535) throw InvalidConfig("write_pgm: maxval must lie in [1, 65535]");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write image '" + path + "'");
    os << "P5\n" << u.nx() << " " << u.ny() << "\n" << maxval << "\n";
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t r = 0; r < u.ny(); ++r)
        for (std::size_t c = 0; c < u.nx(); ++c) {
            const double s = std::clamp((u(u.ny() - 1 - r, c) - lo) / span, 0.0, 1.0);
            const auto v = static_cast<unsigned>(std::lround(s * maxval));
            if (maxval < 256) {
                os.put(static_cast<char>(v));
            } else {
                os.put(static_cast<char>(v >> 8));
                os.put(static_cast<char>(v & 0xff));
            }
        }
    if (!os) throw IoError("write failed for '" + path + "'");
}

/// One line per image row (row 0 first), values at full precision.
inline void write_image_csv(std::ostream& os, const Image& u) {
    char buf[32];
    for (std::size_t i = 0; i < u.ny(); ++i) {
        for (std::size_t j = 0; j < u.nx(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", u(i, j));
            if (j) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

inline void write_image_csv(const std::string& path, const Image& u) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write '" + path + "'");
    write_image_csv(os, u);
}

inline Image read_image_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open image '" + path + "'");
    std::vector<double> vals;
    std::size_t nx = 0, ny = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("'" + path + "': bad number '" + cell + "'");
            }
            ++n;
        }
        if (ny == 0) nx = n;
        if (n != nx) throw IoError("'" + path + "': ragged rows");
        ++ny;
    }
    if (nx == 0) throw IoError("'" + path + "': empty image");
    return Image(nx, ny, std::move(vals));
}

/// Bilinear resampling onto an nx x ny raster covering the same extent, with
/// pixel centres aligned to the extent (edge values are clamped).
inline Image resample_bilinear(const Image& src, std::size_t nx, std::size_t ny) {
    Image out(nx, ny);
    const double sx = static_cast<double>(src.nx()) / static_cast<double>(nx);
    const double sy = static_cast<double>(src.ny()) / static_cast<double>(ny);
    for (std::size_t i = 0; i < ny; ++i) {
        const double y = std::clamp((i + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.ny() - 1));
        const auto i0 = static_cast<std::size_t>(std::floor(y));
        const std::size_t i1 = std::min(i0 + 1, src.ny() - 1);
        const double wy = y - static_cast<double>(i0);
        for (std::size_t j = 0; j < nx; ++j) {
            const double x = std::clamp((j + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.nx() - 1));
            const auto j0 = static_cast<std::size_t>(std::floor(x));
            const std::size_t j1 = std::min(j0 + 1, src.nx() - 1);
            const double wx = x - static_cast<double>(j0);
            out(i, j) = (1 - wy) * ((1 - wx) * src(i0, j0) + wx * src(i0, j1)) +
                        wy * ((1 - wx) * src(i1, j0) + wx * src(i1, j1));
        }
    }
    return out;
}

}  // namespace pact
