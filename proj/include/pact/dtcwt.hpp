#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pact/core.hpp"

namespace pact {

/// Coefficients of the 2D dual-tree complex wavelet transform.
///
/// Layout of the flat vector (4x the pixel count):
///   for level j = 1..J, plane size (ny/2^j) x (nx/2^j):
///     for subband d = 0..2: [A.re, A.im, B.re, B.im]
///       (A and B are the two complex orientations built from subband d)
///   then the four real scaling planes of level J, one per tree.
class WaveletCoeffs {
public:
    WaveletCoeffs() = default;
    WaveletCoeffs(std::size_t nx, std::size_t ny, int levels)
        : nx_(nx), ny_(ny), J_(levels), data_(4 * nx * ny, 0.0) {}

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    int levels() const { return J_; }

    std::size_t plane_size(int level) const { return (nx_ >> level) * (ny_ >> level); }
    std::size_t level_offset(int level) const {
        std::size_t off = 0;
        for (int j = 1; j < level; ++j) off += 12 * plane_size(j);
        return off;
    }
    std::size_t scaling_offset() const { return level_offset(J_ + 1); }

    /// Plane p (0..11) of level j.
    std::span<double> plane(int level, int p) {
        return {data_.data() + level_offset(level) + static_cast<std::size_t>(p) * plane_size(level),
                plane_size(level)};
    }
    std::span<const double> plane(int level, int p) const {
        return {data_.data() + level_offset(level) + static_cast<std::size_t>(p) * plane_size(level),
                plane_size(level)};
    }
    /// Real and imaginary planes of complex orientation o (0..5) at level j.
    std::span<double> real(int level, int o) { return plane(level, 2 * o); }
    std::span<double> imag(int level, int o) { return plane(level, 2 * o + 1); }
    std::span<const double> real(int level, int o) const { return plane(level, 2 * o); }
    std::span<const double> imag(int level, int o) const { return plane(level, 2 * o + 1); }

    std::span<double> scaling(int tree) {
        return {data_.data() + scaling_offset() + static_cast<std::size_t>(tree) * plane_size(J_), plane_size(J_)};
    }
    std::span<const double> scaling(int tree) const {
        return {data_.data() + scaling_offset() + static_cast<std::size_t>(tree) * plane_size(J_), plane_size(J_)};
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    int J_ = 0;
    std::vector<double> data_;
};

/// Approximate orientation in degrees of complex subband o.
inline constexpr std::array<double, 6> kDtcwtOrientationDeg = {75.0, -75.0, 15.0, -15.0, 45.0, -45.0};

namespace detail {

using Filter = std::vector<double>;

struct FilterPair {
    Filter lo;
    Filter hi;
};

// Highpass partner of an orthonormal lowpass: g[n] = (-1)^n h[L-1-n].
inline Filter alternating_flip(const Filter& h) {
    const std::size_t L = h.size();
    Filter g(L);
    for (std::size_t n = 0; n < L; ++n) g[n] = ((n % 2) ? -1.0 : 1.0) * h[L - 1 - n];
    return g;
}

// Solves the small dense system A x = b in place (partial pivoting).
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r * n + c]) > std::abs(A[piv * n + c])) piv = r;
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(A[c * n + k], A[piv * n + k]);
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r * n + c] / A[c * n + c];
            for (std::size_t k = c; k < n; ++k) A[r * n + k] -= f * A[c * n + k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= A[c * n + k] * x[k];
        x[c] = s / A[c * n + c];
    }
    return x;
}

// The published tables carry 8 to 14 significant digits. A few minimum-norm
// Gauss-Newton steps move them onto the orthonormality constraints
//   sum_n h[n] h[n+2k] = delta_k,  sum_n (-1)^n h[n] = 0
// to machine precision, which perfect reconstruction at 1e-10 needs.
inline Filter polish_orthonormal(Filter h) {
    const std::size_t L = h.size();
    const std::size_t K = L / 2;
    const std::size_t m = K + 1;
    for (int it = 0; it < 30; ++it) {
        std::vector<double> c(m, 0.0), J(m * L, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t n = 0; n + 2 * k < L; ++n) c[k] += h[n] * h[n + 2 * k];
            if (k == 0) c[k] -= 1.0;
            for (std::size_t n = 0; n < L; ++n) {
                double d = 0.0;
                if (n + 2 * k < L) d += h[n + 2 * k];
                if (n >= 2 * k) d += h[n - 2 * k];
                J[k * L + n] = d;
            }
        }
        for (std::size_t n = 0; n < L; ++n) {
            const double s = (n % 2) ? -1.0 : 1.0;
            c[K] += s * h[n];
            J[K * L + n] = s;
        }
        double cn = 0.0;
        for (double v : c) cn = std::max(cn, std::abs(v));
        if (cn < 1e-16) break;
        std::vector<double> JJt(m * m, 0.0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                for (std::size_t n = 0; n < L; ++n) JJt[a * m + b] += J[a * L + n] * J[b * L + n];
        const std::vector<double> lam = solve_dense(JJt, c);
        for (std::size_t n = 0; n < L; ++n) {
            double d = 0.0;
            for (std::size_t a = 0; a < m; ++a) d += J[a * L + n] * lam[a];
            h[n] -= d;
        }
    }
    return h;
}

// Orthonormal filter banks of both trees. Tables: first stage from the
// Farras/Abdelnour near-symmetric orthogonal pair, later stages from the
// 10-tap Kingsbury quarter-shift design, as distributed with the Selesnick
// dual-tree wavelet software.
struct DtcwtFilters {
    std::array<FilterPair, 2> first;   // tree a, tree b
    std::array<FilterPair, 2> qshift;  // tree a, tree b
};

inline const DtcwtFilters& dtcwt_filters() {
    static const DtcwtFilters f = [] {
        const Filter fs_a = polish_orthonormal({0.0, -0.08838834764832, 0.08838834764832, 0.69587998903400,
                                                0.69587998903400, 0.08838834764832, -0.08838834764832,
                                                0.01122679215254, 0.01122679215254, 0.0});
        // Tree b: time reverse of tree a, delayed by one sample.
        Filter fs_b(fs_a.size(), 0.0);
        for (std::size_t n = 0; n + 1 < fs_a.size(); ++n) fs_b[n] = fs_a[fs_a.size() - 2 - n];
        const Filter qs_a = polish_orthonormal({0.03516384000000, 0.0, -0.08832942000000, 0.23389032000000,
                                                0.76027237000000, 0.58751830000000, 0.0, -0.11430184000000, 0.0,
                                                0.0});
        const Filter qs_b(qs_a.rbegin(), qs_a.rend());
        DtcwtFilters out;
        out.first = {FilterPair{fs_a, alternating_flip(fs_a)}, FilterPair{fs_b, alternating_flip(fs_b)}};
        out.qshift = {FilterPair{qs_a, alternating_flip(qs_a)}, FilterPair{qs_b, alternating_flip(qs_b)}};
        return out;
    }();
    return f;
}

// Strided 1D periodic analysis of n samples (n even):
//   lo[k] = sum_m h[m] x[(2k - m + L/2) mod n]
inline void analysis_1d(const double* x, std::size_t n, std::size_t stride, const FilterPair& f, double* lo,
                        double* hi, std::size_t ostride) {
    const std::size_t L = f.lo.size();
    const long nn = static_cast<long>(n);
    const long shift = static_cast<long>(L / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double a = 0.0, b = 0.0;
        for (std::size_t m = 0; m < L; ++m) {
            long idx = (2 * static_cast<long>(k) - static_cast<long>(m) + shift) % nn;
            if (idx < 0) idx += nn;
            const double v = x[static_cast<std::size_t>(idx) * stride];
            a += f.lo[m] * v;
            b += f.hi[m] * v;
        }
        lo[k * ostride] = a;
        hi[k * ostride] = b;
    }
}

// Exact transpose of analysis_1d; accumulates into x.
inline void synthesis_1d(const double* lo, const double* hi, std::size_t istride, std::size_t n, const FilterPair& f,
                         double* x, std::size_t stride) {
    const std::size_t L = f.lo.size();
    const long nn = static_cast<long>(n);
    const long shift = static_cast<long>(L / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double a = lo[k * istride], b = hi[k * istride];
        for (std::size_t m = 0; m < L; ++m) {
            long idx = (2 * static_cast<long>(k) - static_cast<long>(m) + shift) % nn;
            if (idx < 0) idx += nn;
            x[static_cast<std::size_t>(idx) * stride] += f.lo[m] * a + f.hi[m] * b;
        }
    }
}

// One separable 2D analysis step on a (rows x cols) image: filter along the
// row index with f_rows, then along the column index with f_cols.
// Outputs (rows/2 x cols/2): lo = LL, hi[0] = L(rows)H(cols), hi[1] = HL, hi[2] = HH.
inline void analysis_2d(const std::vector<double>& x, std::size_t rows, std::size_t cols, const FilterPair& f_rows,
                        const FilterPair& f_cols, std::vector<double>& lo, std::array<std::vector<double>, 3>& hi) {
    const std::size_t r2 = rows / 2, c2 = cols / 2;
    std::vector<double> L(r2 * cols), H(r2 * cols);
    for (std::size_t c = 0; c < cols; ++c) analysis_1d(x.data() + c, rows, cols, f_rows, L.data() + c, H.data() + c, cols);
    lo.assign(r2 * c2, 0.0);
    for (auto& v : hi) v.assign(r2 * c2, 0.0);
    for (std::size_t r = 0; r < r2; ++r) {
        analysis_1d(L.data() + r * cols, cols, 1, f_cols, lo.data() + r * c2, hi[0].data() + r * c2, 1);
        analysis_1d(H.data() + r * cols, cols, 1, f_cols, hi[1].data() + r * c2, hi[2].data() + r * c2, 1);
    }
}

inline void synthesis_2d(const std::vector<double>& lo, const std::array<std::vector<double>, 3>& hi, std::size_t rows,
                         std::size_t cols, const FilterPair& f_rows, const FilterPair& f_cols, std::vector<double>& x) {
    const std::size_t r2 = rows / 2, c2 = cols / 2;
    std::vector<double> L(r2 * cols, 0.0), H(r2 * cols, 0.0);
    for (std::size_t r = 0; r < r2; ++r) {
        synthesis_1d(lo.data() + r * c2, hi[0].data() + r * c2, 1, cols, f_cols, L.data() + r * cols, 1);
        synthesis_1d(hi[1].data() + r * c2, hi[2].data() + r * c2, 1, cols, f_cols, H.data() + r * cols, 1);
    }
    x.assign(rows * cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c)
        synthesis_1d(L.data() + c, H.data() + c, cols, rows, f_rows, x.data() + c, cols);
}

inline void check_dtcwt_shape(std::size_t nx, std::size_t ny, int J) {
    if (J < 1) throw InvalidConfig("dtcwt: levels must be >= 1");
    if (J > 30) throw InvalidConfig("dtcwt: too many levels");
    const std::size_t m = std::size_t{1} << J;
    if (nx % m != 0 || ny % m != 0)
        throw InvalidConfig("dtcwt: image size " + std::to_string(nx) + "x" + std::to_string(ny) +
                            " is not divisible by 2^" + std::to_string(J));
}

}  // namespace detail

/// Forward 2D dual-tree complex wavelet transform with periodic extension.
/// Each tree is an orthonormal transform, the tree combination is
/// orthogonal, and the input is scaled by 1/2, so the transform is a Parseval
/// frame: ||W u|| = ||u|| and W^T W = I.
inline WaveletCoeffs dtcwt_forward(const Image& u, int J) {
    detail::check_dtcwt_shape(u.nx(), u.ny(), J);
    const auto& F = detail::dtcwt_filters();
    const std::size_t nx = u.nx(), ny = u.ny();
    WaveletCoeffs w(nx, ny, J);

    // tree[m][n][level-1][d]
    std::vector<double> x0(u.values().begin(), u.values().end());
    for (double& v : x0) v *= 0.5;
    std::array<std::array<std::vector<std::array<std::vector<double>, 3>>, 2>, 2> bands;
    std::array<std::array<std::vector<double>, 2>, 2> low;
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 2; ++n) {
            bands[m][n].resize(static_cast<std::size_t>(J));
            std::vector<double> lo = x0, next;
            std::size_t rows = ny, cols = nx;
            for (int j = 1; j <= J; ++j) {
                const auto& fr = (j == 1) ? F.first[m] : F.qshift[m];
                const auto& fc = (j == 1) ? F.first[n] : F.qshift[n];
                detail::analysis_2d(lo, rows, cols, fr, fc, next, bands[m][n][j - 1]);
                lo.swap(next);
                rows /= 2;
                cols /= 2;
            }
            low[m][n] = std::move(lo);
        }
    }

    const double s = 1.0 / std::sqrt(2.0);
    for (int j = 1; j <= J; ++j) {
        const std::size_t ps = w.plane_size(j);
        for (int d = 0; d < 3; ++d) {
            const auto& t11 = bands[0][0][j - 1][d];
            const auto& t22 = bands[1][1][j - 1][d];
            const auto& t12 = bands[0][1][j - 1][d];
            const auto& t21 = bands[1][0][j - 1][d];
            auto a_re = w.real(j, 2 * d), a_im = w.imag(j, 2 * d);
            auto b_re = w.real(j, 2 * d + 1), b_im = w.imag(j, 2 * d + 1);
            for (std::size_t p = 0; p < ps; ++p) {
                a_re[p] = s * (t11[p] - t22[p]);
                a_im[p] = s * (t12[p] + t21[p]);
                b_re[p] = s * (t11[p] + t22[p]);
                b_im[p] = s * (t12[p] - t21[p]);
            }
        }
    }
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            auto dst = w.scaling(2 * m + n);
            std::copy(low[m][n].begin(), low[m][n].end(), dst.begin());
        }
    return w;
}

/// Inverse transform; equal to the adjoint of dtcwt_forward.
inline Image dtcwt_inverse(const WaveletCoeffs& w) {
    const int J = w.levels();
    detail::check_dtcwt_shape(w.nx(), w.ny(), J);
    const auto& F = detail::dtcwt_filters();
    const std::size_t nx = w.nx(), ny = w.ny();
    const double s = 1.0 / std::sqrt(2.0);

    Image out(nx, ny);
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 2; ++n) {
            const auto sc = w.scaling(2 * m + n);
            std::vector<double> lo(sc.begin(), sc.end()), x;
            for (int j = J; j >= 1; --j) {
                const std::size_t ps = w.plane_size(j);
                std::array<std::vector<double>, 3> hi;
                for (int d = 0; d < 3; ++d) {
                    hi[d].resize(ps);
                    const auto a_re = w.real(j, 2 * d), a_im = w.imag(j, 2 * d);
                    const auto b_re = w.real(j, 2 * d + 1), b_im = w.imag(j, 2 * d + 1);
                    for (std::size_t p = 0; p < ps; ++p) {
                        // Transpose of the orthogonal tree combination.
                        double v;
                        if (m == 0 && n == 0) v = s * (a_re[p] + b_re[p]);
                        else if (m == 1 && n == 1) v = s * (b_re[p] - a_re[p]);
                        else if (m == 0 && n == 1) v = s * (a_im[p] + b_im[p]);
                        else v = s * (a_im[p] - b_im[p]);
                        hi[d][p] = v;
                    }
                }
                const std::size_t rows = ny >> (j - 1), cols = nx >> (j - 1);
                const auto& fr = (j == 1) ? F.first[m] : F.qshift[m];
                const auto& fc = (j == 1) ? F.first[n] : F.qshift[n];
                detail::synthesis_2d(lo, hi, rows, cols, fr, fc, x);
                lo.swap(x);
            }
            auto ov = out.values();
            for (std::size_t p = 0; p < ov.size(); ++p) ov[p] += 0.5 * lo[p];
        }
    }
    return out;
}

/// Debug dump: level, orientation, index, re, im (scaling planes use
/// orientation 6+tree and im = 0).
inline void write_coefficients_csv(std::ostream& os, const WaveletCoeffs& w) {
    os << "level,orientation,index,re,im\n";
    os.precision(17);
    for (int j = 1; j <= w.levels(); ++j)
        for (int o = 0; o < 6; ++o) {
            const auto re = w.real(j, o), im = w.imag(j, o);
            for (std::size_t p = 0; p < re.size(); ++p)
                os << j << ',' << o << ',' << p << ',' << re[p] << ',' << im[p] << '\n';
        }
    for (int t = 0; t < 4; ++t) {
        const auto sc = w.scaling(t);
        for (std::size_t p = 0; p < sc.size(); ++p)
            os << w.levels() << ',' << 6 + t << ',' << p << ',' << sc[p] << ",0\n";
    }
}

}  // namespace pact
