#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "pact/core.hpp"

namespace pact {

enum class PsnrConvention { linear_peak, standard };

inline PsnrConvention psnr_convention_from_string(const std::string& s) {
    if (s == "linear_peak") return PsnrConvention::linear_peak;
    if (s == "standard") return PsnrConvention::standard;
    throw InvalidConfig("unknown psnr convention '" + s + "'");
}

/// 10 log10(peak / mse) with peak = max(u_gt) (linear_peak) or max(u_gt)^2
/// (standard). Identical images give +infinity.
inline double psnr(const Image& u_hat, const Image& u_gt, PsnrConvention conv = PsnrConvention::linear_peak) {
    if (!u_hat.same_shape(u_gt)) throw ContractViolation("psnr: image shapes differ");
    if (u_gt.size() == 0) throw InvalidInput("psnr: empty image");
    const auto v = u_gt.values();
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }))
        throw InvalidInput("psnr: ground truth is all zero");
    const double mx = *std::max_element(v.begin(), v.end());
    const double d = vec::dist2(u_hat.values(), v);
    const double mse = d * d / static_cast<double>(u_gt.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double peak = conv == PsnrConvention::linear_peak ? mx : mx * mx;
    return 10.0 * std::log10(peak / mse);
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
    std::vector<RocPoint> points;  // sorted by FPR, then TPR
    double auc = 0.0;
};

/// Thresholds uniform over [min u_hat, max u_hat]; a pixel is classified
/// positive when u_hat >= threshold. The corners (0,0) and (1,1) are always
/// part of the curve. AUC by the trapezoid rule.
inline RocCurve roc_curve(const Image& u_hat, const Image& seg, int n_thresholds = 256) {
    if (!u_hat.same_shape(seg)) throw ContractViolation("roc_curve: image shapes differ");
    if (n_thresholds < 2) throw InvalidConfig("roc_curve: need at least 2 thresholds");
    const auto u = u_hat.values(), g = seg.values();
    std::size_t npos = 0;
    for (double x : g) npos += x > 0.5;
    const std::size_t nneg = g.size() - npos;
    if (npos == 0 || nneg == 0) throw InvalidInput("roc_curve: ground truth must contain both classes");

    const auto [mn, mx] = std::minmax_element(u.begin(), u.end());
    RocCurve c;
    c.points.push_back({0.0, 0.0});
    c.points.push_back({1.0, 1.0});
    for (int k = 0; k < n_thresholds; ++k) {
        const double thr = *mn + (*mx - *mn) * k / (n_thresholds - 1);
        std::size_t tp = 0, fp = 0;
        for (std::size_t p = 0; p < u.size(); ++p)
            if (u[p] >= thr) (g[p] > 0.5 ? tp : fp) += 1;
        c.points.push_back({double(fp) / double(nneg), double(tp) / double(npos)});
    }
    std::sort(c.points.begin(), c.points.end(),
              [](const RocPoint& a, const RocPoint& b) { return a.fpr != b.fpr ? a.fpr < b.fpr : a.tpr < b.tpr; });
    c.points.erase(std::unique(c.points.begin(), c.points.end()), c.points.end());
    for (std::size_t k = 1; k < c.points.size(); ++k)
        c.auc += (c.points[k].fpr - c.points[k - 1].fpr) * 0.5 * (c.points[k].tpr + c.points[k - 1].tpr);
    return c;
}

inline void write_roc_csv(std::ostream& os, const RocCurve& c) {
    os << "fpr,tpr\n";
    char buf[64];
    for (const auto& p : c.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpr, p.tpr);
        os << buf;
    }
}

}  // namespace pact
