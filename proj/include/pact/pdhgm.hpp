#pragma once

#include <algorithm>
#include <chrono>
#include <concepts>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "pact/core.hpp"
#include "pact/dtcwt.hpp"
#include "pact/operators.hpp"
#include "pact/power_iteration.hpp"
#include "pact/prox.hpp"

namespace pact {

// ---------------------------------------------------------------------------
// Problem description

struct TvReg {
    double alpha = 0.0;
};
struct TgvReg {
    double alpha = 0.0;
    double beta = 1.0;
};
struct WaveletReg {
    double alpha = 0.0;
    int levels = 3;
};
using RegularizerSpec = std::variant<TvReg, TgvReg, WaveletReg>;

inline void validate(const RegularizerSpec& reg) {
    std::visit(
        [](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if (!(r.alpha >= 0.0) || !std::isfinite(r.alpha)) throw InvalidConfig("regularizer: alpha must be >= 0");
            if constexpr (std::is_same_v<T, TgvReg>)
                if (!(r.beta > 0.0)) throw InvalidConfig("regularizer: beta must be > 0");
            if constexpr (std::is_same_v<T, WaveletReg>)
                if (r.levels < 1) throw InvalidConfig("regularizer: levels must be >= 1");
        },
        reg);
}

inline std::string regularizer_name(const RegularizerSpec& reg) {
    switch (reg.index()) {
        case 0: return "tv";
        case 1: return "tgv";
        default: return "wavelet";
    }
}

class StepSizes {
public:
    /// Checks sigma_i * tau * L_i^2 < 1/4 for both blocks.
    StepSizes(double sigma1, double sigma2, double tau, double theta, double L1, double L2)
        : sigma1_(sigma1), sigma2_(sigma2), tau_(tau), theta_(theta), L1_(L1), L2_(L2) {
        if (!(sigma1 > 0.0 && sigma2 > 0.0 && tau > 0.0))
            throw ContractViolation("StepSizes: sigma1, sigma2, tau must be > 0");
        if (!(theta >= 0.0 && theta <= 1.0)) throw ContractViolation("StepSizes: theta must lie in [0, 1]");
        if (!(L1 >= 0.0 && L2 >= 0.0)) throw ContractViolation("StepSizes: norms must be >= 0");
        if (!(sigma1 * tau * L1 * L1 < 0.25) || !(sigma2 * tau * L2 * L2 < 0.25))
            throw ContractViolation("StepSizes: sigma_i * tau * L_i^2 must be < 1/4");
    }

    double sigma1() const { return sigma1_; }
    double sigma2() const { return sigma2_; }
    double tau() const { return tau_; }
    double theta() const { return theta_; }
    double L1() const { return L1_; }
    double L2() const { return L2_; }

    /// sqrt(sigma1 tau) L1 + sqrt(sigma2 tau) L2
    double bound() const { return std::sqrt(sigma1_ * tau_) * L1_ + std::sqrt(sigma2_ * tau_) * L2_; }

private:
    double sigma1_, sigma2_, tau_, theta_, L1_, L2_;
};

inline constexpr double kStepMargin = 1e-3;

/// tau = ratio, sigma_i = (1 - delta) / (4 tau L_i^2).
inline StepSizes choose_step_sizes(double L1, double L2, double ratio = 1.0, double theta = 1.0,
                                   double delta = kStepMargin) {
    if (!(L1 > 0.0) || !(L2 > 0.0)) throw InvalidConfig("choose_step_sizes: operator norms must be > 0");
    if (!(ratio > 0.0)) throw InvalidConfig("choose_step_sizes: ratio must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("choose_step_sizes: delta must lie in (0, 1)");
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidConfig("choose_step_sizes: theta must lie in [0, 1]");
    const double tau = ratio;
    return StepSizes((1.0 - delta) / (4.0 * tau * L1 * L1), (1.0 - delta) / (4.0 * tau * L2 * L2), tau, theta, L1,
                     L2);
}

struct StoppingRule {
    double tol_gap = 1e-6;
    double tol_res = 1e-8;
    int max_iter = 5000;
    bool ergodic = false;  // also monitor the gap of the running averages
};

inline void validate(const StoppingRule& s) {
    if (!(s.tol_gap >= 0.0) || !(s.tol_res >= 0.0)) throw InvalidConfig("stopping: tolerances must be >= 0");
    if (s.max_iter < 1) throw InvalidConfig("stopping: max_iter must be >= 1");
}

enum class StopReason { gap, residual, max_iter };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::gap: return "gap";
        case StopReason::residual: return "residual";
        default: return "max_iter";
    }
}

struct TraceRecord {
    int n = 0;
    double gap = 0.0;
    double violation = 0.0;  // ||A* y||
    double objective = 0.0;
    std::vector<double> residuals;  // in SolverTrace::variables order
    double ergodic_gap = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

struct SolverTrace {
    std::vector<std::string> variables;
    std::vector<TraceRecord> records;
    StopReason reason = StopReason::max_iter;

    double initial_gap() const { return records.empty() ? 0.0 : records.front().gap; }
    double final_gap() const { return records.empty() ? 0.0 : records.back().gap; }
    int iterations() const { return records.empty() ? 0 : records.back().n; }
};

/// Columns n, gap, violation, objective, res_<var>..., ergodic_gap and, when
/// asked, seconds.
inline void write_trace_csv(std::ostream& os, const SolverTrace& t, bool with_seconds = false) {
    os << "n,gap,violation,objective";
    for (const auto& v : t.variables) os << ",res_" << v;
    os << ",ergodic_gap";
    if (with_seconds) os << ",seconds";
    os << "\n";
    char buf[64];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, ",%.17g", x);
        os << buf;
    };
    for (const auto& r : t.records) {
        os << r.n;
        put(r.gap);
        put(r.violation);
        put(r.objective);
        for (double x : r.residuals) put(x);
        put(r.ergodic_gap);
        if (with_seconds) put(r.seconds);
        os << "\n";
    }
}

// ---------------------------------------------------------------------------
// State and monitoring

struct SolverState {
    std::vector<double> u, v;        // v empty unless TGV
    std::vector<double> q, r, s;     // s empty unless TGV
    std::vector<double> u_bar, v_bar;
    int n = 0;
};

/// ||a - b|| / ||b|| with 0/0 -> 0 and x/0 -> inf.
inline double relative_change(std::span<const double> now, std::span<const double> before) {
    const double num = vec::dist2(now, before);
    const double den = vec::norm2(before);
    if (den > 0.0) return num / den;
    return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

/// Per-variable relative changes in the order u, q, r[, v, s].
inline std::vector<double> residuals(const SolverState& now, const SolverState& before) {
    std::vector<double> out{relative_change(now.u, before.u), relative_change(now.q, before.q),
                            relative_change(now.r, before.r)};
    if (!now.v.empty()) {
        out.push_back(relative_change(now.v, before.v));
        out.push_back(relative_change(now.s, before.s));
    }
    return out;
}

namespace detail {

inline double half_sq_misfit(std::span<const double> ku, std::span<const double> f) {
    const double d = vec::dist2(ku, f);
    return 0.5 * d * d;
}

// F1*(q) = 1/2 |q|^2 + <q, f>
inline double fidelity_conjugate(std::span<const double> q, std::span<const double> f) {
    return 0.5 * vec::dot(q, q) + vec::dot(q, f);
}

inline double joint_norm(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(vec::dot(a, a) + vec::dot(b, b));
}

inline void check_finite_guard(std::span<const double> u, double f_norm, int n) {
    const double nu = vec::norm2(u);
    if (!std::isfinite(nu) || nu > 1e12 * f_norm)
        throw DivergenceError("pdhgm: iterate norm " + std::to_string(nu) + " exceeds 1e12 * |f| at iteration " +
                              std::to_string(n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regularizer blocks for the single-dual loop. Each supplies the operator R,
// its adjoint R* (so the primal step is u - tau (K* q + R* r)), the pointwise
// dual projection and the penalty alpha |R u|_1.

struct TvBlock {
    GradientOp op;
    double alpha = 0.0;

    TvBlock(std::size_t nx, std::size_t ny, double a) : op{nx, ny}, alpha(a) {}

    std::size_t dual_size() const { return op.rows(); }
    void apply(std::span<const double> u, std::span<double> out) const { op.apply(u, out); }
    void apply_adjoint(std::span<const double> r, std::span<double> out) const { op.apply_adjoint(r, out); }
    void project(std::span<double> r) const {
        const std::size_t n = op.cols();
        for (std::size_t p = 0; p < n; ++p) {
            const double s = detail::ball_scale(alpha, std::hypot(r[p], r[n + p]));
            r[p] *= s;
            r[n + p] *= s;
        }
    }
    double penalty(std::span<const double> ru) const {
        const std::size_t n = op.cols();
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p) s += std::hypot(ru[p], ru[n + p]);
        return alpha * s;
    }
};

struct WaveletBlock {
    WaveletOp op;
    double alpha = 0.0;
    mutable WaveletCoeffs scratch;

    WaveletBlock(std::size_t nx, std::size_t ny, int levels, double a)
        : op{nx, ny, levels}, alpha(a), scratch(nx, ny, levels) {}

    std::size_t dual_size() const { return op.rows(); }
    void apply(std::span<const double> u, std::span<double> out) const { op.apply(u, out); }
    void apply_adjoint(std::span<const double> r, std::span<double> out) const { op.apply_adjoint(r, out); }
    void project(std::span<double> r) const {
        std::copy(r.begin(), r.end(), scratch.values().begin());
        prox_ball_dual(scratch, alpha);
        std::copy(scratch.values().begin(), scratch.values().end(), r.begin());
    }
    double penalty(std::span<const double> ru) const {
        std::copy(ru.begin(), ru.end(), scratch.values().begin());
        return alpha * l1_norm(scratch);
    }
};

template <class B>
concept RegularizerBlock = requires(const B& b, std::span<const double> in, std::span<double> out) {
    { b.dual_size() } -> std::convertible_to<std::size_t>;
    b.apply(in, out);
    b.apply_adjoint(in, out);
    b.project(out);
    { b.penalty(in) } -> std::convertible_to<double>;
};

/// Gap surrogate F(Ax) + F*(y) + rho |A* y| for the single-dual problem, with
/// G* replaced by the violation term over the ball of radius rho; both duals
/// are assumed feasible. rho < 0 means |x|. The solvers use the running
/// maximum of |x_n| floored at |f| / L1.
/// Returns {gap, violation, primal objective}.
struct GapValue {
    double gap = 0.0;
    double violation = 0.0;
    double objective = 0.0;
};

template <LinearMap Op, RegularizerBlock Block>
GapValue duality_gap(const Op& K, std::span<const double> f, const Block& R, std::span<const double> u,
                     std::span<const double> q, std::span<const double> r, double rho = -1.0) {
    std::vector<double> ku(K.rows()), ru(R.dual_size()), aty(K.cols()), tmp(K.cols());
    K.apply(u, ku);
    R.apply(u, ru);
    K.apply_adjoint(q, aty);
    R.apply_adjoint(r, tmp);
    vec::axpy(1.0, tmp, aty);
    GapValue g;
    g.objective = detail::half_sq_misfit(ku, f) + R.penalty(ru);
    g.violation = vec::norm2(aty);
    if (rho < 0.0) rho = vec::norm2(u);
    g.gap = g.objective + detail::fidelity_conjugate(q, f) + rho * g.violation;
    return g;
}

struct SolveResult {
    Image u;
    std::optional<VectorField> v;
    SolverTrace trace;
    SolverState state;
};

// ---------------------------------------------------------------------------
// Single-block loop: one dual variable for the data, one for the regularizer.

template <LinearMap Op, RegularizerBlock Block>
SolveResult pdhgm_single(const Op& K, std::span<const double> f, const Block& R, std::size_t nx, std::size_t ny,
                         const StepSizes& steps, const StoppingRule& stop) {
    validate(stop);
    require_size(K.cols(), nx * ny, "pdhgm: operator columns");
    require_size(f.size(), K.rows(), "pdhgm: data length");
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();

    const std::size_t N = nx * ny, M = K.rows(), D = R.dual_size();
    const double s1 = steps.sigma1(), s2 = steps.sigma2(), tau = steps.tau(), theta = steps.theta();
    const double f_norm = vec::norm2(f);
    double radius = f_norm / steps.L1();

    SolverState st, prev;
    st.u.assign(N, 0.0);
    st.u_bar.assign(N, 0.0);
    st.q.assign(M, 0.0);
    st.r.assign(D, 0.0);

    // Ku and Ru of the current and previous primal iterate; K u_bar and R u_bar
    // follow by linearity.
    std::vector<double> ku(M, 0.0), ku_prev(M, 0.0), ru(D, 0.0), ru_prev(D, 0.0);
    std::vector<double> aty(N), tmp(N);
    std::vector<double> sum_u, sum_q, sum_r, sum_ku, sum_ru, sum_aty;
    if (stop.ergodic) {
        sum_u.assign(N, 0.0);
        sum_q.assign(M, 0.0);
        sum_r.assign(D, 0.0);
        sum_ku.assign(M, 0.0);
        sum_ru.assign(D, 0.0);
        sum_aty.assign(N, 0.0);
    }

    SolveResult res;
    res.trace.variables = {"u", "q", "r"};
    while (true) {
        prev = st;
        // dual steps at u_bar
        for (std::size_t i = 0; i < M; ++i) {
            const double kb = ku[i] + theta * (ku[i] - ku_prev[i]);
            st.q[i] += s1 * kb;
        }
        prox_fidelity_dual(st.q, f, s1);
        for (std::size_t i = 0; i < D; ++i) {
            const double rb = ru[i] + theta * (ru[i] - ru_prev[i]);
            st.r[i] += s2 * rb;
        }
        R.project(st.r);

        // primal step
        K.apply_adjoint(st.q, aty);
        R.apply_adjoint(st.r, tmp);
        vec::axpy(1.0, tmp, aty);
        for (std::size_t p = 0; p < N; ++p) st.u[p] -= tau * aty[p];
        for (std::size_t p = 0; p < N; ++p) st.u_bar[p] = st.u[p] + theta * (st.u[p] - prev.u[p]);
        ++st.n;
        detail::check_finite_guard(st.u, f_norm, st.n);

        ku_prev.swap(ku);
        ru_prev.swap(ru);
        K.apply(st.u, ku);
        R.apply(st.u, ru);

        TraceRecord rec;
        rec.n = st.n;
        rec.objective = detail::half_sq_misfit(ku, f) + R.penalty(ru);
        rec.violation = vec::norm2(aty);
        radius = std::max(radius, vec::norm2(st.u));
        rec.gap = rec.objective + detail::fidelity_conjugate(st.q, f) + radius * rec.violation;
        rec.residuals = residuals(st, prev);
        if (stop.ergodic) {
            vec::axpy(1.0, st.u, sum_u);
            vec::axpy(1.0, st.q, sum_q);
            vec::axpy(1.0, st.r, sum_r);
            vec::axpy(1.0, ku, sum_ku);
            vec::axpy(1.0, ru, sum_ru);
            vec::axpy(1.0, aty, sum_aty);
            const double w = 1.0 / st.n;
            std::vector<double> au(M), aq(M), ar(D), aa(N), xu(N);
            for (std::size_t i = 0; i < M; ++i) {
                au[i] = w * sum_ku[i];
                aq[i] = w * sum_q[i];
            }
            for (std::size_t i = 0; i < D; ++i) ar[i] = w * sum_ru[i];
            for (std::size_t i = 0; i < N; ++i) {
                aa[i] = w * sum_aty[i];
                xu[i] = w * sum_u[i];
            }
            rec.ergodic_gap = detail::half_sq_misfit(au, f) + R.penalty(ar) + detail::fidelity_conjugate(aq, f) +
                              std::max(radius, vec::norm2(xu)) * vec::norm2(aa);
        }
        rec.seconds = std::chrono::duration<double>(clock::now() - t_start).count();
        res.trace.records.push_back(std::move(rec));

        const auto& last = res.trace.records.back();
        bool res_ok = true;
        for (double x : last.residuals) res_ok = res_ok && x <= stop.tol_res;
        if (last.gap <= stop.tol_gap * res.trace.initial_gap()) {
            res.trace.reason = StopReason::gap;
            break;
        }
        if (res_ok) {
            res.trace.reason = StopReason::residual;
            break;
        }
        if (st.n >= stop.max_iter) {
            res.trace.reason = StopReason::max_iter;
            break;
        }
    }
    res.u = Image(nx, ny, st.u);
    res.state = std::move(st);
    return res;
}

// ---------------------------------------------------------------------------
// TGV loop with duals q (data), r (first order), s (second order) and
// primal pair (u, v). Uses sigma2 for both r and s.

template <LinearMap Op>
GapValue tgv_duality_gap(const Op& K, std::span<const double> f, const TgvReg& reg, std::size_t nx, std::size_t ny,
                         std::span<const double> u, std::span<const double> v, std::span<const double> q,
                         std::span<const double> r, std::span<const double> s, double rho = -1.0) {
    const std::size_t N = nx * ny;
    TgvBlockOp B{nx, ny};
    std::vector<double> x(3 * N), bx(5 * N), y(5 * N), bty(3 * N), ku(K.rows()), ktq(N);
    std::copy(u.begin(), u.end(), x.begin());
    std::copy(v.begin(), v.end(), x.begin() + N);
    B.apply(x, bx);
    K.apply(u, ku);
    std::copy(r.begin(), r.end(), y.begin());
    std::copy(s.begin(), s.end(), y.begin() + 2 * N);
    B.apply_adjoint(y, bty);
    K.apply_adjoint(q, ktq);
    vec::axpy(1.0, ktq, std::span<double>(bty).subspan(0, N));

    VectorField g(nx, ny);
    std::copy(bx.begin(), bx.begin() + 2 * N, g.values().begin());
    SymTensorField e(nx, ny);
    std::copy(bx.begin() + 2 * N, bx.end(), e.values().begin());

    GapValue out;
    out.objective = detail::half_sq_misfit(ku, f) + reg.alpha * l1_norm(g) + reg.alpha * reg.beta * l1_norm(e);
    out.violation = vec::norm2(bty);
    if (rho < 0.0) rho = detail::joint_norm(u, v);
    out.gap = out.objective + detail::fidelity_conjugate(q, f) + rho * out.violation;
    return out;
}

template <LinearMap Op>
SolveResult solve_tgv(const Op& K, std::span<const double> f, const TgvReg& reg, std::size_t nx, std::size_t ny,
                      const StepSizes& steps, const StoppingRule& stop) {
    validate(RegularizerSpec{reg});
    validate(stop);
    require_size(K.cols(), nx * ny, "solve_tgv: operator columns");
    require_size(f.size(), K.rows(), "solve_tgv: data length");
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();

    const std::size_t N = nx * ny, M = K.rows();
    const double s1 = steps.sigma1(), s2 = steps.sigma2(), tau = steps.tau(), theta = steps.theta();
    const double a1 = reg.alpha, a2 = reg.alpha * reg.beta;
    const double f_norm = vec::norm2(f);
    double radius = f_norm / steps.L1();
    const TgvBlockOp B{nx, ny};

    SolverState st, prev;
    st.u.assign(N, 0.0);
    st.u_bar.assign(N, 0.0);
    st.v.assign(2 * N, 0.0);
    st.v_bar.assign(2 * N, 0.0);
    st.q.assign(M, 0.0);
    st.r.assign(2 * N, 0.0);
    st.s.assign(3 * N, 0.0);

    // x = (u, v) stacked; bx = B x = (grad u - v, E v).
    std::vector<double> x(3 * N, 0.0), ku(M, 0.0), ku_prev(M, 0.0), bx(5 * N, 0.0), bx_prev(5 * N, 0.0);
    std::vector<double> y(5 * N), bty(3 * N), ktq(N);
    std::vector<double> sum_x, sum_q, sum_y, sum_ku, sum_bx, sum_aty;
    if (stop.ergodic) {
        sum_x.assign(3 * N, 0.0);
        sum_q.assign(M, 0.0);
        sum_ku.assign(M, 0.0);
        sum_bx.assign(5 * N, 0.0);
        sum_aty.assign(3 * N, 0.0);
    }
    VectorField gfield(nx, ny);
    SymTensorField efield(nx, ny);
    auto penalty = [&](std::span<const double> b) {
        std::copy(b.begin(), b.begin() + 2 * N, gfield.values().begin());
        std::copy(b.begin() + 2 * N, b.end(), efield.values().begin());
        return a1 * l1_norm(gfield) + a2 * l1_norm(efield);
    };

    SolveResult res;
    res.trace.variables = {"u", "q", "r", "v", "s"};
    while (true) {
        prev = st;
        for (std::size_t i = 0; i < M; ++i) st.q[i] += s1 * (ku[i] + theta * (ku[i] - ku_prev[i]));
        prox_fidelity_dual(st.q, f, s1);

        VectorField rf(nx, ny);
        for (std::size_t i = 0; i < 2 * N; ++i) rf.values()[i] = st.r[i] + s2 * (bx[i] + theta * (bx[i] - bx_prev[i]));
        prox_ball_dual(rf, a1);
        std::copy(rf.values().begin(), rf.values().end(), st.r.begin());

        SymTensorField sf(nx, ny);
        for (std::size_t i = 0; i < 3 * N; ++i) {
            const std::size_t k = 2 * N + i;
            sf.values()[i] = st.s[i] + s2 * (bx[k] + theta * (bx[k] - bx_prev[k]));
        }
        prox_ball_dual(sf, a2);
        std::copy(sf.values().begin(), sf.values().end(), st.s.begin());

        // primal steps: u -= tau (K* q - div r), v -= tau (-r - sym_div s)
        std::copy(st.r.begin(), st.r.end(), y.begin());
        std::copy(st.s.begin(), st.s.end(), y.begin() + 2 * N);
        B.apply_adjoint(y, bty);
        K.apply_adjoint(st.q, ktq);
        vec::axpy(1.0, ktq, std::span<double>(bty).subspan(0, N));
        for (std::size_t p = 0; p < N; ++p) st.u[p] -= tau * bty[p];
        for (std::size_t p = 0; p < 2 * N; ++p) st.v[p] -= tau * bty[N + p];
        for (std::size_t p = 0; p < N; ++p) st.u_bar[p] = st.u[p] + theta * (st.u[p] - prev.u[p]);
        for (std::size_t p = 0; p < 2 * N; ++p) st.v_bar[p] = st.v[p] + theta * (st.v[p] - prev.v[p]);
        ++st.n;
        detail::check_finite_guard(st.u, f_norm, st.n);

        std::copy(st.u.begin(), st.u.end(), x.begin());
        std::copy(st.v.begin(), st.v.end(), x.begin() + N);
        ku_prev.swap(ku);
        bx_prev.swap(bx);
        K.apply(st.u, ku);
        B.apply(x, bx);

        TraceRecord rec;
        rec.n = st.n;
        rec.objective = detail::half_sq_misfit(ku, f) + penalty(bx);
        rec.violation = vec::norm2(bty);
        radius = std::max(radius, vec::norm2(x));
        rec.gap = rec.objective + detail::fidelity_conjugate(st.q, f) + radius * rec.violation;
        rec.residuals = residuals(st, prev);
        if (stop.ergodic) {
            vec::axpy(1.0, x, sum_x);
            vec::axpy(1.0, st.q, sum_q);
            vec::axpy(1.0, ku, sum_ku);
            vec::axpy(1.0, bx, sum_bx);
            vec::axpy(1.0, bty, sum_aty);
            const double w = 1.0 / st.n;
            std::vector<double> ax(3 * N), aq(M), aku(M), abx(5 * N), aa(3 * N);
            for (std::size_t i = 0; i < M; ++i) {
                aq[i] = w * sum_q[i];
                aku[i] = w * sum_ku[i];
            }
            for (std::size_t i = 0; i < 3 * N; ++i) {
                ax[i] = w * sum_x[i];
                aa[i] = w * sum_aty[i];
            }
            for (std::size_t i = 0; i < 5 * N; ++i) abx[i] = w * sum_bx[i];
            rec.ergodic_gap = detail::half_sq_misfit(aku, f) + penalty(abx) + detail::fidelity_conjugate(aq, f) +
                              std::max(radius, vec::norm2(ax)) * vec::norm2(aa);
        }
        rec.seconds = std::chrono::duration<double>(clock::now() - t_start).count();
        res.trace.records.push_back(std::move(rec));

        const auto& last = res.trace.records.back();
        bool res_ok = true;
        for (double r : last.residuals) res_ok = res_ok && r <= stop.tol_res;
        if (last.gap <= stop.tol_gap * res.trace.initial_gap()) {
            res.trace.reason = StopReason::gap;
            break;
        }
        if (res_ok) {
            res.trace.reason = StopReason::residual;
            break;
        }
        if (st.n >= stop.max_iter) {
            res.trace.reason = StopReason::max_iter;
            break;
        }
    }
    res.u = Image(nx, ny, st.u);
    VectorField vf(nx, ny);
    std::copy(st.v.begin(), st.v.end(), vf.values().begin());
    res.v = std::move(vf);
    res.state = std::move(st);
    return res;
}

/// Single-block loop for TV (R = grad, R* = -div) or the wavelet variant (R = W,
/// R* = W^-1).
template <LinearMap Op>
SolveResult solve_tv_or_wavelet(const Op& K, std::span<const double> f, const RegularizerSpec& reg, std::size_t nx,
                                std::size_t ny, const StepSizes& steps, const StoppingRule& stop) {
    validate(reg);
    if (const auto* tv = std::get_if<TvReg>(&reg)) return pdhgm_single(K, f, TvBlock(nx, ny, tv->alpha), nx, ny, steps, stop);
    if (const auto* w = std::get_if<WaveletReg>(&reg)) {
        detail::check_dtcwt_shape(nx, ny, w->levels);
        return pdhgm_single(K, f, WaveletBlock(nx, ny, w->levels, w->alpha), nx, ny, steps, stop);
    }
    throw InvalidConfig("solve_tv_or_wavelet: TGV must go through solve_tgv");
}

/// Norm of the regularizer block matching `reg` on an nx x ny grid.
inline double regularizer_norm(const RegularizerSpec& reg, std::size_t nx, std::size_t ny, int iters = 100) {
    switch (reg.index()) {
        case 0: return estimate_norm(GradientOp{nx, ny}, iters, 7);
        case 1: return estimate_norm(TgvBlockOp{nx, ny}, iters, 7);
        default: return estimate_norm(WaveletOp{nx, ny, std::get<WaveletReg>(reg).levels}, iters, 7);
    }
}

/// Dispatches on the regularizer kind.
template <LinearMap Op>
SolveResult solve(const Op& K, std::span<const double> f, const RegularizerSpec& reg, std::size_t nx, std::size_t ny,
                  const StepSizes& steps, const StoppingRule& stop) {
    if (const auto* t = std::get_if<TgvReg>(&reg)) return solve_tgv(K, f, *t, nx, ny, steps, stop);
    return solve_tv_or_wavelet(K, f, reg, nx, ny, steps, stop);
}

}  // namespace pact
