#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pact/config.hpp"
#include "pact/direct.hpp"
#include "pact/forward_operator.hpp"
#include "pact/image_io.hpp"
#include "pact/metrics.hpp"
#include "pact/pdhgm.hpp"
#include "pact/phantoms.hpp"
#include "pact/power_iteration.hpp"
#include "pact/signal_chain.hpp"

namespace pact {

namespace fs = std::filesystem;

// Output layout under the run directory D:
//   D/phantom/              ground_truth.{csv,pgm}, fine.csv, [segmentation.csv], phantom.json
//   D/simulate/             pressure.bin, f.bin, simulate.json
//   D/reconstruct/<method>/ u.{csv,pgm}, [trace.csv], reconstruct.json, timing.json
//   D/evaluate/<method>/    metrics.csv, [roc.csv], evaluate.json
//   D/sweep/                sweep.csv, sweep_timing.json, sweep.json, points/<axis>_<value>/...
// Each *.json sidecar holds the stage hash, seeds, toolkit version and the
// resolved config. A stage whose sidecar hash matches is not recomputed.

inline constexpr std::uint64_t kNormSeed = 7;

struct RunPaths {
    fs::path root;
    fs::path cache;

    explicit RunPaths(const ExperimentConfig& c)
        : root(c.output.dir), cache(c.output.cache.empty() ? fs::path(c.output.dir) / "cache" : fs::path(c.output.cache)) {}

    fs::path phantom() const { return root / "phantom"; }
    fs::path simulate() const { return root / "simulate"; }
    fs::path reconstruct(const std::string& m) const { return root / "reconstruct" / m; }
    fs::path evaluate(const std::string& m) const { return root / "evaluate" / m; }
    fs::path sweep() const { return root / "sweep"; }
};

struct StageStatus {
    bool reused = false;
    fs::path dir;
    std::string hash;
};

struct EvalResult {
    std::string method;
    double psnr = 0.0;
    std::optional<double> auc;
    int iterations = 0;
    double seconds = 0.0;  // reconstruction wall time
};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline void write_file_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError("cannot write '" + tmp.string() + "'");
        os << text;
        if (!os) throw IoError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

inline Json read_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read '" + path.string() + "'");
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw IoError("'" + path.string() + "': " + e.what());
    }
}

// Stage hashes chain through their upstream stage.
inline std::uint64_t phantom_hash(const ExperimentConfig& c) {
    Json in;
    in["stage"] = "phantom";
    in["version"] = kVersion;
    in["grid"] = {c.raw["geometry"]["n"], c.raw["geometry"]["h"], c.raw["geometry"]["sim_factor"]};
    in["phantom"] = c.raw["phantom"];
    return hash_json(in);
}

inline std::uint64_t simulate_hash(const ExperimentConfig& c) {
    Json in;
    in["stage"] = "simulate";
    in["upstream"] = hex64(phantom_hash(c));
    in["geometry"] = c.raw["geometry"];
    in["signal"] = c.raw["signal"];
    return hash_json(in);
}

inline std::uint64_t reconstruct_hash(const ExperimentConfig& c, const std::string& method) {
    Json in;
    in["stage"] = "reconstruct";
    in["upstream"] = hex64(simulate_hash(c));
    in["method"] = method;
    in["params"] = c.raw["method"][method];
    const bool iterative = method == "tv" || method == "tgv" || method == "wavelet";
    if (iterative || method == "lst") in["norm_iters"] = c.raw["solver"]["norm_iters"];
    if (iterative) in["solver"] = c.raw["solver"];
    return hash_json(in);
}

inline std::uint64_t evaluate_hash(const ExperimentConfig& c, const std::string& method) {
    Json in;
    in["stage"] = "evaluate";
    in["upstream"] = hex64(reconstruct_hash(c, method));
    in["phantom"] = hex64(phantom_hash(c));
    in["evaluate"] = c.raw["evaluate"];
    return hash_json(in);
}

inline Json seeds_of(const ExperimentConfig& c) {
    return {{"phantom", c.phantom.seed},
            {"vessel", c.phantom.vessel_seed},
            {"noise", c.signal.noise_seed},
            {"power_iteration", kNormSeed}};
}

inline Json sidecar(const std::string& command, std::uint64_t hash, const ExperimentConfig& c,
                    const std::vector<std::string>& outputs) {
    Json j;
    j["command"] = command;
    j["config_hash"] = hex64(hash);
    j["version"] = kVersion;
    j["seeds"] = seeds_of(c);
    j["outputs"] = outputs;
    j["config"] = c.raw;
    return j;
}

inline void write_sidecar(const fs::path& dir, const std::string& name, const Json& j) {
    write_file_atomic(dir / name, j.dump(2) + "\n");
}

/// Sidecar of a finished stage with the expected hash and all outputs present.
inline std::optional<Json> finished_stage(const fs::path& dir, const std::string& name, std::uint64_t hash) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) return std::nullopt;
    Json j;
    try {
        j = read_json(p);
    } catch (const IoError&) {
        return std::nullopt;
    }
    if (!j.contains("config_hash") || j["config_hash"] != hex64(hash)) return std::nullopt;
    if (j.contains("outputs"))
        for (const auto& o : j["outputs"])
            if (!fs::exists(dir / o.get<std::string>())) return std::nullopt;
    return j;
}

inline Json require_stage(const fs::path& dir, const std::string& name, std::uint64_t hash,
                          const std::string& command) {
    if (!fs::exists(dir / name))
        throw DependencyError("missing upstream artifacts in '" + dir.string() + "': run `pact " + command +
                              "` first with the same configuration");
    auto j = finished_stage(dir, name, hash);
    if (!j)
        throw DependencyError("artifacts in '" + dir.string() + "' were produced by a different configuration: rerun `pact " +
                              command + "`");
    return *j;
}

struct Log {
    std::ostream* os = nullptr;
    std::mutex* mu = nullptr;
    void operator()(const std::string& s) const {
        if (!os) return;
        if (mu) {
            std::lock_guard<std::mutex> lock(*mu);
            *os << s << '\n';
        } else {
            *os << s << '\n';
        }
    }
};

// K / |K| and f / |K|: alpha becomes relative to |K|^2 and the PDHGM step
// ratio does not depend on detector count or units.
struct ScaledOperator {
    const SparseOperator* K = nullptr;
    double scale = 1.0;
    std::size_t rows() const { return K->rows(); }
    std::size_t cols() const { return K->cols(); }
    void apply(std::span<const double> x, std::span<double> y) const {
        K->apply(x, y);
        for (double& v : y) v *= scale;
    }
    void apply_adjoint(std::span<const double> x, std::span<double> y) const {
        K->apply_adjoint(x, y);
        for (double& v : y) v *= scale;
    }
};

inline CalibrationPulse nominal_pulse(const ExperimentConfig& c) {
    const auto& s = c.signal;
    return synth_calibration_pulse(c.geometry.sampling(), s.f_c, s.bandwidth, s.delay, s.source);
}

inline CalibrationPulse simulation_pulse(const ExperimentConfig& c) {
    const auto& s = c.signal;
    if (s.inverse_crime) return nominal_pulse(c);
    const double m = 1.0 + s.mismatch;
    return synth_calibration_pulse(c.geometry.sampling(), s.f_c * m, s.bandwidth * m, s.delay, s.source);
}

inline Phantom make_phantom(const ExperimentConfig& c) {
    const ImageGrid fine = c.geometry.sim_grid();
    switch (c.phantom.kind) {
        case PhantomKind::piecewise_constant: return phantom_piecewise(fine, c.phantom.seed);
        case PhantomKind::smooth_disc: return phantom_smooth_disc(fine, c.phantom.r_frac, c.phantom.decay);
        default: {
            const Image raw = c.phantom.file.empty() ? synth_vessel_tree(fine.nx(), c.phantom.vessel_seed)
                                                     : read_pgm(c.phantom.file).pixels;
            return phantom_vascular(raw, fine, c.phantom.threshold);
        }
    }
}

inline std::string image_csv(const Image& u) {
    std::ostringstream os;
    write_image_csv(os, u);
    return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// phantom

inline StageStatus cmd_phantom(const ExperimentConfig& c, detail::Log log = {}) {
    const RunPaths paths(c);
    const fs::path dir = paths.phantom();
    const std::uint64_t h = detail::phantom_hash(c);
    StageStatus st{false, dir, hex64(h)};
    if (detail::finished_stage(dir, "phantom.json", h)) {
        st.reused = true;
        log("[phantom] up to date in " + dir.string());
        return st;
    }
    fs::create_directories(dir);
    const Phantom p = detail::make_phantom(c);
    const Image gt = downsample_box(p.image, c.geometry.sim_factor);
    std::vector<std::string> outputs = {"fine.csv", "ground_truth.csv"};
    detail::write_file_atomic(dir / "fine.csv", detail::image_csv(p.image));
    detail::write_file_atomic(dir / "ground_truth.csv", detail::image_csv(gt));
    if (c.output.pgm) {
        write_pgm((dir / "ground_truth.pgm").string(), gt, 0.0, 1.0);
        outputs.push_back("ground_truth.pgm");
    }
    if (p.segmentation) {
        // segmentation on the reconstruction grid: majority of the fine pixels
        Image seg = downsample_box(*p.segmentation, c.geometry.sim_factor);
        for (double& v : seg.values()) v = v >= 0.5 ? 1.0 : 0.0;
        detail::write_file_atomic(dir / "segmentation.csv", detail::image_csv(seg));
        outputs.push_back("segmentation.csv");
    }
    Json side = detail::sidecar("phantom", h, c, outputs);
    side["kind"] = to_string(p.kind);
    detail::write_sidecar(dir, "phantom.json", side);
    log("[phantom] wrote " + dir.string());
    return st;
}

// ---------------------------------------------------------------------------
// simulate

inline StageStatus cmd_simulate(const ExperimentConfig& c, detail::Log log = {}) {
    const RunPaths paths(c);
    detail::require_stage(paths.phantom(), "phantom.json", detail::phantom_hash(c), "phantom");
    const fs::path dir = paths.simulate();
    const std::uint64_t h = detail::simulate_hash(c);
    StageStatus st{false, dir, hex64(h)};
    if (detail::finished_stage(dir, "simulate.json", h)) {
        st.reused = true;
        log("[simulate] up to date in " + dir.string());
        return st;
    }
    const auto& g = c.geometry;
    const DetectorSet det = g.detector_set();
    const TimeSampling ts = g.sampling();
    const AcousticConfig ac = g.acoustic();

    // inverse crime: same grid and pulse as the reconstruction
    std::vector<double> Ku;
    if (c.signal.inverse_crime) {
        const Image gt = read_image_csv((paths.phantom() / "ground_truth.csv").string());
        Ku = forward_apply(g.grid(), det, ts, ac, gt.values());
    } else {
        const Image fine = read_image_csv((paths.phantom() / "fine.csv").string());
        Ku = forward_apply(g.sim_grid(), det, ts, ac, fine.values());
    }
    MeasurementSeries p = simulate_pressure(Ku, detail::simulation_pulse(c), det, ts, ac);
    double sigma = 0.0;
    if (c.signal.noise_rel > 0.0) {
        double mx = 0.0;
        for (double v : p.values()) mx = std::max(mx, std::abs(v));
        sigma = c.signal.noise_rel * mx;
        p = add_noise(p, sigma, c.signal.noise_seed);
    }
    const CalibrationPulse cal = detail::nominal_pulse(c);
    const MeasurementSeries f = scale_to_f(deconvolve(p, cal, c.signal.eps), det, cal, ts, ac);

    fs::create_directories(dir);
    save_series((dir / "pressure.bin").string(), p);
    save_series((dir / "f.bin").string(), f);
    Json side = detail::sidecar("simulate", h, c, {"pressure.bin", "f.bin"});
    side["upstream_hash"] = hex64(detail::phantom_hash(c));
    side["detectors"] = det.size();
    side["noise_sigma"] = sigma;
    detail::write_sidecar(dir, "simulate.json", side);
    log("[simulate] wrote " + dir.string() + " (" + std::to_string(det.size()) + " detectors)");
    return st;
}

// ---------------------------------------------------------------------------
// reconstruct

struct ReconstructOutcome {
    StageStatus status;
    Image u;
    int iterations = 0;
    double seconds = 0.0;
};

inline ReconstructOutcome cmd_reconstruct(const ExperimentConfig& c, detail::Log log = {}) {
    const RunPaths paths(c);
    const std::string method = c.method.name;
    detail::require_stage(paths.simulate(), "simulate.json", detail::simulate_hash(c), "simulate");
    const fs::path dir = paths.reconstruct(method);
    const std::uint64_t h = detail::reconstruct_hash(c, method);
    ReconstructOutcome out;
    out.status = {false, dir, hex64(h)};
    if (auto j = detail::finished_stage(dir, "reconstruct.json", h)) {
        out.status.reused = true;
        out.u = read_image_csv((dir / "u.csv").string());
        out.iterations = j->value("iterations", 0);
        if (fs::exists(dir / "timing.json")) out.seconds = detail::read_json(dir / "timing.json").value("seconds", 0.0);
        log("[reconstruct:" + method + "] up to date in " + dir.string());
        return out;
    }

    const auto& g = c.geometry;
    const ImageGrid grid = g.grid();
    const DetectorSet det = g.detector_set();
    const TimeSampling ts = g.sampling();
    const AcousticConfig ac = g.acoustic();
    const MeasurementSeries f = load_series((paths.simulate() / "f.bin").string());
    if (f.detector_key() != detector_key(det) || f.sampling() != ts)
        throw DependencyError("'" + (paths.simulate() / "f.bin").string() +
                              "' does not match the configured geometry: rerun `pact simulate`");

    const auto t_start = std::chrono::steady_clock::now();
    Json side = detail::sidecar("reconstruct", h, c, {});
    side["upstream_hash"] = hex64(detail::simulate_hash(c));
    side["method"] = method;
    std::vector<std::string> outputs = {"u.csv"};
    std::optional<SolverTrace> trace;

    if (method == "fbp") {
        const double gain = fbp_calibration(grid, det, ts, ac, c.method.fbp_calibration_radius_px);
        out.u = fbp(f, grid, det, ts, ac, gain);
        side["fbp_gain"] = gain;
        side["note"] = "gain from the point-source calibration (unit disc of calibration_radius_px)";
    } else {
        const SparseOperator K = assemble_K_cached(grid, det, ts, ac, paths.cache.string());
        const double L = estimate_norm(K, c.solver.norm_iters, kNormSeed);
        if (!(L > 0.0)) throw InvalidGeometry("reconstruct: the forward operator is zero for this geometry");
        const detail::ScaledOperator Kn{&K, 1.0 / L};
        std::vector<double> fn(f.values().begin(), f.values().end());
        for (double& v : fn) v /= L;
        side["operator_norm"] = L;
        if (method == "lst") {
            const LstResult r = lst(Kn, fn, c.method.lst_alpha, grid.nx(), grid.ny(), c.method.cg_tol, c.method.cg_maxiter);
            out.u = r.u;
            out.iterations = r.iterations;
            side["relative_residual"] = r.relative_residual;
            side["status"] = r.converged ? "converged" : "warning: CG stopped at cg_maxiter before cg_tol";
            if (!r.converged) log("[reconstruct:lst] warning: CG did not reach cg_tol; keeping the last iterate");
        } else {
            const RegularizerSpec reg = c.method.regularizer();
            const StepSizes steps = choose_step_sizes(
                1.0, regularizer_norm(reg, grid.nx(), grid.ny(), c.solver.norm_iters), c.solver.ratio, c.solver.theta);
            SolveResult r = solve(Kn, fn, reg, grid.nx(), grid.ny(), steps, c.solver.stop);
            out.u = r.u;
            out.iterations = r.trace.iterations();
            side["stop_reason"] = to_string(r.trace.reason);
            side["final_gap"] = r.trace.final_gap();
            side["initial_gap"] = r.trace.initial_gap();
            side["steps"] = {{"sigma1", steps.sigma1()}, {"sigma2", steps.sigma2()}, {"tau", steps.tau()},
                             {"theta", steps.theta()}, {"L2", steps.L2()}};
            trace = std::move(r.trace);
        }
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    fs::create_directories(dir);
    detail::write_file_atomic(dir / "u.csv", detail::image_csv(out.u));
    if (c.output.pgm) {
        write_pgm((dir / "u.pgm").string(), out.u, 0.0, 1.0);
        outputs.push_back("u.pgm");
    }
    if (trace) {
        std::ostringstream os;
        write_trace_csv(os, *trace);
        detail::write_file_atomic(dir / "trace.csv", os.str());
        outputs.push_back("trace.csv");
    }
    detail::write_file_atomic(dir / "timing.json", Json{{"seconds", out.seconds}}.dump(2) + "\n");
    side["iterations"] = out.iterations;
    side["outputs"] = outputs;
    detail::write_sidecar(dir, "reconstruct.json", side);
    log("[reconstruct:" + method + "] wrote " + dir.string() + " (" + std::to_string(out.iterations) + " iterations)");
    return out;
}

// ---------------------------------------------------------------------------
// evaluate

inline EvalResult cmd_evaluate(const ExperimentConfig& c, detail::Log log = {}) {
    const RunPaths paths(c);
    const std::string method = c.method.name;
    detail::require_stage(paths.phantom(), "phantom.json", detail::phantom_hash(c), "phantom");
    const Json rj = detail::require_stage(paths.reconstruct(method), "reconstruct.json",
                                          detail::reconstruct_hash(c, method), "reconstruct");
    const fs::path dir = paths.evaluate(method);
    const std::uint64_t h = detail::evaluate_hash(c, method);
    EvalResult res;
    res.method = method;
    res.iterations = rj.value("iterations", 0);
    const fs::path timing = paths.reconstruct(method) / "timing.json";
    if (fs::exists(timing)) res.seconds = detail::read_json(timing).value("seconds", 0.0);

    if (auto j = detail::finished_stage(dir, "evaluate.json", h)) {
        const Json& m = (*j)["results"];
        res.psnr = std::stod(m["psnr_db"].get<std::string>());
        if (m.contains("auc")) res.auc = std::stod(m["auc"].get<std::string>());
        log("[evaluate:" + method + "] up to date in " + dir.string());
        return res;
    }

    const Image gt = read_image_csv((paths.phantom() / "ground_truth.csv").string());
    const Image u = read_image_csv((paths.reconstruct(method) / "u.csv").string());
    res.psnr = psnr(u, gt, c.evaluate.psnr);
    std::vector<std::string> outputs = {"metrics.csv"};
    fs::create_directories(dir);
    const fs::path seg_path = paths.phantom() / "segmentation.csv";
    if (fs::exists(seg_path)) {
        const RocCurve roc = roc_curve(u, read_image_csv(seg_path.string()), c.evaluate.roc_thresholds);
        res.auc = roc.auc;
        std::ostringstream os;
        write_roc_csv(os, roc);
        detail::write_file_atomic(dir / "roc.csv", os.str());
        outputs.push_back("roc.csv");
    }
    const std::string note = method == "fbp" ? "fbp gain from point-source calibration" : "";
    std::ostringstream os;
    os << "method,psnr_db,psnr_convention,auc,iterations,note\n";
    os << method << ',' << detail::fmt_g(res.psnr) << ','
       << (c.evaluate.psnr == PsnrConvention::linear_peak ? "linear_peak" : "standard") << ','
       << (res.auc ? detail::fmt_g(*res.auc) : "") << ',' << res.iterations << ',' << note << '\n';
    detail::write_file_atomic(dir / "metrics.csv", os.str());

    Json side = detail::sidecar("evaluate", h, c, outputs);
    side["upstream_hash"] = hex64(detail::reconstruct_hash(c, method));
    side["results"]["psnr_db"] = detail::fmt_g(res.psnr);
    if (res.auc) side["results"]["auc"] = detail::fmt_g(*res.auc);
    detail::write_sidecar(dir, "evaluate.json", side);
    log("[evaluate:" + method + "] PSNR " + detail::fmt_short(res.psnr) + " dB" +
        (res.auc ? ", AUC " + detail::fmt_short(*res.auc) : ""));
    return res;
}

/// phantom -> simulate -> reconstruct -> evaluate for the configured method.
inline EvalResult run_all(const ExperimentConfig& c, detail::Log log = {}) {
    cmd_phantom(c, log);
    cmd_simulate(c, log);
    cmd_reconstruct(c, log);
    return cmd_evaluate(c, log);
}

// ---------------------------------------------------------------------------
// sweep

namespace detail {

inline ExperimentConfig sweep_point(const ExperimentConfig& c, double value, const fs::path& dir) {
    Json raw = c.raw;
    const std::string& axis = c.sweep.axis;
    if (axis == "detector_count") {
        if (value < 1 || value != std::floor(value))
            throw InvalidConfig("sweep.values: detector_count values must be positive integers");
        raw["geometry"]["detectors"] = static_cast<std::int64_t>(value);
    } else if (axis == "noise_sigma") {
        raw["signal"]["noise_rel"] = value;
    } else if (axis == "alpha") {
        for (const char* m : {"lst", "tv", "tgv", "wavelet"}) raw["method"][m]["alpha"] = value;
    } else {
        raw["method"]["tgv"]["beta"] = value;
    }
    raw["output"]["dir"] = dir.string();
    if (c.output.cache.empty()) raw["output"]["cache"] = RunPaths(c).cache.string();
    return parse_config(raw);
}

}  // namespace detail

struct SweepOutcome {
    std::vector<EvalResult> rows;  // value-major, methods in config order
    std::vector<double> values;
    fs::path csv;
};

inline SweepOutcome cmd_sweep(const ExperimentConfig& c, detail::Log log = {}) {
    const auto& sw = c.sweep;
    if (sw.values.size() < 2) throw InvalidConfig("sweep.values: a sweep needs at least 2 values");
    const RunPaths paths(c);
    const fs::path dir = paths.sweep();
    fs::create_directories(dir / "points");

    std::vector<ExperimentConfig> points;
    for (double v : sw.values)
        points.push_back(detail::sweep_point(c, v, dir / "points" / (sw.axis + "_" + detail::fmt_short(v))));

    const std::size_t nm = sw.methods.size();
    std::vector<EvalResult> rows(points.size() * nm);
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    const detail::Log plog{log.os, &mu};
    auto worker = [&] {
        for (std::size_t k = next++; k < points.size(); k = next++) {
            try {
                cmd_phantom(points[k], plog);
                cmd_simulate(points[k], plog);
                for (std::size_t m = 0; m < nm; ++m) {
                    ExperimentConfig pc = points[k];
                    pc.raw["method"]["name"] = sw.methods[m];
                    pc.method.name = sw.methods[m];
                    cmd_reconstruct(pc, plog);
                    rows[k * nm + m] = cmd_evaluate(pc, plog);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int nw = std::max(1, std::min<int>(sw.workers, static_cast<int>(points.size())));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::ostringstream csv;
    Json timing = Json::array();
    csv << "method," << sw.axis << ",psnr_db,auc,iterations\n";
    for (std::size_t k = 0; k < points.size(); ++k)
        for (std::size_t m = 0; m < nm; ++m) {
            const EvalResult& r = rows[k * nm + m];
            csv << r.method << ',' << detail::fmt_short(sw.values[k]) << ',' << detail::fmt_g(r.psnr) << ','
                << (r.auc ? detail::fmt_g(*r.auc) : "") << ',' << r.iterations << '\n';
            timing.push_back({{"method", r.method}, {"value", sw.values[k]}, {"seconds", r.seconds}});
        }
    detail::write_file_atomic(dir / "sweep.csv", csv.str());
    // wall time lives outside the CSV so that reruns stay byte-identical
    detail::write_file_atomic(dir / "sweep_timing.json", timing.dump(2) + "\n");
    Json side = detail::sidecar("sweep", hash_json(c.raw), c, {"sweep.csv", "sweep_timing.json"});
    detail::write_sidecar(dir, "sweep.json", side);
    log("[sweep] wrote " + (dir / "sweep.csv").string());
    return {rows, sw.values, dir / "sweep.csv"};
}

}  // namespace pact
