#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pact/core.hpp"
#include "pact/geometry.hpp"
#include "pact/hash.hpp"
#include "pact/metrics.hpp"
#include "pact/pdhgm.hpp"
#include "pact/phantoms.hpp"

namespace pact {

using Json = nlohmann::json;

/// Full default configuration. Every accepted key appears here; files and
/// --set overrides may only change existing keys.
inline Json default_config() {
    return Json::parse(R"({
  "geometry": {
    "n": 128, "h": 1e-4, "sim_factor": 2,
    "arc_radius": 0.02, "arc_span_deg": 172.0, "arc_count": 64, "arc_start_deg": 0.0,
    "rotations": 6, "rotation_step_deg": 60.0, "detectors": 0,
    "c0": 1500.0, "t0": 5e-6, "dt": 5e-8, "nt": 640
  },
  "phantom": {
    "kind": "piecewise", "seed": 1, "r_frac": 0.35, "decay": 300.0,
    "file": "", "vessel_seed": 1, "threshold": 0.05
  },
  "signal": {
    "f_c": 7.5e6, "bandwidth": 0.8, "delay": 0.0, "mismatch": 0.05, "source": [0.0, 0.0],
    "eps": 1e-3, "noise_rel": 0.0, "noise_seed": 1, "inverse_crime": false
  },
  "method": {
    "name": "tv",
    "fbp": {"calibration_radius_px": 2.0},
    "lst": {"alpha": 1e-4, "cg_tol": 1e-10, "cg_maxiter": 2000},
    "tv": {"alpha": 1e-3},
    "tgv": {"alpha": 3e-4, "beta": 1.0},
    "wavelet": {"alpha": 1e-3, "levels": 3}
  },
  "solver": {
    "ratio": 3.0, "theta": 1.0, "tol_gap": 1e-6, "tol_res": 1e-8, "max_iter": 500,
    "ergodic": false, "norm_iters": 100
  },
  "evaluate": {"psnr_convention": "linear_peak", "roc_thresholds": 256},
  "sweep": {"axis": "detector_count", "values": [16, 64, 384], "methods": ["fbp", "lst", "tv"], "workers": 1},
  "output": {"dir": "pact_out", "pgm": true, "cache": ""}
})");
}

namespace detail {

inline void merge_into(Json& base, const Json& over, const std::string& path) {
    if (!over.is_object()) throw InvalidConfig((path.empty() ? "config" : path) + ": expected an object");
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw InvalidConfig(key + ": unknown key");
        Json& slot = base[it.key()];
        if (slot.is_object())
            merge_into(slot, it.value(), key);
        else
            slot = it.value();
    }
}

}  // namespace detail

/// Copies `overrides` onto `base`; unknown keys are errors.
inline Json merge_config(Json base, const Json& overrides) {
    detail::merge_into(base, overrides, "");
    return base;
}

inline Json load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidConfig("cannot read config file '" + path + "'");
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw InvalidConfig("'" + path + "': " + e.what());
    }
}

/// Applies one "dotted.key=value" override. The value is parsed as JSON when
/// possible and otherwise taken as a string.
inline void apply_set(Json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidConfig("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
    Json* slot = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!slot->is_object() || !slot->contains(part)) throw InvalidConfig(key + ": unknown key");
        slot = &(*slot)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (slot->is_object()) throw InvalidConfig(key + ": cannot replace a section");
    Json v = Json::parse(text, nullptr, false);
    *slot = v.is_discarded() ? Json(text) : v;
}

// ---------------------------------------------------------------------------
// Typed view with validation. Messages start with the offending field path.

struct GeometryConfig {
    std::size_t n = 128;
    double h = 1e-4;
    std::size_t sim_factor = 2;
    double arc_radius = 0.02;
    double arc_span_deg = 172.0;
    std::size_t arc_count = 64;
    double arc_start_deg = 0.0;
    std::size_t rotations = 6;
    double rotation_step_deg = 60.0;
    std::size_t detectors = 0;  // 0 keeps every position
    double c0 = 1500.0;
    double t0 = 5e-6;
    double dt = 5e-8;
    std::size_t nt = 640;

    ImageGrid grid() const { return ImageGrid::centered(n, n, h); }
    ImageGrid sim_grid() const { return grid().refined(sim_factor); }
    TimeSampling sampling() const { return TimeSampling(t0, dt, nt); }
    AcousticConfig acoustic() const { return AcousticConfig(c0); }
    DetectorSet detector_set() const {
        const DetectorSet base = build_arc_detectors({0.0, 0.0}, arc_radius, arc_span_deg, arc_count, arc_start_deg);
        const DetectorSet full = apply_rotation_schedule(base, rotations, rotation_step_deg);
        return detectors == 0 || detectors == full.size() ? full : subsample_uniform(full, detectors);
    }
};

struct PhantomConfig {
    PhantomKind kind = PhantomKind::piecewise_constant;
    std::uint64_t seed = 1;
    double r_frac = 0.35;
    double decay = 300.0;
    std::string file;  // empty: synthetic vessel tree
    std::uint64_t vessel_seed = 1;
    double threshold = 0.05;
};

struct SignalConfig {
    double f_c = 7.5e6;
    double bandwidth = 0.8;
    double delay = 0.0;
    double mismatch = 0.05;
    Vec2 source;
    double eps = 1e-3;
    double noise_rel = 0.0;  // sigma as a fraction of max |p|
    std::uint64_t noise_seed = 1;
    bool inverse_crime = false;
};

struct MethodConfig {
    std::string name = "tv";
    double fbp_calibration_radius_px = 2.0;
    double lst_alpha = 1e-4;
    double cg_tol = 1e-10;
    int cg_maxiter = 2000;
    double tv_alpha = 1e-3;
    double tgv_alpha = 3e-4;
    double tgv_beta = 1.0;
    double wavelet_alpha = 1e-3;
    int wavelet_levels = 3;

    bool iterative() const { return name == "tv" || name == "tgv" || name == "wavelet"; }
    RegularizerSpec regularizer() const {
        if (name == "tv") return TvReg{tv_alpha};
        if (name == "tgv") return TgvReg{tgv_alpha, tgv_beta};
        if (name == "wavelet") return WaveletReg{wavelet_alpha, wavelet_levels};
        throw InvalidConfig("method.name: '" + name + "' has no regularizer");
    }
};

struct SolverConfig {
    double ratio = 3.0;
    double theta = 1.0;
    StoppingRule stop;
    int norm_iters = 100;
};

struct EvaluateConfig {
    PsnrConvention psnr = PsnrConvention::linear_peak;
    int roc_thresholds = 256;
};

struct SweepConfig {
    std::string axis = "detector_count";
    std::vector<double> values;
    std::vector<std::string> methods;
    int workers = 1;
};

struct OutputConfig {
    std::string dir = "pact_out";
    bool pgm = true;
    std::string cache;  // empty: <dir>/cache
};

struct ExperimentConfig {
    Json raw;  // resolved JSON (defaults merged with every override)
    GeometryConfig geometry;
    PhantomConfig phantom;
    SignalConfig signal;
    MethodConfig method;
    SolverConfig solver;
    EvaluateConfig evaluate;
    SweepConfig sweep;
    OutputConfig output;
};

inline const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {"fbp", "lst", "tv", "tgv", "wavelet"};
    return names;
}

inline const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes = {"detector_count", "noise_sigma", "alpha", "beta"};
    return axes;
}

namespace detail {

class Reader {
public:
    explicit Reader(const Json& root) : root_(root) {}

    const Json& at(const std::string& path) const {
        const Json* j = &root_;
        std::size_t start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!j->is_object() || !j->contains(part)) throw InvalidConfig(path + ": missing");
            j = &(*j)[part];
            if (dot == std::string::npos) return *j;
            start = dot + 1;
        }
    }

    double num(const std::string& p) const {
        const Json& j = at(p);
        if (!j.is_number()) throw InvalidConfig(p + ": expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) throw InvalidConfig(p + ": must be finite");
        return v;
    }
    double positive(const std::string& p) const {
        const double v = num(p);
        if (!(v > 0.0)) throw InvalidConfig(p + ": must be > 0");
        return v;
    }
    double nonneg(const std::string& p) const {
        const double v = num(p);
        if (!(v >= 0.0)) throw InvalidConfig(p + ": must be >= 0");
        return v;
    }
    std::int64_t integer(const std::string& p, std::int64_t lo) const {
        const Json& j = at(p);
        if (!j.is_number_integer()) throw InvalidConfig(p + ": expected an integer");
        const auto v = j.get<std::int64_t>();
        if (v < lo) throw InvalidConfig(p + ": must be >= " + std::to_string(lo));
        return v;
    }
    bool boolean(const std::string& p) const {
        const Json& j = at(p);
        if (!j.is_boolean()) throw InvalidConfig(p + ": expected true or false");
        return j.get<bool>();
    }
    std::string str(const std::string& p) const {
        const Json& j = at(p);
        if (!j.is_string()) throw InvalidConfig(p + ": expected a string");
        return j.get<std::string>();
    }
    std::string one_of(const std::string& p, const std::vector<std::string>& allowed) const {
        const std::string s = str(p);
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw InvalidConfig(p + ": '" + s + "' is not one of {" + list + "}");
        }
        return s;
    }

private:
    const Json& root_;
};

}  // namespace detail

/// Validates a resolved configuration and returns its typed view.
inline ExperimentConfig parse_config(const Json& resolved) {
    const detail::Reader r(resolved);
    ExperimentConfig c;
    c.raw = resolved;

    auto& g = c.geometry;
    g.n = static_cast<std::size_t>(r.integer("geometry.n", 16));
    g.h = r.positive("geometry.h");
    g.sim_factor = static_cast<std::size_t>(r.integer("geometry.sim_factor", 1));
    g.arc_radius = r.positive("geometry.arc_radius");
    g.arc_span_deg = r.positive("geometry.arc_span_deg");
    if (g.arc_span_deg > 360.0) throw InvalidConfig("geometry.arc_span_deg: must be <= 360");
    g.arc_count = static_cast<std::size_t>(r.integer("geometry.arc_count", 1));
    g.arc_start_deg = r.num("geometry.arc_start_deg");
    g.rotations = static_cast<std::size_t>(r.integer("geometry.rotations", 1));
    g.rotation_step_deg = r.num("geometry.rotation_step_deg");
    g.detectors = static_cast<std::size_t>(r.integer("geometry.detectors", 0));
    if (g.detectors > g.arc_count * g.rotations)
        throw InvalidConfig("geometry.detectors: " + std::to_string(g.detectors) + " exceeds the " +
                            std::to_string(g.arc_count * g.rotations) + " available positions");
    g.c0 = r.positive("geometry.c0");
    g.t0 = r.positive("geometry.t0");
    g.dt = r.positive("geometry.dt");
    g.nt = static_cast<std::size_t>(r.integer("geometry.nt", 2));
    if (g.t0 < g.dt) throw InvalidConfig("geometry.t0: must be >= geometry.dt");
    const double half_diag = 0.5 * std::sqrt(2.0) * static_cast<double>(g.n) * g.h;
    if (g.arc_radius <= half_diag) throw InvalidConfig("geometry.arc_radius: detectors must lie outside the image");

    auto& p = c.phantom;
    p.kind = phantom_kind_from_string(r.one_of("phantom.kind", {"piecewise", "smooth_disc", "vascular"}));
    p.seed = static_cast<std::uint64_t>(r.integer("phantom.seed", 0));
    p.r_frac = r.positive("phantom.r_frac");
    if (p.r_frac > 0.5) throw InvalidConfig("phantom.r_frac: must be <= 0.5");
    p.decay = r.nonneg("phantom.decay");
    p.file = r.str("phantom.file");
    if (!p.file.empty() && !std::filesystem::exists(p.file))
        throw InvalidConfig("phantom.file: '" + p.file + "' does not exist");
    p.vessel_seed = static_cast<std::uint64_t>(r.integer("phantom.vessel_seed", 0));
    p.threshold = r.nonneg("phantom.threshold");
    if (p.threshold >= 1.0) throw InvalidConfig("phantom.threshold: must be < 1");
    if (p.kind == PhantomKind::piecewise_constant && g.n * g.sim_factor < 64)
        throw InvalidConfig("geometry.n: the piecewise phantom needs a simulation grid of at least 64x64");

    auto& s = c.signal;
    s.f_c = r.positive("signal.f_c");
    if (s.f_c >= 0.5 / g.dt) throw InvalidConfig("signal.f_c: at or above the Nyquist frequency of geometry.dt");
    s.bandwidth = r.positive("signal.bandwidth");
    s.delay = r.nonneg("signal.delay");
    s.mismatch = r.num("signal.mismatch");
    if (!(s.mismatch > -1.0)) throw InvalidConfig("signal.mismatch: must be > -1");
    const Json& src = r.at("signal.source");
    if (!src.is_array() || src.size() != 2 || !src[0].is_number() || !src[1].is_number())
        throw InvalidConfig("signal.source: expected [x, y]");
    s.source = {src[0].get<double>(), src[1].get<double>()};
    s.eps = r.positive("signal.eps");
    s.noise_rel = r.nonneg("signal.noise_rel");
    s.noise_seed = static_cast<std::uint64_t>(r.integer("signal.noise_seed", 0));
    s.inverse_crime = r.boolean("signal.inverse_crime");

    auto& m = c.method;
    m.name = r.one_of("method.name", method_names());
    m.fbp_calibration_radius_px = r.nonneg("method.fbp.calibration_radius_px");
    m.lst_alpha = r.positive("method.lst.alpha");
    m.cg_tol = r.positive("method.lst.cg_tol");
    m.cg_maxiter = static_cast<int>(r.integer("method.lst.cg_maxiter", 1));
    m.tv_alpha = r.nonneg("method.tv.alpha");
    m.tgv_alpha = r.nonneg("method.tgv.alpha");
    m.tgv_beta = r.positive("method.tgv.beta");
    m.wavelet_alpha = r.nonneg("method.wavelet.alpha");
    m.wavelet_levels = static_cast<int>(r.integer("method.wavelet.levels", 1));
    if (m.name == "wavelet" && g.n % (std::size_t(1) << m.wavelet_levels) != 0)
        throw InvalidConfig("method.wavelet.levels: geometry.n must be divisible by 2^levels");

    auto& sv = c.solver;
    sv.ratio = r.positive("solver.ratio");
    sv.theta = r.num("solver.theta");
    if (sv.theta < 0.0 || sv.theta > 1.0) throw InvalidConfig("solver.theta: must lie in [0, 1]");
    sv.stop.tol_gap = r.nonneg("solver.tol_gap");
    sv.stop.tol_res = r.nonneg("solver.tol_res");
    sv.stop.max_iter = static_cast<int>(r.integer("solver.max_iter", 1));
    sv.stop.ergodic = r.boolean("solver.ergodic");
    sv.norm_iters = static_cast<int>(r.integer("solver.norm_iters", 1));

    c.evaluate.psnr = psnr_convention_from_string(r.one_of("evaluate.psnr_convention", {"linear_peak", "standard"}));
    c.evaluate.roc_thresholds = static_cast<int>(r.integer("evaluate.roc_thresholds", 2));

    auto& sw = c.sweep;
    sw.axis = r.one_of("sweep.axis", sweep_axes());
    const Json& vals = r.at("sweep.values");
    if (!vals.is_array()) throw InvalidConfig("sweep.values: expected a list");
    for (std::size_t k = 0; k < vals.size(); ++k) {
        if (!vals[k].is_number()) throw InvalidConfig("sweep.values[" + std::to_string(k) + "]: expected a number");
        sw.values.push_back(vals[k].get<double>());
    }
    const Json& ms = r.at("sweep.methods");
    if (!ms.is_array() || ms.empty()) throw InvalidConfig("sweep.methods: expected a non-empty list");
    for (std::size_t k = 0; k < ms.size(); ++k) {
        const std::string path = "sweep.methods[" + std::to_string(k) + "]";
        if (!ms[k].is_string()) throw InvalidConfig(path + ": expected a string");
        const std::string name = ms[k].get<std::string>();
        if (std::find(method_names().begin(), method_names().end(), name) == method_names().end())
            throw InvalidConfig(path + ": unknown method '" + name + "'");
        sw.methods.push_back(name);
    }
    sw.workers = static_cast<int>(r.integer("sweep.workers", 1));

    c.output.dir = r.str("output.dir");
    if (c.output.dir.empty()) throw InvalidConfig("output.dir: must not be empty");
    c.output.pgm = r.boolean("output.pgm");
    c.output.cache = r.str("output.cache");
    return c;
}

/// Defaults, then the optional file, then each --set override in order.
inline ExperimentConfig resolve_config(const std::string& file, const std::vector<std::string>& sets) {
    Json cfg = default_config();
    if (!file.empty()) cfg = merge_config(cfg, load_config_file(file));
    for (const auto& kv : sets) apply_set(cfg, kv);
    return parse_config(cfg);
}

inline std::uint64_t hash_json(const Json& j) {
    Fnv1a h;
    h.add(std::string_view(j.dump()));
    return h.value();
}

}  // namespace pact
