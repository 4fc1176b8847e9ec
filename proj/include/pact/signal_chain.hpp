#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pact/fft.hpp"
#include "pact/geometry.hpp"
#include "pact/hash.hpp"
#include "pact/rng.hpp"
#include "pact/sparse_operator.hpp"

namespace pact {

/// Stage of a measurement in the acquisition/preprocessing chain:
/// pressure -> deconvolved (f_t) -> preprocessed (f, the data of K u = f).
enum class SeriesUnit { pressure, deconvolved, preprocessed };

inline const char* to_string(SeriesUnit u) {
    switch (u) {
        case SeriesUnit::pressure: return "pressure";
        case SeriesUnit::deconvolved: return "deconvolved";
        case SeriesUnit::preprocessed: return "preprocessed-f";
    }
    return "?";
}

inline SeriesUnit series_unit_from_string(const std::string& s) {
    if (s == "pressure") return SeriesUnit::pressure;
    if (s == "deconvolved") return SeriesUnit::deconvolved;
    if (s == "preprocessed-f") return SeriesUnit::preprocessed;
    throw IoError("unknown series unit tag '" + s + "'");
}

inline std::uint64_t detector_key(const DetectorSet& det) {
    Fnv1a h;
    h.add(static_cast<std::uint64_t>(det.size()));
    for (const Vec2& p : det.positions()) {
        h.add(p.x);
        h.add(p.y);
    }
    return h.value();
}

/// Detector-by-time samples. Row d holds the trace of detector d; the flat
/// layout matches the row ordering of the forward operator.
class MeasurementSeries {
public:
    MeasurementSeries() = default;
    MeasurementSeries(std::size_t detectors, TimeSampling ts, SeriesUnit unit, std::uint64_t det_key = 0)
        : nd_(detectors), ts_(ts), unit_(unit), det_key_(det_key), v_(detectors * ts.nt, 0.0) {}
    MeasurementSeries(std::size_t detectors, TimeSampling ts, SeriesUnit unit, std::vector<double> values,
                      std::uint64_t det_key = 0)
        : nd_(detectors), ts_(ts), unit_(unit), det_key_(det_key), v_(std::move(values)) {
        require_size(v_.size(), nd_ * ts_.nt, "MeasurementSeries");
    }

    std::size_t detectors() const { return nd_; }
    const TimeSampling& sampling() const { return ts_; }
    SeriesUnit unit() const { return unit_; }
    std::uint64_t detector_key() const { return det_key_; }

    std::span<double> trace(std::size_t d) { return {v_.data() + d * ts_.nt, ts_.nt}; }
    std::span<const double> trace(std::size_t d) const { return {v_.data() + d * ts_.nt, ts_.nt}; }
    std::span<double> values() { return v_; }
    std::span<const double> values() const { return v_; }

    friend bool operator==(const MeasurementSeries&, const MeasurementSeries&) = default;

private:
    std::size_t nd_ = 0;
    TimeSampling ts_;
    SeriesUnit unit_ = SeriesUnit::pressure;
    std::uint64_t det_key_ = 0;
    std::vector<double> v_;
};

/// System response to a point absorber at `source`, sampled at lags n*dt,
/// n = 0..size-1. Convolutions use dt * samples, so a unit impulse has a
/// single sample of 1/dt.
struct CalibrationPulse {
    std::vector<double> samples;
    double dt = 1.0;
    double center_frequency = 0.0;
    double bandwidth_frac = 0.0;
    double delay = 0.0;
    Vec2 source;

    static CalibrationPulse unit_impulse(double dt, Vec2 source) {
        CalibrationPulse c;
        c.samples = {1.0 / dt};
        c.dt = dt;
        c.source = source;
        return c;
    }

    void validate() const {
        double e = 0.0;
        for (double v : samples) {
            if (!std::isfinite(v)) throw InvalidInput("CalibrationPulse: non-finite sample");
            e += v * v;
        }
        if (!(e > 0.0)) throw InvalidInput("CalibrationPulse: pulse is identically zero");
        if (!(dt > 0.0)) throw InvalidInput("CalibrationPulse: dt must be > 0");
    }
};

/// Gaussian-modulated sinusoid exp(-(t-delay)^2 / (2 sg^2)) sin(2 pi f_c (t-delay))
/// with sg = 1 / (2 pi bandwidth_frac f_c), i.e. a spectral standard
/// deviation of bandwidth_frac * f_c. Sampled until the envelope falls below
/// 1e-12 (at most `max_samples`), scaled to unit peak magnitude.
inline CalibrationPulse synth_calibration_pulse(const TimeSampling& ts, double f_c, double bandwidth_frac,
                                                double delay, Vec2 source = {},
                                                std::size_t max_samples = 1u << 16) {
    if (!(f_c > 0.0)) throw InvalidConfig("calibration pulse: center frequency must be > 0");
    if (f_c >= 0.5 / ts.dt)
        throw InvalidConfig("calibration pulse: center frequency at or above the Nyquist frequency");
    if (!(bandwidth_frac > 0.0)) throw InvalidConfig("calibration pulse: bandwidth_frac must be > 0");
    if (!(delay >= 0.0)) throw InvalidConfig("calibration pulse: delay must be >= 0");

    const double sg = 1.0 / (2.0 * std::numbers::pi * bandwidth_frac * f_c);
    const double t_stop = delay + sg * std::sqrt(2.0 * std::log(1e12));
    const auto n = std::min<std::size_t>(max_samples, static_cast<std::size_t>(std::ceil(t_stop / ts.dt)) + 1);

    CalibrationPulse c;
    c.dt = ts.dt;
    c.center_frequency = f_c;
    c.bandwidth_frac = bandwidth_frac;
    c.delay = delay;
    c.source = source;
    c.samples.resize(n);
    double peak = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * ts.dt - delay;
        c.samples[k] = std::exp(-t * t / (2.0 * sg * sg)) * std::sin(2.0 * std::numbers::pi * f_c * t);
        peak = std::max(peak, std::abs(c.samples[k]));
    }
    if (!(peak > 0.0)) throw InvalidConfig("calibration pulse: sampled pulse is zero");
    for (double& v : c.samples) v /= peak;
    return c;
}

namespace detail {

// Linear interpolation of samples x at fractional index s; zero outside.
inline double sample_linear(std::span<const double> x, double s) {
    if (!(s >= 0.0) || s > static_cast<double>(x.size() - 1)) return 0.0;
    const auto k = static_cast<std::size_t>(std::floor(s));
    if (k + 1 >= x.size()) return x[k];
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * x[k] + w * x[k + 1];
}

inline void require_positive_times(const TimeSampling& ts, const char* who) {
    if (ts.t0 < ts.dt)
        throw InvalidConfig(std::string(who) + ": the first sample time must be >= dt (1/t is singular at t = 0)");
}

}  // namespace detail

/// Synthetic pressure traces from the circle integrals Ku (row d * nt + k)
/// of the true image, usually computed on a finer grid:
///   g(t) = (K u)(t) / t
///   p(t) = |x_d - x_p| * (g *_t cal)(t - |x_d - x_p| / c0)
/// The convolution is linear (zero padded) and scaled by dt; the retarded
/// time is applied by linear interpolation.
inline MeasurementSeries simulate_pressure(std::span<const double> Ku, const CalibrationPulse& cal,
                                           const DetectorSet& det, const TimeSampling& ts, const AcousticConfig& ac) {
    detail::require_positive_times(ts, "simulate_pressure");
    cal.validate();
    require_size(Ku.size(), det.size() * ts.nt, "simulate_pressure data");

    MeasurementSeries p(det.size(), ts, SeriesUnit::pressure, detector_key(det));
    const std::size_t nt = ts.nt, L = cal.samples.size();
    std::vector<double> g(nt), conv(nt + L - 1);
    for (std::size_t d = 0; d < det.size(); ++d) {
        for (std::size_t k = 0; k < nt; ++k) g[k] = Ku[d * nt + k] / ts.time(k);
        std::fill(conv.begin(), conv.end(), 0.0);
        for (std::size_t m = 0; m < nt; ++m) {
            if (g[m] == 0.0) continue;
            const double gm = g[m] * ts.dt;
            for (std::size_t l = 0; l < L; ++l) conv[m + l] += gm * cal.samples[l];
        }
        const double dist = distance(det[d], cal.source);
        const double shift = dist / ac.c0 / ts.dt;
        auto out = p.trace(d);
        for (std::size_t k = 0; k < nt; ++k)
            out[k] = dist * detail::sample_linear(conv, static_cast<double>(k) - shift);
    }
    return p;
}

inline MeasurementSeries simulate_pressure(const Image& u_true, const SparseOperator& K_fine,
                                           const CalibrationPulse& cal, const DetectorSet& det,
                                           const TimeSampling& ts, const AcousticConfig& ac) {
    require_size(K_fine.rows(), det.size() * ts.nt, "simulate_pressure operator rows");
    require_size(u_true.size(), K_fine.cols(), "simulate_pressure image");
    return simulate_pressure(K_fine.apply(u_true.values()), cal, det, ts, ac);
}

/// Adds i.i.d. N(0, sigma^2) noise; deterministic for a given seed.
inline MeasurementSeries add_noise(const MeasurementSeries& p, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw InvalidConfig("add_noise: sigma must be >= 0");
    MeasurementSeries out = p;
    if (sigma == 0.0) return out;
    Rng rng(seed);
    for (double& v : out.values()) v += sigma * rng.normal();
    return out;
}

/// Regularized deconvolution, per detector:
///   f_t = IDFT[ P conj(C) / (|C|^2 + eps * max|C|^2) ]
/// with C the DFT of dt * cal, both zero padded to cover the linear
/// convolution length. `eps` is relative to the pulse's peak spectral power.
inline MeasurementSeries deconvolve(const MeasurementSeries& p, const CalibrationPulse& cal, double eps) {
    if (!(eps > 0.0)) throw InvalidConfig("deconvolve: eps must be > 0");
    cal.validate();
    const std::size_t nt = p.sampling().nt;
    RealFft fft(fft_friendly_size(nt + cal.samples.size() - 1));
    std::vector<double> kernel(cal.samples);
    for (double& v : kernel) v *= cal.dt;
    const auto C = fft.forward(kernel);
    double cmax = 0.0;
    for (const auto& c : C) cmax = std::max(cmax, std::norm(c));
    const double reg = eps * cmax;
    std::vector<std::complex<double>> H(C.size());
    for (std::size_t k = 0; k < C.size(); ++k) H[k] = std::conj(C[k]) / (std::norm(C[k]) + reg);

    MeasurementSeries out(p.detectors(), p.sampling(), SeriesUnit::deconvolved, p.detector_key());
    for (std::size_t d = 0; d < p.detectors(); ++d) {
        auto P = fft.forward(p.trace(d));
        for (std::size_t k = 0; k < P.size(); ++k) P[k] *= H[k];
        const auto x = fft.inverse(P);
        std::copy_n(x.begin(), nt, out.trace(d).begin());
    }
    return out;
}

/// f(d, t) = f_t(d, t + |x_d - x_p| / c0) * t / |x_d - x_p|: undoes the
/// retarded time and the geometric factor, giving the data of K u = f.
inline MeasurementSeries scale_to_f(const MeasurementSeries& f_t, const DetectorSet& det, const CalibrationPulse& cal,
                                    const TimeSampling& ts, const AcousticConfig& ac) {
    detail::require_positive_times(ts, "scale_to_f");
    require_size(f_t.detectors(), det.size(), "scale_to_f detectors");
    require_size(f_t.sampling().nt, ts.nt, "scale_to_f samples");
    MeasurementSeries f(det.size(), ts, SeriesUnit::preprocessed, detector_key(det));
    for (std::size_t d = 0; d < det.size(); ++d) {
        const double dist = distance(det[d], cal.source);
        if (!(dist > 1e-12)) throw InvalidGeometry("scale_to_f: detector coincides with the calibration source");
        const double shift = dist / ac.c0 / ts.dt;
        const auto in = f_t.trace(d);
        auto out = f.trace(d);
        for (std::size_t k = 0; k < ts.nt; ++k)
            out[k] = detail::sample_linear(in, static_cast<double>(k) + shift) * ts.time(k) / dist;
    }
    return f;
}

// ---------------------------------------------------------------------------
// CSV: two comment lines, then one row per detector.
//   # pact measurement series v1
//   # unit=<tag> t0=<s> dt=<s> nt=<n> detectors=<n> detector_key=<hex>
//   v_0,v_1,...,v_{nt-1}

inline void write_series_csv(std::ostream& os, const MeasurementSeries& m) {
    char buf[64];
    os << "# pact measurement series v1\n";
    os << "# unit=" << to_string(m.unit());
    std::snprintf(buf, sizeof buf, " t0=%.17g dt=%.17g", m.sampling().t0, m.sampling().dt);
    os << buf << " nt=" << m.sampling().nt << " detectors=" << m.detectors()
       << " detector_key=" << hex64(m.detector_key()) << '\n';
    for (std::size_t d = 0; d < m.detectors(); ++d) {
        const auto tr = m.trace(d);
        for (std::size_t k = 0; k < tr.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", tr[k]);
            if (k) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

inline MeasurementSeries read_series_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# pact measurement series", 0) != 0)
        throw IoError("measurement CSV: missing header line");
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw IoError("measurement CSV: missing field line");
    std::istringstream hs(line.substr(2));
    std::string tok, unit;
    double t0 = -1, dt = -1;
    std::size_t nt = 0, nd = 0;
    std::uint64_t key = 0;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "unit") unit = v;
        else if (k == "t0") t0 = std::stod(v);
        else if (k == "dt") dt = std::stod(v);
        else if (k == "nt") nt = std::stoull(v);
        else if (k == "detectors") nd = std::stoull(v);
        else if (k == "detector_key") key = std::stoull(v, nullptr, 16);
    }
    MeasurementSeries m(nd, TimeSampling(t0, dt, nt), series_unit_from_string(unit), key);
    for (std::size_t d = 0; d < nd; ++d) {
        if (!std::getline(is, line)) throw IoError("measurement CSV: expected " + std::to_string(nd) + " rows");
        std::istringstream rs(line);
        auto tr = m.trace(d);
        for (std::size_t k = 0; k < nt; ++k) {
            if (!std::getline(rs, tok, ',')) throw IoError("measurement CSV: short row " + std::to_string(d));
            tr[k] = std::stod(tok);
        }
    }
    return m;
}

// Binary layout: "PACTMS01", u32 unit, u64 detectors, u64 nt, f64 t0, f64 dt,
// u64 detector_key, f64[detectors*nt] values (little-endian).
inline void save_series(const std::string& path, const MeasurementSeries& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("PACTMS01", 8);
    detail::write_pod(os, static_cast<std::uint32_t>(m.unit()));
    detail::write_pod(os, static_cast<std::uint64_t>(m.detectors()));
    detail::write_pod(os, static_cast<std::uint64_t>(m.sampling().nt));
    detail::write_pod(os, m.sampling().t0);
    detail::write_pod(os, m.sampling().dt);
    detail::write_pod(os, m.detector_key());
    os.write(reinterpret_cast<const char*>(m.values().data()), static_cast<std::streamsize>(m.values().size_bytes()));
    if (!os) throw IoError("failed writing: " + path);
}

inline MeasurementSeries load_series(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open measurement file: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "PACTMS01") throw IoError("not a pact measurement file: " + path);
    std::uint32_t unit = 0;
    std::uint64_t nd = 0, nt = 0, key = 0;
    double t0 = 0, dt = 0;
    detail::read_pod(is, unit);
    detail::read_pod(is, nd);
    detail::read_pod(is, nt);
    detail::read_pod(is, t0);
    detail::read_pod(is, dt);
    detail::read_pod(is, key);
    if (unit > 2) throw IoError("bad unit tag in " + path);
    std::vector<double> v;
    detail::read_array(is, v, nd * nt);
    if (!is) throw IoError("truncated measurement file: " + path);
    return MeasurementSeries(nd, TimeSampling(t0, dt, nt), static_cast<SeriesUnit>(unit), std::move(v), key);
}

}  // namespace pact
