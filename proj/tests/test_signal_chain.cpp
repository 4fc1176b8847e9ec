#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "pact/fft.hpp"
#include "pact/forward_operator.hpp"
#include "pact/phantoms.hpp"
#include "pact/signal_chain.hpp"

using namespace pact;

namespace {

double rel_l2(std::span<const double> a, std::span<const double> b) { return vec::dist2(a, b) / vec::norm2(b); }

// Direct O(n^2) DFT magnitude at bin k.
double dft_mag(std::span<const double> x, std::size_t n, std::size_t k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) s += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / n);
    return std::abs(s);
}

struct SmallScene {
    ImageGrid grid = ImageGrid::centered(64, 64, 1e-4);
    DetectorSet det = build_arc_detectors({0, 0}, 8e-3, 360.0, 8);
    TimeSampling ts{2e-6, 5e-8, 320};
    AcousticConfig ac{1500.0};
};

}  // namespace

TEST(Pulse, ShapeAndPeak) {
    const TimeSampling ts(5e-8, 5e-8, 100);
    const auto c = synth_calibration_pulse(ts, 7.5e6, 0.8, 4e-7);
    ASSERT_GT(c.samples.size(), 8u);
    EXPECT_NEAR(c.samples[8], 0.0, 1e-12);  // t = delay
    double mx = 0.0;
    for (double v : c.samples) mx = std::max(mx, std::abs(v));
    EXPECT_DOUBLE_EQ(mx, 1.0);
}

TEST(Pulse, SpectralPeakNearCentreFrequency) {
    const TimeSampling ts(5e-9, 5e-9, 100);
    const auto c = synth_calibration_pulse(ts, 7.5e6, 0.1, 2e-6);
    const std::size_t n = 8192;
    std::size_t best = 0;
    double bm = 0.0;
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double m = dft_mag(c.samples, n, k);
        if (m > bm) bm = m, best = k;
    }
    const double bin = 1.0 / (n * ts.dt);
    EXPECT_LE(std::abs(best * bin - 7.5e6), bin);
}

TEST(Pulse, NarrowBandwidthConcentratesEnergy) {
    const TimeSampling ts(5e-9, 5e-9, 100);
    const auto c = synth_calibration_pulse(ts, 7.5e6, 0.01, 4e-5, {}, 1u << 15);
    const std::size_t n = c.samples.size();
    // power spectrum ~ exp(-(f - f_c)^2 / sf^2), sf = bandwidth_frac * f_c
    const double sf = 0.01 * 7.5e6, bin = 1.0 / (n * ts.dt);
    double wide = 0.0, narrow = 0.0, total = 0.0;
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double m = dft_mag(c.samples, n, k), off = std::abs(k * bin - 7.5e6);
        total += m * m;
        if (off <= 2.0 * sf) wide += m * m;
        if (off <= 0.5 * sf) narrow += m * m;
    }
    EXPECT_GT(wide / total, 0.95);
    EXPECT_LT(narrow / total, 0.7);
}

TEST(Pulse, Errors) {
    const TimeSampling ts(5e-8, 5e-8, 10);
    EXPECT_THROW(synth_calibration_pulse(ts, 1e7, 0.5, 0.0), InvalidConfig);
    EXPECT_THROW(synth_calibration_pulse(ts, 2e7, 0.5, 0.0), InvalidConfig);
    EXPECT_THROW(synth_calibration_pulse(ts, 5e6, 0.0, 0.0), InvalidConfig);
}

TEST(Simulate, ZeroImageGivesZeroPressure) {
    SmallScene s;
    const auto K = assemble_K(s.grid, s.det, s.ts, s.ac);
    const auto cal = synth_calibration_pulse(s.ts, 7.5e6, 0.8, 0.0);
    const auto p = simulate_pressure(Image(64, 64), K, cal, s.det, s.ts, s.ac);
    for (double v : p.values()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(p.unit(), SeriesUnit::pressure);
}

TEST(Simulate, UnitImpulseReproducesScaledTrace) {
    SmallScene s;
    const auto ph = phantom_smooth_disc(s.grid, 0.3, 100.0);

    // x_p on the detector: the geometric factor is 0.
    const DetectorSet one({s.det[0]}, s.det.provenance());
    const auto K1 = assemble_K(s.grid, one, s.ts, s.ac);
    const auto p0 = simulate_pressure(ph.image, K1, CalibrationPulse::unit_impulse(s.ts.dt, one[0]), one, s.ts, s.ac);
    for (double v : p0.values()) EXPECT_EQ(v, 0.0);

    // |x_d - x_p| = 1 m: p(t) = g(t - 1/c0). With c0 = 1/dt per metre the
    // shift is exactly one sample.
    const AcousticConfig fast(1.0 / s.ts.dt);
    const Vec2 xp = one[0] + Vec2{1.0, 0.0};
    const auto p1 = simulate_pressure(ph.image, K1, CalibrationPulse::unit_impulse(s.ts.dt, xp), one, s.ts, fast);
    const auto Ku1 = K1.apply(ph.image.values());
    for (std::size_t k = 1; k < s.ts.nt; ++k)
        EXPECT_NEAR(p1.values()[k], Ku1[k - 1] / s.ts.time(k - 1), 1e-12 * (1 + std::abs(p1.values()[k])));
}

TEST(Simulate, TimeOfFlightOfSinglePixel) {
    SmallScene s;
    const auto fine = s.grid.refined(2);
    const auto K = assemble_K(fine, s.det, s.ts, s.ac);
    Image u(fine.nx(), fine.ny());
    const std::size_t i = 70, j = 40;
    u(i, j) = 1.0;
    const auto cal = synth_calibration_pulse(s.ts, 7.5e6, 0.8, 0.0, {0, 0});
    const auto p = simulate_pressure(u, K, cal, s.det, s.ts, s.ac);
    for (std::size_t d = 0; d < s.det.size(); ++d) {
        const auto tr = p.trace(d);
        double peak = 0.0;
        for (double v : tr) peak = std::max(peak, std::abs(v));
        std::size_t first = 0;
        while (first < tr.size() && std::abs(tr[first]) < 1e-9 * peak) ++first;
        const double retard = distance(s.det[d], cal.source) / s.ac.c0;
        // support of the bilinear hat starts one fine pixel before the centre
        const double tof = (distance(s.det[d], fine.world_of(i, j)) - fine.h()) / s.ac.c0 + retard;
        EXPECT_NEAR(s.ts.time(first), tof, 2 * s.ts.dt) << "detector " << d;
    }
}

TEST(Simulate, RequiresPositiveFirstTime) {
    SmallScene s;
    const TimeSampling ts0(0.0, 5e-8, 320);
    const auto K = assemble_K(s.grid, s.det, ts0, s.ac);
    const auto cal = synth_calibration_pulse(ts0, 7.5e6, 0.8, 0.0);
    EXPECT_THROW(simulate_pressure(Image(64, 64), K, cal, s.det, ts0, s.ac), InvalidConfig);
}

TEST(Noise, ZeroSigmaAndDeterminism) {
    SmallScene s;
    MeasurementSeries p(s.det.size(), s.ts, SeriesUnit::pressure);
    for (std::size_t k = 0; k < p.values().size(); ++k) p.values()[k] = std::sin(0.01 * k);
    EXPECT_EQ(add_noise(p, 0.0, 3), p);
    EXPECT_EQ(add_noise(p, 0.5, 3), add_noise(p, 0.5, 3));
    EXPECT_NE(add_noise(p, 0.5, 3), add_noise(p, 0.5, 4));
    EXPECT_THROW(add_noise(p, -1.0, 3), InvalidConfig);
}

TEST(Noise, EmpiricalStandardDeviation) {
    const TimeSampling ts(1.0, 1.0, 1000);
    MeasurementSeries p(100, ts, SeriesUnit::pressure);
    const auto q = add_noise(p, 0.3, 17);
    double s2 = 0.0, m = 0.0;
    for (double v : q.values()) m += v;
    m /= q.values().size();
    for (double v : q.values()) s2 += (v - m) * (v - m);
    const double sd = std::sqrt(s2 / (q.values().size() - 1));
    EXPECT_NEAR(sd, 0.3, 0.02 * 0.3);
}

TEST(Deconvolve, UnitImpulse) {
    const TimeSampling ts(1e-6, 1e-7, 64);
    MeasurementSeries p(3, ts, SeriesUnit::pressure);
    for (std::size_t k = 0; k < p.values().size(); ++k) p.values()[k] = std::cos(0.37 * k) + 0.1 * k;
    const auto imp = CalibrationPulse::unit_impulse(ts.dt, {});
    const auto a = deconvolve(p, imp, 1e-12);
    EXPECT_LE(rel_l2(a.values(), p.values()), 1e-9);
    const auto b = deconvolve(p, imp, 1.0);
    for (std::size_t k = 0; k < p.values().size(); ++k) EXPECT_NEAR(b.values()[k], 0.5 * p.values()[k], 1e-12);
    EXPECT_EQ(b.unit(), SeriesUnit::deconvolved);
    EXPECT_THROW(deconvolve(p, imp, 0.0), InvalidConfig);
}

TEST(Deconvolve, RoundTripOfForwardConvolution) {
    const TimeSampling ts(5e-8, 5e-8, 400);
    const auto cal = synth_calibration_pulse(ts, 7.5e6, 0.8, 0.0);
    MeasurementSeries g(2, ts, SeriesUnit::pressure), p(2, ts, SeriesUnit::pressure);
    for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t k = 0; k < ts.nt; ++k) {
            const double t = (double(k) - 150.0 - 40.0 * d) / 25.0;
            g.trace(d)[k] = std::exp(-t * t) * (1.0 + 0.3 * t);
        }
    for (std::size_t d = 0; d < 2; ++d) {
        std::vector<double> k(cal.samples);
        for (double& v : k) v *= ts.dt;
        const auto c = linear_convolution(g.trace(d), k);
        std::copy_n(c.begin(), ts.nt, p.trace(d).begin());
    }
    const auto r = deconvolve(p, cal, 1e-6);
    EXPECT_LE(rel_l2(r.values(), g.values()), 1e-2);
}

TEST(ScaleToF, ZeroAndClosedForm) {
    const TimeSampling ts(1e-6, 1e-7, 50);
    const auto det = build_arc_detectors({0, 0}, 1.0, 360.0, 2);
    const AcousticConfig ac(1e12);  // negligible retarded-time shift
    auto cal = CalibrationPulse::unit_impulse(ts.dt, {0, 0});
    MeasurementSeries z(2, ts, SeriesUnit::deconvolved);
    const auto fz = scale_to_f(z, det, cal, ts, ac);
    for (double v : fz.values()) EXPECT_EQ(v, 0.0);
    MeasurementSeries one(2, ts, SeriesUnit::deconvolved, std::vector<double>(100, 1.0));
    const auto f = scale_to_f(one, det, cal, ts, ac);
    EXPECT_EQ(f.unit(), SeriesUnit::preprocessed);
    for (std::size_t k = 0; k + 1 < ts.nt; ++k) EXPECT_NEAR(f.trace(1)[k], ts.time(k), 1e-15);

    cal.source = det[0];
    EXPECT_THROW(scale_to_f(one, det, cal, ts, ac), InvalidGeometry);
}

TEST(Chain, RecoversKuOnSmoothDisc) {
    SmallScene s;
    const auto fine = s.grid.refined(2);
    const TimeSampling ts(2e-6, 5e-8, 480);
    const auto Kf = assemble_K(fine, s.det, ts, s.ac);
    const auto ph = phantom_smooth_disc(fine, 0.35, 300.0);
    const auto sim = synth_calibration_pulse(ts, 7.5e6 * 1.05, 0.8 * 1.05, 0.0);
    const auto rec = synth_calibration_pulse(ts, 7.5e6, 0.8, 0.0);
    const auto p = simulate_pressure(ph.image, Kf, sim, s.det, ts, s.ac);
    const auto f = scale_to_f(deconvolve(p, rec, 1e-6), s.det, rec, ts, s.ac);
    EXPECT_LE(rel_l2(f.values(), Kf.apply(ph.image.values())), 5e-2);
}

TEST(Chain, LinearInImageAndAdditiveNoise) {
    SmallScene s;
    const auto K = assemble_K(s.grid, s.det, s.ts, s.ac);
    const auto cal = synth_calibration_pulse(s.ts, 7.5e6, 0.8, 0.0);
    const auto ph = phantom_smooth_disc(s.grid, 0.3, 200.0);
    Image u2 = ph.image;
    for (double& v : u2.values()) v *= 3.0;
    auto chain = [&](const Image& u, double sigma) {
        auto p = add_noise(simulate_pressure(u, K, cal, s.det, s.ts, s.ac), sigma, 9);
        return scale_to_f(deconvolve(p, cal, 1e-3), s.det, cal, s.ts, s.ac);
    };
    const auto a = chain(ph.image, 0.0), b = chain(u2, 0.0);
    std::vector<double> a3(a.values().begin(), a.values().end());
    for (double& v : a3) v *= 3.0;
    EXPECT_LE(rel_l2(b.values(), a3), 1e-10);

    const auto na = chain(ph.image, 0.2), nb = chain(u2, 0.2);
    for (std::size_t k = 0; k < a.values().size(); ++k)
        EXPECT_NEAR(na.values()[k] - a.values()[k], nb.values()[k] - b.values()[k], 1e-9);
}

TEST(SeriesIo, CsvAndBinaryRoundTrip) {
    const TimeSampling ts(1e-6, 5e-8, 7);
    MeasurementSeries m(3, ts, SeriesUnit::preprocessed, 0xabcdefull);
    for (std::size_t k = 0; k < 21; ++k) m.values()[k] = std::sin(1.3 * k) * 1e-7 + 1.0 / 3.0;
    std::stringstream ss;
    write_series_csv(ss, m);
    EXPECT_EQ(read_series_csv(ss), m);

    const auto path = (std::filesystem::temp_directory_path() / "pact_series.bin").string();
    save_series(path, m);
    EXPECT_EQ(load_series(path), m);
    std::filesystem::remove(path);

    std::stringstream bad("not a series\n1,2,3\n");
    EXPECT_THROW(read_series_csv(bad), IoError);
}
