#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pact/geometry.hpp"
#include "pact/hash.hpp"
#include "pact/rng.hpp"

using namespace pact;

namespace {
double angle_deg(Vec2 p) {
    double a = std::atan2(p.y, p.x) * 180.0 / std::numbers::pi;
    return a < 0 ? a + 360.0 : a;
}
}  // namespace

TEST(ImageGrid, RejectsEmptyOrBadPitch) {
    EXPECT_THROW(ImageGrid(0, 4, 1.0, {}), InvalidGeometry);
    EXPECT_THROW(ImageGrid(4, 4, 0.0, {}), InvalidGeometry);
    EXPECT_THROW(ImageGrid(4, 4, -1.0, {}), InvalidGeometry);
}

TEST(ImageGrid, WorldOfIsPixelCentreAndInverts) {
    const ImageGrid g(7, 5, 0.25, {1.0, -2.0});
    EXPECT_EQ(g.world_of(0, 0), (Vec2{1.0, -2.0}));
    EXPECT_EQ(g.world_of(2, 3), (Vec2{1.75, -1.5}));
    for (std::size_t i = 0; i < g.ny(); ++i)
        for (std::size_t j = 0; j < g.nx(); ++j) {
            const auto ij = g.index_of(g.world_of(i, j));
            ASSERT_TRUE(ij.has_value());
            EXPECT_EQ(ij->first, i);
            EXPECT_EQ(ij->second, j);
        }
    EXPECT_FALSE(g.index_of({-5.0, 0.0}).has_value());
}

TEST(ImageGrid, CenteredAndRefinedShareExtent) {
    const auto g = ImageGrid::centered(128, 128, 1e-4);
    EXPECT_NEAR(g.center().x, 0.0, 1e-15);
    EXPECT_NEAR(g.center().y, 0.0, 1e-15);
    const auto f = g.refined(2);
    EXPECT_EQ(f.nx(), 256u);
    EXPECT_DOUBLE_EQ(f.h(), 5e-5);
    EXPECT_NEAR(f.origin().x - 0.5 * f.h(), g.origin().x - 0.5 * g.h(), 1e-15);
}

TEST(TimeSampling, Validation) {
    EXPECT_THROW(TimeSampling(-1.0, 1.0, 4), InvalidConfig);
    EXPECT_THROW(TimeSampling(0.0, 0.0, 4), InvalidConfig);
    EXPECT_THROW(TimeSampling(0.0, 1.0, 0), InvalidConfig);
    const TimeSampling ts(1e-6, 5e-8, 10);
    EXPECT_DOUBLE_EQ(ts.time(2), 1.1e-6);
    EXPECT_THROW(AcousticConfig(0.0), InvalidConfig);
}

TEST(ArcDetectors, FullCircleOfFour) {
    const auto d = build_arc_detectors({0, 0}, 1.0, 360.0, 4);
    ASSERT_EQ(d.size(), 4u);
    const double want[] = {0, 90, 180, 270};
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(angle_deg(d[k]), want[k], 1e-12);
        EXPECT_NEAR(norm(d[k]), 1.0, 1e-15);
    }
}

TEST(ArcDetectors, SixtyFourOverOneSeventyTwoDegrees) {
    const auto d = build_arc_detectors({0, 0}, 0.02, 172.0, 64);
    ASSERT_EQ(d.size(), 64u);
    EXPECT_NEAR(angle_deg(d[0]), 0.0, 1e-12);
    EXPECT_NEAR(angle_deg(d[63]), 172.0, 1e-10);
    for (std::size_t k = 1; k < 64; ++k) EXPECT_NEAR(angle_deg(d[k]) - angle_deg(d[k - 1]), 172.0 / 63.0, 1e-10);
}

TEST(ArcDetectors, SingleDetectorAtMidpoint) {
    const auto d = build_arc_detectors({0, 0}, 2.0, 90.0, 1, 30.0);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NEAR(angle_deg(d[0]), 75.0, 1e-12);
}

TEST(ArcDetectors, Errors) {
    EXPECT_THROW(build_arc_detectors({0, 0}, 0.0, 90.0, 4), InvalidGeometry);
    EXPECT_THROW(build_arc_detectors({0, 0}, 1.0, 90.0, 0), InvalidGeometry);
    EXPECT_THROW(build_arc_detectors({0, 0}, 1.0, 0.0, 4), InvalidGeometry);
    EXPECT_THROW(build_arc_detectors({0, 0}, 1.0, 400.0, 4), InvalidGeometry);
}

TEST(RotationSchedule, SixRotationsGiveThreeEightyFour) {
    const auto base = build_arc_detectors({0, 0}, 0.02, 172.0, 64);
    const auto all = apply_rotation_schedule(base, 6, 60.0);
    EXPECT_EQ(all.size(), 384u);
    EXPECT_EQ(all.provenance().rotations, 6u);
}

TEST(RotationSchedule, IdentityAndSymmetry) {
    const auto base = build_arc_detectors({0, 0}, 0.02, 172.0, 8);
    const auto same = apply_rotation_schedule(base, 1, 60.0);
    EXPECT_EQ(same.positions(), base.positions());

    const auto two = build_arc_detectors({0, 0}, 1.0, 360.0, 2);
    const auto four = apply_rotation_schedule(two, 2, 90.0);
    ASSERT_EQ(four.size(), 4u);
    const double want[] = {0, 180, 90, 270};
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(angle_deg(four[k]), want[k], 1e-12);
}

TEST(RotationSchedule, DuplicatePositionsRejected) {
    const auto two = build_arc_detectors({0, 0}, 1.0, 360.0, 2);
    EXPECT_THROW(apply_rotation_schedule(two, 2, 180.0), InvalidGeometry);
}

TEST(RotationSchedule, PreservesPairwiseDistances) {
    const auto base = build_arc_detectors({0.001, -0.002}, 0.02, 172.0, 16, 13.0);
    const auto all = apply_rotation_schedule(base, 5, 37.0);
    for (std::size_t k = 0; k < 5; ++k)
        for (std::size_t a = 0; a < 16; ++a)
            for (std::size_t b = 0; b < 16; ++b)
                EXPECT_NEAR(distance(all[k * 16 + a], all[k * 16 + b]), distance(base[a], base[b]), 1e-12);
}

TEST(Subsample, UniformInAngle) {
    const auto all = apply_rotation_schedule(build_arc_detectors({0, 0}, 0.02, 172.0, 64), 6, 60.0);
    for (std::size_t n : {16u, 32u, 64u, 192u, 384u}) {
        const auto s = subsample_uniform(all, n);
        ASSERT_EQ(s.size(), n);
        EXPECT_EQ(s.provenance().subsample, n);
    }
    const auto s16 = subsample_uniform(all, 16);
    double prev = -1.0;
    for (const auto& p : s16.positions()) {
        const double a = angle_deg(p);
        EXPECT_GT(a, prev);
        prev = a;
    }
    EXPECT_THROW(subsample_uniform(all, 0), InvalidGeometry);
    EXPECT_THROW(subsample_uniform(all, 385), InvalidGeometry);
}

TEST(Hash, NegativeZeroAndOrderSensitivity) {
    Fnv1a a, b, c;
    a.add(0.0);
    b.add(-0.0);
    EXPECT_EQ(a.value(), b.value());
    a.add(1.0);
    a.add(2.0);
    c.add(0.0);
    c.add(2.0);
    c.add(1.0);
    EXPECT_NE(a.value(), c.value());
}

TEST(Rng, SeededStreamsRepeat) {
    Rng a(42), b(42), c(43);
    for (int k = 0; k < 100; ++k) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
        (void)c.normal();
    }
    Rng d(42);
    EXPECT_NE(d.uniform(), Rng(43).uniform());
}
