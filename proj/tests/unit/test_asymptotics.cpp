#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "droplet/asymptotics.hpp"

using namespace droplet;

namespace {
const Vec3 receiver{1.2, 0.0, 0.0};
}

TEST(Asymptotics, ModeCouplingAndFrequency) {
    const Droplet d({0, 0, 0}, 0.01, 2.0 * pi, 1.0);
    const EigenMode e = modes_l0(d, 3)[2];
    EXPECT_NEAR(mode_frequency(e, d), 2.0 * pi * 2.5, 1e-10);
    EXPECT_NEAR(mode_coupling(e, 1.5), e.avg * e.avg / (4.0 * pi * 1.5 * e.lambda), 1e-18);
}

TEST(Asymptotics, ModeWeightSumTendsToFourOverPi) {
    double s = 0.0;
    for (int n = 1; n <= 5000; ++n) {
        EXPECT_NEAR(unit_ball_mode_weight(n), 8.0 / (pi * pi * pi * (n - 0.5) * (n - 0.5)), 1e-15);
        s += unit_ball_mode_weight(n);
    }
    EXPECT_NEAR(s, 4.0 / pi, 1e-4);
}

TEST(Asymptotics, ExpansionIsLinearInRadius) {
    const PolynomialRampSource src(4, 1.0);
    const Vec3 x{0.3, 0.4, 0.5};
    const Vec3 z{-0.2, 0.0, 0.0};
    const Droplet d1(z, 0.05, 4.0 * pi, 1.0);
    const Droplet d2(z, 0.005, 4.0 * pi, 1.0);
    const auto m1 = modes_l0(d1, 4);
    const auto m2 = modes_l0(d2, 4);
    for (double t : {1.0, 2.2, 3.7}) {
        EXPECT_NEAR(expansion_W_N(m1, d1, src, x, t, 4) / expansion_W_N(m2, d2, src, x, t, 4), 10.0, 1e-9);
    }
}

TEST(Asymptotics, ExpansionIsCausal) {
    const PulsedSource src(1.0);
    const Droplet d({0, 0, 0}, 0.01, 2.0 * pi, 1.0);
    const auto modes = modes_l0(d, 8);
    EXPECT_EQ(expansion_W_N(modes, d, src, receiver, 1.19, 8), 0.0);
    EXPECT_NE(expansion_W_N(modes, d, src, receiver, 1.5, 8), 0.0);
}

TEST(Asymptotics, WindowPreconditionIsEnforced) {
    const PulsedSource src(1.0);
    const Droplet d({0, 0, 0}, 0.01, 2.0 * pi, 1.0);
    const auto modes = modes_l0(d, 4);
    EXPECT_THROW(synthesize_measurement(modes, d, src, receiver, 2.1, 4), std::invalid_argument);
    const PolynomialRampSource ramp(4, 1.0);
    EXPECT_THROW(synthesize_measurement(modes, d, ramp, receiver, 50.0, 4), std::invalid_argument);
    EXPECT_NO_THROW(synthesize_measurement(modes, d, src, receiver, 2.3, 4));
}

TEST(Asymptotics, SynthesizerMatchesDirectTrace) {
    const PulsedSource src(1.0);
    const Droplet d({0.02, -0.05, 0.1}, 0.001, 2.0 * pi, 1.0);
    const auto modes = modes_l0(d, 10);
    const auto direct = synthesize_measurement(modes, d, src, receiver, 3.1, 10, 80);
    const TraceSynthesizer synth(modes, 2.0 * pi, 1.0, receiver, 3.1, 1.0, 80);
    const auto fast = synth.trace(src, d.center());
    ASSERT_EQ(direct.values.size(), 81u);
    ASSERT_EQ(fast.values.size(), 81u);
    double scale = 0.0;
    for (double v : direct.values) {
        scale = std::max(scale, std::abs(v));
    }
    for (std::size_t k = 0; k < direct.values.size(); ++k) {
        EXPECT_NEAR(fast.values[k], direct.values[k], 1e-7 * scale);
        EXPECT_NEAR(fast.times[k], direct.times[k], 1e-14);
    }
    std::ostringstream os;
    direct.write_csv(os);
    EXPECT_FALSE(os.str().empty());
}

TEST(Asymptotics, WindowTimesSpanDuration) {
    const auto t = window_times(3.1, 1.0, 10);
    ASSERT_EQ(t.size(), 11u);
    EXPECT_DOUBLE_EQ(t.front(), 3.1);
    EXPECT_NEAR(t.back(), 4.1, 1e-14);
    EXPECT_EQ(default_trace_intervals(4), 64);
    EXPECT_EQ(default_trace_intervals(20), 160);
}
