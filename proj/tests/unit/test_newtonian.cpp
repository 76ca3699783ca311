#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "droplet/newtonian.hpp"

using namespace droplet;

TEST(Droplet, DerivedSpeedsAndContrast) {
    const Droplet d({0.1, 0.0, 0.0}, 0.05, 4.0 * pi, 1.0);
    EXPECT_NEAR(d.c1(), 0.2, 1e-15);
    EXPECT_NEAR(d.chi1(), 1.0 / 0.04 - 1.0, 1e-12);
    EXPECT_NEAR(d.diameter(), 0.1, 1e-15);
    EXPECT_EQ(d.moved_to({1, 2, 3}).center().z, 3.0);
}

TEST(EigenMode, RadialModesInClosedForm) {
    const double a = 0.3;
    for (int j = 1; j <= 6; ++j) {
        const EigenMode e = eigenmode(0, j, 0, a);
        EXPECT_NEAR(e.mu, (j - 0.5) * pi, 1e-14);
        EXPECT_NEAR(e.lambda, a * a / (e.mu * e.mu), 1e-16);
    }
    EXPECT_THROW(eigenmode(1, 1, 2, 1.0), std::invalid_argument);
    EXPECT_THROW(eigenmode(0, 0, 0, 1.0), std::invalid_argument);
}

TEST(EigenMode, NormalizedAndAverageMatchQuadrature) {
    const double a = 0.4;
    const Vec3 c{0.2, -0.1, 0.3};
    const BallQuadrature rule(30, 8);
    for (auto [l, j, m] : {std::array{0, 1, 0}, std::array{0, 3, 0}, std::array{1, 2, 1}, std::array{2, 1, -1}}) {
        const EigenMode e = eigenmode(l, j, m, a);
        const double sq = a * a * a * rule.integrate([&](const Vec3& y) {
            const double v = eigenfunction_value(e, c, c + a * y);
            return v * v;
        });
        const double avg =
            a * a * a * rule.integrate([&](const Vec3& y) { return eigenfunction_value(e, c, c + a * y); });
        EXPECT_NEAR(sq, 1.0, 1e-10) << l << j << m;
        EXPECT_NEAR(avg, e.avg, 1e-10) << l << j << m;
    }
}

TEST(EigenMode, NewtonianOperatorScalesByLambda) {
    const double a = 0.5;
    const Vec3 c{0, 0, 0};
    const BallQuadrature rule(20, 16);
    for (auto [l, j, m] : {std::array{0, 1, 0}, std::array{0, 2, 0}, std::array{1, 1, 0}, std::array{1, 2, 1}}) {
        const EigenMode e = eigenmode(l, j, m, a);
        const ScalarField f = [&](const Vec3& y) { return eigenfunction_value(e, c, y); };
        for (const Vec3& x : {Vec3{0.1, 0.05, -0.2}, Vec3{-0.3, 0.2, 0.1}}) {
            EXPECT_NEAR(apply_newtonian(f, x, c, a, rule), e.lambda * f(x), 1e-8 * std::abs(f(x)) + 1e-10);
        }
    }
}

TEST(EigenMode, CouplingSumTendsToVolumeIdentity) {
    // avg^2 / lambda = 8 pi a / (pi^2 (n - 1/2)^2 ... ) summing to 4 pi a.
    const double a = 0.02;
    double s = 0.0;
    double closed = 0.0;
    for (int n = 1; n <= 4000; ++n) {
        const EigenMode e = eigenmode(0, n, 0, a);
        s += e.avg * e.avg / e.lambda;
        closed += 8.0 / (pi * pi * (2.0 * n - 1) * (2.0 * n - 1));
    }
    EXPECT_NEAR(s / (4.0 * pi * a), closed, 1e-12);
    EXPECT_NEAR(s / (4.0 * pi * a), 1.0, 1e-4);
}

TEST(ModesL0, CarryResonanceFrequencies) {
    const Droplet d({0, 0, 0}, 0.01, 2.0 * pi, 1.0);
    const auto modes = modes_l0(d, 4);
    ASSERT_EQ(modes.size(), 4u);
    for (int n = 1; n <= 4; ++n) {
        EXPECT_NEAR(*modes[n - 1].omega, 2.0 * pi * (n - 0.5), 1e-10);
    }
}

TEST(ValidationLattice, StrictFilterCount) {
    EXPECT_EQ(validation_lattice().size(), 3112u);
    for (const Vec3& p : validation_lattice()) {
        EXPECT_LT(norm(p), 0.95);
    }
}

TEST(ValidateEigensystem, SmallResidualsAndCsv) {
    const BallQuadrature rule(15, 12);
    auto pts = validation_lattice(2.0 / 7.0, 0.95, 1.0);
    const std::vector<EigenMode> modes{eigenmode(0, 1, 0, 1.0), eigenmode(1, 1, 1, 1.0)};
    const auto res = validate_eigensystem(modes, pts, rule);
    ASSERT_EQ(res.size(), 2u);
    EXPECT_LT(res[0].err, 1e-13);
    EXPECT_LT(res[1].err, 1e-13);
    EXPECT_EQ(res[0].points, pts.size());
    std::ostringstream os;
    write_eigen_residuals_csv(os, res);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "l,m,j,err,points");
}
