#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "droplet/quadrature.hpp"

using namespace droplet;

TEST(GaussLegendre, ExactForDegreeTwoNMinusOne) {
    for (int n = 1; n <= 20; ++n) {
        const auto rule = gauss_legendre_rule(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
            EXPECT_NEAR(rule.integrate([&](double x) { return std::pow(x, k); }), exact, 1e-13) << n << " " << k;
        }
    }
}

TEST(GaussLegendre, MappedRuleIntegratesOnInterval) {
    const auto rule = map_rule(gauss_legendre_rule(6), 0.0, 1.0);
    EXPECT_NEAR(rule.integrate([](double x) { return x * x; }), 1.0 / 3.0, 1e-15);
}

TEST(BallQuadrature, LayoutAndMoments) {
    const BallQuadrature rule(8, 6);
    EXPECT_EQ(rule.size(), 8u * 6u * 12u);
    EXPECT_EQ(rule.index(2, 3, 4), (2u * 6u + 3u) * 12u + 4u);
    EXPECT_NEAR(rule.integrate([](const Vec3&) { return 1.0; }), 4.0 * pi / 3.0, 1e-13);
    EXPECT_NEAR(rule.integrate([](const Vec3& x) { return dot(x, x); }), 4.0 * pi / 5.0, 1e-13);
    EXPECT_NEAR(rule.integrate([](const Vec3& x) { return x.x * x.x * x.y * x.y; }), 4.0 * pi / 105.0, 1e-13);
    EXPECT_NEAR(rule.integrate([](const Vec3& x) { return x.x * x.y * x.z; }), 0.0, 1e-15);
    EXPECT_THROW(BallQuadrature(0, 4), std::invalid_argument);
}

TEST(BoundaryDistance, RayFromInteriorPoint) {
    EXPECT_NEAR(boundary_distance(Vec3{0, 0, 0}, Vec3{0, 0, 1}, 2.0), 2.0, 1e-15);
    EXPECT_NEAR(boundary_distance(Vec3{0.5, 0, 0}, Vec3{1, 0, 0}, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(boundary_distance(Vec3{0.5, 0, 0}, Vec3{-1, 0, 0}, 1.0), 1.5, 1e-15);
}

// Newtonian potential of the indicator of the unit ball: (3 - |x|^2) / 6.
TEST(SingularBallIntegral, NewtonianPotentialOfOne) {
    const BallQuadrature rule(15, 12);
    for (const Vec3& x : {Vec3{0, 0, 0}, Vec3{0.3, -0.2, 0.1}, Vec3{0, 0.9, 0}}) {
        const double v = singular_ball_integral(x, 1.0, rule, [](const Vec3&, double) { return 1.0; });
        EXPECT_NEAR(v, (3.0 - dot(x, x)) / 6.0, 1e-9);
    }
    EXPECT_THROW(singular_ball_integral(Vec3{1, 0, 0}, 1.0, rule, [](const Vec3&, double) { return 1.0; }),
                 std::domain_error);
}

TEST(BallInterpolator, ReproducesNodeValuesAndSmoothFields) {
    const BallQuadrature rule(12, 12);
    const BallInterpolator interp(rule, 2);
    std::vector<double> samples(rule.size());
    auto f = [](const Vec3& x) { return 1.0 + x.x - 0.5 * x.y * x.z + 0.25 * x.z * x.z; };
    for (std::size_t i = 0; i < rule.size(); ++i) {
        samples[i] = f(rule.nodes()[i].x);
    }
    const auto& n = rule.nodes()[rule.index(5, 4, 7)];
    EXPECT_NEAR(interp.interpolate(samples, Spherical{n.r, n.theta, n.phi}), samples[rule.index(5, 4, 7)], 1e-12);
    const Vec3 p{0.2, -0.3, 0.4};
    EXPECT_NEAR(interp.interpolate(samples, to_spherical(p)), f(p), 1e-3);
    const auto st = interp.stencil(to_spherical(p));
    double total = 0.0;
    for (double w : st.weights) {
        total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_THROW(BallInterpolator(rule, 7), std::invalid_argument);
}
