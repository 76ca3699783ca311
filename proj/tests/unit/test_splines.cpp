#include <gtest/gtest.h>

#include <cmath>

#include "droplet/splines.hpp"

using namespace droplet;

namespace {

double apply(const SplineBasis& s, double tau, int deriv, double t_n, double (*f)(double)) {
    double v = 0.0;
    for (const auto& w : s.weights(tau, deriv)) {
        v += w.value * f(t_n - w.node * s.dt());
    }
    return v;
}

double smooth(double t) { return std::sin(2.0 * t) + 0.3 * t * t; }
double smooth_tt(double t) { return -4.0 * std::sin(2.0 * t) + 0.6; }

}  // namespace

TEST(SplineBasis, Validation) {
    EXPECT_THROW(SplineBasis(0, 0.1), std::invalid_argument);
    EXPECT_THROW(SplineBasis(2, 0.0), std::invalid_argument);
    const SplineBasis s(2, 0.1);
    EXPECT_EQ(s.degree(), 9);
    EXPECT_THROW(s.weights(-0.1, 0), std::domain_error);
    EXPECT_THROW(s.weights(0.1, 1), std::invalid_argument);
}

TEST(SplineBasis, InterpolatesAtNodes) {
    const SplineBasis s(2, 0.05);
    for (int m = 0; m < 6; ++m) {
        double node_value = 0.0;
        double others = 0.0;
        for (const auto& w : s.weights(m * s.dt(), 0)) {
            (w.node == m ? node_value : others) += std::abs(w.value);
        }
        EXPECT_NEAR(node_value, 1.0, 1e-12) << m;
        EXPECT_NEAR(others, 0.0, 1e-12) << m;
    }
}

TEST(SplineBasis, ReproducesDelayedValuesAndSecondDerivatives) {
    // q = 1 second derivatives are only first-order accurate.
    for (int q : {1, 2, 3}) {
        const SplineBasis s(q, 0.01);
        const double tol_tt = q == 1 ? 0.1 : 5e-3;
        for (double tau : {0.0, 0.0037, 0.013, 0.05, 0.1234}) {
            EXPECT_NEAR(apply(s, tau, 0, 2.0, smooth), smooth(2.0 - tau), 1e-6) << q << " " << tau;
            EXPECT_NEAR(apply(s, tau, 2, 2.0, smooth), smooth_tt(2.0 - tau), tol_tt) << q << " " << tau;
        }
    }
}

TEST(SplineBasis, HistoryDepthCoversStencil) {
    const SplineBasis s(2, 0.1);
    EXPECT_EQ(s.history_depth(0.05), 4);
    EXPECT_EQ(s.history_depth(0.55), 8);
    for (double tau : {0.0, 0.05, 0.31, 0.55}) {
        for (const auto& w : s.weights(tau, 2)) {
            EXPECT_LE(w.node, s.history_depth(std::max(tau, 0.05)));
            EXPECT_GE(w.node, 0);
        }
    }
}
