#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "droplet/asymptotics.hpp"
#include "droplet/forward_solver.hpp"

using namespace droplet;

namespace {

const Vec3 z{-0.2, 0.0, 0.0};
const Vec3 x{0.3, 0.4, 0.5};

LseOptions options(double dt) {
    LseOptions o;
    o.dt = dt;
    return o;
}

/// max |W_LSE - W_8| / max |W_8| over t in [1, 4].
double relative_difference_to_expansion(int p, double a, double dt) {
    const PolynomialRampSource src(p, 1.0);
    const Droplet d(z, a, 4.0 * pi, 1.0);
    const LseSolver solver(d, BallQuadrature(8, 8), options(dt));
    const auto hist = solver.march(src, required_horizon(d, x, 4.0, solver.splines()));
    const auto modes = modes_l0(d, 8);
    double worst = 0.0;
    double scale = 0.0;
    for (double t = 1.0; t <= 4.0 + 1e-9; t += 0.1) {
        const double wn = expansion_W_N(modes, d, src, x, t, 8);
        worst = std::max(worst, std::abs(scattered_field(hist, x, t) - wn));
        scale = std::max(scale, std::abs(wn));
    }
    return worst / scale;
}

}  // namespace

TEST(PolynomialProjector, OrthonormalInWeightedNorm) {
    const BallQuadrature rule(8, 8);
    const PolynomialProjector p(rule, 4);
    EXPECT_EQ(p.rank(), 35);
    const Eigen::MatrixXd hg = p.H * p.G;
    EXPECT_LT((hg - Eigen::MatrixXd::Identity(p.rank(), p.rank())).norm(), 1e-10);
    // Polynomials of the projection degree are reproduced.
    Eigen::VectorXd u(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const Vec3& y = rule.nodes()[i].x;
        u(static_cast<Eigen::Index>(i)) = 1.0 + y.x * y.y - y.z * y.z * y.z * y.x;
    }
    EXPECT_LT((p.G * (p.H * u) - u).norm(), 1e-10 * u.norm());
}

TEST(LseSolver, ProjectedSystemHasRealPositiveSpectrum) {
    const Droplet d(z, 0.05, 4.0 * pi, 1.0);
    const LseSolver solver(d, BallQuadrature(8, 8), options(0.1));
    EXPECT_EQ(solver.projection_degree(), 5);
    const Eigen::MatrixXd s = solver.system_matrix();
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(s).eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        EXPECT_GT(ev(i).real(), 1.0 - 1e-9);
        EXPECT_LT(std::abs(ev(i).imag()), 1e-8);
    }
}

TEST(LseSolver, NoContrastMeansNoScattering) {
    const double a = 0.05;
    const Droplet d(z, a, pi / a, 1.0);  // c1 = c0
    ASSERT_NEAR(d.chi1(), 0.0, 1e-12);
    const PolynomialRampSource src(3, 1.0);
    const LseSolver solver(d, BallQuadrature(6, 6), options(0.1));
    const auto hist = solver.march(src, 1.0);
    for (std::size_t l = 0; l <= hist.steps(); ++l) {
        for (std::size_t i = 0; i < hist.rule().size(); i += 17) {
            EXPECT_NEAR(hist.at(static_cast<long>(l))[i], src.V(hist.node_position(i), hist.time(l)), 1e-12);
        }
    }
    EXPECT_NEAR(scattered_field(hist, x, 1.5), 0.0, 1e-14);
}

TEST(LseSolver, LinearInTheIncidentFieldAndReusable) {
    const Droplet d(z, 0.05, 4.0 * pi, 1.0);
    const LseSolver solver(d, BallQuadrature(6, 6), options(0.1));
    const PolynomialRampSource src(4, 1.0);
    const auto h1 = solver.march(src, 2.0);
    const auto h2 = solver.march([&](const Vec3& y, double t) { return 2.0 * src.V(y, t); }, 2.0);
    const auto h3 = solver.march(src, 2.0);
    for (std::size_t i = 0; i < h1.rule().size(); i += 11) {
        EXPECT_NEAR(h2.at(20)[i], 2.0 * h1.at(20)[i], 1e-12 * std::abs(h1.at(20)[i]) + 1e-14);
        EXPECT_EQ(h3.at(20)[i], h1.at(20)[i]);
    }
    EXPECT_THROW(h1.at(21), std::out_of_range);
}

TEST(LseSolver, ExteriorFieldIsCausal) {
    const Droplet d(z, 0.05, 4.0 * pi, 1.0);
    const LseSolver solver(d, BallQuadrature(6, 6), options(0.1));
    const auto hist = solver.march(PolynomialRampSource(4, 1.0), 2.0);
    const double arrival = distance(x, z) - d.radius();
    for (double t = 0.0; t < arrival; t += arrival / 50.0) {
        EXPECT_EQ(scattered_field(hist, x, t), 0.0);
    }
    EXPECT_NE(scattered_field(hist, x, 1.5), 0.0);
    EXPECT_THROW(scattered_field(hist, z, 1.0), std::domain_error);
}

TEST(LseSolver, AgreesWithExpansionAndSmootherSourceAgreesBetter) {
    const double d3 = relative_difference_to_expansion(3, 0.05, 0.1);
    const double d4 = relative_difference_to_expansion(4, 0.05, 0.1);
    EXPECT_LT(d4, 0.06);
    EXPECT_LT(d4, d3);
}

TEST(LseSolver, RejectsOversizedProblems) {
    const Droplet d(z, 0.05, 4.0 * pi, 1.0);
    LseOptions o = options(0.1);
    o.max_matrix_bytes = 1e3;
    EXPECT_THROW(LseSolver(d, BallQuadrature(6, 6), o), std::exception);
}
