#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "droplet/inversion.hpp"

using namespace droplet;

namespace {
const Vec3 receiver{1.2, 0.0, 0.0};
}

TEST(DirectCoefficients, RieszBasisRoundTrip) {
    const double b = 2.0 * pi;
    const double w1 = b * 0.5;
    const double w2 = b * 1.5;
    auto f1 = [&](double s) { return std::cos(w1 * (s - pi / b)); };
    auto f2 = [&](double s) { return std::sin(w2 * (s - pi / b)); };
    for (const auto& f : {std::function<double(double)>(f1), std::function<double(double)>(f2)}) {
        const auto c = direct_coefficients(f, b, 6);
        for (int k = 0; k <= 100; ++k) {
            const double s = k / 100.0;
            EXPECT_NEAR(reconstruct_V(c, s), f(s), 1e-12);
        }
    }
}

TEST(ReconstructV, RejectsTimesOutsideWindow) {
    const auto c = direct_coefficients([](double) { return 1.0; }, 2.0 * pi, 2);
    EXPECT_THROW(reconstruct_V(c, 1.01), std::domain_error);
    EXPECT_THROW(reconstruct_V(c, -0.01), std::domain_error);
}

TEST(RieszCoefficients, RecoverSourceFromExpansionData) {
    const PulsedSource src(1.0);
    const Droplet d({0.0, 0.05, -0.05}, 1e-3, 2.0 * pi, 1.0);
    const auto modes = modes_l0(d, 20);
    const auto trace = synthesize_measurement(modes, d, src, receiver, 3.1, 20, 320);
    const auto c = riesz_coefficients(trace, d, modes, 20);
    const auto exact = direct_coefficients([&](double s) { return src.V(d.center(), s); }, 2.0 * pi, 20, 2000);
    for (int n = 0; n < 20; ++n) {
        EXPECT_NEAR(c.C[n] * c.C[n] + c.D[n] * c.D[n], c.A[n] * c.A[n] + c.B[n] * c.B[n], 1e-12);
        EXPECT_NEAR(c.C[n], exact.C[n], 2e-3);
        EXPECT_NEAR(c.D[n], exact.D[n], 2e-3);
    }
    std::vector<double> rec, ref;
    for (int k = 0; k <= 100; ++k) {
        rec.push_back(reconstruct_V(c, k / 100.0));
        ref.push_back(src.V(d.center(), k / 100.0));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        num += (rec[k] - ref[k]) * (rec[k] - ref[k]);
        den += ref[k] * ref[k];
    }
    EXPECT_LT(std::sqrt(num / den), 0.01);
    EXPECT_THROW(riesz_coefficients(trace, d, modes, 21), std::invalid_argument);
}

TEST(RieszProjector, MatchesTraceBasedCoefficients) {
    const PulsedSource src(1.0);
    const Droplet d({0.1, 0.0, 0.02}, 1e-3, 2.0 * pi, 1.0);
    const auto modes = modes_l0(d, 12);
    const auto trace = synthesize_measurement(modes, d, src, receiver, 3.1, 12, 96);
    const auto ref = riesz_coefficients(trace, d, modes, 12);
    const RieszProjector proj(modes, 2.0 * pi, 1.0, 12, 96);
    const auto fast = proj.coefficients(trace.values, trace.t_start, distance(receiver, d.center()));
    for (int n = 0; n < 12; ++n) {
        EXPECT_NEAR(fast.C[n], ref.C[n], 1e-12 * (1.0 + std::abs(ref.C[n])));
        EXPECT_NEAR(fast.D[n], ref.D[n], 1e-12 * (1.0 + std::abs(ref.D[n])));
    }
}

TEST(ChooseTruncation, BalancesNoiseAndRadius) {
    EXPECT_EQ(choose_truncation(0.0, 1e-3).N, 3);
    EXPECT_EQ(choose_truncation(0.0, 0.05).N, 2);
    EXPECT_EQ(choose_truncation(1e-6, 1e-6).N, 1);
    EXPECT_GT(choose_truncation(0.0, 1e-9).N, choose_truncation(0.0, 1e-3).N);
    EXPECT_THROW(choose_truncation(-1.0, 1e-3), std::invalid_argument);
    EXPECT_NEAR(optimal_epsilon(0.0, 1.0), 0.0, 0.0);
}

namespace {

/// Bias of the mollified first and second derivatives of 3t^2 - t + 2 at t = 0.5.
std::pair<double, double> quadratic_bias(const Mollifier& m) {
    std::vector<double> f;
    for (int k = 0; k <= 4 * m.n_t(); ++k) {
        const double t = 0.5 + m.dtau() * (k - 2 * m.n_t());
        f.push_back(3.0 * t * t - t + 2.0);
    }
    const auto d1 = m.first_derivative(f);
    return {std::abs(d1[d1.size() / 2] - 2.0), std::abs(m.second_derivative_at_centre(f) - 6.0)};
}

}  // namespace

TEST(Mollifier, GeometryAndPolynomialDerivatives) {
    const Mollifier m = Mollifier::from_epsilon(0.07, 0.01);
    EXPECT_EQ(m.n_t(), 6);
    EXPECT_EQ(m.second_derivative_trim(), 12);
    EXPECT_NEAR(m.epsilon(), 0.07, 1e-15);
    EXPECT_THROW(Mollifier::from_epsilon(0.075, 0.01), std::invalid_argument);
    std::vector<double> f(4 * m.n_t() + 1, 1.0);
    ASSERT_EQ(m.first_derivative(f).size(), f.size() - 2 * m.n_t());
    // Continuous-mass normalization: a few percent bias at n_t = 6, vanishing as dtau shrinks.
    const auto [b1, b2] = quadratic_bias(m);
    EXPECT_LT(b1, 0.05 * 2.0);
    EXPECT_LT(b2, 0.1 * 6.0);
    const auto [f1, f2] = quadratic_bias(Mollifier::from_epsilon(0.07, 0.0025));
    EXPECT_LT(f1, 0.2 * b1);
    EXPECT_LT(f2, 0.2 * b2);
}

TEST(Mollifier, SmoothsNoiseInSecondDerivative) {
    const Mollifier m = Mollifier::from_epsilon(0.07, 0.01);
    std::vector<double> f;
    double sign = 1.0;
    for (int k = 0; k <= 4 * m.n_t(); ++k) {
        const double t = 0.01 * k;
        f.push_back(std::sin(t) + 1e-3 * sign);
        sign = -sign;
    }
    EXPECT_NEAR(m.second_derivative_at_centre(f), -std::sin(0.01 * 2 * m.n_t()), 0.05);
}

TEST(Lattice3, SpanningAndShrinking) {
    const auto L = Lattice3::spanning({-0.12, -0.25, -0.25}, {0.12, 0.25, 0.25}, 0.01);
    EXPECT_EQ(L.nx, 25);
    EXPECT_EQ(L.ny, 51);
    EXPECT_EQ(L.size(), 25u * 51u * 51u);
    const auto S = L.shrunk(12);
    EXPECT_EQ(S.nx, 1);
    EXPECT_EQ(S.ny, 27);
    EXPECT_NEAR(S.origin.x, 0.0, 1e-12);
    EXPECT_THROW(L.shrunk(13), std::invalid_argument);
    EXPECT_THROW(Lattice3::spanning({0, 0, 0}, {0.105, 0.1, 0.1}, 0.01), std::invalid_argument);
}

// Exact V on the lattice: the assembled J must match c0^-2 V_tt - Delta V.
TEST(AssembleSource, RecoversSourceFromExactField) {
    const PulsedSource src(1.0);
    const Mollifier mol = Mollifier::from_epsilon(0.04, 0.01);
    const int trim = mol.second_derivative_trim();
    ReconstructedField field;
    field.lattice = Lattice3::spanning({-0.06, -0.1, -0.1}, {0.06, 0.1, 0.1}, 0.01);
    field.dtau = 0.01;
    field.nt = 2 * trim + 1;
    field.t0 = 0.8 - trim * 0.01;
    field.values.resize(field.lattice.size() * static_cast<std::size_t>(field.nt));
    const Lattice3& L = field.lattice;
    for (int i = 0; i < L.nx; ++i) {
        for (int j = 0; j < L.ny; ++j) {
            for (int k = 0; k < L.nz; ++k) {
                for (int m = 0; m < field.nt; ++m) {
                    field.at(L.index(i, j, k), m) = src.V(L.point(i, j, k), field.time(m));
                }
            }
        }
    }
    const auto est = assemble_source(field, 1.0, mol, trim);
    EXPECT_NEAR(est.t, 0.8, 1e-12);
    double num = 0.0, den = 0.0, vmax = 0.0;
    for (int i = 0; i < est.lattice.nx; ++i) {
        for (int j = 0; j < est.lattice.ny; ++j) {
            for (int k = 0; k < est.lattice.nz; ++k) {
                const std::size_t p = est.lattice.index(i, j, k);
                const Vec3 y = est.lattice.point(i, j, k);
                const double jx = src.J(y, 0.8);
                num += (est.J[p] - jx) * (est.J[p] - jx);
                den += jx * jx;
                vmax = std::max(vmax, std::abs(est.V[p] - src.V(y, 0.8)));
            }
        }
    }
    EXPECT_EQ(vmax, 0.0);
    EXPECT_LT(std::sqrt(num / den), 0.02);
    EXPECT_THROW(assemble_source(field, 1.0, mol, trim - 1), std::invalid_argument);
}
