#pragma once

// Spectral data of the Newtonian operator N f(x) = int_D f(y) / (4 pi |x - y|) dy
// on a ball D = z + a B, and the injected droplet that carries it.
//
// Eigenpairs: lambda_{lj} = a^2 / mu^2 with mu the j-th zero of J_{l-1/2};
// u_{ljm}(x) = r^{-1/2} J_{l+1/2}(mu r / a) Y_l^m(theta, phi), r = |x - z|.
// Only l = 0 modes have a nonzero average and enter the field expansion.

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "droplet/geometry.hpp"
#include "droplet/quadrature.hpp"
#include "droplet/special_functions.hpp"

namespace droplet {

/// Spherical droplet D = center + radius * B with interior speed c1 = a b / pi.
class Droplet {
public:
    Droplet(Vec3 center, double radius, double riesz_b, double c0)
        : center_(center), radius_(radius), riesz_b_(riesz_b), c0_(c0) {
        if (!(radius > 0.0) || !(riesz_b > 0.0) || !(c0 > 0.0)) {
            throw std::invalid_argument("Droplet: radius, b and c0 must be positive");
        }
    }

    const Vec3& center() const { return center_; }
    double radius() const { return radius_; }
    double riesz_b() const { return riesz_b_; }
    double c0() const { return c0_; }
    double c1() const { return radius_ * riesz_b_ / pi; }
    /// c0^2 / c1^2 - 1
    double chi1() const {
        const double r = c0_ / c1();
        return r * r - 1.0;
    }
    double diameter() const { return 2.0 * radius_; }

    Droplet moved_to(const Vec3& z) const { return Droplet(z, radius_, riesz_b_, c0_); }

private:
    Vec3 center_;
    double radius_;
    double riesz_b_;
    double c0_;
};

struct EigenMode {
    int l = 0;
    int j = 1;
    int m = 0;
    double radius = 1.0;
    double mu = 0.0;      ///< j-th zero of J_{l-1/2}
    double lambda = 0.0;  ///< a^2 / mu^2
    double norm_sq = 0.0; ///< <u, u> for the unnormalized u_{ljm}
    double avg = 0.0;     ///< integral of the normalized eigenfunction over D
    std::optional<double> omega;  ///< c1 / sqrt(lambda), once a droplet speed is known
};

/// Eigenmode (l, j, m) of the Newtonian operator on a ball of the given radius.
inline EigenMode eigenmode(int l, int j, int m, double radius) {
    if (l < 0 || j < 1 || std::abs(m) > l || !(radius > 0.0)) {
        throw std::invalid_argument("eigenmode: require l >= 0, j >= 1, |m| <= l, radius > 0");
    }
    EigenMode e;
    e.l = l;
    e.j = j;
    e.m = m;
    e.radius = radius;
    if (l == 0) {
        // Zeros of J_{-1/2} are exact multiples of pi/2; sin(2 mu) = 0 and sin(mu)^2 = 1.
        e.mu = (j - 0.5) * pi;
        e.norm_sq = radius * radius / (pi * e.mu);
        const double sign = (j % 2 == 1) ? 1.0 : -1.0;
        e.avg = sign * std::sqrt(8.0 * pi * radius * radius * radius) / (e.mu * e.mu);
    } else {
        e.mu = bessel_root(BesselOrder::l_minus_half(l), j);
        const double jn = bessel_half(BesselOrder::l_plus_half(l), e.mu);
        // int_0^a r J_nu(k r)^2 dr at a zero of J_{nu-1}.
        e.norm_sq = 0.5 * radius * radius * jn * jn;
        e.avg = 0.0;
    }
    e.lambda = radius * radius / (e.mu * e.mu);
    return e;
}

/// The first N radially symmetric modes, with resonance frequencies for the droplet.
inline std::vector<EigenMode> modes_l0(const Droplet& droplet, int count) {
    if (count < 1) {
        throw std::invalid_argument("modes_l0: need at least one mode");
    }
    std::vector<EigenMode> modes;
    modes.reserve(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j) {
        EigenMode e = eigenmode(0, j, 0, droplet.radius());
        e.omega = droplet.c1() / std::sqrt(e.lambda);
        modes.push_back(e);
    }
    return modes;
}

/// Unnormalized u_{ljm} at offset `rel` from the droplet centre.
inline double eigenfunction_raw(const EigenMode& e, const Vec3& rel) {
    const Spherical s = to_spherical(rel);
    const double k = e.mu / e.radius;
    if (s.r == 0.0) {
        return e.l == 0 ? std::sqrt(2.0 * k / pi) * spherical_harmonic(0, 0, 0.0, 0.0) : 0.0;
    }
    const double radial = bessel_half(BesselOrder::l_plus_half(e.l), k * s.r) / std::sqrt(s.r);
    return radial * spherical_harmonic(e.l, e.m, s.theta, s.phi);
}

/// Normalized eigenfunction e(x) for x in the closed droplet.
inline double eigenfunction_value(const EigenMode& e, const Vec3& center, const Vec3& x) {
    const Vec3 rel = x - center;
    if (norm(rel) > e.radius * (1.0 + 1e-12)) {
        throw std::domain_error("eigenfunction_value: point lies outside the droplet");
    }
    return eigenfunction_raw(e, rel) / std::sqrt(e.norm_sq);
}

using ScalarField = std::function<double(const Vec3&)>;

/// N f (x) for x strictly inside the ball |y - center| < radius.
inline double apply_newtonian(const ScalarField& f, const Vec3& x, const Vec3& center, double radius,
                              const BallQuadrature& rule) {
    const Vec3 rel = x - center;
    if (!(norm(rel) < radius)) {
        throw std::domain_error("apply_newtonian: point must lie strictly inside the droplet");
    }
    return singular_ball_integral(rel, radius, rule, [&](const Vec3& y, double) { return f(y + center); });
}

/// Cubic lattice with coordinates -half_width + k * step, filtered to |x| < radius.
inline std::vector<Vec3> validation_lattice(double step = 2.0 / 19.0, double radius = 0.95, double half_width = 1.0) {
    std::vector<double> axis;
    for (int k = 0;; ++k) {
        const double v = -half_width + k * step;
        if (v > half_width + 1e-12) {
            break;
        }
        axis.push_back(v);
    }
    std::vector<Vec3> pts;
    for (double x : axis) {
        for (double y : axis) {
            for (double z : axis) {
                const Vec3 p{x, y, z};
                if (norm(p) < radius) {
                    pts.push_back(p);
                }
            }
        }
    }
    return pts;
}

struct EigenResidual {
    int l = 0;
    int m = 0;
    int j = 0;
    double err = 0.0;
    std::size_t points = 0;
};

/// Mean over the points of |u(x) - N(u)(x) / lambda| for each mode, with u the
/// unnormalized u_{ljm} and points given relative to the ball centre.
inline std::vector<EigenResidual> validate_eigensystem(std::span<const EigenMode> modes, std::span<const Vec3> points,
                                                       const BallQuadrature& rule) {
    std::vector<EigenResidual> out;
    if (modes.empty()) {
        return out;
    }
    const double a = modes.front().radius;
    for (const auto& e : modes) {
        if (e.radius != a) {
            throw std::invalid_argument("validate_eigensystem: all modes must share one radius");
        }
    }
    std::vector<double> sums(modes.size(), 0.0);
    std::vector<double> integrals(modes.size());
    for (const Vec3& x : points) {
        std::fill(integrals.begin(), integrals.end(), 0.0);
        // One geometric sweep per point, shared by all modes.
        const auto& sph = rule.sphere();
        const auto& rad = rule.radial();
        if (!(norm(x) < a)) {
            throw std::domain_error("validate_eigensystem: points must lie strictly inside the ball");
        }
        for (std::size_t j = 0; j < sph.theta.size(); ++j) {
            for (std::size_t k = 0; k < sph.phi.size(); ++k) {
                const Vec3 d = sph.direction(j, k);
                const double rb = boundary_distance(x, d, a);
                const double w_dir = sph.weight(j) * rb * rb / (4.0 * pi);
                for (std::size_t i = 0; i < rad.size(); ++i) {
                    const Vec3 y = x + (rad.nodes[i] * rb) * d;
                    const double w = w_dir * rad.weights[i] * rad.nodes[i];
                    for (std::size_t q = 0; q < modes.size(); ++q) {
                        integrals[q] += w * eigenfunction_raw(modes[q], y);
                    }
                }
            }
        }
        for (std::size_t q = 0; q < modes.size(); ++q) {
            sums[q] += std::abs(eigenfunction_raw(modes[q], x) - integrals[q] / modes[q].lambda);
        }
    }
    for (std::size_t q = 0; q < modes.size(); ++q) {
        out.push_back({modes[q].l, modes[q].m, modes[q].j, sums[q] / static_cast<double>(points.size()),
                       points.size()});
    }
    return out;
}

/// CSV with header "l,m,j,err,points".
inline void write_eigen_residuals_csv(std::ostream& os, std::span<const EigenResidual> rows) {
    os << "l,m,j,err,points\n";
    const auto old = os.precision(17);
    for (const auto& r : rows) {
        os << r.l << ',' << r.m << ',' << r.j << ',' << r.err << ',' << r.points << '\n';
    }
    os.precision(old);
}

}  // namespace droplet
