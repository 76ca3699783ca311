#pragma once

// Quadrature and interpolation on the unit ball.
//
// The ball rule combines an N_r-point Gauss-Legendre rule in the radius with
// the Gauss-trapezoidal rule on the sphere (Gauss-Legendre in cos(theta),
// trapezoid in phi). The same tensor grid doubles as the interpolation grid
// for fields sampled inside the droplet.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "droplet/geometry.hpp"

namespace droplet {

struct QuadratureRule1D {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            sum += weights[i] * f(nodes[i]);
        }
        return sum;
    }
};

namespace detail {

/// P_n(x) and P_{n-1}(x) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double x) {
    double p_prev = 1.0;
    double p = x;
    if (n == 0) {
        return {1.0, 0.0};
    }
    for (int k = 2; k <= n; ++k) {
        const double next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = next;
    }
    return {p, p_prev};
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
inline QuadratureRule1D gauss_legendre_rule(int n) {
    if (n < 1) {
        throw std::invalid_argument("gauss_legendre_rule: n must be at least 1");
    }
    QuadratureRule1D rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Chebyshev node as starting point, then Newton on P_n.
        double x = -std::cos(pi * (2.0 * i + 1.0) / (2.0 * n));
        for (int it = 0; it < 100; ++it) {
            const auto [p, p_prev] = detail::legendre_pair(n, x);
            const double dp = n * (x * p - p_prev) / (x * x - 1.0);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-14) {
                break;
            }
        }
        const double p_prev = detail::legendre_pair(n, x).second;
        const double denom = n * p_prev;
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 * (1.0 - x * x) / (denom * denom);
    }
    return rule;
}

/// Affine image of a rule given on [-1, 1].
inline QuadratureRule1D map_rule(const QuadratureRule1D& reference, double lo, double hi) {
    QuadratureRule1D out;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    out.nodes.reserve(reference.size());
    out.weights.reserve(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        out.nodes.push_back(mid + half * reference.nodes[i]);
        out.weights.push_back(half * reference.weights[i]);
    }
    return out;
}

/// Gauss-trapezoidal rule on the unit sphere with 2 N_s^2 points.
struct SphereRule {
    int n_s = 0;
    std::vector<double> theta;         ///< theta_j = arccos(beta_j), j = 0..N_s-1
    std::vector<double> polar_weight;  ///< Gauss-Legendre weight of beta_j
    std::vector<double> phi;           ///< phi_k = pi k / N_s, k = 0..2N_s-1

    std::size_t size() const { return theta.size() * phi.size(); }
    double weight(std::size_t j) const { return pi / n_s * polar_weight[j]; }
    Vec3 direction(std::size_t j, std::size_t k) const { return unit_direction(theta[j], phi[k]); }

    template <class F>
    double integrate(F&& f) const {
        double sum = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            double ring = 0.0;
            for (std::size_t k = 0; k < phi.size(); ++k) {
                ring += f(theta[j], phi[k]);
            }
            sum += weight(j) * ring;
        }
        return sum;
    }
};

inline SphereRule sphere_rule(int n_s) {
    if (n_s < 1) {
        throw std::invalid_argument("sphere_rule: N_s must be at least 1");
    }
    const auto gl = gauss_legendre_rule(n_s);
    SphereRule rule;
    rule.n_s = n_s;
    for (std::size_t j = 0; j < gl.size(); ++j) {
        rule.theta.push_back(std::acos(gl.nodes[j]));
        rule.polar_weight.push_back(gl.weights[j]);
    }
    for (int k = 0; k < 2 * n_s; ++k) {
        rule.phi.push_back(pi * k / n_s);
    }
    return rule;
}

struct BallNode {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    Vec3 x;
};

/// Tensor rule on the unit ball. Node i = (iota * N_s + j) * 2N_s + k.
class BallQuadrature {
public:
    BallQuadrature(int n_r, int n_s) : n_r_(n_r), n_s_(n_s) {
        if (n_r < 1 || n_s < 1) {
            throw std::invalid_argument("ball_quadrature: N_r and N_s must be at least 1");
        }
        radial_ = map_rule(gauss_legendre_rule(n_r), 0.0, 1.0);
        sphere_ = sphere_rule(n_s);
        nodes_.reserve(static_cast<std::size_t>(2 * n_r * n_s * n_s));
        weights_.reserve(nodes_.capacity());
        for (std::size_t iota = 0; iota < radial_.size(); ++iota) {
            const double r = radial_.nodes[iota];
            for (std::size_t j = 0; j < sphere_.theta.size(); ++j) {
                for (std::size_t k = 0; k < sphere_.phi.size(); ++k) {
                    const double th = sphere_.theta[j];
                    const double ph = sphere_.phi[k];
                    nodes_.push_back({r, th, ph, r * unit_direction(th, ph)});
                    weights_.push_back(radial_.weights[iota] * r * r * sphere_.weight(j));
                }
            }
        }
    }

    int n_r() const { return n_r_; }
    int n_s() const { return n_s_; }
    std::size_t size() const { return nodes_.size(); }
    const QuadratureRule1D& radial() const { return radial_; }
    const SphereRule& sphere() const { return sphere_; }
    std::span<const BallNode> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

    std::size_t index(std::size_t iota, std::size_t j, std::size_t k) const {
        return (iota * static_cast<std::size_t>(n_s_) + j) * static_cast<std::size_t>(2 * n_s_) + k;
    }

    /// Integral over the unit ball of f(x).
    template <class F>
    double integrate(F&& f) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            sum += weights_[i] * f(nodes_[i].x);
        }
        return sum;
    }

private:
    int n_r_;
    int n_s_;
    QuadratureRule1D radial_;
    SphereRule sphere_;
    std::vector<BallNode> nodes_;
    std::vector<double> weights_;
};

inline BallQuadrature ball_quadrature(int n_r, int n_s) { return BallQuadrature(n_r, n_s); }

/// Distance from x (|x| < a, ball centred at the origin) to the sphere |y| = a
/// along the unit direction d.
inline double boundary_distance(const Vec3& x, const Vec3& d, double a) {
    const double c = dot(x, d);
    const double gap = a * a - dot(x, x);
    if (!(gap > 0.0)) {
        throw std::domain_error("boundary_distance: point is not strictly inside the ball");
    }
    const double s = std::sqrt(c * c + gap);
    // s - c loses digits when c >> 0; use the conjugate form there.
    return c > 0.0 ? gap / (s + c) : s - c;
}

inline double boundary_distance(const Vec3& x, double theta, double phi, double a) {
    return boundary_distance(x, unit_direction(theta, phi), a);
}

/// Integral over the ball |y| < a (origin-centred) of g(y, |x - y|) / (4 pi |x - y|),
/// with x strictly inside. Polar coordinates centred at x remove the singularity;
/// each ray is scaled to the boundary so that the radial variable lives on [0, 1].
template <class G>
double singular_ball_integral(const Vec3& x, double a, const BallQuadrature& rule, G&& g) {
    if (!(norm(x) < a)) {
        throw std::domain_error("singular_ball_integral: evaluation point must lie strictly inside");
    }
    const auto& sph = rule.sphere();
    const auto& rad = rule.radial();
    double sum = 0.0;
    for (std::size_t j = 0; j < sph.theta.size(); ++j) {
        double ring = 0.0;
        for (std::size_t k = 0; k < sph.phi.size(); ++k) {
            const Vec3 d = sph.direction(j, k);
            const double rb = boundary_distance(x, d, a);
            double line = 0.0;
            for (std::size_t i = 0; i < rad.size(); ++i) {
                const double rho = rad.nodes[i] * rb;
                line += rad.weights[i] * rad.nodes[i] * g(x + rho * d, rho);
            }
            ring += line * rb * rb;
        }
        sum += sph.weight(j) * ring;
    }
    return sum / (4.0 * pi);
}

struct InterpolationStencil {
    int n0 = 0;
    std::vector<std::size_t> indices;
    std::vector<double> weights;
};

/// Tensor-product Lagrange interpolation on the (r', theta, phi) grid of a
/// ball rule. Each axis uses the 2 n0 + 1 nodes nearest the query; windows are
/// clamped at the radial and polar ends, and wrap around in phi.
class BallInterpolator {
public:
    BallInterpolator(const BallQuadrature& rule, int n0)
        : n0_(n0), n_s_(rule.n_s()), radial_(rule.radial().nodes) {
        const int width = 2 * n0 + 1;
        if (n0 < 0 || width > std::min(rule.n_r(), rule.n_s())) {
            throw std::invalid_argument("BallInterpolator: stencil width 2*n0+1 = " + std::to_string(width) +
                                        " exceeds min(N_r, N_s)");
        }
        const auto& theta = rule.sphere().theta;
        theta_order_.resize(theta.size());
        for (std::size_t j = 0; j < theta.size(); ++j) {
            theta_order_[j] = j;
        }
        std::sort(theta_order_.begin(), theta_order_.end(),
                  [&](std::size_t a, std::size_t b) { return theta[a] < theta[b]; });
        for (std::size_t j : theta_order_) {
            theta_sorted_.push_back(theta[j]);
        }
        size_ = rule.size();
    }

    int n0() const { return n0_; }
    std::size_t width() const { return static_cast<std::size_t>(2 * n0_ + 1); }

    /// Fills `out` with the (2 n0 + 1)^3 node indices and weights for point p.
    void stencil(const Spherical& p, InterpolationStencil& out) const {
        const std::size_t w = width();
        radial_window(p.r, r_idx_, r_w_);
        theta_window(p.theta, t_idx_, t_w_);
        phi_window(p.phi, p_idx_, p_w_);
        out.n0 = n0_;
        out.indices.resize(w * w * w);
        out.weights.resize(w * w * w);
        const std::size_t ring = static_cast<std::size_t>(2 * n_s_);
        std::size_t m = 0;
        for (std::size_t a = 0; a < w; ++a) {
            for (std::size_t b = 0; b < w; ++b) {
                const std::size_t base = (r_idx_[a] * static_cast<std::size_t>(n_s_) + t_idx_[b]) * ring;
                const double wab = r_w_[a] * t_w_[b];
                for (std::size_t c = 0; c < w; ++c, ++m) {
                    out.indices[m] = base + p_idx_[c];
                    out.weights[m] = wab * p_w_[c];
                }
            }
        }
    }

    InterpolationStencil stencil(const Spherical& p) const {
        InterpolationStencil s;
        stencil(p, s);
        return s;
    }

    double interpolate(std::span<const double> samples, const Spherical& p) const {
        if (samples.size() != size_) {
            throw std::invalid_argument("BallInterpolator: sample count does not match the rule");
        }
        stencil(p, scratch_);
        double v = 0.0;
        for (std::size_t i = 0; i < scratch_.indices.size(); ++i) {
            v += scratch_.weights[i] * samples[scratch_.indices[i]];
        }
        return v;
    }

private:
    static void lagrange(std::span<const double> xs, double x, std::vector<double>& w) {
        w.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double li = 1.0;
            for (std::size_t k = 0; k < xs.size(); ++k) {
                if (k != i) {
                    li *= (x - xs[k]) / (xs[i] - xs[k]);
                }
            }
            w[i] = li;
        }
    }

    std::size_t clamped_start(std::span<const double> sorted, double x) const {
        const std::size_t n = sorted.size();
        const std::size_t w = width();
        auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - sorted.begin());
        std::size_t nearest = hi;
        if (hi == n || (hi > 0 && x - sorted[hi - 1] <= sorted[hi] - x)) {
            nearest = hi - 1;
        }
        const std::size_t lo = nearest >= static_cast<std::size_t>(n0_) ? nearest - static_cast<std::size_t>(n0_) : 0;
        return std::min(lo, n - w);
    }

    void radial_window(double r, std::vector<std::size_t>& idx, std::vector<double>& w) const {
        const std::size_t start = clamped_start(radial_, r);
        idx.resize(width());
        for (std::size_t i = 0; i < width(); ++i) {
            idx[i] = start + i;
        }
        lagrange(std::span<const double>(radial_).subspan(start, width()), r, w);
    }

    void theta_window(double theta, std::vector<std::size_t>& idx, std::vector<double>& w) const {
        const std::size_t start = clamped_start(theta_sorted_, theta);
        idx.resize(width());
        for (std::size_t i = 0; i < width(); ++i) {
            idx[i] = theta_order_[start + i];
        }
        lagrange(std::span<const double>(theta_sorted_).subspan(start, width()), theta, w);
    }

    void phi_window(double phi, std::vector<std::size_t>& idx, std::vector<double>& w) const {
        const double h = pi / n_s_;
        const long ring = 2L * n_s_;
        const long centre = std::lround(phi / h);
        idx.resize(width());
        pos_.resize(width());
        for (std::size_t i = 0; i < width(); ++i) {
            const long k = centre - n0_ + static_cast<long>(i);
            pos_[i] = static_cast<double>(k) * h;
            idx[i] = static_cast<std::size_t>(((k % ring) + ring) % ring);
        }
        lagrange(pos_, phi, w);
    }

    int n0_;
    int n_s_;
    std::size_t size_ = 0;
    std::vector<double> radial_;
    std::vector<double> theta_sorted_;
    std::vector<std::size_t> theta_order_;

    // Scratch buffers; a BallInterpolator is not shared between threads.
    mutable std::vector<std::size_t> r_idx_, t_idx_, p_idx_;
    mutable std::vector<double> r_w_, t_w_, p_w_, pos_;
    mutable InterpolationStencil scratch_;
};

inline InterpolationStencil interpolation_stencil(const BallQuadrature& rule, const Spherical& p, int n0) {
    return BallInterpolator(rule, n0).stencil(p);
}

/// Interpolates node samples of a field on the unit ball at p = (r', theta, phi).
inline double interpolate_ball(const BallQuadrature& rule, std::span<const double> samples, const Spherical& p,
                               int n0) {
    return BallInterpolator(rule, n0).interpolate(samples, p);
}

}  // namespace droplet
