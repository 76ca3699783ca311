#pragma once

// Time-domain Lippmann-Schwinger solver on a spherical droplet,
//
//   U(x, t) + chi1 / c0^2 * int_D U_tt(y, t - |x - y| / c0) / (4 pi |x - y|) dy = V(x, t),
//
// discretized with the x-centred polar rule in space, tensor Lagrange
// interpolation on the ball grid, and convolution splines in the delay.
// Node n of the ball rule maps to G(x_n) = z + a x_n.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "droplet/geometry.hpp"
#include "droplet/newtonian.hpp"
#include "droplet/quadrature.hpp"
#include "droplet/sources.hpp"
#include "droplet/splines.hpp"

namespace droplet {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Field values at every droplet node image for t_l = l * dt, l = 0..steps().
class InteriorHistory {
public:
    InteriorHistory(Droplet droplet, BallQuadrature rule, SplineBasis splines)
        : droplet_(std::move(droplet)), rule_(std::move(rule)), splines_(std::move(splines)) {}

    const Droplet& droplet() const { return droplet_; }
    const BallQuadrature& rule() const { return rule_; }
    const SplineBasis& splines() const { return splines_; }
    double dt() const { return splines_.dt(); }
    std::size_t steps() const { return values_.empty() ? 0 : values_.size() - 1; }
    double time(std::size_t l) const { return static_cast<double>(l) * dt(); }

    Vec3 node_position(std::size_t i) const {
        return droplet_.center() + droplet_.radius() * rule_.nodes()[i].x;
    }

    /// U^l at all nodes; zero for l < 0.
    std::span<const double> at(long l) const {
        if (l < 0) {
            if (zeros_.size() != rule_.size()) {
                zeros_.assign(rule_.size(), 0.0);
            }
            return zeros_;
        }
        if (static_cast<std::size_t>(l) >= values_.size()) {
            throw std::out_of_range("InteriorHistory: time index " + std::to_string(l) +
                                    " beyond the simulated horizon");
        }
        return values_[static_cast<std::size_t>(l)];
    }

    void push(std::vector<double> u) {
        if (u.size() != rule_.size()) {
            throw std::invalid_argument("InteriorHistory: wrong number of node values");
        }
        values_.push_back(std::move(u));
    }

    /// CSV "t,node,x,y,z,U" for every stored step.
    void write_csv(std::ostream& os) const {
        os << "t,node,x,y,z,U\n";
        const auto old = os.precision(17);
        for (std::size_t l = 0; l < values_.size(); ++l) {
            for (std::size_t i = 0; i < rule_.size(); ++i) {
                const Vec3 p = node_position(i);
                os << time(l) << ',' << i << ',' << p.x << ',' << p.y << ',' << p.z << ',' << values_[l][i] << '\n';
            }
        }
        os.precision(old);
    }

private:
    Droplet droplet_;
    BallQuadrature rule_;
    SplineBasis splines_;
    std::vector<std::vector<double>> values_;
    mutable std::vector<double> zeros_;
};

struct LseOptions {
    int q = 2;
    double dt = 0.1;
    int n0 = 2;
    /// Restrict the memory term to polynomials of total degree <= projection_degree.
    bool smooth_projection = true;
    /// 0 selects floor(2 N_s / 3).
    int projection_degree = 0;
    double min_rcond = 1e-13;
    double max_matrix_bytes = 3.0e9;
};

/// Weighted-L2 projection onto polynomials of total degree <= degree on the ball
/// rule, factored as P = G H with H = Q^T S and G = S^-1 Q, S = diag(sqrt(w)).
struct PolynomialProjector {
    int degree = 0;
    Eigen::MatrixXd G;
    Eigen::MatrixXd H;

    Eigen::Index rank() const { return H.rows(); }

    PolynomialProjector(const BallQuadrature& rule, int deg) : degree(deg) {
        if (deg < 0) {
            throw std::invalid_argument("PolynomialProjector: degree must be nonnegative");
        }
        const auto nodes = rule.nodes();
        const auto weights = rule.weights();
        const auto n = static_cast<Eigen::Index>(nodes.size());
        std::vector<std::array<int, 3>> powers;
        for (int i = 0; i <= deg; ++i) {
            for (int j = 0; i + j <= deg; ++j) {
                for (int k = 0; i + j + k <= deg; ++k) {
                    powers.push_back({i, j, k});
                }
            }
        }
        const auto r = static_cast<Eigen::Index>(powers.size());
        if (r > n) {
            throw std::invalid_argument("PolynomialProjector: more polynomials than nodes");
        }
        Eigen::VectorXd sw(n);
        Eigen::MatrixXd basis(n, r);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec3& x = nodes[static_cast<std::size_t>(i)].x;
            sw(i) = std::sqrt(weights[static_cast<std::size_t>(i)]);
            for (Eigen::Index m = 0; m < r; ++m) {
                const auto& e = powers[static_cast<std::size_t>(m)];
                basis(i, m) = sw(i) * std::pow(x.x, e[0]) * std::pow(x.y, e[1]) * std::pow(x.z, e[2]);
            }
        }
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
        G = sw.cwiseInverse().asDiagonal() * Q;
        H = Q.transpose() * sw.asDiagonal();
    }
};

inline int default_projection_degree(const BallQuadrature& rule) { return (2 * rule.n_s()) / 3; }

/// Assembled and factored LSE for one droplet; march() produces an InteriorHistory.
///
/// With smooth_projection the kernels act on P U only. The step equation
/// U + M_0 P U = rhs then reduces to (I + H M_0 G) c = H rhs for c = H U,
/// followed by U = rhs - M_0 G c.
class LseSolver {
public:
    LseSolver(Droplet droplet, BallQuadrature rule, LseOptions options)
        : droplet_(std::move(droplet)), rule_(std::move(rule)), options_(options),
          splines_(options.q, options.dt) {
        const double tau_max = droplet_.diameter() / droplet_.c0();
        depth_ = splines_.history_depth(tau_max);
        const double n = static_cast<double>(rule_.size());
        const double bytes = (depth_ + 2.0) * n * n * sizeof(double);
        if (bytes > options_.max_matrix_bytes) {
            throw std::runtime_error("LseSolver: " + std::to_string(depth_ + 1) + " dense matrices of order " +
                                     std::to_string(rule_.size()) + " exceed the memory budget");
        }
        assemble();
        const auto N = static_cast<Eigen::Index>(rule_.size());
        if (options_.smooth_projection) {
            const int deg = options_.projection_degree > 0 ? options_.projection_degree
                                                           : default_projection_degree(rule_);
            projector_.emplace(rule_, deg);
            for (auto& k : kernels_) {
                k = RowMatrix(k * projector_->G);
            }
            system_ = RowMatrix::Identity(projector_->rank(), projector_->rank()) + projector_->H * kernels_[0];
        } else {
            system_ = RowMatrix::Identity(N, N) + kernels_[0];
        }
        lu_.compute(system_);
        rcond_ = lu_.rcond();
        if (!(rcond_ > options_.min_rcond)) {
            throw std::runtime_error("LseSolver: system matrix is singular or ill-conditioned (rcond = " +
                                     std::to_string(rcond_) + ")");
        }
    }

    const Droplet& droplet() const { return droplet_; }
    const BallQuadrature& rule() const { return rule_; }
    const SplineBasis& splines() const { return splines_; }
    const LseOptions& options() const { return options_; }
    /// Largest history offset s with a nonzero kernel M_s.
    int history_depth() const { return depth_; }
    double rcond() const { return rcond_; }
    /// Degree of the smoothing projection, or -1 without one.
    int projection_degree() const { return projector_ ? projector_->degree : -1; }
    /// Matrix factored once and shared by every time step: I + M_0, or I + H M_0 G with projection.
    const RowMatrix& system_matrix() const { return system_; }
    /// M_s, or M_s G with projection.
    const RowMatrix& kernel(int s) const { return kernels_.at(static_cast<std::size_t>(s)); }

    /// Marches l = 1..floor(horizon / dt) with the incident field sampled from `incident`.
    InteriorHistory march(const std::function<double(const Vec3&, double)>& incident, double horizon) const {
        if (!(horizon > 0.0)) {
            throw std::invalid_argument("LseSolver::march: horizon must be positive");
        }
        InteriorHistory history(droplet_, rule_, splines_);
        const std::size_t n = rule_.size();
        const auto steps = static_cast<std::size_t>(std::floor(horizon / options_.dt + 1e-9));
        std::vector<Vec3> pos(n);
        for (std::size_t i = 0; i < n; ++i) {
            pos[i] = history.node_position(i);
        }
        std::vector<double> u0(n);
        for (std::size_t i = 0; i < n; ++i) {
            u0[i] = incident(pos[i], 0.0);
        }
        // Vectors the kernels act on: U itself, or c = H U with projection.
        std::vector<Eigen::VectorXd> acted;
        const Eigen::Map<const Eigen::VectorXd> u0_map(u0.data(), static_cast<Eigen::Index>(n));
        acted.push_back(projector_ ? Eigen::VectorXd(projector_->H * u0_map) : Eigen::VectorXd(u0_map));
        history.push(std::move(u0));
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
        for (std::size_t l = 1; l <= steps; ++l) {
            const double t = static_cast<double>(l) * options_.dt;
            for (std::size_t i = 0; i < n; ++i) {
                rhs(static_cast<Eigen::Index>(i)) = incident(pos[i], t);
            }
            for (int s = 1; s <= depth_ && static_cast<std::size_t>(s) <= l; ++s) {
                rhs.noalias() -= kernels_[static_cast<std::size_t>(s)] * acted[l - static_cast<std::size_t>(s)];
            }
            Eigen::VectorXd u;
            if (projector_) {
                const Eigen::VectorXd c = lu_.solve(projector_->H * rhs);
                u = rhs - kernels_[0] * c;
                acted.push_back(c);
            } else {
                u = lu_.solve(rhs);
                acted.push_back(u);
            }
            history.push(std::vector<double>(u.data(), u.data() + u.size()));
        }
        return history;
    }

    InteriorHistory march(const SourceModel& model, double horizon) const {
        return march([&](const Vec3& x, double t) { return incident_field(model, x, t); }, horizon);
    }

private:
    void assemble() {
        const std::size_t n = rule_.size();
        const double a = droplet_.radius();
        const double c0 = droplet_.c0();
        const double coef = droplet_.chi1() * a * a / (c0 * c0);
        kernels_.assign(static_cast<std::size_t>(depth_ + 1),
                        RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
        const BallInterpolator interp(rule_, options_.n0);
        const auto& sph = rule_.sphere();
        const auto& rad = rule_.radial();
        const auto nodes = rule_.nodes();
        std::vector<Vec3> dirs;
        std::vector<double> dir_weight;
        for (std::size_t j = 0; j < sph.theta.size(); ++j) {
            for (std::size_t k = 0; k < sph.phi.size(); ++k) {
                dirs.push_back(sph.direction(j, k));
                // eta * alpha / (4 N_s) = quadrature weight / (4 pi)
                dir_weight.push_back(sph.weight(j) / (4.0 * pi));
            }
        }
        InterpolationStencil st;
        std::vector<SplineWeight> sw;
        for (std::size_t row = 0; row < n; ++row) {
            const Vec3& x = nodes[row].x;
            for (std::size_t d = 0; d < dirs.size(); ++d) {
                const double rb = boundary_distance(x, dirs[d], 1.0);
                for (std::size_t iota = 0; iota < rad.size(); ++iota) {
                    const double rp = rad.nodes[iota];
                    const double w = coef * dir_weight[d] * rad.weights[iota] * rp * rb * rb;
                    const double tau = a * rp * rb / c0;
                    splines_.weights(tau, 2, sw);
                    interp.stencil(to_spherical(x + (rp * rb) * dirs[d]), st);
                    for (const auto& [s, omega] : sw) {
                        if (omega == 0.0) {
                            continue;
                        }
                        double* out = kernels_[static_cast<std::size_t>(s)].row(static_cast<Eigen::Index>(row)).data();
                        const double ws = w * omega;
                        for (std::size_t m = 0; m < st.indices.size(); ++m) {
                            out[st.indices[m]] += ws * st.weights[m];
                        }
                    }
                }
            }
        }
    }

    Droplet droplet_;
    BallQuadrature rule_;
    LseOptions options_;
    SplineBasis splines_;
    int depth_ = 0;
    std::vector<RowMatrix> kernels_;
    std::optional<PolynomialProjector> projector_;
    RowMatrix system_;
    Eigen::PartialPivLU<RowMatrix> lu_;
    double rcond_ = 0.0;
};

inline InteriorHistory solve_lse(const SourceModel& model, const Droplet& droplet, const BallQuadrature& rule,
                                 const LseOptions& options, double horizon) {
    return LseSolver(droplet, rule, options).march(model, horizon);
}

/// W = U - V at an exterior point from the retarded node sum over the droplet.
inline double scattered_field(const InteriorHistory& history, const Vec3& x, double t) {
    const Droplet& dr = history.droplet();
    const double a = dr.radius();
    if (!(distance(x, dr.center()) > a)) {
        throw std::domain_error("exterior_field: point lies inside the closed droplet");
    }
    const double c0 = dr.c0();
    const double dt = history.dt();
    const auto& rule = history.rule();
    const auto nodes = rule.nodes();
    const auto weights = rule.weights();
    std::vector<SplineWeight> sw;
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double dist = distance(x, history.node_position(i));
        const double t_ret = t - dist / c0;
        const long n_i = static_cast<long>(std::floor(t_ret / dt)) + 1;
        if (n_i < 0) {
            continue;  // every referenced sample precedes t = 0
        }
        const double d_i = static_cast<double>(n_i) * dt - t_ret;
        history.splines().weights(d_i, 2, sw);
        double utt = 0.0;
        for (const auto& [s, omega] : sw) {
            const long idx = n_i - s;
            if (idx >= 0) {
                utt += omega * history.at(idx)[i];
            }
        }
        sum += weights[i] / (4.0 * pi) * utt / dist;
    }
    return -dr.chi1() * a * a * a / (c0 * c0) * sum;
}

/// U = V + W at an exterior point.
inline double exterior_field(const InteriorHistory& history, const SourceModel& model, const Vec3& x, double t) {
    return incident_field(model, x, t) + scattered_field(history, x, t);
}

/// Latest retarded time needed to evaluate the exterior field at (x, t).
inline double required_horizon(const Droplet& droplet, const Vec3& x, double t_max, const SplineBasis& splines) {
    const double nearest = std::max(0.0, distance(x, droplet.center()) - droplet.radius());
    return t_max - nearest / droplet.c0() + splines.dt();
}

}  // namespace droplet
