#pragma once

// Convolution splines (D-splines) on a uniform delay grid tau_s = s * dt.
//
// On (tau_m, tau_{m+1}) the interpolant is the degree 4q+1 Hermite blend of
// the two degree-2q Lagrange interpolants P_m and P_{m+1}, matching
// derivatives 0..2q at both ends. Stencils are S_m = {m-q, .., m+q} for
// m >= q and the one-sided {0, .., 2q} for m < q. The resulting cardinal
// functions omega_s are C^{2q} and each is supported on finitely many intervals.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace droplet {

struct SplineWeight {
    int node = 0;
    double value = 0.0;
};

class SplineBasis {
public:
    SplineBasis(int q, double dt) : q_(q), dt_(dt) {
        if (q < 1) {
            throw std::invalid_argument("SplineBasis: q must be at least 1");
        }
        if (!(dt > 0.0)) {
            throw std::invalid_argument("SplineBasis: dt must be positive");
        }
        for (int m = 0; m <= q; ++m) {
            patterns_.push_back(build_pattern(m));
        }
    }

    int q() const { return q_; }
    double dt() const { return dt_; }
    int degree() const { return 4 * q_ + 1; }

    /// Nonzero omega_s(tau) (derivative 0) or omega_s''(tau) (derivative 2), tau >= 0.
    void weights(double tau, int derivative, std::vector<SplineWeight>& out) const {
        if (!(tau >= 0.0)) {
            throw std::domain_error("SplineBasis::weights: delay must be nonnegative");
        }
        if (derivative != 0 && derivative != 2) {
            throw std::invalid_argument("SplineBasis::weights: derivative must be 0 or 2");
        }
        const double u = tau / dt_;
        const int m = static_cast<int>(std::floor(u));
        const double x = u - m;
        const Pattern& p = patterns_[static_cast<std::size_t>(std::min(m, q_))];
        out.clear();
        const double scale = derivative == 2 ? 1.0 / (dt_ * dt_) : 1.0;
        for (std::size_t n = 0; n < p.offsets.size(); ++n) {
            const auto& c = p.coeffs[n];
            double v = 0.0;
            if (derivative == 0) {
                for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
                    v = v * x + c[static_cast<std::size_t>(i)];
                }
            } else {
                for (int i = static_cast<int>(c.size()) - 1; i >= 2; --i) {
                    v = v * x + i * (i - 1.0) * c[static_cast<std::size_t>(i)];
                }
            }
            out.push_back({m + p.offsets[n], v * scale});
        }
    }

    std::vector<SplineWeight> weights(double tau, int derivative) const {
        std::vector<SplineWeight> out;
        weights(tau, derivative, out);
        return out;
    }

    /// Largest node index touched by any delay in [0, max_delay].
    int history_depth(double max_delay) const {
        const int m = static_cast<int>(std::floor(max_delay / dt_));
        return m < q_ ? 2 * q_ : m + q_ + 1;
    }

    /// Monomial coefficients (local variable (tau - tau_m) / dt) of omega_{m+offset}
    /// on interval m, one row per supported node. Exposed for inspection in tests.
    std::vector<std::pair<int, std::vector<double>>> interval_polynomials(int m) const {
        const Pattern& p = patterns_[static_cast<std::size_t>(std::min(m, q_))];
        std::vector<std::pair<int, std::vector<double>>> out;
        for (std::size_t n = 0; n < p.offsets.size(); ++n) {
            out.emplace_back(m + p.offsets[n], p.coeffs[n]);
        }
        return out;
    }

private:
    struct Pattern {
        std::vector<int> offsets;                // node index minus m
        std::vector<std::vector<double>> coeffs; // degree 4q+1 monomials in x
    };

    // Lagrange basis for `node` on `stencil` (local offsets) in monomial form.
    static std::vector<double> lagrange_basis(const std::vector<int>& stencil, int node) {
        std::vector<double> poly{1.0};
        for (int s : stencil) {
            if (s == node) {
                continue;
            }
            const double denom = static_cast<double>(node - s);
            std::vector<double> next(poly.size() + 1, 0.0);
            for (std::size_t i = 0; i < poly.size(); ++i) {
                next[i + 1] += poly[i] / denom;
                next[i] -= poly[i] * s / denom;
            }
            poly = std::move(next);
        }
        return poly;
    }

    static double derivative_at(const std::vector<double>& c, int k, double x) {
        double v = 0.0;
        for (std::size_t i = static_cast<std::size_t>(k); i < c.size(); ++i) {
            double f = 1.0;
            for (int t = 0; t < k; ++t) {
                f *= static_cast<double>(i) - t;
            }
            v += c[i] * f * std::pow(x, static_cast<double>(i) - k);
        }
        return v;
    }

    std::vector<int> stencil(int m) const {
        std::vector<int> s;
        const int lo = m < q_ ? 0 : m - q_;
        for (int i = lo; i <= lo + 2 * q_; ++i) {
            s.push_back(i);
        }
        return s;
    }

    Pattern build_pattern(int m) const {
        const int order = 2 * q_;
        std::vector<int> left = stencil(m);
        std::vector<int> right = stencil(m + 1);
        for (int& s : left) {
            s -= m;
        }
        for (int& s : right) {
            s -= m;
        }
        Pattern p;
        for (int s = std::min(left.front(), right.front()); s <= std::max(left.back(), right.back()); ++s) {
            p.offsets.push_back(s);
        }
        const int n_free = order + 1;
        Eigen::MatrixXd mat(n_free, n_free);
        for (int k = 0; k <= order; ++k) {
            for (int c = 0; c < n_free; ++c) {
                const int i = order + 1 + c;
                double f = 1.0;
                for (int t = 0; t < k; ++t) {
                    f *= i - t;
                }
                mat(k, c) = f;
            }
        }
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(mat);
        for (int s : p.offsets) {
            const bool in_left = s >= left.front() && s <= left.back();
            const bool in_right = s >= right.front() && s <= right.back();
            const std::vector<double> pl = in_left ? lagrange_basis(left, s) : std::vector<double>{0.0};
            const std::vector<double> pr = in_right ? lagrange_basis(right, s) : std::vector<double>{0.0};
            std::vector<double> h(static_cast<std::size_t>(4 * q_ + 2), 0.0);
            double fact = 1.0;
            for (int k = 0; k <= order; ++k) {
                if (k > 0) {
                    fact *= k;
                }
                h[static_cast<std::size_t>(k)] = derivative_at(pl, k, 0.0) / fact;
            }
            Eigen::VectorXd rhs(n_free);
            for (int k = 0; k <= order; ++k) {
                double known = 0.0;
                for (int i = k; i <= order; ++i) {
                    double f = 1.0;
                    for (int t = 0; t < k; ++t) {
                        f *= i - t;
                    }
                    known += h[static_cast<std::size_t>(i)] * f;
                }
                rhs(k) = derivative_at(pr, k, 1.0) - known;
            }
            const Eigen::VectorXd tail = lu.solve(rhs);
            for (int c = 0; c < n_free; ++c) {
                h[static_cast<std::size_t>(order + 1 + c)] = tail(c);
            }
            p.coeffs.push_back(std::move(h));
        }
        return p;
    }

    int q_;
    double dt_;
    std::vector<Pattern> patterns_;  // m = 0..q-1 start-up, index q for all m >= q
};

inline SplineBasis build_spline_basis(int q, double dt) { return SplineBasis(q, dt); }

inline std::vector<SplineWeight> spline_weights(const SplineBasis& basis, double tau, int derivative) {
    return basis.weights(tau, derivative);
}

}  // namespace droplet
