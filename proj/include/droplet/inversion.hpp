#pragma once

// Recovery of V(z, .) on [0, 2 pi / b] from one trace in the Riesz basis
// {cos(omega_n (t - pi/b)), sin(omega_n (t - pi/b))}, omega_n = b (n - 1/2),
// followed by mollified differentiation and J = c0^-2 V_tt - Delta V.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "droplet/asymptotics.hpp"
#include "droplet/geometry.hpp"
#include "droplet/newtonian.hpp"

namespace droplet {

struct RieszCoefficients {
    double b = 0.0;
    std::vector<double> omega;
    std::vector<double> alpha;
    std::vector<double> A, B, C, D;

    int N() const { return static_cast<int>(omega.size()); }
};

namespace detail {

inline std::vector<double> trapezoid_weights(std::size_t samples, double h) {
    std::vector<double> w(samples, h);
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

}  // namespace detail

/// Coefficients from a trace on [T, T + 2 pi / b] for a droplet at z. The trace
/// quadrature is the trapezoid rule on its own samples.
inline RieszCoefficients riesz_coefficients(const MeasurementTrace& trace, const Droplet& droplet,
                                            std::span<const EigenMode> modes, int N) {
    if (N < 1 || static_cast<std::size_t>(N) > modes.size()) {
        throw std::invalid_argument("riesz_coefficients: N must lie in [1, number of modes]");
    }
    const double b = droplet.riesz_b();
    const double window = 2.0 * pi / b;
    if (std::abs(trace.duration - window) > 1e-9 * window) {
        throw std::invalid_argument("riesz_coefficients: trace duration differs from 2 pi / b");
    }
    if (trace.values.size() < 3 || trace.values.size() != trace.times.size()) {
        throw std::invalid_argument("riesz_coefficients: malformed trace");
    }
    const double R = distance(trace.x_star, droplet.center());
    const double h = trace.duration / static_cast<double>(trace.values.size() - 1);
    const auto w = detail::trapezoid_weights(trace.values.size(), h);
    RieszCoefficients out;
    out.b = b;
    for (int n = 0; n < N; ++n) {
        const EigenMode& mode = modes[static_cast<std::size_t>(n)];
        const double omega = mode_frequency(mode, droplet);
        const double alpha = omega * mode_coupling(mode, R);
        if (alpha == 0.0) {
            throw std::invalid_argument("riesz_coefficients: mode has zero amplitude");
        }
        double is = 0.0;
        double ic = 0.0;
        for (std::size_t k = 0; k < trace.values.size(); ++k) {
            const double phase = omega * (trace.times[k] - trace.t_start - pi / b);
            is += w[k] * std::sin(phase) * trace.values[k];
            ic += w[k] * std::cos(phase) * trace.values[k];
        }
        const double A = b / (pi * alpha) * is;
        const double Bn = -b / (pi * alpha) * ic;
        const double theta = omega * (trace.t_start - R / droplet.c0());
        out.omega.push_back(omega);
        out.alpha.push_back(alpha);
        out.A.push_back(A);
        out.B.push_back(Bn);
        out.C.push_back(std::cos(theta) * A - std::sin(theta) * Bn);
        out.D.push_back(std::sin(theta) * A + std::cos(theta) * Bn);
    }
    return out;
}

/// riesz_coefficients for many traces that share modes, receiver offset grid and
/// window length, with the trigonometric tables computed once.
class RieszProjector {
public:
    RieszProjector(std::vector<EigenMode> modes, double riesz_b, double c0, int N, int intervals)
        : modes_(std::move(modes)), b_(riesz_b), c0_(c0), samples_(static_cast<std::size_t>(intervals) + 1) {
        if (N < 1 || static_cast<std::size_t>(N) > modes_.size()) {
            throw std::invalid_argument("RieszProjector: N must lie in [1, number of modes]");
        }
        if (intervals < 2) {
            throw std::invalid_argument("RieszProjector: need at least two intervals");
        }
        modes_.resize(static_cast<std::size_t>(N));
        const double window = 2.0 * pi / b_;
        const double h = window / intervals;
        const auto w = detail::trapezoid_weights(samples_, h);
        for (const auto& mode : modes_) {
            const double omega = mode.omega ? *mode.omega : mode.radius * b_ / pi / std::sqrt(mode.lambda);
            omega_.push_back(omega);
            for (std::size_t k = 0; k < samples_; ++k) {
                const double phase = omega * (h * static_cast<double>(k) - pi / b_);
                sin_.push_back(w[k] * std::sin(phase));
                cos_.push_back(w[k] * std::cos(phase));
            }
        }
    }

    int N() const { return static_cast<int>(modes_.size()); }
    std::size_t samples() const { return samples_; }

    /// Coefficients of trace samples on [t_start, t_start + 2 pi / b] for a droplet at distance R.
    RieszCoefficients coefficients(std::span<const double> values, double t_start, double R) const {
        if (values.size() != samples_) {
            throw std::invalid_argument("RieszProjector: trace has " + std::to_string(values.size()) +
                                        " samples, expected " + std::to_string(samples_));
        }
        RieszCoefficients out;
        out.b = b_;
        for (std::size_t n = 0; n < modes_.size(); ++n) {
            const double omega = omega_[n];
            const double alpha = omega * mode_coupling(modes_[n], R);
            const double* sn = &sin_[n * samples_];
            const double* cn = &cos_[n * samples_];
            double is = 0.0;
            double ic = 0.0;
            for (std::size_t k = 0; k < samples_; ++k) {
                is += sn[k] * values[k];
                ic += cn[k] * values[k];
            }
            const double A = b_ / (pi * alpha) * is;
            const double Bn = -b_ / (pi * alpha) * ic;
            const double theta = omega * (t_start - R / c0_);
            out.omega.push_back(omega);
            out.alpha.push_back(alpha);
            out.A.push_back(A);
            out.B.push_back(Bn);
            out.C.push_back(std::cos(theta) * A - std::sin(theta) * Bn);
            out.D.push_back(std::sin(theta) * A + std::cos(theta) * Bn);
        }
        return out;
    }

private:
    std::vector<EigenMode> modes_;
    double b_;
    double c0_;
    std::size_t samples_;
    std::vector<double> omega_;
    std::vector<double> sin_, cos_;
};

/// C_n, D_n of a known V(s) on [0, 2 pi / b], trapezoid rule with `intervals` steps.
inline RieszCoefficients direct_coefficients(const std::function<double(double)>& v, double b, int N,
                                             int intervals = 512) {
    if (N < 1 || intervals < 2) {
        throw std::invalid_argument("direct_coefficients: need N >= 1 and at least two intervals");
    }
    const double window = 2.0 * pi / b;
    const double h = window / intervals;
    const auto w = detail::trapezoid_weights(static_cast<std::size_t>(intervals) + 1, h);
    std::vector<double> samples(static_cast<std::size_t>(intervals) + 1);
    for (int k = 0; k <= intervals; ++k) {
        samples[static_cast<std::size_t>(k)] = v(h * k);
    }
    RieszCoefficients out;
    out.b = b;
    for (int n = 1; n <= N; ++n) {
        const double omega = b * (n - 0.5);
        double c = 0.0;
        double d = 0.0;
        for (int k = 0; k <= intervals; ++k) {
            const double phase = omega * (h * k - pi / b);
            c += w[static_cast<std::size_t>(k)] * std::cos(phase) * samples[static_cast<std::size_t>(k)];
            d += w[static_cast<std::size_t>(k)] * std::sin(phase) * samples[static_cast<std::size_t>(k)];
        }
        out.omega.push_back(omega);
        out.alpha.push_back(0.0);
        out.A.push_back(0.0);
        out.B.push_back(0.0);
        out.C.push_back(c);
        out.D.push_back(d);
    }
    return out;
}

/// V_N(t) = (b / pi) sum_n [C_n cos(omega_n (t - pi/b)) + D_n sin(omega_n (t - pi/b))].
inline double reconstruct_V(const RieszCoefficients& c, double t) {
    const double window = 2.0 * pi / c.b;
    if (t < -1e-12 * window || t > window * (1.0 + 1e-12)) {
        throw std::domain_error("reconstruct_V: time outside [0, 2 pi / b]");
    }
    double sum = 0.0;
    for (std::size_t n = 0; n < c.omega.size(); ++n) {
        const double phase = c.omega[n] * (t - pi / c.b);
        sum += c.C[n] * std::cos(phase) + c.D[n] * std::sin(phase);
    }
    return c.b / pi * sum;
}

struct TruncationChoice {
    int N = 1;
    double predicted_error = 0.0;  ///< (delta / a + a)^(2/3), up to constants
};

/// N = max(1, round((delta / a + a)^(-1/6))).
inline TruncationChoice choose_truncation(double delta, double a) {
    if (!(delta >= 0.0) || !(a > 0.0)) {
        throw std::invalid_argument("choose_truncation: need delta >= 0 and a > 0");
    }
    const double s = delta / a + a;
    TruncationChoice c;
    c.N = std::max(1, static_cast<int>(std::lround(std::pow(s, -1.0 / 6.0))));
    c.predicted_error = std::pow(s, 2.0 / 3.0);
    return c;
}

/// eps = sqrt(2 delta_f / (3 M2 sqrt(pi))).
inline double optimal_epsilon(double delta_f, double m2) {
    if (!(delta_f >= 0.0) || !(m2 > 0.0)) {
        throw std::invalid_argument("optimal_epsilon: need delta_f >= 0 and M2 > 0");
    }
    return std::sqrt(2.0 * delta_f / (3.0 * m2 * std::sqrt(pi)));
}

/// Discrete mollified differentiation with the normalized bump
/// eta_eps(x) = exp(1 / ((x/eps)^2 - 1)) / (eps * mass) on |x| < eps, eps = (n_t + 1) dtau.
/// Each pass is a trapezoid sum over the 2 n_t + 1 interior nodes of (-eps, eps)
/// and trims n_t samples from each end.
class Mollifier {
public:
    Mollifier(int n_t, double dtau) : n_t_(n_t), dtau_(dtau), eps_((n_t + 1) * dtau) {
        if (n_t < 1 || !(dtau > 0.0)) {
            throw std::invalid_argument("Mollifier: need n_t >= 1 and dtau > 0");
        }
        first_.resize(static_cast<std::size_t>(2 * n_t_ + 1));
        for (int l = -n_t_; l <= n_t_; ++l) {
            first_[static_cast<std::size_t>(l + n_t_)] = eta_prime(l * dtau_) * dtau_;
        }
        second_.assign(static_cast<std::size_t>(4 * n_t_ + 1), 0.0);
        for (std::size_t i = 0; i < first_.size(); ++i) {
            for (std::size_t j = 0; j < first_.size(); ++j) {
                second_[i + j] += first_[i] * first_[j];
            }
        }
    }

    /// Mollifier for a given radius; eps must be a multiple (n_t + 1) of dtau.
    static Mollifier from_epsilon(double eps, double dtau) {
        const double ratio = eps / dtau;
        const long k = std::lround(ratio);
        if (std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio || k < 2) {
            throw std::invalid_argument("Mollifier: eps must equal (n_t + 1) dtau with n_t >= 1");
        }
        return Mollifier(static_cast<int>(k - 1), dtau);
    }

    int n_t() const { return n_t_; }
    double dtau() const { return dtau_; }
    double epsilon() const { return eps_; }
    /// Samples removed from each end by two passes.
    int second_derivative_trim() const { return 2 * n_t_; }

    /// int_{-1}^{1} exp(1 / (u^2 - 1)) du.
    static double bump_mass() {
        static const double mass = [] {
            // Trapezoid on a compactly supported smooth function converges faster than any power.
            const int n = 20000;
            double s = 0.0;
            for (int k = 1; k < n; ++k) {
                const double u = -1.0 + 2.0 * k / n;
                s += std::exp(1.0 / (u * u - 1.0));
            }
            return s * 2.0 / n;
        }();
        return mass;
    }

    double eta(double x) const {
        const double u = x / eps_;
        if (!(std::abs(u) < 1.0)) {
            return 0.0;
        }
        return std::exp(1.0 / (u * u - 1.0)) / (eps_ * bump_mass());
    }

    double eta_prime(double x) const {
        const double u = x / eps_;
        if (!(std::abs(u) < 1.0)) {
            return 0.0;
        }
        const double g = u * u - 1.0;
        return std::exp(1.0 / g) * (-2.0 * u / (g * g)) / (eps_ * eps_ * bump_mass());
    }

    /// Trapezoid sum of eta over its support at step dtau.
    double discrete_mass() const {
        double s = 0.0;
        for (int l = -n_t_; l <= n_t_; ++l) {
            s += eta(l * dtau_) * dtau_;
        }
        return s;
    }

    /// f'_eps on the trimmed range; output[k] belongs to input index k + n_t.
    std::vector<double> first_derivative(std::span<const double> f) const {
        return apply(f, first_);
    }

    /// Two passes of first_derivative; output[k] belongs to input index k + 2 n_t.
    std::vector<double> second_derivative(std::span<const double> f) const {
        return apply(f, second_);
    }

    /// Second derivative at the centre of exactly 4 n_t + 1 samples.
    double second_derivative_at_centre(std::span<const double> f) const {
        if (f.size() != second_.size()) {
            throw std::invalid_argument("Mollifier: window must hold exactly 4 n_t + 1 samples");
        }
        double s = 0.0;
        for (std::size_t m = 0; m < second_.size(); ++m) {
            s += second_[m] * f[second_.size() - 1 - m];
        }
        return s;
    }

private:
    // out[k] = sum_l f[c - l] kernel[l + h], c = k + h, h = (width - 1) / 2
    static std::vector<double> apply(std::span<const double> f, const std::vector<double>& kernel) {
        const std::size_t width = kernel.size();
        if (f.size() < width) {
            throw std::invalid_argument("Mollifier: series of " + std::to_string(f.size()) +
                                        " samples is shorter than the kernel width " + std::to_string(width));
        }
        std::vector<double> out(f.size() - width + 1, 0.0);
        for (std::size_t k = 0; k < out.size(); ++k) {
            double s = 0.0;
            for (std::size_t m = 0; m < width; ++m) {
                s += kernel[m] * f[k + width - 1 - m];
            }
            out[k] = s;
        }
        return out;
    }

    int n_t_;
    double dtau_;
    double eps_;
    std::vector<double> first_;
    std::vector<double> second_;
};

/// Second derivative of a uniform series by two mollification passes at radius eps.
inline std::vector<double> mollified_second_derivative(std::span<const double> samples, double dtau, double eps) {
    return Mollifier::from_epsilon(eps, dtau).second_derivative(samples);
}

/// Uniform axis-aligned lattice origin + step * (i, j, k).
struct Lattice3 {
    Vec3 origin;
    double step = 0.0;
    int nx = 0, ny = 0, nz = 0;

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * ny + j) * nz + k;
    }
    Vec3 point(int i, int j, int k) const {
        return origin + Vec3{step * i, step * j, step * k};
    }

    /// Lattice covering [lo, hi] per axis, both ends included.
    static Lattice3 spanning(const Vec3& lo, const Vec3& hi, double step) {
        if (!(step > 0.0)) {
            throw std::invalid_argument("Lattice3: step must be positive");
        }
        auto count = [&](double a, double b) {
            const double n = (b - a) / step;
            const long r = std::lround(n);
            if (r < 0 || std::abs(n - static_cast<double>(r)) > 1e-6) {
                throw std::invalid_argument("Lattice3: extent is not a multiple of the step");
            }
            return static_cast<int>(r) + 1;
        };
        return {lo, step, count(lo.x, hi.x), count(lo.y, hi.y), count(lo.z, hi.z)};
    }

    /// Same spacing with `trim` points removed from both ends of every axis.
    Lattice3 shrunk(int trim) const {
        Lattice3 s{origin + Vec3{step * trim, step * trim, step * trim}, step, nx - 2 * trim, ny - 2 * trim,
                   nz - 2 * trim};
        if (s.nx < 1 || s.ny < 1 || s.nz < 1) {
            throw std::invalid_argument("Lattice3: lattice too small for the mollification window");
        }
        return s;
    }
};

/// V_N sampled on a lattice of droplet positions and on times t0 + k dtau.
struct ReconstructedField {
    Lattice3 lattice;
    double t0 = 0.0;
    double dtau = 0.0;
    int nt = 0;
    int N = 0;
    std::vector<double> values;  ///< values[point * nt + k]

    double time(int k) const { return t0 + dtau * k; }
    double& at(std::size_t point, int k) { return values[point * static_cast<std::size_t>(nt) + static_cast<std::size_t>(k)]; }
    double at(std::size_t point, int k) const {
        return values[point * static_cast<std::size_t>(nt) + static_cast<std::size_t>(k)];
    }
};

/// Source estimate at one time on the lattice left after mollification.
struct SourceEstimate {
    Lattice3 lattice;
    double t = 0.0;
    std::vector<double> V;
    std::vector<double> V_tt;
    std::vector<double> laplacian_V;
    std::vector<double> J;
};

/// J = c0^-2 V_tt - Delta V at time index k on the lattice shrunk by 2 n_t per side.
inline SourceEstimate assemble_source(const ReconstructedField& field, double c0, const Mollifier& mol, int k) {
    const Lattice3& L = field.lattice;
    if (std::abs(field.dtau - mol.dtau()) > 1e-12 * mol.dtau() || std::abs(L.step - mol.dtau()) > 1e-12 * mol.dtau()) {
        throw std::invalid_argument("assemble_source: time step, lattice step and mollifier step must agree");
    }
    const int trim = mol.second_derivative_trim();
    if (k - trim < 0 || k + trim >= field.nt) {
        throw std::invalid_argument("assemble_source: time series too short around the requested time");
    }
    SourceEstimate out;
    out.lattice = L.shrunk(trim);
    out.t = field.time(k);
    const std::size_t n = out.lattice.size();
    out.V.resize(n);
    out.V_tt.resize(n);
    out.laplacian_V.resize(n);
    out.J.resize(n);
    const std::size_t width = static_cast<std::size_t>(4 * mol.n_t() + 1);
    std::vector<double> buf(width);
    for (int i = 0; i < out.lattice.nx; ++i) {
        for (int j = 0; j < out.lattice.ny; ++j) {
            for (int l = 0; l < out.lattice.nz; ++l) {
                const int gi = i + trim, gj = j + trim, gl = l + trim;
                const std::size_t p = L.index(gi, gj, gl);
                for (std::size_t m = 0; m < width; ++m) {
                    buf[m] = field.at(p, k - trim + static_cast<int>(m));
                }
                const double vtt = mol.second_derivative_at_centre(buf);
                double lap = 0.0;
                for (std::size_t m = 0; m < width; ++m) {
                    buf[m] = field.at(L.index(gi - trim + static_cast<int>(m), gj, gl), k);
                }
                lap += mol.second_derivative_at_centre(buf);
                for (std::size_t m = 0; m < width; ++m) {
                    buf[m] = field.at(L.index(gi, gj - trim + static_cast<int>(m), gl), k);
                }
                lap += mol.second_derivative_at_centre(buf);
                for (std::size_t m = 0; m < width; ++m) {
                    buf[m] = field.at(L.index(gi, gj, gl - trim + static_cast<int>(m)), k);
                }
                lap += mol.second_derivative_at_centre(buf);
                const std::size_t q = out.lattice.index(i, j, l);
                out.V[q] = field.at(p, k);
                out.V_tt[q] = vtt;
                out.laplacian_V[q] = lap;
                out.J[q] = vtt / (c0 * c0) - lap;
            }
        }
    }
    return out;
}

}  // namespace droplet
