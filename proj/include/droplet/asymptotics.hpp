#pragma once

// Leading-order droplet response W_N(x, t) = sum_{n <= N} (xi_n + zeta_n), with
//
//   xi_n   = -K_n V(z, t'),
//   zeta_n =  K_n omega_n int_0^{t'} sin(omega_n (t' - s)) V(z, s) ds,
//
// t' = t - |x - z| / c0 and K_n = avg_n^2 / (4 pi |x - z| lambda_n).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "droplet/geometry.hpp"
#include "droplet/newtonian.hpp"
#include "droplet/sources.hpp"

namespace droplet {

struct ExpansionOptions {
    /// Upper bound on the Simpson step of the memory integral.
    double max_step = 1e-3;
    /// Minimum samples per period of the mode frequency.
    int samples_per_period = 8;
};

struct ExpansionTerm {
    int n = 0;
    double xi = 0.0;
    double zeta = 0.0;
};

inline double mode_frequency(const EigenMode& mode, const Droplet& droplet) {
    return mode.omega ? *mode.omega : droplet.c1() / std::sqrt(mode.lambda);
}

/// K_n = avg^2 / (4 pi R lambda); equals 2a / (R mu^2) for l = 0.
inline double mode_coupling(const EigenMode& mode, double R) {
    return mode.avg * mode.avg / (4.0 * pi * R * mode.lambda);
}

/// alpha_n = omega_n K_n = 2 c1 / ((n - 1/2) pi R).
inline double mode_amplitude(const EigenMode& mode, const Droplet& droplet, double R) {
    return mode_frequency(mode, droplet) * mode_coupling(mode, R);
}

namespace detail {

/// Even number of Simpson intervals on [0, length] with step <= h.
inline std::size_t simpson_intervals(double length, double h) {
    auto n = static_cast<std::size_t>(std::ceil(length / h - 1e-12));
    n = std::max<std::size_t>(n, 2);
    return n + (n % 2);
}

inline double simpson_weight(std::size_t k, std::size_t n) {
    if (k == 0 || k == n) {
        return 1.0 / 3.0;
    }
    return (k % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
}

inline double memory_step(double omega, const ExpansionOptions& opt) {
    return std::min(opt.max_step, 2.0 * pi / (opt.samples_per_period * omega));
}

}  // namespace detail

/// int_0^{t'} sin(omega (t' - s)) f(s) ds for f vanishing beyond `settle`,
/// by composite Simpson on [0, min(t', settle)].
template <class F>
double memory_integral(F&& f, double omega, double t_prime, double settle, const ExpansionOptions& opt = {}) {
    if (!(t_prime > 0.0)) {
        return 0.0;
    }
    const double upper = std::min(t_prime, settle);
    const std::size_t n = detail::simpson_intervals(upper, detail::memory_step(omega, opt));
    const double h = upper / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double s = h * static_cast<double>(k);
        sum += detail::simpson_weight(k, n) * std::sin(omega * (t_prime - s)) * f(s);
    }
    return sum * h;
}

inline ExpansionTerm expansion_term(const EigenMode& mode, const Droplet& droplet, const SourceModel& model,
                                    const Vec3& x, double t, const ExpansionOptions& opt = {}) {
    const Vec3& z = droplet.center();
    const double R = distance(x, z);
    if (!(R > 0.0)) {
        throw std::domain_error("expansion_term: receiver coincides with the droplet centre");
    }
    ExpansionTerm term;
    term.n = mode.j;
    const double tp = t - R / model.c0();
    if (!(tp > 0.0)) {
        return term;
    }
    const double K = mode_coupling(mode, R);
    const double omega = mode_frequency(mode, droplet);
    term.xi = -K * model.V(z, tp);
    term.zeta = K * omega *
                memory_integral([&](double s) { return model.V(z, s); }, omega, tp, model.settle_time(z), opt);
    return term;
}

/// Sum of the first N terms in the order n = 1..N. V(z, .) is sampled once on
/// the grid of the fastest mode and shared by all terms.
inline double expansion_W_N(std::span<const EigenMode> modes, const Droplet& droplet, const SourceModel& model,
                            const Vec3& x, double t, int N, const ExpansionOptions& opt = {}) {
    if (N < 1 || static_cast<std::size_t>(N) > modes.size()) {
        throw std::invalid_argument("expansion_W_N: N must lie in [1, number of modes]");
    }
    const Vec3& z = droplet.center();
    const double R = distance(x, z);
    if (!(R > 0.0)) {
        throw std::domain_error("expansion_W_N: receiver coincides with the droplet centre");
    }
    const double tp = t - R / model.c0();
    if (!(tp > 0.0)) {
        return 0.0;
    }
    double omega_max = 0.0;
    for (int n = 0; n < N; ++n) {
        omega_max = std::max(omega_max, mode_frequency(modes[static_cast<std::size_t>(n)], droplet));
    }
    const double upper = std::min(tp, model.settle_time(z));
    const std::size_t m = detail::simpson_intervals(upper, detail::memory_step(omega_max, opt));
    const double h = upper / static_cast<double>(m);
    std::vector<double> samples(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        samples[k] = detail::simpson_weight(k, m) * h * model.V(z, h * static_cast<double>(k));
    }
    const double v_now = model.V(z, tp);
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        const EigenMode& mode = modes[static_cast<std::size_t>(n)];
        const double K = mode_coupling(mode, R);
        const double omega = mode_frequency(mode, droplet);
        double integral = 0.0;
        for (std::size_t k = 0; k <= m; ++k) {
            integral += std::sin(omega * (tp - h * static_cast<double>(k))) * samples[k];
        }
        total += -K * v_now + K * omega * integral;
    }
    return total;
}

/// Sampled U(x*, t) on [t_start, t_start + duration].
struct MeasurementTrace {
    Vec3 x_star;
    double t_start = 0.0;
    double duration = 0.0;
    std::vector<double> times;
    std::vector<double> values;
    double noise_level = 0.0;
    std::string noise_kind = "none";  ///< "none", "relative" or "absolute"
    std::uint64_t seed = 0;

    std::size_t size() const { return values.size(); }
    double step() const { return times.size() > 1 ? duration / static_cast<double>(times.size() - 1) : 0.0; }

    void write_csv(std::ostream& os) const {
        os << "t,U\n";
        const auto old = os.precision(17);
        for (std::size_t k = 0; k < values.size(); ++k) {
            os << times[k] << ',' << values[k] << '\n';
        }
        os.precision(old);
    }
};

/// Default sample count per window: 2 pi / b split into max(64, 8N) steps.
inline int default_trace_intervals(int N) { return std::max(64, 8 * N); }

inline std::vector<double> window_times(double t_start, double duration, int intervals) {
    if (intervals < 2) {
        throw std::invalid_argument("window_times: need at least two intervals");
    }
    std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
    for (int k = 0; k <= intervals; ++k) {
        t[static_cast<std::size_t>(k)] = t_start + duration * k / intervals;
    }
    return t;
}

/// Throws if V(z, .) has not settled before the window opens at the receiver.
inline void check_window(const SourceModel& model, const Droplet& droplet, const Vec3& x_star, double t_start) {
    const double need = model.settle_time(droplet.center()) + distance(x_star, droplet.center()) / model.c0();
    if (!(t_start > need)) {
        throw std::invalid_argument("measurement window opens at " + std::to_string(t_start) +
                                    " but requires T_start > settle time + |x* - z| / c0 = " + std::to_string(need));
    }
}

/// U(x*, t) = V(x*, t) + W_N(x*, t) on the Riesz window [t_start, t_start + 2 pi / b].
inline MeasurementTrace synthesize_measurement(std::span<const EigenMode> modes, const Droplet& droplet,
                                               const SourceModel& model, const Vec3& x_star, double t_start, int N,
                                               int intervals = 0, const ExpansionOptions& opt = {}) {
    check_window(model, droplet, x_star, t_start);
    MeasurementTrace trace;
    trace.x_star = x_star;
    trace.t_start = t_start;
    trace.duration = 2.0 * pi / droplet.riesz_b();
    trace.times = window_times(t_start, trace.duration, intervals > 0 ? intervals : default_trace_intervals(N));
    trace.values.reserve(trace.times.size());
    for (double t : trace.times) {
        trace.values.push_back(incident_field(model, x_star, t) + expansion_W_N(modes, droplet, model, x_star, t, N, opt));
    }
    return trace;
}

/// Fast synthesis of many traces that share modes, receiver and window but
/// differ in the droplet position. Uses the moments
///   I_c = int cos(omega s) V(z, s) ds,  I_s = int sin(omega s) V(z, s) ds
/// over [0, settle], which are exact once V(z, .) has settled.
class TraceSynthesizer {
public:
    TraceSynthesizer(std::vector<EigenMode> modes, double riesz_b, double c0, Vec3 x_star, double t_start,
                     double settle, int intervals, const ExpansionOptions& opt = {})
        : modes_(std::move(modes)), b_(riesz_b), c0_(c0), x_star_(x_star), t_start_(t_start), settle_(settle) {
        if (modes_.empty()) {
            throw std::invalid_argument("TraceSynthesizer: need at least one mode");
        }
        if (!std::isfinite(settle) || !(settle > 0.0)) {
            throw std::invalid_argument("TraceSynthesizer: requires a finite settle time");
        }
        duration_ = 2.0 * pi / b_;
        times_ = window_times(t_start, duration_, intervals);
        omega_.resize(modes_.size());
        for (std::size_t n = 0; n < modes_.size(); ++n) {
            // omega = c1 / sqrt(lambda) with c1 = a b / pi
            omega_[n] = modes_[n].radius * b_ / pi / std::sqrt(modes_[n].lambda);
        }
        const double omega_max = *std::max_element(omega_.begin(), omega_.end());
        m_ = detail::simpson_intervals(settle_, detail::memory_step(omega_max, opt));
        h_ = settle_ / static_cast<double>(m_);
        cos_.resize(modes_.size() * (m_ + 1));
        sin_.resize(modes_.size() * (m_ + 1));
        for (std::size_t n = 0; n < modes_.size(); ++n) {
            for (std::size_t k = 0; k <= m_; ++k) {
                const double s = h_ * static_cast<double>(k);
                const double w = detail::simpson_weight(k, m_) * h_;
                cos_[n * (m_ + 1) + k] = w * std::cos(omega_[n] * s);
                sin_[n * (m_ + 1) + k] = w * std::sin(omega_[n] * s);
            }
        }
        wave_sin_.resize(modes_.size() * times_.size());
        wave_cos_.resize(modes_.size() * times_.size());
        for (std::size_t n = 0; n < modes_.size(); ++n) {
            for (std::size_t k = 0; k < times_.size(); ++k) {
                wave_sin_[n * times_.size() + k] = std::sin(omega_[n] * times_[k]);
                wave_cos_[n * times_.size() + k] = std::cos(omega_[n] * times_[k]);
            }
        }
    }

    std::span<const double> times() const { return times_; }
    double settle() const { return settle_; }
    std::size_t quadrature_intervals() const { return m_; }

    /// Trace for a droplet at z. V(x*, t) is taken from the model.
    MeasurementTrace trace(const SourceModel& model, const Vec3& z) const {
        if (model.settle_time(z) > settle_ * (1.0 + 1e-12)) {
            throw std::invalid_argument("TraceSynthesizer: V(z, .) settles after the moment horizon");
        }
        const double R = distance(x_star_, z);
        if (!(t_start_ > settle_ + R / c0_)) {
            throw std::invalid_argument("TraceSynthesizer: window opens before V(z, .) has passed the receiver");
        }
        std::vector<double> v(m_ + 1);
        for (std::size_t k = 0; k <= m_; ++k) {
            v[k] = model.V(z, h_ * static_cast<double>(k));
        }
        MeasurementTrace out;
        out.x_star = x_star_;
        out.t_start = t_start_;
        out.duration = duration_;
        out.times = times_;
        out.values.assign(times_.size(), 0.0);
        for (std::size_t k = 0; k < times_.size(); ++k) {
            out.values[k] = incident_field(model, x_star_, times_[k]);
        }
        const double delay = R / c0_;
        for (std::size_t n = 0; n < modes_.size(); ++n) {
            double ic = 0.0;
            double is = 0.0;
            const double* cn = &cos_[n * (m_ + 1)];
            const double* sn = &sin_[n * (m_ + 1)];
            for (std::size_t k = 0; k <= m_; ++k) {
                ic += cn[k] * v[k];
                is += sn[k] * v[k];
            }
            const double alpha = omega_[n] * mode_coupling(modes_[n], R);
            // sin(omega (t - d)) I_c - cos(omega (t - d)) I_s expanded around sin/cos(omega t).
            const double cd = std::cos(omega_[n] * delay);
            const double sd = std::sin(omega_[n] * delay);
            const double p = alpha * (ic * cd - is * sd);
            const double q = alpha * (-ic * sd - is * cd);
            const double* ws = &wave_sin_[n * times_.size()];
            const double* wc = &wave_cos_[n * times_.size()];
            for (std::size_t k = 0; k < times_.size(); ++k) {
                out.values[k] += p * ws[k] + q * wc[k];
            }
        }
        return out;
    }

private:
    std::vector<EigenMode> modes_;
    double b_;
    double c0_;
    Vec3 x_star_;
    double t_start_;
    double settle_;
    double duration_ = 0.0;
    std::vector<double> times_;
    std::vector<double> omega_;
    std::size_t m_ = 0;
    double h_ = 0.0;
    std::vector<double> cos_, sin_;
    std::vector<double> wave_sin_, wave_cos_;
};

/// (n - 1/2)^2 (int_B e_n)^2 on the unit ball, i.e. 8 / (pi mu_n^2).
inline double unit_ball_mode_weight(int n) {
    const EigenMode e = eigenmode(0, n, 0, 1.0);
    return (n - 0.5) * (n - 0.5) * e.avg * e.avg;
}

}  // namespace droplet
