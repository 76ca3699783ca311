// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "droplet/experiments.hpp"

using namespace droplet;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Scenario preset(const std::string& name) {
    return load_scenario(std::filesystem::path(DROPLET_SCENARIO_DIR) / (name + ".json"));
}

void guarded(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

// Published residuals, rows (l, m) = (0,0), (1,0), (1,1), j = 1..6.
constexpr std::array<std::array<double, 6>, 3> reference_residuals{{
    {3.137e-16, 3.725e-15, 1.905e-11, 4.350e-8, 1.024e-5, 5.702e-4},
    {4.627e-16, 1.636e-13, 1.482e-9, 7.091e-7, 6.195e-5, 1.697e-3},
    {3.881e-16, 1.720e-13, 1.534e-9, 7.166e-7, 6.043e-5, 1.579e-3},
}};

void criterion_1() {
    const auto cfg = std::get<EigenResidualConfig>(preset("eigen-residuals").body);
    const EigenResidualResult r = run_eigen_residuals(cfg);
    bool pass = r.points == 3112 && r.rows.size() == 18;
    double worst = 0.0;
    for (std::size_t i = 0; i < r.rows.size() && i < 18; ++i) {
        const double ratio = r.rows[i].err / reference_residuals[i / 6][i % 6];
        worst = std::max(worst, ratio);
        pass = pass && ratio <= 100.0;
    }
    report(1, pass, fmt("points=%zu, worst err/reference=%.3g (limit 100)", r.points, worst));
}

void criterion_2() {
    const double coupling = coupling_sum_fraction(1.0, 20);
    const double weight = mode_weight_sum(20);
    const double rel = std::abs(weight - 4.0 / pi) / (4.0 / pi);
    report(2, coupling >= 0.99 && rel <= 0.01,
           fmt("sum avg^2/lambda / (4 pi a) = %.5f (need >= 0.99); sum (n-1/2)^2 (int e_n)^2 = %.5f vs 4/pi = %.5f, "
               "rel. gap %.4f (need <= 0.01)",
               coupling, weight, 4.0 / pi, rel));
}

struct ForwardMeasure {
    double a = 0.0;
    std::map<int, double> max_diff;  ///< keyed by ramp power
    double max_w8 = 0.0;             ///< p = 4
    double causality = 0.0;          ///< max over powers of max|W| before arrival / scale
};

void criteria_3_to_5() {
    const auto cfg = std::get<ForwardConfig>(preset("forward-ramp-p4").body);
    std::vector<ForwardMeasure> runs;
    for (double a : cfg.radii) {
        const Droplet d(cfg.center, a, cfg.riesz_b, cfg.c0);
        const LseSolver solver(d, BallQuadrature(cfg.lse.n_r, cfg.lse.n_s), cfg.lse.options(d));
        const auto modes = modes_l0(d, 8);
        const double arrival = (distance(cfg.receiver, cfg.center) - a) / cfg.c0;
        ForwardMeasure m;
        m.a = a;
        for (int p : {4, 3}) {
            const PolynomialRampSource src(p, cfg.c0);
            const auto hist = solver.march(src, required_horizon(d, cfg.receiver, cfg.t_end, solver.splines()));
            double diff = 0.0, scale = 0.0, early = 0.0;
            for (double t = cfg.t_begin; t <= cfg.t_end + 1e-9; t += cfg.t_step) {
                const double w = scattered_field(hist, cfg.receiver, t);
                const double w8 = expansion_W_N(modes, d, src, cfg.receiver, t, 8);
                diff = std::max(diff, std::abs(w - w8));
                scale = std::max(scale, std::abs(w));
                if (p == 4) {
                    m.max_w8 = std::max(m.max_w8, std::abs(w8));
                }
            }
            for (int k = 0; k < cfg.causality_samples; ++k) {
                early = std::max(early, std::abs(scattered_field(hist, cfg.receiver, arrival * k / cfg.causality_samples)));
            }
            m.max_diff[p] = diff;
            m.causality = std::max(m.causality, early / scale);
        }
        runs.push_back(m);
    }
    const ForwardMeasure& big = runs.front();
    const ForwardMeasure& small = runs.back();
    const double slope = loglog_slope(big.a, big.max_diff.at(4), small.a, small.max_diff.at(4));
    report(3, slope >= 1.7 && slope <= 2.3,
           fmt("max|W_LSE - W_8| = %.3e (a=%g), %.3e (a=%g), log-log slope %.3f (need [1.7, 2.3])", big.max_diff.at(4),
               big.a, small.max_diff.at(4), small.a, slope));
    const double ratio = big.max_w8 / small.max_w8;
    report(4, std::abs(ratio - 10.0) <= 1.0, fmt("max|W_8| ratio = %.6f (need 10 +- 1)", ratio));
    double worst = 0.0;
    for (const auto& m : runs) {
        worst = std::max(worst, m.causality);
    }
    report(5, worst <= 1e-10, fmt("max|W| before first arrival / max|W| = %.3g over 4 runs (need <= 1e-10)", worst));
}

void criterion_6() {
    const double b = 2.0 * pi;
    const double w1 = 0.5 * b;
    const double w2 = 1.5 * b;
    const std::array<std::function<double(double)>, 2> inputs{
        [&](double s) { return std::cos(w1 * (s - pi / b)); }, [&](double s) { return std::sin(w2 * (s - pi / b)); }};
    double worst = 0.0;
    for (const auto& v : inputs) {
        const RieszCoefficients c = direct_coefficients(v, b, 8);
        for (int k = 0; k <= 1000; ++k) {
            const double s = (2.0 * pi / b) * k / 1000.0;
            worst = std::max(worst, std::abs(reconstruct_V(c, s) - v(s)));
        }
    }
    report(6, worst <= 1e-8, fmt("max round-trip error %.3g (need <= 1e-8)", worst));
}

void reconstruction_criterion(int id, const std::string& name, double v_max, double vtt_max, double j_max) {
    const auto cfg = std::get<ReconstructionConfig>(preset(name).body);
    const ReconstructionResult r = run_reconstruction(cfg);
    const bool pass = r.mean.V <= v_max && (vtt_max <= 0.0 || r.mean.V_tt <= vtt_max) && r.mean.J <= j_max;
    std::string limits = fmt("V %.3f%% (<= %g), ", r.mean.V, v_max);
    if (vtt_max > 0.0) {
        limits += fmt("V_tt %.3f%% (<= %g), ", r.mean.V_tt, vtt_max);
    } else {
        limits += fmt("V_tt %.3f%%, ", r.mean.V_tt);
    }
    limits += fmt("J %.3f%% (<= %g); mean of %zu seeds, %zu slice points", r.mean.J, j_max, r.errors.size(),
                  r.slice.size());
    report(id, pass, limits);
}

void criterion_10() {
    const auto cfg = std::get<TruncationConfig>(preset("truncation-study").body);
    const TruncationResult r = run_truncation_study(cfg);
    bool increasing = true, decreasing = true;
    for (std::size_t i = 1; i < r.errors.size(); ++i) {
        increasing = increasing && r.errors[i] >= r.errors[i - 1];
        decreasing = decreasing && r.errors[i] <= r.errors[i - 1];
    }
    const bool non_monotone = !increasing && !decreasing;
    const double factor = std::max<double>(r.best_N, r.predicted_N) / std::min<double>(r.best_N, r.predicted_N);
    std::string errs;
    for (std::size_t i = 0; i < r.N.size(); ++i) {
        errs += fmt("%sN=%d:%.3g%%", i ? " " : "", r.N[i], r.errors[i]);
    }
    report(10, non_monotone && factor <= 4.0,
           fmt("%s; best N=%d, predicted N=%d (factor %.2g, need <= 4), non-monotone=%s", errs.c_str(), r.best_N,
               r.predicted_N, factor, non_monotone ? "yes" : "no"));
}

}  // namespace

int main() {
    guarded(1, criterion_1);
    guarded(2, criterion_2);
    guarded(3, [] {
        try {
            criteria_3_to_5();
        } catch (const std::exception& e) {
            report(4, false, std::string("exception: ") + e.what());
            report(5, false, std::string("exception: ") + e.what());
            throw;
        }
    });
    guarded(6, criterion_6);
    guarded(7, [] { reconstruction_criterion(7, "reconstruction-a1e-3", 1.0, 10.0, 20.0); });
    guarded(8, [] { reconstruction_criterion(8, "reconstruction-a1e-4", 0.2, 8.0, 5.0); });
    guarded(9, [] { reconstruction_criterion(9, "reconstruction-a1e-2", 8.0, 0.0, 40.0); });
    guarded(10, criterion_10);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
