#pragma once

// Causal incident fields V(x, t) and their sources J = c0^-2 V_tt - Delta V.
//
// Analytic models supply V and its derivatives in closed form. The potential
// model goes the other way: it takes J on a spherical region and realizes V as
// the retarded volume potential, which is only used to cross-check analytic V.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "droplet/geometry.hpp"
#include "droplet/quadrature.hpp"

namespace droplet {

/// Anything that can be sampled as a function of space and time.
class SpaceTimeField {
public:
    virtual ~SpaceTimeField() = default;
    virtual double value(const Vec3& x, double t) const = 0;
};

class SourceModel : public SpaceTimeField {
public:
    explicit SourceModel(double c0) : c0_(c0) {
        if (!(c0 > 0.0)) {
            throw std::invalid_argument("SourceModel: c0 must be positive");
        }
    }

    double c0() const { return c0_; }
    virtual std::string name() const = 0;

    /// Incident field; zero for t <= 0.
    virtual double V(const Vec3& x, double t) const = 0;
    virtual double J(const Vec3& x, double t) const = 0;

    /// Earliest time after which V(x, .) vanishes identically (infinity if never).
    virtual double settle_time(const Vec3& x) const = 0;

    double value(const Vec3& x, double t) const override { return V(x, t); }

private:
    double c0_;
};

/// A model with closed-form V_tt and Delta V, from which J follows.
class AnalyticSource : public SourceModel {
public:
    using SourceModel::SourceModel;

    virtual double V_tt(const Vec3& x, double t) const = 0;
    virtual double laplacian_V(const Vec3& x, double t) const = 0;

    double J(const Vec3& x, double t) const override {
        return V_tt(x, t) / (c0() * c0()) - laplacian_V(x, t);
    }
};

/// V = t^p (exp(|x|^2) + 3 x_2 + x_3) H(t).
class PolynomialRampSource final : public AnalyticSource {
public:
    PolynomialRampSource(int p, double c0) : AnalyticSource(c0), p_(p) {
        if (p < 2) {
            throw std::invalid_argument("PolynomialRampSource: p must be at least 2");
        }
    }

    int power() const { return p_; }
    std::string name() const override { return "polynomial-ramp-p" + std::to_string(p_); }

    double V(const Vec3& x, double t) const override {
        return t > 0.0 ? std::pow(t, p_) * spatial(x) : 0.0;
    }
    double V_tt(const Vec3& x, double t) const override {
        return t > 0.0 ? p_ * (p_ - 1.0) * std::pow(t, p_ - 2) * spatial(x) : 0.0;
    }
    double laplacian_V(const Vec3& x, double t) const override {
        if (!(t > 0.0)) {
            return 0.0;
        }
        const double r2 = dot(x, x);
        return std::pow(t, p_) * std::exp(r2) * (6.0 + 4.0 * r2);
    }
    double settle_time(const Vec3&) const override { return std::numeric_limits<double>::infinity(); }

private:
    static double spatial(const Vec3& x) { return std::exp(dot(x, x)) + 3.0 * x.y + x.z; }
    int p_;
};

/// V = 10 sin^3(t) sin^2(2(t - 1)) (0.16 - |x|^2)(exp(0.16 - |x|^2) + 2 x_2 + x_3) on 0 < t < 1.
class PulsedSource final : public AnalyticSource {
public:
    explicit PulsedSource(double c0) : AnalyticSource(c0) {}

    std::string name() const override { return "pulsed"; }
    static constexpr double duration = 1.0;

    double V(const Vec3& x, double t) const override { return temporal(t, 0) * spatial(x); }
    double V_tt(const Vec3& x, double t) const override { return temporal(t, 2) * spatial(x); }
    double laplacian_V(const Vec3& x, double t) const override {
        const double time = temporal(t, 0);
        if (time == 0.0) {
            return 0.0;
        }
        const double r2 = dot(x, x);
        const double u = 0.16 - r2;
        const double eu = std::exp(u);
        return time * (eu * (-6.0 * (1.0 + u) + 4.0 * r2 * (2.0 + u)) - 10.0 * (2.0 * x.y + x.z));
    }
    double settle_time(const Vec3&) const override { return duration; }

    /// 10 sin^3(t) sin^2(2(t-1)) on (0, 1) and its second derivative; zero elsewhere.
    static double temporal(double t, int derivative) {
        if (!(t > 0.0 && t < duration)) {
            return 0.0;
        }
        const double s = std::sin(t);
        const double c = std::cos(t);
        const double f = s * s * s;
        const double g = std::pow(std::sin(2.0 * (t - 1.0)), 2);
        if (derivative == 0) {
            return 10.0 * f * g;
        }
        const double f1 = 3.0 * s * s * c;
        const double f2 = 6.0 * s * c * c - 3.0 * f;
        const double g1 = 2.0 * std::sin(4.0 * (t - 1.0));
        const double g2 = 8.0 * std::cos(4.0 * (t - 1.0));
        return 10.0 * (f2 * g + 2.0 * f1 * g1 + f * g2);
    }

    static double spatial(const Vec3& x) {
        const double u = 0.16 - dot(x, x);
        return u * (std::exp(u) + 2.0 * x.y + x.z);
    }
};

/// V = phi(t) psi(x) with phi = t^4 H(t) and psi = (1 - |x|^2)^4 inside the unit
/// ball, zero outside. J is supported in the unit ball, so V is also its
/// retarded potential there.
class CompactBumpSource final : public AnalyticSource {
public:
    explicit CompactBumpSource(double c0) : AnalyticSource(c0) {}

    std::string name() const override { return "compact-bump"; }

    double V(const Vec3& x, double t) const override { return phi(t, 0) * psi(x); }
    double V_tt(const Vec3& x, double t) const override { return phi(t, 2) * psi(x); }
    double laplacian_V(const Vec3& x, double t) const override {
        const double r2 = dot(x, x);
        if (!(r2 < 1.0)) {
            return 0.0;
        }
        // Radial Laplacian of (1 - r^2)^4: -24 (1 - r^2)^3 + 48 r^2 (1 - r^2)^2.
        const double w = 1.0 - r2;
        return phi(t, 0) * (-24.0 * w * w * w + 48.0 * r2 * w * w);
    }
    double settle_time(const Vec3&) const override { return std::numeric_limits<double>::infinity(); }

private:
    static double phi(double t, int derivative) {
        if (!(t > 0.0)) {
            return 0.0;
        }
        return derivative == 0 ? t * t * t * t : 12.0 * t * t;
    }
    static double psi(const Vec3& x) {
        const double w = 1.0 - dot(x, x);
        return w > 0.0 ? w * w * w * w : 0.0;
    }
};

/// Closed-form V, V_tt and Delta V supplied as callables, e.g. for tests.
class FunctionSource final : public AnalyticSource {
public:
    using Fn = std::function<double(const Vec3&, double)>;

    FunctionSource(std::string name, double c0, Fn v, Fn v_tt, Fn lap, double settle)
        : AnalyticSource(c0), name_(std::move(name)), v_(std::move(v)), v_tt_(std::move(v_tt)),
          lap_(std::move(lap)), settle_(settle) {}

    std::string name() const override { return name_; }
    double V(const Vec3& x, double t) const override { return v_(x, t); }
    double V_tt(const Vec3& x, double t) const override { return v_tt_(x, t); }
    double laplacian_V(const Vec3& x, double t) const override { return lap_(x, t); }
    double settle_time(const Vec3&) const override { return settle_; }

private:
    std::string name_;
    Fn v_, v_tt_, lap_;
    double settle_;
};

/// V as the retarded volume potential of J over the ball |y - center| < radius.
class RetardedPotentialSource final : public SourceModel {
public:
    using Fn = std::function<double(const Vec3&, double)>;

    RetardedPotentialSource(Fn j, Vec3 center, double radius, double c0, BallQuadrature rule)
        : SourceModel(c0), j_(std::move(j)), center_(center), radius_(radius), rule_(std::move(rule)) {
        if (!(radius > 0.0)) {
            throw std::invalid_argument("RetardedPotentialSource: radius must be positive");
        }
    }

    std::string name() const override { return "retarded-potential"; }
    double J(const Vec3& x, double t) const override { return j_(x, t); }
    double settle_time(const Vec3&) const override { return std::numeric_limits<double>::infinity(); }

    double V(const Vec3& x, double t) const override {
        if (!(t > 0.0)) {
            return 0.0;
        }
        const Vec3 rel = x - center_;
        if (norm(rel) < radius_) {
            return singular_ball_integral(rel, radius_, rule_, [&](const Vec3& y, double dist) {
                return j_(y + center_, t - dist / c0());
            });
        }
        double sum = 0.0;
        const auto nodes = rule_.nodes();
        const auto weights = rule_.weights();
        const double vol = radius_ * radius_ * radius_;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const Vec3 y = center_ + radius_ * nodes[i].x;
            const double d = distance(x, y);
            sum += weights[i] * j_(y, t - d / c0()) / d;
        }
        return vol * sum / (4.0 * pi);
    }

private:
    Fn j_;
    Vec3 center_;
    double radius_;
    BallQuadrature rule_;
};

/// Evaluates the incident field, honouring causality for t <= 0.
inline double incident_field(const SourceModel& model, const Vec3& x, double t) {
    return t > 0.0 ? model.V(x, t) : 0.0;
}

}  // namespace droplet
