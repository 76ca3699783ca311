#pragma once

// Half-integer Bessel functions J_{l +- 1/2}, their positive zeros, and real
// orthonormal spherical harmonics (no Condon-Shortley phase).

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "droplet/geometry.hpp"

namespace droplet {

/// Half-integer order nu = twice / 2 with twice odd and >= -1.
class BesselOrder {
public:
    static BesselOrder from_twice(int twice_nu) {
        if (twice_nu < -1 || twice_nu % 2 == 0) {
            throw std::invalid_argument("BesselOrder: 2*nu must be an odd integer >= -1, got " +
                                        std::to_string(twice_nu));
        }
        return BesselOrder(twice_nu);
    }
    /// nu = l + 1/2
    static BesselOrder l_plus_half(int l) { return from_twice(2 * l + 1); }
    /// nu = l - 1/2
    static BesselOrder l_minus_half(int l) { return from_twice(2 * l - 1); }

    int twice() const { return twice_; }
    double value() const { return 0.5 * twice_; }

private:
    explicit BesselOrder(int t) : twice_(t) {}
    int twice_;
};

namespace detail {

/// J_{-1/2}, J_{1/2}, then upward recurrence J_{v+1} = (2v/y) J_v - J_{v-1}.
inline double bessel_half_unchecked(int twice_nu, double y) {
    const double scale = std::sqrt(2.0 / (pi * y));
    double prev = scale * std::cos(y);  // J_{-1/2}
    if (twice_nu == -1) {
        return prev;
    }
    double cur = scale * std::sin(y);  // J_{1/2}
    for (int t = 1; t < twice_nu; t += 2) {
        const double nu = 0.5 * t;
        const double next = (2.0 * nu / y) * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace detail

inline double bessel_half(BesselOrder nu, double y) {
    if (!(y > 0.0)) {
        throw std::domain_error("bessel_half: argument must be positive");
    }
    return detail::bessel_half_unchecked(nu.twice(), y);
}

/// d/dy J_nu(y) = (nu / y) J_nu(y) - J_{nu+1}(y).
inline double bessel_half_derivative(BesselOrder nu, double y) {
    if (!(y > 0.0)) {
        throw std::domain_error("bessel_half_derivative: argument must be positive");
    }
    return nu.value() / y * detail::bessel_half_unchecked(nu.twice(), y) -
           detail::bessel_half_unchecked(nu.twice() + 2, y);
}

/// j-th positive zero of J_nu (j >= 1), accurate to ~1e-13 absolute.
inline double bessel_root(BesselOrder nu, int j) {
    if (j < 1) {
        throw std::invalid_argument("bessel_root: root index must be >= 1");
    }
    // Consecutive zeros are roughly pi apart and the first one lies beyond nu,
    // so a pi/8 scan cannot skip a sign change.
    const double step = pi / 8.0;
    const double limit = (j + std::abs(nu.value()) + 4.0) * pi + 2.0 * std::abs(nu.value());
    double lo = 1e-3;
    double f_lo = bessel_half(nu, lo);
    int found = 0;
    double hi = lo;
    double f_hi = f_lo;
    while (found < j) {
        hi = lo + step;
        if (hi > limit) {
            throw std::runtime_error("bessel_root: no bracket found for root " + std::to_string(j));
        }
        f_hi = bessel_half(nu, hi);
        if ((f_lo < 0.0) != (f_hi < 0.0) || f_hi == 0.0) {
            ++found;
            if (found == j) {
                break;
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    if (f_hi == 0.0) {
        return hi;
    }
    // Bisection to a tight bracket, then Newton polish kept inside the bracket.
    for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = bessel_half(nu, mid);
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double dx = bessel_half(nu, x) / bessel_half_derivative(nu, x);
        const double next = x - dx;
        if (!(next >= lo && next <= hi)) {
            throw std::runtime_error("bessel_root: Newton polish left the bracket");
        }
        x = next;
        if (std::abs(dx) <= 1e-15 * x) {
            return x;
        }
    }
    if (std::abs(bessel_half(nu, x)) > 1e-10) {
        throw std::runtime_error("bessel_root: Newton polish did not converge");
    }
    return x;
}

namespace detail {

/// Associated Legendre P_l^m(x), m >= 0, without the (-1)^m phase.
inline double associated_legendre(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= fact * s;
            fact += 2.0;
        }
    }
    if (l == m) {
        return pmm;
    }
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) {
        return pmmp1;
    }
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

}  // namespace detail

/// Real orthonormal spherical harmonic: cos(m phi) for m > 0, sin(|m| phi) for m < 0.
inline double spherical_harmonic(int l, int m, double theta, double phi) {
    if (l < 0 || std::abs(m) > l) {
        throw std::invalid_argument("spherical_harmonic: require l >= 0 and |m| <= l");
    }
    const int am = std::abs(m);
    double ratio = 1.0;  // (l - |m|)! / (l + |m|)!
    for (int k = l - am + 1; k <= l + am; ++k) {
        ratio /= k;
    }
    const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * pi) * ratio);
    const double p = detail::associated_legendre(l, am, std::cos(theta));
    if (m == 0) {
        return norm * p;
    }
    const double azimuth = m > 0 ? std::cos(am * phi) : std::sin(am * phi);
    return std::sqrt(2.0) * norm * p * azimuth;
}

}  // namespace droplet
