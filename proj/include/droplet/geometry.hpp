#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace droplet {

inline constexpr double pi = std::numbers::pi;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Polar angle theta in [0, pi], azimuth phi in [0, 2pi).
struct Spherical {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

inline Vec3 unit_direction(double theta, double phi) {
    const double s = std::sin(theta);
    return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

inline Vec3 to_cartesian(const Spherical& p) { return p.r * unit_direction(p.theta, p.phi); }

/// The origin maps to (0, 0, 0) angles.
inline Spherical to_spherical(const Vec3& v) {
    const double r = norm(v);
    if (r == 0.0) {
        return {};
    }
    const double c = std::clamp(v.z / r, -1.0, 1.0);
    double phi = std::atan2(v.y, v.x);
    if (phi < 0.0) {
        phi += 2.0 * pi;
    }
    return {r, std::acos(c), phi};
}

}  // namespace droplet
