#pragma once

// Scenario configs, noise, error metrics and the runners behind the CLI.
//
// A scenario is one JSON document with "schema_version", "name", "kind" and a
// kind-specific body. Kinds: "eigen-residuals" (eigensystem residuals), "forward"
// (LSE against the asymptotic expansion), "reconstruction" (source recovery
// on a lattice of droplet positions) and "truncation-study" (error against N).

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "droplet/asymptotics.hpp"
#include "droplet/forward_solver.hpp"
#include "droplet/geometry.hpp"
#include "droplet/inversion.hpp"
#include "droplet/newtonian.hpp"
#include "droplet/quadrature.hpp"
#include "droplet/sources.hpp"

namespace droplet {

using Json = nlohmann::ordered_json;

inline constexpr int scenario_schema_version = 1;
inline constexpr const char* output_dir_env = "DROPLET_OUTPUT_DIR";

/// Invalid or inconsistent configuration; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- noise

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for stream (i, j) under a master seed, independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    return splitmix64(splitmix64(splitmix64(seed) ^ i) ^ j);
}

/// Uniform on (-1, 1) from the top 53 bits of a 64-bit draw.
inline double uniform_pm1(std::mt19937_64& gen) {
    const double u = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

enum class NoiseKind { none, relative, absolute };

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::relative:
            return "relative";
        case NoiseKind::absolute:
            return "absolute";
        default:
            return "none";
    }
}

/// In place: relative U (1 + level eta) or absolute U + level eta, eta iid U(-1, 1).
inline void perturb(std::span<double> values, NoiseKind kind, double level, std::uint64_t seed) {
    if (kind == NoiseKind::none || level == 0.0) {
        return;
    }
    std::mt19937_64 gen(seed);
    for (double& v : values) {
        const double eta = uniform_pm1(gen);
        v = kind == NoiseKind::relative ? v * (1.0 + level * eta) : v + level * eta;
    }
}

/// U^delta = U (1 + delta_bar eta).
inline MeasurementTrace add_noise(MeasurementTrace trace, double delta_bar, std::uint64_t seed) {
    if (!(delta_bar >= 0.0)) {
        throw std::invalid_argument("add_noise: delta_bar must be nonnegative");
    }
    perturb(trace.values, NoiseKind::relative, delta_bar, seed);
    trace.noise_level = delta_bar;
    trace.noise_kind = "relative";
    trace.seed = seed;
    return trace;
}

/// U^delta = U + delta eta.
inline MeasurementTrace add_absolute_noise(MeasurementTrace trace, double delta, std::uint64_t seed) {
    if (!(delta >= 0.0)) {
        throw std::invalid_argument("add_absolute_noise: delta must be nonnegative");
    }
    perturb(trace.values, NoiseKind::absolute, delta, seed);
    trace.noise_level = delta;
    trace.noise_kind = "absolute";
    trace.seed = seed;
    return trace;
}

// ---------------------------------------------------------------- metrics

/// 100 ||rec - exact||_2 / ||exact||_2.
inline double relative_l2_error(std::span<const double> reconstructed, std::span<const double> exact) {
    if (reconstructed.size() != exact.size()) {
        throw std::invalid_argument("relative_l2_error: sample counts differ");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const double d = reconstructed[i] - exact[i];
        num += d * d;
        den += exact[i] * exact[i];
    }
    if (!(den > 0.0)) {
        throw std::domain_error("relative_l2_error: reference has zero norm");
    }
    return 100.0 * std::sqrt(num / den);
}

/// log(e1 / e2) / log(a1 / a2).
inline double loglog_slope(double a1, double e1, double a2, double e2) {
    return std::log(e1 / e2) / std::log(a1 / a2);
}

// ---------------------------------------------------------------- config

struct NoiseConfig {
    NoiseKind kind = NoiseKind::none;
    double level = 0.0;
    std::uint64_t seed = 0;
    int repeats = 1;
};

struct LseConfig {
    int q = 2;
    double dt = 0.0;  ///< 0 selects min(0.1, diameter / c0)
    int n0 = 2;
    int n_r = 15;
    int n_s = 12;
    bool smooth_projection = true;
    int projection_degree = 0;

    double resolve_dt(const Droplet& d) const { return dt > 0.0 ? dt : std::min(0.1, d.diameter() / d.c0()); }
    LseOptions options(const Droplet& d) const {
        LseOptions o;
        o.q = q;
        o.dt = resolve_dt(d);
        o.n0 = n0;
        o.smooth_projection = smooth_projection;
        o.projection_degree = projection_degree;
        return o;
    }
};

struct SourceConfig {
    std::string model = "pulsed";
    int power = 4;

    std::unique_ptr<AnalyticSource> make(double c0) const {
        if (model == "polynomial-ramp") {
            return std::make_unique<PolynomialRampSource>(power, c0);
        }
        if (model == "pulsed") {
            return std::make_unique<PulsedSource>(c0);
        }
        if (model == "compact-bump") {
            return std::make_unique<CompactBumpSource>(c0);
        }
        throw ConfigError("source.model: unknown model '" + model +
                          "' (expected polynomial-ramp, pulsed or compact-bump)");
    }
};

struct EigenResidualConfig {
    double radius = 1.0;
    int n_r = 15;
    int n_s = 12;
    int lattice_intervals = 19;
    double lattice_radius = 0.95;
    std::vector<std::array<int, 2>> rows{{0, 0}, {1, 0}, {1, 1}};
    int j_max = 6;
};

struct ForwardConfig {
    double c0 = 1.0;
    SourceConfig source{"polynomial-ramp", 4};
    Vec3 center{-0.2, 0.0, 0.0};
    std::vector<double> radii{0.05, 0.005};
    double riesz_b = 4.0 * pi;
    Vec3 receiver{0.3, 0.4, 0.5};
    double t_begin = 1.0;
    double t_end = 4.0;
    double t_step = 0.01;
    int causality_samples = 64;
    LseConfig lse;
    std::vector<int> expansion_N{2, 4, 8};
};

struct ReconstructionConfig {
    double c0 = 1.0;
    SourceConfig source{"pulsed", 4};
    double radius = 1e-3;
    double riesz_b = 2.0 * pi;
    Vec3 receiver{1.2, 0.0, 0.0};
    double t_start = 3.1;
    int N = 20;  ///< 0 selects choose_truncation
    int trace_intervals = 0;
    NoiseConfig noise;
    Vec3 lattice_lower{-0.12, -0.25, -0.25};
    Vec3 lattice_upper{0.12, 0.25, 0.25};
    double lattice_step = 0.01;
    double epsilon = 0.07;
    double dtau = 0.01;
    double eval_time = 0.8;
    int slice_axis = 0;
    double slice_value = 0.0;
};

struct TruncationConfig {
    double c0 = 1.0;
    SourceConfig source{"pulsed", 4};
    Vec3 center{0.0, 0.05, 0.05};
    double radius = 0.05;
    double riesz_b = 2.0 * pi;
    Vec3 receiver{1.2, 0.0, 0.0};
    double t_start = 3.1;
    std::string data = "lse";  ///< "lse" or "expansion"
    int data_modes = 20;
    LseConfig lse;
    std::vector<int> N{2, 4, 8, 16, 32};
    NoiseConfig noise;
    int trace_intervals = 0;
    int eval_intervals = 400;
};

using ScenarioBody = std::variant<EigenResidualConfig, ForwardConfig, ReconstructionConfig, TruncationConfig>;

struct Scenario {
    std::string name;
    std::string kind;
    std::string description;
    std::string output_directory;
    Json source_json;  ///< the document as loaded, echoed into reports
    ScenarioBody body;
};

namespace detail {

class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(where() + " must be an object");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    Reader child(const char* key) const {
        if (!j_.contains(key)) {
            throw ConfigError(where(key) + " is required");
        }
        return Reader(j_.at(key), where(key));
    }

    double number(const char* key, std::optional<double> fallback = std::nullopt) const {
        if (!j_.contains(key)) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError(where(key) + " is required");
        }
        const Json& v = j_.at(key);
        if (!v.is_number()) {
            throw ConfigError(where(key) + " must be a number");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            throw ConfigError(where(key) + " must be finite");
        }
        return d;
    }

    double positive(const char* key, std::optional<double> fallback = std::nullopt) const {
        const double d = number(key, fallback);
        if (!(d > 0.0)) {
            throw ConfigError(where(key) + " must be positive");
        }
        return d;
    }

    int integer(const char* key, std::optional<int> fallback = std::nullopt) const {
        if (!j_.contains(key)) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError(where(key) + " is required");
        }
        const Json& v = j_.at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(where(key) + " must be an integer");
        }
        return v.get<int>();
    }

    std::uint64_t unsigned64(const char* key, std::uint64_t fallback) const {
        if (!j_.contains(key)) {
            return fallback;
        }
        const Json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError(where(key) + " must be a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const char* key, bool fallback) const {
        if (!j_.contains(key)) {
            return fallback;
        }
        if (!j_.at(key).is_boolean()) {
            throw ConfigError(where(key) + " must be true or false");
        }
        return j_.at(key).get<bool>();
    }

    std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
        if (!j_.contains(key)) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError(where(key) + " is required");
        }
        if (!j_.at(key).is_string()) {
            throw ConfigError(where(key) + " must be a string");
        }
        return j_.at(key).get<std::string>();
    }

    Vec3 vec3(const char* key, std::optional<Vec3> fallback = std::nullopt) const {
        if (!j_.contains(key)) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError(where(key) + " is required");
        }
        const Json& v = j_.at(key);
        if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
            throw ConfigError(where(key) + " must be an array of three numbers");
        }
        return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    }

    std::vector<double> numbers(const char* key, std::vector<double> fallback) const {
        if (!j_.contains(key)) {
            return fallback;
        }
        const Json& v = j_.at(key);
        if (!v.is_array() || v.empty()) {
            throw ConfigError(where(key) + " must be a nonempty array of numbers");
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) {
                throw ConfigError(where(key) + " must be a nonempty array of numbers");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<int> integers(const char* key, std::vector<int> fallback) const {
        if (!j_.contains(key)) {
            return fallback;
        }
        const Json& v = j_.at(key);
        if (!v.is_array() || v.empty()) {
            throw ConfigError(where(key) + " must be a nonempty array of integers");
        }
        std::vector<int> out;
        for (const auto& e : v) {
            if (!e.is_number_integer()) {
                throw ConfigError(where(key) + " must be a nonempty array of integers");
            }
            out.push_back(e.get<int>());
        }
        return out;
    }

    const Json& raw() const { return j_; }
    std::string where(const char* key = nullptr) const {
        if (key == nullptr) {
            return path_.empty() ? std::string("config") : path_;
        }
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

private:
    const Json& j_;
    std::string path_;
};

inline double read_riesz_b(const Reader& r, double fallback) {
    if (r.has("riesz_b") && r.has("riesz_b_over_pi")) {
        throw ConfigError(r.where("riesz_b") + " and riesz_b_over_pi are mutually exclusive");
    }
    if (r.has("riesz_b_over_pi")) {
        return pi * r.positive("riesz_b_over_pi");
    }
    return r.positive("riesz_b", fallback);
}

inline SourceConfig read_source(const Reader& r, SourceConfig fallback) {
    if (!r.has("source")) {
        return fallback;
    }
    const Reader s = r.child("source");
    SourceConfig out;
    out.model = s.string("model");
    out.power = s.integer("power", fallback.power);
    if (out.model == "polynomial-ramp" && out.power < 2) {
        throw ConfigError(s.where("power") + " must be at least 2");
    }
    return out;
}

inline NoiseConfig read_noise(const Reader& r) {
    NoiseConfig n;
    if (!r.has("noise")) {
        return n;
    }
    const Reader s = r.child("noise");
    const std::string kind = s.string("kind", "none");
    if (kind == "none") {
        n.kind = NoiseKind::none;
    } else if (kind == "relative") {
        n.kind = NoiseKind::relative;
    } else if (kind == "absolute") {
        n.kind = NoiseKind::absolute;
    } else {
        throw ConfigError(s.where("kind") + ": expected none, relative or absolute");
    }
    n.level = s.number("level", 0.0);
    if (!(n.level >= 0.0)) {
        throw ConfigError(s.where("level") + " must be nonnegative");
    }
    n.seed = s.unsigned64("seed", 0);
    n.repeats = s.integer("repeats", 1);
    if (n.repeats < 1) {
        throw ConfigError(s.where("repeats") + " must be at least 1");
    }
    return n;
}

inline LseConfig read_lse(const Reader& r) {
    LseConfig c;
    if (!r.has("lse")) {
        return c;
    }
    const Reader s = r.child("lse");
    c.q = s.integer("q", c.q);
    c.dt = s.number("dt", 0.0);
    c.n0 = s.integer("n0", c.n0);
    c.n_r = s.integer("n_r", c.n_r);
    c.n_s = s.integer("n_s", c.n_s);
    c.smooth_projection = s.boolean("smooth_projection", c.smooth_projection);
    c.projection_degree = s.integer("projection_degree", c.projection_degree);
    if (c.q < 1) {
        throw ConfigError(s.where("q") + " must be at least 1");
    }
    if (c.dt < 0.0) {
        throw ConfigError(s.where("dt") + " must be positive, or 0 for automatic");
    }
    if (c.n0 < 1 || c.n_r < 1 || c.n_s < 1) {
        throw ConfigError(s.where() + ": n0, n_r and n_s must be positive");
    }
    if (c.projection_degree < 0) {
        throw ConfigError(s.where("projection_degree") + " must be nonnegative");
    }
    return c;
}

inline EigenResidualConfig read_eigen_residuals(const Reader& r) {
    EigenResidualConfig c;
    c.radius = r.positive("radius", c.radius);
    if (r.has("quadrature")) {
        const Reader q = r.child("quadrature");
        c.n_r = q.integer("n_r", c.n_r);
        c.n_s = q.integer("n_s", c.n_s);
    }
    if (r.has("lattice")) {
        const Reader l = r.child("lattice");
        c.lattice_intervals = l.integer("intervals_per_axis", c.lattice_intervals);
        c.lattice_radius = l.positive("radius", c.lattice_radius);
    }
    if (r.has("modes")) {
        const Reader m = r.child("modes");
        c.j_max = m.integer("j_max", c.j_max);
        if (m.has("rows")) {
            c.rows.clear();
            const Json& rows = m.raw().at("rows");
            if (!rows.is_array() || rows.empty()) {
                throw ConfigError(m.where("rows") + " must be a nonempty array of [l, m] pairs");
            }
            for (const auto& row : rows) {
                if (!row.is_array() || row.size() != 2 || !row[0].is_number_integer() || !row[1].is_number_integer()) {
                    throw ConfigError(m.where("rows") + " must be a nonempty array of [l, m] pairs");
                }
                c.rows.push_back({row[0].get<int>(), row[1].get<int>()});
            }
        }
    }
    if (c.n_r < 1 || c.n_s < 1 || c.lattice_intervals < 1 || c.j_max < 1) {
        throw ConfigError("eigen-residuals: n_r, n_s, intervals_per_axis and j_max must be positive");
    }
    for (const auto& [l, m] : c.rows) {
        if (l < 0 || l > 2 || m < -l || m > l) {
            throw ConfigError("eigen-residuals: rows need 0 <= l <= 2 and |m| <= l");
        }
    }
    return c;
}

inline ForwardConfig read_forward(const Reader& r) {
    ForwardConfig c;
    c.c0 = r.child("medium").positive("c0");
    c.source = read_source(r, c.source);
    const Reader d = r.child("droplet");
    c.center = d.vec3("center", c.center);
    c.radii = d.numbers("radii", c.radii);
    c.riesz_b = read_riesz_b(d, c.riesz_b);
    c.receiver = r.vec3("receiver", c.receiver);
    if (r.has("samples")) {
        const Reader s = r.child("samples");
        c.t_begin = s.number("t_begin", c.t_begin);
        c.t_end = s.number("t_end", c.t_end);
        c.t_step = s.positive("step", c.t_step);
        c.causality_samples = s.integer("causality_samples", c.causality_samples);
    }
    c.lse = read_lse(r);
    if (r.has("expansion")) {
        c.expansion_N = r.child("expansion").integers("N", c.expansion_N);
    }
    for (double a : c.radii) {
        if (!(a > 0.0)) {
            throw ConfigError(d.where("radii") + " must be positive");
        }
        if (!(distance(c.receiver, c.center) > a)) {
            throw ConfigError("receiver lies inside the droplet of radius " + std::to_string(a));
        }
    }
    if (!(c.t_end > c.t_begin) || c.t_begin < 0.0) {
        throw ConfigError("samples: need 0 <= t_begin < t_end");
    }
    for (int n : c.expansion_N) {
        if (n < 1) {
            throw ConfigError("expansion.N entries must be positive");
        }
    }
    if (c.causality_samples < 0) {
        throw ConfigError("samples.causality_samples must be nonnegative");
    }
    return c;
}

inline ReconstructionConfig read_reconstruction(const Reader& r) {
    ReconstructionConfig c;
    c.c0 = r.child("medium").positive("c0");
    c.source = read_source(r, c.source);
    const Reader d = r.child("droplet");
    c.radius = d.positive("radius");
    c.riesz_b = read_riesz_b(d, c.riesz_b);
    c.receiver = r.vec3("receiver", c.receiver);
    const Reader w = r.child("window");
    c.t_start = w.number("t_start");
    if (w.has("duration")) {
        const double dur = w.positive("duration");
        if (std::abs(dur - 2.0 * pi / c.riesz_b) > 1e-9 * dur) {
            throw ConfigError(w.where("duration") + " must equal 2 pi / b = " + std::to_string(2.0 * pi / c.riesz_b));
        }
    }
    c.trace_intervals = w.integer("intervals", 0);
    if (r.has("truncation")) {
        const Reader t = r.child("truncation");
        if (t.has("N") && t.raw().at("N").is_string()) {
            if (t.string("N") != "auto") {
                throw ConfigError(t.where("N") + " must be a positive integer or \"auto\"");
            }
            c.N = 0;
        } else {
            c.N = t.integer("N", c.N);
            if (c.N < 1) {
                throw ConfigError(t.where("N") + " must be a positive integer or \"auto\"");
            }
        }
    }
    c.noise = read_noise(r);
    const Reader l = r.child("lattice");
    c.lattice_lower = l.vec3("lower");
    c.lattice_upper = l.vec3("upper");
    c.lattice_step = l.positive("step");
    const Reader m = r.child("mollifier");
    c.dtau = m.positive("dtau");
    if (m.has("epsilon") && m.has("n_t")) {
        const int nt = m.integer("n_t");
        c.epsilon = m.positive("epsilon");
        if (std::abs((nt + 1) * c.dtau - c.epsilon) > 1e-9 * c.epsilon) {
            throw ConfigError(m.where() + ": epsilon must equal (n_t + 1) dtau");
        }
    } else if (m.has("n_t")) {
        c.epsilon = (m.integer("n_t") + 1) * c.dtau;
    } else {
        c.epsilon = m.positive("epsilon");
    }
    const Reader e = r.child("evaluation");
    c.eval_time = e.number("time");
    if (e.has("slice")) {
        const Reader s = e.child("slice");
        const std::string axis = s.string("axis", "x");
        if (axis == "x") {
            c.slice_axis = 0;
        } else if (axis == "y") {
            c.slice_axis = 1;
        } else if (axis == "z") {
            c.slice_axis = 2;
        } else {
            throw ConfigError(s.where("axis") + ": expected x, y or z");
        }
        c.slice_value = s.number("value", 0.0);
    }
    return c;
}

inline TruncationConfig read_truncation(const Reader& r) {
    TruncationConfig c;
    c.c0 = r.child("medium").positive("c0");
    c.source = read_source(r, c.source);
    const Reader d = r.child("droplet");
    c.center = d.vec3("center", c.center);
    c.radius = d.positive("radius");
    c.riesz_b = read_riesz_b(d, c.riesz_b);
    c.receiver = r.vec3("receiver", c.receiver);
    const Reader w = r.child("window");
    c.t_start = w.number("t_start");
    c.trace_intervals = w.integer("intervals", 0);
    c.data = r.string("data", c.data);
    if (c.data != "lse" && c.data != "expansion") {
        throw ConfigError("data: expected lse or expansion");
    }
    c.data_modes = r.integer("data_modes", c.data_modes);
    c.lse = read_lse(r);
    c.N = r.integers("N", c.N);
    c.noise = read_noise(r);
    c.eval_intervals = r.integer("eval_intervals", c.eval_intervals);
    for (int n : c.N) {
        if (n < 1) {
            throw ConfigError("N entries must be positive");
        }
    }
    if (c.data_modes < 1 || c.eval_intervals < 2) {
        throw ConfigError("data_modes must be positive and eval_intervals at least 2");
    }
    return c;
}

}  // namespace detail

inline const std::vector<std::string>& scenario_kinds() {
    static const std::vector<std::string> kinds{"eigen-residuals", "forward", "reconstruction", "truncation-study"};
    return kinds;
}

inline Scenario parse_scenario(const Json& j) {
    const detail::Reader r(j, "");
    if (!r.has("schema_version")) {
        throw ConfigError("schema_version is required");
    }
    const int version = r.integer("schema_version");
    if (version != scenario_schema_version) {
        throw ConfigError("schema_version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(scenario_schema_version) + ")");
    }
    Scenario s;
    s.name = r.string("name");
    if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos) {
        throw ConfigError("name must be a nonempty string without path separators");
    }
    s.kind = r.string("kind");
    s.description = r.string("description", "");
    s.output_directory = r.has("outputs") ? r.child("outputs").string("directory", "") : "";
    s.source_json = j;
    if (s.kind == "eigen-residuals") {
        s.body = detail::read_eigen_residuals(r);
    } else if (s.kind == "forward") {
        s.body = detail::read_forward(r);
    } else if (s.kind == "reconstruction") {
        s.body = detail::read_reconstruction(r);
    } else if (s.kind == "truncation-study") {
        s.body = detail::read_truncation(r);
    } else {
        throw ConfigError("kind: unknown scenario kind '" + s.kind +
                          "' (expected eigen-residuals, forward, reconstruction or truncation-study)");
    }
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_scenario(j);
}

/// Lattice of droplet positions of a reconstruction scenario.
inline Lattice3 reconstruction_lattice(const ReconstructionConfig& c) {
    try {
        return Lattice3::spanning(c.lattice_lower, c.lattice_upper, c.lattice_step);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("lattice: ") + e.what());
    }
}

namespace detail {

/// Largest |x* - z| over the corners of the lattice box.
inline double max_receiver_distance(const Vec3& x, const Vec3& lo, const Vec3& hi) {
    double best = 0.0;
    for (int m = 0; m < 8; ++m) {
        const Vec3 p{(m & 1) ? hi.x : lo.x, (m & 2) ? hi.y : lo.y, (m & 4) ? hi.z : lo.z};
        best = std::max(best, distance(x, p));
    }
    return best;
}

inline void check_window_precondition(const SourceModel& model, const Vec3& z, double t_start, double reach) {
    const double settle = model.settle_time(z);
    if (!std::isfinite(settle)) {
        throw ConfigError("source V(z, .) never settles, so no measurement window satisfies T_start > T_J + |x* - z| / c0");
    }
    const double need = settle + reach / model.c0();
    if (!(t_start > need)) {
        throw ConfigError("window.t_start = " + std::to_string(t_start) +
                          " violates T_start > T_J + max|x* - z| / c0 = " + std::to_string(need));
    }
}

}  // namespace detail

/// Throws ConfigError on violated preconditions; returns warnings.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> warnings;
    if (const auto* c = std::get_if<ReconstructionConfig>(&s.body)) {
        const auto model = c->source.make(c->c0);
        const Lattice3 L = reconstruction_lattice(*c);
        const double reach = detail::max_receiver_distance(c->receiver, L.origin, L.point(L.nx - 1, L.ny - 1, L.nz - 1));
        for (int m = 0; m < 8; ++m) {
            const Vec3 z = L.point((m & 1) ? L.nx - 1 : 0, (m & 2) ? L.ny - 1 : 0, (m & 4) ? L.nz - 1 : 0);
            detail::check_window_precondition(*model, z, c->t_start, reach);
        }
        const double window = 2.0 * pi / c->riesz_b;
        const double settle = model->settle_time(L.origin);
        if (settle > window) {
            warnings.push_back("source duration T = " + std::to_string(settle) + " exceeds 2 pi / b = " +
                               std::to_string(window) + "; V is only recovered on [0, 2 pi / b]");
        }
        if (std::abs(c->lattice_step - c->dtau) > 1e-12 * c->dtau) {
            throw ConfigError("lattice.step must equal mollifier.dtau (spatial and temporal mollification share the step)");
        }
        const double ratio = c->epsilon / c->dtau;
        const long nt = std::lround(ratio) - 1;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || nt < 1) {
            throw ConfigError("mollifier.epsilon must be (n_t + 1) dtau with n_t >= 1");
        }
        const double span = 2.0 * static_cast<double>(nt) * c->dtau;
        if (c->eval_time - span < 0.0 || c->eval_time + span > window) {
            throw ConfigError("evaluation.time +- 2 n_t dtau must lie inside [0, 2 pi / b]");
        }
        const int trim = 2 * static_cast<int>(nt);
        if (L.nx <= 2 * trim || L.ny <= 2 * trim || L.nz <= 2 * trim) {
            throw ConfigError("lattice has no interior points after trimming 2 n_t = " + std::to_string(trim) +
                              " points per side");
        }
        const Lattice3 S = L.shrunk(trim);
        const double lo = c->slice_axis == 0 ? S.origin.x : c->slice_axis == 1 ? S.origin.y : S.origin.z;
        const int count = c->slice_axis == 0 ? S.nx : c->slice_axis == 1 ? S.ny : S.nz;
        const double k = (c->slice_value - lo) / S.step;
        if (k < -1e-6 || k > count - 1 + 1e-6 || std::abs(k - std::round(k)) > 1e-6) {
            throw ConfigError("evaluation.slice does not hit a lattice plane after trimming");
        }
        if (c->noise.kind == NoiseKind::none && c->noise.repeats > 1) {
            warnings.push_back("noise.repeats > 1 without noise repeats identical runs");
        }
    } else if (const auto* c = std::get_if<TruncationConfig>(&s.body)) {
        const auto model = c->source.make(c->c0);
        detail::check_window_precondition(*model, c->center, c->t_start, distance(c->receiver, c->center));
        const int nmax = *std::max_element(c->N.begin(), c->N.end());
        if (c->data == "expansion" && c->data_modes < nmax) {
            warnings.push_back("data_modes is below the largest N; higher coefficients only see truncation");
        }
        if (model->settle_time(c->center) > 2.0 * pi / c->riesz_b) {
            warnings.push_back("source duration exceeds 2 pi / b; V is only recovered on [0, 2 pi / b]");
        }
    } else if (const auto* c = std::get_if<ForwardConfig>(&s.body)) {
        c->source.make(c->c0);
        for (double a : c->radii) {
            const Droplet d(c->center, a, c->riesz_b, c->c0);
            const double dt = c->lse.resolve_dt(d);
            if (d.diameter() / (c->c0 * dt) < 0.5) {
                warnings.push_back("lse.dt = " + std::to_string(dt) + " exceeds twice the transit time 2a/c0 = " +
                                   std::to_string(d.diameter() / c->c0) + "; the march may be unstable");
            }
        }
    }
    return warnings;
}

// ---------------------------------------------------------------- results

struct EigenResidualResult {
    std::vector<EigenResidual> rows;
    std::size_t points = 0;
};

struct ForwardRun {
    double radius = 0.0;
    double dt = 0.0;
    int history_depth = 0;
    int projection_degree = -1;
    double rcond = 0.0;
    std::size_t steps = 0;
    double arrival = 0.0;
    double causality_max_abs = 0.0;
    std::vector<double> times;
    std::vector<double> V;
    std::vector<double> W_lse;
    std::map<int, std::vector<double>> W_N;
    std::map<int, double> max_abs_difference;
    std::map<int, double> max_abs_W_N;
    double max_abs_W_lse = 0.0;
};

struct ForwardResult {
    std::vector<ForwardRun> runs;
    /// slope[N][i]: log-log slope of max|W_LSE - W_N| between radii i and i + 1.
    std::map<int, std::vector<double>> slopes;
    /// max|W_N| ratio between radii i and i + 1.
    std::map<int, std::vector<double>> amplitude_ratios;
};

struct ErrorTriple {
    double V = 0.0;
    double V_tt = 0.0;
    double laplacian_V = 0.0;
    double J = 0.0;
};

struct SliceSample {
    Vec3 x;
    double V = 0.0, V_rec = 0.0;
    double V_tt = 0.0, V_tt_rec = 0.0;
    double laplacian_V = 0.0, laplacian_V_rec = 0.0;
    double J = 0.0, J_rec = 0.0;
};

struct ReconstructionResult {
    int N = 0;
    int n_t = 0;
    int trace_intervals = 0;
    Lattice3 lattice;
    Lattice3 interior;
    std::vector<std::uint64_t> seeds;
    std::vector<ErrorTriple> errors;  ///< one per repeat
    ErrorTriple mean;
    std::vector<SliceSample> slice;   ///< first repeat
    double coupling_sum_fraction = 0.0;
    double mode_weight_sum = 0.0;
};

struct TruncationResult {
    std::vector<int> N;
    std::vector<double> errors;
    int predicted_N = 0;
    int best_N = 0;
    bool interior_minimum = false;
    std::vector<double> s;
    std::vector<double> exact;
    std::map<int, std::vector<double>> reconstructed;
};

// ---------------------------------------------------------------- runners

inline EigenResidualResult run_eigen_residuals(const EigenResidualConfig& c) {
    const BallQuadrature rule(c.n_r, c.n_s);
    std::vector<Vec3> pts = validation_lattice(2.0 / c.lattice_intervals, c.lattice_radius, 1.0);
    for (auto& p : pts) {
        p = c.radius * p;
    }
    std::vector<EigenMode> modes;
    for (const auto& [l, m] : c.rows) {
        for (int j = 1; j <= c.j_max; ++j) {
            modes.push_back(eigenmode(l, j, m, c.radius));
        }
    }
    EigenResidualResult out;
    out.rows = validate_eigensystem(modes, pts, rule);
    out.points = pts.size();
    return out;
}

inline ForwardRun run_forward_radius(const ForwardConfig& c, const AnalyticSource& model, double a) {
    const Droplet d(c.center, a, c.riesz_b, c.c0);
    const LseOptions opt = c.lse.options(d);
    const LseSolver solver(d, BallQuadrature(c.lse.n_r, c.lse.n_s), opt);
    const double horizon = required_horizon(d, c.receiver, c.t_end, solver.splines());
    const InteriorHistory hist = solver.march(model, horizon);
    ForwardRun run;
    run.radius = a;
    run.dt = opt.dt;
    run.history_depth = solver.history_depth();
    run.projection_degree = solver.projection_degree();
    run.rcond = solver.rcond();
    run.steps = hist.steps();
    run.arrival = (distance(c.receiver, c.center) - a) / c.c0;
    for (int k = 0; k < c.causality_samples; ++k) {
        const double t = run.arrival * k / c.causality_samples;
        run.causality_max_abs = std::max(run.causality_max_abs, std::abs(scattered_field(hist, c.receiver, t)));
    }
    const int nmax = *std::max_element(c.expansion_N.begin(), c.expansion_N.end());
    const auto modes = modes_l0(d, nmax);
    const auto count = static_cast<std::size_t>(std::floor((c.t_end - c.t_begin) / c.t_step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
        const double t = c.t_begin + c.t_step * static_cast<double>(k);
        run.times.push_back(t);
        run.V.push_back(incident_field(model, c.receiver, t));
        const double w = scattered_field(hist, c.receiver, t);
        run.W_lse.push_back(w);
        run.max_abs_W_lse = std::max(run.max_abs_W_lse, std::abs(w));
        for (int n : c.expansion_N) {
            const double wn = expansion_W_N(modes, d, model, c.receiver, t, n);
            run.W_N[n].push_back(wn);
            run.max_abs_W_N[n] = std::max(run.max_abs_W_N[n], std::abs(wn));
            run.max_abs_difference[n] = std::max(run.max_abs_difference[n], std::abs(w - wn));
        }
    }
    return run;
}

inline ForwardResult run_forward(const ForwardConfig& c) {
    const auto model = c.source.make(c.c0);
    ForwardResult out;
    for (double a : c.radii) {
        out.runs.push_back(run_forward_radius(c, *model, a));
    }
    for (int n : c.expansion_N) {
        for (std::size_t i = 0; i + 1 < out.runs.size(); ++i) {
            const auto& r1 = out.runs[i];
            const auto& r2 = out.runs[i + 1];
            out.slopes[n].push_back(
                loglog_slope(r1.radius, r1.max_abs_difference.at(n), r2.radius, r2.max_abs_difference.at(n)));
            out.amplitude_ratios[n].push_back(r1.max_abs_W_N.at(n) / r2.max_abs_W_N.at(n));
        }
    }
    return out;
}

/// Sum_{n <= N} avg_n^2 / lambda_n as a fraction of 4 pi a, for l = 0 modes.
inline double coupling_sum_fraction(double a, int N) {
    double s = 0.0;
    for (int n = 1; n <= N; ++n) {
        const EigenMode e = eigenmode(0, n, 0, a);
        s += e.avg * e.avg / e.lambda;
    }
    return s / (4.0 * pi * a);
}

/// Sum_{n <= N} (n - 1/2)^2 (int_B e_n)^2 on the unit ball; tends to 4 / pi.
inline double mode_weight_sum(int N) {
    double s = 0.0;
    for (int n = 1; n <= N; ++n) {
        s += unit_ball_mode_weight(n);
    }
    return s;
}

inline int resolve_truncation(const ReconstructionConfig& c) {
    return c.N > 0 ? c.N : choose_truncation(c.noise.kind == NoiseKind::none ? 0.0 : c.noise.level, c.radius).N;
}

inline ReconstructionResult run_reconstruction(const ReconstructionConfig& c) {
    const auto model = c.source.make(c.c0);
    const Lattice3 L = reconstruction_lattice(c);
    const Mollifier mol = Mollifier::from_epsilon(c.epsilon, c.dtau);
    ReconstructionResult out;
    out.N = resolve_truncation(c);
    out.n_t = mol.n_t();
    out.trace_intervals = c.trace_intervals > 0 ? c.trace_intervals : default_trace_intervals(out.N);
    out.lattice = L;
    const int trim = mol.second_derivative_trim();
    out.interior = L.shrunk(trim);
    out.coupling_sum_fraction = coupling_sum_fraction(c.radius, out.N);
    out.mode_weight_sum = mode_weight_sum(out.N);

    const Droplet proto(L.origin, c.radius, c.riesz_b, c.c0);
    const auto modes = modes_l0(proto, out.N);
    double settle = 0.0;
    for (int m = 0; m < 8; ++m) {
        const Vec3 z = L.point((m & 1) ? L.nx - 1 : 0, (m & 2) ? L.ny - 1 : 0, (m & 4) ? L.nz - 1 : 0);
        settle = std::max(settle, model->settle_time(z));
    }
    const TraceSynthesizer synth(modes, c.riesz_b, c.c0, c.receiver, c.t_start, settle, out.trace_intervals);
    const RieszProjector proj(modes, c.riesz_b, c.c0, out.N, out.trace_intervals);

    const int nt = 4 * out.n_t + 1;
    const int repeats = c.noise.kind == NoiseKind::none ? 1 : c.noise.repeats;
    std::vector<ReconstructedField> fields(static_cast<std::size_t>(repeats));
    for (auto& f : fields) {
        f.lattice = L;
        f.t0 = c.eval_time - trim * c.dtau;
        f.dtau = c.dtau;
        f.nt = nt;
        f.N = out.N;
        f.values.assign(L.size() * static_cast<std::size_t>(nt), 0.0);
    }
    for (int r = 0; r < repeats; ++r) {
        out.seeds.push_back(c.noise.seed);
    }
    std::vector<double> noisy;
    for (int i = 0; i < L.nx; ++i) {
        for (int j = 0; j < L.ny; ++j) {
            for (int k = 0; k < L.nz; ++k) {
                const std::size_t p = L.index(i, j, k);
                const Vec3 z = L.point(i, j, k);
                const MeasurementTrace clean = synth.trace(*model, z);
                const double R = distance(c.receiver, z);
                for (int r = 0; r < repeats; ++r) {
                    noisy = clean.values;
                    perturb(noisy, c.noise.kind, c.noise.level,
                            derive_seed(c.noise.seed, static_cast<std::uint64_t>(r), p));
                    const RieszCoefficients coef = proj.coefficients(noisy, c.t_start, R);
                    auto& f = fields[static_cast<std::size_t>(r)];
                    for (int m = 0; m < nt; ++m) {
                        f.at(p, m) = reconstruct_V(coef, f.time(m));
                    }
                }
            }
        }
    }
    // Slice of the interior lattice.
    const Lattice3& S = out.interior;
    const double lo = c.slice_axis == 0 ? S.origin.x : c.slice_axis == 1 ? S.origin.y : S.origin.z;
    const int plane = static_cast<int>(std::lround((c.slice_value - lo) / S.step));
    std::vector<std::size_t> slice_index;
    for (int i = 0; i < S.nx; ++i) {
        for (int j = 0; j < S.ny; ++j) {
            for (int k = 0; k < S.nz; ++k) {
                const int along = c.slice_axis == 0 ? i : c.slice_axis == 1 ? j : k;
                if (along == plane) {
                    slice_index.push_back(S.index(i, j, k));
                }
            }
        }
    }
    std::vector<Vec3> slice_points;
    for (int i = 0; i < S.nx; ++i) {
        for (int j = 0; j < S.ny; ++j) {
            for (int k = 0; k < S.nz; ++k) {
                const int along = c.slice_axis == 0 ? i : c.slice_axis == 1 ? j : k;
                if (along == plane) {
                    slice_points.push_back(S.point(i, j, k));
                }
            }
        }
    }
    const std::size_t ns = slice_index.size();
    std::vector<double> ev(ns), evtt(ns), elap(ns), ej(ns);
    for (std::size_t q = 0; q < ns; ++q) {
        const Vec3& x = slice_points[q];
        ev[q] = model->V(x, c.eval_time);
        evtt[q] = model->V_tt(x, c.eval_time);
        elap[q] = model->laplacian_V(x, c.eval_time);
        ej[q] = model->J(x, c.eval_time);
    }
    std::vector<double> rv(ns), rvtt(ns), rlap(ns), rj(ns);
    for (int r = 0; r < repeats; ++r) {
        const SourceEstimate est = assemble_source(fields[static_cast<std::size_t>(r)], c.c0, mol, trim);
        for (std::size_t q = 0; q < ns; ++q) {
            rv[q] = est.V[slice_index[q]];
            rvtt[q] = est.V_tt[slice_index[q]];
            rlap[q] = est.laplacian_V[slice_index[q]];
            rj[q] = est.J[slice_index[q]];
        }
        ErrorTriple e;
        e.V = relative_l2_error(rv, ev);
        e.V_tt = relative_l2_error(rvtt, evtt);
        e.laplacian_V = relative_l2_error(rlap, elap);
        e.J = relative_l2_error(rj, ej);
        out.errors.push_back(e);
        if (r == 0) {
            for (std::size_t q = 0; q < ns; ++q) {
                out.slice.push_back({slice_points[q], ev[q], rv[q], evtt[q], rvtt[q], elap[q], rlap[q], ej[q], rj[q]});
            }
        }
    }
    for (const auto& e : out.errors) {
        out.mean.V += e.V / repeats;
        out.mean.V_tt += e.V_tt / repeats;
        out.mean.laplacian_V += e.laplacian_V / repeats;
        out.mean.J += e.J / repeats;
    }
    return out;
}

/// Noiseless or noisy single-droplet trace, from the LSE or from the expansion.
inline MeasurementTrace truncation_study_trace(const TruncationConfig& c, const AnalyticSource& model, int intervals) {
    const Droplet d(c.center, c.radius, c.riesz_b, c.c0);
    MeasurementTrace trace;
    if (c.data == "expansion") {
        const auto modes = modes_l0(d, c.data_modes);
        trace = synthesize_measurement(modes, d, model, c.receiver, c.t_start, c.data_modes, intervals);
    } else {
        const LseSolver solver(d, BallQuadrature(c.lse.n_r, c.lse.n_s), c.lse.options(d));
        const double window = 2.0 * pi / c.riesz_b;
        const double horizon = required_horizon(d, c.receiver, c.t_start + window, solver.splines());
        const InteriorHistory hist = solver.march(model, horizon);
        trace.x_star = c.receiver;
        trace.t_start = c.t_start;
        trace.duration = window;
        trace.times = window_times(c.t_start, window, intervals);
        for (double t : trace.times) {
            trace.values.push_back(incident_field(model, c.receiver, t) + scattered_field(hist, c.receiver, t));
        }
    }
    if (c.noise.kind != NoiseKind::none) {
        perturb(trace.values, c.noise.kind, c.noise.level, derive_seed(c.noise.seed, 0, 0));
        trace.noise_level = c.noise.level;
        trace.noise_kind = to_string(c.noise.kind);
        trace.seed = c.noise.seed;
    }
    return trace;
}

inline TruncationResult run_truncation_study(const TruncationConfig& c) {
    const auto model = c.source.make(c.c0);
    const Droplet d(c.center, c.radius, c.riesz_b, c.c0);
    const int nmax = *std::max_element(c.N.begin(), c.N.end());
    const int intervals = c.trace_intervals > 0 ? c.trace_intervals : default_trace_intervals(nmax);
    const MeasurementTrace trace = truncation_study_trace(c, *model, intervals);
    const auto modes = modes_l0(d, nmax);
    TruncationResult out;
    out.N = c.N;
    const double window = 2.0 * pi / c.riesz_b;
    for (int k = 0; k <= c.eval_intervals; ++k) {
        const double s = window * k / c.eval_intervals;
        out.s.push_back(s);
        out.exact.push_back(model->V(c.center, s));
    }
    for (int n : c.N) {
        const RieszCoefficients coef = riesz_coefficients(trace, d, modes, n);
        auto& rec = out.reconstructed[n];
        for (double s : out.s) {
            rec.push_back(reconstruct_V(coef, s));
        }
        out.errors.push_back(relative_l2_error(rec, out.exact));
    }
    const double delta = c.noise.kind == NoiseKind::none ? 0.0 : c.noise.level;
    out.predicted_N = choose_truncation(delta, c.radius).N;
    const auto best = std::min_element(out.errors.begin(), out.errors.end());
    const auto ib = static_cast<std::size_t>(best - out.errors.begin());
    out.best_N = out.N[ib];
    out.interior_minimum = ib > 0 && ib + 1 < out.errors.size();
    return out;
}

// ---------------------------------------------------------------- output

struct RunOptions {
    bool timing = false;
};

struct RunReport {
    Json report;
    std::vector<std::filesystem::path> files;
};

/// Output directory: $DROPLET_OUTPUT_DIR/<name> if set, else the config's
/// outputs.directory, else output/<name>. An explicit override wins over both.
inline std::filesystem::path resolve_output_directory(const Scenario& s, const std::string& override_dir = "") {
    if (!override_dir.empty()) {
        return std::filesystem::path(override_dir);
    }
    if (const char* env = std::getenv(output_dir_env); env != nullptr && *env != '\0') {
        return std::filesystem::path(env) / s.name;
    }
    if (!s.output_directory.empty()) {
        return std::filesystem::path(s.output_directory);
    }
    return std::filesystem::path("output") / s.name;
}

namespace detail {

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& p) : path_(p), os_(p) {
        if (!os_) {
            throw std::runtime_error("cannot write " + p.string());
        }
        os_.precision(17);
    }
    std::ostream& stream() { return os_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream os_;
};

inline Json vec3_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

inline Json lattice_json(const Lattice3& L) {
    return Json{{"origin", vec3_json(L.origin)}, {"step", L.step}, {"shape", Json::array({L.nx, L.ny, L.nz})}};
}

inline Json errors_json(const ErrorTriple& e) {
    return Json{{"V", e.V}, {"V_tt", e.V_tt}, {"laplacian_V", e.laplacian_V}, {"J", e.J}};
}

inline std::string n_key(int n) { return std::to_string(n); }

}  // namespace detail

inline Json eigen_residuals_report(const EigenResidualResult& r, std::vector<std::filesystem::path>& files,
                            const std::filesystem::path& dir) {
    detail::CsvWriter csv(dir / "eigen_residuals.csv");
    write_eigen_residuals_csv(csv.stream(), r.rows);
    files.push_back(csv.path());
    Json rows = Json::array();
    for (const auto& e : r.rows) {
        rows.push_back(Json{{"l", e.l}, {"m", e.m}, {"j", e.j}, {"err", e.err}});
    }
    return Json{{"points", r.points}, {"residuals", rows}};
}

inline Json forward_report(const ForwardConfig& c, const ForwardResult& r, std::vector<std::filesystem::path>& files,
                           const std::filesystem::path& dir) {
    Json runs = Json::array();
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        const auto& run = r.runs[i];
        detail::CsvWriter csv(dir / ("forward_a" + std::to_string(i) + ".csv"));
        auto& os = csv.stream();
        os << "t,V,W_LSE";
        for (int n : c.expansion_N) {
            os << ",W_N" << n;
        }
        os << '\n';
        for (std::size_t k = 0; k < run.times.size(); ++k) {
            os << run.times[k] << ',' << run.V[k] << ',' << run.W_lse[k];
            for (int n : c.expansion_N) {
                os << ',' << run.W_N.at(n)[k];
            }
            os << '\n';
        }
        files.push_back(csv.path());
        Json diff, amp;
        for (int n : c.expansion_N) {
            diff[detail::n_key(n)] = run.max_abs_difference.at(n);
            amp[detail::n_key(n)] = run.max_abs_W_N.at(n);
        }
        runs.push_back(Json{{"radius", run.radius},
                            {"file", csv.path().filename().string()},
                            {"dt", run.dt},
                            {"steps", run.steps},
                            {"history_depth", run.history_depth},
                            {"projection_degree", run.projection_degree},
                            {"rcond", run.rcond},
                            {"first_arrival", run.arrival},
                            {"max_abs_W_before_arrival", run.causality_max_abs},
                            {"max_abs_W_LSE", run.max_abs_W_lse},
                            {"max_abs_W_N", amp},
                            {"max_abs_W_LSE_minus_W_N", diff}});
    }
    Json slopes, ratios;
    for (int n : c.expansion_N) {
        slopes[detail::n_key(n)] = r.slopes.count(n) ? Json(r.slopes.at(n)) : Json::array();
        ratios[detail::n_key(n)] = r.amplitude_ratios.count(n) ? Json(r.amplitude_ratios.at(n)) : Json::array();
    }
    return Json{{"runs", runs}, {"difference_slopes", slopes}, {"W_N_amplitude_ratios", ratios}};
}

inline Json reconstruction_report(const ReconstructionConfig& c, const ReconstructionResult& r,
                                  std::vector<std::filesystem::path>& files, const std::filesystem::path& dir) {
    detail::CsvWriter csv(dir / "slice.csv");
    auto& os = csv.stream();
    os << "x,y,z,V,V_rec,V_tt,V_tt_rec,laplacian_V,laplacian_V_rec,J,J_rec\n";
    for (const auto& s : r.slice) {
        os << s.x.x << ',' << s.x.y << ',' << s.x.z << ',' << s.V << ',' << s.V_rec << ',' << s.V_tt << ','
           << s.V_tt_rec << ',' << s.laplacian_V << ',' << s.laplacian_V_rec << ',' << s.J << ',' << s.J_rec << '\n';
    }
    files.push_back(csv.path());
    Json per = Json::array();
    for (std::size_t i = 0; i < r.errors.size(); ++i) {
        Json e = detail::errors_json(r.errors[i]);
        e["repeat"] = i;
        per.push_back(e);
    }
    const char* axes = "xyz";
    return Json{{"N", r.N},
                {"n_t", r.n_t},
                {"epsilon", c.epsilon},
                {"trace_intervals", r.trace_intervals},
                {"noise", Json{{"kind", to_string(c.noise.kind)},
                               {"level", c.noise.level},
                               {"seed", c.noise.seed},
                               {"repeats", r.errors.size()}}},
                {"lattice", detail::lattice_json(r.lattice)},
                {"interior_lattice", detail::lattice_json(r.interior)},
                {"slice", Json{{"axis", std::string(1, axes[c.slice_axis])},
                               {"value", c.slice_value},
                               {"time", c.eval_time},
                               {"points", r.slice.size()},
                               {"file", csv.path().filename().string()}}},
                {"relative_l2_error_percent", Json{{"mean", detail::errors_json(r.mean)}, {"per_repeat", per}}},
                {"spectral_sums", Json{{"coupling_sum_over_4_pi_a", r.coupling_sum_fraction},
                                       {"mode_weight_sum", r.mode_weight_sum},
                                       {"mode_weight_limit", 4.0 / pi}}}};
}

inline Json truncation_report(const TruncationResult& r, std::vector<std::filesystem::path>& files,
                              const std::filesystem::path& dir) {
    {
        detail::CsvWriter csv(dir / "truncation.csv");
        csv.stream() << "N,error_percent\n";
        for (std::size_t i = 0; i < r.N.size(); ++i) {
            csv.stream() << r.N[i] << ',' << r.errors[i] << '\n';
        }
        files.push_back(csv.path());
    }
    {
        detail::CsvWriter csv(dir / "reconstructions.csv");
        auto& os = csv.stream();
        os << "s,V";
        for (int n : r.N) {
            os << ",V_N" << n;
        }
        os << '\n';
        for (std::size_t k = 0; k < r.s.size(); ++k) {
            os << r.s[k] << ',' << r.exact[k];
            for (int n : r.N) {
                os << ',' << r.reconstructed.at(n)[k];
            }
            os << '\n';
        }
        files.push_back(csv.path());
    }
    Json errs = Json::object();
    for (std::size_t i = 0; i < r.N.size(); ++i) {
        errs[detail::n_key(r.N[i])] = r.errors[i];
    }
    return Json{{"relative_l2_error_percent", errs},
                {"predicted_N", r.predicted_N},
                {"best_N", r.best_N},
                {"interior_minimum", r.interior_minimum}};
}

/// Runs a validated scenario and writes CSV files plus report.json into `dir`.
inline RunReport run_scenario(const Scenario& s, const std::filesystem::path& dir, const RunOptions& opt = {}) {
    const auto warnings = validate_scenario(s);
    std::filesystem::create_directories(dir);
    RunReport out;
    const auto start = std::chrono::steady_clock::now();
    Json results;
    try {
        if (const auto* c = std::get_if<EigenResidualConfig>(&s.body)) {
            results = eigen_residuals_report(run_eigen_residuals(*c), out.files, dir);
        } else if (const auto* c = std::get_if<ForwardConfig>(&s.body)) {
            results = forward_report(*c, run_forward(*c), out.files, dir);
        } else if (const auto* c = std::get_if<ReconstructionConfig>(&s.body)) {
            results = reconstruction_report(*c, run_reconstruction(*c), out.files, dir);
        } else if (const auto* c = std::get_if<TruncationConfig>(&s.body)) {
            results = truncation_report(run_truncation_study(*c), out.files, dir);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw std::runtime_error("scenario '" + s.name + "' (" + s.kind + "): " + e.what());
    }
    Json files = Json::array();
    for (const auto& f : out.files) {
        files.push_back(f.filename().string());
    }
    out.report = Json{{"schema_version", scenario_schema_version},
                      {"name", s.name},
                      {"kind", s.kind},
                      {"config", s.source_json},
                      {"warnings", warnings},
                      {"files", files},
                      {"results", results}};
    if (opt.timing) {
        out.report["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    const auto report_path = dir / "report.json";
    std::ofstream os(report_path);
    if (!os) {
        throw std::runtime_error("cannot write " + report_path.string());
    }
    os << out.report.dump(2) << '\n';
    out.files.push_back(report_path);
    return out;
}

}  // namespace droplet
