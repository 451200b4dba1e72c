/*
 * Copyright 2026 The aiesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file qe.hpp
 * @brief Quadratic-exponential variance step: parameters, host-side
 *        exponential constants, the scalar reference update and the
 *        8-lane arithmetic primitives available on the vector tiles.
 *
 * The tiles provide add/sub/mul/inv/sqrt/min/max and fused multiply-add on
 * 8-lane single-precision vectors, but neither division nor exponentials.
 * Exponentials are therefore evaluated once on the host (QEConstants), and
 * division is built from a reciprocal and multiplies (vec_div).
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "aiesim/common.hpp"

namespace aiesim {

struct QEParams {
    double kappa = 1.5;         ///< mean-reversion rate (1/year)
    double theta = 0.04;        ///< long-run variance
    double sigma = 0.3;         ///< vol-of-vol
    double dt = 1.0 / 252.0;    ///< timestep (years)
    double v0 = 0.04;           ///< initial variance
    double psi_c = 1.5;         ///< quadratic / exponential branch threshold

    void validate() const {
        auto bad = [](const char* what) { throw ConfigurationError(what); };
        if (!(kappa > 0) || !std::isfinite(kappa)) bad("kappa must be > 0");
        if (!(theta > 0) || !std::isfinite(theta)) bad("theta must be > 0");
        if (!(sigma > 0) || !std::isfinite(sigma)) bad("sigma must be > 0");
        if (!(dt > 0) || !std::isfinite(dt)) bad("dt must be > 0");
        if (!(v0 >= 0) || !std::isfinite(v0)) bad("v0 must be >= 0");
        if (!(psi_c >= 1.0 && psi_c <= 2.0)) bad("psi_c must lie in [1, 2]");
    }
};

/// Host-precomputed constants, narrowed to single precision.
struct QEConstants {
    float E = 0;      ///< exp(-kappa dt)
    float c1 = 0;     ///< sigma^2 E (1 - E) / kappa
    float c2 = 0;     ///< theta sigma^2 (1 - E)^2 / (2 kappa)
    float theta = 0;
    float psi_c = 0;
};

/// Evaluated in double and narrowed. E rounding to 1.0f for tiny kappa*dt
/// is accepted; E underflowing to 0 (kappa*dt beyond ~103) is rejected.
inline QEConstants precompute_constants(const QEParams& p) {
    p.validate();
    const double x = p.kappa * p.dt;
    const double e = std::exp(-x);
    const double one_minus_e = -std::expm1(-x);
    const double s2 = p.sigma * p.sigma;
    const double c1 = s2 * e * one_minus_e / p.kappa;
    const double c2 = p.theta * s2 * one_minus_e * one_minus_e / (2.0 * p.kappa);

    QEConstants c;
    c.E = static_cast<float>(e);
    c.c1 = static_cast<float>(c1);
    c.c2 = static_cast<float>(c2);
    c.theta = static_cast<float>(p.theta);
    c.psi_c = static_cast<float>(p.psi_c);
    if (!std::isfinite(c.E) || !std::isfinite(c.c1) || !std::isfinite(c.c2) || !(c.E > 0.0f) ||
        c.E > 1.0f || c.c1 < 0.0f || !(c.c2 > 0.0f)) {
        std::ostringstream os;
        os << "kappa*dt = " << x << " leaves E=" << c.E << " c1=" << c.c1 << " c2=" << c.c2
           << " outside single-precision range";
        throw NumericalRangeError(os.str());
    }
    return c;
}

/// Diagnostics from one scalar step.
struct QEStepInfo {
    bool saturated = false;  ///< psi exceeded psi_c and was clamped
};

/// Scalar reference step (quadratic regime, psi clamped at psi_c).
inline float qe_update_scalar(float v, float z, const QEConstants& c, QEStepInfo* info = nullptr) {
    if (!(v >= 0.0f) || !std::isfinite(v) || !std::isfinite(z)) {
        std::ostringstream os;
        os << "invalid input v=" << v << " z=" << z;
        throw DegenerateMomentsError(os.str());
    }
    const float m = c.theta + (v - c.theta) * c.E;
    const float s2 = v * c.c1 + c.c2;
    const float m2 = m * m;
    float psi = s2 / m2;
    if (!(m > 0.0f) || !(psi > 0.0f) || !std::isfinite(psi)) {
        std::ostringstream os;
        os << "m=" << m << " psi=" << psi << " for v=" << v;
        throw DegenerateMomentsError(os.str());
    }
    const bool sat = psi > c.psi_c;
    if (sat) psi = c.psi_c;
    if (info) info->saturated = sat;
    const float r = 2.0f / psi;
    const float rm1 = r - 1.0f;
    const float b2 = rm1 + std::sqrt(r) * std::sqrt(rm1);
    const float a = m / (b2 + 1.0f);
    const float w = std::sqrt(b2) + z;
    const float w2 = w * w;
    return a * w2;
}

inline float qe_update_scalar(float v, float z, const QEConstants& c, const QEParams&) {
    return qe_update_scalar(v, z, c);
}

/// Full QE step including the exponential branch for psi > psi_c. Host-only:
/// it needs a logarithm and the normal CDF, which the tiles lack.
inline double qe_update_full(double v, double z, const QEParams& p) {
    const double e = std::exp(-p.kappa * p.dt);
    const double m = p.theta + (v - p.theta) * e;
    const double s2 = v * p.sigma * p.sigma * e * (1 - e) / p.kappa +
                      p.theta * p.sigma * p.sigma * (1 - e) * (1 - e) / (2 * p.kappa);
    const double psi = s2 / (m * m);
    if (psi <= p.psi_c) {
        const double r = 2.0 / psi;
        const double b2 = r - 1.0 + std::sqrt(r) * std::sqrt(r - 1.0);
        const double a = m / (1.0 + b2);
        const double w = std::sqrt(b2) + z;
        return a * w * w;
    }
    const double prob = (psi - 1.0) / (psi + 1.0);
    const double beta = (1.0 - prob) / m;
    const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
    if (u <= prob) return 0.0;
    return std::log((1.0 - prob) / (1.0 - u)) / beta;
}

// ---------------------------------------------------------------------------
// 8-lane single-precision primitives
// ---------------------------------------------------------------------------

struct Lane8 {
    std::array<float, kLanes> v{};

    static Lane8 broadcast(float x) {
        Lane8 l;
        l.v.fill(x);
        return l;
    }
    float& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    float operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
    bool operator==(const Lane8&) const = default;
};

/// Bit i set = lane i flagged.
using LaneMask = std::uint8_t;

template <typename F>
inline Lane8 lanewise(const Lane8& a, const Lane8& b, F f) {
    Lane8 r;
    for (int i = 0; i < kLanes; ++i) r[i] = f(a[i], b[i]);
    return r;
}

inline Lane8 vec_add(const Lane8& a, const Lane8& b) { return lanewise(a, b, [](float x, float y) { return x + y; }); }
inline Lane8 vec_sub(const Lane8& a, const Lane8& b) { return lanewise(a, b, [](float x, float y) { return x - y; }); }
inline Lane8 vec_mul(const Lane8& a, const Lane8& b) { return lanewise(a, b, [](float x, float y) { return x * y; }); }
inline Lane8 vec_min(const Lane8& a, const Lane8& b) { return lanewise(a, b, [](float x, float y) { return y < x ? y : x; }); }
inline Lane8 vec_max(const Lane8& a, const Lane8& b) { return lanewise(a, b, [](float x, float y) { return y > x ? y : x; }); }

inline Lane8 vec_sqrt(const Lane8& a) {
    Lane8 r;
    for (int i = 0; i < kLanes; ++i) r[i] = std::sqrt(a[i]);
    return r;
}

/// a * b + c with a single rounding.
inline Lane8 vec_fma(const Lane8& a, const Lane8& b, const Lane8& c) {
    Lane8 r;
    for (int i = 0; i < kLanes; ++i) r[i] = std::fma(a[i], b[i], c[i]);
    return r;
}

/// Correctly rounded reciprocal. Zero lanes give +-inf and are reported in
/// @p zero_lanes.
inline Lane8 vec_inv(const Lane8& a, LaneMask* zero_lanes = nullptr) {
    Lane8 r;
    LaneMask mask = 0;
    for (int i = 0; i < kLanes; ++i) {
        if (a[i] == 0.0f) mask |= static_cast<LaneMask>(1u << i);
        r[i] = 1.0f / a[i];
    }
    if (zero_lanes) *zero_lanes = mask;
    return r;
}

/// Division from reciprocal and multiplies: q = n * inv(d), then one
/// residual correction r = n - q d, q' = q + r inv(d). With inv(d)
/// correctly rounded this reproduces the IEEE quotient.
inline Lane8 vec_div(const Lane8& n, const Lane8& d) {
    const Lane8 y = vec_inv(d);
    const Lane8 q = vec_mul(n, y);
    Lane8 neg_q;
    for (int i = 0; i < kLanes; ++i) neg_q[i] = -q[i];
    const Lane8 r = vec_fma(neg_q, d, n);
    Lane8 out = vec_fma(r, y, q);
    // Exact or non-finite quotients: the correction would turn inf into nan.
    for (int i = 0; i < kLanes; ++i) {
        if (!std::isfinite(q[i]) || r[i] == 0.0f) out[i] = q[i];
    }
    return out;
}

/// Instruction issues charged for one vec_div (inv, mul, fms, fma).
inline constexpr int kDivIssues = 4;

// ---------------------------------------------------------------------------
// Counter-based normal draws
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Standard-normal draw for element (asset, timestep, path), recomputable in
/// isolation (Box-Muller over a hashed counter).
inline float normal_draw(std::uint64_t seed, std::uint64_t asset, std::uint64_t timestep, std::uint64_t path) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ asset);
    h = mix64(h ^ (timestep * 0x100000001B3ull));
    h = mix64(h ^ (path + 0x7F4A7C15ull));
    const std::uint64_t h2 = mix64(h ^ 0xD1B54A32D192ED03ull);
    // 53-bit uniforms in (0, 1].
    const double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    return static_cast<float>(z);
}

}  // namespace aiesim
