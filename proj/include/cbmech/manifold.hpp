#pragma once

// Chart-based manifold models for order parameters. Built-ins: R^n, the
// circle S1 (angle chart), the sphere S2 (spherical chart for metric work,
// embedded unit vectors for group actions), and SO(3) via rotation vectors.
//
// Values are stored zero-padded in Vec3; `rep` counts the meaningful
// components (chart coordinates, or 3 for embedded representations).

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "error.hpp"

namespace cbmech {

inline double wrap_angle(double a) {
    // maps to (-pi, pi]
    const double two_pi = 2.0 * M_PI;
    double r = std::fmod(a, two_pi);
    if (r <= -M_PI) r += two_pi;
    if (r > M_PI) r -= two_pi;
    return r;
}

struct Christoffel {
    int dim = 0;
    double G[3][3][3] = {};
    double& operator()(int a, int b, int c) { return G[a][b][c]; }
    double operator()(int a, int b, int c) const { return G[a][b][c]; }
};

struct TangentVector {
    Vec3 base;        // chart point it is attached to
    Vec3 components;  // rep components, zero-padded
};

struct ManifoldModel {
    std::string tag;
    int dim = 0;   // manifold dimension
    int rep = 0;   // stored components per value
    bool embedded = false;
    bool wrap_increments = false;  // S1 seam handling in difference stencils

    std::function<Mat3(const Vec3&)> chart_metric;  // g_M, rep x rep block
    std::function<Christoffel(const Vec3&)> analytic_christoffel;
    std::function<double(const Vec3&, const Vec3&)> analytic_distance;  // raw d_M
    std::function<void(const Vec3&)> validate_point;  // throws ValidationError
    std::function<Vec3(const Vec3&)> retract;         // back onto M after a step
    std::function<Vec3(const Vec3&, const Vec3&)> tangent_project;  // (ν, v) → T_νM
    // group tag → closure (ξ, ν) → ξ_M(ν)
    std::vector<std::pair<std::string, std::function<Vec3(const Vec3&, const Vec3&)>>> actions;

    // componentwise difference a − b, wrap-aware for S1
    Vec3 increment(const Vec3& a, const Vec3& b) const {
        Vec3 d = a - b;
        if (wrap_increments)
            for (int k = 0; k < rep; ++k) d.v[k] = wrap_angle(d.v[k]);
        return d;
    }

    void validate(const Vec3& v) const {
        if (validate_point) validate_point(v);
    }
};

namespace detail {

inline void require_finite(const Vec3& v, int rep, const char* tag) {
    for (int k = 0; k < rep; ++k)
        if (!std::isfinite(v.v[k]))
            throw ValidationError(std::string(tag) + ": non-finite chart value");
}

}  // namespace detail

// ---- built-in models -------------------------------------------------------

inline ManifoldModel euclidean(int n) {
    if (n < 1 || n > 3)
        throw ValidationError("euclidean: dimension must be 1..3");
    ManifoldModel M;
    M.tag = "R^n";
    M.dim = n;
    M.rep = n;
    M.chart_metric = [n](const Vec3&) {
        Mat3 g;
        for (int i = 0; i < n; ++i) g(i, i) = 1.0;
        return g;
    };
    M.analytic_christoffel = [n](const Vec3&) {
        Christoffel c;
        c.dim = n;
        return c;
    };
    M.analytic_distance = [n](const Vec3& a, const Vec3& b) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += sq(a.v[k] - b.v[k]);
        return std::sqrt(s);
    };
    M.validate_point = [n](const Vec3& v) { detail::require_finite(v, n, "R^n"); };
    M.retract = [](const Vec3& v) { return v; };
    M.tangent_project = [](const Vec3&, const Vec3& v) { return v; };
    M.actions.emplace_back("translation",
                           [](const Vec3& xi, const Vec3&) { return xi; });
    return M;
}

enum class CircleMetric { chord, arc };

// Angle chart on S1. Chord distance 2|sin(Δ/2)| is the default used by the
// bundled demos; arc distance |Δ| wrapped is also available.
inline ManifoldModel circle(CircleMetric kind = CircleMetric::chord) {
    ManifoldModel M;
    M.tag = "S1";
    M.dim = 1;
    M.rep = 1;
    M.wrap_increments = true;
    M.chart_metric = [](const Vec3&) {
        Mat3 g;
        g(0, 0) = 1.0;
        return g;
    };
    M.analytic_christoffel = [](const Vec3&) {
        Christoffel c;
        c.dim = 1;
        return c;
    };
    if (kind == CircleMetric::chord) {
        M.analytic_distance = [](const Vec3& a, const Vec3& b) {
            return 2.0 * std::abs(std::sin(0.5 * (a.v[0] - b.v[0])));
        };
    } else {
        M.analytic_distance = [](const Vec3& a, const Vec3& b) {
            return std::abs(wrap_angle(a.v[0] - b.v[0]));
        };
    }
    M.validate_point = [](const Vec3& v) { detail::require_finite(v, 1, "S1"); };
    M.retract = [](const Vec3& v) { return Vec3{wrap_angle(v.v[0]), 0.0, 0.0}; };
    M.tangent_project = [](const Vec3&, const Vec3& v) { return v; };
    M.actions.emplace_back("SO2", [](const Vec3& xi, const Vec3&) { return xi; });
    return M;
}

inline Vec3 sphere_chart_to_embedded(const Vec3& tp) {
    const double th = tp.v[0], ph = tp.v[1];
    return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

inline Vec3 sphere_embedded_to_chart(const Vec3& p) {
    const Vec3 u = normalized(p);
    return {std::acos(std::clamp(u.v[2], -1.0, 1.0)), std::atan2(u.v[1], u.v[0]), 0.0};
}

// Spherical chart (θ, φ), g = diag(1, sin²θ). Rejects the polar loci.
inline ManifoldModel sphere_chart() {
    constexpr double margin = 1e-8;
    ManifoldModel M;
    M.tag = "S2";
    M.dim = 2;
    M.rep = 2;
    M.chart_metric = [](const Vec3& v) {
        Mat3 g;
        g(0, 0) = 1.0;
        g(1, 1) = sq(std::sin(v.v[0]));
        return g;
    };
    M.analytic_christoffel = [](const Vec3& v) {
        // Γ^θ_φφ = −sinθ cosθ, Γ^φ_θφ = Γ^φ_φθ = cotθ
        const double th = v.v[0];
        Christoffel c;
        c.dim = 2;
        c(0, 1, 1) = -std::sin(th) * std::cos(th);
        c(1, 0, 1) = c(1, 1, 0) = std::cos(th) / std::sin(th);
        return c;
    };
    M.analytic_distance = [](const Vec3& a, const Vec3& b) {
        const Vec3 p = sphere_chart_to_embedded(a), q = sphere_chart_to_embedded(b);
        return std::atan2(norm(cross(p, q)), dot(p, q));
    };
    M.validate_point = [](const Vec3& v) {
        detail::require_finite(v, 2, "S2");
        if (v.v[0] < margin || v.v[0] > M_PI - margin)
            throw ValidationError("S2 chart: point within 1e-8 of polar singularity");
    };
    M.retract = [](const Vec3& v) { return v; };
    M.tangent_project = [](const Vec3&, const Vec3& v) { return v; };
    return M;
}

// Unit vectors in R³. Used wherever SO(3) acts on the order parameter and
// for chart-free minimization; the action matrix is 𝒜(ν) = −ν∧ so that
// 𝒜 q̇ = q̇ ∧ ν.
inline ManifoldModel sphere_embedded() {
    ManifoldModel M;
    M.tag = "S2";
    M.dim = 2;
    M.rep = 3;
    M.embedded = true;
    M.chart_metric = [](const Vec3&) { return Mat3::identity(); };
    M.analytic_distance = [](const Vec3& a, const Vec3& b) {
        return std::atan2(norm(cross(a, b)), dot(a, b));
    };
    M.validate_point = [](const Vec3& v) {
        detail::require_finite(v, 3, "S2 embedded");
        if (std::abs(norm(v) - 1.0) > 1e-6)
            throw ValidationError("S2 embedded: value not on the unit sphere");
    };
    M.retract = [](const Vec3& v) { return normalized(v); };
    M.tangent_project = [](const Vec3& nu, const Vec3& v) {
        return v - dot(v, nu) * nu;
    };
    M.actions.emplace_back("SO3", [](const Vec3& xi, const Vec3& nu) {
        return -cross(nu, xi);  // = 𝒜(ν) ξ with 𝒜 = −ν∧
    });
    return M;
}

inline Mat3 sphere_action_matrix(const Vec3& nu) { return -crossmat(nu); }

// Rotation-vector chart on SO(3): value r with |r| < π, R = exp(r∧).
// Metric g = TᵀT where T maps ṙ to the body angular velocity, so curve
// length equals integrated rotation angle and d(r₁, r₂) = angle(R₁ᵀR₂).
inline Mat3 so3_velocity_map(const Vec3& r) {
    const double th = norm(r);
    const Mat3 S = crossmat(r);
    double c1, c2;  // (1−cosθ)/θ², (θ−sinθ)/θ³
    if (th < 1e-4) {
        const double t2 = th * th;
        c1 = 0.5 - t2 / 24.0;
        c2 = 1.0 / 6.0 - t2 / 120.0;
    } else {
        c1 = (1.0 - std::cos(th)) / (th * th);
        c2 = (th - std::sin(th)) / (th * th * th);
    }
    return Mat3::identity() - c1 * S + c2 * (S * S);
}

inline ManifoldModel rotation_group() {
    constexpr double margin = 1e-8;
    ManifoldModel M;
    M.tag = "SO3";
    M.dim = 3;
    M.rep = 3;
    M.chart_metric = [](const Vec3& r) {
        const Mat3 T = so3_velocity_map(r);
        return transpose(T) * T;
    };
    M.analytic_distance = [](const Vec3& a, const Vec3& b) {
        const Mat3 Rel = transpose(rotation(a)) * rotation(b);
        // angle from the axial part and trace, stable near 0 and π
        const Vec3 ax = axial(Rel);
        const double s = norm(ax), c = 0.5 * (trace(Rel) - 1.0);
        return std::atan2(s, c);
    };
    M.validate_point = [](const Vec3& r) {
        detail::require_finite(r, 3, "SO3");
        if (norm(r) > M_PI - margin)
            throw ValidationError("SO3 chart: rotation vector within 1e-8 of |r| = pi");
    };
    M.retract = [](const Vec3& v) { return v; };
    M.tangent_project = [](const Vec3&, const Vec3& v) { return v; };
    return M;
}

inline ManifoldModel manifold_by_tag(const std::string& tag) {
    if (tag == "R^1") return euclidean(1);
    if (tag == "R^2") return euclidean(2);
    if (tag == "R^3" || tag == "R^n") return euclidean(3);
    if (tag == "S1") return circle();
    if (tag == "S1-arc") return circle(CircleMetric::arc);
    if (tag == "S2") return sphere_chart();
    if (tag == "S2-embedded") return sphere_embedded();
    if (tag == "SO3") return rotation_group();
    throw ValidationError("unknown manifold tag: " + tag);
}

// ---- operations ------------------------------------------------------------

// Γ^i_jk = g^im Γ_mjk,  Γ_mjk = ½(∂_k g_mj + ∂_j g_mk − ∂_m g_jk)
inline Christoffel christoffel(const ManifoldModel& M, const Vec3& nu,
                               double h_rel = 1e-5, bool force_fd = false) {
    if (M.embedded)
        throw ValidationError("christoffel: chart representation required");
    M.validate(nu);
    if (M.analytic_christoffel && !force_fd) return M.analytic_christoffel(nu);

    const int d = M.dim;
    // dg[k](i,j) = ∂_k g_ij by central differences
    Mat3 dg[3];
    for (int k = 0; k < d; ++k) {
        const double h = fd_step(nu.v[k], h_rel);
        Vec3 p = nu, q = nu;
        p.v[k] += h;
        q.v[k] -= h;
        M.validate(p);
        M.validate(q);
        dg[k] = (1.0 / (2.0 * h)) * (M.chart_metric(p) - M.chart_metric(q));
    }
    const Mat3 g = M.chart_metric(nu);
    if (!spd_block(g, d))
        throw ValidationError("christoffel: metric degenerate at evaluation point");
    const Mat3 ginv = inverse_block(g, d, "christoffel");

    Christoffel c;
    c.dim = d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                double s = 0.0;
                for (int m = 0; m < d; ++m)
                    s += ginv(i, m) * 0.5 *
                         (dg[k](m, j) + dg[j](m, k) - dg[m](j, k));
                c(i, j, k) = s;
            }
    return c;
}

// ν̈^α = ∂_t ν̇^α + Γ^α_βγ ν̇^β ν̇^γ
inline TangentVector covariant_acceleration(const ManifoldModel& M, const Vec3& nu,
                                            const TangentVector& nudot,
                                            const Vec3& dt_nudot,
                                            double h_rel = 1e-5,
                                            bool force_fd = false) {
    for (int k = 0; k < M.rep; ++k)
        if (std::abs(nudot.base.v[k] - nu.v[k]) > 1e-12 * (1.0 + std::abs(nu.v[k])))
            throw ValidationError("covariant_acceleration: mismatched base points");
    const Christoffel G = christoffel(M, nu, h_rel, force_fd);
    TangentVector a;
    a.base = nu;
    for (int i = 0; i < M.dim; ++i) {
        double s = dt_nudot.v[i];
        for (int j = 0; j < M.dim; ++j)
            for (int k = 0; k < M.dim; ++k)
                s += G(i, j, k) * nudot.components.v[j] * nudot.components.v[k];
        a.components.v[i] = s;
    }
    return a;
}

enum class DistanceMode { raw, bounded };

namespace detail {

// 1-d fallback: shoot ν'' = −Γ ν'ν' from ν₁, bisect the initial speed until
// the unit-time endpoint hits ν₂; the metric length of the shot is |v|·√g
// integrated, equal to the geodesic distance for monotone 1-d charts.
inline double shoot_distance_1d(const ManifoldModel& M, double a, double b) {
    if (a == b) return 0.0;
    auto gamma = [&](double x) {
        Vec3 p{x, 0.0, 0.0};
        return christoffel(M, p)(0, 0, 0);
    };
    const double dir = b > a ? 1.0 : -1.0;
    auto rk4_step = [&](double& x, double& v, double dt) {
        auto f = [&](double xx, double vv, double& dx, double& dv) {
            dx = vv;
            dv = -gamma(xx) * vv * vv;
        };
        double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
        f(x, v, k1x, k1v);
        f(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, k2x, k2v);
        f(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, k3x, k3v);
        f(x + dt * k3x, v + dt * k3v, k4x, k4v);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    };
    auto endpoint = [&](double mag) {
        // RK4 on (x' = v, v' = −Γ(x) v²), unit time, 64 steps
        double x = a, v = dir * mag;
        const int n = 64;
        for (int i = 0; i < n; ++i) rk4_step(x, v, 1.0 / n);
        return x;
    };
    double lo = 0.0, hi = std::abs(b - a);
    int guard = 0;
    while (dir * (endpoint(hi) - b) < 0.0) {
        hi *= 2.0;
        if (++guard > 60)
            throw NumericalError("geodesic_distance: shooting bracket failed");
    }
    double mag = hi;
    for (int it = 0; it < 200; ++it) {
        mag = 0.5 * (lo + hi);
        const double e = dir * (endpoint(mag) - b);
        if (std::abs(e) < 1e-13 * (1.0 + std::abs(b))) break;
        (e < 0.0 ? lo : hi) = mag;
    }
    // metric length of the unit-time geodesic: ∫√(g)·|x'| dt via trapezoid
    double x = a, v = dir * mag, len = 0.0;
    const int n = 64;
    const double dt = 1.0 / n;
    auto glen = [&](double xx, double vv) {
        Vec3 p{xx, 0.0, 0.0};
        return std::sqrt(M.chart_metric(p)(0, 0)) * std::abs(vv);
    };
    for (int i = 0; i < n; ++i) {
        const double l0 = glen(x, v);
        rk4_step(x, v, dt);
        len += 0.5 * dt * (l0 + glen(x, v));
    }
    return len;
}

// ≥2-d fallback: relax a discrete path between the endpoints, descending the
// length functional in the chart; adequate for mildly curved user metrics.
inline double relax_distance(const ManifoldModel& M, const Vec3& a, const Vec3& b) {
    const int n = 33;  // path nodes including ends
    std::vector<Vec3> path(n);
    for (int i = 0; i < n; ++i) {
        const double t = double(i) / (n - 1);
        path[i] = (1.0 - t) * a + t * b;
    }
    auto length = [&](const std::vector<Vec3>& p) {
        double L = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            const Vec3 d = p[i + 1] - p[i];
            const Vec3 mid = 0.5 * (p[i] + p[i + 1]);
            const Mat3 g = M.chart_metric(mid);
            double s = 0.0;
            for (int r = 0; r < M.dim; ++r)
                for (int c = 0; c < M.dim; ++c) s += d.v[r] * g(r, c) * d.v[c];
            L += std::sqrt(std::max(0.0, s));
        }
        return L;
    };
    double L = length(path);
    const double scale = std::max(1.0, norm(b - a));
    double step = 0.05 * scale;
    for (int it = 0; it < 200; ++it) {
        bool improved = false;
        for (int i = 1; i + 1 < n; ++i) {
            for (int k = 0; k < M.dim; ++k) {
                for (double s : {step, -step}) {
                    std::vector<Vec3> trial = path;
                    trial[i].v[k] += s;
                    const double Lt = length(trial);
                    if (Lt < L - 1e-15) {
                        path = trial;
                        L = Lt;
                        improved = true;
                    }
                }
            }
        }
        if (!improved) {
            step *= 0.5;
            if (step < 1e-10 * scale) return L;
        }
    }
    return L;
}

}  // namespace detail

inline double geodesic_distance(const ManifoldModel& M, const Vec3& a, const Vec3& b,
                                DistanceMode mode = DistanceMode::raw) {
    M.validate(a);
    M.validate(b);
    double d;
    if (M.analytic_distance) {
        d = M.analytic_distance(a, b);
    } else if (M.dim == 1) {
        d = detail::shoot_distance_1d(M, a.v[0], b.v[0]);
    } else {
        d = detail::relax_distance(M, a, b);
    }
    if (!(d >= 0.0) || !std::isfinite(d))
        throw NumericalError("geodesic_distance: distance unavailable");
    return mode == DistanceMode::raw ? d : d / (1.0 + d);
}

// trapezoid on the chart-metric speed, wrap-aware increments
inline double curve_length(const ManifoldModel& M, const std::vector<Vec3>& samples) {
    if (samples.size() < 2)
        throw ValidationError("curve_length: need at least 2 samples");
    for (const Vec3& p : samples) M.validate(p);
    auto speed = [&](const Vec3& at, const Vec3& d) {
        const Mat3 g = M.chart_metric(at);
        double s = 0.0;
        for (int r = 0; r < M.dim; ++r)
            for (int c = 0; c < M.dim; ++c) s += d.v[r] * g(r, c) * d.v[c];
        return std::sqrt(std::max(0.0, s));
    };
    double L = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const Vec3 d = M.increment(samples[i + 1], samples[i]);
        L += 0.5 * (speed(samples[i], d) + speed(samples[i + 1], d));
    }
    return L;
}

inline Vec3 action_generator(const ManifoldModel& M, const std::string& group,
                             const Vec3& xi, const Vec3& nu) {
    M.validate(nu);
    for (const auto& [tag, act] : M.actions)
        if (tag == group) return act(xi, nu);
    throw ValidationError("action_generator: no action of group '" + group +
                          "' registered on " + M.tag);
}

}  // namespace cbmech
