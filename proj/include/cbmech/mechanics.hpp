#pragma once

// Bulk Lagrangian machinery: density and responses, Euler-Lagrange residuals
// through the raw-∂ℒ route and the response route, the Eshelby tensor, the
// Noether current/flux pair, invariance checks, and the configurational
// balance. All response fields are per unit reference volume.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "kinematics.hpp"

namespace cbmech {

struct PointState {
    Vec3 X;
    double t = 0.0;
    Vec3 x, xdot;
    Mat3 F;
    Vec3 nu, nudot;
    Mat3 gradnu;  // rows α (value components), cols A (material axes)
};

inline PointState point_state(const MotionState& s, int idx) {
    PointState p;
    p.X = s.grid->point(idx);
    p.t = s.t;
    p.x = s.x[idx];
    p.xdot = s.xdot[idx];
    p.F = s.F[idx];
    p.nu = s.nu[idx];
    p.nudot = s.nudot[idx];
    p.gradnu = s.gradnu[idx];
    return p;
}

struct LagrangianModel {
    ManifoldPtr M;
    int nu_comp = 1;       // stored order-parameter components (M->rep)
    double h_d = 1e-6;     // relative step for finite-difference partials
    bool linear_manifold = false;  // gates integral substructural statements

    std::function<double(const Vec3& nu, const Vec3& nudot)> chi;
    std::function<double(const Vec3& X, const Mat3& F, const Vec3& nu,
                         const Mat3& gradnu)> e;
    std::function<double(const Vec3& x, const Vec3& nu)> w;

    // optional analytic partials; finite differences otherwise
    std::function<Mat3(const Vec3&, const Mat3&, const Vec3&, const Mat3&)> de_dF;
    std::function<Mat3(const Vec3&, const Mat3&, const Vec3&, const Mat3&)> de_dgradnu;
    std::function<Vec3(const Vec3&, const Mat3&, const Vec3&, const Mat3&)> de_dnu;
    std::function<Vec3(const Vec3&, const Mat3&, const Vec3&, const Mat3&)> de_dX;
    std::function<Vec3(const Vec3&, const Vec3&)> dchi_dnudot, dchi_dnu;
    std::function<Vec3(const Vec3&, const Vec3&)> dw_dx, dw_dnu;

    // manufactured-solution sources per unit volume, added to b and β^{ni}
    std::function<Vec3(const Vec3& X, double t)> b_src, beta_src;

    double chi_val(const Vec3& nu, const Vec3& nudot) const {
        return chi ? chi(nu, nudot) : 0.0;
    }
    double e_val(const PointState& p) const {
        return e ? e(p.X, p.F, p.nu, p.gradnu) : 0.0;
    }
    double w_val(const Vec3& x, const Vec3& nu) const {
        return w ? w(x, nu) : 0.0;
    }
};

// ---- partial derivatives of the model closures -----------------------------

inline Mat3 partial_F_e(const LagrangianModel& m, const PointState& p) {
    if (!m.e) return Mat3{};
    if (m.de_dF) return m.de_dF(p.X, p.F, p.nu, p.gradnu);
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double h = fd_step(p.F(i, j), m.h_d);
            Mat3 Fp = p.F, Fm = p.F;
            Fp(i, j) += h;
            Fm(i, j) -= h;
            r(i, j) = (m.e(p.X, Fp, p.nu, p.gradnu) - m.e(p.X, Fm, p.nu, p.gradnu)) /
                      (2.0 * h);
        }
    return r;
}

inline Mat3 partial_gradnu_e(const LagrangianModel& m, const PointState& p) {
    if (!m.e) return Mat3{};
    if (m.de_dgradnu) return m.de_dgradnu(p.X, p.F, p.nu, p.gradnu);
    Mat3 r;
    for (int a = 0; a < m.nu_comp; ++a)
        for (int A = 0; A < 3; ++A) {
            const double h = fd_step(p.gradnu(a, A), m.h_d);
            Mat3 Gp = p.gradnu, Gm = p.gradnu;
            Gp(a, A) += h;
            Gm(a, A) -= h;
            r(a, A) = (m.e(p.X, p.F, p.nu, Gp) - m.e(p.X, p.F, p.nu, Gm)) / (2.0 * h);
        }
    return r;
}

inline Vec3 partial_nu_e(const LagrangianModel& m, const PointState& p) {
    if (!m.e) return Vec3{};
    if (m.de_dnu) return m.de_dnu(p.X, p.F, p.nu, p.gradnu);
    Vec3 r;
    for (int a = 0; a < m.nu_comp; ++a) {
        const double h = fd_step(p.nu.v[a], m.h_d);
        Vec3 np = p.nu, nm = p.nu;
        np.v[a] += h;
        nm.v[a] -= h;
        r.v[a] = (m.e(p.X, p.F, np, p.gradnu) - m.e(p.X, p.F, nm, p.gradnu)) / (2.0 * h);
    }
    return r;
}

inline Vec3 partial_X_e(const LagrangianModel& m, const PointState& p) {
    if (!m.e) return Vec3{};
    if (m.de_dX) return m.de_dX(p.X, p.F, p.nu, p.gradnu);
    Vec3 r;
    for (int a = 0; a < 3; ++a) {
        const double h = fd_step(p.X.v[a], m.h_d);
        Vec3 Xp = p.X, Xm = p.X;
        Xp.v[a] += h;
        Xm.v[a] -= h;
        r.v[a] = (m.e(Xp, p.F, p.nu, p.gradnu) - m.e(Xm, p.F, p.nu, p.gradnu)) / (2.0 * h);
    }
    return r;
}

inline Vec3 partial_nudot_chi(const LagrangianModel& m, const Vec3& nu,
                              const Vec3& nudot) {
    if (!m.chi) return Vec3{};
    if (m.dchi_dnudot) return m.dchi_dnudot(nu, nudot);
    Vec3 r;
    for (int a = 0; a < m.nu_comp; ++a) {
        const double h = fd_step(nudot.v[a], m.h_d);
        Vec3 vp = nudot, vm = nudot;
        vp.v[a] += h;
        vm.v[a] -= h;
        r.v[a] = (m.chi(nu, vp) - m.chi(nu, vm)) / (2.0 * h);
    }
    return r;
}

inline Vec3 partial_nu_chi(const LagrangianModel& m, const Vec3& nu,
                           const Vec3& nudot) {
    if (!m.chi) return Vec3{};
    if (m.dchi_dnu) return m.dchi_dnu(nu, nudot);
    Vec3 r;
    for (int a = 0; a < m.nu_comp; ++a) {
        const double h = fd_step(nu.v[a], m.h_d);
        Vec3 np = nu, nm = nu;
        np.v[a] += h;
        nm.v[a] -= h;
        r.v[a] = (m.chi(np, nudot) - m.chi(nm, nudot)) / (2.0 * h);
    }
    return r;
}

inline Vec3 partial_x_w(const LagrangianModel& m, const Vec3& x, const Vec3& nu) {
    if (!m.w) return Vec3{};
    if (m.dw_dx) return m.dw_dx(x, nu);
    Vec3 r;
    for (int a = 0; a < 3; ++a) {
        const double h = fd_step(x.v[a], m.h_d);
        Vec3 xp = x, xm = x;
        xp.v[a] += h;
        xm.v[a] -= h;
        r.v[a] = (m.w(xp, nu) - m.w(xm, nu)) / (2.0 * h);
    }
    return r;
}

inline Vec3 partial_nu_w(const LagrangianModel& m, const Vec3& x, const Vec3& nu) {
    if (!m.w) return Vec3{};
    if (m.dw_dnu) return m.dw_dnu(x, nu);
    Vec3 r;
    for (int a = 0; a < m.nu_comp; ++a) {
        const double h = fd_step(nu.v[a], m.h_d);
        Vec3 np = nu, nm = nu;
        np.v[a] += h;
        nm.v[a] -= h;
        r.v[a] = (m.w(x, np) - m.w(x, nm)) / (2.0 * h);
    }
    return r;
}

// ∂²χ/∂ν̇² via differences of the first partial (analytic when registered)
inline Mat3 substructural_mass(const LagrangianModel& m, const Vec3& nu,
                               const Vec3& nudot) {
    Mat3 A;
    for (int j = 0; j < m.nu_comp; ++j) {
        const double h = fd_step(nudot.v[j], std::sqrt(m.h_d));
        Vec3 vp = nudot, vm = nudot;
        vp.v[j] += h;
        vm.v[j] -= h;
        const Vec3 col =
            (partial_nudot_chi(m, nu, vp) - partial_nudot_chi(m, nu, vm)) / (2.0 * h);
        for (int i = 0; i < m.nu_comp; ++i) A(i, j) = col.v[i];
    }
    return A;
}

// ---- densities and responses -----------------------------------------------

// ℒ = ρ₀(½|ẋ|² + χ − e − w)
inline double lagrangian_density_point(const LagrangianModel& m, const PointState& p,
                                       double rho0) {
    return rho0 * (0.5 * dot(p.xdot, p.xdot) + m.chi_val(p.nu, p.nudot) - m.e_val(p) -
                   m.w_val(p.x, p.nu));
}

inline Field<double> lagrangian_density(const MotionState& s,
                                        const LagrangianModel& m) {
    Field<double> L(s.grid);
    for (int idx = 0; idx < L.size(); ++idx)
        L[idx] = lagrangian_density_point(m, point_state(s, idx), s.grid->density(idx));
    return L;
}

struct PointResponses {
    Mat3 P;    // first Piola-Kirchhoff stress ρ₀ ∂_F e
    Mat3 S;    // microstress ρ₀ ∂_∇ν e
    Vec3 z;    // self-force ρ₀ ∂_ν e (conservative part)
    Vec3 b;    // body force ∂_x ℒ = −ρ₀ ∂_x w, plus manufactured source
    Vec3 beta; // external substructural force −ρ₀ ∂_ν w, plus source
};

inline PointResponses bulk_responses_point(const LagrangianModel& m,
                                           const PointState& p, double rho0) {
    PointResponses r;
    r.P = rho0 * partial_F_e(m, p);
    r.S = rho0 * partial_gradnu_e(m, p);
    r.z = rho0 * partial_nu_e(m, p);
    r.b = -rho0 * partial_x_w(m, p.x, p.nu);
    r.beta = -rho0 * partial_nu_w(m, p.x, p.nu);
    if (m.b_src) r.b += m.b_src(p.X, p.t);
    if (m.beta_src) r.beta += m.beta_src(p.X, p.t);
    return r;
}

struct ResponseFields {
    Field<Mat3> P, S;
    Field<Vec3> z, b, beta;
};

inline ResponseFields bulk_responses(const MotionState& s, const LagrangianModel& m) {
    ResponseFields r{Field<Mat3>(s.grid), Field<Mat3>(s.grid), Field<Vec3>(s.grid),
                     Field<Vec3>(s.grid), Field<Vec3>(s.grid)};
    for (int idx = 0; idx < s.grid->count(); ++idx) {
        const PointResponses pr =
            bulk_responses_point(m, point_state(s, idx), s.grid->density(idx));
        r.P[idx] = pr.P;
        r.S[idx] = pr.S;
        r.z[idx] = pr.z;
        r.b[idx] = pr.b;
        r.beta[idx] = pr.beta;
    }
    return r;
}

// ℙ = ρ₀ e I − Fᵀ P − (∇ν)ᵀ 𝒮
inline Mat3 eshelby_point(const LagrangianModel& m, const PointState& p, double rho0) {
    const PointResponses r = bulk_responses_point(m, p, rho0);
    return rho0 * m.e_val(p) * Mat3::identity() - transpose(p.F) * r.P -
           transpose(p.gradnu) * r.S;
}

inline Field<Mat3> eshelby_tensor(const MotionState& s, const LagrangianModel& m) {
    Field<Mat3> out(s.grid);
    for (int idx = 0; idx < s.grid->count(); ++idx)
        out[idx] = eshelby_point(m, point_state(s, idx), s.grid->density(idx));
    return out;
}

// ---- field calculus helpers ------------------------------------------------

// (Div A)_r = Σ_a ∂_a A_{ra}
inline Field<Vec3> divergence(const Field<Mat3>& A) {
    Field<Vec3> out(A.grid);
    for (int idx = 0; idx < A.size(); ++idx) {
        Vec3 d;
        for (int r = 0; r < 3; ++r)
            for (int a = 0; a < 3; ++a) {
                if (!A.grid->active(a)) continue;
                d.v[r] += axis_derivative(A, a, idx,
                                          [r, a](const Mat3& p, const Mat3& q) {
                                              return p(r, a) - q(r, a);
                                          });
            }
        out[idx] = d;
    }
    return out;
}

inline Field<double> divergence_vec(const Field<Vec3>& f) {
    Field<double> out(f.grid);
    for (int idx = 0; idx < f.size(); ++idx) {
        double d = 0.0;
        for (int a = 0; a < 3; ++a) {
            if (!f.grid->active(a)) continue;
            d += axis_derivative(f, a, idx, [a](const Vec3& p, const Vec3& q) {
                return p.v[a] - q.v[a];
            });
        }
        out[idx] = d;
    }
    return out;
}

template <typename T>
inline Field<T> ddt_central(const Field<T>& prev, const Field<T>& next, double dt) {
    Field<T> out(prev.grid);
    for (int idx = 0; idx < prev.size(); ++idx)
        out[idx] = (1.0 / (2.0 * dt)) * (next[idx] - prev[idx]);
    return out;
}

inline NormPair field_norms(const Field<double>& f, QuadRule rule = QuadRule::trapezoid) {
    NormPair n;
    for (double v : f.v) n.linf = std::max(n.linf, std::abs(v));
    const double l2sq =
        integrate(*f.grid, [&](int idx) { return sq(f[idx]); }, rule);
    n.l2 = std::sqrt(std::max(0.0, l2sq));
    return n;
}

inline NormPair field_norms(const Field<Vec3>& f, QuadRule rule = QuadRule::trapezoid) {
    NormPair n;
    for (const Vec3& v : f.v) n.linf = std::max(n.linf, norm(v));
    const double l2sq =
        integrate(*f.grid, [&](int idx) { return dot(f[idx], f[idx]); }, rule);
    n.l2 = std::sqrt(std::max(0.0, l2sq));
    return n;
}

// ---- Euler-Lagrange residuals ----------------------------------------------

enum class ElRoute { raw, responses };

struct ElResiduals {
    Field<Vec3> r_x;   // ρ₀ẍ − b − Div P
    Field<Vec3> r_nu;  // ρ₀(d/dt ∂_ν̇χ − ∂_νχ) + z − β^{ni} − Div 𝒮
};

// Central time differences over three consecutive levels. The raw route
// assembles d/dt ∂ℒ-slots directly; the response route uses (P, 𝒮, z, b, β).
// Both call the same partial evaluations, so they agree to rounding.
inline ElResiduals el_residuals(const MotionState& prev, const MotionState& cur,
                                const MotionState& next, double dt,
                                const LagrangianModel& m,
                                ElRoute route = ElRoute::responses) {
    require_same_grid(prev.grid, cur.grid, "el_residuals");
    require_same_grid(cur.grid, next.grid, "el_residuals");
    const BodyGrid& g = *cur.grid;

    // conjugate momenta at the outer levels for the time derivatives
    auto momentum_x = [&](const MotionState& s, int idx) {
        return g.density(idx) * s.xdot[idx];
    };
    auto momentum_nu = [&](const MotionState& s, int idx) {
        return g.density(idx) * partial_nudot_chi(m, s.nu[idx], s.nudot[idx]);
    };

    ResponseFields resp = bulk_responses(cur, m);
    ElResiduals out{Field<Vec3>(cur.grid), Field<Vec3>(cur.grid)};

    if (route == ElRoute::responses) {
        const Field<Vec3> divP = divergence(resp.P);
        const Field<Vec3> divS = divergence(resp.S);
        for (int idx = 0; idx < g.count(); ++idx) {
            const double rho = g.density(idx);
            const Vec3 xddot =
                (1.0 / (2.0 * dt)) * (momentum_x(next, idx) - momentum_x(prev, idx));
            out.r_x[idx] = xddot - resp.b[idx] - divP[idx];
            const Vec3 pdot =
                (1.0 / (2.0 * dt)) * (momentum_nu(next, idx) - momentum_nu(prev, idx));
            const Vec3 dchi = rho * partial_nu_chi(m, cur.nu[idx], cur.nudot[idx]);
            out.r_nu[idx] =
                pdot - dchi + resp.z[idx] - resp.beta[idx] - divS[idx];
        }
        return out;
    }

    // raw-∂ℒ route: residual = d/dt ∂_•̇ℒ + Div ∂_∇•ℒ − ∂_•ℒ
    Field<Mat3> dLdF(cur.grid), dLdG(cur.grid);
    for (int idx = 0; idx < g.count(); ++idx) {
        dLdF[idx] = -resp.P[idx];
        dLdG[idx] = -resp.S[idx];
    }
    const Field<Vec3> divF = divergence(dLdF);
    const Field<Vec3> divG = divergence(dLdG);
    for (int idx = 0; idx < g.count(); ++idx) {
        const double rho = g.density(idx);
        const Vec3 mom_dot =
            (1.0 / (2.0 * dt)) * (momentum_x(next, idx) - momentum_x(prev, idx));
        const Vec3 dLdx = resp.b[idx];
        out.r_x[idx] = mom_dot + divF[idx] - dLdx;
        const Vec3 pnu_dot =
            (1.0 / (2.0 * dt)) * (momentum_nu(next, idx) - momentum_nu(prev, idx));
        const Vec3 dLdnu = rho * partial_nu_chi(m, cur.nu[idx], cur.nudot[idx]) -
                           resp.z[idx] + resp.beta[idx];
        out.r_nu[idx] = pnu_dot + divG[idx] - dLdnu;
    }
    return out;
}

// ---- Noether machinery -----------------------------------------------------

struct GeneratorSet {
    std::function<Vec3(const Vec3& X)> w;       // relabeling velocity over B₀
    std::function<Mat3(const Vec3& X)> grad_w;  // optional analytic ∇w
    std::function<Vec3(const Vec3& x)> v;       // spatial velocity
    std::string group;                          // action tag on M; empty = none
    Vec3 xi;
};

// Div w must vanish (A3); sampled check with analytic or FD gradient.
inline void validate_isochoric(const GeneratorSet& gens, const BodyGrid& g,
                               double tol = 1e-8) {
    if (!gens.w) return;
    for (int idx = 0; idx < g.count(); idx += std::max(1, g.count() / 16)) {
        const Vec3 X = g.point(idx);
        double divw = 0.0;
        if (gens.grad_w) {
            divw = trace(gens.grad_w(X));
        } else {
            for (int a = 0; a < 3; ++a) {
                const double h = fd_step(X.v[a], 1e-6);
                Vec3 p = X, q = X;
                p.v[a] += h;
                q.v[a] -= h;
                divw += (gens.w(p).v[a] - gens.w(q).v[a]) / (2.0 * h);
            }
        }
        if (std::abs(divw) > tol)
            throw ValidationError("GeneratorSet: relabeling field is not isochoric");
    }
}

struct NoetherFields {
    Field<double> Q;  // 𝒬 = ∂_ẋℒ·(v − Fw) + ∂_ν̇ℒ·(ξ_M(ν) − (∇ν)w)
    Field<Vec3> Fl;   // 𝔉 = ℒw + (∂_Fℒ)ᵀ(v − Fw) + (∂_∇νℒ)ᵀ(ξ_M(ν) − (∇ν)w)
};

inline NoetherFields noether_fields(const MotionState& s, const LagrangianModel& m,
                                    const GeneratorSet& gens) {
    validate_isochoric(gens, *s.grid);
    NoetherFields out{Field<double>(s.grid), Field<Vec3>(s.grid)};
    for (int idx = 0; idx < s.grid->count(); ++idx) {
        const PointState p = point_state(s, idx);
        const double rho = s.grid->density(idx);
        const PointResponses r = bulk_responses_point(m, p, rho);
        const Vec3 wX = gens.w ? gens.w(p.X) : Vec3{};
        const Vec3 vx = gens.v ? gens.v(p.x) : Vec3{};
        const Vec3 xiM = gens.group.empty()
                             ? Vec3{}
                             : action_generator(*s.M, gens.group, gens.xi, p.nu);
        const Vec3 dx = vx - p.F * wX;
        const Vec3 dnu = xiM - p.gradnu * wX;
        const Vec3 mom_x = rho * p.xdot;
        const Vec3 mom_nu = rho * partial_nudot_chi(m, p.nu, p.nudot);
        out.Q[idx] = dot(mom_x, dx) + dot(mom_nu, dnu);
        const double L = lagrangian_density_point(m, p, rho);
        out.Fl[idx] = L * wX + transpose(-r.P) * dx + transpose(-r.S) * dnu;
    }
    return out;
}

struct NoetherReport {
    Field<double> residual;  // 𝒬̇ + Div 𝔉 at the middle level
    NormPair norms;
    double el_linf = 0.0;  // EL residual at the middle level (context)
    std::vector<std::string> flags;
};

// The identity holds where the EL equations hold; nodes pinned by essential
// boundary data carry reaction forces instead, so callers may pass their
// constraint mask and the norms skip those nodes (the residual field itself
// stays complete).
inline NoetherReport noether_residual(const MotionState& prev, const MotionState& cur,
                                      const MotionState& next, double dt,
                                      const LagrangianModel& m,
                                      const GeneratorSet& gens,
                                      double el_tolerance = 1e300,
                                      const std::vector<char>* constrained = nullptr) {
    if (constrained &&
        constrained->size() != static_cast<std::size_t>(cur.grid->count()))
        throw ValidationError("noether_residual: constraint mask size mismatch");
    const NoetherFields a = noether_fields(prev, m, gens);
    const NoetherFields b = noether_fields(cur, m, gens);
    const NoetherFields c = noether_fields(next, m, gens);
    const Field<double> divF = divergence_vec(b.Fl);
    NoetherReport rep;
    rep.residual = Field<double>(cur.grid);
    for (int idx = 0; idx < cur.grid->count(); ++idx)
        rep.residual[idx] = (c.Q[idx] - a.Q[idx]) / (2.0 * dt) + divF[idx];
    Field<double> masked = rep.residual;
    const ElResiduals el = el_residuals(prev, cur, next, dt, m);
    Field<double> el_masked(cur.grid);
    for (int idx = 0; idx < cur.grid->count(); ++idx)
        el_masked[idx] = std::max(norm(el.r_x[idx]), norm(el.r_nu[idx]));
    if (constrained) {
        bool any = false;
        for (int idx = 0; idx < cur.grid->count(); ++idx)
            if ((*constrained)[static_cast<std::size_t>(idx)]) {
                masked[idx] = 0.0;
                el_masked[idx] = 0.0;
                any = true;
            }
        if (any) rep.flags.push_back("constrained-nodes-excluded");
    }
    rep.norms = field_norms(masked);
    rep.el_linf = field_norms(el_masked).linf;
    if (rep.el_linf > el_tolerance)
        rep.flags.push_back("el-residual-above-tolerance");
    return rep;
}

// ---- rotational invariance of e --------------------------------------------

// residual = skw(∂_F e Fᵀ) + ½ S(ν∧∂_ν e + r₂),
// (r₂)_k = Σ ε_{αkβ} (∇ν)_{βA} (∂_∇ν e)_{αA}; vanishes iff e is insensitive
// to a simultaneous rotation of (F, ν, ∇ν).
inline Mat3 rotational_invariance_residual(const LagrangianModel& m,
                                           const PointState& p) {
    if (!m.M || m.M->tag != "S2" || !m.M->embedded)
        throw ValidationError(
            "rotational_invariance_residual: embedded S2 with SO(3) action required");
    const Mat3 dF = partial_F_e(m, p);
    const Vec3 dnu = partial_nu_e(m, p);
    const Mat3 dG = partial_gradnu_e(m, p);
    const Vec3 r1 = cross(p.nu, dnu);
    Vec3 r2;
    for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int al = 0; al < 3; ++al)
            for (int be = 0; be < 3; ++be) {
                if (al == k || be == k || al == be) continue;
                // ε_{αkβ}: parity of the permutation (α,k,β)
                const double eps = ((k == (al + 1) % 3) ? 1.0 : -1.0);
                for (int A = 0; A < 3; ++A) s += eps * p.gradnu(be, A) * dG(al, A);
            }
        r2.v[k] = s;
    }
    return skw(dF * transpose(p.F)) + 0.5 * crossmat(r1 + r2);
}

// ---- Definition-level invariance check -------------------------------------

struct TransformFamily {
    enum class Kind { relabel, spatial, group };
    Kind kind = Kind::spatial;
    // finite maps at parameter s
    std::function<Vec3(const Vec3& X, double s)> relabel_map;
    std::function<Mat3(const Vec3& X, double s)> relabel_grad;
    std::function<Vec3(const Vec3& x, double s)> spatial_map;
    std::function<Mat3(const Vec3& x, double s)> spatial_grad;
    std::string group;  // "SO3" rotates (ν, ν̇, ∇ν); "SO2"/"translation" shift ν
    Vec3 xi;
};

inline PointState transform_state(const PointState& p, const TransformFamily& fam,
                                  double s) {
    PointState q = p;
    switch (fam.kind) {
        case TransformFamily::Kind::spatial: {
            const Mat3 G = fam.spatial_grad(p.x, s);
            q.x = fam.spatial_map(p.x, s);
            q.xdot = G * p.xdot;
            q.F = G * p.F;
            break;
        }
        case TransformFamily::Kind::relabel: {
            const Mat3 G = fam.relabel_grad(p.X, s);
            if (std::abs(det(G) - 1.0) > 1e-8)
                throw ValidationError("invariance_check: relabeling not isochoric");
            const Mat3 Ginv = inverse(G);
            q.X = fam.relabel_map(p.X, s);
            q.F = p.F * Ginv;
            q.gradnu = p.gradnu * Ginv;
            break;
        }
        case TransformFamily::Kind::group: {
            if (fam.group == "SO3") {
                const Mat3 R = rotation(s * fam.xi);
                q.nu = R * p.nu;
                q.nudot = R * p.nudot;
                q.gradnu = R * p.gradnu;
            } else if (fam.group == "SO2" || fam.group == "translation") {
                q.nu = p.nu + s * fam.xi;
            } else {
                throw ValidationError("invariance_check: unsupported group '" +
                                      fam.group + "'");
            }
            break;
        }
    }
    return q;
}

struct InvarianceReport {
    bool pass = true;
    double max_deviation = 0.0;         // max |ℒ(transformed) − ℒ|
    double max_scaled_deviation = 0.0;  // max over s of deviation / s²
};

// Pointwise invariance per Definition-1 slots: deviations must shrink like s²
// (the finite-parameter remainder of an invariant density).
inline InvarianceReport invariance_check(const LagrangianModel& m,
                                         const TransformFamily& fam,
                                         const std::vector<PointState>& states,
                                         double rho0 = 1.0, double tol_coeff = 5.0,
                                         double tol_abs = 1e-10) {
    const std::vector<double> s_values{1e-3, 1e-2, 1e-1};
    InvarianceReport rep;
    for (const PointState& p : states) {
        const double L0 = lagrangian_density_point(m, p, rho0);
        const double scale = std::max(1.0, std::abs(L0));
        for (double s : s_values) {
            const PointState q = transform_state(p, fam, s);
            const double dev = std::abs(lagrangian_density_point(m, q, rho0) - L0);
            rep.max_deviation = std::max(rep.max_deviation, dev);
            rep.max_scaled_deviation = std::max(rep.max_scaled_deviation, dev / sq(s));
            if (dev > (tol_abs + tol_coeff * sq(s)) * scale) rep.pass = false;
        }
    }
    return rep;
}

// ---- configurational balance (Eshelby route) -------------------------------

// residual of d/dt(Fᵀ∂_ẋℒ + (∇ν)ᵀ∂_ν̇ℒ) − Div(ℙ − (½ρ₀|ẋ|² + ρ₀χ)I) − ∂_Xℒ;
// valid on EL trajectories with w = 0 and uniform ρ₀.
inline Field<Vec3> config_balance_residual(const MotionState& prev,
                                           const MotionState& cur,
                                           const MotionState& next, double dt,
                                           const LagrangianModel& m) {
    require_same_grid(prev.grid, cur.grid, "config_balance_residual");
    require_same_grid(cur.grid, next.grid, "config_balance_residual");
    if (m.w)
        throw ValidationError(
            "config_balance_residual: external potential w must be absent");
    if (!cur.grid->rho0_field.empty())
        throw ValidationError("config_balance_residual: uniform rho0 required");
    const BodyGrid& g = *cur.grid;

    auto pseudo_momentum = [&](const MotionState& s, int idx) {
        const double rho = g.density(idx);
        const Vec3 mom_nu = rho * partial_nudot_chi(m, s.nu[idx], s.nudot[idx]);
        return transpose(s.F[idx]) * (rho * s.xdot[idx]) +
               transpose(s.gradnu[idx]) * mom_nu;
    };

    Field<Mat3> stress(cur.grid);
    for (int idx = 0; idx < g.count(); ++idx) {
        const PointState p = point_state(cur, idx);
        const double rho = g.density(idx);
        const double head =
            0.5 * rho * dot(p.xdot, p.xdot) + rho * m.chi_val(p.nu, p.nudot);
        stress[idx] = eshelby_point(m, p, rho) - head * Mat3::identity();
    }
    const Field<Vec3> divStress = divergence(stress);

    Field<Vec3> out(cur.grid);
    for (int idx = 0; idx < g.count(); ++idx) {
        const PointState p = point_state(cur, idx);
        const double rho = g.density(idx);
        const Vec3 mdot =
            (1.0 / (2.0 * dt)) * (pseudo_momentum(next, idx) - pseudo_momentum(prev, idx));
        const Vec3 dXL = -rho * partial_X_e(m, p);  // explicit X-dependence of ℒ
        out[idx] = mdot - divStress[idx] - dXL;
    }
    return out;
}

}  // namespace cbmech
