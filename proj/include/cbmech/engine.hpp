#pragma once

// Energy minimization over manifold-valued fields, semi-implicit time
// integration of the coupled Euler-Lagrange system, the manufactured-solution
// factory feeding the residual tests, and log-log refinement studies.

#include <array>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "interface.hpp"

namespace cbmech {

struct FaceBC {
    int axis = 0;
    int side = 0;  // 0 = low face, 1 = high face
    bool fix_x = false;
    bool fix_nu = false;
};

enum class StepRule { fixed, backtracking };

struct SolveOptions {
    int max_iterations = 200000;
    double gtol = 1e-8;          // on the lumped EL residual density
    StepRule step = StepRule::backtracking;
    double step0 = 1.0;
    double shrink = 0.5;         // backtracking factor
    double armijo = 1e-4;        // sufficient-decrease coefficient
    int max_backtrack = 60;
    std::vector<FaceBC> bcs;
    int log_every = 0;           // 0 = only first/last
};

namespace detail {

inline bool on_face(const BodyGrid& g, int idx, const FaceBC& bc) {
    int c[3];
    g.unpack(idx, c[0], c[1], c[2]);
    if (!g.active(bc.axis)) return false;
    return bc.side == 0 ? c[bc.axis] == 0 : c[bc.axis] == g.n[bc.axis] - 1;
}

struct FixedMasks {
    std::vector<char> x, nu;
};

inline FixedMasks fixed_masks(const BodyGrid& g, const std::vector<FaceBC>& bcs) {
    FixedMasks m;
    m.x.assign(static_cast<std::size_t>(g.count()), 0);
    m.nu.assign(static_cast<std::size_t>(g.count()), 0);
    for (const FaceBC& bc : bcs) {
        if (bc.axis < 0 || bc.axis > 2)
            throw ValidationError("boundary condition: axis out of range");
        for (int idx = 0; idx < g.count(); ++idx)
            if (on_face(g, idx, bc)) {
                if (bc.fix_x) m.x[idx] = 1;
                if (bc.fix_nu) m.nu[idx] = 1;
            }
    }
    return m;
}

// One-point-quadrature cell energy on the lattice: each cell spans the 2^d
// corner nodes over the active axes; cell gradients are corner averages of
// forward differences, which kills the odd-even null mode a central-difference
// nodal energy would admit.
struct CellRule {
    std::vector<int> corner_offsets;     // index offsets of the 2^d corners
    std::vector<std::array<double, 3>> corner_slopes;  // per-corner ∂ weights
    double volume = 0.0;                 // cell volume incl. passive extents
    int corners = 1;
};

inline CellRule cell_rule(const BodyGrid& g) {
    CellRule r;
    int d = 0;
    r.volume = 1.0;
    int stride[3] = {1, g.n[0], g.n[0] * g.n[1]};
    std::vector<int> act;
    for (int a = 0; a < 3; ++a) {
        if (g.active(a)) {
            ++d;
            act.push_back(a);
            r.volume *= g.h[a];
        } else {
            r.volume *= g.hi[a] - g.lo[a];
        }
    }
    r.corners = 1 << d;
    const double share = 1.0 / (1 << (d > 0 ? d - 1 : 0));
    for (int c = 0; c < r.corners; ++c) {
        int off = 0;
        std::array<double, 3> slope{0.0, 0.0, 0.0};
        for (int b = 0; b < d; ++b) {
            const int a = act[static_cast<std::size_t>(b)];
            const int bit = (c >> b) & 1;
            off += bit * stride[a];
            slope[static_cast<std::size_t>(a)] = (bit ? 1.0 : -1.0) * share / g.h[a];
        }
        r.corner_offsets.push_back(off);
        r.corner_slopes.push_back(slope);
    }
    return r;
}

// cells indexed by their low corner; passive axes contribute index 0
template <typename Fn>
inline void for_each_cell(const BodyGrid& g, Fn&& fn) {
    const int cx = g.active(0) ? g.n[0] - 1 : 1;
    const int cy = g.active(1) ? g.n[1] - 1 : 1;
    const int cz = g.active(2) ? g.n[2] - 1 : 1;
    for (int k = 0; k < cz; ++k)
        for (int j = 0; j < cy; ++j)
            for (int i = 0; i < cx; ++i) fn(g.index(i, j, k));
}

}  // namespace detail

struct MinimizeLogEntry {
    int iteration = 0;
    double energy = 0.0;
    double residual = 0.0;
};

struct MinimizeResult {
    PlacementField x;
    OrderField nu;
    double energy = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<MinimizeLogEntry> log;
};

namespace detail {

struct DiscreteEnergy {
    const BodyGrid* g = nullptr;
    const LagrangianModel* model = nullptr;
    CellRule rule;

    double energy(const std::vector<Vec3>& x, const std::vector<Vec3>& nu) const {
        double E = 0.0;
        for_each_cell(*g, [&](int base) {
            E += cell_energy(base, x, nu);
        });
        return E;
    }

    double cell_energy(int base, const std::vector<Vec3>& x,
                       const std::vector<Vec3>& nu) const {
        Vec3 xc, nc, Xc;
        Mat3 F, G;
        gather(base, x, nu, xc, nc, Xc, F, G);
        const double rho = g->density(base);
        double val = model->e ? model->e(Xc, F, nc, G) : 0.0;
        val += model->w_val(xc, nc);
        return rule.volume * rho * val;
    }

    void gather(int base, const std::vector<Vec3>& x, const std::vector<Vec3>& nu,
                Vec3& xc, Vec3& nc, Vec3& Xc, Mat3& F, Mat3& G) const {
        const std::size_t n = static_cast<std::size_t>(rule.corners);
        xc = Vec3{};
        nc = Vec3{};
        Xc = Vec3{};
        F = Mat3{};
        G = Mat3{};
        for (std::size_t c = 0; c < n; ++c) {
            const int idx = base + rule.corner_offsets[c];
            const Vec3 xv = x[static_cast<std::size_t>(idx)];
            const Vec3 nv = nu[static_cast<std::size_t>(idx)];
            const Vec3 Xv = g->point(idx);
            xc += (1.0 / static_cast<double>(n)) * xv;
            nc += (1.0 / static_cast<double>(n)) * nv;
            Xc += (1.0 / static_cast<double>(n)) * Xv;
            for (int a = 0; a < 3; ++a) {
                const double s = rule.corner_slopes[c][static_cast<std::size_t>(a)];
                if (s == 0.0) continue;
                for (int i = 0; i < 3; ++i) {
                    F(i, a) += s * xv.v[i];
                    G(i, a) += s * nv.v[i];
                }
            }
        }
        // passive columns of F carry the identity so cell energies see a
        // full-rank deformation gradient
        for (int a = 0; a < 3; ++a)
            if (!g->active(a)) F(a, a) = 1.0;
    }

    // accumulate ∂E/∂x_node and ∂E/∂ν_node by the cell chain rule
    void gradient(const std::vector<Vec3>& x, const std::vector<Vec3>& nu,
                  std::vector<Vec3>& gx, std::vector<Vec3>& gnu) const {
        gx.assign(x.size(), Vec3{});
        gnu.assign(nu.size(), Vec3{});
        const std::size_t n = static_cast<std::size_t>(rule.corners);
        for_each_cell(*g, [&](int base) {
            Vec3 xc, nc, Xc;
            Mat3 F, G;
            gather(base, x, nu, xc, nc, Xc, F, G);
            const double rho = g->density(base);
            const double wgt = rule.volume * rho;
            PointState p;
            p.X = Xc;
            p.x = xc;
            p.F = F;
            p.nu = nc;
            p.gradnu = G;
            const Mat3 dF = partial_F_e(*model, p);
            const Mat3 dG = partial_gradnu_e(*model, p);
            const Vec3 dn = partial_nu_e(*model, p);
            const Vec3 dwx = partial_x_w(*model, xc, nc);
            const Vec3 dwn = partial_nu_w(*model, xc, nc);
            for (std::size_t c = 0; c < n; ++c) {
                const std::size_t idx =
                    static_cast<std::size_t>(base + rule.corner_offsets[c]);
                const double share = 1.0 / static_cast<double>(n);
                gx[idx] += wgt * share * dwx;
                gnu[idx] += wgt * share * (dn + dwn);
                for (int a = 0; a < 3; ++a) {
                    const double s = rule.corner_slopes[c][static_cast<std::size_t>(a)];
                    if (s == 0.0) continue;
                    for (int i = 0; i < 3; ++i) {
                        gx[idx].v[i] += wgt * s * dF(i, a);
                        gnu[idx].v[i] += wgt * s * dG(i, a);
                    }
                }
            }
        });
    }
};

}  // namespace detail

// Projected/chart gradient descent on ∫ρ₀(e + w) with retraction onto M.
// Accepted iterates have nonincreasing energy; termination on the lumped
// discrete EL residual density.
inline MinimizeResult minimize_energy(const GridPtr& grid, const LagrangianModel& model,
                                      PlacementField x0, OrderField nu0,
                                      const SolveOptions& opt = {}) {
    require_same_grid(grid, x0.vals.grid, "minimize_energy");
    require_same_grid(grid, nu0.vals.grid, "minimize_energy");
    if (!(opt.gtol > 0.0) || !(opt.step0 > 0.0) || opt.shrink <= 0.0 ||
        opt.shrink >= 1.0 || opt.armijo <= 0.0 || opt.armijo >= 1.0)
        throw ValidationError("minimize_energy: options out of range");
    nu0.validate();
    const BodyGrid& g = *grid;
    const ManifoldModel& M = *model.M;
    detail::DiscreteEnergy E{&g, &model, detail::cell_rule(g)};
    const detail::FixedMasks fixed = detail::fixed_masks(g, opt.bcs);

    // lumped node volumes normalize gradients into residual densities
    std::vector<double> lump(static_cast<std::size_t>(g.count()), 0.0);
    detail::for_each_cell(g, [&](int base) {
        for (int off : E.rule.corner_offsets)
            lump[static_cast<std::size_t>(base + off)] +=
                E.rule.volume / static_cast<double>(E.rule.corners);
    });

    std::vector<Vec3> x = x0.vals.v, nu = nu0.vals.v;
    std::vector<Vec3> gx, gnu;
    auto retract = [&](const Vec3& base, const Vec3& stepv) {
        Vec3 cand = base + stepv;
        if (M.retract) return M.retract(cand);
        if (M.wrap_increments)
            for (int c = 0; c < M.dim; ++c) cand.v[c] = wrap_angle(cand.v[c]);
        return cand;
    };

    MinimizeResult res;
    double energy = E.energy(x, nu);
    double alpha = opt.step0;
    // Barzilai-Borwein history: accepted displacement s and previous gradient
    std::vector<Vec3> sx, snu, gx_prev, gnu_prev;
    bool have_history = false;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        E.gradient(x, nu, gx, gnu);
        double rmax = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i) {
            if (fixed.x[i]) gx[i] = Vec3{};
            if (fixed.nu[i])
                gnu[i] = Vec3{};
            else if (M.tangent_project)
                gnu[i] = M.tangent_project(nu[i], gnu[i]);
            const double w = lump[i];
            const double rn = std::max(norm(gx[i]), norm(gnu[i])) / w;
            if (!std::isfinite(rn))
                throw NumericalError(
                    "minimize_energy: gradient overflow, energy unbounded below?");
            rmax = std::max(rmax, rn);
        }
        res.residual = rmax;
        if (opt.log_every > 0 && it % opt.log_every == 0)
            res.log.push_back({it, energy, rmax});
        if (rmax < opt.gtol) {
            res.converged = true;
            break;
        }

        double g2 = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i)
            g2 += dot(gx[i], gx[i]) + dot(gnu[i], gnu[i]);

        // trial step: spectral (s·s)/(s·y) estimate when the history is
        // usable, otherwise the grown-back value; backtracking keeps the
        // energy monotone either way
        if (opt.step == StepRule::backtracking && have_history) {
            double ss = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < nu.size(); ++i) {
                ss += dot(sx[i], sx[i]) + dot(snu[i], snu[i]);
                sy += dot(sx[i], gx[i] - gx_prev[i]) +
                      dot(snu[i], gnu[i] - gnu_prev[i]);
            }
            if (sy > 1e-300 && ss > 0.0) {
                const double bb = ss / sy;
                if (bb > 1e-14 && bb < 1e8) alpha = bb;
            }
        }

        bool accepted = false;
        if (opt.step == StepRule::fixed) alpha = opt.step0;
        for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
            std::vector<Vec3> xt(x.size()), nt(nu.size());
            for (std::size_t i = 0; i < nu.size(); ++i) {
                xt[i] = x[i] - alpha * gx[i];
                nt[i] = retract(nu[i], -alpha * gnu[i]);
            }
            const double Et = E.energy(xt, nt);
            // near the minimum the true decrease sinks below the rounding
            // noise of the energy sum; the allowance keeps sub-ULP jitter
            // from blocking steps while real increases still fail the test
            const double slack = 16.0 * std::numeric_limits<double>::epsilon() *
                                 (std::abs(energy) + std::abs(Et) + 1.0);
            const bool ok =
                std::isfinite(Et) &&
                (opt.step == StepRule::fixed
                     ? Et <= energy + slack
                     : Et <= energy - opt.armijo * alpha * g2 + slack);
            if (ok) {
                sx.resize(x.size());
                snu.resize(nu.size());
                for (std::size_t i = 0; i < nu.size(); ++i) {
                    sx[i] = xt[i] - x[i];
                    snu[i] = nt[i] - nu[i];
                }
                gx_prev = gx;
                gnu_prev = gnu;
                have_history = true;
                x.swap(xt);
                nu.swap(nt);
                energy = Et;
                accepted = true;
                break;
            }
            if (opt.step == StepRule::fixed) break;
            alpha *= opt.shrink;
        }
        if (!accepted)
            throw NumericalError(
                "minimize_energy: stagnation, no decrease after backtracking "
                "(iteration " + std::to_string(it) + ", residual " +
                std::to_string(rmax) + ")");
        if (opt.step == StepRule::backtracking) alpha /= opt.shrink;  // grow back
    }
    if (it >= opt.max_iterations)
        throw NumericalError("minimize_energy: max iterations without convergence");
    res.x.vals = Field<Vec3>(grid);
    res.x.vals.v = std::move(x);
    res.nu.M = nu0.M;
    res.nu.vals = Field<Vec3>(grid);
    res.nu.vals.v = std::move(nu);
    res.energy = energy;
    res.iterations = it;
    res.log.push_back({it, energy, res.residual});
    return res;
}

// ---- time integration ------------------------------------------------------

struct Trajectory {
    std::vector<MotionState> states;
    double dt = 0.0;
};

inline double total_energy(const MotionState& s, const LagrangianModel& m) {
    const BodyGrid& g = *s.grid;
    return integrate(g, [&](std::size_t idx) {
        const PointState p = point_state(s, static_cast<int>(idx));
        const double rho = g.density(static_cast<int>(idx));
        return rho * (0.5 * dot(p.xdot, p.xdot) + m.chi_val(p.nu, p.nudot) +
                      m.e_val(p) + m.w_val(p.x, p.nu));
    });
}

struct IntegrateOptions {
    std::vector<FaceBC> bcs;
    double blowup_factor = 10.0;
    int store_every = 1;
};

namespace detail {

// ρẍ = b + Div P;  ρ(Aν̈ + Bν̇) = ρ∂_νχ − z + β + Div 𝒮
inline void accelerations(const MotionState& s, const LagrangianModel& model,
                          Field<Vec3>& ax, Field<Vec3>& an) {
    const BodyGrid& g = *s.grid;
    const ResponseFields resp = bulk_responses(s, model);
    const Field<Vec3> divP = divergence(resp.P);
    const Field<Vec3> divS = divergence(resp.S);
    for (int idx = 0; idx < g.count(); ++idx) {
        const double rho = g.density(idx);
        const PointState p = point_state(s, idx);
        ax[idx] = (resp.b[idx] + divP[idx]) / rho;
        Vec3 rhs = partial_nu_chi(model, p.nu, p.nudot) +
                   (resp.beta[idx] - resp.z[idx] + divS[idx]) / rho;
        Vec3 nacc{};
        if (model.chi) {
            // B ν̇ by a directional difference of ∂_ν̇χ in ν along ν̇
            const double h = std::sqrt(model.h_d);
            const Vec3 dp = partial_nudot_chi(model, p.nu + h * p.nudot, p.nudot);
            const Vec3 dm = partial_nudot_chi(model, p.nu - h * p.nudot, p.nudot);
            rhs -= (dp - dm) / (2.0 * h);
            const Mat3 A = substructural_mass(model, p.nu, p.nudot);
            try {
                nacc = solve_block(A, rhs, model.nu_comp);
            } catch (const std::runtime_error&) {
                throw ValidationError(
                    "integrate_motion: singular substructural mass ∂²χ/∂ν̇²");
            }
        }
        an[idx] = nacc;
    }
}

}  // namespace detail

// Semi-implicit (symplectic-Euler-type) stepping: rates first from the
// current responses, then positions from the updated rates. Order parameters
// advance in unwrapped chart coordinates (S¹ angles are not reduced mod 2π
// along a trajectory, which keeps ν̇ and the stencils finite across the seam).
inline Trajectory integrate_motion(const GridPtr& grid, const LagrangianModel& model,
                                   const MotionState& init, double dt, double T,
                                   const IntegrateOptions& opt = {}) {
    require_same_grid(grid, init.grid, "integrate_motion");
    if (!(dt > 0.0) || !(T > 0.0))
        throw ValidationError("integrate_motion: need dt > 0 and T > 0");
    const int steps = static_cast<int>(std::lround(T / dt));
    const BodyGrid& g = *grid;
    const ManifoldModel& M = *model.M;
    const detail::FixedMasks fixed = detail::fixed_masks(g, opt.bcs);

    Trajectory traj;
    traj.dt = dt;
    MotionState cur = init;
    const double E0 = total_energy(cur, model);
    const double Eref = std::max(std::abs(E0), 1e-12);
    traj.states.push_back(cur);

    Field<Vec3> x(grid), xdot(grid), nu(grid), nudot(grid);
    Field<Vec3> ax(grid), an(grid);
    for (int n = 0; n < steps; ++n) {
        detail::accelerations(cur, model, ax, an);
        for (int idx = 0; idx < g.count(); ++idx) {
            if (fixed.x[static_cast<std::size_t>(idx)]) {
                xdot[idx] = Vec3{};
                x[idx] = cur.x[idx];
            } else {
                xdot[idx] = cur.xdot[idx] + dt * ax[idx];
                x[idx] = cur.x[idx] + dt * xdot[idx];
            }
            if (fixed.nu[static_cast<std::size_t>(idx)]) {
                nudot[idx] = Vec3{};
                nu[idx] = cur.nu[idx];
            } else {
                nudot[idx] = cur.nudot[idx] + dt * an[idx];
                Vec3 cand = cur.nu[idx] + dt * nudot[idx];
                if (M.retract) {
                    cand = M.retract(cand);
                    if (M.tangent_project)
                        nudot[idx] = M.tangent_project(cand, nudot[idx]);
                }
                nu[idx] = cand;
            }
        }
        cur = make_motion_state(grid, cur.M, x, xdot, nu, nudot,
                                init.t + (n + 1) * dt);
        const double E = total_energy(cur, model);
        if (!std::isfinite(E) || std::abs(E) > opt.blowup_factor * Eref + 1e-9)
            throw NumericalError("integrate_motion: instability, energy grew from " +
                                 std::to_string(E0) + " to " + std::to_string(E) +
                                 " at step " + std::to_string(n + 1));
        if ((n + 1) % opt.store_every == 0 || n + 1 == steps)
            traj.states.push_back(cur);
    }
    return traj;
}

// ---- manufactured solutions ------------------------------------------------

struct ManufacturedCase {
    std::string tag;
    ManifoldPtr M;
    GridPtr default_grid;
    LagrangianModel model;
    // exact jets sampled on a grid (nodal values; F and ∇ν by stencils)
    std::function<MotionState(const GridPtr&, double)> state;
    // rigid-rotation twin builder (covariance tests)
    std::function<MotionState(const MotionState&)> transform;
    std::shared_ptr<const InterfaceModel> surface;
    std::shared_ptr<const TwoPhaseState> two_phase;
    std::shared_ptr<const SurfaceEnergyModel> surface_energy;
    double U = 0.0;  // prescribed normal speed of Σ
    std::map<std::string, double> reference;
};

// ---- refinement studies ----------------------------------------------------

struct RefinementRow {
    double h = 0.0;
    double dt = 0.0;
    double norm = 0.0;
};

struct RefinementReport {
    std::vector<RefinementRow> rows;
    LineFit fit;      // log‖r‖ against log h
    double order = 0.0;
    bool monotone = true;  // false flags the order estimate as indeterminate
};

inline RefinementReport refinement_study(
    const std::vector<std::pair<double, double>>& levels,
    const std::function<double(double h, double dt)>& norm_fn) {
    if (levels.size() < 3)
        throw ValidationError("refinement_study: need at least 3 levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i].first < levels[i - 1].first))
            throw ValidationError("refinement_study: levels must refine monotonically");
    RefinementReport rep;
    std::vector<double> hs, norms;
    for (const auto& [h, dt] : levels) {
        const double v = norm_fn(h, dt);
        rep.rows.push_back({h, dt, v});
        hs.push_back(h);
        norms.push_back(v);
    }
    for (std::size_t i = 1; i < norms.size(); ++i)
        if (!(norms[i] < norms[i - 1])) rep.monotone = false;
    rep.fit = fit_order(hs, norms);
    rep.order = rep.fit.slope;
    return rep;
}

// ---- manufactured-solution factory -----------------------------------------

namespace detail {

inline ManufacturedCase make_bulk_smooth() {
    ManufacturedCase c;
    c.tag = "bulk-smooth";
    c.M = std::make_shared<const ManifoldModel>(euclidean(1));
    const double kx = M_PI, ky = M_PI;
    const double k2 = kx * kx + ky * ky;
    const double a = 0.05, omega = 1.3;
    const double A = 0.07, omega_nu = 0.9;

    LagrangianModel m;
    m.M = c.M;
    m.nu_comp = 1;
    m.chi = [](const Vec3&, const Vec3& nd) { return 0.5 * dot(nd, nd); };
    m.dchi_dnudot = [](const Vec3&, const Vec3& nd) { return nd; };
    m.dchi_dnu = [](const Vec3&, const Vec3&) { return Vec3{}; };
    m.e = [](const Vec3&, const Mat3& F, const Vec3& nu, const Mat3& G) {
        return 0.5 * (frobenius(F) * frobenius(F) + frobenius(G) * frobenius(G) +
                      dot(nu, nu));
    };
    m.de_dF = [](const Vec3&, const Mat3& F, const Vec3&, const Mat3&) { return F; };
    m.de_dgradnu = [](const Vec3&, const Mat3&, const Vec3&, const Mat3& G) {
        return G;
    };
    m.de_dnu = [](const Vec3&, const Mat3&, const Vec3& nu, const Mat3&) {
        return nu;
    };
    m.de_dX = [](const Vec3&, const Mat3&, const Vec3&, const Mat3&) { return Vec3{}; };
    // compensating sources from exact substitution:
    //   ρẍ = b + Δx           ⟹ b = ρ a sin(k·X)cos(ωt)(k² − ω²) e₁
    //   ρν̈ = −ρν + β + ρΔν  ⟹ β = ρν (1 + k² − ω̄²)
    m.b_src = [=](const Vec3& X, double t) {
        const double s = std::sin(kx * X.v[0] + ky * X.v[1]);
        return Vec3{a * s * std::cos(omega * t) * (k2 - omega * omega), 0.0, 0.0};
    };
    m.beta_src = [=](const Vec3& X, double t) {
        const double nu = A * std::cos(kx * X.v[0] + ky * X.v[1]) *
                          std::cos(omega_nu * t);
        return Vec3{nu * (1.0 + k2 - omega_nu * omega_nu), 0.0, 0.0};
    };
    m.linear_manifold = true;
    c.model = m;

    c.state = [=](const GridPtr& g, double t) {
        Field<Vec3> x(g), xd(g), nu(g), nd(g);
        for (int idx = 0; idx < g->count(); ++idx) {
            const Vec3 X = g->point(idx);
            const double ph = kx * X.v[0] + ky * X.v[1];
            x[idx] = X + Vec3{a * std::sin(ph) * std::cos(omega * t), 0.0, 0.0};
            xd[idx] = Vec3{-a * omega * std::sin(ph) * std::sin(omega * t), 0.0, 0.0};
            nu[idx] = Vec3{A * std::cos(ph) * std::cos(omega_nu * t), 0.0, 0.0};
            nd[idx] =
                Vec3{-A * omega_nu * std::cos(ph) * std::sin(omega_nu * t), 0.0, 0.0};
        }
        return make_motion_state(g, c.M, x, xd, nu, nd, t);
    };
    {
        const int n[3] = {17, 17, 1};
        const double lo[3] = {0.0, 0.0, 0.0}, hi[3] = {1.0, 1.0, 1.0};
        c.default_grid = make_grid(lo, hi, n);
    }
    return c;
}

inline ManufacturedCase make_two_phase_bar() {
    // Plane interface at X₁ = 0 with normal speed U; all parameters dyadic so
    // the closed-form jump system below is satisfied to rounding.
    //   μ = κ = U², [ẋ] = −U[F]m, [ν̇] = −U[∂₁ν], Δn = 2ν̇₋/U
    ManufacturedCase c;
    c.tag = "two-phase-bar";
    c.M = std::make_shared<const ManifoldModel>(euclidean(1));
    const double U = 0.5, mu = 0.25, kappa = 0.25;
    const double ds = 0.3;        // [F]m · e₁
    const double gminus = 0.1;    // ν̇ on the minus side
    const double dn = 2.0 * gminus / U;  // = 0.4, closes the configurational balance
    const double nu_c = 0.2;

    LagrangianModel m;
    m.M = c.M;
    m.nu_comp = 1;
    m.linear_manifold = true;
    m.chi = [](const Vec3&, const Vec3& nd) { return 0.5 * dot(nd, nd); };
    m.dchi_dnudot = [](const Vec3&, const Vec3& nd) { return nd; };
    m.dchi_dnu = [](const Vec3&, const Vec3&) { return Vec3{}; };
    m.e = [=](const Vec3&, const Mat3& F, const Vec3&, const Mat3& G) {
        const Mat3 dF = F - Mat3::identity();
        return 0.5 * mu * frobenius(dF) * frobenius(dF) +
               0.5 * kappa * frobenius(G) * frobenius(G);
    };
    m.de_dF = [=](const Vec3&, const Mat3& F, const Vec3&, const Mat3&) {
        return mu * (F - Mat3::identity());
    };
    m.de_dgradnu = [=](const Vec3&, const Mat3&, const Vec3&, const Mat3& G) {
        return kappa * G;
    };
    m.de_dnu = [](const Vec3&, const Mat3&, const Vec3&, const Mat3&) {
        return Vec3{};
    };
    m.de_dX = [](const Vec3&, const Mat3&, const Vec3&, const Mat3&) { return Vec3{}; };
    c.model = m;
    c.U = U;

    auto surface = std::make_shared<InterfaceModel>(
        plane_interface(Vec3{1.0, 0.0, 0.0}, Vec3{}));
    c.surface = surface;

    auto tp = std::make_shared<TwoPhaseState>();
    tp->M = c.M;
    tp->rho0 = 1.0;
    tp->jet = [=](const Vec3& Y, Side side) {
        PointState p;
        p.X = Y;
        const bool plus = side == Side::plus;
        p.F = Mat3::identity();
        if (plus) p.F(0, 0) += ds;
        p.x = Y;
        if (plus) p.x.v[0] += ds * Y.v[0];
        p.xdot = plus ? Vec3{-U * ds, 0.0, 0.0} : Vec3{};
        const double slope = plus ? dn : 0.0;
        p.nu = Vec3{nu_c + slope * Y.v[0], 0.0, 0.0};
        p.nudot = Vec3{plus ? gminus - U * dn : gminus, 0.0, 0.0};
        p.gradnu = Mat3{};
        p.gradnu(0, 0) = slope;
        return p;
    };
    c.two_phase = tp;
    c.reference["ds"] = ds;
    c.reference["dn"] = dn;
    c.reference["U"] = U;
    c.reference["mu"] = mu;
    return c;
}

inline ManufacturedCase make_structured_sphere() {
    // Radial director on a unit sphere with constant surface tension σ; the
    // explicit-X jumps in (μ, κ, c) make [P]m = 0, R_sub = 0 exactly while
    // m·[ℙ]m = ρ([c] + [κ]/R² − ½p[b]) closes to 2σ/R.
    ManufacturedCase c;
    c.tag = "structured-sphere";
    c.M = std::make_shared<const ManifoldModel>(sphere_embedded());
    const double R = 1.0, sigma = 0.1, rho = 1.0;
    const double mu_minus = 0.25, mu_plus = 0.5;
    const double b_minus = 0.2;
    const double b_plus = mu_minus * b_minus / mu_plus;  // p = μ₊b₊ = μ₋b₋
    const double p = mu_minus * b_minus;
    const double kappa_minus = 0.3, kappa_plus = 0.2;
    const double c_minus = 0.05;
    const double c_plus = c_minus + 2.0 * sigma / (rho * R) +
                          0.5 * p * (b_plus - b_minus) -
                          (kappa_plus - kappa_minus) / (R * R);

    auto side_of = [=](const Vec3& X) { return norm(X) >= R ? 1 : 0; };
    auto mu_at = [=](const Vec3& X) { return side_of(X) ? mu_plus : mu_minus; };
    auto kappa_at = [=](const Vec3& X) { return side_of(X) ? kappa_plus : kappa_minus; };
    auto c_at = [=](const Vec3& X) { return side_of(X) ? c_plus : c_minus; };

    LagrangianModel m;
    m.M = c.M;
    m.nu_comp = 3;
    m.chi = [](const Vec3&, const Vec3& nd) { return 0.5 * dot(nd, nd); };
    m.dchi_dnudot = [](const Vec3&, const Vec3& nd) { return nd; };
    m.dchi_dnu = [](const Vec3&, const Vec3&) { return Vec3{}; };
    m.e = [=](const Vec3& X, const Mat3& F, const Vec3&, const Mat3& G) {
        const Mat3 dF = F - Mat3::identity();
        return 0.5 * mu_at(X) * frobenius(dF) * frobenius(dF) +
               0.5 * kappa_at(X) * frobenius(G) * frobenius(G) + c_at(X);
    };
    m.de_dF = [=](const Vec3& X, const Mat3& F, const Vec3&, const Mat3&) {
        return mu_at(X) * (F - Mat3::identity());
    };
    m.de_dgradnu = [=](const Vec3& X, const Mat3&, const Vec3&, const Mat3& G) {
        return kappa_at(X) * G;
    };
    m.de_dnu = [](const Vec3&, const Mat3&, const Vec3&, const Mat3&) {
        return Vec3{};
    };
    m.de_dX = [](const Vec3&, const Mat3&, const Vec3&, const Mat3&) { return Vec3{}; };
    c.model = m;
    c.U = 0.0;

    auto surface = std::make_shared<InterfaceModel>(sphere_interface(Vec3{}, R));
    c.surface = surface;

    auto tp = std::make_shared<TwoPhaseState>();
    tp->M = c.M;
    tp->rho0 = rho;
    tp->jet = [=](const Vec3& Y, Side side) {
        const double r = norm(Y);
        const Vec3 mr = Y / r;
        const bool plus = side == Side::plus;
        PointState p;
        p.X = Y;
        p.x = Y;
        p.xdot = Vec3{};
        const double b = plus ? b_plus : b_minus;
        p.F = Mat3::identity() + b * outer(mr, mr);
        p.nu = mr;
        p.nudot = Vec3{};
        p.gradnu = (1.0 / r) * (Mat3::identity() - outer(mr, mr));
        return p;
    };
    c.two_phase = tp;

    auto sm = std::make_shared<SurfaceEnergyModel>();
    sm->nu_comp = 3;
    sm->phi = [=](const Vec3&, const Mat3&, const Vec3&, const Mat3&) { return sigma; };
    c.surface_energy = sm;
    c.reference["sigma"] = sigma;
    c.reference["R"] = R;
    c.reference["mPm"] = 2.0 * sigma / R;
    return c;
}

inline ManufacturedCase make_rigid_rotation() {
    // Smooth S²-valued base state and its rigidly rotated twin; the model is
    // frame-indifferent, so every balance residual is equivariant.
    ManufacturedCase c;
    c.tag = "rigid-rotation";
    c.M = std::make_shared<const ManifoldModel>(sphere_embedded());
    const Vec3 axis{0.3, -0.5, 0.8};
    const double angle = 0.7;
    const Mat3 R = rotation(angle * normalized(axis));

    LagrangianModel m;
    m.M = c.M;
    m.nu_comp = 3;
    m.chi = [](const Vec3&, const Vec3& nd) { return 0.5 * dot(nd, nd); };
    m.dchi_dnudot = [](const Vec3&, const Vec3& nd) { return nd; };
    m.dchi_dnu = [](const Vec3&, const Vec3&) { return Vec3{}; };
    m.e = [](const Vec3&, const Mat3& F, const Vec3& nu, const Mat3& G) {
        const Vec3 Fn = transpose(F) * nu;
        return 0.5 * frobenius(F) * frobenius(F) + 0.5 * dot(Fn, Fn) +
               0.5 * frobenius(G) * frobenius(G);
    };
    c.model = m;

    c.state = [Mm = c.M](const GridPtr& g, double t) {
        Field<Vec3> x(g), xd(g), nu(g), nd(g);
        for (int idx = 0; idx < g->count(); ++idx) {
            const Vec3 X = g->point(idx);
            const double p1 = M_PI * X.v[0] + 0.5 * t;
            const double p2 = M_PI * X.v[1] - 0.3 * t;
            x[idx] = X + 0.04 * Vec3{std::sin(p1), std::cos(p2), std::sin(p1 + p2)};
            xd[idx] = 0.04 * Vec3{0.5 * std::cos(p1), 0.3 * std::sin(p2),
                                  0.2 * std::cos(p1 + p2)};
            const Vec3 raw{0.2 * std::sin(p1), 0.3 * std::cos(p2), 1.0};
            nu[idx] = normalized(raw);
            const Vec3 u{0.1 * std::cos(p2), -0.2 * std::sin(p1), 0.05};
            nd[idx] = Mm->tangent_project(nu[idx], u);
        }
        return make_motion_state(g, Mm, x, xd, nu, nd, t);
    };
    c.transform = [R, Mm = c.M](const MotionState& s) {
        Field<Vec3> x(s.grid), xd(s.grid), nu(s.grid), nd(s.grid);
        for (int idx = 0; idx < s.grid->count(); ++idx) {
            x[idx] = R * s.x[idx];
            xd[idx] = R * s.xdot[idx];
            nu[idx] = R * s.nu[idx];
            nd[idx] = R * s.nudot[idx];
        }
        return make_motion_state(s.grid, Mm, x, xd, nu, nd, s.t);
    };
    {
        const int n[3] = {9, 9, 9};
        const double lo[3] = {0.0, 0.0, 0.0}, hi[3] = {1.0, 1.0, 1.0};
        c.default_grid = make_grid(lo, hi, n);
    }
    return c;
}

}  // namespace detail

inline ManufacturedCase manufactured_solution(const std::string& tag) {
    if (tag == "bulk-smooth") return detail::make_bulk_smooth();
    if (tag == "two-phase-bar") return detail::make_two_phase_bar();
    if (tag == "structured-sphere") return detail::make_structured_sphere();
    if (tag == "rigid-rotation") return detail::make_rigid_rotation();
    throw ValidationError("manufactured_solution: unknown case '" + tag +
                          "' (bulk-smooth, two-phase-bar, structured-sphere, "
                          "rigid-rotation)");
}

}  // namespace cbmech
