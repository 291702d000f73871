#pragma once

// Placement and order-parameter fields over a BodyGrid, their stencil
// gradients and rates, strain measures, the microcrack decomposition of
// placements composed with a piecewise-smooth map, and observer changes.

#include <functional>
#include <string>

#include "grid.hpp"
#include "manifold.hpp"

namespace cbmech {

using ManifoldPtr = std::shared_ptr<const ManifoldModel>;

inline ManifoldPtr share(ManifoldModel m) {
    return std::make_shared<const ManifoldModel>(std::move(m));
}

struct PlacementField {
    Field<Vec3> vals;
};

struct OrderField {
    ManifoldPtr M;
    Field<Vec3> vals;

    void validate() const {
        for (const Vec3& p : vals.v) M->validate(p);
    }
};

inline void require_same_manifold(const ManifoldPtr& a, const ManifoldPtr& b,
                                  const char* what) {
    if (a.get() == b.get()) return;
    if (!a || !b || a->tag != b->tag || a->rep != b->rep)
        throw ValidationError(std::string(what) + ": fields on different manifolds");
}

// Deformation gradient by the registered stencils. On reduced bodies the
// passive columns are padded with identity (trivial extension along the
// homogeneous axes) so that det F is meaningful.
inline Field<Mat3> deformation_gradient(const PlacementField& p) {
    const BodyGrid& g = *p.vals.grid;
    for (int a = 0; a < 3; ++a)
        if (g.active(a) && g.n[a] < 3)
            throw ValidationError("deformation_gradient: active axes need >= 3 nodes");
    Field<Mat3> F = gradient_field(p.vals, 3);
    for (int idx = 0; idx < g.count(); ++idx) {
        for (int a = 0; a < 3; ++a)
            if (!g.active(a))
                for (int c = 0; c < 3; ++c) F[idx](c, a) = (c == a) ? 1.0 : 0.0;
        const double J = det(F[idx]);
        if (!(J > 0.0)) {
            int i, j, k;
            g.unpack(idx, i, j, k);
            throw ValidationError("deformation_gradient: det F <= 0 at node (" +
                                  std::to_string(i) + "," + std::to_string(j) + "," +
                                  std::to_string(k) + ")");
        }
    }
    return F;
}

struct StrainMeasures {
    Mat3 C;  // F^T g F
    Mat3 E;  // ½(C − γ)
};

inline StrainMeasures strain_measures(const Mat3& F, const Mat3& g_spatial,
                                      const Mat3& gamma) {
    StrainMeasures s;
    s.C = transpose(F) * g_spatial * F;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(s.C(i, j) - s.C(j, i)) > 1e-12 * (1.0 + std::abs(s.C(i, j))))
                throw NumericalError("strain_measures: C lost symmetry");
    s.E = 0.5 * (s.C - gamma);
    return s;
}

inline std::pair<Field<Mat3>, Field<Mat3>> strain_measures(
    const Field<Mat3>& F, const Mat3& g_spatial = Mat3::identity()) {
    Field<Mat3> C(F.grid), E(F.grid);
    for (int idx = 0; idx < F.size(); ++idx) {
        const StrainMeasures s = strain_measures(F[idx], g_spatial, F.grid->gamma(idx));
        C[idx] = s.C;
        E[idx] = s.E;
    }
    return {C, E};
}

// Model-supplied generalized material metric G; returns (G, Ē = ½(G−γ))
// after checking symmetry and positive definiteness.
inline std::pair<Mat3, Mat3> generalized_metric(
    const Mat3& F, const Mat3& g_spatial, const Vec3& nu, const Mat3& gradnu,
    const Mat3& gamma,
    const std::function<Mat3(const Mat3&, const Mat3&, const Vec3&, const Mat3&)>& hook) {
    const Mat3 G = hook(F, g_spatial, nu, gradnu);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(G(i, j) - G(j, i)) > 1e-12 * (1.0 + std::abs(G(i, j))))
                throw ValidationError("generalized_metric: hook output not symmetric");
    if (!spd_block(G, 3, 1e-9))
        throw ValidationError("generalized_metric: hook output not positive definite");
    return {G, 0.5 * (G - gamma)};
}

struct MotionState {
    double t = 0.0;
    GridPtr grid;
    ManifoldPtr M;
    Field<Vec3> x, xdot, nu, nudot;
    Field<Mat3> F, gradnu;  // derived via the registered stencils
};

inline MotionState make_motion_state(GridPtr grid, ManifoldPtr M, Field<Vec3> x,
                                     Field<Vec3> xdot, Field<Vec3> nu,
                                     Field<Vec3> nudot, double t = 0.0) {
    MotionState s;
    s.t = t;
    s.grid = std::move(grid);
    s.M = std::move(M);
    for (const Vec3& p : nu.v) s.M->validate(p);
    s.x = std::move(x);
    s.xdot = std::move(xdot);
    s.nu = std::move(nu);
    s.nudot = std::move(nudot);
    PlacementField pf{s.x};
    s.F = deformation_gradient(pf);
    s.gradnu = gradient_field(s.nu, s.M->rep, s.M.get());
    return s;
}

struct SpatialRates {
    Field<Vec3> v;        // ẋ
    Field<Vec3> upsilon;  // ν̇ + (∇ν) F⁻¹ v
};

inline SpatialRates spatial_rates(const MotionState& s) {
    SpatialRates r;
    r.v = s.xdot;
    r.upsilon = Field<Vec3>(s.grid);
    for (int idx = 0; idx < s.nu.size(); ++idx) {
        const Mat3 Finv = inverse(s.F[idx]);
        r.upsilon[idx] = s.nudot[idx] + s.gradnu[idx] * (Finv * s.xdot[idx]);
    }
    return r;
}

struct MicrocrackDecomposition {
    Field<Mat3> F;         // ∇x̃
    Field<Mat3> F_tot;     // ∇(𝔣 ∘ x̃) = F + ∇d
    Field<Mat3> F_micro;   // I + grad d_a, evaluated in the current placement
    Field<double> residual;  // ‖F_tot − F_micro F‖ per node (Frobenius)
};

// 𝔣 perturbs the current placement (transverse jump field across closed
// cracks); the additive and multiplicative pictures must agree at O(h²).
inline MicrocrackDecomposition microcrack_decomposition(
    const PlacementField& placement, const std::function<Vec3(const Vec3&)>& frak,
    const std::function<Mat3(const Vec3&)>& frak_jacobian = nullptr) {
    MicrocrackDecomposition out;
    out.F = deformation_gradient(placement);
    Field<Vec3> composed(placement.vals.grid);
    for (int idx = 0; idx < composed.size(); ++idx)
        composed[idx] = frak(placement.vals[idx]);
    PlacementField cf{composed};
    out.F_tot = deformation_gradient(cf);
    out.F_micro = Field<Mat3>(placement.vals.grid);
    out.residual = Field<double>(placement.vals.grid);
    for (int idx = 0; idx < composed.size(); ++idx) {
        const Vec3 xcur = placement.vals[idx];
        Mat3 Jf;
        if (frak_jacobian) {
            Jf = frak_jacobian(xcur);
        } else {
            for (int c = 0; c < 3; ++c) {
                const double h = fd_step(xcur.v[c], 1e-6);
                Vec3 p = xcur, q = xcur;
                p.v[c] += h;
                q.v[c] -= h;
                const Vec3 dcol = (frak(p) - frak(q)) / (2.0 * h);
                for (int r = 0; r < 3; ++r) Jf(r, c) = dcol.v[r];
            }
        }
        // grad d_a = J𝔣 − I in the current placement, so F^(m) = J𝔣
        out.F_micro[idx] = Jf;
        out.residual[idx] = frobenius(out.F_tot[idx] - Jf * out.F[idx]);
    }
    return out;
}

struct ObserverRates {
    Field<Vec3> xdot;   // ẋ + c + q̇ ∧ (x − x₀)
    Field<Vec3> nudot;  // ν̇ + 𝒜 q̇
};

inline ObserverRates observer_change(const MotionState& s, const Vec3& c,
                                     const Vec3& qdot, const Vec3& x0) {
    ObserverRates out;
    out.xdot = Field<Vec3>(s.grid);
    out.nudot = Field<Vec3>(s.grid);
    const bool rotating = norm(qdot) > 0.0;
    for (int idx = 0; idx < s.x.size(); ++idx) {
        out.xdot[idx] = s.xdot[idx] + c + cross(qdot, s.x[idx] - x0);
        out.nudot[idx] = rotating
                             ? s.nudot[idx] + action_generator(*s.M, "SO3", qdot, s.nu[idx])
                             : s.nudot[idx];
    }
    return out;
}

}  // namespace cbmech
