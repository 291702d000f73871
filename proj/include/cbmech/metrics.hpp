#pragma once

// Distances between manifold-valued fields: integral / compact-exhaustion /
// supremum aggregation of the pointwise geodesic metric, gradient pull-back
// distances, and the two classical incompleteness demonstrations (polynomial
// family on the real line and on the circle, unbounded-beam divergence).

#include <cmath>
#include <string>
#include <vector>

#include "kinematics.hpp"

namespace cbmech {

enum class DistanceKind { integral, compact, sup };

struct ExhaustionLevel {
    int lo[3] = {0, 0, 0};
    int hi[3] = {0, 0, 0};  // inclusive index bounds
    double weight = 0.0;
};

struct Exhaustion {
    std::vector<ExhaustionLevel> levels;

    void validate(const BodyGrid& g) const {
        if (levels.empty()) throw ValidationError("Exhaustion: no levels");
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const ExhaustionLevel& L = levels[l];
            if (!(L.weight > 0.0))
                throw ValidationError("Exhaustion: weights must be positive");
            for (int a = 0; a < 3; ++a) {
                if (L.lo[a] < 0 || L.hi[a] >= g.n[a] || L.lo[a] > L.hi[a])
                    throw ValidationError("Exhaustion: level box outside the grid");
                if (l > 0 && (L.lo[a] > levels[l - 1].lo[a] ||
                              L.hi[a] < levels[l - 1].hi[a]))
                    throw ValidationError("Exhaustion: levels must be nested");
            }
        }
    }
};

// K_n = nodes at distance ≥ diam(B₀)/2^{n+2} from the boundary, weight 2^{-n};
// identical consecutive boxes are dropped so the nesting stays strict
inline Exhaustion default_exhaustion(const BodyGrid& g, int n_levels = 10) {
    if (n_levels < 1) throw ValidationError("default_exhaustion: need ≥ 1 level");
    double diam2 = 0.0;
    for (int a = 0; a < 3; ++a) diam2 += sq(g.hi[a] - g.lo[a]);
    const double diam = std::sqrt(diam2);
    Exhaustion ex;
    for (int n = 1; n <= n_levels; ++n) {
        const double margin = diam / std::pow(2.0, n + 2);
        ExhaustionLevel L;
        L.weight = std::pow(2.0, -n);
        bool empty = false;
        for (int a = 0; a < 3; ++a) {
            if (g.active(a)) {
                const int m = static_cast<int>(std::ceil(margin / g.h[a] - 1e-12));
                L.lo[a] = m;
                L.hi[a] = g.n[a] - 1 - m;
            } else {
                // the single node sits at the midpoint of the passive extent
                if (0.5 * (g.hi[a] - g.lo[a]) < margin) empty = true;
                L.lo[a] = L.hi[a] = 0;
            }
            if (L.lo[a] > L.hi[a]) empty = true;
        }
        if (empty) continue;
        if (!ex.levels.empty()) {
            bool same = true;
            for (int a = 0; a < 3; ++a)
                same = same && ex.levels.back().lo[a] == L.lo[a] &&
                       ex.levels.back().hi[a] == L.hi[a];
            if (same) continue;
        }
        ex.levels.push_back(L);
    }
    if (ex.levels.empty())
        throw ValidationError("default_exhaustion: all levels empty for this grid");
    return ex;
}

inline double field_distance(const OrderField& f1, const OrderField& f2,
                             DistanceKind kind, DistanceMode mode = DistanceMode::raw,
                             const Exhaustion* exh = nullptr,
                             QuadRule rule = QuadRule::trapezoid) {
    require_same_grid(f1.vals.grid, f2.vals.grid, "field_distance");
    require_same_manifold(f1.M, f2.M, "field_distance");
    const BodyGrid& g = *f1.vals.grid;
    const ManifoldModel& M = *f1.M;
    auto d = [&](std::size_t i) {
        return geodesic_distance(M, f1.vals.v[i], f2.vals.v[i], mode);
    };
    switch (kind) {
        case DistanceKind::integral:
            return integrate(g, [&](std::size_t i) { return d(i); }, rule);
        case DistanceKind::sup: {
            double m = 0.0;
            for (std::size_t i = 0; i < f1.vals.v.size(); ++i)
                m = std::max(m, d(i));
            return m;
        }
        case DistanceKind::compact: {
            if (!exh)
                throw ValidationError("field_distance: compact kind needs an exhaustion");
            exh->validate(g);
            double acc = 0.0;
            for (const ExhaustionLevel& L : exh->levels) {
                double m = 0.0;
                for (int k = L.lo[2]; k <= L.hi[2]; ++k)
                    for (int j = L.lo[1]; j <= L.hi[1]; ++j)
                        for (int i = L.lo[0]; i <= L.hi[0]; ++i)
                            m = std::max(m, d(g.index(i, j, k)));
                acc += L.weight * m;
            }
            return acc;
        }
    }
    throw ValidationError("field_distance: unknown kind");
}

// pull-back (∇ν)ᵀ g_M(ν) (∇ν) per node
inline Field<Mat3> gradient_pullback(const OrderField& f) {
    const Field<Mat3> grad = gradient_field(f.vals, f.M->dim, f.M.get());
    Field<Mat3> out(f.vals.grid);
    for (std::size_t i = 0; i < f.vals.v.size(); ++i) {
        Mat3 gM = Mat3::identity();
        if (f.M->chart_metric) gM = f.M->chart_metric(f.vals.v[i]);
        out.v[i] = transpose(grad.v[i]) * (gM * grad.v[i]);
    }
    return out;
}

// aggregate of ‖pullback(f₁) − pullback(f₂)‖_F; no bounded variant, the
// pull-back lives in a linear space
inline double gradient_distance(const OrderField& f1, const OrderField& f2,
                                DistanceKind kind, const Exhaustion* exh = nullptr,
                                QuadRule rule = QuadRule::trapezoid) {
    require_same_grid(f1.vals.grid, f2.vals.grid, "gradient_distance");
    require_same_manifold(f1.M, f2.M, "gradient_distance");
    const BodyGrid& g = *f1.vals.grid;
    const Field<Mat3> p1 = gradient_pullback(f1);
    const Field<Mat3> p2 = gradient_pullback(f2);
    auto d = [&](std::size_t i) { return frobenius(p1.v[i] - p2.v[i]); };
    switch (kind) {
        case DistanceKind::integral:
            return integrate(g, [&](std::size_t i) { return d(i); }, rule);
        case DistanceKind::sup: {
            double m = 0.0;
            for (std::size_t i = 0; i < p1.v.size(); ++i) m = std::max(m, d(i));
            return m;
        }
        case DistanceKind::compact: {
            if (!exh)
                throw ValidationError("gradient_distance: compact kind needs an exhaustion");
            exh->validate(g);
            double acc = 0.0;
            for (const ExhaustionLevel& L : exh->levels) {
                double m = 0.0;
                for (int k = L.lo[2]; k <= L.hi[2]; ++k)
                    for (int j = L.lo[1]; j <= L.hi[1]; ++j)
                        for (int i = L.lo[0]; i <= L.hi[0]; ++i)
                            m = std::max(m, d(g.index(i, j, k)));
                acc += L.weight * m;
            }
            return acc;
        }
    }
    throw ValidationError("gradient_distance: unknown kind");
}

// bounded field distance plus gradient pull-back distance (the W^{1,1}-style
// combination used to compare morphologies together with their spatial trends)
inline double combined_distance(const OrderField& f1, const OrderField& f2,
                                DistanceKind kind, const Exhaustion* exh = nullptr,
                                QuadRule rule = QuadRule::trapezoid) {
    return field_distance(f1, f2, kind, DistanceMode::bounded, exh, rule) +
           gradient_distance(f1, f2, kind, exh, rule);
}

// ---- incompleteness demonstrations -----------------------------------------

struct CauchyRow {
    int n = 0, m = 0;
    double distance = 0.0;
    double bound = 0.0;  // 9(1/(n+1) − 1/(m+1))
};

struct CauchyReport {
    std::string case_name;
    std::vector<CauchyRow> rows;
    double limit_jump = 0.0;  // pointwise-limit discontinuity at X₁ = 1
    int grid_nodes = 0;
};

// f_n(X₁) = 0 on [−1,0), X₁ⁿ on [0,1), 1 on [1,2]; values read as reals or
// as angles on the circle. The X₂, X₃ directions are homogeneous, so the
// quadrature runs on the 1D-reduced grid and the cross-section contributes
// the factor 9 through the passive extents.
inline CauchyReport cauchy_separation_demo(const std::string& case_name, int n_max = 8,
                                           int nodes = 601) {
    if (n_max < 2) throw ValidationError("cauchy_separation_demo: n_max must be ≥ 2");
    if (nodes < 3 || nodes % 2 == 0)
        throw ValidationError("cauchy_separation_demo: need an odd node count ≥ 3");
    ManifoldPtr M;
    if (case_name == "real-line")
        M = std::make_shared<const ManifoldModel>(euclidean(1));
    else if (case_name == "circle")
        M = std::make_shared<const ManifoldModel>(circle());
    else
        throw ValidationError("cauchy_separation_demo: case must be real-line or circle");

    const GridPtr g = make_grid_1d(-1.0, 2.0, nodes, -1.0, 2.0);
    auto family = [&](int n) {
        OrderField f{M, Field<Vec3>(g)};
        for (int i = 0; i < g->n[0]; ++i) {
            const double x = g->coord(0, i);
            double val = 0.0;
            if (x >= 1.0)
                val = 1.0;
            else if (x >= 0.0)
                val = std::pow(x, n);
            f.vals.v[i].v[0] = val;
        }
        return f;
    };

    CauchyReport rep;
    rep.case_name = case_name;
    rep.grid_nodes = nodes;
    rep.limit_jump = geodesic_distance(*M, Vec3{0.0, 0.0, 0.0}, Vec3{1.0, 0.0, 0.0},
                                       DistanceMode::raw);
    for (int n = 1; n <= n_max; ++n) {
        const OrderField fn = family(n);
        for (int m = n + 1; m <= n_max; ++m) {
            CauchyRow row;
            row.n = n;
            row.m = m;
            // Simpson on the lattice: the kinks of |f_n − f_m| at X₁ = 0, 1
            // fall on Simpson pair boundaries whenever nodes ≡ 1 (mod 6),
            // so each smooth piece is integrated at full fourth order.
            row.distance = field_distance(fn, family(m), DistanceKind::integral,
                                          DistanceMode::raw, nullptr, QuadRule::simpson);
            row.bound = 9.0 * (1.0 / (n + 1.0) - 1.0 / (m + 1.0));
            rep.rows.push_back(row);
        }
    }
    return rep;
}

struct BeamRow {
    double L = 0.0;
    double integral = 0.0;
    double sup = 0.0;
};

// integral distance between two uniform circle-valued fields on beams
// [0,L] × (−1,1)² grows linearly in L while the sup distance stays put
inline std::vector<BeamRow> beam_divergence_demo(
    const std::vector<double>& lengths = {10.0, 20.0, 40.0},
    double nodes_per_unit = 10.0, double angle = 1.0) {
    ManifoldPtr M = std::make_shared<const ManifoldModel>(circle());
    std::vector<BeamRow> rows;
    for (double L : lengths) {
        if (!(L > 0.0)) throw ValidationError("beam_divergence_demo: length must be > 0");
        const int n0 = static_cast<int>(std::lround(L * nodes_per_unit)) + 1;
        const GridPtr g = make_grid_1d(0.0, L, n0, -1.0, 1.0);
        OrderField f1{M, Field<Vec3>(g)};
        OrderField f2{M, Field<Vec3>(g)};
        for (Vec3& v : f2.vals.v) v.v[0] = angle;
        BeamRow row;
        row.L = L;
        row.integral = field_distance(f1, f2, DistanceKind::integral);
        row.sup = field_distance(f1, f2, DistanceKind::sup);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace cbmech
