#pragma once

// Uniform Cartesian discretization of the reference body. Axes with a single
// node layer are "passive": the body is homogeneous along them and their
// extent enters quadrature as a plain measure factor (used by the 1D-reduced
// demos on (−1,2)³ and the beam cross-section).

#include <functional>
#include <memory>
#include <vector>

#include "core.hpp"
#include "error.hpp"
#include "manifold.hpp"

namespace cbmech {

struct BodyGrid {
    int n[3] = {1, 1, 1};
    double lo[3] = {0, 0, 0};
    double hi[3] = {0, 0, 0};
    double h[3] = {0, 0, 0};  // spacing on active axes, 0 on passive ones
    double rho0 = 1.0;
    std::vector<double> rho0_field;  // optional per-node density
    std::vector<Mat3> gamma_field;   // optional per-node material metric
    // declared gradient-kink planes: (axis, node index of the kink plane)
    std::vector<std::pair<int, int>> kinks;

    bool active(int a) const { return n[a] > 1; }
    int count() const { return n[0] * n[1] * n[2]; }
    int index(int i, int j, int k) const { return (k * n[1] + j) * n[0] + i; }
    void unpack(int idx, int& i, int& j, int& k) const {
        i = idx % n[0];
        idx /= n[0];
        j = idx % n[1];
        k = idx / n[1];
    }
    double coord(int a, int i) const {
        return active(a) ? lo[a] + i * h[a] : 0.5 * (lo[a] + hi[a]);
    }
    Vec3 point(int idx) const {
        int i, j, k;
        unpack(idx, i, j, k);
        return {coord(0, i), coord(1, j), coord(2, k)};
    }
    double density(int idx) const {
        return rho0_field.empty() ? rho0 : rho0_field[idx];
    }
    Mat3 gamma(int idx) const {
        return gamma_field.empty() ? Mat3::identity() : gamma_field[idx];
    }

    // declare a kink plane at coordinate c on axis a; c must lie on the lattice
    void declare_kink(int a, double c) {
        if (!active(a)) throw ValidationError("declare_kink: passive axis");
        const double t = (c - lo[a]) / h[a];
        const int i = int(std::lround(t));
        if (std::abs(t - i) > 1e-9 || i < 0 || i >= n[a])
            throw ValidationError("declare_kink: plane must sit on a node layer");
        kinks.emplace_back(a, i);
    }
};

using GridPtr = std::shared_ptr<const BodyGrid>;

inline GridPtr make_grid(const double lo[3], const double hi[3], const int n[3],
                         double rho0 = 1.0) {
    auto g = std::make_shared<BodyGrid>();
    for (int a = 0; a < 3; ++a) {
        if (n[a] < 1) throw ValidationError("make_grid: node counts must be >= 1");
        if (n[a] == 2)
            throw ValidationError("make_grid: active axes need >= 3 nodes");
        if (hi[a] <= lo[a]) throw ValidationError("make_grid: empty extent");
        g->n[a] = n[a];
        g->lo[a] = lo[a];
        g->hi[a] = hi[a];
        g->h[a] = n[a] > 1 ? (hi[a] - lo[a]) / (n[a] - 1) : 0.0;
    }
    if (rho0 <= 0.0) throw ValidationError("make_grid: rho0 must be positive");
    g->rho0 = rho0;
    return g;
}

inline GridPtr make_grid_1d(double lo0, double hi0, int n0, double cross_lo,
                            double cross_hi, double rho0 = 1.0) {
    const double lo[3] = {lo0, cross_lo, cross_lo};
    const double hi[3] = {hi0, cross_hi, cross_hi};
    const int n[3] = {n0, 1, 1};
    return make_grid(lo, hi, n, rho0);
}

template <typename T>
struct Field {
    GridPtr grid;
    std::vector<T> v;

    Field() = default;
    explicit Field(GridPtr g, const T& init = T{}) : grid(std::move(g)) {
        v.assign(grid->count(), init);
    }
    T& operator[](int i) { return v[i]; }
    const T& operator[](int i) const { return v[i]; }
    int size() const { return int(v.size()); }
};

inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* what) {
    if (a == b) return;
    for (int k = 0; k < 3; ++k)
        if (a->n[k] != b->n[k] || a->lo[k] != b->lo[k] || a->hi[k] != b->hi[k])
            throw ValidationError(std::string(what) + ": fields on different grids");
}

// ---- quadrature ------------------------------------------------------------

enum class QuadRule { trapezoid, simpson };

// per-axis node weights; passive axes contribute their extent as a factor
inline std::vector<double> axis_weights(const BodyGrid& g, int a, QuadRule rule) {
    if (!g.active(a)) return {g.hi[a] - g.lo[a]};
    const int n = g.n[a];
    std::vector<double> w(n, g.h[a]);
    if (rule == QuadRule::trapezoid) {
        w.front() = w.back() = 0.5 * g.h[a];
    } else {
        if (n % 2 == 0)
            throw ValidationError("simpson quadrature needs an odd node count");
        for (int i = 0; i < n; ++i)
            w[i] = g.h[a] / 3.0 * (i == 0 || i == n - 1 ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return w;
}

inline double integrate(const BodyGrid& g,
                        const std::function<double(int)>& node_value,
                        QuadRule rule = QuadRule::trapezoid) {
    const std::vector<double> wx = axis_weights(g, 0, rule);
    const std::vector<double> wy = axis_weights(g, 1, rule);
    const std::vector<double> wz = axis_weights(g, 2, rule);
    double s = 0.0;
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j) {
            const double wjk = wy[j] * wz[k];
            for (int i = 0; i < g.n[0]; ++i)
                s += wx[i] * wjk * node_value(g.index(i, j, k));
        }
    return s;
}

// ---- difference stencils ---------------------------------------------------

namespace detail {

enum class Stencil { central, left, right };  // left = one-sided using i, i−1, i−2

inline Stencil pick_stencil(const BodyGrid& g, int a, int i) {
    if (i == 0) return Stencil::right;
    if (i == g.n[a] - 1) return Stencil::left;
    for (const auto& [ka, ki] : g.kinks) {
        if (ka != a) continue;
        // keep the stencil from crossing the kink plane at node ki
        if (i == ki || i == ki - 1) {
            if (i >= 2) return Stencil::left;
        }
        if ((i == ki || i == ki + 1) && i <= g.n[a] - 3) return Stencil::right;
    }
    return Stencil::central;
}

}  // namespace detail

// d/dX_a of one stored component c of a nodal field, increment-form so the S1
// seam cannot corrupt the stencil:
//   central   (d₊ + d₋)/2h,  one-sided (3d₁ − d₂)/2h  (second order)
template <typename T, typename Diff>
inline double axis_derivative(const Field<T>& f, int a, int idx, Diff diff) {
    const BodyGrid& g = *f.grid;
    if (!g.active(a)) return 0.0;
    if (g.n[a] < 3)
        throw ValidationError("axis_derivative: active axis needs >= 3 nodes");
    int i, j, k;
    g.unpack(idx, i, j, k);
    int ijk[3] = {i, j, k};
    auto at = [&](int off) {
        int t[3] = {ijk[0], ijk[1], ijk[2]};
        t[a] += off;
        return g.index(t[0], t[1], t[2]);
    };
    const double h = g.h[a];
    switch (detail::pick_stencil(g, a, ijk[a])) {
        case detail::Stencil::central:
            return (diff(f[at(1)], f[idx]) + diff(f[idx], f[at(-1)])) / (2.0 * h);
        case detail::Stencil::right:
            return (3.0 * diff(f[at(1)], f[idx]) - diff(f[at(2)], f[at(1)])) /
                   (2.0 * h);
        case detail::Stencil::left:
            return (3.0 * diff(f[idx], f[at(-1)]) - diff(f[at(-1)], f[at(-2)])) /
                   (2.0 * h);
    }
    return 0.0;
}

// full gradient of a Vec3-valued nodal field: rows = components, cols = X_A.
// `M` (optional) supplies wrap-aware increments for its rep components.
inline Field<Mat3> gradient_field(const Field<Vec3>& f, int ncomp,
                                  const ManifoldModel* M = nullptr) {
    Field<Mat3> out(f.grid);
    const BodyGrid& g = *f.grid;
    for (int idx = 0; idx < g.count(); ++idx) {
        Mat3 grad;
        for (int c = 0; c < ncomp; ++c) {
            for (int a = 0; a < 3; ++a) {
                if (!g.active(a)) continue;
                auto diff = [&](const Vec3& p, const Vec3& q) {
                    return M ? M->increment(p, q).v[c] : p.v[c] - q.v[c];
                };
                grad(c, a) = axis_derivative(f, a, idx, diff);
            }
        }
        out[idx] = grad;
    }
    return out;
}

}  // namespace cbmech
