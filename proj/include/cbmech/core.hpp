#pragma once

// Small fixed-size linear algebra for 3-vectors and 3x3 matrices.
// Manifold-valued quantities with dim d < 3 live in the leading d
// components/rows; padding stays zero so contractions are safe.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbmech {

struct Vec3 {
    double v[3]{0.0, 0.0, 0.0};

    Vec3() = default;
    Vec3(double a, double b, double c) : v{a, b, c} {}

    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }

    Vec3& operator+=(const Vec3& o) {
        v[0] += o.v[0]; v[1] += o.v[1]; v[2] += o.v[2];
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        v[0] -= o.v[0]; v[1] -= o.v[1]; v[2] -= o.v[2];
        return *this;
    }
    Vec3& operator*=(double s) {
        v[0] *= s; v[1] *= s; v[2] *= s;
        return *this;
    }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
inline Vec3 operator-(const Vec3& a) { return {-a.v[0], -a.v[1], -a.v[2]}; }

inline double dot(const Vec3& a, const Vec3& b) {
    return a.v[0] * b.v[0] + a.v[1] * b.v[1] + a.v[2] * b.v[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.v[1] * b.v[2] - a.v[2] * b.v[1],
            a.v[2] * b.v[0] - a.v[0] * b.v[2],
            a.v[0] * b.v[1] - a.v[1] * b.v[0]};
}
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

struct Mat3 {
    double m[3][3]{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    Mat3() = default;

    double& operator()(int i, int j) { return m[i][j]; }
    double operator()(int i, int j) const { return m[i][j]; }

    static Mat3 identity() {
        Mat3 I;
        I.m[0][0] = I.m[1][1] = I.m[2][2] = 1.0;
        return I;
    }
    static Mat3 zero() { return Mat3{}; }

    Mat3& operator+=(const Mat3& o) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] += o.m[i][j];
        return *this;
    }
    Mat3& operator-=(const Mat3& o) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] -= o.m[i][j];
        return *this;
    }
    Mat3& operator*=(double s) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] *= s;
        return *this;
    }
};

inline Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
inline Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
inline Mat3 operator*(double s, Mat3 a) { return a *= s; }
inline Mat3 operator*(Mat3 a, double s) { return a *= s; }
inline Mat3 operator-(const Mat3& a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.m[i][j] = -a.m[i][j];
    return r;
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
            r.m[i][j] = s;
        }
    return r;
}

inline Vec3 operator*(const Mat3& a, const Vec3& x) {
    Vec3 r;
    for (int i = 0; i < 3; ++i)
        r.v[i] = a.m[i][0] * x.v[0] + a.m[i][1] * x.v[1] + a.m[i][2] * x.v[2];
    return r;
}

inline Mat3 transpose(const Mat3& a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[j][i];
    return r;
}

inline Mat3 outer(const Vec3& a, const Vec3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.m[i][j] = a.v[i] * b.v[j];
    return r;
}

inline double trace(const Mat3& a) { return a.m[0][0] + a.m[1][1] + a.m[2][2]; }

// Frobenius inner product A:B and norm sqrt(tr(A^T A)).
inline double ddot(const Mat3& a, const Mat3& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += a.m[i][j] * b.m[i][j];
    return s;
}
inline double frobenius(const Mat3& a) { return std::sqrt(ddot(a, a)); }

inline double det(const Mat3& a) {
    return a.m[0][0] * (a.m[1][1] * a.m[2][2] - a.m[1][2] * a.m[2][1]) -
           a.m[0][1] * (a.m[1][0] * a.m[2][2] - a.m[1][2] * a.m[2][0]) +
           a.m[0][2] * (a.m[1][0] * a.m[2][1] - a.m[1][1] * a.m[2][0]);
}

inline Mat3 inverse(const Mat3& a) {
    const double d = det(a);
    if (std::abs(d) < 1e-300)
        throw std::runtime_error("inverse: singular 3x3 matrix");
    Mat3 r;
    r.m[0][0] = (a.m[1][1] * a.m[2][2] - a.m[1][2] * a.m[2][1]) / d;
    r.m[0][1] = (a.m[0][2] * a.m[2][1] - a.m[0][1] * a.m[2][2]) / d;
    r.m[0][2] = (a.m[0][1] * a.m[1][2] - a.m[0][2] * a.m[1][1]) / d;
    r.m[1][0] = (a.m[1][2] * a.m[2][0] - a.m[1][0] * a.m[2][2]) / d;
    r.m[1][1] = (a.m[0][0] * a.m[2][2] - a.m[0][2] * a.m[2][0]) / d;
    r.m[1][2] = (a.m[0][2] * a.m[1][0] - a.m[0][0] * a.m[1][2]) / d;
    r.m[2][0] = (a.m[1][0] * a.m[2][1] - a.m[1][1] * a.m[2][0]) / d;
    r.m[2][1] = (a.m[0][1] * a.m[2][0] - a.m[0][0] * a.m[2][1]) / d;
    r.m[2][2] = (a.m[0][0] * a.m[1][1] - a.m[0][1] * a.m[1][0]) / d;
    return r;
}

inline Mat3 sym(const Mat3& a) { return 0.5 * (a + transpose(a)); }
inline Mat3 skw(const Mat3& a) { return 0.5 * (a - transpose(a)); }

// Cross-product matrix: crossmat(u) x = u ^ x.
inline Mat3 crossmat(const Vec3& u) {
    Mat3 s;
    s.m[0][1] = -u.v[2]; s.m[0][2] = u.v[1];
    s.m[1][0] = u.v[2];  s.m[1][2] = -u.v[0];
    s.m[2][0] = -u.v[1]; s.m[2][1] = u.v[0];
    return s;
}

// Axial vector of the skew part: crossmat(axial(A)) == skw(A).
inline Vec3 axial(const Mat3& a) {
    return {0.5 * (a.m[2][1] - a.m[1][2]),
            0.5 * (a.m[0][2] - a.m[2][0]),
            0.5 * (a.m[1][0] - a.m[0][1])};
}

// Solves the leading n x n block of A x = b, n <= 3, by partial-pivot
// elimination. Entries outside the block are ignored; the solution is
// zero-padded. Throws on a (near-)singular block.
inline Vec3 solve_block(const Mat3& A, const Vec3& b, int n,
                        const char* what = "solve_block") {
    double a[3][4];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a[i][j] = A.m[i][j];
        a[i][n] = b.v[i];
    }
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a[i][j]));
    if (scale == 0.0) throw std::runtime_error(std::string(what) + ": zero block");
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (std::abs(a[p][c]) < 1e-13 * scale)
            throw std::runtime_error(std::string(what) + ": singular block");
        if (p != c)
            for (int j = c; j <= n; ++j) std::swap(a[p][j], a[c][j]);
        for (int r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int j = c; j <= n; ++j) a[r][j] -= f * a[c][j];
        }
    }
    Vec3 x;
    for (int i = n - 1; i >= 0; --i) {
        double s = a[i][n];
        for (int j = i + 1; j < n; ++j) s -= a[i][j] * x.v[j];
        x.v[i] = s / a[i][i];
    }
    return x;
}

// Inverse of the leading n x n block, identity-padded outside it.
inline Mat3 inverse_block(const Mat3& A, int n, const char* what = "inverse_block") {
    Mat3 r = Mat3::identity();
    for (int c = 0; c < n; ++c) {
        Vec3 e;
        e.v[c] = 1.0;
        const Vec3 col = solve_block(A, e, n, what);
        for (int i = 0; i < n; ++i) r.m[i][c] = col.v[i];
    }
    return r;
}

// Symmetric positive definiteness of the leading n x n block via Cholesky.
inline bool spd_block(const Mat3& A, int n, double sym_tol = 1e-12) {
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(A.m[i][j] - A.m[j][i]) >
                sym_tol * (1.0 + std::abs(A.m[i][j])))
                return false;
    double l[3][3] = {};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = A.m[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= 0.0) return false;
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return true;
}

// Rodrigues rotation about unit axis-scaled vector r (angle |r|).
inline Mat3 rotation(const Vec3& r) {
    const double th = norm(r);
    if (th < 1e-14) return Mat3::identity() + crossmat(r);
    const Vec3 k = r / th;
    const Mat3 K = crossmat(k);
    return Mat3::identity() + std::sin(th) * K + (1.0 - std::cos(th)) * (K * K);
}

// Relative finite-difference step for argument x.
inline double fd_step(double x, double rel) {
    return rel * std::max(1.0, std::abs(x));
}

// Least-squares line y = a + b x; r2 is the coefficient of determination.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 1.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >=2 matching samples");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i];
        sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-300) throw std::invalid_argument("fit_line: degenerate x");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

// log-log slope of residual vs scale; used by refinement studies.
inline LineFit fit_order(const std::vector<double>& h, const std::vector<double>& r) {
    std::vector<double> lx(h.size()), ly(r.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i] <= 0.0 || r[i] <= 0.0)
            throw std::invalid_argument("fit_order: positive data required");
        lx[i] = std::log(h[i]);
        ly[i] = std::log(r[i]);
    }
    LineFit f = fit_line(lx, ly);
    // residual shrinks as h^p with p = slope (h decreasing).
    return f;
}

struct NormPair {
    double linf = 0.0;
    double l2 = 0.0;
};

inline double sq(double x) { return x * x; }

// Uniform double in [a, b) from a seeded engine.
inline double uniform(std::mt19937_64& rng, double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline Vec3 uniform_vec(std::mt19937_64& rng, double a, double b) {
    return {uniform(rng, a, b), uniform(rng, a, b), uniform(rng, a, b)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    // rejection-free: normalized gaussian triple
    std::normal_distribution<double> g(0.0, 1.0);
    Vec3 u{g(rng), g(rng), g(rng)};
    double n = norm(u);
    while (n < 1e-8) {
        u = Vec3{g(rng), g(rng), g(rng)};
        n = norm(u);
    }
    return u / n;
}

}  // namespace cbmech
