#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geom.hpp"
#include "vec.hpp"

namespace polyscat::fields {

// Keep the Vec operators visible next to the local overloads.
using polyscat::operator-;
using polyscat::operator+;

inline constexpr std::size_t kDefaultPointBudget = std::size_t{1} << 24;

// Uniform Cartesian grid; node (i,j,l) sits at origin + h*(i,j,l).
// Each node is the midpoint of an h-cell used for quadrature.
struct Grid {
    int dim = 2;
    Vec origin{0, 0, 0};
    double h = 1.0;
    std::array<int, 3> extent{1, 1, 1};

    static Grid make(int dim, const Vec& origin, double h, std::array<int, 3> extent,
                     std::size_t budget = kDefaultPointBudget)
    {
        if (dim != 2 && dim != 3) throw DomainError("grid dimension must be 2 or 3");
        if (!(h > 0.0)) throw DomainError("grid spacing must be positive");
        if (dim == 2) extent[2] = 1;
        for (int a = 0; a < dim; ++a)
            if (extent[a] < 1) throw DomainError("grid extent must be positive");
        Grid g{dim, origin, h, extent};
        if (dim == 2) g.origin[2] = 0.0;
        if (g.size() > budget) throw DomainError("grid exceeds point budget");
        return g;
    }

    // Cube [lo, lo + n h)^dim of n cells per axis, nodes at cell centres.
    static Grid cells(int dim, const Vec& lo, double h, int n)
    {
        Vec o = lo + Vec{h / 2, h / 2, dim == 3 ? h / 2 : 0.0};
        return make(dim, o, h, {n, n, dim == 3 ? n : 1});
    }

    std::size_t size() const
    {
        return static_cast<std::size_t>(extent[0]) * extent[1] * extent[2];
    }

    double cellVolume() const { return dim == 2 ? h * h : h * h * h; }

    std::size_t index(int i, int j, int l = 0) const
    {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(extent[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(extent[1]) * l);
    }

    std::array<int, 3> unindex(std::size_t idx) const
    {
        const int i = static_cast<int>(idx % extent[0]);
        idx /= extent[0];
        const int j = static_cast<int>(idx % extent[1]);
        return {i, j, static_cast<int>(idx / extent[1])};
    }

    Vec point(int i, int j, int l = 0) const
    {
        return {origin[0] + h * i, origin[1] + h * j, dim == 3 ? origin[2] + h * l : 0.0};
    }

    Vec point(std::size_t idx) const
    {
        const auto c = unindex(idx);
        return point(c[0], c[1], c[2]);
    }

    Vec upper() const { return point(extent[0] - 1, extent[1] - 1, dim == 3 ? extent[2] - 1 : 0); }

    bool sameAs(const Grid& o) const
    {
        return dim == o.dim && origin == o.origin && h == o.h && extent == o.extent;
    }

    template <class F>
    void forEach(F&& f) const
    {
        for (int l = 0; l < extent[2]; ++l)
            for (int j = 0; j < extent[1]; ++j)
                for (int i = 0; i < extent[0]; ++i) f(index(i, j, l), point(i, j, l));
    }
};

enum class Role { Incident, Total, Scattered, Cgo, Remainder, Difference, Generic };

inline std::string roleName(Role r)
{
    switch (r) {
    case Role::Incident: return "incident";
    case Role::Total: return "total";
    case Role::Scattered: return "scattered";
    case Role::Cgo: return "cgo";
    case Role::Remainder: return "remainder";
    case Role::Difference: return "difference";
    default: return "generic";
    }
}

struct WaveField {
    Grid grid;
    std::vector<cplx> values;
    double k = 0.0;
    Role role = Role::Generic;

    WaveField() = default;
    WaveField(Grid g, double k_, Role r) : grid(g), values(g.size(), cplx{0.0, 0.0}), k(k_), role(r) {}

    cplx& operator[](std::size_t i) { return values[i]; }
    const cplx& operator[](std::size_t i) const { return values[i]; }

    bool finite() const
    {
        return std::all_of(values.begin(), values.end(), [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
    }

    // Multilinear interpolation; points outside the node hull are clamped.
    cplx interpolate(const Vec& x) const
    {
        std::array<int, 3> i0{0, 0, 0};
        std::array<double, 3> t{0, 0, 0};
        for (int a = 0; a < grid.dim; ++a) {
            const double s = (x[a] - grid.origin[a]) / grid.h;
            int i = static_cast<int>(std::floor(s));
            i = std::clamp(i, 0, std::max(0, grid.extent[a] - 2));
            i0[a] = i;
            t[a] = std::clamp(s - i, 0.0, 1.0);
        }
        cplx acc = 0.0;
        const int nz = grid.dim == 3 ? 2 : 1;
        for (int dl = 0; dl < nz; ++dl)
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    const double w = (di ? t[0] : 1 - t[0]) * (dj ? t[1] : 1 - t[1]) * (grid.dim == 3 ? (dl ? t[2] : 1 - t[2]) : 1.0);
                    if (w == 0.0) continue;
                    const int ii = std::min(i0[0] + di, grid.extent[0] - 1);
                    const int jj = std::min(i0[1] + dj, grid.extent[1] - 1);
                    const int ll = std::min(i0[2] + dl, grid.extent[2] - 1);
                    acc += w * values[grid.index(ii, jj, ll)];
                }
        return acc;
    }
};

inline WaveField operator-(const WaveField& a, const WaveField& b)
{
    if (!a.grid.sameAs(b.grid)) throw DomainError("field difference on mismatched grids");
    WaveField d(a.grid, a.k, Role::Difference);
    for (std::size_t i = 0; i < a.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
    return d;
}

// Contrast phi on a support (polytope or ball) with declared Hoelder data.
struct ContrastField {
    std::optional<geom::Polytope> polytope;
    std::function<bool(const Vec&)> inside;
    std::function<cplx(const Vec&)> phi;
    double alpha = 1.0;   // Hoelder exponent
    double M = 0.0;       // Hoelder norm bound, also bounds |phi|
    double mu = 0.0;      // min |phi| over the vertices
    std::string label;

    static ContrastField zero()
    {
        ContrastField c;
        c.inside = [](const Vec&) { return false; };
        c.phi = [](const Vec&) { return cplx{0.0, 0.0}; };
        c.label = "zero";
        return c;
    }

    static ContrastField onPolytope(const geom::Polytope& P, std::function<cplx(const Vec&)> phi, double alpha, double M,
                                    std::string label = "custom")
    {
        if (P.dim() == 2 && !(alpha > 0.0)) throw DomainError("contrast Hoelder exponent must be positive in 2D");
        if (P.dim() == 3 && !(alpha > 0.25)) throw DomainError("contrast Hoelder exponent must exceed 1/4 in 3D");
        ContrastField c;
        c.polytope = P;
        c.inside = [P](const Vec& x) { return P.contains(x, 0.0); };
        c.phi = std::move(phi);
        c.alpha = alpha;
        c.M = M;
        c.mu = std::numeric_limits<double>::infinity();
        for (const auto& v : P.vertices()) c.mu = std::min(c.mu, std::abs(c.phi(v)));
        c.label = std::move(label);
        return c;
    }

    static ContrastField constant(const geom::Polytope& P, cplx value)
    {
        return onPolytope(P, [value](const Vec&) { return value; }, 1.0, std::abs(value), "constant");
    }

    // phi(x) = c0 + g.x; Lipschitz constant |g|.
    static ContrastField affine(const geom::Polytope& P, cplx c0, const Vec& g)
    {
        double M = std::abs(c0);
        for (const auto& v : P.vertices()) M = std::max(M, std::abs(c0 + dot(g, v)));
        M = std::max(M, norm(g));
        return onPolytope(P, [c0, g](const Vec& x) { return c0 + dot(g, x); }, 1.0, M, "affine");
    }

    // phi(x) = c0 + c |x - x0|^alpha.
    static ContrastField hoelderBump(const geom::Polytope& P, cplx c0, cplx c, const Vec& x0, double alpha)
    {
        double M = std::abs(c);
        for (const auto& v : P.vertices()) M = std::max(M, std::abs(c0) + std::abs(c) * std::pow(dist(v, x0), alpha));
        return onPolytope(P, [c0, c, x0, alpha](const Vec& x) { return c0 + c * std::pow(dist(x, x0), alpha); }, alpha, M,
                          "hoelder-bump");
    }

    // Ball support; used for separable oracles, not a polytope scene.
    static ContrastField ball(const Vec& center, double radius, cplx value)
    {
        ContrastField c;
        c.inside = [center, radius](const Vec& x) { return dist(x, center) < radius; };
        c.phi = [value](const Vec&) { return value; };
        c.M = std::abs(value);
        c.mu = std::abs(value);
        c.label = "ball";
        return c;
    }

    bool isZero() const { return label == "zero"; }

    cplx operator()(const Vec& x) const { return inside(x) ? phi(x) : cplx{0.0, 0.0}; }

    // V sampled at grid nodes: a cell belongs to the support iff its centre does.
    std::vector<cplx> sample(const Grid& g) const
    {
        std::vector<cplx> v(g.size(), cplx{0.0, 0.0});
        if (isZero()) return v;
        g.forEach([&](std::size_t i, const Vec& x) {
            if (inside(x)) v[i] = phi(x);
        });
        return v;
    }

    double supNorm(const Grid& g) const
    {
        double m = 0.0;
        for (const auto& v : sample(g)) m = std::max(m, std::abs(v));
        return m;
    }
};

inline WaveField planeWave(double k, const Vec& omega, const Grid& grid)
{
    if (std::abs(norm(omega) - 1.0) > 1e-12) throw DomainError("planeWave: direction must be a unit vector");
    WaveField u(grid, k, Role::Incident);
    grid.forEach([&](std::size_t i, const Vec& x) { u.values[i] = std::polar(1.0, k * dot(omega, x)); });
    return u;
}

// max over interior nodes of |Delta_h u + k^2 (1+V) u|; V optional.
inline double helmholtzResidual(const WaveField& u, const ContrastField* V = nullptr)
{
    const Grid& g = u.grid;
    for (int a = 0; a < g.dim; ++a)
        if (g.extent[a] < 3) throw DomainError("helmholtzResidual: grid interior is empty");
    const double k2 = u.k * u.k;
    const double ih2 = 1.0 / (g.h * g.h);
    const std::vector<cplx> vs = V ? V->sample(g) : std::vector<cplx>{};
    double r = 0.0;
    const int l0 = g.dim == 3 ? 1 : 0, l1 = g.dim == 3 ? g.extent[2] - 1 : 1;
    for (int l = l0; l < l1; ++l)
        for (int j = 1; j < g.extent[1] - 1; ++j)
            for (int i = 1; i < g.extent[0] - 1; ++i) {
                const std::size_t c = g.index(i, j, l);
                cplx lap = u[g.index(i + 1, j, l)] + u[g.index(i - 1, j, l)] + u[g.index(i, j + 1, l)] + u[g.index(i, j - 1, l)];
                double centre = 4.0;
                if (g.dim == 3) {
                    lap += u[g.index(i, j, l + 1)] + u[g.index(i, j, l - 1)];
                    centre = 6.0;
                }
                lap = (lap - centre * u[c]) * ih2;
                const cplx q = V ? vs[c] : cplx{0.0, 0.0};
                r = std::max(r, std::abs(lap + k2 * (1.0 + q) * u[c]));
            }
    return r;
}

// Regions for norms: polytope, annulus/ball about a centre, or everything.
struct Region {
    enum class Kind { All, Polytope, Annulus } kind = Kind::All;
    std::optional<geom::Polytope> polytope;
    Vec center{0, 0, 0};
    double r1 = 0.0, r2 = 0.0;   // annulus r1 <= |x-c| < r2; ball when r1 = 0

    static Region all() { return {}; }
    static Region of(const geom::Polytope& P)
    {
        Region r;
        r.kind = Kind::Polytope;
        r.polytope = P;
        return r;
    }
    static Region annulus(const Vec& c, double r1, double r2)
    {
        Region r;
        r.kind = Kind::Annulus;
        r.center = c;
        r.r1 = r1;
        r.r2 = r2;
        return r;
    }
    static Region ball(const Vec& c, double radius) { return annulus(c, 0.0, radius); }

    bool contains(const Vec& x) const
    {
        switch (kind) {
        case Kind::Polytope: return polytope->contains(x, 0.0);
        case Kind::Annulus: {
            const double d = dist(x, center);
            return d >= r1 && d <= r2;
        }
        default: return true;
        }
    }
};

enum class Norm { L2, Linf };

// Midpoint quadrature over cells whose centres lie in the region.
inline double fieldNorm(const WaveField& u, const Region& region, Norm nrm)
{
    double acc = 0.0;
    std::size_t count = 0;
    u.grid.forEach([&](std::size_t i, const Vec& x) {
        if (!region.contains(x)) return;
        ++count;
        if (nrm == Norm::L2) acc += std::norm(u[i]);
        else acc = std::max(acc, std::abs(u[i]));
    });
    if (count == 0) throw DomainError("fieldNorm: empty region");
    return nrm == Norm::L2 ? std::sqrt(acc * u.grid.cellVolume()) : acc;
}

// Central-difference gradient at node i (one-sided at the grid edge).
inline CVec gradientAt(const WaveField& u, std::size_t idx)
{
    const Grid& g = u.grid;
    const auto c = g.unindex(idx);
    CVec out{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) {
        auto p = c, m = c;
        double span = 2.0;
        if (c[a] + 1 < g.extent[a]) ++p[a];
        else span -= 1.0;
        if (c[a] > 0) --m[a];
        else span -= 1.0;
        if (span <= 0.0) continue;
        out[a] = (u[g.index(p[0], p[1], p[2])] - u[g.index(m[0], m[1], m[2])]) / (span * g.h);
    }
    return out;
}

inline WaveField gradientComponent(const WaveField& u, int axis)
{
    WaveField d(u.grid, u.k, Role::Generic);
    for (std::size_t i = 0; i < u.values.size(); ++i) d.values[i] = gradientAt(u, i)[axis];
    return d;
}

// Discrete H^2 surrogate over a region: value, gradient and stencil Laplacian L2 norms.
inline double h2Surrogate(const WaveField& u, const Region& region)
{
    const Grid& g = u.grid;
    double s0 = 0, s1 = 0, s2 = 0;
    const double ih2 = 1.0 / (g.h * g.h);
    std::size_t count = 0;
    g.forEach([&](std::size_t idx, const Vec& x) {
        if (!region.contains(x)) return;
        const auto c = g.unindex(idx);
        for (int a = 0; a < g.dim; ++a)
            if (c[a] == 0 || c[a] == g.extent[a] - 1) return;
        ++count;
        s0 += std::norm(u[idx]);
        const CVec gr = gradientAt(u, idx);
        s1 += std::norm(gr[0]) + std::norm(gr[1]) + std::norm(gr[2]);
        cplx lap = -2.0 * g.dim * u[idx];
        for (int a = 0; a < g.dim; ++a) {
            auto p = c, m = c;
            ++p[a];
            --m[a];
            lap += u[g.index(p[0], p[1], p[2])] + u[g.index(m[0], m[1], m[2])];
        }
        s2 += std::norm(lap * ih2);
    });
    if (count == 0) throw DomainError("h2Surrogate: empty region");
    return std::sqrt((s0 + s1 + s2) * g.cellVolume());
}

} // namespace polyscat::fields
