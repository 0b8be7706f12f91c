#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cgo.hpp"
#include "fields.hpp"
#include "geom.hpp"
#include "quadrature.hpp"
#include "rellich.hpp"
#include "solver.hpp"
#include "specfun.hpp"
#include "vec.hpp"

namespace polyscat::stability {

using polyscat::operator-;
using polyscat::operator+;

using fields::ContrastField;
using fields::Grid;
using fields::WaveField;
using geom::PolyCone;
using geom::Polytope;

// ---------------------------------------------------------------------------
// Pointwise evaluation of grid fields and their gradients

class FieldProbe {
public:
    explicit FieldProbe(const WaveField& u) : u_(&u)
    {
        for (int a = 0; a < u.grid.dim; ++a) grads_.push_back(fields::gradientComponent(u, a));
    }

    cplx value(const Vec& x) const { return u_->interpolate(x); }

    CVec gradient(const Vec& x) const
    {
        CVec g{0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < grads_.size(); ++a) g[a] = grads_[a].interpolate(x);
        return g;
    }

private:
    const WaveField* u_;
    std::vector<WaveField> grads_;
};

// u0 = e^{rho.(x - x_c)} (1 + psi): the exponential is applied analytically and
// only psi is interpolated.
class CgoProbe {
public:
    explicit CgoProbe(const cgo::CgoSolution& s) : dir_(s.faddeev.dir), psi_(s.faddeev.psi) {}

    cplx value(const Vec& x) const { return envelope(x) * (1.0 + psi_.value(x)); }

    CVec gradient(const Vec& x) const
    {
        const cplx e = envelope(x), onePsi = 1.0 + psi_.value(x);
        const CVec gp = psi_.gradient(x);
        CVec g;
        for (int a = 0; a < 3; ++a) g[a] = e * (dir_.rho[a] * onePsi + gp[a]);
        return g;
    }

    cplx envelope(const Vec& x) const { return std::exp(dot(dir_.rho, x - dir_.vertex)); }
    cplx psi(const Vec& x) const { return psi_.value(x); }
    const cgo::CgoDirection& direction() const { return dir_; }

private:
    cgo::CgoDirection dir_;
    FieldProbe psi_;
};

inline cplx dotNormal(const CVec& g, const Vec& n) { return g[0] * n[0] + g[1] * n[1] + g[2] * n[2]; }

inline double cabs(const CVec& g) { return std::sqrt(std::norm(g[0]) + std::norm(g[1]) + std::norm(g[2])); }

// ---------------------------------------------------------------------------
// Truncated cone Q_h = Qcone ∩ B(x_c, h) and its quadrature

struct QuadPoint {
    Vec x;
    double w = 0.0;
    Vec normal{0, 0, 0};   // boundary points only
    int part = 0;          // boundary: 0 flat sides, 1 spherical cap
};

// Unit vector at angle t in the 2D plane.
inline Vec unitAt(double t) { return {std::cos(t), std::sin(t), 0.0}; }

inline double angleOf(const Vec& v) { return std::atan2(v[1], v[0]); }

// Angles in (lo, hi) where rays from x_c cross the boundary of P (2D): edge
// directions at x_c when x_c is a vertex, otherwise none.
inline std::vector<double> angularBreaks2D(const Polytope& P, const Vec& xc, double lo, double hi)
{
    std::vector<double> cuts;
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (dist(P.vertex(i), xc) > 1e-12) continue;
        for (const auto& d : P.edgeDirectionsAt(i)) {
            double t = angleOf(d);
            while (t < lo) t += 2 * pi;
            while (t > hi) t -= 2 * pi;
            if (t > lo && t < hi) cuts.push_back(t);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

struct TruncatedCone {
    PolyCone cone;        // spherical cone with vertex x_c
    double h = 0.0;
    std::optional<Polytope> support;   // polytope of V, for quadrature breakpoints

    int dim() const { return cone.dim; }
    const Vec& vertex() const { return cone.vertex; }

    bool contains(const Vec& x) const
    {
        const Vec d = x - cone.vertex;
        const double r = norm(d);
        if (r > h) return false;
        if (r == 0.0) return true;
        return dot(d, cone.axis) >= r * std::cos(cone.halfAngle) - 1e-12;
    }

    // Volume nodes (polar in 2D, spherical in 3D).
    std::vector<QuadPoint> volumeRule(int nr, int na) const
    {
        std::vector<QuadPoint> pts;
        const auto radial = quad::mapped(quad::gaussLegendre(nr), 0.0, h);
        if (dim() == 2) {
            const double t0 = angleOf(cone.axis);
            const double lo = t0 - cone.halfAngle, hi = t0 + cone.halfAngle;
            std::vector<double> edges{lo};
            if (support)
                for (double c : angularBreaks2D(*support, vertex(), lo, hi)) edges.push_back(c);
            edges.push_back(hi);
            for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
                const auto ang = quad::mapped(quad::gaussLegendre(na), edges[s], edges[s + 1]);
                for (std::size_t a = 0; a < ang.x.size(); ++a)
                    for (std::size_t i = 0; i < radial.x.size(); ++i)
                        pts.push_back({vertex() + radial.x[i] * unitAt(ang.x[a]), radial.w[i] * ang.w[a] * radial.x[i]});
            }
            return pts;
        }
        const auto [e1, e2] = geom::detail::orthoFrame(cone.axis);
        const auto polar = quad::mapped(quad::gaussLegendre(na), 0.0, cone.halfAngle);
        const auto az = quad::mapped(quad::gaussLegendre(2 * na), 0.0, 2 * pi);
        for (std::size_t p = 0; p < polar.x.size(); ++p)
            for (std::size_t q = 0; q < az.x.size(); ++q) {
                const double th = polar.x[p], ph = az.x[q];
                const Vec d = std::cos(th) * cone.axis + std::sin(th) * (std::cos(ph) * e1 + std::sin(ph) * e2);
                for (std::size_t i = 0; i < radial.x.size(); ++i) {
                    const double r = radial.x[i];
                    pts.push_back({vertex() + r * d, radial.w[i] * polar.w[p] * az.w[q] * r * r * std::sin(th)});
                }
            }
        return pts;
    }

    // Boundary nodes with outward normals.
    std::vector<QuadPoint> boundaryRule(int nr, int na) const
    {
        std::vector<QuadPoint> pts;
        const auto radial = quad::mapped(quad::gaussLegendre(nr), 0.0, h);
        if (dim() == 2) {
            const double t0 = angleOf(cone.axis);
            const double lo = t0 - cone.halfAngle, hi = t0 + cone.halfAngle;
            const Vec dlo = unitAt(lo), dhi = unitAt(hi);
            const Vec nlo{dlo[1], -dlo[0], 0.0}, nhi{-dhi[1], dhi[0], 0.0};
            for (std::size_t i = 0; i < radial.x.size(); ++i) {
                pts.push_back({vertex() + radial.x[i] * dlo, radial.w[i], nlo, 0});
                pts.push_back({vertex() + radial.x[i] * dhi, radial.w[i], nhi, 0});
            }
            std::vector<double> edges{lo};
            if (support)
                for (double c : angularBreaks2D(*support, vertex(), lo, hi)) edges.push_back(c);
            edges.push_back(hi);
            for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
                const auto ang = quad::mapped(quad::gaussLegendre(na), edges[s], edges[s + 1]);
                for (std::size_t a = 0; a < ang.x.size(); ++a)
                    pts.push_back({vertex() + h * unitAt(ang.x[a]), h * ang.w[a], unitAt(ang.x[a]), 1});
            }
            return pts;
        }
        const auto [e1, e2] = geom::detail::orthoFrame(cone.axis);
        const double ca = std::cos(cone.halfAngle), sa = std::sin(cone.halfAngle);
        const auto az = quad::mapped(quad::gaussLegendre(2 * na), 0.0, 2 * pi);
        for (std::size_t q = 0; q < az.x.size(); ++q) {
            const Vec radialDir = std::cos(az.x[q]) * e1 + std::sin(az.x[q]) * e2;
            const Vec d = ca * cone.axis + sa * radialDir;
            const Vec n = -sa * cone.axis + ca * radialDir;
            for (std::size_t i = 0; i < radial.x.size(); ++i)
                pts.push_back({vertex() + radial.x[i] * d, radial.w[i] * az.w[q] * radial.x[i] * sa, n, 0});
        }
        const auto polar = quad::mapped(quad::gaussLegendre(na), 0.0, cone.halfAngle);
        for (std::size_t p = 0; p < polar.x.size(); ++p)
            for (std::size_t q = 0; q < az.x.size(); ++q) {
                const double th = polar.x[p], ph = az.x[q];
                const Vec d = std::cos(th) * cone.axis + std::sin(th) * (std::cos(ph) * e1 + std::sin(ph) * e2);
                pts.push_back({vertex() + h * d, h * h * std::sin(th) * polar.w[p] * az.w[q], d, 1});
            }
        return pts;
    }

    // Length (2D) or area (3D) of the flat sides and of the cap.
    double flatMeasure() const
    {
        return dim() == 2 ? 2 * h : pi * h * h * std::sin(cone.halfAngle);
    }
    double capMeasure() const
    {
        return dim() == 2 ? 2 * cone.halfAngle * h : 2 * pi * h * h * (1 - std::cos(cone.halfAngle));
    }
};

inline void checkInsideGrid(const Grid& g, const TruncatedCone& Q)
{
    const Vec lo = g.origin, hi = g.upper();
    for (int a = 0; a < g.dim; ++a)
        if (Q.vertex()[a] - Q.h < lo[a] + 2 * g.h || Q.vertex()[a] + Q.h > hi[a] - 2 * g.h)
            throw DomainError("truncated cone escapes the grid");
}

// max |Delta_h u + k^2 u| / (k^2 max|u|) over nodes of the region.
inline double localHelmholtzResidual(const WaveField& u, const std::function<bool(const Vec&)>& region)
{
    const Grid& g = u.grid;
    const double k2 = u.k * u.k, ih2 = 1.0 / (g.h * g.h);
    double worst = 0.0, scale = 0.0;
    g.forEach([&](std::size_t idx, const Vec& x) {
        if (!region(x)) return;
        const auto c = g.unindex(idx);
        cplx lap = -2.0 * g.dim * u[idx];
        for (int a = 0; a < g.dim; ++a) {
            auto p = c, m = c;
            ++p[a];
            --m[a];
            lap += u[g.index(p[0], p[1], p[2])] + u[g.index(m[0], m[1], m[2])];
        }
        worst = std::max(worst, std::abs(lap * ih2 + k2 * u[idx]));
        scale = std::max(scale, std::abs(u[idx]));
    });
    return scale > 0.0 ? worst / (k2 * scale) : 0.0;
}

// ---------------------------------------------------------------------------
// Green orthogonality identity

struct OrthogonalityReport {
    cplx volumeTerm{0.0, 0.0};     // k^2 ∫_{Q_h} V u0 u'
    cplx boundaryTerm{0.0, 0.0};   // ∮ (u0 ∂ν(u' - u) - (u' - u) ∂ν u0)
    double mismatch = 0.0;
    double relativeMismatch = 0.0;
    double h = 0.0;
    double residualPrime = 0.0;    // local Helmholtz residual of u' on Q_h
};

struct QuadratureOrder {
    int radial = 48;
    int angular = 48;
};

inline constexpr double kPrimeResidualTol = 5e-2;

// V is the contrast of u (total field); u' is a total field whose contrast
// vanishes on Q_h; u0 is a CGO for V.
inline OrthogonalityReport checkOrthogonality(const ContrastField& V, const solver::ScatteringSolution& solTotal,
                                              const WaveField& uPrime, const cgo::CgoSolution& u0, const PolyCone& Qcone,
                                              double h, QuadratureOrder order = {})
{
    if (Qcone.kind != geom::ConeKind::Spherical) throw DomainError("orthogonality region needs a spherical cone");
    const Grid& g = solTotal.grid();
    if (!g.sameAs(uPrime.grid) || !g.sameAs(u0.u0.grid)) throw DomainError("fields live on different grids");
    TruncatedCone Q{Qcone, h, V.polytope};
    checkInsideGrid(g, Q);
    OrthogonalityReport rep;
    rep.h = h;
    rep.residualPrime = localHelmholtzResidual(uPrime, [&](const Vec& x) { return Q.contains(x); });
    if (rep.residualPrime > kPrimeResidualTol) throw DomainError("u' is not a Helmholtz solution on the truncated cone");

    const double k2 = solTotal.k() * solTotal.k();
    const FieldProbe uP(solTotal.total), uPr(uPrime);
    const CgoProbe c0(u0);
    for (const auto& q : Q.volumeRule(order.radial, order.angular)) {
        const cplx v = V(q.x);
        if (v == cplx{0.0, 0.0}) continue;
        rep.volumeTerm += q.w * v * c0.value(q.x) * uPr.value(q.x);
    }
    rep.volumeTerm *= k2;
    for (const auto& q : Q.boundaryRule(order.radial, order.angular)) {
        const cplx w = uPr.value(q.x) - uP.value(q.x);
        const CVec gPr = uPr.gradient(q.x), gP = uP.gradient(q.x);
        const cplx dw = dotNormal(gPr, q.normal) - dotNormal(gP, q.normal);
        rep.boundaryTerm += q.w * (c0.value(q.x) * dw - w * dotNormal(c0.gradient(q.x), q.normal));
    }
    rep.mismatch = std::abs(rep.volumeTerm - rep.boundaryTerm);
    rep.relativeMismatch = std::abs(rep.volumeTerm) > 0.0 ? rep.mismatch / std::abs(rep.volumeTerm) : rep.mismatch;
    return rep;
}

// ---------------------------------------------------------------------------
// Estimate budget

// Cone of P at vertex i, generators along the incident edges.
inline PolyCone vertexCone(const Polytope& P, std::size_t i)
{
    return PolyCone::polyhedral(P.vertex(i), P.edgeDirectionsAt(i), P.dim());
}

inline std::size_t vertexIndex(const Polytope& P, const Vec& x, double tol = 1e-12)
{
    for (std::size_t i = 0; i < P.size(); ++i)
        if (dist(P.vertex(i), x) <= tol) return i;
    throw DomainError("point is not a vertex of the polytope");
}

// Opening angle (2D) or solid angle (3D, trihedral) of a polyhedral cone.
inline double coneMeasure(const PolyCone& K)
{
    if (K.dim == 2) return K.openingAngle();
    const auto& g = K.generators;
    if (g.size() != 3) throw DomainError("solid angle implemented for trihedral cones");
    const double num = std::abs(dot(g[0], cross(g[1], g[2])));
    const double den = 1 + dot(g[0], g[1]) + dot(g[1], g[2]) + dot(g[2], g[0]);
    return 2 * std::atan2(num, den);
}

inline constexpr double kBudgetC = 1.0 / 1.1;

struct EstimateBudget {
    std::map<std::string, double> terms;   // tail, hoelder, remainder, boundaryNear, boundarySphere
    double lhs = 0.0;
    double tau = 0.0, h = 0.0, delta = 0.0, m = 0.0;
    double C = kBudgetC;
    // Measured witnesses.
    double hoelderPhi = 0.0;     // sup |phi(x) - phi(x_c)| / |x - x_c|^alpha
    double lipschitzPrime = 0.0; // sup |u'(x) - u'(x_c)| / |x - x_c|
    double supFactor = 0.0;      // sup |phi| sup |u'|
    double psiNorm = 0.0;        // ||psi||_{L^p(P_h)}
    double p = 2.0;
    cplx uPrimeAtVertex{0.0, 0.0};

    double total() const
    {
        double s = 0.0;
        for (const auto& [_, v] : terms) s += v;
        return s;
    }
    bool holds() const { return C * lhs <= total(); }
};

inline double lpOnRegion(const WaveField& u, double p, const std::function<bool(const Vec&)>& region)
{
    const Grid& g = u.grid;
    double acc = 0.0;
    const bool inf = !std::isfinite(p);
    g.forEach([&](std::size_t i, const Vec& x) {
        if (!region(x)) return;
        const double a = std::abs(u[i]);
        if (inf) acc = std::max(acc, a);
        else acc += std::pow(a, p) * g.cellVolume();
    });
    return inf ? acc : std::pow(acc, 1.0 / p);
}

// Right-hand terms of the truncated-cone estimate, N = 0. solA carries V;
// uPrime is the other total field; Qcone decides the truncated region.
inline EstimateBudget assembleBudget(const ContrastField& V, const solver::ScatteringSolution& solA, const WaveField& uPrime,
                                     const cgo::CgoSolution& u0, const PolyCone& Qcone, double h, double deltaEps, double m,
                                     QuadratureOrder order = {})
{
    if (!V.polytope) throw DomainError("budget needs a polytopal contrast");
    const Polytope& P = *V.polytope;
    const Vec xc = Qcone.vertex;
    const std::size_t vi = vertexIndex(P, xc);
    const PolyCone Pcone = vertexCone(P, vi);
    for (const auto& gdir : Pcone.generators)
        if (dot(gdir, Qcone.axis) < std::cos(Qcone.halfAngle) - 1e-12) throw DomainError("polytope cone leaves the decay cone");
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (i == vi) continue;
        if (dist(P.vertex(i), xc) <= h) throw DomainError("truncation radius reaches another vertex");
    }

    const auto& dir = u0.faddeev.dir;
    const int n = P.dim();
    const double k2 = solA.k() * solA.k();
    const double a = dir.delta0 * dir.tau;
    const double omega = coneMeasure(Pcone);
    const FieldProbe uPr(uPrime), uA(solA.total);
    const CgoProbe c0(u0);

    EstimateBudget b;
    b.tau = dir.tau;
    b.h = h;
    b.delta = deltaEps;
    b.m = m;
    b.uPrimeAtVertex = uPr.value(xc);
    if (std::abs(b.uPrimeAtVertex) < 1e-12) throw DomainError("total wave vanishes at the vertex");
    const cplx phiC = V.phi(xc);

    TruncatedCone Q{Qcone, h, P};
    double supPhi = 0.0, supU = 0.0;
    for (const auto& q : Q.volumeRule(order.radial, order.angular)) {
        if (!V.inside(q.x)) continue;
        const double r = dist(q.x, xc);
        const cplx ph = V.phi(q.x), up = uPr.value(q.x);
        supPhi = std::max(supPhi, std::abs(ph));
        supU = std::max(supU, std::abs(up));
        if (r <= 0.0) continue;
        b.hoelderPhi = std::max(b.hoelderPhi, std::abs(ph - phiC) / std::pow(r, V.alpha));
        b.lipschitzPrime = std::max(b.lipschitzPrime, std::abs(up - b.uPrimeAtVertex) / r);
    }
    b.supFactor = supPhi * supU;
    b.p = u0.faddeev.exponents.p;
    b.psiNorm = lpOnRegion(u0.faddeev.psi, b.p, [&](const Vec& x) { return V.inside(x) && dist(x, xc) <= h; });

    using specfun::lowerIncompleteGamma;
    using specfun::upperIncompleteGamma;
    const double alpha = V.alpha;
    b.terms["tail"] = std::abs(phiC * b.uPrimeAtVertex) * omega * std::pow(a, -n) * upperIncompleteGamma(n, a * h);
    b.terms["hoelder"] = b.hoelderPhi * std::abs(b.uPrimeAtVertex) * omega * std::pow(a, -n - alpha) * lowerIncompleteGamma(n + alpha, a * h)
                         + supPhi * b.lipschitzPrime * omega * std::pow(a, -n - 1.0) * lowerIncompleteGamma(n + 1.0, a * h);
    const double pp = std::isfinite(b.p) ? b.p / (b.p - 1.0) : 1.0;
    b.terms["remainder"] = b.supFactor * std::pow(omega * std::pow(pp * a, -n) * lowerIncompleteGamma(n, pp * a * h), 1.0 / pp) * b.psiNorm;

    // Boundary pieces: measure x sup(|u0||grad w| + |grad u0||w|) over the quadrature nodes.
    double flat = 0.0, cap = 0.0;
    for (const auto& q : Q.boundaryRule(order.radial, order.angular)) {
        const cplx w = uPr.value(q.x) - uA.value(q.x);
        CVec gw;
        const CVec g1 = uPr.gradient(q.x), g2 = uA.gradient(q.x);
        for (int d = 0; d < 3; ++d) gw[d] = g1[d] - g2[d];
        const double s = std::abs(c0.value(q.x)) * cabs(gw) + cabs(c0.gradient(q.x)) * std::abs(w);
        (q.part == 0 ? flat : cap) = std::max(q.part == 0 ? flat : cap, s);
    }
    b.terms["boundaryNear"] = flat * Q.flatMeasure() / k2;
    b.terms["boundarySphere"] = cap * Q.capMeasure() / k2;

    b.lhs = std::abs(phiC * cgo::coneLaplace(Pcone, dir).value * b.uPrimeAtVertex);
    return b;
}

// ---------------------------------------------------------------------------
// Choice of tau

struct TauChoice {
    double raw = 0.0;       // closed form
    double tau = 0.0;       // after clamping
    bool clamped = false;
};

// tau_e = (1/(h^{n+5} delta))^{1/(m+n+5)}, clamped below by max(tau0, C0, k).
inline TauChoice optimizeTau(double h, double delta, double m, int n, double tau0 = 0.0, double C0 = 1.0, double k = 0.0)
{
    if (!(h > 0.0 && h <= 1.0)) throw DomainError("h must lie in (0, 1]");
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (!(m > 0.0)) throw DomainError("m must be positive");
    TauChoice t;
    t.raw = std::exp(-((n + 5) * std::log(h) + std::log(delta)) / (m + n + 5));
    const double floor = std::max({tau0, C0, k});
    t.clamped = t.raw < floor;
    t.tau = std::max(t.raw, floor);
    return t;
}

// The two competing terms tau^{-m} and (tau h)^{n+5} delta; equal at tau_e.
inline std::pair<double, double> tauBalanceTerms(double tau, double h, double delta, double m, int n)
{
    return {std::pow(tau, -m), std::pow(tau * h, n + 5) * delta};
}

inline double smoothnessExponent(double alpha, double beta) { return std::min({1.0, alpha, beta}); }

// ---------------------------------------------------------------------------
// Support-stability experiment

struct StabilityRecord {
    std::string label;
    double offset = 0.0;
    double epsilon = 0.0;
    double hausdorff = 0.0;
    double tauUsed = 0.0;
    bool tauClamped = false;
    double boundValue = 0.0;          // C (ln ln (S/eps))^{-gamma} with fitted C
    double lnlnRatio = 0.0;
    std::string regime;
    double rellichBound = 0.0;
    double rellichMeasured = 0.0;
    bool rellichHolds = false;
    double orthogonalityMismatch = 0.0;
    std::optional<EstimateBudget> budget;
    double infAbsTotal = 0.0;
    bool withinBound = false;
    std::string error;
};

struct SupportSweepConfig {
    double k = 2.0;
    Vec omega{1, 0, 0};
    double contrast = 0.3;
    std::vector<double> offsets{0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2};
    double gridLo = -1.8;
    int gridN = 720;
    double tol = 1e-8;
    double R = 1.0;
    double lambda = 0.25;
    double coneHalfAngle = 3 * pi / 8;
    double faddeevS = 0.49;
    unsigned long long seed = 1;
    int calibrationTrials = 400;
    std::optional<rellich::Calibration> calibration;
};

struct SupportSweepResult {
    std::vector<StabilityRecord> records;
    double S = 1.0;
    double T = 1.0;
    double gamma = 0.0;
    double m = 0.0;
    double fittedC = 0.0;
    double slope = 0.0;           // d ln h / d ln lnln(S/eps)
    double rellichSlope = 0.0;    // d ln bound / d ln lnln(S/eps)
    rellich::Calibration calibration;
};

// Least-squares slope of y against x.
inline double fitSlope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

inline Polytope shrunkSquare(double t) { return Polytope::rectangle(-0.5, -0.5, 0.5 - t, 0.5 - t); }

// Square [-1/2, 1/2]^2 against copies shrunk at the upper-right corner.
inline SupportSweepResult runSupportStabilityExperiment(const SupportSweepConfig& cfg)
{
    SupportSweepResult out;
    const int n = 2;
    const Grid grid = Grid::cells(n, {cfg.gridLo, cfg.gridLo, 0.0}, -2.0 * cfg.gridLo / cfg.gridN, cfg.gridN);
    const Polytope P = Polytope::rectangle(-0.5, -0.5, 0.5, 0.5);
    const auto V = ContrastField::constant(P, cfg.contrast);
    out.calibration = cfg.calibration ? *cfg.calibration : rellich::calibrate(cfg.k, n, cfg.seed, cfg.calibrationTrials);
    const auto exps = cgo::faddeevExponents(n, cfg.faddeevS, cgo::defaultIntegrability(n));
    out.m = smoothnessExponent(V.alpha, exps.beta);
    out.gamma = out.m / (2.0 * (n + 5) * (n + 5));

    const auto solA = solver::solveForward(V, cfg.k, cfg.omega, grid, cfg.tol);
    const Vec xc{0.5, 0.5, 0.0};
    const auto Qcone = PolyCone::spherical(xc, {-1, -1, 0}, cfg.coneHalfAngle, n);
    const auto curve = cgo::lowerBoundCurve(vertexCone(P, vertexIndex(P, xc)), Qcone, cfg.k, {1, 2, 4, 8, 16, 32, 64});

    struct Pair {
        std::optional<solver::ScatteringSolution> sol;
        ContrastField V;
        Polytope Pp;
    };
    std::vector<Pair> pairs;
    double S = std::max(1.0, fields::h2Surrogate(solA.scattered, fields::Region::ball({0, 0, 0}, 1.5 * cfg.R)));
    double T = 1.0;
    for (double t : cfg.offsets) {
        StabilityRecord rec;
        rec.offset = t;
        rec.label = "square-shrunk-" + std::to_string(t);
        const Polytope Pp = shrunkSquare(t);
        auto Vp = ContrastField::constant(Pp, cfg.contrast);
        Pair pr{std::nullopt, Vp, Pp};
        try {
            pr.sol = solver::solveForward(Vp, cfg.k, cfg.omega, grid, cfg.tol);
            const WaveField w = solA.total - pr.sol->total;
            T = std::max(T, rellich::hoelderSurrogate(w, 0.5, fields::Region::ball({0, 0, 0}, 1.5 * cfg.R)));
            rec.infAbsTotal = std::min(solA.infAbsTotal, pr.sol->infAbsTotal);
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        out.records.push_back(rec);
        pairs.push_back(std::move(pr));
    }
    out.S = S;
    out.T = T;

    rellich::RellichParams rp;
    rp.calibration = out.calibration;
    rp.hull = P;
    rp.R = cfg.R;
    rp.lambda = cfg.lambda;
    rp.A = 2 + cfg.lambda;
    rp.S = S;
    rp.T = T;

    std::vector<double> xs, ys, bs;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto& rec = out.records[i];
        if (!pairs[i].sol) continue;
        const auto& solB = *pairs[i].sol;
        try {
            const auto ffDiff = solA.farField - solB.farField;
            rec.epsilon = ffDiff.l2Norm();
            rec.hausdorff = geom::hausdorffDistance(P, pairs[i].Pp);
            const auto rr = rellich::quantitativeRellich(ffDiff, solA, solB, rp);
            rec.rellichBound = rr.boundaryBound;
            rec.rellichMeasured = rr.measuredBoundary;
            rec.rellichHolds = rr.measuredBoundary <= rr.boundaryBound;
            rec.regime = rellich::regimeName(rr.regime);
            rec.lnlnRatio = rr.lnlnRatio;

            // Truncation radius: half the distance from the corner to P', on the grid scale.
            const double hb = std::min(0.1, 0.5 * pairs[i].Pp.distanceTo(xc));
            const double delta = std::max(rr.boundaryBound, std::numeric_limits<double>::min());
            const auto tc = optimizeTau(hb, delta, out.m, n, curve.tau0, 1.0, cfg.k);
            rec.tauUsed = tc.tau;
            rec.tauClamped = tc.clamped;
            const auto dir = cgo::buildDirection(Qcone, cfg.k, tc.tau);
            const auto cg = cgo::buildCgo(V, cfg.k, dir, grid, {}, cfg.faddeevS);
            rec.tauUsed = cg.faddeev.dir.tau;
            rec.budget = assembleBudget(V, solA, solB.total, cg, Qcone, hb, delta, out.m);
            rec.orthogonalityMismatch = checkOrthogonality(V, solA, solB.total, cg, Qcone, hb).relativeMismatch;
            if (rec.lnlnRatio > 0.0) {
                xs.push_back(std::log(rec.lnlnRatio));
                ys.push_back(std::log(rec.hausdorff));
                bs.push_back(std::log(rec.rellichBound));
            }
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    }
    // ln h <= ln C - gamma ln lnln(S/eps): smallest C with gamma fixed, keep the free slope too.
    if (!xs.empty()) {
        double s = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < xs.size(); ++i) s = std::max(s, ys[i] + out.gamma * xs[i]);
        out.fittedC = std::exp(s) * (1 + 1e-12);
        out.slope = fitSlope(xs, ys);
        out.rellichSlope = fitSlope(xs, bs);
    }
    for (auto& rec : out.records) {
        if (!rec.error.empty() || rec.lnlnRatio <= 0.0) continue;
        rec.boundValue = out.fittedC * std::pow(rec.lnlnRatio, -out.gamma);
        rec.withinBound = rec.hausdorff <= rec.boundValue;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Corner lower bound

struct CornerScene {
    std::string label;
    ContrastField V;
    Vec corner{0, 0, 0};
    double ell = 1.0;      // lower bound on vertex-to-edge distances, at most 1
    bool admissible = true;
};

struct CornerRecord {
    std::string label;
    double ffNorm = 0.0;
    double phiAtCorner = 0.0;
    double logBound = 0.0;   // ln of S / exp exp(C ell^{-2/gamma} |phi|^{-2-2/((n+5) gamma)})
    double floorRatio = 0.0;
    bool aboveFloor = false;
    bool admissible = true;
    std::string error;
};

struct CornerConfig {
    double k = 2.0;
    Vec omega{1, 0, 0};
    double tol = 1e-8;
    double faddeevS = 0.49;
    double floorFactor = 10.0;
};

struct CornerResult {
    std::vector<CornerRecord> records;
    double noiseFloor = 0.0;
    double zeroNorm = 0.0;
    double fittedC = 0.0;
    double gamma = 0.0;
    double S = 1.0;
};

// max(||A|| for V = 0, tol |gamma_n| k^2 |grid| sqrt|S^{n-1}|).
inline double noiseFloor(const Grid& g, double k, double tol, double zeroNorm)
{
    double vol = 1.0;
    for (int a = 0; a < g.dim; ++a) vol *= g.extent[a] * g.h;
    const double sphere = g.dim == 2 ? 2 * pi : 4 * pi;
    return std::max(zeroNorm, tol * std::abs(solver::farFieldConstant(g.dim, k)) * k * k * vol * std::sqrt(sphere));
}

// Exponent of the double exponential, without C: ell^{-2/gamma} |phi|^{-2-2/((n+5)gamma)}, in logs.
inline double cornerLogInner(double ell, double phi, double gamma, int n)
{
    return (-2.0 / gamma) * std::log(ell) + (-2.0 - 2.0 / ((n + 5) * gamma)) * std::log(phi);
}

inline CornerResult runCornerLowerBoundExperiment(const std::vector<CornerScene>& scenes, const Grid& grid, const CornerConfig& cfg)
{
    CornerResult out;
    const int n = grid.dim;
    const auto exps = cgo::faddeevExponents(n, cfg.faddeevS, cgo::defaultIntegrability(n));
    const auto zero = solver::solveForward(ContrastField::zero(), cfg.k, cfg.omega, grid, cfg.tol);
    out.zeroNorm = zero.farField.l2Norm();
    out.noiseFloor = noiseFloor(grid, cfg.k, cfg.tol, out.zeroNorm);
    std::vector<double> inner;
    for (const auto& sc : scenes) {
        CornerRecord rec;
        rec.label = sc.label;
        rec.admissible = sc.admissible;
        try {
            const auto sol = solver::solveForward(sc.V, cfg.k, cfg.omega, grid, cfg.tol);
            rec.ffNorm = sol.farField.l2Norm();
            rec.phiAtCorner = std::abs(sc.V.phi(sc.corner));
            rec.floorRatio = out.noiseFloor > 0 ? rec.ffNorm / out.noiseFloor : std::numeric_limits<double>::infinity();
            rec.aboveFloor = rec.ffNorm >= cfg.floorFactor * out.noiseFloor;
            out.S = std::max(out.S, rec.ffNorm);
            const double m = smoothnessExponent(sc.V.alpha, exps.beta);
            const double gamma = m / ((n + 5.0) * (n + 5.0));
            out.gamma = gamma;
            inner.push_back(rec.phiAtCorner > 0 ? cornerLogInner(sc.ell, rec.phiAtCorner, gamma, n) : std::numeric_limits<double>::infinity());
        } catch (const std::exception& e) {
            rec.error = e.what();
            inner.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        out.records.push_back(rec);
    }
    // Smallest C with bound <= measured for every admissible scene:
    // S exp(-exp(C e^{inner})) <= ff  <=>  ln C >= ln ln ln(S/ff) - inner. Use S = e^e max ff.
    out.S *= std::exp(std::exp(1.0));
    double logC = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        const auto& r = out.records[i];
        if (!r.error.empty() || !r.admissible || !(r.ffNorm > 0) || !std::isfinite(inner[i])) continue;
        logC = std::max(logC, std::log(std::log(std::log(out.S / r.ffNorm))) - inner[i]);
    }
    out.fittedC = std::isfinite(logC) ? std::exp(logC) : 0.0;
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        auto& r = out.records[i];
        if (!r.error.empty() || !std::isfinite(inner[i]) || !std::isfinite(logC)) {
            r.logBound = -std::numeric_limits<double>::infinity();
            continue;
        }
        // ln of S exp(-exp(C e^{inner})).
        r.logBound = std::log(out.S) - std::exp(std::exp(logC + inner[i]));
    }
    return out;
}

// Bundled corner ladder on the unit square probed at (1/2, 1/2).
inline std::vector<CornerScene> defaultCornerLadder()
{
    const Polytope P = Polytope::rectangle(-0.5, -0.5, 0.5, 0.5);
    std::vector<CornerScene> s;
    for (double phi : {0.02, 0.05, 0.1, 0.2}) s.push_back({"square-phi-" + std::to_string(phi), ContrastField::constant(P, phi), {0.5, 0.5, 0}, 1.0, true});
    // Sign-changing affine contrast, nonzero at every vertex.
    s.push_back({"square-sign-changing", ContrastField::affine(P, 0.05, {0.25, 0.0, 0.0}), {0.5, 0.5, 0}, 1.0, true});
    s.push_back({"square-sign-changing-diag", ContrastField::affine(P, 0.0, {0.2, 0.1, 0.0}), {0.5, 0.5, 0}, 1.0, true});
    return s;
}

} // namespace polyscat::stability
