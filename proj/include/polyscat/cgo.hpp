#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fft.hpp"
#include "fields.hpp"
#include "geom.hpp"
#include "quadrature.hpp"
#include "vec.hpp"

namespace polyscat::cgo {

using polyscat::operator-;
using polyscat::operator+;

using fields::Grid;
using fields::WaveField;
using geom::PolyCone;

struct CgoDirection {
    int dim = 2;
    CVec zeta{};
    double tau = 0.0;
    double k = 0.0;
    CVec rho{};
    Vec vertex{0, 0, 0};
    double alphaPrime = 0.0;   // half-angle of the decay cone
    double delta0 = 1.0;       // cos(alphaPrime)

    Vec realZeta() const { return realPart(zeta); }
    Vec imagZeta() const { return imagPart(zeta); }
    double imRhoNorm() const { return std::sqrt(tau * tau + k * k); }
};

// rho = tau Re(zeta) + i sqrt(tau^2 + k^2) Im(zeta).
inline CVec rhoOnCurve(const CVec& zeta, double tau, double k)
{
    const Vec re = realPart(zeta), im = imagPart(zeta);
    return toComplex(tau * re, std::sqrt(tau * tau + k * k) * im);
}

// Unit vector orthogonal to the axis. 2D: axis rotated by +pi/2. 3D: the
// coordinate axis least aligned with it (lowest index on ties), projected.
inline Vec orthogonalUnit(const Vec& axis, int dim)
{
    if (dim == 2) return {-axis[1], axis[0], 0.0};
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(axis[i]) < std::abs(axis[best]) - 1e-12) best = i;
    Vec e{0, 0, 0};
    e[best] = 1.0;
    return normalized(e - dot(e, axis) * axis);
}

inline CgoDirection buildDirection(const PolyCone& Qcone, double k, double tau)
{
    if (Qcone.kind != geom::ConeKind::Spherical) throw DomainError("decay cone must be spherical");
    if (!(Qcone.halfAngle < pi / 2) || !(Qcone.halfAngle >= 0.0)) throw DomainError("decay cone half-angle must be below pi/2");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (!(k >= 0.0)) throw DomainError("wavenumber must be nonnegative");
    CgoDirection d;
    d.dim = Qcone.dim;
    d.tau = tau;
    d.k = k;
    d.vertex = Qcone.vertex;
    d.alphaPrime = Qcone.halfAngle;
    d.delta0 = std::cos(Qcone.halfAngle);
    const Vec axis = normalized(Qcone.axis);
    d.zeta = toComplex(-axis, orthogonalUnit(axis, d.dim));
    d.rho = rhoOnCurve(d.zeta, tau, k);
    return d;
}

struct ConeTransform {
    PolyCone cone;
    cplx value{};
    std::string formula;
};

// Integral over the cone of exp(z.(x - vertex)) for complex z, closed form.
inline ConeTransform coneLaplace(const PolyCone& P, const CVec& z)
{
    if (P.kind != geom::ConeKind::Polyhedral) throw DomainError("cone transform needs a polyhedral cone");
    ConeTransform t;
    t.cone = P;
    if (P.dim == 2) {
        const Vec& g0 = P.generators[0];
        const Vec g0perp{-g0[1], g0[0], 0.0};
        const cplx xi1 = dot(z, g0), xi2 = dot(z, g0perp);
        const double a = 1.0 / std::tan(P.openingAngle());
        if (!(xi1.real() < 0.0) || !((xi2 + a * xi1).real() < 0.0))
            throw DomainError("cone transform diverges for this direction");
        t.value = 1.0 / (xi1 * (xi2 + a * xi1));
        t.formula = "1/(xi1*(xi2+a*xi1))";
        return t;
    }
    if (P.generators.size() != 3) throw DomainError("3D cone transform needs a simplicial cone");
    const auto& g = P.generators;
    const double det = dot(g[0], cross(g[1], g[2]));
    if (std::abs(det) < 1e-14) throw DomainError("degenerate 3D cone");
    cplx prod = 1.0;
    for (int j = 0; j < 3; ++j) {
        const cplx xi = dot(z, g[j]);
        if (!(xi.real() < 0.0)) throw DomainError("cone transform diverges for this direction");
        prod *= xi;
    }
    // Orthonormal generators give -1/(xi1 xi2 xi3); otherwise scale by |det|.
    t.value = -std::abs(det) / prod;
    t.formula = "-1/(xi1*xi2*xi3)";
    return t;
}

inline ConeTransform coneLaplace(const PolyCone& P, const CgoDirection& dir) { return coneLaplace(P, dir.rho); }

// Quadrature cross-check of coneLaplace: the radial integral is done in closed
// form, the angular one (2D arc, 3D generator simplex) by Gauss-Legendre.
inline cplx coneLaplaceQuadrature(const PolyCone& P, const CVec& z, int nodes = 64)
{
    if (P.kind != geom::ConeKind::Polyhedral) throw DomainError("cone transform needs a polyhedral cone");
    const auto rule = quad::gaussLegendre(nodes);
    cplx sum = 0.0;
    if (P.dim == 2) {
        const Vec& g0 = P.generators[0];
        const double t0 = std::atan2(g0[1], g0[0]);
        const auto ang = quad::mapped(rule, t0, t0 + P.openingAngle());
        for (std::size_t a = 0; a < ang.x.size(); ++a) {
            const cplx s = dot(z, Vec{std::cos(ang.x[a]), std::sin(ang.x[a]), 0.0});
            if (!(s.real() < 0.0)) throw DomainError("cone transform diverges for this direction");
            sum += ang.w[a] / (s * s);   // int_0^inf e^{r s} r dr
        }
        return sum;
    }
    if (P.generators.size() != 3) throw DomainError("3D cone transform needs a simplicial cone");
    const auto& g = P.generators;
    const double det = std::abs(dot(g[0], cross(g[1], g[2])));
    // x = s (l1 g1 + l2 g2 + l3 g3), l on the unit simplex; dx = |det| s^2 ds dl.
    // Collapsed coordinates l1 = u, l2 = (1 - u) v with Jacobian (1 - u).
    const auto unit = quad::mapped(rule, 0.0, 1.0);
    for (std::size_t i = 0; i < unit.x.size(); ++i)
        for (std::size_t j = 0; j < unit.x.size(); ++j) {
            const double u = unit.x[i], v = unit.x[j];
            const double l1 = u, l2 = (1 - u) * v, l3 = 1 - l1 - l2;
            const cplx s = l1 * dot(z, g[0]) + l2 * dot(z, g[1]) + l3 * dot(z, g[2]);
            if (!(s.real() < 0.0)) throw DomainError("cone transform diverges for this direction");
            sum += unit.w[i] * unit.w[j] * (1 - u) * (-2.0 / (s * s * s));   // int_0^inf e^{r s} r^2 dr
        }
    return det * sum;
}

struct LowerBoundCurve {
    std::vector<double> taus;
    std::vector<double> values;        // |tau^n L(rho(tau))|
    std::vector<double> deviations;    // |tau^n L(rho(tau)) - L(zeta)|
    double limit = 0.0;                // |L(zeta)|
    double tau0 = 0.0;
    double c = 0.0;
};

// tau^n L(rho(tau)) = L(rho(tau)/tau) by homogeneity of degree -n.
inline LowerBoundCurve lowerBoundCurve(const PolyCone& P, const PolyCone& Qcone, double k, const std::vector<double>& tauGrid)
{
    if (tauGrid.empty()) throw DomainError("empty tau grid");
    if (norm(P.vertex - Qcone.vertex) > 1e-12) throw DomainError("cones must share a vertex");
    for (const auto& g : P.generators)
        if (std::acos(std::clamp(dot(g, normalized(Qcone.axis)), -1.0, 1.0)) > Qcone.halfAngle + 1e-12)
            throw DomainError("polyhedral cone is not inside the decay cone");
    LowerBoundCurve out;
    const auto dir0 = buildDirection(Qcone, k, 1.0);
    const cplx L0 = coneLaplace(P, dir0.zeta).value;
    out.limit = std::abs(L0);
    for (double tau : tauGrid) {
        const CVec r = rhoOnCurve(dir0.zeta, tau, k);
        const CVec scaled{r[0] / tau, r[1] / tau, r[2] / tau};
        const cplx v = coneLaplace(P, scaled).value;
        out.taus.push_back(tau);
        out.values.push_back(std::abs(v));
        out.deviations.push_back(std::abs(v - L0));
    }
    // tau0: first grid point from which every later value stays above half the limit.
    std::size_t start = out.values.size();
    for (std::size_t i = out.values.size(); i-- > 0;) {
        if (out.values[i] < 0.5 * out.limit) break;
        start = i;
    }
    if (start == out.values.size()) throw NumericalError("no plateau on the tau grid");
    out.tau0 = out.taus[start];
    out.c = std::numeric_limits<double>::infinity();
    for (std::size_t i = start; i < out.values.size(); ++i) out.c = std::min(out.c, out.values[i]);
    return out;
}

// Exponents for the remainder estimate: ||psi||_p <~ |Im rho|^{-(n/p + beta)}.
struct FaddeevExponents {
    int caseIndex = 0;
    double p = 2.0;        // infinity in case 1
    double beta = 0.0;
    double decay = 0.0;    // n/p + beta = 2 + n/r' - n/r
};

inline double defaultIntegrability(int n) { return 2.0 * (n + 1) / (n + 3); }

inline FaddeevExponents faddeevExponents(int n, double s, double r)
{
    if (!(r > 1.0 && r < 2.0)) throw DomainError("integrability index must lie in (1, 2)");
    const double rp = r / (r - 1.0);
    const double gap = 1.0 / r - 1.0 / rp;
    if (gap < 2.0 / (n + 1) - 1e-12 || gap >= 2.0 / n) throw DomainError("integrability index outside the admissible range");
    FaddeevExponents e;
    e.decay = 2.0 + n / rp - n / r;
    const double sCrit = n / rp;
    if (s > sCrit) {
        e.caseIndex = 1;
        e.p = std::numeric_limits<double>::infinity();
        e.beta = e.decay;
    } else if (s == sCrit) {
        e.caseIndex = 2;
        // Any 1/p below 2/n + 1/r' - 1/r works; take half the bound.
        const double invP = 0.5 * (2.0 / n + 1.0 / rp - 1.0 / r);
        e.p = 1.0 / invP;
        e.beta = e.decay - n * invP;
    } else if (s > n / r - 2.0) {
        e.caseIndex = 3;
        const double nOverP = n / rp - s;
        e.p = n / nOverP;
        e.beta = e.decay - nOverP;
    } else {
        throw DomainError("smoothness index gives no remainder decay");
    }
    return e;
}

inline double lpNorm(const WaveField& u, double p)
{
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : u.values) m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (const auto& v : u.values) s += std::pow(std::abs(v), p);
    return std::pow(s * u.grid.cellVolume(), 1.0 / p);
}

struct FaddeevOptions {
    int padFactor = 2;
    double tol = 1e-10;
    int maxIter = 500;
    double contractionGate = 0.9;
    double singularityFloor = 1e-8;
};

struct FaddeevResult {
    WaveField psi;
    CgoDirection dir;       // tau may differ from the input after a perturbation
    bool tauPerturbed = false;
    int iterations = 0;
    double contraction = 0.0;
    double normP = 0.0;
    FaddeevExponents exponents;
};

namespace detail {

// Periodic inverse of (Delta + 2 rho.grad) on the padded box, zero mode dropped.
class FaddeevGreen {
public:
    FaddeevGreen(const Grid& grid, const CVec& rho, int pad) : grid_(grid), rho_(rho)
    {
        const int n = grid.dim;
        ext_ = {pad * grid.extent[0], pad * grid.extent[1], n == 3 ? pad * grid.extent[2] : 1};
        std::vector<int> dims;
        for (int a = n - 1; a >= 0; --a) dims.push_back(ext_[a]);
        plan_ = std::make_unique<FftPlan>(dims);
        symbolInv_.assign(plan_->size(), cplx{0.0, 0.0});
        minSymbol_ = std::numeric_limits<double>::infinity();
        for (int l = 0; l < ext_[2]; ++l)
            for (int j = 0; j < ext_[1]; ++j)
                for (int i = 0; i < ext_[0]; ++i) {
                    const std::array<int, 3> m{i, j, l};
                    Vec xi{0, 0, 0};
                    bool zero = true;
                    for (int a = 0; a < n; ++a) {
                        const int f = m[a] <= ext_[a] / 2 ? m[a] : m[a] - ext_[a];
                        xi[a] = 2.0 * pi * f / (ext_[a] * grid.h);
                        zero = zero && f == 0;
                    }
                    if (zero) continue;
                    const cplx sym = -dot(xi, xi) + 2.0 * cplx{0.0, 1.0} * dot(rho, xi);
                    minSymbol_ = std::min(minSymbol_, std::abs(sym));
                    symbolInv_[idx(i, j, l)] = 1.0 / sym;
                }
    }

    double minSymbol() const { return minSymbol_; }

    // out = G g on the original grid, g extended by zero.
    void apply(const std::vector<cplx>& g, std::vector<cplx>& out) const
    {
        cplx* d = plan_->data();
        std::fill(d, d + plan_->size(), cplx{0.0, 0.0});
        for (int l = 0; l < grid_.extent[2]; ++l)
            for (int j = 0; j < grid_.extent[1]; ++j)
                for (int i = 0; i < grid_.extent[0]; ++i) d[idx(i, j, l)] = g[grid_.index(i, j, l)];
        plan_->forward();
        const double scale = 1.0 / static_cast<double>(plan_->size());
        for (std::size_t t = 0; t < plan_->size(); ++t) d[t] *= symbolInv_[t] * scale;
        plan_->backward();
        out.resize(grid_.size());
        for (int l = 0; l < grid_.extent[2]; ++l)
            for (int j = 0; j < grid_.extent[1]; ++j)
                for (int i = 0; i < grid_.extent[0]; ++i) out[grid_.index(i, j, l)] = d[idx(i, j, l)];
    }

    std::size_t paddedSize() const { return plan_->size(); }

private:
    std::size_t idx(int i, int j, int l) const
    {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(ext_[0]) * (j + static_cast<std::size_t>(ext_[1]) * l);
    }

    Grid grid_;
    CVec rho_;
    std::array<int, 3> ext_{};
    std::unique_ptr<FftPlan> plan_;
    std::vector<cplx> symbolInv_;
    double minSymbol_ = 0.0;
};

} // namespace detail

// Solves (Delta + 2 rho.grad + q) psi = f by the fixed point psi = G(f - q psi),
// where G is the periodic multiplier inverse plus an affine term carrying the
// zero mode, so the discrete equation holds without periodic compatibility.
inline FaddeevResult solveFaddeev(const std::vector<cplx>& q, const std::vector<cplx>& f, const CgoDirection& dirIn,
                                  const Grid& grid, const FaddeevOptions& opt = {}, double s = 0.49)
{
    if (q.size() != grid.size() || f.size() != grid.size()) throw DomainError("Faddeev data do not match grid");
    if (opt.padFactor < 2) throw DomainError("padding factor must be at least 2");
    FaddeevResult res;
    res.dir = dirIn;
    res.exponents = faddeevExponents(grid.dim, s, defaultIntegrability(grid.dim));

    auto green = std::make_unique<detail::FaddeevGreen>(grid, res.dir.rho, opt.padFactor);
    for (int attempt = 0; green->minSymbol() < opt.singularityFloor; ++attempt) {
        if (attempt >= 8) throw NumericalError("multiplier vanishes near a lattice point");
        PolyCone Q = PolyCone::spherical(res.dir.vertex, -res.dir.realZeta(), res.dir.alphaPrime, res.dir.dim);
        res.dir = buildDirection(Q, res.dir.k, res.dir.tau + grid.h);
        res.tauPerturbed = true;
        green = std::make_unique<detail::FaddeevGreen>(grid, res.dir.rho, opt.padFactor);
    }

    const CVec& rho = res.dir.rho;
    double rr = 0.0;
    for (int a = 0; a < 3; ++a) rr += std::norm(rho[a]);
    // chi(x) = conj(rho).(x - x_c)/(2|rho|^2) satisfies (Delta + 2 rho.grad) chi = 1.
    std::vector<cplx> chi(grid.size());
    grid.forEach([&](std::size_t i, const Vec& x) {
        const Vec d = x - res.dir.vertex;
        chi[i] = (std::conj(rho[0]) * d[0] + std::conj(rho[1]) * d[1] + std::conj(rho[2]) * d[2]) / (2.0 * rr);
    });

    res.psi = WaveField(grid, res.dir.k, fields::Role::Remainder);
    auto& psi = res.psi.values;
    std::vector<cplx> g(grid.size()), next;
    double prevInc = 0.0;
    const double nPad = static_cast<double>(green->paddedSize());
    for (int it = 0; it < opt.maxIter; ++it) {
        cplx total = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = f[i] - q[i] * psi[i];
            total += g[i];
        }
        green->apply(g, next);
        const cplx mean = total / nPad;
        double inc = 0.0, mag = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] += mean * chi[i];
            inc += std::norm(next[i] - psi[i]);
            mag += std::norm(next[i]);
        }
        inc = std::sqrt(inc);
        mag = std::sqrt(mag);
        psi.swap(next);
        res.iterations = it + 1;
        if (it >= 1 && prevInc > 0.0) {
            const double factor = inc / prevInc;
            if (it >= 2) res.contraction = std::max(res.contraction, factor);
            if (it >= 2 && factor > opt.contractionGate)
                throw NumericalError("Faddeev iteration is not contracting (|Im rho| too small for the contrast)");
        }
        prevInc = inc;
        if (mag == 0.0 || inc <= opt.tol * mag) break;
        if (it + 1 == opt.maxIter) throw NumericalError("Faddeev iteration hit the iteration limit");
    }
    if (!res.psi.finite()) throw NumericalError("Faddeev iteration produced non-finite values");
    res.normP = lpNorm(res.psi, res.exponents.p);
    return res;
}

struct CgoSolution {
    WaveField u0;
    FaddeevResult faddeev;
};

// u0 = exp(rho.(x - x_c)) (1 + psi) with q = k^2 V, f = -k^2 V.
inline CgoSolution buildCgo(const fields::ContrastField& V, double k, const CgoDirection& dir, const Grid& grid,
                            const FaddeevOptions& opt = {}, double s = 0.49)
{
    const auto samples = V.sample(grid);
    std::vector<cplx> q(grid.size()), f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        q[i] = k * k * samples[i];
        f[i] = -q[i];
    }
    CgoSolution out;
    out.faddeev = solveFaddeev(q, f, dir, grid, opt, s);
    const CVec& rho = out.faddeev.dir.rho;
    out.u0 = WaveField(grid, k, fields::Role::Cgo);
    grid.forEach([&](std::size_t i, const Vec& x) {
        out.u0.values[i] = std::exp(dot(rho, x - out.faddeev.dir.vertex)) * (1.0 + out.faddeev.psi.values[i]);
    });
    return out;
}

// max |(Delta_h + k^2(1+V)) u0| / (|rho|^2 |exp(rho.(x - x_c))|) over interior
// nodes whose stencil does not cross the support boundary.
inline double cgoResidual(const CgoSolution& sol, const fields::ContrastField& V)
{
    const WaveField& u = sol.u0;
    const Grid& g = u.grid;
    const auto vs = V.sample(g);
    const CVec& rho = sol.faddeev.dir.rho;
    double rr = 0.0;
    for (int a = 0; a < 3; ++a) rr += std::norm(rho[a]);
    const double k2 = u.k * u.k, ih2 = 1.0 / (g.h * g.h);
    double worst = 0.0;
    const int l0 = g.dim == 3 ? 1 : 0, l1 = g.dim == 3 ? g.extent[2] - 1 : 1;
    for (int l = l0; l < l1; ++l)
        for (int j = 1; j < g.extent[1] - 1; ++j)
            for (int i = 1; i < g.extent[0] - 1; ++i) {
                const std::size_t c = g.index(i, j, l);
                std::vector<std::size_t> nb{g.index(i + 1, j, l), g.index(i - 1, j, l), g.index(i, j + 1, l), g.index(i, j - 1, l)};
                if (g.dim == 3) {
                    nb.push_back(g.index(i, j, l + 1));
                    nb.push_back(g.index(i, j, l - 1));
                }
                cplx lap = -static_cast<double>(nb.size()) * u[c];
                bool straddles = false;
                for (auto n : nb) {
                    lap += u[n];
                    straddles = straddles || ((vs[n] == cplx{0.0, 0.0}) != (vs[c] == cplx{0.0, 0.0}));
                }
                if (straddles) continue;
                const double env = std::exp(dot(rho, g.point(c) - sol.faddeev.dir.vertex).real());
                worst = std::max(worst, std::abs(lap * ih2 + k2 * (1.0 + vs[c]) * u[c]) / (rr * env));
            }
    return worst;
}

} // namespace polyscat::cgo
