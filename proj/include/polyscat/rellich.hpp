#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fft.hpp"
#include "fields.hpp"
#include "geom.hpp"
#include "solver.hpp"
#include "specfun.hpp"
#include "vec.hpp"

namespace polyscat::rellich {

using polyscat::operator-;
using polyscat::operator+;

using fields::Grid;
using fields::WaveField;
using solver::FarFieldPattern;

inline constexpr double kE = 2.718281828459045235360287;

// ---------------------------------------------------------------------------
// Far field to near field

struct HarmonicDecomposition {
    int dim = 2;
    double k = 0.0;
    int J = 0;
    std::vector<double> b;              // aggregated degree-j magnitudes, j = 0..J
    std::vector<cplx> coefficients;     // 2D: index j + J for j in [-J, J]; 3D: l^2 + l + m
    double parsevalDefect = 0.0;        // |sum b^2 - ||ff||^2| / ||ff||^2

    double energy() const
    {
        double s = 0.0;
        for (double v : b) s += v * v;
        return s;
    }
};

namespace detail {

// Orthonormal spherical harmonics Y_l^m(theta, phi) for l <= L, flattened l^2 + l + m.
inline std::vector<cplx> sphericalHarmonics(int L, const Vec& d)
{
    const double ct = std::clamp(d[2], -1.0, 1.0);
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double phi = std::atan2(d[1], d[0]);
    std::vector<cplx> Y(static_cast<std::size_t>((L + 1) * (L + 1)));
    std::vector<double> P(static_cast<std::size_t>((L + 1) * (L + 1)), 0.0);
    auto at = [](int l, int m) { return static_cast<std::size_t>(l * l + l + m); };
    double pmm = std::sqrt(1.0 / (4.0 * pi));
    for (int m = 0; m <= L; ++m) {
        if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st;
        P[at(m, m)] = pmm;
        if (m + 1 <= L) P[at(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * ct * pmm;
        for (int l = m + 2; l <= L; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
            const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
            P[at(l, m)] = a * (ct * P[at(l - 1, m)] - b * P[at(l - 2, m)]);
        }
    }
    for (int l = 0; l <= L; ++l)
        for (int m = 0; m <= l; ++m) {
            const cplx y = P[at(l, m)] * std::polar(1.0, m * phi);
            Y[at(l, m)] = y;
            if (m > 0) Y[at(l, -m)] = (m % 2 ? -1.0 : 1.0) * std::conj(y);
        }
    return Y;
}

} // namespace detail

// 2D: DFT over equispaced angles (exact Parseval for J = m/2).
// 3D: projection onto spherical harmonics with equal Fibonacci weights.
inline HarmonicDecomposition decomposeFarField(const FarFieldPattern& ff, int J = -1)
{
    HarmonicDecomposition h;
    h.dim = ff.dim;
    h.k = ff.k;
    const int m = static_cast<int>(ff.size());
    if (m == 0) throw DomainError("empty far-field pattern");
    const double total = std::pow(ff.l2Norm(), 2);
    if (ff.dim == 2) {
        const int nyq = m / 2;
        if (J < 0) J = nyq;
        if (J > nyq) throw DomainError("harmonic truncation exceeds the Nyquist limit of the sampling");
        for (std::size_t i = 0; i < ff.size(); ++i)
            if (std::abs(ff.angle(i) - 2.0 * pi * i / m) > 1e-9) throw DomainError("2D far field must be sampled at 2 pi j / m");
        FftPlan plan({m});
        std::copy(ff.values.begin(), ff.values.end(), plan.data());
        plan.forward();
        // ff = sum_j a_j e^{ij theta}/sqrt(2 pi); a_j = sqrt(2 pi)/m sum ff e^{-ij theta}.
        const double s = std::sqrt(2.0 * pi) / m;
        h.J = J;
        h.coefficients.assign(2 * J + 1, cplx{0.0, 0.0});
        h.b.assign(J + 1, 0.0);
        for (int j = -J; j <= J; ++j) {
            const int bin = ((j % m) + m) % m;
            // With m even the bin m/2 holds both +m/2 and -m/2; count it once.
            if (2 * J == m && j == J) continue;
            h.coefficients[j + J] = s * plan.data()[bin];
        }
        for (int j = 0; j <= J; ++j) {
            double e = std::norm(h.coefficients[j + J]);
            if (j > 0) e += std::norm(h.coefficients[J - j]);
            h.b[j] = std::sqrt(e);
        }
    } else {
        const int Lmax = static_cast<int>(std::floor(std::sqrt(static_cast<double>(m)))) - 1;
        if (J < 0) J = std::max(0, Lmax / 2);
        if (J > Lmax) throw DomainError("harmonic truncation exceeds what the sampling resolves");
        h.J = J;
        h.coefficients.assign(static_cast<std::size_t>((J + 1) * (J + 1)), cplx{0.0, 0.0});
        const double w = ff.weight();
        for (std::size_t i = 0; i < ff.size(); ++i) {
            const auto Y = detail::sphericalHarmonics(J, ff.directions[i]);
            for (std::size_t t = 0; t < Y.size(); ++t) h.coefficients[t] += w * ff.values[i] * std::conj(Y[t]);
        }
        h.b.assign(J + 1, 0.0);
        for (int l = 0; l <= J; ++l) {
            double e = 0.0;
            for (int mm = -l; mm <= l; ++mm) e += std::norm(h.coefficients[static_cast<std::size_t>(l * l + l + mm)]);
            h.b[l] = std::sqrt(e);
        }
    }
    h.parsevalDefect = total > 0.0 ? std::abs(h.energy() - total) / total : h.energy();
    return h;
}

// ||w|| on the sphere S(0, r), r > R, from the Hankel series. High orders amplify
// sampling noise by |H_j(kr)|^2, so pass maxOrder of a few k R in practice.
inline double seriesSphereNorm(const HarmonicDecomposition& h, double r, int maxOrder = -1)
{
    const double shift = (h.dim - 2) / 2.0;
    const int top = maxOrder < 0 ? h.J : std::min(maxOrder, h.J);
    double s = 0.0;
    for (int j = 0; j <= top; ++j) {
        if (h.b[j] == 0.0) continue;
        const double nu = j + shift;
        const double lh = specfun::logAbsHankelH1(nu, h.k * r, std::max(specfun::kDefaultNuMax, nu + 1.0));
        s += h.b[j] * h.b[j] * std::exp(2.0 * lh);
    }
    return std::sqrt(0.5 * pi * h.k * r * s);
}

enum class Regime { Decay, Saturated };

inline std::string regimeName(Regime r) { return r == Regime::Decay ? "decay" : "saturated"; }

struct FarToNearBound {
    double bound = 0.0;
    Regime regime = Regime::Saturated;
    double ell = 0.0;
    double nu0 = 0.0;
    double constant = 0.0;   // the multiplicative constant built from the Hankel certificate
    specfun::HankelBoundCertificate certificate;
};

inline double ellOf(double epsilon, double S, double k, double R)
{
    if (!(epsilon > 0.0) || !(S > 0.0)) throw DomainError("epsilon and S must be positive");
    if (epsilon >= S) return 0.0;
    return std::sqrt(2.0 * kE * k * R * std::log(S / epsilon));
}

// Annulus bound B0 R < |x| < 2 B0 R from far-field smallness.
inline FarToNearBound ff2nfBound(double epsilon, double S, double k, double R, double B0)
{
    if (!(B0 > 1.0)) throw DomainError("B0 must exceed 1");
    if (!(k > 0.0) || !(R > 0.0)) throw DomainError("k and R must be positive");
    FarToNearBound out;
    out.ell = ellOf(epsilon, S, k, R);
    out.nu0 = std::floor(out.ell) / 2.0;
    const double nuMax = std::max({0.5, out.nu0, std::ceil(2.0 * kE * B0 * k * R) / 2.0});
    out.certificate = specfun::certifyHankelBounds(k * R, 2.0 * B0 * k * R, nuMax);
    const double C = out.certificate.C;
    out.constant = std::sqrt(2.0 * B0 * B0 * B0 * std::max(2.0 * C * C * R / kE, std::pow(C, 4)));
    if (out.nu0 >= std::max(1.5, kE * B0 * k * R) && epsilon <= S) {
        out.regime = Regime::Decay;
        out.bound = out.constant * S * std::pow(B0, -0.5 * out.ell);
    } else {
        out.regime = Regime::Saturated;
        out.bound = out.constant * epsilon;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Three balls, chains and calibration

using FieldFn = std::function<cplx(const Vec&)>;

// Sample points filling B(x, radius): polar (2D) or spherical (3D) lattice.
inline std::vector<Vec> ballSamples(int dim, const Vec& x, double radius, int rings = 10)
{
    std::vector<Vec> pts{x};
    for (int i = 1; i <= rings; ++i) {
        const double rho = radius * i / rings;
        if (dim == 2) {
            const int na = 8 * i;
            for (int a = 0; a < na; ++a) {
                const double t = 2.0 * pi * a / na;
                pts.push_back(x + rho * Vec{std::cos(t), std::sin(t), 0.0});
            }
        } else {
            const int na = 6 * i * i + 2;
            for (const auto& d : solver::uniformDirections(3, na)) pts.push_back(x + rho * d);
        }
    }
    return pts;
}

inline double supOnBall(const FieldFn& w, int dim, const Vec& x, double radius)
{
    double m = 0.0;
    for (const auto& p : ballSamples(dim, x, radius)) m = std::max(m, std::abs(w(p)));
    return m;
}

inline FieldFn sampler(const WaveField& w)
{
    return [&w](const Vec& x) { return w.interpolate(x); };
}

struct ThreeSpheres {
    double inner = 0.0;    // ||w||_{B_r}
    double middle = 0.0;   // ||w||_{B_2r}
    double outer = 0.0;    // ||w||_{B_4r}
    double betaFit = 0.0;
    bool betaDefined = false;

    double lhs() const { return middle; }
    // C (2 + sqrt 2)^{3/2} outer^{1-beta} inner^beta
    double rhs(double beta, double C = 1.0) const
    {
        return C * std::pow(2.0 + std::sqrt(2.0), 1.5) * std::pow(outer, 1.0 - beta) * std::pow(inner, beta);
    }
};

inline ThreeSpheres threeSpheres(const FieldFn& w, int dim, const Vec& x, double r)
{
    if (!(r > 0.0)) throw DomainError("ball radius must be positive");
    ThreeSpheres t;
    // Nested maxima so that inner <= middle <= outer holds exactly.
    t.inner = supOnBall(w, dim, x, r);
    t.middle = std::max(t.inner, supOnBall(w, dim, x, 2 * r));
    t.outer = std::max(t.middle, supOnBall(w, dim, x, 4 * r));
    const double span = std::log(t.outer) - std::log(t.inner);
    if (t.inner > 0.0 && span > 1e-12 * std::max(1.0, std::abs(std::log(t.outer)))) {
        t.betaFit = (std::log(t.outer) - std::log(t.middle)) / span;
        t.betaDefined = true;
    }
    return t;
}

// Grid version; checks the Helmholtz residual on the outer ball first.
inline ThreeSpheres threeSpheresCheck(const WaveField& w, const Vec& x, double r, double Rm, double residualTol = 1e-2)
{
    if (!(4 * r < Rm)) throw DomainError("three-balls radius must satisfy 4r < R_m");
    const Grid& g = w.grid;
    const double k2 = w.k * w.k, ih2 = 1.0 / (g.h * g.h);
    double worst = 0.0, scale = 0.0;
    g.forEach([&](std::size_t idx, const Vec& p) {
        if (dist(p, x) > 4 * r) return;
        const auto c = g.unindex(idx);
        for (int a = 0; a < g.dim; ++a)
            if (c[a] == 0 || c[a] == g.extent[a] - 1) throw DomainError("three-balls outer ball leaves the grid");
        cplx lap = -2.0 * g.dim * w[idx];
        for (int a = 0; a < g.dim; ++a) {
            auto pp = c, mm = c;
            ++pp[a];
            --mm[a];
            lap += w[g.index(pp[0], pp[1], pp[2])] + w[g.index(mm[0], mm[1], mm[2])];
        }
        worst = std::max(worst, std::abs(lap * ih2 + k2 * w[idx]));
        scale = std::max(scale, std::abs(w[idx]));
    });
    if (worst > residualTol * std::max(k2, 1.0) * std::max(scale, 1e-300))
        throw DomainError("field is not a Helmholtz solution on the outer ball");
    return threeSpheres(sampler(w), g.dim, x, r);
}

// Superposition of plane waves; an exact Helmholtz solution for testing.
struct PlaneWaveSum {
    int dim = 2;
    double k = 1.0;
    std::vector<Vec> directions;
    std::vector<cplx> amplitudes;

    cplx operator()(const Vec& x) const
    {
        cplx s = 0.0;
        for (std::size_t i = 0; i < directions.size(); ++i) s += amplitudes[i] * std::polar(1.0, k * dot(directions[i], x));
        return s;
    }

    static PlaneWaveSum random(int dim, double k, int count, std::mt19937_64& rng)
    {
        PlaneWaveSum w;
        w.dim = dim;
        w.k = k;
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < count; ++i) {
            Vec d{gauss(rng), gauss(rng), dim == 3 ? gauss(rng) : 0.0};
            w.directions.push_back(normalized(d));
            w.amplitudes.emplace_back(gauss(rng), gauss(rng));
        }
        return w;
    }
};

struct Calibration {
    double k = 1.0;
    int dim = 2;
    double Rm = 1.0;
    double C = 1.0;      // three-balls constant
    double c1 = 0.5;
    double c2 = 0.125;   // c1 / 4
    unsigned long long seed = 0;
    int trials = 0;

    double betaLow() const { return c1 / 4.0; }
    double betaHigh() const { return 1.0 - 3.0 * c1 / 4.0; }
    // Chain constant of the telescoped three-balls estimate.
    double chainC() const { return std::pow(C * std::pow(2.0 + std::sqrt(2.0), 1.5), 4.0 / (3.0 * c1)); }
};

inline constexpr double kCalibrationInflation = 1.1;

inline double defaultRm(double k) { return 2.0 / k; }

// One calibration trial: random field, centre and radius with 4r < R_m.
// Radial Helmholtz solution equal to 1 at the origin: J0(kr) in 2D, sin(kr)/(kr) in 3D.
inline double radialStanding(int dim, double kr)
{
    if (dim == 2) return std::cyl_bessel_j(0.0, kr);
    return kr < 1e-8 ? 1.0 - kr * kr / 6.0 : std::sin(kr) / kr;
}

// Random plane-wave sum with the radial standing wave removed so it vanishes at x0.
// Near a local maximum of |w| the sup-norm exponent collapses to 0; anchoring the
// centre keeps trials in the small-inner-ball regime the estimate is about.
struct AnchoredField {
    PlaneWaveSum waves;
    Vec anchor{0, 0, 0};
    cplx anchorValue{0.0, 0.0};

    AnchoredField(PlaneWaveSum w, const Vec& x0) : waves(std::move(w)), anchor(x0), anchorValue(waves(x0)) {}

    cplx operator()(const Vec& x) const
    {
        return waves(x) - anchorValue * radialStanding(waves.dim, waves.k * dist(x, anchor));
    }
};

// One calibration trial: random anchored field, centre and radius with 4r < R_m.
inline ThreeSpheres randomThreeBallsTrial(const Calibration& cfg, std::mt19937_64& rng, int waves = 20)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto sum = PlaneWaveSum::random(cfg.dim, cfg.k, waves, rng);
    Vec x{unit(rng) - 0.5, unit(rng) - 0.5, cfg.dim == 3 ? unit(rng) - 0.5 : 0.0};
    const double r = cfg.Rm / 4.0 * (0.25 + 0.7 * unit(rng));
    const AnchoredField w(std::move(sum), x);
    return threeSpheres(std::cref(w), cfg.dim, x, r);
}

// Fit (C, c1, c2) from random plane-wave superpositions, inflated by 10%.
inline Calibration calibrate(double k, int dim, unsigned long long seed, int trials, double Rm = 0.0)
{
    if (!(k > 0.0)) throw DomainError("wavenumber must be positive");
    if (trials < 1) throw DomainError("need at least one calibration trial");
    Calibration cal;
    cal.k = k;
    cal.dim = dim;
    cal.Rm = Rm > 0.0 ? Rm : defaultRm(k);
    cal.seed = seed;
    cal.trials = trials;
    std::mt19937_64 rng(seed);
    std::vector<ThreeSpheres> runs;
    double bmin = 1.0, bmax = 0.0;
    for (int t = 0; t < trials; ++t) {
        runs.push_back(randomThreeBallsTrial(cal, rng));
        if (!runs.back().betaDefined) continue;
        bmin = std::min(bmin, runs.back().betaFit);
        bmax = std::max(bmax, runs.back().betaFit);
    }
    if (bmax < bmin) throw NumericalError("calibration produced no usable trials");
    cal.c1 = std::min({4.0 * bmin, 4.0 / 3.0 * (1.0 - bmax), 0.999}) / kCalibrationInflation;
    if (!(cal.c1 > 0.0)) throw NumericalError("calibrated c1 is not positive");
    cal.c2 = cal.c1 / 4.0;
    double worst = 1.0;
    for (const auto& r : runs) worst = std::max(worst, r.lhs() / r.rhs(cal.c2));
    cal.C = worst * kCalibrationInflation;
    return cal;
}

struct PropagationPath {
    std::vector<Vec> centers;
    double r = 0.0;
    std::function<double(const Vec&)> boundaryDistance;   // optional distance to the domain boundary
};

struct ChainResult {
    std::vector<double> carried;    // bound per ball
    std::vector<double> measured;   // sup |w| per ball
    double bound = 0.0;             // bound on the last ball
    double chainBound = 0.0;        // C_chain T m^{c2^{K-1}}
    bool sound = true;              // measured <= carried everywhere
};

inline void checkPath(const PropagationPath& path, const Calibration& cal)
{
    if (path.centers.empty()) throw DomainError("empty chain");
    if (!(4 * path.r <= cal.Rm)) throw DomainError("chain radius violates 4r <= R_m");
    for (std::size_t i = 1; i < path.centers.size(); ++i)
        if (dist(path.centers[i], path.centers[i - 1]) > path.r * (1 + 1e-12)) throw DomainError("chain centres more than r apart");
    if (path.boundaryDistance)
        for (const auto& c : path.centers)
            if (path.boundaryDistance(c) < 4 * path.r * (1 - 1e-12)) throw DomainError("chain ball closer than 3r to the boundary");
}

// Telescoped three-balls bound along the chain. sourceBound bounds ||w||_{B_1};
// use a negative value to take the measured norm.
inline ChainResult propagateChain(const FieldFn& w, int dim, const PropagationPath& path, double T, const Calibration& cal,
                                  double sourceBound = -1.0)
{
    checkPath(path, cal);
    if (!(T >= 1.0)) throw DomainError("sup bound T must be at least 1");
    ChainResult res;
    for (const auto& c : path.centers) res.measured.push_back(supOnBall(w, dim, c, path.r));
    const double m1 = sourceBound >= 0.0 ? sourceBound : res.measured.front();
    if (m1 > 1.0) throw DomainError("chain source norm must be at most 1");
    const double s = cal.C * std::pow(2.0 + std::sqrt(2.0), 1.5);
    res.carried.push_back(m1);
    for (std::size_t i = 1; i < path.centers.size(); ++i) {
        const double prev = std::min(res.carried.back(), T);
        res.carried.push_back(s * std::pow(T, 1.0 - cal.c2) * std::pow(prev, cal.c2));
    }
    res.bound = res.carried.back();
    const double K = static_cast<double>(path.centers.size());
    res.chainBound = K == 1 ? m1 : cal.chainC() * T * std::pow(m1, std::pow(cal.c2, K - 1));
    for (std::size_t i = 0; i < res.measured.size(); ++i)
        if (res.measured[i] > res.carried[i] * (1 + 1e-12)) res.sound = false;
    return res;
}

// Straight chain from a to b with spacing at most r.
inline PropagationPath straightChain(const Vec& a, const Vec& b, double r)
{
    PropagationPath p;
    p.r = r;
    const double L = dist(a, b);
    const int steps = std::max(0, static_cast<int>(std::ceil(L / r - 1e-12)));
    for (int i = 0; i <= steps; ++i) p.centers.push_back(steps == 0 ? a : a + (static_cast<double>(i) / steps) * (b - a));
    return p;
}

struct OutsideHullResult {
    double bound = 0.0;               // sup of the carried chain bounds
    double propositionBound = 0.0;    // C T delta^{c2^{(2+lambda)R/r + 2}}
    double measuredMax = 0.0;
    int violations = 0;
    std::vector<double> queryBounds;
    std::vector<double> queryMeasured;
};

// Distance from x to a convex polytope (0 inside).
inline double distanceToPolytope(const geom::Polytope& Q, const Vec& x) { return Q.distanceTo(x); }

// For each query x' outside B(Q, 4r), follow the ray from the centre through x'
// outward to radius (1+lambda)R + r and chain back from the annulus.
inline OutsideHullResult propagateOutsideHull(const FieldFn& w, int dim, const geom::Polytope* Q, const Vec& center, double R,
                                              double r, double lambda, double delta, double T, const Calibration& cal,
                                              const std::vector<Vec>& queries)
{
    if (!(lambda > 0.0 && lambda < 0.5)) throw DomainError("lambda must lie in (0, 1/2)");
    if (!(4 * r <= cal.Rm)) throw DomainError("radius violates 4r <= R_m");
    if (!(2 * r < (1 - 2 * lambda) * R)) throw DomainError("radius violates 2r < (1 - 2 lambda) R");
    if (!(delta <= 1.0) || !(delta >= 0.0)) throw DomainError("delta must lie in [0, 1]");
    OutsideHullResult out;
    out.propositionBound = cal.chainC() * T * std::pow(delta, std::pow(cal.c2, (2 + lambda) * R / r + 2));
    const double rStart = (1 + lambda) * R + r;
    for (const auto& xq : queries) {
        if (Q && Q->distanceTo(xq) < 4 * r) throw DomainError("query point inside B(Q, 4r)");
        Vec d = xq - center;
        const double len = norm(d);
        d = len > 0 ? (1.0 / len) * d : Vec{1, 0, 0};
        const Vec start = len >= rStart ? xq : center + rStart * d;
        auto path = straightChain(start, xq, r);
        if (Q)
            for (const auto& c : path.centers)
                if (Q->distanceTo(c) < 4 * r * (1 - 1e-9)) throw DomainError("escape ray meets B(Q, 4r)");
        const auto res = propagateChain(w, dim, path, T, cal, delta);
        out.queryBounds.push_back(res.bound);
        out.queryMeasured.push_back(res.measured.back());
        out.bound = std::max(out.bound, res.bound);
        out.measuredMax = std::max(out.measuredMax, res.measured.back());
        if (!res.sound) ++out.violations;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Crossing into the boundary of the hull

// r(delta) = A R |ln c2| / ((1 - alpha) ln|ln delta|).
inline double crossingRadius(double delta, double alpha, double A, double R, double c2)
{
    const double ll = std::log(std::abs(std::log(delta)));
    if (!(ll > 0.0)) throw DomainError("need |ln delta| > 1");
    return A * R * std::abs(std::log(c2)) / ((1 - alpha) * ll);
}

// ((8 A R |ln c2|/(1-alpha))^alpha + C/c2^2) / (ln|ln delta|)^alpha * T.
inline double borderBound(double delta, double alpha, double A, double R, double c2, double C, double T)
{
    const double ll = std::log(std::abs(std::log(delta)));
    if (!(ll > 0.0)) throw DomainError("need |ln delta| > 1");
    return (std::pow(8 * A * R * std::abs(std::log(c2)) / (1 - alpha), alpha) + C / (c2 * c2)) / std::pow(ll, alpha) * T;
}

// delta must stay below exp(-exp(X)); returns X.
inline double deltaThresholdExponent(double alpha, double A, double R, double lambda, const Calibration& cal)
{
    return 4 * A * R * std::abs(std::log(cal.c2)) / (1 - alpha) / std::min({cal.Rm, R / 2, 2 * (1 - 2 * lambda) * R});
}

struct Crossing {
    double radius = 0.0;
    double bound = 0.0;
    double thresholdExponent = 0.0;
};

inline Crossing crossIntoBoundary(double delta, double alpha, double T, double A, double R, double lambda, const Calibration& cal)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("Hoelder exponent must lie in (0, 1)");
    if (!(A >= 2 + lambda)) throw DomainError("A must be at least 2 + lambda");
    Crossing c;
    c.thresholdExponent = deltaThresholdExponent(alpha, A, R, lambda, cal);
    // delta < exp(-exp(X))  <=>  ln ln (1/delta) > X.
    if (!(delta > 0.0 && delta < 1.0) || !(std::log(-std::log(delta)) > c.thresholdExponent))
        throw DomainError("delta above the smallness threshold exp(-exp(" + std::to_string(c.thresholdExponent) + "))");
    c.radius = crossingRadius(delta, alpha, A, R, cal.c2);
    c.bound = borderBound(delta, alpha, A, R, cal.c2, cal.chainC(), T);
    return c;
}

// ---------------------------------------------------------------------------
// Hoelder surrogate and the far-field to boundary pipeline

// sup |w| plus max difference quotient |w(x)-w(y)|/|x-y|^alpha over axis
// offsets 2h, 4h, 8h, ... among nodes of the region.
inline double hoelderSurrogate(const WaveField& w, double alpha, const fields::Region& region)
{
    const Grid& g = w.grid;
    double sup = 0.0, quot = 0.0;
    g.forEach([&](std::size_t idx, const Vec& x) {
        if (!region.contains(x)) return;
        sup = std::max(sup, std::abs(w[idx]));
        const auto c = g.unindex(idx);
        for (int a = 0; a < g.dim; ++a)
            for (int s = 2; s < g.extent[a]; s *= 2) {
                auto o = c;
                o[a] += s;
                if (o[a] >= g.extent[a]) break;
                const std::size_t j = g.index(o[0], o[1], o[2]);
                if (!region.contains(g.point(j))) continue;
                quot = std::max(quot, std::abs(w[idx] - w[j]) / std::pow(s * g.h, alpha));
            }
    });
    return sup + quot;
}

struct RellichParams {
    Calibration calibration;
    geom::Polytope hull;          // convex hull Q of both supports
    Vec center{0, 0, 0};
    double R = 1.0;
    double lambda = 0.25;
    double A = 2.25;              // at least 2 + lambda
    double alpha = 0.5;
    double B0 = 1.25;
    double S = 1.0;               // a-priori bound, at least 1
    double T = 1.0;               // Hoelder bound, at least 1
    int boundarySamples = 400;
};

struct RellichReport {
    double epsilon = 0.0;
    Regime regime = Regime::Saturated;
    double lnlnRatio = 0.0;        // ln ln (S / epsilon)
    double constant = 0.0;         // the pipeline constant
    double boundaryBound = 0.0;    // bound on sup_{dQ} (|w| + |grad w|)
    double measuredBoundary = 0.0;
    double annulusSup = 0.0;       // measured delta on the annulus
    FarToNearBound farToNear;
    double thresholdExponent = 0.0;
};

// Sample points on the boundary of a polytope (2D edges, 3D faces).
inline std::vector<Vec> boundarySamples(const geom::Polytope& Q, int count)
{
    std::vector<Vec> pts;
    const auto& v = Q.vertices();
    if (Q.dim() == 2) {
        double per = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) per += dist(v[i], v[(i + 1) % v.size()]);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Vec a = v[i], b = v[(i + 1) % v.size()];
            const int n = std::max(2, static_cast<int>(count * dist(a, b) / per));
            for (int t = 0; t < n; ++t) pts.push_back(a + (static_cast<double>(t) / n) * (b - a));
        }
        return pts;
    }
    // Box faces: origin + edges.
    const Vec o = Q.boxOrigin();
    const auto e = Q.boxEdges();
    const int n = std::max(2, static_cast<int>(std::sqrt(count / 6.0)));
    for (int a = 0; a < 3; ++a) {
        const Vec& u = e[(a + 1) % 3];
        const Vec& w = e[(a + 2) % 3];
        for (int side = 0; side < 2; ++side)
            for (int i = 0; i <= n; ++i)
                for (int j = 0; j <= n; ++j)
                    pts.push_back(o + static_cast<double>(side) * e[a] + (static_cast<double>(i) / n) * u + (static_cast<double>(j) / n) * w);
    }
    return pts;
}

// Measured sup over dQ of |w| + |grad w| for w = u - u'.
inline double boundarySup(const WaveField& w, const geom::Polytope& Q, int samples)
{
    std::vector<WaveField> grads;
    for (int a = 0; a < w.grid.dim; ++a) grads.push_back(fields::gradientComponent(w, a));
    double m = 0.0;
    for (const auto& x : boundarySamples(Q, samples)) {
        double g2 = 0.0;
        for (const auto& gr : grads) g2 += std::norm(gr.interpolate(x));
        m = std::max(m, std::abs(w.interpolate(x)) + std::sqrt(g2));
    }
    return m;
}

// Chains far-field smallness to a bound on sup_{dQ}(|w| + |grad w|).
inline RellichReport quantitativeRellich(const FarFieldPattern& ffDiff, const solver::ScatteringSolution& solA,
                                         const solver::ScatteringSolution& solB, const RellichParams& p)
{
    if (!solA.grid().sameAs(solB.grid())) throw DomainError("solutions live on different grids");
    if (!(p.S >= 1.0) || !(p.T >= 1.0)) throw DomainError("S and T must be at least 1");
    RellichReport rep;
    rep.epsilon = ffDiff.l2Norm();
    const WaveField w = solA.total - solB.total;
    rep.measuredBoundary = boundarySup(w, p.hull, p.boundarySamples);
    const Calibration& cal = p.calibration;
    const double Cglue = cal.chainC();
    rep.constant = 2.0 * (std::pow(8 * p.A * p.R * std::abs(std::log(cal.c2)) / (1 - p.alpha), p.alpha) + Cglue / (cal.c2 * cal.c2)) * p.T;
    rep.thresholdExponent = deltaThresholdExponent(p.alpha, p.A, p.R, p.lambda, cal);
    if (rep.epsilon == 0.0) {
        rep.regime = Regime::Decay;
        rep.boundaryBound = 0.0;
        return rep;
    }
    rep.annulusSup = fields::fieldNorm(w, fields::Region::annulus(p.center, (1 + p.lambda) * p.R, (2 - p.lambda) * p.R), fields::Norm::Linf);
    rep.farToNear = ff2nfBound(rep.epsilon, p.S, solA.k(), p.R, p.B0);
    const double ratio = p.S / rep.epsilon;
    rep.lnlnRatio = ratio > kE ? std::log(std::log(ratio)) : 0.0;
    // The decay regime needs delta(eps) = S exp(-sqrt(ln(S/eps))) below the
    // crossing threshold exp(-exp(X)).
    const bool small = ratio > 1.0 && std::sqrt(std::log(ratio)) - std::log(p.S) > std::exp(rep.thresholdExponent);
    rep.regime = small ? Regime::Decay : Regime::Saturated;
    const double factor = rep.lnlnRatio > 1.0 ? 1.0 / std::sqrt(rep.lnlnRatio) : 1.0;
    rep.boundaryBound = rep.constant * factor;
    return rep;
}

} // namespace polyscat::rellich
