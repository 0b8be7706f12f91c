#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vec.hpp"

namespace polyscat::specfun {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;
inline constexpr double kDefaultNuMax = 200.0;

// m * exp(e); keeps huge or tiny Bessel values representable.
struct Scaled {
    double m = 0.0;
    double e = 0.0;

    double logAbs() const { return std::log(std::abs(m)) + e; }
    double value() const { return m * std::exp(e); }
};

struct BesselSet {
    Scaled J, Jprev;   // J_nu, J_{nu-1}
    Scaled Y, Yprev;   // Y_nu, Y_{nu-1}
};

namespace detail {

inline constexpr double kBig = 1e200;
inline constexpr double kLogBig = 460.517018598809136804;   // ln(1e200)

inline int twiceOrder(double nu, double nuMax)
{
    const double t = 2.0 * nu;
    const double r = std::round(t);
    if (std::abs(t - r) > 1e-12 || r < 0) throw DomainError("Hankel order must be a nonnegative half-integer");
    if (nu > nuMax) throw DomainError("Hankel order exceeds configured maximum");
    return static_cast<int>(r);
}

// Large-argument Hankel expansion for orders 0 and 1 (z >= 25).
inline cplx hankelAsymptotic(double nu, double z)
{
    const double mu = 4.0 * nu * nu;
    cplx sum = 1.0, term = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double a = (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * z);
        term *= 1i * a;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        sum += term;
    }
    const double phase = z - nu * pi / 2 - pi / 4;
    return std::sqrt(2.0 / (pi * z)) * std::polar(1.0, phase) * sum;
}

// Miller backward recurrence for J. Integer orders are normalized by
// J_0 + 2 sum J_2k = 1; half-integer orders by the closed forms of J_{+-1/2}.
// Also returns the Neumann sums that give Y_0 and Y_1 for integer order.
struct MillerOut {
    Scaled J, Jprev;
    double J0 = 0, J1 = 0;              // normalized, integer case
    double neumannY0 = 0, neumannY1 = 0;
};

inline MillerOut miller(int nu2, double z)
{
    const bool half = nu2 % 2 != 0;
    const double big = std::max(0.5 * nu2, z);
    int M = static_cast<int>(big + 25.0 + 4.0 * std::sqrt(big + 1.0));
    if (!half && M % 2) ++M;
    // Loop index m stands for order m + off.
    const double off = half ? 0.5 : 0.0;
    const int target = half ? (nu2 - 1) / 2 : nu2 / 2;
    const int lowest = half ? -1 : 0;
    double next = 0.0, cur = 1e-300, shift = 0.0;
    double capJ = 0, capJprev = 0, capShift = 0, capShiftPrev = 0;
    double sumEven = 0.0, ny0 = 0.0, ny1 = 0.0;
    double low1 = 0.0, low0 = 0.0;   // integer: J_1, J_0; half: J_{1/2}, J_{-1/2}
    for (int m = M;; --m) {
        if (m == target) {
            capJ = cur;
            capShift = shift;
        }
        if (m == target - 1) {
            capJprev = cur;
            capShiftPrev = shift;
        }
        if (!half) {
            if (m > 0 && m % 2 == 0) {
                const int k = m / 2;
                sumEven += 2.0 * cur;
                ny0 += ((k % 2) ? -1.0 : 1.0) * cur / k;
            }
            if (m % 2 == 1) {
                // J_m enters as J_{2k-1} with k = (m+1)/2 and as J_{2k+1} with k = (m-1)/2.
                const int kUp = (m + 1) / 2;
                ny1 += ((kUp % 2) ? -1.0 : 1.0) * cur / kUp;
                if (m >= 3) {
                    const int kDn = (m - 1) / 2;
                    ny1 -= ((kDn % 2) ? -1.0 : 1.0) * cur / kDn;
                }
            }
            if (m == 1) low1 = cur;
            if (m == 0) {
                low0 = cur;
                sumEven += cur;
            }
        } else {
            if (m == 0) low1 = cur;
            if (m == -1) low0 = cur;
        }
        if (m == lowest) break;
        const double prev = (2.0 * (m + off) / z) * cur - next;
        next = cur;
        cur = prev;
        if (std::abs(cur) > kBig) {
            cur /= kBig;
            next /= kBig;
            sumEven /= kBig;
            ny0 /= kBig;
            ny1 /= kBig;
            low1 /= kBig;
            shift += kLogBig;
        }
    }
    double norm;
    if (!half) {
        norm = sumEven;
    } else {
        // Least-squares fit of the two lowest orders to their closed forms.
        const double c = std::sqrt(2.0 / (pi * z));
        const double sc = std::max(std::abs(low1), std::abs(low0));
        const double a = low1 / sc, b = low0 / sc;
        norm = sc * (a * a + b * b) / (a * c * std::sin(z) + b * c * std::cos(z));
    }
    const double logNorm = std::log(std::abs(norm)) + shift;
    const double sgnNorm = norm < 0 ? -1.0 : 1.0;
    auto scaled = [&](double v, double sh) -> Scaled {
        if (v == 0.0) return {0.0, 0.0};
        return {sgnNorm * std::copysign(1.0, v), std::log(std::abs(v)) + sh - logNorm};
    };
    MillerOut out;
    out.J = scaled(capJ, capShift);
    if (target - 1 >= lowest) out.Jprev = scaled(capJprev, capShiftPrev);
    if (!half) {
        out.J0 = low0 / norm;
        out.J1 = low1 / norm;
        out.neumannY0 = ny0 / norm;
        out.neumannY1 = ny1 / norm;
    }
    return out;
}

// Forward recurrence for Y from two seeds at orders mu0 and mu0+1.
inline void forwardY(double mu0, double y0, double y1, int steps, double z, Scaled& Y, Scaled& Yprev)
{
    double a = y0, b = y1, shift = 0.0;
    if (steps == 0) {
        Y = {b, 0.0};
        Yprev = {a, 0.0};
        return;
    }
    double mu = mu0 + 1.0;
    for (int s = 0; s < steps; ++s) {
        const double c = (2.0 * mu / z) * b - a;
        a = b;
        b = c;
        mu += 1.0;
        if (std::abs(b) > kBig) {
            a /= kBig;
            b /= kBig;
            shift += kLogBig;
        }
    }
    Y = {b, shift};
    Yprev = {a, shift};
}

} // namespace detail

// J_nu, J_{nu-1}, Y_nu, Y_{nu-1} in scaled form for half-integer nu.
inline BesselSet besselScaled(double nu, double z, double nuMax = kDefaultNuMax)
{
    if (!(z > 0.0)) throw DomainError("Bessel argument must be positive");
    const int nu2 = detail::twiceOrder(nu, nuMax);
    BesselSet out;
    const auto mo = detail::miller(nu2, z);
    out.J = mo.J;
    out.Jprev = mo.Jprev;
    if (nu2 % 2 == 0) {
        double y0, y1;
        if (z >= 25.0) {
            y0 = detail::hankelAsymptotic(0.0, z).imag();
            y1 = detail::hankelAsymptotic(1.0, z).imag();
        } else {
            const double L = std::log(z / 2.0) + kEulerGamma;
            y0 = (2.0 / pi) * (L * mo.J0 - 2.0 * mo.neumannY0);
            y1 = (2.0 / pi) * (-mo.J0 / z + L * mo.J1 + mo.neumannY1);
        }
        const int n = nu2 / 2;
        if (n == 0) {
            out.Y = {y0, 0.0};
            out.Yprev = {-y1, 0.0};
            out.Jprev = {-mo.J1, 0.0};
        } else {
            detail::forwardY(0.0, y0, y1, n - 1, z, out.Y, out.Yprev);
        }
    } else {
        const double c = std::sqrt(2.0 / (pi * z));
        const double yMinus = c * std::sin(z);    // Y_{-1/2}
        const double yPlus = -c * std::cos(z);    // Y_{1/2}
        const int steps = (nu2 - 1) / 2;
        detail::forwardY(-0.5, yMinus, yPlus, steps, z, out.Y, out.Yprev);
    }
    return out;
}

struct BesselJY {
    double J = 0, Y = 0, dJ = 0, dY = 0;
};

// Values and derivatives; throws when Y_nu is not representable.
inline BesselJY besselJY(double nu, double z, double nuMax = kDefaultNuMax)
{
    const auto s = besselScaled(nu, z, nuMax);
    if (s.Y.logAbs() > 700.0 || s.Yprev.logAbs() > 700.0) throw NumericalError("Bessel Y overflow (order too large for argument)");
    BesselJY r;
    r.J = s.J.value();
    r.Y = s.Y.value();
    const double Jp = s.Jprev.value(), Yp = s.Yprev.value();
    r.dJ = Jp - nu / z * r.J;
    r.dY = Yp - nu / z * r.Y;
    return r;
}

// First-kind Hankel function for half-integer order and positive argument.
inline cplx hankelH1(double nu, double z, double nuMax = kDefaultNuMax)
{
    if (!(z > 0.0)) throw DomainError("hankelH1: z must be positive");
    detail::twiceOrder(nu, nuMax);
    if (z >= 25.0 && (nu == 0.0 || nu == 1.0)) return detail::hankelAsymptotic(nu, z);
    const auto s = besselScaled(nu, z, nuMax);
    if (s.Y.logAbs() > 700.0) throw NumericalError("hankelH1: magnitude overflow");
    return {s.J.value(), s.Y.value()};
}

// ln |H^(1)_nu(z)| without overflow.
inline double logAbsHankelH1(double nu, double z, double nuMax = kDefaultNuMax)
{
    if (!(z > 0.0)) throw DomainError("logAbsHankelH1: z must be positive");
    const auto s = besselScaled(nu, z, nuMax);
    const double ly = s.Y.logAbs();
    if (s.J.m == 0.0) return ly;
    const double lj = s.J.logAbs();
    const double hi = std::max(lj, ly), lo = std::min(lj, ly);
    return hi + 0.5 * std::log1p(std::exp(2.0 * (lo - hi)));
}

// Order-zero Hankel function for kernel tables (no order checks).
inline cplx hankel0(double z)
{
    if (z >= 25.0) return detail::hankelAsymptotic(0.0, z);
    const auto mo = detail::miller(0, z);
    const double L = std::log(z / 2.0) + kEulerGamma;
    return {mo.J0, (2.0 / pi) * (L * mo.J0 - 2.0 * mo.neumannY0)};
}

inline cplx hankel1(double z)
{
    if (z >= 25.0) return detail::hankelAsymptotic(1.0, z);
    const auto mo = detail::miller(0, z);
    const double L = std::log(z / 2.0) + kEulerGamma;
    return {mo.J1, (2.0 / pi) * (-mo.J0 / z + L * mo.J1 + mo.neumannY1)};
}

// Certified constant for the two-sided Hankel bounds on a z-grid.
struct HankelBoundCertificate {
    double z1 = 1.0, z2 = 1.0;
    double nuMax = 0.5;
    double C = 1.0;
    int samples = 1;
    double inflation = 1.05;
    bool violated = false;   // post-check failure: implementation bug
};

namespace detail {

// ln of 4/(pi e z) * (2 nu/(e z))^(2 nu - 1)
inline double logHankelModel(double nu, double z)
{
    return std::log(4.0 / (pi * std::numbers::e * z)) + (2.0 * nu - 1.0) * std::log(2.0 * nu / (std::numbers::e * z));
}

inline double zGrid(double z1, double z2, int samples, int i)
{
    if (samples == 1) return z1;
    return z1 + (z2 - z1) * static_cast<double>(i) / static_cast<double>(samples - 1);
}

} // namespace detail

inline HankelBoundCertificate certifyHankelBounds(double z1, double z2, double nuMax, int samples = 0)
{
    if (!(z1 > 0.0) || z2 < z1) throw DomainError("certifyHankelBounds: need 0 < z1 <= z2");
    if (nuMax < 0.5) throw DomainError("certifyHankelBounds: nuMax must be >= 1/2");
    HankelBoundCertificate c;
    c.z1 = z1;
    c.z2 = z2;
    c.nuMax = nuMax;
    c.samples = z1 == z2 ? 1 : (samples > 0 ? samples : 65);
    const int nMax2 = static_cast<int>(std::floor(2.0 * nuMax + 1e-12));
    double logC2 = 0.0;   // C >= 1
    for (int i = 0; i < c.samples; ++i) {
        const double z = detail::zGrid(z1, z2, c.samples, i);
        logC2 = std::max(logC2, 2.0 * logAbsHankelH1(0.0, z, nuMax + 1));
        for (int t = 1; t <= nMax2; ++t) {
            const double nu = 0.5 * t;
            const double lh2 = 2.0 * logAbsHankelH1(nu, z, nuMax + 1);
            const double lb = detail::logHankelModel(nu, z);
            logC2 = std::max({logC2, lh2 - lb, lb - lh2});
        }
    }
    c.C = std::exp(0.5 * logC2) * c.inflation;
    const double lc2 = 2.0 * std::log(c.C);
    for (int i = 0; i < c.samples && !c.violated; ++i) {
        const double z = detail::zGrid(z1, z2, c.samples, i);
        if (2.0 * logAbsHankelH1(0.0, z, nuMax + 1) > lc2) c.violated = true;
        for (int t = 1; t <= nMax2; ++t) {
            const double nu = 0.5 * t;
            const double lh2 = 2.0 * logAbsHankelH1(nu, z, nuMax + 1);
            const double lb = detail::logHankelModel(nu, z);
            if (lh2 > lc2 + lb || lh2 < lb - lc2) c.violated = true;
        }
    }
    return c;
}

// Unregularized lower incomplete gamma by its power series.
inline double lowerGammaSeries(double s, double x)
{
    if (x == 0.0) return 0.0;
    double term = 1.0 / s, sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (s + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::exp(s * std::log(x) - x) * sum;
}

// Unregularized upper incomplete gamma by a modified Lentz continued fraction.
inline double upperGammaFraction(double s, double x)
{
    const double tiny = 1e-300;
    double b = x + 1.0 - s, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(s * std::log(x) - x) * h;
}

inline double lowerIncompleteGamma(double s, double x)
{
    if (!(s > 0.0) || x < 0.0) throw DomainError("lowerIncompleteGamma: need s > 0, x >= 0");
    if (x < s + 1.0) return lowerGammaSeries(s, x);
    return std::tgamma(s) - upperGammaFraction(s, x);
}

inline double upperIncompleteGamma(double s, double x)
{
    if (!(s > 0.0) || x < 0.0) throw DomainError("upperIncompleteGamma: need s > 0, x >= 0");
    if (x < s + 1.0) return std::tgamma(s) - lowerGammaSeries(s, x);
    return upperGammaFraction(s, x);
}

} // namespace polyscat::specfun
