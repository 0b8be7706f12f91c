#pragma once

// Reference values computed independently of the library code paths.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// Far field of a penetrable disc of radius a, index (1 + q), 2D, incidence along +x.
// Normalization: u^s ~ e^{ikr}/sqrt(r) A(theta).
inline cplx discFarField(double k, double q, double a, double theta, int terms = 40)
{
    const double k1 = k * std::sqrt(1.0 + q);
    auto J = [](int m, double x) { return boost::math::cyl_bessel_j(m, x); };
    auto Y = [](int m, double x) { return boost::math::cyl_neumann(m, x); };
    auto dJ = [&](int m, double x) { return 0.5 * (J(m - 1, x) - J(m + 1, x)); };
    auto dY = [&](int m, double x) { return 0.5 * (Y(m - 1, x) - Y(m + 1, x)); };
    cplx A = 0.0;
    for (int m = -terms; m <= terms; ++m) {
        const int am = std::abs(m);
        const double J1 = J(am, k1 * a), J1p = dJ(am, k1 * a), J0 = J(am, k * a), J0p = dJ(am, k * a);
        const cplx H(J0, Y(am, k * a)), Hp(J0p, dY(am, k * a));
        const cplx coef = (k1 * J1p * J0 - k * J1 * J0p) / (k * J1 * Hp - k1 * J1p * H);
        A += coef * std::polar(1.0, m * theta);
    }
    return A * std::sqrt(2.0 / (pi * k)) * std::polar(1.0, -pi / 4);
}

// integral_a^b e^{i q x} dx
inline cplx expIntegral(double q, double a, double b)
{
    if (std::abs(q) < 1e-12) return b - a;
    return (std::exp(cplx(0.0, q * b)) - std::exp(cplx(0.0, q * a))) / cplx(0.0, q);
}

// First Born far field of a constant contrast on an axis-aligned rectangle.
// Matches the far-field convention u^s ~ e^{ikr}/sqrt(r) A with
// A = e^{i pi/4}/sqrt(8 pi k) k^2 int V e^{ik(omega - xhat).y} dy.
inline cplx bornRectangle(double k, double V, double x0, double y0, double x1, double y1, double omegaAngle, double theta)
{
    const double qx = k * (std::cos(omegaAngle) - std::cos(theta)), qy = k * (std::sin(omegaAngle) - std::sin(theta));
    const cplx gamma = std::polar(1.0 / std::sqrt(8.0 * pi * k), pi / 4);
    return gamma * k * k * V * expIntegral(qx, x0, x1) * expIntegral(qy, y0, y1);
}

// 3D first Born far field of a constant contrast on an axis-aligned box;
// u^s ~ e^{ikr}/r A with A = k^2/(4 pi) int V e^{ik(omega - xhat).y} dy.
inline cplx bornBox(double k, double V, const double lo[3], const double hi[3], const double omega[3], const double xhat[3])
{
    cplx A = k * k * V / (4.0 * pi);
    for (int a = 0; a < 3; ++a) A *= expIntegral(k * (omega[a] - xhat[a]), lo[a], hi[a]);
    return A;
}

// Laplace transform of a 2D cone {r (cos t, sin t): t in [t0, t1]} by nested
// composite Simpson in polar coordinates, radial part truncated where the
// integrand has decayed below machine precision.
inline cplx coneLaplace2D(double t0, double t1, cplx z1, cplx z2, int nt = 2000, int nr = 4000)
{
    auto radial = [&](double t) {
        const cplx s = z1 * std::cos(t) + z2 * std::sin(t);
        const double L = 40.0 / -s.real();
        const double h = L / nr;
        cplx sum = 0.0;
        for (int i = 0; i <= nr; ++i) {
            const double r = i * h;
            const double w = (i == 0 || i == nr) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            sum += w * r * std::exp(s * r);
        }
        return sum * h / 3.0;
    };
    const double h = (t1 - t0) / nt;
    cplx sum = 0.0;
    for (int i = 0; i <= nt; ++i) {
        const double w = (i == 0 || i == nt) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * radial(t0 + i * h);
    }
    return sum * h / 3.0;
}

namespace detail {

// Composite Gauss-Legendre (30 nodes per panel) for complex integrands.
inline cplx gaussComplex(const std::function<cplx(double)>& f, double a, double b, int panels = 8)
{
    using GL = boost::math::quadrature::gauss<double, 30>;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    const double h = (b - a) / panels;
    cplx sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h, r = h / 2;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum += w[i] * r * f(c + r * x[i]);
            if (x[i] != 0.0) sum += w[i] * r * f(c - r * x[i]);
        }
    }
    return sum;
}

} // namespace detail

// Same transform with the radial integral done exactly: int dt / s(t)^2.
inline cplx coneLaplace2DAngular(double t0, double t1, cplx z1, cplx z2)
{
    return detail::gaussComplex([&](double t) {
        const cplx s = z1 * std::cos(t) + z2 * std::sin(t);
        return 1.0 / (s * s);
    }, t0, t1);
}

// Simplicial 3D cone with vertex 0 and generators g[0..2]:
// |det G| int over {t >= 0, t1 + t2 <= 1} of 2 / (-w.t)^3, w = G^T z, t3 = 1 - t1 - t2.
// Duffy map t1 = u, t2 = (1 - u) v.
inline cplx coneLaplace3DSimplex(const double g[3][3], const cplx z[3])
{
    cplx w[3];
    for (int j = 0; j < 3; ++j) w[j] = z[0] * g[j][0] + z[1] * g[j][1] + z[2] * g[j][2];
    const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                       + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    const cplx inner = detail::gaussComplex([&](double u) {
        return (1.0 - u) * detail::gaussComplex([&](double v) {
            const double t1 = u, t2 = (1.0 - u) * v;
            const cplx d = -(w[0] * t1 + w[1] * t2 + w[2] * (1.0 - t1 - t2));
            return 2.0 / (d * d * d);
        }, 0.0, 1.0, 4);
    }, 0.0, 1.0, 4);
    return std::abs(det) * inner;
}

// Unregularized lower incomplete gamma.
inline double lowerGamma(double s, double x) { return boost::math::tgamma_lower(s, x); }

inline double besselJ(double nu, double x) { return boost::math::cyl_bessel_j(nu, x); }
inline double besselY(double nu, double x) { return boost::math::cyl_neumann(nu, x); }

// Hausdorff distance between two closed polygons by dense boundary sampling.
// Accurate to the sampling step.
template <class Vec>
double sampledHausdorff(const std::vector<Vec>& A, const std::vector<Vec>& B, int perEdge = 400)
{
    auto sample = [&](const std::vector<Vec>& P) {
        std::vector<Vec> out;
        for (std::size_t i = 0; i < P.size(); ++i) {
            const Vec& a = P[i];
            const Vec& b = P[(i + 1) % P.size()];
            for (int j = 0; j < perEdge; ++j) {
                const double t = double(j) / perEdge;
                out.push_back(Vec{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0});
            }
        }
        return out;
    };
    auto inside = [](const std::vector<Vec>& P, const Vec& x) {
        for (std::size_t i = 0; i < P.size(); ++i) {
            const Vec& a = P[i];
            const Vec& b = P[(i + 1) % P.size()];
            if ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) < -1e-12) return false;
        }
        return true;
    };
    const auto sa = sample(A), sb = sample(B);
    auto directed = [&](const std::vector<Vec>& from, const std::vector<Vec>& toPoly, const std::vector<Vec>& to) {
        double worst = 0.0;
        for (const auto& x : from) {
            if (inside(toPoly, x)) continue;
            double best = 1e300;
            for (const auto& y : to) best = std::min(best, std::hypot(x[0] - y[0], x[1] - y[1]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(sa, B, sb), directed(sb, A, sa));
}

} // namespace oracle
