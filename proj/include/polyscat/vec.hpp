#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace polyscat {

using cplx = std::complex<double>;
using namespace std::complex_literals;

inline constexpr double pi = std::numbers::pi;

// Points in R^2 live in the first two slots; the third stays zero.
using Vec = std::array<double, 3>;
using CVec = std::array<cplx, 3>;

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec operator*(const Vec& a, double s) { return s * a; }

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }

inline Vec cross(const Vec& a, const Vec& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// z-component of the 2D cross product.
inline double cross2(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

inline Vec normalized(const Vec& a)
{
    const double n = norm(a);
    if (n == 0.0) throw DomainError("cannot normalize zero vector");
    return (1.0 / n) * a;
}

// Bilinear dot without conjugation: rho . rho + k^2 = 0 uses this.
inline cplx dot(const CVec& a, const CVec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline cplx dot(const CVec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec realPart(const CVec& a) { return {a[0].real(), a[1].real(), a[2].real()}; }
inline Vec imagPart(const CVec& a) { return {a[0].imag(), a[1].imag(), a[2].imag()}; }

inline CVec toComplex(const Vec& re, const Vec& im)
{
    return {cplx(re[0], im[0]), cplx(re[1], im[1]), cplx(re[2], im[2])};
}

inline double cnorm(const CVec& a)
{
    return std::sqrt(std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]));
}

} // namespace polyscat
