#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "vec.hpp"

namespace polyscat::quad {

struct Rule {
    std::vector<double> x;   // nodes on [-1, 1]
    std::vector<double> w;
};

// Gauss-Legendre nodes by Newton iteration on P_n.
inline Rule gaussLegendre(int n)
{
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

// Same rule mapped to [a, b].
inline Rule mapped(const Rule& base, double a, double b)
{
    Rule r = base;
    const double c = 0.5 * (a + b), s = 0.5 * (b - a);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        r.x[i] = c + s * base.x[i];
        r.w[i] = s * base.w[i];
    }
    return r;
}

} // namespace polyscat::quad
