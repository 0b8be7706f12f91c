#pragma once

#include <cmath>
#include <vector>

#include "vec.hpp"

namespace polyscat {

struct GmresResult {
    int iterations = 0;
    double relResidual = 0.0;
    bool converged = false;
    std::vector<double> history;
};

namespace detail {

inline double norm2(const std::vector<cplx>& v)
{
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

inline cplx cdot(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

} // namespace detail

// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
// apply(x, y) must write A x into y.
template <class Op>
GmresResult gmres(Op&& apply, const std::vector<cplx>& b, std::vector<cplx>& x, double tol = 1e-8, int restart = 50,
                  int maxIter = 2000)
{
    const std::size_t n = b.size();
    GmresResult res;
    const double bnorm = detail::norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), cplx{0.0, 0.0});
        res.converged = true;
        return res;
    }
    std::vector<cplx> r(n), w(n);
    std::vector<std::vector<cplx>> V;
    std::vector<std::vector<cplx>> H;
    std::vector<cplx> cs, sn, g;
    while (res.iterations < maxIter) {
        apply(x, w);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
        double beta = detail::norm2(r);
        res.relResidual = beta / bnorm;
        if (res.relResidual <= tol) {
            res.converged = true;
            return res;
        }
        V.assign(1, std::vector<cplx>(n));
        for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
        H.assign(restart + 1, std::vector<cplx>(restart, cplx{0.0, 0.0}));
        cs.assign(restart, 0.0);
        sn.assign(restart, 0.0);
        g.assign(restart + 1, 0.0);
        g[0] = beta;
        int j = 0;
        for (; j < restart && res.iterations < maxIter; ++j) {
            ++res.iterations;
            apply(V[j], w);
            for (int i = 0; i <= j; ++i) {
                H[i][j] = detail::cdot(V[i], w);
                for (std::size_t t = 0; t < n; ++t) w[t] -= H[i][j] * V[i][t];
            }
            const double hn = detail::norm2(w);
            H[j + 1][j] = hn;
            for (int i = 0; i < j; ++i) {
                const cplx tmp = std::conj(cs[i]) * H[i][j] + std::conj(sn[i]) * H[i + 1][j];
                H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
                H[i][j] = tmp;
            }
            const double denom = std::sqrt(std::norm(H[j][j]) + hn * hn);
            cs[j] = denom == 0.0 ? cplx{1.0} : H[j][j] / denom;
            sn[j] = denom == 0.0 ? cplx{0.0} : cplx{hn / denom};
            H[j][j] = denom;
            H[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = std::conj(cs[j]) * g[j];
            res.relResidual = std::abs(g[j + 1]) / bnorm;
            res.history.push_back(res.relResidual);
            if (res.relResidual <= tol || hn == 0.0) {
                ++j;
                break;
            }
            V.emplace_back(n);
            for (std::size_t t = 0; t < n; ++t) V[j + 1][t] = w[t] / hn;
        }
        // Back substitution for the Krylov coefficients.
        std::vector<cplx> y(j);
        for (int i = j - 1; i >= 0; --i) {
            cplx s = g[i];
            for (int l = i + 1; l < j; ++l) s -= H[i][l] * y[l];
            y[i] = s / H[i][i];
        }
        for (int i = 0; i < j; ++i)
            for (std::size_t t = 0; t < n; ++t) x[t] += y[i] * V[i][t];
        if (res.relResidual <= tol) {
            // Confirm with the true residual.
            apply(x, w);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
            res.relResidual = detail::norm2(r) / bnorm;
            if (res.relResidual <= tol * 1.01) {
                res.converged = true;
                return res;
            }
        }
    }
    return res;
}

} // namespace polyscat
