#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "fft.hpp"
#include "fields.hpp"
#include "gmres.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"
#include "vec.hpp"

namespace polyscat::solver {

// Keep the Vec operators visible next to the local overloads.
using polyscat::operator-;
using polyscat::operator+;

using fields::ContrastField;
using fields::Grid;
using fields::WaveField;

struct FarFieldPattern {
    int dim = 2;
    double k = 0.0;
    std::vector<Vec> directions;
    std::vector<cplx> values;

    std::size_t size() const { return values.size(); }

    // Equal-weight quadrature on the unit sphere; exact for trigonometric
    // polynomials in 2D, approximate (Fibonacci) in 3D.
    double weight() const
    {
        if (directions.empty()) return 0.0;
        return (dim == 2 ? 2.0 * pi : 4.0 * pi) / static_cast<double>(directions.size());
    }

    double l2Norm() const
    {
        double s = 0.0;
        for (const auto& v : values) s += std::norm(v);
        return std::sqrt(s * weight());
    }

    // Polar angle of each 2D direction in [0, 2pi).
    double angle(std::size_t i) const
    {
        double a = std::atan2(directions[i][1], directions[i][0]);
        return a < 0.0 ? a + 2.0 * pi : a;
    }
};

inline FarFieldPattern operator-(const FarFieldPattern& a, const FarFieldPattern& b)
{
    if (a.dim != b.dim || a.size() != b.size()) throw DomainError("far-field patterns sampled differently");
    FarFieldPattern d = a;
    for (std::size_t i = 0; i < d.size(); ++i) d.values[i] -= b.values[i];
    return d;
}

// 2D: equispaced angles 2 pi j / m. 3D: Fibonacci sphere.
inline std::vector<Vec> uniformDirections(int dim, int m)
{
    if (m < 1) throw DomainError("need at least one direction");
    std::vector<Vec> d(m);
    if (dim == 2) {
        for (int j = 0; j < m; ++j) {
            const double t = 2.0 * pi * j / m;
            d[j] = {std::cos(t), std::sin(t), 0.0};
        }
        return d;
    }
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < m; ++j) {
        const double z = 1.0 - (2.0 * j + 1.0) / m;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * j;
        d[j] = {r * std::cos(phi), r * std::sin(phi), z};
    }
    return d;
}

inline int defaultFarFieldSamples(int dim) { return dim == 2 ? 64 : 256; }

// Outgoing fundamental solution of (Delta + k^2).
inline cplx fundamental(int dim, double k, double r)
{
    if (dim == 2) return cplx{0.0, 0.25} * specfun::hankel0(k * r);
    return std::polar(1.0 / (4.0 * pi * r), k * r);
}

// Far-field factor: Phi(x - y) ~ gamma e^{ik|x|}/|x|^{(n-1)/2} e^{-ik xhat.y}.
inline cplx farFieldConstant(int dim, double k)
{
    if (dim == 2) return std::polar(1.0 / std::sqrt(8.0 * pi * k), pi / 4.0);
    return 1.0 / (4.0 * pi);
}

// Integral of the fundamental solution over the h-cell centred at 0.
inline cplx singularCellIntegral(int dim, double k, double h)
{
    const double c = 0.5 * h;
    const auto g = quad::mapped(quad::gaussLegendre(32), 0.0, 1.0);
    cplx sum = 0.0;
    if (dim == 2) {
        // 8 congruent triangles {0 <= y <= x <= c}; x = t c, y = t s c, t = u^2.
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double u = g.x[i], t = u * u;
            for (std::size_t j = 0; j < g.x.size(); ++j) {
                const double s = g.x[j];
                const double r = t * c * std::sqrt(1.0 + s * s);
                sum += g.w[i] * g.w[j] * fundamental(2, k, r) * t * 2.0 * u;
            }
        }
        return 8.0 * c * c * sum;
    }
    // 6 pyramids over the faces; x = t c (1, a, b) with a, b in [-1, 1].
    const auto ab = quad::gaussLegendre(16);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double t = g.x[i];
        for (std::size_t j = 0; j < ab.x.size(); ++j)
            for (std::size_t l = 0; l < ab.x.size(); ++l) {
                const double q = std::sqrt(1.0 + ab.x[j] * ab.x[j] + ab.x[l] * ab.x[l]);
                // e^{ikr}/(4 pi r) * t^2 c^3 with r = t c q.
                sum += g.w[i] * ab.w[j] * ab.w[l] * std::polar(t * c * c / (4.0 * pi * q), k * t * c * q);
            }
    }
    return 6.0 * sum;
}

// Discrete volume potential (G f)_i = sum_j K(i - j) f_j on a grid, with
// K(d) = Phi(h d) h^n off the diagonal and the cell integral on it.
class VolumePotential {
public:
    VolumePotential(const Grid& grid, double k) : grid_(grid), k_(k)
    {
        const int n = grid.dim;
        std::vector<int> dims;
        for (int a = n - 1; a >= 0; --a) dims.push_back(2 * grid.extent[a]);
        plan_ = std::make_unique<FftPlan>(dims);
        pad_ = {2 * grid.extent[0], 2 * grid.extent[1], n == 3 ? 2 * grid.extent[2] : 1};

        // Kernel on nonnegative offsets, mirrored into the periodic layout.
        const std::array<int, 3> q{grid.extent[0] + 1, grid.extent[1] + 1, n == 3 ? grid.extent[2] + 1 : 1};
        std::vector<cplx> quadrant(static_cast<std::size_t>(q[0]) * q[1] * q[2]);
        const double vol = grid.cellVolume();
        const cplx diag = singularCellIntegral(n, k, grid.h);
        for (int l = 0; l < q[2]; ++l)
            for (int j = 0; j < q[1]; ++j)
                for (int i = 0; i < q[0]; ++i) {
                    const double r = grid.h * std::sqrt(double(i) * i + double(j) * j + double(l) * l);
                    quadrant[i + q[0] * (j + static_cast<std::size_t>(q[1]) * l)] =
                        r == 0.0 ? diag : fundamental(n, k, r) * vol;
                }
        kernelHat_.resize(plan_->size());
        cplx* d = plan_->data();
        for (int l = 0; l < pad_[2]; ++l)
            for (int j = 0; j < pad_[1]; ++j)
                for (int i = 0; i < pad_[0]; ++i) {
                    const int ai = std::min(i, pad_[0] - i), aj = std::min(j, pad_[1] - j),
                              al = n == 3 ? std::min(l, pad_[2] - l) : 0;
                    d[padIndex(i, j, l)] = quadrant[ai + q[0] * (aj + static_cast<std::size_t>(q[1]) * al)];
                }
        plan_->forward();
        const double scale = 1.0 / static_cast<double>(plan_->size());
        for (std::size_t t = 0; t < plan_->size(); ++t) kernelHat_[t] = d[t] * scale;
    }

    const Grid& grid() const { return grid_; }
    double k() const { return k_; }

    // out = G f over the whole grid.
    void apply(const std::vector<cplx>& f, std::vector<cplx>& out) const
    {
        cplx* d = plan_->data();
        std::fill(d, d + plan_->size(), cplx{0.0, 0.0});
        for (int l = 0; l < grid_.extent[2]; ++l)
            for (int j = 0; j < grid_.extent[1]; ++j)
                for (int i = 0; i < grid_.extent[0]; ++i) d[padIndex(i, j, l)] = f[grid_.index(i, j, l)];
        plan_->forward();
        for (std::size_t t = 0; t < plan_->size(); ++t) d[t] *= kernelHat_[t];
        plan_->backward();
        out.resize(grid_.size());
        for (int l = 0; l < grid_.extent[2]; ++l)
            for (int j = 0; j < grid_.extent[1]; ++j)
                for (int i = 0; i < grid_.extent[0]; ++i) out[grid_.index(i, j, l)] = d[padIndex(i, j, l)];
    }

private:
    std::size_t padIndex(int i, int j, int l) const
    {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(pad_[0]) * (j + static_cast<std::size_t>(pad_[1]) * l);
    }

    Grid grid_;
    double k_;
    std::array<int, 3> pad_{};
    std::unique_ptr<FftPlan> plan_;
    std::vector<cplx> kernelHat_;
};

struct SolverError : NumericalError {
    std::vector<double> history;
    SolverError(const std::string& what, std::vector<double> h) : NumericalError(what), history(std::move(h)) {}
};

struct SolverOptions {
    double tol = 1e-8;
    int restart = 50;
    int maxIter = 2000;
    int farFieldSamples = 0;   // 0: dimension default
};

struct ScatteringSolution {
    WaveField incident;
    WaveField total;
    WaveField scattered;
    FarFieldPattern farField;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;

    Vec omega{1, 0, 0};
    std::vector<cplx> contrast;          // V at grid nodes
    std::vector<std::size_t> support;    // nodes with V != 0
    double infAbsTotal = 0.0;            // min |u| over grid nodes outside supp V

    const Grid& grid() const { return total.grid; }
    double k() const { return total.k; }
};

// A(theta) = gamma_n k^2 sum_j e^{-ik theta.y_j} V_j u_j h^n.
inline FarFieldPattern farFieldFromSamples(const Grid& grid, const std::vector<cplx>& V, const std::vector<cplx>& u,
                                           const std::vector<std::size_t>& support, double k,
                                           const std::vector<Vec>& directions)
{
    FarFieldPattern ff;
    ff.dim = grid.dim;
    ff.k = k;
    ff.directions = directions;
    ff.values.assign(directions.size(), cplx{0.0, 0.0});
    const cplx pre = farFieldConstant(grid.dim, k) * k * k * grid.cellVolume();
    std::vector<Vec> pts(support.size());
    std::vector<cplx> src(support.size());
    for (std::size_t s = 0; s < support.size(); ++s) {
        pts[s] = grid.point(support[s]);
        src[s] = V[support[s]] * u[support[s]];
    }
    for (std::size_t d = 0; d < directions.size(); ++d) {
        cplx acc = 0.0;
        for (std::size_t s = 0; s < pts.size(); ++s) acc += std::polar(1.0, -k * dot(directions[d], pts[s])) * src[s];
        ff.values[d] = pre * acc;
    }
    return ff;
}

inline std::vector<std::size_t> supportOf(const std::vector<cplx>& V)
{
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < V.size(); ++i)
        if (V[i] != cplx{0.0, 0.0}) s.push_back(i);
    return s;
}

inline FarFieldPattern farFieldFromVolume(const ContrastField& V, const WaveField& u, double k,
                                          const std::vector<Vec>& directions)
{
    const auto samples = V.sample(u.grid);
    return farFieldFromSamples(u.grid, samples, u.values, supportOf(samples), k, directions);
}

inline void checkSupportInterior(const Grid& grid, const std::vector<cplx>& V)
{
    for (std::size_t idx = 0; idx < V.size(); ++idx) {
        if (V[idx] == cplx{0.0, 0.0}) continue;
        const auto c = grid.unindex(idx);
        for (int a = 0; a < grid.dim; ++a)
            if (c[a] == 0 || c[a] == grid.extent[a] - 1)
                throw DomainError("contrast support touches the grid boundary");
    }
}

// Lippmann-Schwinger solve on supp V; the total field elsewhere follows
// from one more application of the volume potential.
inline ScatteringSolution solveForwardSampled(const std::vector<cplx>& V, double k, const Vec& omega, const Grid& grid,
                                              const SolverOptions& opt = {})
{
    if (!(k > 0.0)) throw DomainError("wavenumber must be positive");
    if (!(opt.tol > 0.0)) throw DomainError("tolerance must be positive");
    if (V.size() != grid.size()) throw DomainError("contrast samples do not match grid");
    checkSupportInterior(grid, V);

    ScatteringSolution sol;
    sol.omega = omega;
    sol.contrast = V;
    sol.support = supportOf(V);
    sol.incident = fields::planeWave(k, omega, grid);
    sol.total = sol.incident;
    sol.total.role = fields::Role::Total;
    sol.scattered = WaveField(grid, k, fields::Role::Scattered);
    const int m = opt.farFieldSamples > 0 ? opt.farFieldSamples : defaultFarFieldSamples(grid.dim);
    const auto dirs = uniformDirections(grid.dim, m);

    if (!sol.support.empty()) {
        VolumePotential G(grid, k);
        const auto& S = sol.support;
        const double k2 = k * k;
        std::vector<cplx> full(grid.size()), conv;
        auto apply = [&](const std::vector<cplx>& x, std::vector<cplx>& y) {
            std::fill(full.begin(), full.end(), cplx{0.0, 0.0});
            for (std::size_t s = 0; s < S.size(); ++s) full[S[s]] = V[S[s]] * x[s];
            G.apply(full, conv);
            y.resize(S.size());
            for (std::size_t s = 0; s < S.size(); ++s) y[s] = x[s] - k2 * conv[S[s]];
        };
        std::vector<cplx> b(S.size()), x(S.size());
        for (std::size_t s = 0; s < S.size(); ++s) x[s] = b[s] = sol.incident.values[S[s]];
        const auto res = gmres(apply, b, x, opt.tol, opt.restart, opt.maxIter);
        sol.iterations = res.iterations;
        sol.history = res.history;
        if (!res.converged)
            throw SolverError("Lippmann-Schwinger iteration did not converge (residual " + std::to_string(res.relResidual) + ")",
                              res.history);

        std::fill(full.begin(), full.end(), cplx{0.0, 0.0});
        for (std::size_t s = 0; s < S.size(); ++s) full[S[s]] = V[S[s]] * x[s];
        G.apply(full, conv);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            sol.scattered.values[i] = k2 * conv[i];
            sol.total.values[i] = sol.incident.values[i] + sol.scattered.values[i];
        }
        // Keep the solved unknowns on the support.
        for (std::size_t s = 0; s < S.size(); ++s) {
            sol.total.values[S[s]] = x[s];
            sol.scattered.values[S[s]] = x[s] - sol.incident.values[S[s]];
        }
        // Residual over the whole grid, relative to the incident wave.
        double num = 0.0, den = 0.0;
        for (std::size_t s = 0; s < S.size(); ++s) num += std::norm(sol.total.values[S[s]] - b[s] - k2 * conv[S[s]]);
        for (const auto& v : sol.incident.values) den += std::norm(v);
        sol.residual = std::sqrt(num / den);
        if (!sol.total.finite()) throw NumericalError("solver produced non-finite values");
    }
    sol.farField = farFieldFromSamples(grid, V, sol.total.values, sol.support, k, dirs);

    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (V[i] == cplx{0.0, 0.0}) inf = std::min(inf, std::abs(sol.total.values[i]));
    sol.infAbsTotal = inf;
    return sol;
}

inline ScatteringSolution solveForward(const ContrastField& V, double k, const Vec& omega, const Grid& grid,
                                       const SolverOptions& opt = {})
{
    return solveForwardSampled(V.sample(grid), k, omega, grid, opt);
}

inline ScatteringSolution solveForward(const ContrastField& V, double k, const Vec& omega, const Grid& grid, double tol)
{
    SolverOptions opt;
    opt.tol = tol;
    return solveForward(V, k, omega, grid, opt);
}

// Scattered wave at arbitrary points by direct summation of the volume
// potential; points must lie off the support cells.
inline std::vector<cplx> scatteredAt(const ScatteringSolution& sol, const std::vector<Vec>& pts)
{
    const Grid& g = sol.grid();
    const double k = sol.k();
    const double pre = k * k * g.cellVolume();
    std::vector<Vec> ys(sol.support.size());
    std::vector<cplx> src(sol.support.size());
    for (std::size_t s = 0; s < ys.size(); ++s) {
        ys[s] = g.point(sol.support[s]);
        src[s] = sol.contrast[sol.support[s]] * sol.total.values[sol.support[s]];
    }
    std::vector<cplx> out(pts.size(), cplx{0.0, 0.0});
    for (std::size_t p = 0; p < pts.size(); ++p) {
        cplx acc = 0.0;
        for (std::size_t s = 0; s < ys.size(); ++s) {
            const double r = dist(pts[p], ys[s]);
            if (r < 0.5 * g.h) throw DomainError("evaluation point inside a support cell");
            acc += fundamental(g.dim, k, r) * src[s];
        }
        out[p] = pre * acc;
    }
    return out;
}

// Scattered wave on an n-per-axis grid over the box around B(center, r2),
// nonzero only on the annulus r1 <= |x - center| <= r2.
inline WaveField nearFieldOnAnnulus(const ScatteringSolution& sol, const Vec& center, double r1, double r2, int n = 48)
{
    if (!(r1 > 0.0) || !(r2 > r1)) throw DomainError("annulus radii must satisfy 0 < r1 < r2");
    const Grid& g = sol.grid();
    for (auto s : sol.support)
        if (dist(g.point(s), center) >= r1 - g.h) throw DomainError("annulus intersects the contrast support");
    const double h = 2.0 * r2 / (n - 1);
    Vec lo = center - Vec{r2, r2, g.dim == 3 ? r2 : 0.0};
    const Grid ag = Grid::make(g.dim, lo, h, {n, n, g.dim == 3 ? n : 1});
    WaveField w(ag, sol.k(), fields::Role::Scattered);
    std::vector<Vec> pts;
    std::vector<std::size_t> at;
    ag.forEach([&](std::size_t i, const Vec& x) {
        const double r = dist(x, center);
        if (r >= r1 && r <= r2) {
            pts.push_back(x);
            at.push_back(i);
        }
    });
    const auto vals = scatteredAt(sol, pts);
    for (std::size_t t = 0; t < at.size(); ++t) w.values[at[t]] = vals[t];
    return w;
}

// inf |u| over grid nodes in B(center, R) outside supp V.
inline double infAbsTotal(const ScatteringSolution& sol, const Vec& center, double R)
{
    double inf = std::numeric_limits<double>::infinity();
    sol.grid().forEach([&](std::size_t i, const Vec& x) {
        if (sol.contrast[i] == cplx{0.0, 0.0} && dist(x, center) <= R) inf = std::min(inf, std::abs(sol.total.values[i]));
    });
    return inf;
}

} // namespace polyscat::solver
