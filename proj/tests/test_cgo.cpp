#include <random>

#include <gtest/gtest.h>

#include <polyscat/cgo.hpp>

#include "oracles.hpp"

using namespace polyscat;
using geom::PolyCone;

TEST(ConeLaplace, QuarterPlaneClosedForm)
{
    const auto K = PolyCone::polyhedral({0, 0, 0}, {{1, 0, 0}, {0, 1, 0}}, 2);
    const CVec z{cplx(-1.0, 0.3), cplx(-0.5, -0.7), 0.0};
    EXPECT_NEAR(std::abs(cgo::coneLaplace(K, z).value - 1.0 / (z[0] * z[1])), 0.0, 1e-14);
}

TEST(ConeLaplace, OrthantClosedForm)
{
    const auto K = PolyCone::polyhedral({0, 0, 0}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 3);
    const CVec z{cplx(-1.0, 0.3), cplx(-0.5, -0.7), cplx(-2.0, 1.0)};
    EXPECT_NEAR(std::abs(cgo::coneLaplace(K, z).value + 1.0 / (z[0] * z[1] * z[2])), 0.0, 1e-14);
}

TEST(ConeLaplace, ObliqueConesMatchPolarOracle)
{
    for (auto [t0, open] : {std::pair{0.3, 0.8}, std::pair{2.0, 2.5}, std::pair{-1.0, 1.4}}) {
        const auto K = PolyCone::polyhedral({0, 0, 0}, {{std::cos(t0), std::sin(t0), 0}, {std::cos(t0 + open), std::sin(t0 + open), 0}}, 2);
        const Vec re = -1.0 * K.axis;
        const CVec z = toComplex(re, {0.3, -0.4, 0});
        const cplx ref = oracle::coneLaplace2D(t0, t0 + open, z[0], z[1]);
        EXPECT_NEAR(std::abs(cgo::coneLaplace(K, z).value - ref), 0.0, 1e-7 * std::abs(ref));
    }
}

TEST(ConeLaplace, HomogeneityOfDegreeMinusN)
{
    const auto K2 = PolyCone::polyhedral({0, 0, 0}, {{1, 0, 0}, {-0.2, 1, 0}}, 2);
    const auto K3 = PolyCone::polyhedral({0, 0, 0}, {{1, 0.1, 0}, {0, 1, 0.2}, {0.1, 0, 1}}, 3);
    const CVec z{cplx(-1.0, 0.2), cplx(-0.8, 0.1), cplx(-1.1, -0.3)};
    for (double t : {0.5, 3.0, 40.0}) {
        const CVec tz{t * z[0], t * z[1], t * z[2]};
        EXPECT_NEAR(std::abs(cgo::coneLaplace(K2, tz).value * t * t - cgo::coneLaplace(K2, z).value), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(cgo::coneLaplace(K3, tz).value * t * t * t - cgo::coneLaplace(K3, z).value), 0.0, 1e-12);
    }
}

TEST(ConeLaplace, DivergentDirectionThrows)
{
    const auto K = PolyCone::polyhedral({0, 0, 0}, {{1, 0, 0}, {0, 1, 0}}, 2);
    EXPECT_THROW(cgo::coneLaplace(K, CVec{cplx(1.0), cplx(-1.0), 0.0}), DomainError);
}

TEST(RhoCurve, NullConditionOnRandomSamples)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const int dim = 2 + (i % 2);
        const Vec axis = normalized(Vec{u(rng) - 0.5, u(rng) - 0.5, dim == 3 ? u(rng) - 0.5 : 0.0});
        const double tau = 0.1 + 1000 * u(rng), k = 0.1 + 10 * u(rng);
        const auto d = cgo::buildDirection(PolyCone::spherical({0, 0, 0}, axis, 1.0, dim), k, tau);
        const cplx rr = d.rho[0] * d.rho[0] + d.rho[1] * d.rho[1] + d.rho[2] * d.rho[2];
        EXPECT_LT(std::abs(rr + k * k), 1e-12 * (tau * tau + k * k));
    }
}

TEST(LowerBoundCurve, QuarterPlaneApproachesLimit)
{
    const auto P = PolyCone::polyhedral({0, 0, 0}, {{1, 0, 0}, {0, 1, 0}}, 2);
    const auto Q = PolyCone::spherical({0, 0, 0}, {1, 1, 0}, 3 * pi / 8, 2);
    std::vector<double> taus;
    for (int j = 0; j < 10; ++j) taus.push_back(4.0 * std::pow(2.0, j));
    const auto c = cgo::lowerBoundCurve(P, Q, 2.0, taus);
    EXPECT_GT(c.c, 0.0);
    for (std::size_t i = 1; i < taus.size(); ++i) EXPECT_LT(c.deviations[i], c.deviations[i - 1]);
    // Mean-value bound: at least tau^{-1} decay.
    EXPECT_LT(c.deviations.back() * taus.back(), c.deviations.front() * taus.front());
}

TEST(FaddeevExponents, CasesAndRanges)
{
    const auto a = cgo::faddeevExponents(2, 0.49, cgo::defaultIntegrability(2));
    EXPECT_EQ(a.caseIndex, 1);
    EXPECT_NEAR(a.decay, 2.0 / 3.0, 1e-12);
    const auto b = cgo::faddeevExponents(3, 0.49, cgo::defaultIntegrability(3));
    EXPECT_EQ(b.caseIndex, 3);
    EXPECT_NEAR(b.decay, 0.5, 1e-12);
    EXPECT_NEAR(3.0 / b.p + b.beta, b.decay, 1e-12);
    EXPECT_THROW(cgo::faddeevExponents(2, 0.49, 2.5), DomainError);
}

TEST(Cgo, ZeroContrastIsPureExponential)
{
    const auto g = fields::Grid::cells(2, {-1, -1, 0}, 2.0 / 64, 64);
    const auto d = cgo::buildDirection(PolyCone::spherical({0.5, 0.5, 0}, {-1, -1, 0}, 1.0, 2), 2.0, 5.0);
    const auto s = cgo::buildCgo(fields::ContrastField::zero(), 2.0, d, g);
    EXPECT_EQ(cgo::lpNorm(s.faddeev.psi, 2.0), 0.0);
}

TEST(Cgo, SolvesHelmholtzAwayFromTheInterface)
{
    const auto box = geom::Polytope::rectangle(-0.25, -0.25, 0.25, 0.25);
    const auto V = fields::ContrastField::constant(box, 0.3);
    const auto g = fields::Grid::cells(2, {-1, -1, 0}, 2.0 / 256, 256);
    const auto Q = PolyCone::spherical({-0.25, -0.25, 0}, {1, 1, 0}, 3 * pi / 8, 2);
    for (double tau : {4.0, 8.0, 16.0}) {
        const auto s = cgo::buildCgo(V, 2.0, cgo::buildDirection(Q, 2.0, tau), g);
        EXPECT_LT(cgo::cgoResidual(s, V), 2e-2) << tau;
    }
}

TEST(Cgo, RemainderDecaysWithTau)
{
    const auto box = geom::Polytope::rectangle(-0.25, -0.25, 0.25, 0.25);
    const auto V = fields::ContrastField::constant(box, 0.3);
    const auto g = fields::Grid::cells(2, {-1, -1, 0}, 2.0 / 128, 128);
    const auto Q = PolyCone::spherical({-0.25, -0.25, 0}, {1, 1, 0}, 3 * pi / 8, 2);
    const auto a = cgo::buildCgo(V, 2.0, cgo::buildDirection(Q, 2.0, 8.0), g);
    const auto b = cgo::buildCgo(V, 2.0, cgo::buildDirection(Q, 2.0, 32.0), g);
    const double slope = std::log(b.faddeev.normP / a.faddeev.normP) / std::log(b.faddeev.dir.imRhoNorm() / a.faddeev.dir.imRhoNorm());
    EXPECT_LT(slope, -a.faddeev.exponents.decay + 0.1);
}
