#include <gtest/gtest.h>

#include <polyscat/stability.hpp>

using namespace polyscat;
using geom::PolyCone;
using geom::Polytope;

TEST(TruncatedCone, VolumeRuleIntegratesPolynomials)
{
    for (int dim : {2, 3}) {
        const auto cone = PolyCone::spherical({0.2, 0.1, 0.0}, dim == 2 ? Vec{1, 1, 0} : Vec{1, 1, 1}, 1.0, dim);
        const stability::TruncatedCone Q{cone, 0.3, std::nullopt};
        double vol = 0.0, second = 0.0;
        for (const auto& q : Q.volumeRule(16, 16)) {
            vol += q.w;
            second += q.w * std::pow(dist(q.x, cone.vertex), 2);
        }
        const double h = 0.3, a = 1.0;
        const double refVol = dim == 2 ? a * h * h : 2 * pi / 3 * h * h * h * (1 - std::cos(a));
        const double refSecond = dim == 2 ? 2 * a * std::pow(h, 4) / 4 : 2 * pi * (1 - std::cos(a)) * std::pow(h, 5) / 5;
        EXPECT_NEAR(vol, refVol, 1e-13);
        EXPECT_NEAR(second, refSecond, 1e-13);
    }
}

TEST(TruncatedCone, DivergenceTheoremOnBoundaryRule)
{
    // int_{dQ} F.n = int_Q div F for F = (x^2, x y, z) (div = 3x + 1 in 3D, 3x in 2D).
    for (int dim : {2, 3}) {
        const auto cone = PolyCone::spherical({0.1, -0.2, 0.05 * (dim == 3)}, dim == 2 ? Vec{0.3, 1, 0} : Vec{1, -0.5, 0.2}, 0.9, dim);
        const stability::TruncatedCone Q{cone, 0.4, std::nullopt};
        double flux = 0.0, div = 0.0;
        for (const auto& q : Q.boundaryRule(24, 24)) {
            const Vec F{q.x[0] * q.x[0], q.x[0] * q.x[1], dim == 3 ? q.x[2] : 0.0};
            flux += q.w * dot(F, q.normal);
        }
        for (const auto& q : Q.volumeRule(24, 24)) div += q.w * (3 * q.x[0] + (dim == 3 ? 1.0 : 0.0));
        EXPECT_NEAR(flux, div, 1e-12) << dim;
    }
}

TEST(TruncatedCone, MeasuresMatchBoundaryWeights)
{
    const auto cone = PolyCone::spherical({0, 0, 0}, {0, 0, 1}, 0.7, 3);
    const stability::TruncatedCone Q{cone, 0.5, std::nullopt};
    double flat = 0.0, cap = 0.0;
    for (const auto& q : Q.boundaryRule(12, 12)) (q.part == 0 ? flat : cap) += q.w;
    EXPECT_NEAR(flat, Q.flatMeasure(), 1e-12);
    EXPECT_NEAR(cap, Q.capMeasure(), 1e-12);
}

TEST(Tau, ClosedFormBalancesTheTwoTerms)
{
    const double h = 0.1, delta = 1e-3, m = 2.0 / 3;
    const auto t = stability::optimizeTau(h, delta, m, 2);
    const auto [a, b] = stability::tauBalanceTerms(t.raw, h, delta, m, 2);
    EXPECT_NEAR(a / b, 1.0, 1e-12);
    EXPECT_FALSE(t.clamped);
    const auto c = stability::optimizeTau(h, delta, m, 2, 1e6);
    EXPECT_TRUE(c.clamped);
    EXPECT_EQ(c.tau, 1e6);
    EXPECT_THROW(stability::optimizeTau(2.0, delta, m, 2), DomainError);
}

TEST(Fit, SlopeOfExactLine)
{
    const std::vector<double> x{0.0, 1.0, 2.0, 5.0}, y{1.0, -1.0, -3.0, -9.0};
    EXPECT_NEAR(stability::fitSlope(x, y), -2.0, 1e-14);
}

TEST(Budget, ConeMeasures)
{
    const auto P = Polytope::rectangle(-0.5, -0.5, 0.5, 0.5);
    EXPECT_NEAR(stability::coneMeasure(stability::vertexCone(P, stability::vertexIndex(P, {0.5, 0.5, 0}))), pi / 2, 1e-14);
    const auto B = Polytope::box({0, 0, 0}, {1, 1, 1});
    EXPECT_NEAR(stability::coneMeasure(stability::vertexCone(B, 0)), pi / 2, 1e-12);   // octant: 4 pi / 8
    EXPECT_THROW(stability::vertexIndex(P, {0.1, 0.1, 0}), DomainError);
}

TEST(Orthogonality, IdentityHoldsForShrunkSquare)
{
    const double k = 2.0;
    const auto P = Polytope::rectangle(-0.5, -0.5, 0.5, 0.5);
    const auto V = fields::ContrastField::constant(P, 0.3), Vp = fields::ContrastField::constant(stability::shrunkSquare(0.1), 0.3);
    const auto grid = fields::Grid::cells(2, {-1, -1, 0}, 2.0 / 256, 256);
    const auto A = solver::solveForward(V, k, {1, 0, 0}, grid, 1e-10);
    const auto B = solver::solveForward(Vp, k, {1, 0, 0}, grid, 1e-10);
    const auto Q = PolyCone::spherical({0.5, 0.5, 0}, {-1, -1, 0}, 3 * pi / 8, 2);
    const auto u0 = cgo::buildCgo(V, k, cgo::buildDirection(Q, k, 20.0), grid);
    const auto rep = stability::checkOrthogonality(V, A, B.total, u0, Q, 0.1);
    EXPECT_LT(rep.relativeMismatch, 0.03);
    EXPECT_GT(std::abs(rep.volumeTerm), 0.0);

    const auto budget = stability::assembleBudget(V, A, B.total, u0, Q, 0.1, 1e-2, 2.0 / 3);
    EXPECT_TRUE(budget.holds());
    EXPECT_NEAR(budget.lhs, 0.3 * std::abs(cgo::coneLaplace(stability::vertexCone(P, 2), u0.faddeev.dir).value * budget.uPrimeAtVertex), 1e-12);

    // The identity needs u' to solve the homogeneous equation on the cone.
    EXPECT_THROW(stability::checkOrthogonality(V, A, A.total, u0, Q, 0.1), DomainError);
}

TEST(Corner, NoiseFloorAndLadderSmoke)
{
    const auto grid = fields::Grid::cells(2, {-1, -1, 0}, 2.0 / 64, 64);
    stability::CornerConfig cfg;
    const auto P = Polytope::rectangle(-0.5, -0.5, 0.5, 0.5);
    std::vector<stability::CornerScene> scenes{
        {"weak", fields::ContrastField::constant(P, 0.02), {0.5, 0.5, 0}, 1.0, true},
        {"strong", fields::ContrastField::constant(P, 0.2), {0.5, 0.5, 0}, 1.0, true},
    };
    const auto r = stability::runCornerLowerBoundExperiment(scenes, grid, cfg);
    EXPECT_EQ(r.zeroNorm, 0.0);
    EXPECT_GT(r.noiseFloor, 0.0);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_LT(r.records[0].ffNorm, r.records[1].ffNorm);
    for (const auto& rec : r.records) {
        EXPECT_TRUE(rec.aboveFloor);
        // Fitted C keeps every lower bound below the measurement.
        EXPECT_LE(rec.logBound, std::log(rec.ffNorm) + 1e-9);
    }
}
