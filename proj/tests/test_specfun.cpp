#include <gtest/gtest.h>

#include <polyscat/specfun.hpp>

#include "oracles.hpp"

using namespace polyscat;

TEST(Bessel, HalfIntegerOrdersMatchOracle)
{
    for (double nu : {0.0, 0.5, 1.0, 1.5, 3.0, 6.5, 12.0, 20.5})
        for (double z : {0.1, 0.7, 2.0, 5.0, 13.0, 40.0}) {
            const auto b = specfun::besselJY(nu, z);
            const double J = oracle::besselJ(nu, z), Y = oracle::besselY(nu, z);
            EXPECT_NEAR(b.J, J, 1e-11 * std::max(1.0, std::abs(J))) << nu << " " << z;
            EXPECT_NEAR(b.Y, Y, 1e-11 * std::max(1.0, std::abs(Y))) << nu << " " << z;
        }
}

TEST(Bessel, DerivativesMatchOracle)
{
    for (double nu : {0.5, 2.0, 7.5})
        for (double z : {0.5, 3.0, 11.0}) {
            const auto b = specfun::besselJY(nu, z);
            const double dJ = 0.5 * (oracle::besselJ(nu - 1, z) - oracle::besselJ(nu + 1, z));
            const double dY = 0.5 * (oracle::besselY(nu - 1, z) - oracle::besselY(nu + 1, z));
            EXPECT_NEAR(b.dJ, dJ, 1e-10 * std::max(1.0, std::abs(dJ)));
            EXPECT_NEAR(b.dY, dY, 1e-10 * std::max(1.0, std::abs(dY)));
        }
}

TEST(Bessel, WronskianProperty)
{
    for (double nu = 0.0; nu <= 30.0; nu += 0.5)
        for (double z : {0.4, 1.0, 3.3, 9.0, 27.0}) {
            if (nu > 4 * z + 10) continue;   // Y overflows long before this matters
            const auto b = specfun::besselJY(nu, z);
            EXPECT_NEAR((b.J * b.dY - b.dJ * b.Y) * pi * z / 2.0, 1.0, 1e-9) << nu << " " << z;
        }
}

TEST(Hankel, OrderZeroAndOneKernels)
{
    for (double z : {1e-3, 0.3, 2.0, 10.0, 24.9, 25.1, 80.0}) {
        const cplx h0 = specfun::hankel0(z), h1 = specfun::hankel1(z);
        EXPECT_NEAR(std::abs(h0 - cplx(oracle::besselJ(0, z), oracle::besselY(0, z))), 0.0, 1e-10 * std::abs(h0));
        EXPECT_NEAR(std::abs(h1 - cplx(oracle::besselJ(1, z), oracle::besselY(1, z))), 0.0, 1e-10 * std::abs(h1));
    }
}

TEST(Hankel, LogMagnitudeAtLargeOrder)
{
    for (auto [nu, z] : {std::pair{80.0, 2.0}, std::pair{150.5, 10.0}, std::pair{40.0, 0.5}}) {
        const double ref = std::log(std::abs(oracle::besselY(nu, z)));
        EXPECT_NEAR(specfun::logAbsHankelH1(nu, z), ref, 1e-9 * std::abs(ref));
    }
}

TEST(Hankel, RejectsNonHalfIntegerOrder)
{
    EXPECT_THROW(specfun::hankelH1(0.3, 1.0), DomainError);
    EXPECT_THROW(specfun::hankelH1(1.0, -1.0), DomainError);
    EXPECT_THROW(specfun::hankelH1(300.0, 1.0), DomainError);
}

TEST(HankelCertificate, BoundHoldsOnRefinedGrid)
{
    const auto c = specfun::certifyHankelBounds(1.0, 6.0, 30.0, 33);
    EXPECT_FALSE(c.violated);
    // Check the certified two-sided bound on points between the certificate samples.
    for (int i = 0; i < 97; ++i) {
        const double z = 1.0 + 5.0 * (i + 0.5) / 97;
        for (double nu = 0.5; nu <= 30.0; nu += 0.5) {
            const double lh = specfun::logAbsHankelH1(nu, z);
            const double model = 0.5 * (std::log(4.0 / (pi * std::numbers::e * z)) + (2 * nu - 1) * std::log(2 * nu / (std::numbers::e * z)));
            EXPECT_LE(std::abs(lh - model), std::log(c.C)) << nu << " " << z;
        }
    }
}

TEST(HankelCertificate, StableUnderRefinement)
{
    const auto a = specfun::certifyHankelBounds(0.5, 8.0, 40.0, 65), b = specfun::certifyHankelBounds(0.5, 8.0, 40.0, 129);
    EXPECT_NEAR(b.C / a.C, 1.0, 0.1);
}

TEST(IncompleteGamma, MatchesOracle)
{
    for (double s : {0.25, 0.5, 1.0, 2.5, 5.0, 9.0})
        for (double x : {1e-3, 0.2, 1.0, 3.0, 7.5, 20.0, 60.0}) {
            const double ref = oracle::lowerGamma(s, x);
            EXPECT_NEAR(specfun::lowerIncompleteGamma(s, x), ref, 1e-12 * std::tgamma(s)) << s << " " << x;
            EXPECT_NEAR(specfun::upperIncompleteGamma(s, x), std::tgamma(s) - ref, 1e-12 * std::tgamma(s)) << s << " " << x;
        }
}

TEST(IncompleteGamma, BranchesAgreeInOverlap)
{
    for (double s : {0.5, 2.0, 4.5})
        for (double x : {s + 0.5, s + 1.5, s + 3.0})
            EXPECT_NEAR(specfun::lowerGammaSeries(s, x) + specfun::upperGammaFraction(s, x), std::tgamma(s), 1e-12 * std::tgamma(s));
}
