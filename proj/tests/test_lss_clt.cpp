#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ellspec/lss_clt.hpp"

using namespace ellspec;

namespace {

const DiscreteSpectrum kDelta1 = DiscreteSpectrum::delta(1.0);
const DiscreteSpectrum kTwoAtom({1.0, 2.0}, {0.5, 0.5});

// the tau = 2 parameter set written without the vanished excess terms
MomentCltParams gaussian_reference(double c, const DiscreteSpectrum& h) {
    const double g1 = h.moment(1), g2 = h.moment(2), g3 = h.moment(3), g4 = h.moment(4);
    MomentCltParams out{};
    out.v1 = 0.0;
    out.v2 = c * g2;
    out.psi11 = 2.0 * c * g2;
    out.psi12 = 4.0 * c * g3 + 4.0 * c * c * g1 * g2;
    out.psi22 = 8.0 * c * g4 + 4.0 * c * c * g2 * g2 + 16.0 * c * c * g1 * g3 +
                8.0 * c * c * c * g1 * g1 * g2;
    return out;
}

}  // namespace

TEST(MomentCltParams, FrozenHalfDeltaOneGaussian) {
    const auto params = moment_clt_params(0.5, kDelta1, 2.0);
    EXPECT_EQ(params.v1, 0.0);
    EXPECT_DOUBLE_EQ(params.v2, 0.5);
    EXPECT_DOUBLE_EQ(params.psi11, 1.0);
    EXPECT_DOUBLE_EQ(params.psi12, 3.0);
    EXPECT_DOUBLE_EQ(params.psi22, 10.0);
}

TEST(MomentCltParams, TauTwoCancellation) {
    for (double c : {0.1, 0.5, 1.0, 2.0}) {
        for (const auto& h : {kDelta1, kTwoAtom}) {
            const auto params = moment_clt_params(c, h, 2.0);
            const auto ref = gaussian_reference(c, h);
            EXPECT_EQ(params.v2, ref.v2);
            EXPECT_EQ(params.psi11, ref.psi11);
            EXPECT_EQ(params.psi12, ref.psi12);
            EXPECT_EQ(params.psi22, ref.psi22);
        }
    }
}

TEST(MomentCltParams, TwoAtomTauFourMean) {
    const auto params = moment_clt_params(0.5, kTwoAtom, 4.0);
    EXPECT_DOUBLE_EQ(params.v2, 2.75);  // 0.5*2.5 + 0.5*2*1.5
}

TEST(MomentCltParams, CovariancePsdSweep) {
    for (double tau : {0.0, 2.0, 4.0}) {
        for (double c : {0.1, 0.5, 1.0, 2.0}) {
            for (const auto& h : {kDelta1, kTwoAtom}) {
                const auto params = moment_clt_params(c, h, tau);
                EXPECT_GT(params.psi11, 0.0);
                EXPECT_GT(params.psi22, 0.0);
                const double det = params.psi11 * params.psi22 - params.psi12 * params.psi12;
                EXPECT_GE(det, -1e-9 * std::max(1.0, params.psi11 * params.psi22));
            }
        }
    }
}

TEST(MomentCltParams, Psi11IncreasingInTau) {
    for (double c : {0.25, 1.0}) {
        double prev = -1e300;
        for (double tau : {0.0, 1.0, 2.0, 3.0, 4.0, 8.0}) {
            const auto params = moment_clt_params(c, kTwoAtom, tau);
            EXPECT_GT(params.psi11, prev);
            prev = params.psi11;
        }
    }
}

TEST(MomentCltParams, Validation) {
    EXPECT_THROW(moment_clt_params(0.0, kDelta1, 2.0), std::domain_error);
    EXPECT_THROW(moment_clt_params(0.5, kDelta1, -1.0), std::domain_error);
}

TEST(CenteringValues, DelegatesToLsdMoments) {
    const auto centered = centering_values(0.5, kTwoAtom);
    EXPECT_DOUBLE_EQ(centered.first, 1.5);
    EXPECT_DOUBLE_EQ(centered.second, 3.625);
    const auto classical = centering_values(1e-12, kDelta1);
    EXPECT_NEAR(classical.second, 1.0, 1e-11);
}

TEST(StandardizeMoments, ZeroAtExactCentering) {
    // tau = 1, H = delta_1 makes v2 = c - c = 0
    const auto params = moment_clt_params(0.5, kDelta1, 1.0);
    EXPECT_EQ(params.v2, 0.0);
    const auto centering = centering_values(0.5, kDelta1);
    const auto [z1, z2] = standardize_moments(centering.first, centering.second, 100, params, centering);
    EXPECT_EQ(z1, 0.0);
    EXPECT_EQ(z2, 0.0);
}

TEST(StandardizeMoments, UnitVarianceArithmetic) {
    // p (b1 - beta1) / sqrt(psi11) with psi11 = 1
    const auto params = moment_clt_params(0.5, kDelta1, 2.0);
    const auto centering = centering_values(0.5, kDelta1);
    const auto [z1, z2] =
        standardize_moments(centering.first + 0.01, centering.second, 200, params, centering);
    EXPECT_NEAR(z1, 2.0, 1e-12);
    EXPECT_NEAR(z2, -params.v2 / std::sqrt(params.psi22), 1e-12);
}

TEST(StandardizeMoments, RejectsNonpositiveVariance) {
    MomentCltParams broken{};
    broken.psi11 = -1.0;
    broken.psi22 = 1.0;
    EXPECT_THROW(standardize_moments(1.0, 1.0, 10, broken, {1.0, 1.0}), std::domain_error);
}
