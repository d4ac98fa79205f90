#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ellspec/elliptical.hpp"
#include "ellspec/harness.hpp"

using namespace ellspec;

namespace {

// two-sample Kolmogorov-Smirnov p-value (asymptotic)
double two_sample_ks_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    return ks_pvalue(d, static_cast<std::size_t>(ne));
}

}  // namespace

TEST(SampleDirection, ZeroSphereIsSigns) {
    RandomStream rng(1);
    bool saw_plus = false, saw_minus = false;
    for (int i = 0; i < 100; ++i) {
        const auto u = sample_direction(1, rng);
        ASSERT_EQ(u.size(), 1);
        ASSERT_EQ(std::abs(u(0)), 1.0);
        (u(0) > 0 ? saw_plus : saw_minus) = true;
    }
    EXPECT_TRUE(saw_plus);
    EXPECT_TRUE(saw_minus);
}

TEST(SampleDirection, UnitNorm) {
    RandomStream rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto u = sample_direction(3, rng);
        EXPECT_NEAR(u.norm(), 1.0, 1e-12);
    }
}

TEST(SampleDirection, CoordinateMoments) {
    const int p = 50, draws = 100000;
    RandomStream rng(3);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd mean_sq = Eigen::VectorXd::Zero(p);
    for (int i = 0; i < draws; ++i) {
        const auto u = sample_direction(p, rng);
        mean += u;
        mean_sq += u.cwiseProduct(u);
    }
    mean /= draws;
    mean_sq /= draws;
    // E u_i = 0 within 4 standard errors of the mean; Var(u_i) = 1/p within 5%
    const double se = std::sqrt(1.0 / p / draws);
    for (int i = 0; i < p; ++i) {
        EXPECT_LE(std::abs(mean(i)), 4.0 * se) << "coordinate " << i;
    }
    EXPECT_NEAR(mean_sq(0), 1.0 / p, 0.05 / p);
    EXPECT_NEAR(mean_sq(17), 1.0 / p, 0.05 / p);
}

TEST(SampleDirection, MarginalIsUniformInDimensionThree) {
    // Archimedes: for p = 3 each coordinate of u is uniform on [-1, 1]
    RandomStream rng(4);
    std::vector<double> first;
    for (int i = 0; i < 4000; ++i) first.push_back(sample_direction(3, rng)(0));
    const double d = ks_statistic(first, [](double x) {
        return std::min(1.0, std::max(0.0, 0.5 * (x + 1.0)));
    });
    EXPECT_GT(ks_pvalue(d, first.size()), 0.01);
}

TEST(SampleDirection, RotationInvariance) {
    const int p = 8, draws = 4000;
    // fixed rotation from the QR of a seeded matrix
    RandomStream qr_rng(99);
    Eigen::MatrixXd g(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) g(i, j) = qr_rng.normal();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
    a(0) = 0.6;
    a(3) = 0.8;

    RandomStream rng(5);
    std::vector<double> plain, rotated;
    for (int i = 0; i < draws; ++i) {
        plain.push_back(a.dot(sample_direction(p, rng)));
        rotated.push_back(a.dot(q * sample_direction(p, rng)));
    }
    EXPECT_GT(two_sample_ks_pvalue(plain, rotated), 0.01);
}

TEST(SampleDirection, RejectsZeroDimension) {
    RandomStream rng(6);
    EXPECT_THROW(sample_direction(0, rng), std::domain_error);
}

TEST(SamplePopulation, DeterministicRadiusGivesExactNorms) {
    EllipticalModel model(2, RadiusLaw::deterministic(), DiscreteSpectrum::delta(1.0));
    RandomStream rng(7);
    const auto x = sample_population(model, 3, rng);
    ASSERT_EQ(x.rows(), 2);
    ASSERT_EQ(x.cols(), 3);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(x.col(j).norm(), std::sqrt(2.0), 1e-12);
}

TEST(SamplePopulation, TracePerDimensionMatchesGamma1) {
    EllipticalModel iso(100, RadiusLaw::normal(), DiscreteSpectrum::delta(1.0));
    RandomStream rng(8);
    const auto x = sample_population(iso, 200, rng);
    const double trace = (x * x.transpose() / 200.0).trace();
    EXPECT_NEAR(trace / 100.0, 1.0, 0.05);

    EllipticalModel mixed(100, RadiusLaw::normal(), DiscreteSpectrum({1.0, 2.0}, {0.5, 0.5}));
    RandomStream rng2(9);
    const auto y = sample_population(mixed, 200, rng2);
    const double trace2 = (y * y.transpose() / 200.0).trace();
    EXPECT_NEAR(trace2 / 100.0, 1.5, 0.075);
}

TEST(SamplePopulation, DeterministicGivenSeed) {
    EllipticalModel model(20, RadiusLaw::double_exponential(),
                          DiscreteSpectrum({1.0, 2.0}, {0.5, 0.5}));
    RandomStream rng_a(123), rng_b(123);
    const auto a = sample_population(model, 15, rng_a);
    const auto b = sample_population(model, 15, rng_b);
    EXPECT_TRUE((a.array() == b.array()).all());  // bit-exact
}

TEST(QuadraticFormOracle, IdentityMatricesNormalRadius) {
    for (int p : {5, 50, 200}) {
        const auto m = radius_moments(RadiusLaw::normal(), p);
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
        // collapses to Var(chi^2_p) = 2p
        EXPECT_DOUBLE_EQ(quadratic_form_cov_oracle(eye, eye, m.m4, p), 2.0 * p);
    }
}

TEST(QuadraticFormOracle, ZeroMatrix) {
    const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(10, 10);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(10, 10);
    EXPECT_EQ(quadratic_form_cov_oracle(z, eye, 120.0, 10), 0.0);
}

TEST(QuadraticFormOracle, ShapeMismatch) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(5, 5);
    EXPECT_THROW(quadratic_form_cov_oracle(a, b, 1.0, 4), std::invalid_argument);
    EXPECT_THROW(quadratic_form_cov_oracle(a, a, 1.0, 5), std::invalid_argument);
}

TEST(QuadraticFormOracle, MonteCarloDiagonalDeterministic) {
    // C = Ct = diag(1..10)/10 with xi = sqrt(p): Var(x'Cx) vs the identity
    const int p = 10;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) c(i, i) = (i + 1) / 10.0;
    const auto m = radius_moments(RadiusLaw::deterministic(), p);
    const double expected = quadratic_form_cov_oracle(c, c, m.m4, p);

    RandomStream rng(10);
    const int draws = 1000000;
    const double tr = c.trace();
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
        const Eigen::VectorXd u = sample_direction(p, rng);
        const double q = p * u.dot(c * u) - tr;
        acc += q * q;
    }
    EXPECT_NEAR(acc / draws, expected, 0.02 * expected);
}

TEST(QuadraticFormOracle, MonteCarloRandomSymmetricPair) {
    // light version of the acceptance run: p = 20, generic C and Ct
    const int p = 20;
    RandomStream rng(11);
    Eigen::MatrixXd c(p, p), ct(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            c(i, j) = c(j, i) = rng.uniform() - 0.5;
            ct(i, j) = ct(j, i) = rng.uniform() - 0.5;
        }
    c /= c.operatorNorm();
    ct /= ct.operatorNorm();

    const auto m = radius_moments(RadiusLaw::normal(), p);
    const double expected = quadratic_form_cov_oracle(c, ct, m.m4, p);
    const double tr_c = c.trace(), tr_ct = ct.trace();

    const int draws = 200000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double xi = sample_radius(RadiusLaw::normal(), p, rng);
        const Eigen::VectorXd x = xi * sample_direction(p, rng);
        const double q1 = x.dot(c * x) - tr_c;
        const double q2 = x.dot(ct * x) - tr_ct;
        acc += q1 * q2;
        acc2 += q1 * q2 * q1 * q2;
    }
    const double estimate = acc / draws;
    const double se = std::sqrt((acc2 / draws - estimate * estimate) / draws);
    EXPECT_LE(std::abs(estimate - expected), 4.0 * se);
}

TEST(ModelJson, RoundTrip) {
    EllipticalModel model(64, RadiusLaw::pearson_ii(4.0), DiscreteSpectrum({1.0, 2.0}, {0.5, 0.5}));
    const auto j = model_to_json(model);
    const auto back = model_from_json(j);
    EXPECT_EQ(back.p, model.p);
    EXPECT_EQ(back.radius.kind, model.radius.kind);
    EXPECT_EQ(back.radius.param, model.radius.param);
    EXPECT_EQ(back.sigma_spectrum.atoms(), model.sigma_spectrum.atoms());
    EXPECT_EQ(back.sigma_spectrum.weights(), model.sigma_spectrum.weights());

    const auto parsed = model_from_json(nlohmann::json::parse(
        R"({"p": 8, "radius": {"kind": "normal"}, "spectrum": {"atoms": [1.0], "weights": [1.0]}})"));
    EXPECT_EQ(parsed.p, 8);
    EXPECT_EQ(parsed.radius.kind, RadiusKind::Normal);
}

TEST(ModelValidation, RejectsBadSpectra) {
    EXPECT_THROW(DiscreteSpectrum({1.0, 1.0}, {0.5, 0.5}), std::invalid_argument);   // not increasing
    EXPECT_THROW(DiscreteSpectrum({-1.0, 1.0}, {0.5, 0.5}), std::invalid_argument);  // negative atom
    EXPECT_THROW(DiscreteSpectrum({1.0, 2.0}, {0.5, 0.6}), std::invalid_argument);   // weights != 1
    EXPECT_THROW(EllipticalModel(0, RadiusLaw::normal(), DiscreteSpectrum::delta(1.0)),
                 std::domain_error);
}

TEST(SpectrumMultiplicities, LargestRemainderSumsToP) {
    const DiscreteSpectrum h({1.0, 2.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    for (int p : {3, 10, 100, 101}) {
        const auto counts = h.multiplicities(p);
        int total = 0;
        for (int c : counts) total += c;
        EXPECT_EQ(total, p);
    }
    const DiscreteSpectrum half({1.0, 2.0}, {0.5, 0.5});
    const auto counts = half.multiplicities(200);
    EXPECT_EQ(counts[0], 100);
    EXPECT_EQ(counts[1], 100);
}
