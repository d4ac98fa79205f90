#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "ellspec/mp_law.hpp"
#include "ellspec/normal.hpp"
#include "ellspec/quadrature.hpp"
#include "ellspec/spectral.hpp"

namespace ellspec {

/// Outcome of one hypothesis test, with everything needed to audit it.
struct TestReport {
    std::string test;
    double statistic = 0.0;
    nlohmann::json null_params;
    double p_value = 1.0;
    double alpha = 0.05;
    bool reject = false;
    struct Meta {
        int p = 0;
        int n = 0;
        double c_n = 0.0;
        std::optional<double> s;
        std::optional<double> tau;
        std::uint64_t seed = 0;
        std::string input_digest;
    } meta;

    nlohmann::json to_json() const {
        nlohmann::json meta_json{{"p", meta.p}, {"n", meta.n}, {"c_n", meta.c_n}, {"seed", meta.seed}};
        if (meta.s) meta_json["s"] = *meta.s;
        if (meta.tau) meta_json["tau"] = *meta.tau;
        if (!meta.input_digest.empty()) meta_json["input_digest"] = meta.input_digest;
        return nlohmann::json{{"test", test},       {"statistic", statistic}, {"null", null_params},
                              {"p_value", p_value}, {"alpha", alpha},         {"reject", reject},
                              {"meta", meta_json}};
    }
};

/// T1 = alpha2 - 1 and T2 = alpha4 - 1.
inline std::pair<double, double> t1_t2(double alpha2_hat, double alpha4_hat) {
    if (!std::isfinite(alpha2_hat) || !std::isfinite(alpha4_hat))
        throw std::domain_error("t1_t2: inputs must be finite");
    return {alpha2_hat - 1.0, alpha4_hat - 1.0};
}

/// Joint null law of n(T1, T2): mean (-1, -6+c) and covariance
/// [[4, 24], [24, 8(18 + 12c + c^2)]].
struct T1T2Null {
    double mu1, mu2;
    double omega11, omega12, omega22;
};

inline T1T2Null null_params_t1t2(double c) {
    if (!(c > 0.0)) throw std::domain_error("null_params_t1t2: c must be positive");
    return {-1.0, -6.0 + c, 4.0, 24.0, 8.0 * (18.0 + 12.0 * c + c * c)};
}

/// Tm = max of the two standardized scores of nT1 and nT2.
inline double tm_statistic(double t1, double t2, int n, double c_n) {
    if (n < 1) throw std::domain_error("tm_statistic: n must be positive");
    const double nd = n;
    const double first = (nd * t1 + 1.0) / 2.0;
    const double second = (nd * t2 + 6.0 - c_n) / std::sqrt(8.0 * (18.0 + 12.0 * c_n + c_n * c_n));
    return std::max(first, second);
}

/// P(U <= x, V <= x) for a standard bivariate normal pair with
/// correlation rho; one-dimensional quadrature of Phi((x-rho u)/sqrt(1-rho^2)) phi(u).
inline double bvn_orthant_cdf(double x, double rho) {
    if (!(std::abs(rho) < 1.0)) throw std::domain_error("bvn_orthant_cdf: need |rho| < 1");
    const double cut = 9.0;  // Phi(-9) ~ 1e-19, far below the 1e-10 target
    if (x <= -cut) return 0.0;
    const double denom = std::sqrt(1.0 - rho * rho);
    double value = integrate(
        [&](double u) { return norm_cdf((x - rho * u) / denom) * norm_pdf(u); }, -cut,
        std::min(x, cut), 1e-11);
    if (x > cut) value += norm_cdf(x) - norm_cdf(cut);
    return std::min(1.0, std::max(0.0, value));
}

inline double tm_null_correlation(double c) {
    return 6.0 / std::sqrt(2.0 * (18.0 + 12.0 * c + c * c));
}

/// Right-tail p-value of Tm against its limiting bivariate-normal law.
inline double tm_pvalue(double tm, double c) {
    if (!(c > 0.0)) throw std::domain_error("tm_pvalue: c must be positive");
    return 1.0 - bvn_orthant_cdf(tm, tm_null_correlation(c));
}

/// z(s) = (1+s)(c_n+s)/s, the evaluation point of the log statistics.
inline double tlr_z(double s, double c_n) { return (1.0 + s) * (c_n + s) / s; }

/// T_LR(s): mean of ln(z(s) - lambda) over the spectrum minus the same
/// integral under the null law F^{c_n, delta_1}. The caller multiplies by
/// p before standardizing.
inline double tlr_statistic(const SpectralSample& s_check, double s) {
    const double c_n = s_check.c_n;
    const double s_bar = std::sqrt(c_n);
    if (!(s > 0.0) || !(s < s_bar - 1e-8))
        throw std::domain_error("tlr_statistic: s must lie in (0, sqrt(c_n))");
    const double z = tlr_z(s, c_n);
    const double lambda_max = s_check.max_eigenvalue();
    if (!(z > lambda_max))
        throw std::domain_error("tlr_statistic: z(s) = " + std::to_string(z) +
                                " <= largest eigenvalue " + std::to_string(lambda_max) +
                                "; statistic undefined");
    const double empirical = lss(s_check, [z](double lam) { return std::log(z - lam); });
    return empirical - log_integral(c_n, z);
}

struct TlrParams {
    double mu;
    double sigma2;
};

/// Null law of p T_LR(s) for spatial-sign samples:
///   mu_s = (1/2) ln(1 - s^2/c) + s^2/c
///   sigma_s^2 = -2 ln(1 - s^2/c) - 2 s^2/c
inline TlrParams tlr_null_params(double c, double s) {
    if (!(c > 0.0)) throw std::domain_error("tlr_null_params: c must be positive");
    if (!(s > 0.0) || !(s < std::sqrt(c) - 1e-8))
        throw std::domain_error("tlr_null_params: s must lie in (0, sqrt(c))");
    const double y = s * s / c;
    const double mu = 0.5 * std::log1p(-y) + y;
    const double sigma2 = -2.0 * std::log1p(-y) - 2.0 * y;
    return {mu, sigma2};
}

/// Law of p T~_LR(s) for raw samples at spike strength h:
///   mu = (1/2) ln(1 - s^2/c) + (1 - tau/2) s^2/c + ln(1 - s h/c)
///   sigma^2 = -2 ln(1 - s^2/c) - (2 - tau) s^2/c
/// The admissible range of s shrinks to c/h once h exceeds sqrt(c).
inline TlrParams tlr_tilde_params(double c, double s, double h, double tau) {
    if (!(c > 0.0)) throw std::domain_error("tlr_tilde_params: c must be positive");
    if (!(h >= 0.0)) throw std::domain_error("tlr_tilde_params: h must be >= 0");
    if (!(tau >= 0.0)) throw std::domain_error("tlr_tilde_params: tau must be >= 0");
    const double sqrt_c = std::sqrt(c);
    const double s_bar = h <= sqrt_c ? sqrt_c : c / h;
    if (!(s > 0.0) || !(s < s_bar - 1e-8))
        throw std::domain_error("tlr_tilde_params: s outside (0, s_bar)");
    const double y = s * s / c;
    const double sh = s * h / c;
    if (!(sh < 1.0)) throw std::domain_error("tlr_tilde_params: s h / c must be below 1");
    const double mu = 0.5 * std::log1p(-y) + (1.0 - 0.5 * tau) * y + std::log1p(-sh);
    const double sigma2 = -2.0 * std::log1p(-y) - (2.0 - tau) * y;
    if (!(sigma2 > 0.0)) throw std::domain_error("tlr_tilde_params: nonpositive variance");
    return {mu, sigma2};
}

/// Power of the left-tailed level-alpha test based on p T~_LR(s) against
/// spike strength h0: Phi[Phi^{-1}(alpha) - (mu(h0) - mu(0))/sigma].
inline double tlr_power(double c, double s, double h0, double tau, double alpha) {
    if (!(h0 > 0.0)) throw std::domain_error("tlr_power: h0 must be positive");
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw std::domain_error("tlr_power: alpha must be in (0,1)");
    const TlrParams alt = tlr_tilde_params(c, s, h0, tau);
    const TlrParams null = tlr_tilde_params(c, s, 0.0, tau);
    return norm_cdf(norm_quantile(alpha) - (alt.mu - null.mu) / std::sqrt(null.sigma2));
}

enum class TestName { T1, T2, Tm, TLR, TLRTilde };

inline std::string test_name(TestName name) {
    switch (name) {
        case TestName::T1: return "T1";
        case TestName::T2: return "T2";
        case TestName::Tm: return "Tm";
        case TestName::TLR: return "TLR";
        case TestName::TLRTilde: return "TLR_tilde";
    }
    return "unknown";
}

inline std::optional<TestName> test_name_from_string(const std::string& s) {
    if (s == "t1" || s == "T1") return TestName::T1;
    if (s == "t2" || s == "T2") return TestName::T2;
    if (s == "tm" || s == "Tm") return TestName::Tm;
    if (s == "tlr" || s == "TLR") return TestName::TLR;
    if (s == "tlr-tilde" || s == "tlr_tilde" || s == "TLR_tilde") return TestName::TLRTilde;
    return std::nullopt;
}

struct TestConfig {
    double alpha = 0.05;
    std::optional<double> s;    // required by TLR / TLR_tilde
    std::optional<double> tau;  // required by TLR_tilde
    std::uint64_t seed = 0;
    std::string input_digest;
};

/// Runs one test on a precomputed spectrum. For T1/T2/Tm/TLR the sample
/// must come from spatial-sign data; TLR_tilde consumes the raw sample
/// covariance spectrum (sigma known and equal to one).
inline TestReport run_test_on_spectrum(TestName name, const SpectralSample& sample,
                                       const TestConfig& config) {
    TestReport report;
    report.test = test_name(name);
    report.alpha = config.alpha;
    report.meta.p = sample.p;
    report.meta.n = sample.n;
    report.meta.c_n = sample.c_n;
    report.meta.seed = config.seed;
    report.meta.input_digest = config.input_digest;
    const double c_n = sample.c_n;
    const double nd = sample.n;

    switch (name) {
        case TestName::T1:
        case TestName::T2: {
            const auto alpha_hat = alpha_estimators(sample);
            const auto [t1, t2] = t1_t2(alpha_hat.alpha2_hat, alpha_hat.alpha4_hat);
            const T1T2Null null = null_params_t1t2(c_n);
            if (name == TestName::T1) {
                report.statistic = t1;
                report.null_params = {{"mean", null.mu1}, {"variance", null.omega11}, {"scale", "n*T1"}};
                report.p_value = 1.0 - norm_cdf((nd * t1 - null.mu1) / std::sqrt(null.omega11));
            } else {
                report.statistic = t2;
                report.null_params = {{"mean", null.mu2}, {"variance", null.omega22}, {"scale", "n*T2"}};
                report.p_value = 1.0 - norm_cdf((nd * t2 - null.mu2) / std::sqrt(null.omega22));
            }
            break;
        }
        case TestName::Tm: {
            const auto alpha_hat = alpha_estimators(sample);
            const auto [t1, t2] = t1_t2(alpha_hat.alpha2_hat, alpha_hat.alpha4_hat);
            report.statistic = tm_statistic(t1, t2, sample.n, c_n);
            report.null_params = {{"rho", tm_null_correlation(c_n)}};
            report.p_value = tm_pvalue(report.statistic, c_n);
            break;
        }
        case TestName::TLR: {
            if (!config.s) throw std::invalid_argument("run_test: TLR requires the s parameter");
            report.meta.s = *config.s;
            report.statistic = tlr_statistic(sample, *config.s);
            const TlrParams null = tlr_null_params(c_n, *config.s);
            report.null_params = {{"mu", null.mu}, {"sigma2", null.sigma2}, {"scale", "p*TLR"}};
            report.p_value =
                norm_cdf((sample.p * report.statistic - null.mu) / std::sqrt(null.sigma2));
            break;
        }
        case TestName::TLRTilde: {
            if (!config.s) throw std::invalid_argument("run_test: TLR_tilde requires the s parameter");
            if (!config.tau) throw std::invalid_argument("run_test: TLR_tilde requires tau");
            report.meta.s = *config.s;
            report.meta.tau = *config.tau;
            report.statistic = tlr_statistic(sample, *config.s);
            const TlrParams null = tlr_tilde_params(c_n, *config.s, 0.0, *config.tau);
            report.null_params = {{"mu", null.mu}, {"sigma2", null.sigma2}, {"scale", "p*TLR_tilde"}};
            report.p_value =
                norm_cdf((sample.p * report.statistic - null.mu) / std::sqrt(null.sigma2));
            break;
        }
    }
    report.reject = report.p_value < report.alpha;
    return report;
}

/// FNV-1a digest of a data matrix, hex-encoded; identifies the test input
/// in reports.
inline std::string data_digest(const Eigen::MatrixXd& x) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(x.data());
    const std::size_t size = sizeof(double) * static_cast<std::size_t>(x.size());
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Runs one test on raw p x n data. T1/T2/Tm/TLR pass through the
/// spatial-sign transform first; TLR_tilde uses the data as observed.
inline TestReport run_test(TestName name, const Eigen::MatrixXd& data, TestConfig config) {
    if (config.input_digest.empty()) config.input_digest = data_digest(data);
    const bool raw = name == TestName::TLRTilde;
    const SpectralSample sample = raw ? sample_spectrum(data) : sample_spectrum(spatial_sign(data));
    return run_test_on_spectrum(name, sample, config);
}

}  // namespace ellspec
