#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ellspec/random.hpp"

namespace ellspec {

enum class RadiusKind {
    Normal,            // xi^2 ~ chi^2_p
    DoubleExponential, // xi ~ Gamma(p,1)/sqrt(p+1)
    ExponentialPower,  // xi^{2s} ~ Gamma(p/(2s), rate 1/2), rescaled
    PearsonII,         // xi^2 ~ (p+beta) Beta(p/2, beta/2)
    Deterministic,     // xi = sqrt(p)
    IidSumSquares,     // xi^2 = sum_{j<=p} y_j^2, Ey^2=1, Ey^4=mu4
};

/// Distribution family of the radius xi, parameterized free of the
/// dimension; every variant is scaled so that E(xi^2) = p exactly.
struct RadiusLaw {
    RadiusKind kind = RadiusKind::Normal;
    double param = 0.0;  // s, beta, or mu4 depending on the kind

    static RadiusLaw normal() { return {RadiusKind::Normal, 0.0}; }
    static RadiusLaw double_exponential() { return {RadiusKind::DoubleExponential, 0.0}; }
    static RadiusLaw exponential_power(double s) {
        if (!(s > 0.0)) throw std::domain_error("RadiusLaw: exponential power needs s > 0");
        return {RadiusKind::ExponentialPower, s};
    }
    static RadiusLaw pearson_ii(double beta) {
        if (!(beta > 0.0)) throw std::domain_error("RadiusLaw: Pearson II needs beta > 0");
        return {RadiusKind::PearsonII, beta};
    }
    static RadiusLaw deterministic() { return {RadiusKind::Deterministic, 0.0}; }
    static RadiusLaw iid_sum_squares(double mu4) {
        if (!(mu4 >= 1.0)) throw std::domain_error("RadiusLaw: iid sum of squares needs mu4 >= 1");
        return {RadiusKind::IidSumSquares, mu4};
    }
};

struct RadiusMoments {
    double m2;   // E(xi^2), always exactly p
    double m4;   // E(xi^4), exact finite-p value
    double tau;  // asymptotic limit of p(m4/m2^2 - 1)
};

/// Exact second/fourth radius moments and the asymptotic tau of the law.
inline RadiusMoments radius_moments(const RadiusLaw& law, int p) {
    if (p < 1) throw std::domain_error("radius_moments: p must be positive");
    const double pd = p;
    switch (law.kind) {
        case RadiusKind::Normal:
            return {pd, pd * (pd + 2.0), 2.0};
        case RadiusKind::DoubleExponential:
            // xi = G/sqrt(p+1), G ~ Gamma(p,1): E G^4 = p(p+1)(p+2)(p+3)
            return {pd, pd * (pd + 2.0) * (pd + 3.0) / (pd + 1.0), 4.0};
        case RadiusKind::ExponentialPower: {
            const double s = law.param;
            const double alpha = pd / (2.0 * s);
            // moment ratio of G^{1/s} with G ~ Gamma(alpha, .): scale cancels
            const double ratio = std::exp(std::lgamma(alpha + 2.0 / s) + std::lgamma(alpha) -
                                          2.0 * std::lgamma(alpha + 1.0 / s));
            return {pd, pd * pd * ratio, 2.0 / s};
        }
        case RadiusKind::PearsonII: {
            const double beta = law.param;
            // xi^2 = (p+beta) B, B ~ Beta(p/2, beta/2); E B^2 = p(p+2)/((p+beta)(p+beta+2))
            return {pd, pd * (pd + 2.0) * (pd + beta) / (pd + beta + 2.0), 0.0};
        }
        case RadiusKind::Deterministic:
            return {pd, pd * pd, 0.0};
        case RadiusKind::IidSumSquares: {
            const double mu4 = law.param;
            return {pd, pd * pd + (mu4 - 1.0) * pd, mu4 - 1.0};
        }
    }
    throw std::logic_error("radius_moments: unknown kind");
}

/// One draw of the radius at dimension p.
inline double sample_radius(const RadiusLaw& law, int p, RandomStream& rng) {
    if (p < 1) throw std::domain_error("sample_radius: p must be positive");
    const double pd = p;
    switch (law.kind) {
        case RadiusKind::Normal:
            return std::sqrt(rng.chi_square(pd));
        case RadiusKind::DoubleExponential:
            return rng.gamma(pd, 1.0) / std::sqrt(pd + 1.0);
        case RadiusKind::ExponentialPower: {
            const double s = law.param;
            const double alpha = pd / (2.0 * s);
            // k^2 = p / E(G^{1/s}) with G ~ Gamma(alpha, scale 2)
            const double k2 = pd * std::exp(std::lgamma(alpha) - std::lgamma(alpha + 1.0 / s)) /
                              std::pow(2.0, 1.0 / s);
            const double g = rng.gamma(alpha, 2.0);
            return std::sqrt(k2 * std::pow(g, 1.0 / s));
        }
        case RadiusKind::PearsonII: {
            const double beta = law.param;
            return std::sqrt((pd + beta) * rng.beta(0.5 * pd, 0.5 * beta));
        }
        case RadiusKind::Deterministic:
            return std::sqrt(pd);
        case RadiusKind::IidSumSquares: {
            const double mu4 = law.param;
            if (mu4 == 1.0) return std::sqrt(pd);  // y^2 degenerate at 1
            // two-point law for y^2: {0, mu4} with P(y^2 = mu4) = 1/mu4
            const double hit = 1.0 / mu4;
            int count = 0;
            for (int j = 0; j < p; ++j)
                if (rng.uniform() < hit) ++count;
            return std::sqrt(mu4 * count);
        }
    }
    throw std::logic_error("sample_radius: unknown kind");
}

inline std::string radius_kind_name(RadiusKind kind) {
    switch (kind) {
        case RadiusKind::Normal: return "normal";
        case RadiusKind::DoubleExponential: return "double_exponential";
        case RadiusKind::ExponentialPower: return "exponential_power";
        case RadiusKind::PearsonII: return "pearson_ii";
        case RadiusKind::Deterministic: return "deterministic";
        case RadiusKind::IidSumSquares: return "iid_sum_squares";
    }
    return "unknown";
}

}  // namespace ellspec
