#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "ellspec/mp_law.hpp"
#include "ellspec/spectrum.hpp"

namespace ellspec {

/// Asymptotic mean/covariance of the first two spectral moments of the
/// sample covariance matrix under an elliptical population with radius
/// parameter tau:
///   v1 = 0
///   v2 = c g2 + c (tau-2) g1
///   psi11 = 2c g2 + c (tau-2) g1^2
///   psi12 = 4c g3 + 4c^2 g1 g2 + 2c (tau-2) g1 (c g1^2 + g2)
///   psi22 = 8c g4 + 4c^2 g2^2 + 16c^2 g1 g3 + 8c^3 g1^2 g2
///           + 4c (tau-2) (c g1^2 + g2)^2
/// with g_j the j-th moment of H. All tau-dependence sits in the (tau-2)
/// addends, which vanish in the Gaussian case.
struct MomentCltParams {
    double v1, v2;
    double psi11, psi12, psi22;
    double c, tau;
    double gamma1, gamma2, gamma3, gamma4;
};

inline MomentCltParams moment_clt_params(double c, const DiscreteSpectrum& h, double tau) {
    if (!(c > 0.0)) throw std::domain_error("moment_clt_params: c must be positive");
    if (!(tau >= 0.0)) throw std::domain_error("moment_clt_params: tau must be >= 0");
    const double g1 = h.moment(1);
    const double g2 = h.moment(2);
    const double g3 = h.moment(3);
    const double g4 = h.moment(4);
    const double excess = tau - 2.0;

    MomentCltParams out;
    out.c = c;
    out.tau = tau;
    out.gamma1 = g1;
    out.gamma2 = g2;
    out.gamma3 = g3;
    out.gamma4 = g4;
    out.v1 = 0.0;
    out.v2 = c * g2 + c * excess * g1;
    out.psi11 = 2.0 * c * g2 + c * excess * g1 * g1;
    out.psi12 = 4.0 * c * g3 + 4.0 * c * c * g1 * g2 + 2.0 * c * excess * g1 * (c * g1 * g1 + g2);
    out.psi22 = 8.0 * c * g4 + 4.0 * c * c * g2 * g2 + 16.0 * c * c * g1 * g3 +
                8.0 * c * c * c * g1 * g1 * g2 + 4.0 * c * excess * (c * g1 * g1 + g2) * (c * g1 * g1 + g2);

    if (!(out.psi11 > 0.0) || !(out.psi22 > 0.0))
        throw std::domain_error("moment_clt_params: nonpositive variance; unsupported (tau, H)");
    const double det = out.psi11 * out.psi22 - out.psi12 * out.psi12;
    if (det < -1e-9 * std::max(1.0, out.psi11 * out.psi22))
        throw std::domain_error("moment_clt_params: covariance not PSD; unsupported (tau, H)");
    return out;
}

/// Finite-(p,n) centering terms (beta_1, beta_2) of the limiting law with
/// parameters (c_n, H_p).
inline std::pair<double, double> centering_values(double c_n, const DiscreteSpectrum& h_p) {
    return lsd_moments(c_n, h_p);
}

/// Standardized moment scores:
///   z1 = p (b1 - beta1) / sqrt(psi11)
///   z2 = [p (b2 - beta2) - v2] / sqrt(psi22)
inline std::pair<double, double> standardize_moments(double beta1_hat, double beta2_hat, int p,
                                                     const MomentCltParams& params,
                                                     std::pair<double, double> centering) {
    if (!(params.psi11 > 0.0) || !(params.psi22 > 0.0))
        throw std::domain_error("standardize_moments: variances must be positive");
    const double pd = p;
    const double z1 = pd * (beta1_hat - centering.first) / std::sqrt(params.psi11);
    const double z2 = (pd * (beta2_hat - centering.second) - params.v2) / std::sqrt(params.psi22);
    return {z1, z2};
}

}  // namespace ellspec
