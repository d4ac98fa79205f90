#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ellspec/radius.hpp"
#include "ellspec/random.hpp"
#include "ellspec/spectrum.hpp"

namespace ellspec {

/// Population model x = xi * Sigma^{1/2} u with u uniform on the unit
/// sphere; Sigma is diagonal in its own eigenbasis, described by its
/// spectrum (atoms with weights).
struct EllipticalModel {
    int p;
    RadiusLaw radius;
    DiscreteSpectrum sigma_spectrum;

    EllipticalModel(int p_, RadiusLaw radius_, DiscreteSpectrum spectrum_)
        : p(p_), radius(radius_), sigma_spectrum(std::move(spectrum_)) {
        if (p < 1) throw std::domain_error("EllipticalModel: p must be positive");
        if (!std::isfinite(sigma_spectrum.max_atom()))
            throw std::domain_error("EllipticalModel: spectral norm must be finite");
    }

    /// Diagonal of Sigma^{1/2}: atoms expanded by their multiplicities.
    Eigen::VectorXd sqrt_sigma_diagonal() const {
        const auto counts = sigma_spectrum.multiplicities(p);
        Eigen::VectorXd d(p);
        int pos = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double root = std::sqrt(sigma_spectrum.atoms()[i]);
            for (int r = 0; r < counts[i]; ++r) d(pos++) = root;
        }
        return d;
    }
};

/// Uniform draw from the unit sphere S^{p-1} (normalized Gaussian vector).
inline Eigen::VectorXd sample_direction(int p, RandomStream& rng) {
    if (p < 1) throw std::domain_error("sample_direction: p must be positive");
    Eigen::VectorXd z(p);
    double norm2;
    do {
        for (int i = 0; i < p; ++i) z(i) = rng.normal();
        norm2 = z.squaredNorm();
    } while (!(norm2 > 0.0));
    return z / std::sqrt(norm2);
}

/// n observations as columns: x_j = xi_j * Sigma^{1/2} u_j, with the
/// radius drawn before the direction for each column.
inline Eigen::MatrixXd sample_population(const EllipticalModel& model, int n, RandomStream& rng) {
    if (n < 1) throw std::domain_error("sample_population: n must be positive");
    if (static_cast<double>(model.p) * static_cast<double>(n) > 2.5e8)
        throw std::length_error("sample_population: requested matrix too large");
    const Eigen::VectorXd d = model.sqrt_sigma_diagonal();
    Eigen::MatrixXd x(model.p, n);
    for (int j = 0; j < n; ++j) {
        const double xi = sample_radius(model.radius, model.p, rng);
        const Eigen::VectorXd u = sample_direction(model.p, rng);
        x.col(j) = xi * d.cwiseProduct(u);
    }
    return x;
}

/// Exact covariance of the centered quadratic forms x'Cx and x'Ct x for
/// x = xi u with E(xi^4) = m4:
///   m4/(p(p+2)) (tr C tr Ct + tr C Ct' + tr C Ct) - tr C tr Ct.
inline double quadratic_form_cov_oracle(const Eigen::MatrixXd& c, const Eigen::MatrixXd& c_tilde,
                                        double m4, int p) {
    if (c.rows() != p || c.cols() != p || c_tilde.rows() != p || c_tilde.cols() != p)
        throw std::invalid_argument("quadratic_form_cov_oracle: matrices must be p x p");
    const double tr_c = c.trace();
    const double tr_ct = c_tilde.trace();
    const double tr_cct_t = c.cwiseProduct(c_tilde).sum();        // tr(C Ct')
    const double tr_cct = (c * c_tilde).trace();                  // tr(C Ct)
    const double pd = p;
    return m4 / (pd * (pd + 2.0)) * (tr_c * tr_ct + tr_cct_t + tr_cct) - tr_c * tr_ct;
}

inline nlohmann::json radius_to_json(const RadiusLaw& law) {
    nlohmann::json j{{"kind", radius_kind_name(law.kind)}};
    switch (law.kind) {
        case RadiusKind::ExponentialPower: j["s"] = law.param; break;
        case RadiusKind::PearsonII: j["beta"] = law.param; break;
        case RadiusKind::IidSumSquares: j["mu4"] = law.param; break;
        default: break;
    }
    return j;
}

inline RadiusLaw radius_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "normal") return RadiusLaw::normal();
    if (kind == "double_exponential") return RadiusLaw::double_exponential();
    if (kind == "exponential_power") return RadiusLaw::exponential_power(j.at("s").get<double>());
    if (kind == "pearson_ii") return RadiusLaw::pearson_ii(j.at("beta").get<double>());
    if (kind == "deterministic") return RadiusLaw::deterministic();
    if (kind == "iid_sum_squares") return RadiusLaw::iid_sum_squares(j.at("mu4").get<double>());
    throw std::invalid_argument("radius_from_json: unknown kind '" + kind + "'");
}

inline nlohmann::json spectrum_to_json(const DiscreteSpectrum& h) {
    return nlohmann::json{{"atoms", h.atoms()}, {"weights", h.weights()}};
}

inline DiscreteSpectrum spectrum_from_json(const nlohmann::json& j) {
    return DiscreteSpectrum(j.at("atoms").get<std::vector<double>>(),
                            j.at("weights").get<std::vector<double>>());
}

inline nlohmann::json model_to_json(const EllipticalModel& m) {
    return nlohmann::json{
        {"p", m.p}, {"radius", radius_to_json(m.radius)}, {"spectrum", spectrum_to_json(m.sigma_spectrum)}};
}

inline EllipticalModel model_from_json(const nlohmann::json& j) {
    return EllipticalModel(j.at("p").get<int>(), radius_from_json(j.at("radius")),
                           spectrum_from_json(j.at("spectrum")));
}

}  // namespace ellspec
