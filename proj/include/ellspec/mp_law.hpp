#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ellspec/errors.hpp"
#include "ellspec/quadrature.hpp"
#include "ellspec/spectrum.hpp"

namespace ellspec {

namespace detail {

inline std::complex<double> stieltjes_rhs(double c, const DiscreteSpectrum& h,
                                          std::complex<double> z, std::complex<double> m) {
    std::complex<double> acc = 0.0;
    const std::complex<double> shrink = 1.0 - c - c * z * m;
    for (std::size_t i = 0; i < h.size(); ++i)
        acc += h.weights()[i] / (h.atoms()[i] * shrink - z);
    return acc;
}

/// z = -1/mb + c * int t/(1+t mb) dH(t), as a function of the companion
/// transform; used for Newton polishing and for the support scan.
inline std::complex<double> silverstein_z(double c, const DiscreteSpectrum& h,
                                          std::complex<double> mb) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double t = h.atoms()[i];
        acc += h.weights()[i] * t / (1.0 + t * mb);
    }
    return -1.0 / mb + c * acc;
}

inline double silverstein_z_real(double c, const DiscreteSpectrum& h, double mb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double t = h.atoms()[i];
        acc += h.weights()[i] * t / (1.0 + t * mb);
    }
    return -1.0 / mb + c * acc;
}

inline double silverstein_z_prime(double c, const DiscreteSpectrum& h, double mb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double t = h.atoms()[i];
        const double q = t / (1.0 + t * mb);
        acc += h.weights()[i] * q * q;
    }
    return 1.0 / (mb * mb) - c * acc;
}

}  // namespace detail

/// Stieltjes transform m(z) of the limiting law F^{c,H}: the unique
/// solution of  m = int dH(t) / (t(1-c-czm) - z)  with the companion
/// -(1-c)/z + cm in the upper half plane. Damped fixed point from
/// m0 = -1/z, Newton on the companion form when the iteration stalls.
inline std::complex<double> stieltjes(double c, const DiscreteSpectrum& h, std::complex<double> z) {
    if (!(c > 0.0)) throw std::domain_error("stieltjes: c must be positive");
    if (!(z.imag() > 0.0)) throw std::domain_error("stieltjes: need Im z > 0");

    const double target = 1e-13;
    std::complex<double> m = -1.0 / z;
    double residual = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 2 && residual > target; ++pass) {
        const double damping = pass == 0 ? 0.5 : 0.25;
        const int cap = pass == 0 ? 2000 : 10000;
        for (int it = 0; it < cap; ++it) {
            const std::complex<double> next = detail::stieltjes_rhs(c, h, z, m);
            residual = std::abs(next - m);
            m = damping * next + (1.0 - damping) * m;
            if (residual <= target) break;
        }
        if (residual <= target) break;
        // Newton on g(mb) = z + 1/mb - c int t/(1+t mb) dH
        std::complex<double> mb = -(1.0 - c) / z + c * m;
        bool ok = false;
        for (int it = 0; it < 200; ++it) {
            const std::complex<double> g = z - detail::silverstein_z(c, h, mb);
            std::complex<double> dg = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                const double t = h.atoms()[i];
                const std::complex<double> q = t / (1.0 + t * mb);
                dg += h.weights()[i] * q * q;
            }
            dg = -(1.0 / (mb * mb)) + c * dg;
            if (!(std::abs(dg) > 0.0)) break;
            const std::complex<double> step = g / dg;
            mb -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(mb))) {
                ok = true;
                break;
            }
        }
        if (ok && mb.imag() > 0.0) {
            const std::complex<double> candidate = (mb + (1.0 - c) / z) / c;
            const double res = std::abs(candidate - detail::stieltjes_rhs(c, h, z, candidate));
            if (res < residual) {
                m = candidate;
                residual = res;
            }
        }
    }
    if (residual > 1e-12)
        throw NumericalError("stieltjes: fixed point did not converge at z = (" +
                                 std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")",
                             residual);
    const std::complex<double> companion = -(1.0 - c) / z + c * m;
    if (!(companion.imag() > 0.0))
        throw NumericalError("stieltjes: converged to a non-Herglotz branch", residual);
    return m;
}

/// Companion transform of cF^{c,H} + (1-c) delta_0; satisfies the
/// Silverstein equation z = -1/mb + c int t/(1+t mb) dH(t).
inline std::complex<double> companion_stieltjes(double c, const DiscreteSpectrum& h,
                                                std::complex<double> z) {
    return -(1.0 - c) / z + c * stieltjes(c, h, z);
}

struct SupportInterval {
    double lower;
    double upper;
};

namespace detail {

/// psi(w) = 1 - c int t^2/(w+t)^2 dH(t); zeros of z'(mb) at mb = 1/w.
/// The substitution w = 1/mb turns every pole-free stretch of the real
/// mb-line into a bounded interval between consecutive -t_i, and makes
/// psi monotone on the two exterior stretches.
inline double edge_psi(double c, const DiscreteSpectrum& h, double w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double q = h.atoms()[i] / (w + h.atoms()[i]);
        acc += h.weights()[i] * q * q;
    }
    return 1.0 - c * acc;
}

/// All sign changes of psi on the open interval (lo, hi), bisected to
/// near machine precision.
inline void edge_psi_roots(double c, const DiscreteSpectrum& h, double lo, double hi,
                           std::vector<double>& roots) {
    const int grid = 4096;
    const double width = hi - lo;
    const double margin = 1e-9 * std::max(width, 1.0);
    double prev_w = 0.0, prev_v = 0.0;
    bool have_prev = false;
    for (int i = 0; i <= grid; ++i) {
        const double w = (lo + margin) + (width - 2.0 * margin) * i / grid;
        const double v = edge_psi(c, h, w);
        if (have_prev && prev_v * v < 0.0) {
            double a = prev_w, b = w, fa = prev_v;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                const double fm = edge_psi(c, h, mid);
                if (fa * fm <= 0.0)
                    b = mid;
                else {
                    a = mid;
                    fa = fm;
                }
                if (b - a <= 1e-14 * std::max(1.0, std::abs(a))) break;
            }
            roots.push_back(0.5 * (a + b));
        }
        prev_w = w;
        prev_v = v;
        have_prev = true;
    }
}

}  // namespace detail

/// Support of the continuous part of F^{c,H}. Boundary points are the
/// critical values z(mb) at real mb where z'(mb) = 0; roots are located
/// through the substitution w = 1/mb and paired after sorting. An odd
/// root count means a hard edge at the origin (c >= 1).
inline std::vector<SupportInterval> support_edges(double c, const DiscreteSpectrum& h) {
    if (!(c > 0.0)) throw std::domain_error("support_edges: c must be positive");

    std::vector<double> roots_w;
    // exterior stretch mb < -1/t_1  <=>  w in (-t_1, 0); psi monotone there
    detail::edge_psi_roots(c, h, -h.min_atom(), 0.0, roots_w);
    // stretches between consecutive poles of z'
    for (std::size_t i = 0; i + 1 < h.size(); ++i)
        detail::edge_psi_roots(c, h, -h.atoms()[i + 1], -h.atoms()[i], roots_w);
    // mb > 0  <=>  w > 0; psi increases from 1-c to 1, one root iff c > 1
    if (c > 1.0) {
        double hi = std::max(1.0, h.max_atom());
        while (detail::edge_psi(c, h, hi) <= 0.0) hi *= 2.0;
        detail::edge_psi_roots(c, h, 0.0, hi, roots_w);
    }

    std::vector<double> edges;
    for (double w : roots_w)
        edges.push_back(detail::silverstein_z_real(c, h, 1.0 / w));
    std::sort(edges.begin(), edges.end());
    if (edges.size() % 2 == 1) edges.insert(edges.begin(), 0.0);  // hard edge at the origin
    if (edges.empty())
        throw NumericalError("support_edges: no critical points located", 0.0);

    std::vector<SupportInterval> support;
    for (std::size_t i = 0; i + 1 < edges.size(); i += 2) {
        if (!(edges[i] >= -1e-12))
            throw NumericalError("support_edges: negative edge " + std::to_string(edges[i]), 0.0);
        support.push_back({std::max(0.0, edges[i]), edges[i + 1]});
    }
    for (std::size_t i = 0; i + 1 < support.size(); ++i)
        if (!(support[i].upper < support[i + 1].lower))
            throw NumericalError("support_edges: intervals overlap", 0.0);
    return support;
}

/// First two moments of F^{c,H}: (gamma_1, gamma_2 + c gamma_1^2).
inline std::pair<double, double> lsd_moments(double c, const DiscreteSpectrum& h) {
    if (!(c > 0.0)) throw std::domain_error("lsd_moments: c must be positive");
    const double g1 = h.moment(1);
    const double g2 = h.moment(2);
    return {g1, g2 + c * g1 * g1};
}

/// Resolved limiting law: support intervals plus the point mass at zero.
class MpLaw {
public:
    static MpLaw resolve(double c, DiscreteSpectrum h) {
        MpLaw law(c, std::move(h));
        law.support_ = support_edges(c, law.h_);
        const double edge_bound = law.h_.max_atom() * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
        if (law.support_.back().upper > edge_bound * (1.0 + 1e-9))
            throw NumericalError("MpLaw: right edge exceeds the spectral-norm bound",
                                 law.support_.back().upper - edge_bound);
        law.check_total_mass();
        return law;
    }

    double c() const noexcept { return c_; }
    const DiscreteSpectrum& h() const noexcept { return h_; }
    const std::vector<SupportInterval>& support() const noexcept { return support_; }
    double zero_atom_mass() const noexcept { return c_ > 1.0 ? 1.0 - 1.0 / c_ : 0.0; }

    bool in_support(double x) const noexcept {
        for (const auto& iv : support_)
            if (x >= iv.lower && x <= iv.upper) return true;
        return false;
    }

private:
    MpLaw(double c, DiscreteSpectrum h) : c_(c), h_(std::move(h)) {}

    void check_total_mass() const;

    double c_;
    DiscreteSpectrum h_;
    std::vector<SupportInterval> support_;
};

/// Density of the continuous part of F^{c,H} by Stieltjes inversion,
/// evaluated at eps in {1e-6, 5e-7} and Richardson-extrapolated to the
/// real axis; identically zero off the resolved support.
inline double density(const MpLaw& law, double x) {
    if (!(x > 0.0)) throw std::domain_error("density: x must be positive");
    if (!law.in_support(x)) return 0.0;
    constexpr double eps = 1e-6;
    const double f1 = stieltjes(law.c(), law.h(), {x, eps}).imag() / 3.141592653589793238462643;
    const double f2 = stieltjes(law.c(), law.h(), {x, 0.5 * eps}).imag() / 3.141592653589793238462643;
    return std::max(0.0, 2.0 * f2 - f1);
}

inline void MpLaw::check_total_mass() const {
    double mass = zero_atom_mass();
    for (const auto& iv : support_) {
        const double len = iv.upper - iv.lower;
        // x = a + len sin^2(theta) removes the square-root edge behavior
        mass += integrate(
            [&](double theta) {
                const double s = std::sin(theta);
                const double x = iv.lower + len * s * s;
                return density(*this, std::min(iv.upper, std::max(iv.lower, x))) * len *
                       std::sin(2.0 * theta);
            },
            0.0, 1.5707963267948966, 2e-7);
    }
    if (std::abs(mass - 1.0) > 1e-6)
        throw NumericalError("MpLaw: total mass " + std::to_string(mass) + " != 1",
                             std::abs(mass - 1.0));
}

/// Closed-form density of F^{c,delta_1} (continuous part).
inline double marchenko_pastur_density(double c, double x) {
    const double a = (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
    const double b = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
    if (x <= a || x >= b) return 0.0;
    return std::sqrt((b - x) * (x - a)) / (2.0 * 3.141592653589793238462643 * c * x);
}

/// int ln(z0 - x) dF^{c,delta_1}(x), including the zero atom for c > 1.
/// The integrand is regularized by x = a + (b-a) sin^2(theta) and handled
/// with adaptive Gauss-Legendre to better than 1e-9 absolute error.
inline double log_integral(double c, double z0) {
    if (!(c > 0.0)) throw std::domain_error("log_integral: c must be positive");
    const double sqrt_c = std::sqrt(c);
    const double a = (1.0 - sqrt_c) * (1.0 - sqrt_c);
    const double b = (1.0 + sqrt_c) * (1.0 + sqrt_c);
    if (!(z0 > b)) throw std::domain_error("log_integral: z0 must exceed the right support edge");
    const double len = b - a;
    const double pi = 3.141592653589793238462643;
    double value = integrate(
        [&](double theta) {
            const double s = std::sin(theta);
            const double x = a + len * s * s;
            const double s2 = std::sin(2.0 * theta);
            if (!(x > 0.0)) return 0.0;  // theta = 0 endpoint when c = 1
            return std::log(z0 - x) * len * len * s2 * s2 / (4.0 * pi * c * x);
        },
        0.0, 0.5 * pi, 1e-10);
    if (c > 1.0) value += (1.0 - 1.0 / c) * std::log(z0);
    return value;
}

}  // namespace ellspec
