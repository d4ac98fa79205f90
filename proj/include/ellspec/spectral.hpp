#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace ellspec {

/// Sorted eigenvalues of a sample covariance matrix plus the (p, n, c_n)
/// metadata every test formula needs.
struct SpectralSample {
    Eigen::VectorXd eigenvalues;  // ascending, length p
    int p = 0;
    int n = 0;
    double c_n = 0.0;

    /// Sorts, clamps tiny negative roundoff to zero, rejects anything worse.
    static SpectralSample from_eigenvalues(Eigen::VectorXd values, int n) {
        if (values.size() == 0) throw std::invalid_argument("SpectralSample: empty eigenvalue set");
        if (n < 1) throw std::invalid_argument("SpectralSample: n must be positive");
        std::sort(values.data(), values.data() + values.size());
        const double scale = std::max(1.0, std::abs(values(values.size() - 1)));
        const double tol = 1e-10 * scale;
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            if (values(i) < -tol)
                throw std::invalid_argument("SpectralSample: eigenvalue " + std::to_string(values(i)) +
                                            " below the PSD tolerance");
            if (values(i) < 0.0) values(i) = 0.0;
        }
        SpectralSample s;
        s.p = static_cast<int>(values.size());
        s.n = n;
        s.c_n = static_cast<double>(s.p) / n;
        s.eigenvalues = std::move(values);
        return s;
    }

    double max_eigenvalue() const { return eigenvalues(eigenvalues.size() - 1); }

    /// CSV form: comment header carrying p and n, then one eigenvalue per line.
    void to_csv(std::ostream& os) const {
        os << "# p=" << p << " n=" << n << "\n";
        os << "eigenvalue\n";
        os.precision(17);
        for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) os << eigenvalues(i) << "\n";
    }

    static SpectralSample from_csv(std::istream& is) {
        std::string line;
        if (!std::getline(is, line)) throw std::invalid_argument("SpectralSample: empty stream");
        int p = 0, n = 0;
        if (std::sscanf(line.c_str(), "# p=%d n=%d", &p, &n) != 2)
            throw std::invalid_argument("SpectralSample: missing '# p=.. n=..' header");
        if (!std::getline(is, line) || line != "eigenvalue")
            throw std::invalid_argument("SpectralSample: missing column header");
        Eigen::VectorXd values(p);
        for (int i = 0; i < p; ++i) {
            if (!std::getline(is, line))
                throw std::invalid_argument("SpectralSample: expected " + std::to_string(p) + " eigenvalues");
            values(i) = std::stod(line);
        }
        return from_eigenvalues(std::move(values), n);
    }
};

/// B_n = X X' / n for p x n data X (columns are observations).
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("sample_covariance: empty matrix");
    const Eigen::Index n = x.cols();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    b.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / static_cast<double>(n));
    b.triangularView<Eigen::StrictlyUpper>() = b.transpose();
    return b;
}

/// Eigenvalues of a dense symmetric matrix, ascending.
inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw std::invalid_argument("symmetric_eigenvalues: matrix must be square and nonempty");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale)
        throw std::invalid_argument("symmetric_eigenvalues: asymmetry " + std::to_string(asym) +
                                    " beyond tolerance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("symmetric_eigenvalues: eigensolver did not converge");
    return solver.eigenvalues();
}

/// Spectrum of the sample covariance of X in one step.
inline SpectralSample sample_spectrum(const Eigen::MatrixXd& x) {
    return SpectralSample::from_eigenvalues(symmetric_eigenvalues(sample_covariance(x)),
                                            static_cast<int>(x.cols()));
}

/// beta_j = (1/p) sum lambda_i^j.
inline double spectral_moment(const SpectralSample& s, int j) {
    if (j < 1) throw std::invalid_argument("spectral_moment: order must be >= 1");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) acc += std::pow(s.eigenvalues(i), j);
    return acc / static_cast<double>(s.p);
}

/// Linear spectral statistic (1/p) sum f(lambda_i).
template <typename F>
double lss(const SpectralSample& s, F&& f) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
        const double v = f(s.eigenvalues(i));
        if (!std::isfinite(v))
            throw std::domain_error("lss: f is not finite at eigenvalue " +
                                    std::to_string(s.eigenvalues(i)));
        acc += v;
    }
    return acc / static_cast<double>(s.p);
}

/// Spatial-sign transform: each column rescaled to squared norm p.
/// Makes every downstream statistic invariant to per-sample scale.
inline Eigen::MatrixXd spatial_sign(const Eigen::MatrixXd& x) {
    const double root_p = std::sqrt(static_cast<double>(x.rows()));
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double norm = x.col(j).norm();
        if (!(norm > 0.0))
            throw std::domain_error("spatial_sign: column " + std::to_string(j) + " is zero");
        // divide first: quotients of exactly-scaled columns round identically,
        // so rescaling the input never moves the output
        out.col(j) = (x.col(j) / norm) * root_p;
    }
    return out;
}

struct AlphaEstimates {
    double alpha2_hat;
    double alpha4_hat;
};

/// The plug-in formulas on raw spectral moments:
///   alpha2 = b2 - c,  alpha4 = b4 - 4c b3 - 2c b2^2 + 10c^2 b2 - 5c^3.
inline AlphaEstimates alpha_from_moments(double b2, double b3, double b4, double c) {
    return {b2 - c, b4 - 4.0 * c * b3 - 2.0 * c * b2 * b2 + 10.0 * c * c * b2 - 5.0 * c * c * c};
}

/// Estimators of alpha_2 and alpha_4 from the spectrum of the spatial-sign
/// sample covariance, whose first moment is identically 1 (checked).
inline AlphaEstimates alpha_estimators(const SpectralSample& s) {
    const double b1 = spectral_moment(s, 1);
    if (std::abs(b1 - 1.0) > 1e-6)
        throw std::invalid_argument("alpha_estimators: first spectral moment " + std::to_string(b1) +
                                    " != 1; input is not a spatial-sign spectrum");
    return alpha_from_moments(spectral_moment(s, 2), spectral_moment(s, 3), spectral_moment(s, 4),
                              s.c_n);
}

}  // namespace ellspec
