#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ellspec {

/// Finitely supported spectral distribution: atoms t_1 < ... < t_k with
/// positive weights summing to one. Used both for population spectra
/// (eigenvalues of Sigma with multiplicities) and as the H input of the
/// limiting-law solver.
class DiscreteSpectrum {
public:
    DiscreteSpectrum(std::vector<double> atoms, std::vector<double> weights)
        : atoms_(std::move(atoms)), weights_(std::move(weights)) {
        if (atoms_.empty() || atoms_.size() != weights_.size())
            throw std::invalid_argument("DiscreteSpectrum: atoms/weights size mismatch or empty");
        double sum = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (!(atoms_[i] > 0.0) || !std::isfinite(atoms_[i]))
                throw std::invalid_argument("DiscreteSpectrum: atoms must be positive and finite");
            if (i > 0 && !(atoms_[i] > atoms_[i - 1]))
                throw std::invalid_argument("DiscreteSpectrum: atoms must be strictly increasing");
            if (!(weights_[i] > 0.0))
                throw std::invalid_argument("DiscreteSpectrum: weights must be positive");
            sum += weights_[i];
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteSpectrum: weights must sum to 1");
    }

    /// Point mass at t.
    static DiscreteSpectrum delta(double t) { return DiscreteSpectrum({t}, {1.0}); }

    const std::vector<double>& atoms() const noexcept { return atoms_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return atoms_.size(); }
    double max_atom() const noexcept { return atoms_.back(); }
    double min_atom() const noexcept { return atoms_.front(); }

    /// gamma_j = sum_i w_i t_i^j.
    double moment(int j) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) acc += weights_[i] * std::pow(atoms_[i], j);
        return acc;
    }

    /// Integer multiplicities for embedding the spectrum into dimension p,
    /// largest-remainder rounding so the counts sum to exactly p.
    std::vector<int> multiplicities(int p) const {
        if (p < static_cast<int>(atoms_.size()))
            throw std::invalid_argument("DiscreteSpectrum::multiplicities: p smaller than atom count");
        const std::size_t k = atoms_.size();
        std::vector<int> counts(k);
        std::vector<std::pair<double, std::size_t>> remainders(k);
        int assigned = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double exact = weights_[i] * p;
            counts[i] = static_cast<int>(std::floor(exact));
            remainders[i] = {exact - counts[i], i};
            assigned += counts[i];
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (int r = 0; r < p - assigned; ++r) ++counts[remainders[static_cast<std::size_t>(r)].second];
        return counts;
    }

private:
    std::vector<double> atoms_;
    std::vector<double> weights_;
};

}  // namespace ellspec
