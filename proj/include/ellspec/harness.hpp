#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ellspec/elliptical.hpp"
#include "ellspec/lss_clt.hpp"
#include "ellspec/normal.hpp"
#include "ellspec/sphericity.hpp"

namespace ellspec {

// ---------------------------------------------------------------------------
// Verification statistics
// ---------------------------------------------------------------------------

/// Kolmogorov-Smirnov distance between a sample and a reference CDF.
inline double ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf) {
    if (values.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = cdf(values[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Asymptotic KS p-value with the Stephens small-sample correction.
inline double ks_pvalue(double d, std::size_t n) {
    const double root_n = std::sqrt(static_cast<double>(n));
    const double lambda = (root_n + 0.12 + 0.11 / root_n) * d;
    if (lambda < 0.2) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 101; ++k) {
        const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, p));
}

/// (theoretical, empirical) quantile pairs against the standard normal,
/// plotting positions (i - 0.5)/R.
inline std::vector<std::pair<double, double>> qq_data(const std::vector<double>& values) {
    if (values.size() < 10) throw std::invalid_argument("qq_data: need at least 10 values");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double r = static_cast<double>(sorted.size());
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        pairs.emplace_back(norm_quantile((static_cast<double>(i) + 0.5) / r), sorted[i]);
    return pairs;
}

inline double qq_correlation(const std::vector<std::pair<double, double>>& pairs) {
    const double n = static_cast<double>(pairs.size());
    double mx = 0, my = 0;
    for (const auto& [x, y] : pairs) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& [x, y] : pairs) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// Rejection frequency at level alpha with its binomial standard error.
inline std::pair<double, double> empirical_size_power(const std::vector<TestReport>& reports,
                                                      double alpha) {
    if (reports.empty()) throw std::invalid_argument("empirical_size_power: no reports");
    const double r = static_cast<double>(reports.size());
    double rejected = 0.0;
    for (const auto& report : reports)
        if (report.p_value < alpha) rejected += 1.0;
    const double f = rejected / r;
    return {f, std::sqrt(f * (1.0 - f) / r)};
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Sigma = I + h vv' as a two-atom spectrum at dimension p.
inline DiscreteSpectrum spiked_spectrum(int p, double h) {
    if (!(h >= 0.0)) throw std::domain_error("spiked_spectrum: h must be >= 0");
    if (p < 2) throw std::domain_error("spiked_spectrum: p must be >= 2");
    if (h == 0.0) return DiscreteSpectrum::delta(1.0);
    const double pd = p;
    return DiscreteSpectrum({1.0, 1.0 + h}, {(pd - 1.0) / pd, 1.0 / pd});
}

/// Radius families outside the admissible class (Table-style negative
/// controls). Sampling works; no CLT parameters exist for them and every
/// report derived from them is flagged non-conforming.
struct NegativeControlRadius {
    enum class Kind { StudentT, NormalScaleMixture } kind;
    double param;  // degrees of freedom (> 4) / mixture spread in (0,1)

    static NegativeControlRadius student_t(double dof) {
        if (!(dof > 4.0)) throw std::domain_error("NegativeControlRadius: Student-t needs dof > 4");
        return {Kind::StudentT, dof};
    }
    static NegativeControlRadius normal_scale_mixture(double spread) {
        if (!(spread > 0.0) || !(spread < 1.0))
            throw std::domain_error("NegativeControlRadius: spread must lie in (0,1)");
        return {Kind::NormalScaleMixture, spread};
    }
};

/// Draw of a non-conforming radius, normalized so E(xi^2) = p.
inline double sample_control_radius(const NegativeControlRadius& law, int p, RandomStream& rng) {
    const double pd = p;
    switch (law.kind) {
        case NegativeControlRadius::Kind::StudentT: {
            const double v = law.param;
            // xi^2/p ~ F(p, v) scaled back to mean p
            return std::sqrt((v - 2.0) * rng.chi_square(pd) / rng.chi_square(v));
        }
        case NegativeControlRadius::Kind::NormalScaleMixture: {
            const double w = rng.uniform() < 0.5 ? 1.0 - law.param : 1.0 + law.param;
            return std::sqrt(w * rng.chi_square(pd));
        }
    }
    throw std::logic_error("sample_control_radius: unknown kind");
}

/// n observations from the rank-one spiked model Sigma = I + h vv',
/// sampled as x = xi (u + (sqrt(1+h)-1)(v'u) v): O(p) per column, exact
/// covariance. The radius draw precedes the direction draw per column.
template <typename RadiusSampler>
Eigen::MatrixXd sample_spiked_population(int p, int n, double h, const Eigen::VectorXd& v,
                                         RadiusSampler&& draw_radius, RandomStream& rng) {
    if (!(h >= 0.0)) throw std::domain_error("sample_spiked_population: h must be >= 0");
    if (v.size() != p) throw std::invalid_argument("sample_spiked_population: v must have length p");
    const double kappa = std::sqrt(1.0 + h) - 1.0;
    Eigen::MatrixXd data(p, n);
    for (int j = 0; j < n; ++j) {
        const double xi = draw_radius(rng);
        const Eigen::VectorXd u = sample_direction(p, rng);
        data.col(j) = xi * (u + kappa * v.dot(u) * v);
    }
    return data;
}

enum class StatKind { Z1, Z2, NT1, NT2, Tm, PTlr, PTlrTilde };

inline std::string stat_kind_name(StatKind kind) {
    switch (kind) {
        case StatKind::Z1: return "z1";
        case StatKind::Z2: return "z2";
        case StatKind::NT1: return "nt1";
        case StatKind::NT2: return "nt2";
        case StatKind::Tm: return "tm";
        case StatKind::PTlr: return "p_tlr";
        case StatKind::PTlrTilde: return "p_tlr_tilde";
    }
    return "unknown";
}

struct SpikeConfig {
    double h = 0.0;
    enum class VMode { FixedE1, Random } v_mode = VMode::FixedE1;
};

struct ExperimentConfig {
    EllipticalModel model;
    int n;
    int replications;
    std::uint64_t seed = 0;
    std::vector<StatKind> statistics;
    double alpha = 0.05;
    std::optional<SpikeConfig> spike;
    std::vector<double> s_grid;  // evaluation points of the log statistics
    std::optional<NegativeControlRadius> negative_control;
    double tau_assumed = 2.0;  // tau used for standardization under a negative control
    int workers = 0;           // 0 = hardware concurrency (capped at 8)
};

struct ReplicationFailure {
    int replication;
    std::string column;
    std::string what;
};

/// Per-replication statistic values: one row per replication, one column
/// per requested statistic; cells whose statistic was undefined for that
/// draw hold NaN and are listed in `failures`.
struct ReplicationMatrix {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
    std::vector<ReplicationFailure> failures;
    bool radius_conforming = true;

    Eigen::Index column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<Eigen::Index>(i);
        throw std::invalid_argument("ReplicationMatrix: no column named '" + name + "'");
    }

    /// Finite entries of one column.
    std::vector<double> column(const std::string& name) const {
        const Eigen::Index j = column_index(name);
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(values.rows()));
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            if (std::isfinite(values(i, j))) out.push_back(values(i, j));
        return out;
    }
};

namespace detail {

struct ColumnSpec {
    StatKind kind;
    double s = 0.0;  // for the log statistics
    std::string name;
};

inline std::vector<ColumnSpec> expand_columns(const ExperimentConfig& config) {
    std::vector<ColumnSpec> specs;
    for (StatKind kind : config.statistics) {
        if (kind == StatKind::PTlr || kind == StatKind::PTlrTilde) {
            if (config.s_grid.empty())
                throw std::invalid_argument("ExperimentConfig: log statistics need a nonempty s_grid");
            for (double s : config.s_grid) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%s[s=%g]", stat_kind_name(kind).c_str(), s);
                specs.push_back({kind, s, buf});
            }
        } else {
            specs.push_back({kind, 0.0, stat_kind_name(kind)});
        }
    }
    if (specs.empty()) throw std::invalid_argument("ExperimentConfig: no statistics requested");
    return specs;
}

}  // namespace detail

/// Runs the configured experiment. Replication i draws everything from
/// the stream derived from (seed, "replication", i), so the output is
/// identical for any worker count and any scheduling order.
inline ReplicationMatrix run_replications(const ExperimentConfig& config) {
    if (config.replications < 1)
        throw std::invalid_argument("run_replications: replications must be >= 1");
    if (config.n < 1) throw std::invalid_argument("run_replications: n must be >= 1");

    const int p = config.model.p;
    const int n = config.n;
    const int r = config.replications;
    const double c_n = static_cast<double>(p) / n;
    const auto specs = detail::expand_columns(config);
    const int k = static_cast<int>(specs.size());

    bool need_raw = false, need_check = false, need_moments = false;
    for (const auto& spec : specs) {
        switch (spec.kind) {
            case StatKind::Z1:
            case StatKind::Z2: need_raw = need_moments = true; break;
            case StatKind::PTlrTilde: need_raw = true; break;
            default: need_check = true; break;
        }
    }

    // Population spectrum as sampled (spike overrides the model spectrum).
    const DiscreteSpectrum h_p =
        config.spike ? spiked_spectrum(p, config.spike->h) : config.model.sigma_spectrum;
    const double tau = config.negative_control
                           ? config.tau_assumed
                           : radius_moments(config.model.radius, p).tau;
    std::optional<MomentCltParams> clt;
    std::pair<double, double> centering{0.0, 0.0};
    if (need_moments) {
        clt = moment_clt_params(c_n, h_p, tau);
        centering = centering_values(c_n, h_p);
    }
    const Eigen::VectorXd sqrt_diag = config.model.sqrt_sigma_diagonal();

    ReplicationMatrix result;
    for (const auto& spec : specs) result.columns.push_back(spec.name);
    result.values.setConstant(r, k, std::numeric_limits<double>::quiet_NaN());
    result.radius_conforming = !config.negative_control.has_value();
    std::vector<std::vector<ReplicationFailure>> failures(r);

    const auto draw_radius = [&](RandomStream& rng) {
        return config.negative_control ? sample_control_radius(*config.negative_control, p, rng)
                                       : sample_radius(config.model.radius, p, rng);
    };

    const auto run_one = [&](int rep) {
        RandomStream rng(config.seed, "replication", static_cast<std::uint64_t>(rep));
        Eigen::MatrixXd data(p, n);
        if (config.spike && config.spike->h > 0.0) {
            Eigen::VectorXd v;
            if (config.spike->v_mode == SpikeConfig::VMode::Random) {
                v = sample_direction(p, rng);
            } else {
                v = Eigen::VectorXd::Zero(p);
                v(0) = 1.0;
            }
            data = sample_spiked_population(p, n, config.spike->h, v, draw_radius, rng);
        } else {
            for (int j = 0; j < n; ++j) {
                const double xi = draw_radius(rng);
                const Eigen::VectorXd u = sample_direction(p, rng);
                data.col(j) = xi * sqrt_diag.cwiseProduct(u);
            }
        }

        std::optional<SpectralSample> raw, check;
        if (need_raw) raw = sample_spectrum(data);
        if (need_check) check = sample_spectrum(spatial_sign(data));

        std::optional<std::pair<double, double>> z_scores;
        if (need_moments)
            z_scores = standardize_moments(spectral_moment(*raw, 1), spectral_moment(*raw, 2), p,
                                           *clt, centering);
        std::optional<AlphaEstimates> alpha_hat;
        if (need_check) alpha_hat = alpha_estimators(*check);

        for (int col = 0; col < k; ++col) {
            const auto& spec = specs[col];
            try {
                switch (spec.kind) {
                    case StatKind::Z1: result.values(rep, col) = z_scores->first; break;
                    case StatKind::Z2: result.values(rep, col) = z_scores->second; break;
                    case StatKind::NT1:
                        result.values(rep, col) = n * (alpha_hat->alpha2_hat - 1.0);
                        break;
                    case StatKind::NT2:
                        result.values(rep, col) = n * (alpha_hat->alpha4_hat - 1.0);
                        break;
                    case StatKind::Tm: {
                        const auto [t1, t2] = t1_t2(alpha_hat->alpha2_hat, alpha_hat->alpha4_hat);
                        result.values(rep, col) = tm_statistic(t1, t2, n, c_n);
                        break;
                    }
                    case StatKind::PTlr:
                        result.values(rep, col) = p * tlr_statistic(*check, spec.s);
                        break;
                    case StatKind::PTlrTilde:
                        result.values(rep, col) = p * tlr_statistic(*raw, spec.s);
                        break;
                }
            } catch (const std::exception& e) {
                failures[rep].push_back({rep, spec.name, e.what()});
            }
        }
    };

    int workers = config.workers > 0
                      ? config.workers
                      : static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
    workers = std::min(workers, r);

    if (workers <= 1) {
        for (int i = 0; i < r; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const int i = next.fetch_add(1);
                    if (i >= r) return;
                    try {
                        run_one(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    for (auto& per_rep : failures)
        result.failures.insert(result.failures.end(), per_rep.begin(), per_rep.end());
    return result;
}

/// Column summaries (count, mean, variance, normal QQ correlation) plus
/// the conformance flag, as the `simulate` subcommand reports them.
inline nlohmann::json summarize(const ExperimentConfig& config, const ReplicationMatrix& result) {
    nlohmann::json columns = nlohmann::json::object();
    for (const auto& name : result.columns) {
        const auto values = result.column(name);
        nlohmann::json entry{{"count", values.size()}};
        if (!values.empty()) {
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;
            entry["mean"] = mean;
            entry["variance"] = var;
            if (values.size() >= 10) entry["qq_correlation"] = qq_correlation(qq_data(values));
        }
        columns[name] = entry;
    }
    nlohmann::json out{{"replications", config.replications},
                       {"p", config.model.p},
                       {"n", config.n},
                       {"c_n", static_cast<double>(config.model.p) / config.n},
                       {"seed", config.seed},
                       {"radius_conforming", result.radius_conforming},
                       {"failed_cells", result.failures.size()},
                       {"columns", columns}};
    if (!result.radius_conforming)
        out["warning"] = "radius law violates the fourth-moment condition; "
                         "no CLT parameters are valid for it";
    return out;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig config{model_from_json(j.at("model")),
                            j.at("n").get<int>(),
                            j.at("replications").get<int>(),
                            j.value("seed", std::uint64_t{0}),
                            {},
                            j.value("alpha", 0.05)};
    for (const auto& name : j.at("statistics")) {
        const std::string s = name.get<std::string>();
        if (s == "z1") config.statistics.push_back(StatKind::Z1);
        else if (s == "z2") config.statistics.push_back(StatKind::Z2);
        else if (s == "nt1") config.statistics.push_back(StatKind::NT1);
        else if (s == "nt2") config.statistics.push_back(StatKind::NT2);
        else if (s == "tm") config.statistics.push_back(StatKind::Tm);
        else if (s == "p_tlr") config.statistics.push_back(StatKind::PTlr);
        else if (s == "p_tlr_tilde") config.statistics.push_back(StatKind::PTlrTilde);
        else throw std::invalid_argument("experiment_from_json: unknown statistic '" + s + "'");
    }
    if (j.contains("s_grid")) config.s_grid = j.at("s_grid").get<std::vector<double>>();
    if (j.contains("spike")) {
        SpikeConfig spike;
        spike.h = j.at("spike").at("h").get<double>();
        const std::string mode = j.at("spike").value("v", "e1");
        if (mode == "random") spike.v_mode = SpikeConfig::VMode::Random;
        else if (mode == "e1") spike.v_mode = SpikeConfig::VMode::FixedE1;
        else throw std::invalid_argument("experiment_from_json: unknown spike v mode '" + mode + "'");
        config.spike = spike;
    }
    if (j.contains("negative_control")) {
        const auto& nc = j.at("negative_control");
        const std::string kind = nc.at("kind").get<std::string>();
        if (kind == "student_t")
            config.negative_control = NegativeControlRadius::student_t(nc.at("dof").get<double>());
        else if (kind == "normal_scale_mixture")
            config.negative_control =
                NegativeControlRadius::normal_scale_mixture(nc.at("spread").get<double>());
        else
            throw std::invalid_argument("experiment_from_json: unknown control radius '" + kind + "'");
    }
    config.tau_assumed = j.value("tau_assumed", 2.0);
    config.workers = j.value("workers", 0);
    return config;
}

}  // namespace ellspec
