#pragma once

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ellspec/errors.hpp"
#include "ellspec/harness.hpp"
#include "ellspec/mp_law.hpp"
#include "ellspec/pipeline.hpp"
#include "ellspec/sphericity.hpp"

namespace ellspec::cli {

namespace detail {

inline std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(std::stod(field));
    if (out.empty()) throw InputError("expected a comma-separated list, got '" + csv + "'");
    return out;
}

inline void write_text(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream file(out_path);
    if (!file) throw InputError("cannot open output file '" + out_path + "'");
    file << text;
}

inline int run_simulate(const std::string& config_path, const std::string& out_prefix, int workers) {
    std::ifstream file(config_path);
    if (!file) throw InputError("cannot open config '" + config_path + "'");
    nlohmann::json j;
    file >> j;
    ExperimentConfig config = experiment_from_json(j);
    if (workers > 0) config.workers = workers;
    const ReplicationMatrix result = run_replications(config);
    const nlohmann::json summary = summarize(config, result);
    if (!out_prefix.empty()) {
        std::ofstream values(out_prefix + "_values.csv");
        if (!values) throw InputError("cannot open '" + out_prefix + "_values.csv'");
        for (std::size_t i = 0; i < result.columns.size(); ++i)
            values << (i ? "," : "") << result.columns[i];
        values << "\n";
        values.precision(17);
        for (Eigen::Index r = 0; r < result.values.rows(); ++r) {
            for (Eigen::Index c = 0; c < result.values.cols(); ++c)
                values << (c ? "," : "") << result.values(r, c);
            values << "\n";
        }
        std::ofstream summary_file(out_prefix + "_summary.json");
        summary_file << summary.dump(2) << "\n";
    }
    std::cout << summary.dump(2) << "\n";
    return 0;
}

inline int run_mp_law(double c, const std::string& atoms_csv, const std::string& weights_csv,
                      int points, const std::string& out_path) {
    const DiscreteSpectrum h(parse_list(atoms_csv), parse_list(weights_csv));
    const MpLaw law = MpLaw::resolve(c, h);
    std::ostringstream os;
    os.precision(12);
    os << "# zero_atom," << law.zero_atom_mass() << "\n";
    double total_len = 0.0;
    for (const auto& iv : law.support()) total_len += iv.upper - iv.lower;
    os << "x,density\n";
    for (const auto& iv : law.support()) {
        os << "# support," << iv.lower << "," << iv.upper << "\n";
        const int n = std::max(8, static_cast<int>(points * (iv.upper - iv.lower) / total_len));
        for (int i = 0; i <= n; ++i) {
            const double x = iv.lower + (iv.upper - iv.lower) * i / n;
            os << x << "," << density(law, std::max(x, 1e-300)) << "\n";
        }
    }
    write_text(out_path, os.str());
    return 0;
}

inline int run_power(double c, double tau, double h0, double alpha, double s_min, double s_max,
                     int points, const std::string& out_path) {
    const double sqrt_c = std::sqrt(c);
    const double s_bar = h0 <= sqrt_c ? sqrt_c : c / h0;
    if (s_min <= 0.0) s_min = 1e-3 * s_bar;
    if (s_max <= 0.0) s_max = (1.0 - 1e-6) * s_bar - 1e-8;
    if (!(s_min < s_max)) throw InputError("power: need s-min < s-max");
    std::ostringstream os;
    os.precision(12);
    os << "s,power\n";
    for (int i = 0; i < points; ++i) {
        const double s = s_min + (s_max - s_min) * i / (points - 1);
        os << s << "," << tlr_power(c, s, h0, tau, alpha) << "\n";
    }
    write_text(out_path, os.str());
    return 0;
}

struct TestOptions {
    std::string input_path;
    std::string method = "tm";
    double alpha = 0.05;
    std::optional<double> s;
    std::optional<double> tau;
    std::uint64_t seed = 0;
    std::string input_kind = "returns";  // or "prices"
    bool assets_in_rows = false;
    std::string sectors_path;
    int groups = 0;
    std::string out_path;
};

inline int run_test_command(const TestOptions& opt) {
    const auto method = test_name_from_string(opt.method);
    if (!method) throw InputError("unknown test method '" + opt.method + "'");

    CsvLayout layout;
    layout.assets_in_columns = !opt.assets_in_rows;
    ReturnsMatrix data = ingest_prices(opt.input_path, layout);
    if (opt.input_kind == "prices")
        data = log_returns(data);
    else if (opt.input_kind != "returns")
        throw InputError("unknown input kind '" + opt.input_kind + "'");
    if (data.dropped_rows > 0)
        std::cerr << "warning: dropped " << data.dropped_rows << " asset row(s) from '"
                  << opt.input_path << "'\n";

    TestConfig config;
    config.alpha = opt.alpha;
    config.s = opt.s;
    config.tau = opt.tau;
    config.seed = opt.seed;

    nlohmann::json output;
    if (!opt.sectors_path.empty()) {
        if (opt.groups < 1) throw InputError("group testing needs --groups >= 1");
        const auto sectors = read_sector_map(opt.sectors_path);
        RandomStream rng(opt.seed, "groups", 0);
        const auto groups = group_sample(sectors, opt.groups, rng);
        nlohmann::json reports = nlohmann::json::array();
        int rejections = 0;
        for (const auto& group : groups) {
            const ReturnsMatrix sub = select_assets(data, group);
            TestReport report = run_test(*method, sub.values, config);
            report.meta.seed = opt.seed;
            if (report.reject) ++rejections;
            nlohmann::json entry = report.to_json();
            entry["assets"] = group;
            reports.push_back(entry);
        }
        output["reports"] = reports;
        output["summary"] = {{"groups", groups.size()},
                             {"rejections", rejections},
                             {"rejection_rate", static_cast<double>(rejections) / groups.size()}};
    } else {
        output = run_test(*method, data.values, config).to_json();
    }
    write_text(opt.out_path, output.dump(2) + "\n");
    return 0;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 2 input error, 3 numerical error.
inline int run(std::vector<std::string> args) {
    CLI::App app{"spectral statistics of high-dimensional elliptical samples"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment from a JSON config");
    std::string config_path, out_prefix;
    int workers = 0;
    simulate->add_option("--config", config_path, "experiment config JSON")->required();
    simulate->add_option("--out", out_prefix, "prefix for <prefix>_values.csv / _summary.json");
    simulate->add_option("--workers", workers, "worker threads (0 = auto)");

    auto* mp = app.add_subcommand("mp-law", "emit (x, density) samples of the limiting law");
    double mp_c = 0.0;
    std::string atoms = "1", weights = "1", mp_out;
    int mp_points = 512;
    mp->add_option("--c", mp_c, "dimension ratio p/n")->required();
    mp->add_option("--atoms", atoms, "population spectrum atoms, comma separated");
    mp->add_option("--weights", weights, "population spectrum weights, comma separated");
    mp->add_option("--points", mp_points, "total grid points");
    mp->add_option("--out", mp_out, "output CSV (stdout if omitted)");

    auto* power = app.add_subcommand("power", "power curve of the spiked-alternative log test");
    double pw_c = 0.0, pw_tau = 2.0, pw_h0 = 0.0, pw_alpha = 0.05, pw_smin = 0.0, pw_smax = 0.0;
    int pw_points = 200;
    std::string pw_out;
    power->add_option("--c", pw_c, "dimension ratio")->required();
    power->add_option("--tau", pw_tau, "radius parameter tau");
    power->add_option("--h0", pw_h0, "true spike strength")->required();
    power->add_option("--alpha", pw_alpha, "test level");
    power->add_option("--s-min", pw_smin, "lower end of the s grid");
    power->add_option("--s-max", pw_smax, "upper end of the s grid");
    power->add_option("--points", pw_points, "grid size");
    power->add_option("--out", pw_out, "output CSV (stdout if omitted)");

    auto* test = app.add_subcommand("test", "run a sphericity test on a CSV matrix");
    detail::TestOptions opt;
    double opt_s = -1.0, opt_tau = -1.0;
    test->add_option("file", opt.input_path, "input CSV")->required();
    test->add_option("--method", opt.method, "one of t1,t2,tm,tlr,tlr-tilde");
    test->add_option("--alpha", opt.alpha, "test level");
    test->add_option("--s", opt_s, "testing parameter of the log statistics");
    test->add_option("--tau", opt_tau, "radius parameter for tlr-tilde");
    test->add_option("--seed", opt.seed, "seed for group sampling");
    test->add_option("--input", opt.input_kind, "'returns' (default) or 'prices' (log-differenced)");
    test->add_flag("--assets-in-rows", opt.assets_in_rows, "input rows are assets, columns periods");
    test->add_option("--sectors", opt.sectors_path, "asset,sector CSV enabling cross-sector groups");
    test->add_option("--groups", opt.groups, "number of cross-sector groups to draw");
    test->add_option("--out", opt.out_path, "output JSON (stdout if omitted)");

    args.insert(args.begin(), "ellspec");
    std::vector<char*> argv;
    argv.reserve(args.size());
    for (auto& a : args) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return detail::run_simulate(config_path, out_prefix, workers);
        if (mp->parsed()) return detail::run_mp_law(mp_c, atoms, weights, mp_points, mp_out);
        if (power->parsed())
            return detail::run_power(pw_c, pw_tau, pw_h0, pw_alpha, pw_smin, pw_smax, pw_points,
                                     pw_out);
        if (test->parsed()) {
            if (opt_s >= 0.0) opt.s = opt_s;
            if (opt_tau >= 0.0) opt.tau = opt_tau;
            return detail::run_test_command(opt);
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace ellspec::cli
