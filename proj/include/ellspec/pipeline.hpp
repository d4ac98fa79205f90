#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellspec/errors.hpp"
#include "ellspec/random.hpp"

namespace ellspec {

/// Asset-by-period value matrix with identifiers and provenance. Rows are
/// assets, columns are time periods.
struct ReturnsMatrix {
    std::vector<std::string> asset_ids;
    std::vector<std::string> time_labels;
    Eigen::MatrixXd values;
    std::string source;
    std::string transform = "none";
    int dropped_rows = 0;
};

struct CsvLayout {
    bool assets_in_columns = true;  // input file: assets across, dates down
    bool first_column_labels = true;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\"");
    std::size_t e = s.find_last_not_of(" \t\r\"");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace detail

/// Reads a price table from CSV. Asset rows containing missing,
/// non-numeric or nonpositive prices are dropped; the count is recorded in
/// dropped_rows. An empty surviving matrix is an input error.
inline ReturnsMatrix ingest_prices_stream(std::istream& is, const CsvLayout& layout,
                                          const std::string& source) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (detail::trim(line).empty()) continue;
        rows.push_back(detail::split_csv_line(line));
    }
    if (rows.size() < 2) throw InputError("ingest_prices: '" + source + "' has no data rows");
    const std::size_t width = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != width)
            throw InputError("ingest_prices: ragged CSV row in '" + source + "'");
    const std::size_t first_field = layout.first_column_labels ? 1 : 0;
    if (width <= first_field) throw InputError("ingest_prices: no value columns in '" + source + "'");

    // parse the numeric block; unparseable fields become NaN
    std::vector<std::string> header;
    for (std::size_t jj = first_field; jj < width; ++jj)
        header.push_back(rows[0][jj].empty() ? "c" + std::to_string(jj - first_field) : rows[0][jj]);
    std::vector<std::string> row_labels;
    const std::size_t data_rows = rows.size() - 1;
    Eigen::MatrixXd table(data_rows, header.size());
    for (std::size_t i = 0; i < data_rows; ++i) {
        const auto& r = rows[i + 1];
        row_labels.push_back(layout.first_column_labels ? r[0] : "r" + std::to_string(i));
        for (std::size_t jj = first_field; jj < width; ++jj) {
            double v = std::numeric_limits<double>::quiet_NaN();
            const std::string& field = r[jj];
            if (!field.empty()) {
                try {
                    std::size_t consumed = 0;
                    const double parsed = std::stod(field, &consumed);
                    if (consumed == field.size()) v = parsed;
                } catch (const std::exception&) {
                }
            }
            table(i, jj - first_field) = v;
        }
    }

    // orient to assets x periods
    Eigen::MatrixXd oriented;
    std::vector<std::string> asset_names, period_names;
    if (layout.assets_in_columns) {
        oriented = table.transpose();
        asset_names = header;
        period_names = row_labels;
    } else {
        oriented = table;
        asset_names = row_labels;
        period_names = header;
    }

    // drop assets with missing or nonpositive prices
    ReturnsMatrix out;
    out.source = source;
    out.transform = "none";
    out.time_labels = period_names;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < oriented.rows(); ++i) {
        bool good = true;
        for (Eigen::Index j = 0; j < oriented.cols(); ++j)
            if (!std::isfinite(oriented(i, j)) || !(oriented(i, j) > 0.0)) good = false;
        if (good)
            keep.push_back(i);
    }
    out.dropped_rows = static_cast<int>(oriented.rows()) - static_cast<int>(keep.size());
    if (keep.empty())
        throw InputError("ingest_prices: every asset row of '" + source + "' was dropped");
    out.values.resize(static_cast<Eigen::Index>(keep.size()), oriented.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) = oriented.row(keep[i]);
        out.asset_ids.push_back(asset_names[static_cast<std::size_t>(keep[i])]);
    }
    if (out.values.cols() < 2)
        throw InputError("ingest_prices: price input needs at least 2 periods");
    return out;
}

inline ReturnsMatrix ingest_prices(const std::string& path, const CsvLayout& layout = {}) {
    std::ifstream file(path);
    if (!file) throw InputError("ingest_prices: cannot open '" + path + "'");
    return ingest_prices_stream(file, layout, path);
}

/// Log-difference transform: entry (i,j) = ln(u_{i,j+1}/u_{i,j}); one
/// fewer column than the price input.
inline ReturnsMatrix log_returns(const ReturnsMatrix& prices) {
    if (prices.values.cols() < 2) throw std::domain_error("log_returns: need at least 2 periods");
    ReturnsMatrix out;
    out.asset_ids = prices.asset_ids;
    out.source = prices.source;
    out.transform = "log_returns";
    out.dropped_rows = prices.dropped_rows;
    const Eigen::Index periods = prices.values.cols() - 1;
    out.values.resize(prices.values.rows(), periods);
    for (Eigen::Index i = 0; i < prices.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < periods; ++j) {
            const double now = prices.values(i, j);
            const double next = prices.values(i, j + 1);
            if (!(now > 0.0) || !(next > 0.0))
                throw std::domain_error("log_returns: nonpositive price at asset " +
                                        std::to_string(i) + ", period " + std::to_string(j));
            out.values(i, j) = std::log(next / now);
        }
    }
    for (std::size_t j = 1; j < prices.time_labels.size(); ++j)
        out.time_labels.push_back(prices.time_labels[j]);
    return out;
}

/// Submatrix containing the named assets, in the order given.
inline ReturnsMatrix select_assets(const ReturnsMatrix& m, const std::vector<std::string>& ids) {
    ReturnsMatrix out;
    out.time_labels = m.time_labels;
    out.source = m.source;
    out.transform = m.transform;
    out.values.resize(static_cast<Eigen::Index>(ids.size()), m.values.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto it = std::find(m.asset_ids.begin(), m.asset_ids.end(), ids[i]);
        if (it == m.asset_ids.end())
            throw std::invalid_argument("select_assets: unknown asset '" + ids[i] + "'");
        out.values.row(static_cast<Eigen::Index>(i)) =
            m.values.row(it - m.asset_ids.begin());
        out.asset_ids.push_back(ids[i]);
    }
    return out;
}

/// G cross-sector groups, one asset drawn uniformly from every sector.
/// Deterministic given the stream.
inline std::vector<std::vector<std::string>> group_sample(
    const std::map<std::string, std::vector<std::string>>& sectors, int count, RandomStream& rng) {
    if (sectors.empty()) throw std::domain_error("group_sample: no sectors");
    for (const auto& [name, assets] : sectors)
        if (assets.empty()) throw std::domain_error("group_sample: sector '" + name + "' is empty");
    if (count < 1) throw std::domain_error("group_sample: count must be positive");
    std::vector<std::vector<std::string>> groups;
    groups.reserve(count);
    for (int g = 0; g < count; ++g) {
        std::vector<std::string> group;
        group.reserve(sectors.size());
        for (const auto& [name, assets] : sectors)
            group.push_back(assets[rng.uniform_index(assets.size())]);
        groups.push_back(std::move(group));
    }
    return groups;
}

/// Sector map from a two-column CSV (asset, sector), header optional.
inline std::map<std::string, std::vector<std::string>> read_sector_map(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw InputError("read_sector_map: cannot open '" + path + "'");
    std::map<std::string, std::vector<std::string>> sectors;
    std::string line;
    bool first = true;
    while (std::getline(file, line)) {
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() < 2) throw InputError("read_sector_map: need 'asset,sector' rows");
        if (first && (fields[0] == "asset" || fields[1] == "sector")) {
            first = false;
            continue;
        }
        first = false;
        sectors[fields[1]].push_back(fields[0]);
    }
    if (sectors.empty()) throw InputError("read_sector_map: no entries in '" + path + "'");
    return sectors;
}

/// Writes the matrix back in the ingestion layout (assets in columns).
inline void write_returns_csv(std::ostream& os, const ReturnsMatrix& m) {
    os << "date";
    for (const auto& id : m.asset_ids) os << "," << id;
    os << "\n";
    os.precision(17);
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
        if (static_cast<std::size_t>(j) < m.time_labels.size())
            os << m.time_labels[static_cast<std::size_t>(j)];
        else
            os << "t" << j;
        for (Eigen::Index i = 0; i < m.values.rows(); ++i) os << "," << m.values(i, j);
        os << "\n";
    }
}

}  // namespace ellspec
