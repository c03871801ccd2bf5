#include "ihope/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ihope/error.hpp"
#include "json.hpp"

namespace ihope {

std::vector<std::string> FeatureConfig::output_names() const {
    std::vector<std::string> names;
    names.reserve(ratios.size() + passthrough.size());
    for (const auto &r : ratios) names.push_back(r.name);
    names.insert(names.end(), passthrough.begin(), passthrough.end());
    return names;
}

void FeatureConfig::validate() const {
    for (const auto &r : ratios) {
        if (r.numerator_features.empty() || r.denominator_features.empty()) {
            throw Error(ErrorCode::InvalidConfig, fmt::format("ratio '{}' needs numerator and denominator features", r.name));
        }
        for (const auto &n : r.numerator_features) {
            if (std::find(r.denominator_features.begin(), r.denominator_features.end(), n) != r.denominator_features.end()) {
                throw Error(ErrorCode::InvalidConfig, fmt::format("ratio '{}' uses '{}' on both sides", r.name, n));
            }
        }
        if (!std::isfinite(r.zero_denominator_value)) {
            throw Error(ErrorCode::InvalidConfig, fmt::format("ratio '{}' has a non-finite zero value", r.name));
        }
    }
    std::set<std::string> seen;
    for (const auto &name : output_names()) {
        if (!seen.insert(name).second) throw Error(ErrorCode::InvalidConfig, fmt::format("duplicate output feature '{}'", name));
    }
}

FeatureConfig feature_config_from_json_text(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        FeatureConfig config;
        config.schema_id = doc.value("schema_id", std::string{"custom"});
        for (const auto &r : doc.at("ratios")) {
            RatioFeatureSpec spec;
            spec.name = r.at("name").get<std::string>();
            spec.numerator_features = r.at("numerator").get<std::vector<std::string>>();
            spec.denominator_features = r.at("denominator").get<std::vector<std::string>>();
            spec.zero_denominator_value = r.value("zero_denominator_value", 0.0);
            config.ratios.push_back(std::move(spec));
        }
        config.passthrough = doc.at("passthrough").get<std::vector<std::string>>();
        config.validate();
        return config;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ParseError, fmt::format("feature config: {}", e.what()));
    }
}

FeatureConfig load_feature_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open feature config {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return feature_config_from_json_text(buffer.str());
}

std::string feature_config_to_json_text(const FeatureConfig &config) {
    nlohmann::ordered_json ratios = nlohmann::ordered_json::array();
    for (const auto &r : config.ratios) {
        ratios.push_back({{"name", r.name},
                          {"numerator", r.numerator_features},
                          {"denominator", r.denominator_features},
                          {"zero_denominator_value", r.zero_denominator_value}});
    }
    nlohmann::ordered_json doc = {{"schema_id", config.schema_id}, {"ratios", ratios}, {"passthrough", config.passthrough}};
    return doc.dump(2) + "\n";
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw Error(ErrorCode::UnknownFeature, fmt::format("feature '{}' not in schema '{}'", name, id));
}

FeatureEngineer::FeatureEngineer(const FeatureConfig &config, const RawSchema &raw_schema) : raw_width_(raw_schema.size()) {
    config.validate();
    schema_.id = config.schema_id;
    schema_.names = config.output_names();
    for (const auto &r : config.ratios) {
        BoundRatio bound{{}, {}, r.zero_denominator_value};
        for (const auto &n : r.numerator_features) bound.numerator.push_back(raw_schema.index_of(n));
        for (const auto &d : r.denominator_features) bound.denominator.push_back(raw_schema.index_of(d));
        ratios_.push_back(std::move(bound));
    }
    for (const auto &name : config.passthrough) passthrough_.push_back(raw_schema.index_of(name));
}

FeatureVector FeatureEngineer::operator()(const DailyRecord &record) const {
    if (record.raw.size() != raw_width_) {
        throw Error(ErrorCode::ArityMismatch, fmt::format("record has {} raw values, schema has {}", record.raw.size(), raw_width_));
    }
    FeatureVector out;
    out.schema_id = schema_.id;
    out.values.reserve(schema_.size());
    for (const auto &r : ratios_) {
        double num = 0.0, den = 0.0;
        for (std::size_t i : r.numerator) num += record.raw[i];
        for (std::size_t i : r.denominator) den += record.raw[i];
        out.values.push_back(den == 0.0 ? r.zero_value : num / den);
    }
    for (std::size_t i : passthrough_) out.values.push_back(record.raw[i]);
    for (double v : out.values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFiniteInput,
                        fmt::format("record ({}, {}) has missing or non-finite inputs; run fill_missing first", record.user_id,
                                    format_date(record.date)));
        }
    }
    return out;
}

std::vector<FeatureVector> FeatureEngineer::operator()(std::span<const DailyRecord> records) const {
    std::vector<FeatureVector> out;
    out.reserve(records.size());
    for (const auto &r : records) out.push_back((*this)(r));
    return out;
}

FeatureVector engineer_features(const DailyRecord &record, const RawSchema &raw_schema, const FeatureConfig &config) {
    return FeatureEngineer(config, raw_schema)(record);
}

std::vector<std::vector<double>> values_of(std::span<const FeatureVector> vectors) {
    std::vector<std::vector<double>> rows;
    rows.reserve(vectors.size());
    for (const auto &v : vectors) rows.push_back(v.values);
    return rows;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "pearson: series lengths differ");
    if (x.size() < 2) throw Error(ErrorCode::TooFewRecords, "pearson: need at least two points");
    // Two passes over mean-centered values; symmetric in x and y.
    const double n = static_cast<double>(x.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;
    double m2x = 0.0, m2y = 0.0, cxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        m2x += dx * dx;
        m2y += dy * dy;
        cxy += dx * dy;
    }
    if (!(m2x > 0.0) || !(m2y > 0.0)) throw Error(ErrorCode::DegenerateInput, "pearson: constant series");
    const double r = cxy / (std::sqrt(m2x) * std::sqrt(m2y));
    return std::clamp(r, -1.0, 1.0);
}

std::vector<std::vector<double>> correlation_matrix(std::span<const std::vector<double>> rows) {
    if (rows.size() < 2) throw Error(ErrorCode::TooFewRecords, "correlation matrix needs at least two vectors");
    const std::size_t p = rows.front().size();
    std::vector<std::vector<double>> columns(p, std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != p) throw Error(ErrorCode::ArityMismatch, "vectors of unequal width");
        for (std::size_t j = 0; j < p; ++j) columns[j][i] = rows[i][j];
    }
    std::vector<bool> constant(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto &c = columns[j];
        constant[j] = std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); });
    }
    std::vector<std::vector<double>> out(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        out[i][i] = 1.0;
        if (constant[i]) continue;
        for (std::size_t j = i + 1; j < p; ++j) {
            if (constant[j]) continue;
            out[i][j] = out[j][i] = pearson(columns[i], columns[j]);
        }
    }
    return out;
}

std::vector<std::vector<double>> correlation_matrix(std::span<const FeatureVector> vectors) {
    return correlation_matrix(values_of(vectors));
}

void write_matrix_csv(std::ostream &out, std::span<const std::string> names, const std::vector<std::vector<double>> &matrix) {
    out << "feature";
    for (const auto &n : names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << names[i];
        for (double v : matrix[i]) out << ',' << fmt::format("{}", v);
        out << '\n';
    }
}

std::vector<RankedFeature> rank_global_importance(std::span<const std::vector<double>> rows,
                                                  std::span<const Phq4Category> labels, std::span<const std::string> names,
                                                  ForestConfig config) {
    if (rows.empty()) throw Error(ErrorCode::EmptyData, "importance ranking on an empty dataset");
    if (rows.front().size() != names.size()) throw Error(ErrorCode::ArityMismatch, "feature names do not match row width");
    std::vector<double> y;
    y.reserve(labels.size());
    for (auto c : labels) y.push_back(static_cast<double>(index_of(c)));
    config.mode = ForestMode::Classification;
    const auto model = fit_forest(rows, y, config);
    std::vector<RankedFeature> ranking;
    for (std::size_t i = 0; i < names.size(); ++i) ranking.push_back({names[i], i, model.importances[i]});
    std::stable_sort(ranking.begin(), ranking.end(), [](const auto &a, const auto &b) { return a.importance > b.importance; });
    return ranking;
}

std::vector<std::string> select_top_fraction(std::span<const RankedFeature> ranking, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidConfig, "fraction must lie in (0, 1]");
    const auto p = static_cast<double>(ranking.size());
    // Guard against 0.5 * 46 = 23.000000000000004 style round-up.
    const auto keep = std::min(ranking.size(), static_cast<std::size_t>(std::ceil(fraction * p - 1e-9)));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < keep; ++i) out.push_back(ranking[i].name);
    return out;
}

}  // namespace ihope
