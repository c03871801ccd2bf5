#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihope/dataset.hpp"
#include "ihope/forest.hpp"

namespace ihope {

/// (sum of numerator columns) / (sum of denominator columns). A zero
/// denominator yields zero_denominator_value.
struct RatioFeatureSpec {
    std::string name;
    std::vector<std::string> numerator_features;
    std::vector<std::string> denominator_features;
    double zero_denominator_value = 0.0;
};

/// Raw-to-engineered transformation: ratio features first, then the
/// passthrough columns, in listed order.
struct FeatureConfig {
    std::string schema_id;
    std::vector<RatioFeatureSpec> ratios;
    std::vector<std::string> passthrough;

    [[nodiscard]] std::vector<std::string> output_names() const;
    /// Checks non-empty, disjoint ratio operands and unique output names.
    void validate() const;
};

FeatureConfig load_feature_config(const std::filesystem::path &path);
FeatureConfig feature_config_from_json_text(std::string_view text);
std::string feature_config_to_json_text(const FeatureConfig &config);

/// Names of an engineered feature space, bound to an identifier.
struct FeatureSchema {
    std::string id;
    std::vector<std::string> names;

    [[nodiscard]] std::size_t size() const noexcept { return names.size(); }
    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
    /// Throws UnknownFeature.
    [[nodiscard]] std::size_t index_of(std::string_view name) const;
};

struct FeatureVector {
    std::vector<double> values;
    std::string schema_id;
};

/// A FeatureConfig resolved against a raw schema, reusable across records.
class FeatureEngineer {
public:
    /// Throws UnknownFeature when the config references a column the raw schema lacks.
    FeatureEngineer(const FeatureConfig &config, const RawSchema &raw_schema);

    [[nodiscard]] const FeatureSchema &schema() const noexcept { return schema_; }
    /// The record must be free of missing cells.
    [[nodiscard]] FeatureVector operator()(const DailyRecord &record) const;
    [[nodiscard]] std::vector<FeatureVector> operator()(std::span<const DailyRecord> records) const;

private:
    struct BoundRatio {
        std::vector<std::size_t> numerator;
        std::vector<std::size_t> denominator;
        double zero_value;
    };
    FeatureSchema schema_;
    std::size_t raw_width_ = 0;
    std::vector<BoundRatio> ratios_;
    std::vector<std::size_t> passthrough_;
};

FeatureVector engineer_features(const DailyRecord &record, const RawSchema &raw_schema, const FeatureConfig &config);

std::vector<std::vector<double>> values_of(std::span<const FeatureVector> vectors);

/// Sample Pearson correlation. Throws LengthMismatch, TooFewRecords (< 2
/// points) or DegenerateInput (a constant series).
double pearson(std::span<const double> x, std::span<const double> y);

/// Symmetric feature-by-feature Pearson matrix. Constant features get a zero
/// row and column with 1 on the diagonal.
std::vector<std::vector<double>> correlation_matrix(std::span<const std::vector<double>> rows);
std::vector<std::vector<double>> correlation_matrix(std::span<const FeatureVector> vectors);

/// CSV with a header row and a leading name column.
void write_matrix_csv(std::ostream &out, std::span<const std::string> names, const std::vector<std::vector<double>> &matrix);

struct RankedFeature {
    std::string name;
    std::size_t index = 0;
    double importance = 0.0;
};

/// Classification-forest importances, descending; ties by feature index.
std::vector<RankedFeature> rank_global_importance(std::span<const std::vector<double>> rows,
                                                  std::span<const Phq4Category> labels, std::span<const std::string> names,
                                                  ForestConfig config);

/// The first ceil(fraction * p) names of a ranking.
std::vector<std::string> select_top_fraction(std::span<const RankedFeature> ranking, double fraction);

}  // namespace ihope
