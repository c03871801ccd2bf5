#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihope/dataset.hpp"
#include "ihope/features.hpp"
#include "ihope/forest.hpp"

namespace ihope {

enum class InteractionLabel : int { Leisure = 0, MeTime = 1, PhoneTime = 2, Sleep = 3, SocialTime = 4 };

inline constexpr std::size_t kNumLabels = 5;
inline constexpr std::array<InteractionLabel, kNumLabels> kAllLabels{
    InteractionLabel::Leisure, InteractionLabel::MeTime, InteractionLabel::PhoneTime, InteractionLabel::Sleep,
    InteractionLabel::SocialTime};

std::string_view to_string(InteractionLabel label) noexcept;
/// Accepts the names produced by to_string. Throws InvalidConfig.
InteractionLabel label_from_string(std::string_view name);
constexpr std::size_t index_of(InteractionLabel label) noexcept { return static_cast<std::size_t>(label); }

/// Whether a feature counts toward its label when strictly above or strictly
/// below its threshold.
enum class Direction { Above, Below };

struct LabelFeature {
    std::string feature;
    Direction direction = Direction::Above;
};

/// Features assigned to each interaction label. A feature may belong to
/// several labels, each with its own direction.
struct LabelMap {
    std::array<std::vector<LabelFeature>, kNumLabels> features;

    [[nodiscard]] const std::vector<LabelFeature> &operator[](InteractionLabel label) const {
        return features[index_of(label)];
    }
    [[nodiscard]] std::vector<LabelFeature> &operator[](InteractionLabel label) { return features[index_of(label)]; }

    /// Every label non-empty, no feature twice within one label.
    void validate() const;
};

LabelMap load_label_map(const std::filesystem::path &path);
LabelMap label_map_from_json_text(std::string_view text);
std::string label_map_to_json_text(const LabelMap &map);

/// A LabelMap resolved to column indices of one engineered schema.
class BoundLabelMap {
public:
    struct Entry {
        std::string feature;
        std::size_t index = 0;
        Direction direction = Direction::Above;
    };

    BoundLabelMap() = default;
    /// Throws UnknownFeature for unmapped names. With require_coverage, also
    /// throws InvalidConfig when a schema feature belongs to no label.
    BoundLabelMap(const LabelMap &map, const FeatureSchema &schema, bool require_coverage = false);

    [[nodiscard]] const std::vector<Entry> &entries(InteractionLabel label) const { return entries_[index_of(label)]; }
    [[nodiscard]] std::vector<std::size_t> indices(InteractionLabel label) const;
    [[nodiscard]] std::vector<std::string> names(InteractionLabel label) const;
    [[nodiscard]] const FeatureSchema &schema() const noexcept { return schema_; }

private:
    FeatureSchema schema_;
    std::array<std::vector<Entry>, kNumLabels> entries_;
};

/// Population mean per mapped feature.
class ThresholdTable {
public:
    void set(std::string feature, double mean) { means_[std::move(feature)] = mean; }
    [[nodiscard]] bool contains(std::string_view feature) const { return means_.find(std::string(feature)) != means_.end(); }
    /// Throws MissingThreshold.
    [[nodiscard]] double at(std::string_view feature) const;
    [[nodiscard]] const std::map<std::string, double> &means() const noexcept { return means_; }

private:
    std::map<std::string, double> means_;
};

/// Means over every training row (pooled across users) of each feature that
/// appears in at least one label. Rows are unscaled engineered vectors.
ThresholdTable compute_thresholds(std::span<const std::vector<double>> train_rows, const BoundLabelMap &map);

/// Strict comparison; equality never passes.
constexpr bool passes(double value, double threshold, Direction direction) noexcept {
    return direction == Direction::Above ? value > threshold : value < threshold;
}

/// Per-entry pass flags of one label, in LabelMap order. Throws MissingThreshold.
std::vector<bool> passing_features(std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map,
                                   const ThresholdTable &thresholds);

/// Count of the label's features on their favorable side of the threshold.
int init_score(std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map,
               const ThresholdTable &thresholds);

/// Regression forest from the label's features to its initial scores. A
/// constant target yields uniform importances with `degenerate` set.
ForestModel fit_label_forest(std::span<const std::vector<double>> label_rows, std::span<const int> init_scores,
                             ForestConfig config);

/// Impact weight of one feature: importance times the normalized value
/// clamped to [0, 1].
double nwfi(double importance, double normalized_value) noexcept;

/// Impact weights for one record and label, aligned with the label's entries.
/// `scaler` spans the full engineered schema.
std::vector<double> compute_nwfi(std::span<const double> importances, const MinMaxScaler &scaler,
                                 std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map);

/// Sum of impact weights over the features that pass their threshold test.
double final_score(std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map,
                   const ThresholdTable &thresholds, std::span<const double> nwfi_weights);

struct LabelScores {
    std::array<double, kNumLabels> values{};

    [[nodiscard]] double operator[](InteractionLabel label) const { return values[index_of(label)]; }
    double &operator[](InteractionLabel label) { return values[index_of(label)]; }
    [[nodiscard]] std::vector<double> as_vector() const { return {values.begin(), values.end()}; }
};

/// Everything needed to score records for one user.
struct LabelScorer {
    BoundLabelMap map;
    ThresholdTable thresholds;
    std::array<std::vector<double>, kNumLabels> importances;  // aligned with map entries
    MinMaxScaler scaler;  // fitted on the user's training rows
};

/// final_score for every label, in Leisure, MeTime, PhoneTime, Sleep, SocialTime order.
LabelScores score_all(std::span<const double> vector, const LabelScorer &scorer);

struct UserLabelModel {
    std::array<ForestModel, kNumLabels> forests;
    std::array<bool, kNumLabels> degenerate{};
    LabelScorer scorer;
};

/// Fits the per-label forests and scaler for one user from unscaled
/// engineered training rows, against population thresholds.
UserLabelModel fit_user_label_model(std::span<const std::vector<double>> train_rows, const BoundLabelMap &map,
                                    const ThresholdTable &thresholds, const ForestConfig &forest_config,
                                    std::uint64_t seed);

}  // namespace ihope
