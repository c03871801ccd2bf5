#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihope/dataset.hpp"
#include "ihope/defaults.hpp"
#include "ihope/features.hpp"
#include "ihope/forest.hpp"
#include "ihope/labels.hpp"
#include "ihope/metrics.hpp"
#include "ihope/mlp.hpp"

namespace ihope {

enum class PipelineKind { Baseline1, Baseline2, Baseline3, IHope, Custom };
enum class FeaturePolicy { AllRaw, TopFraction, Engineered, LabelScores, Explicit };
enum class Personalization { Aggregated, PerUser };

std::string_view to_string(PipelineKind kind) noexcept;
std::string_view to_string(FeaturePolicy policy) noexcept;
std::string_view to_string(Personalization p) noexcept;
/// "baseline1" .. "baseline3", "ihope", "custom". Throws InvalidConfig.
PipelineKind pipeline_kind_from_string(std::string_view name);

struct CvScheme {
    enum class Kind { Holdout, KFold };
    Kind kind = Kind::KFold;
    double test_fraction = 0.2;  // holdout
    std::size_t folds = 5;  // kfold
    [[nodiscard]] std::size_t n_folds() const noexcept { return kind == Kind::KFold ? folds : 1; }
};

struct PipelineSpec {
    PipelineKind kind = PipelineKind::IHope;
    FeaturePolicy feature_policy = FeaturePolicy::LabelScores;
    Personalization personalization = Personalization::PerUser;
    CvScheme cv;
    double top_fraction = 0.5;
    /// Explicit policy only: engineered names, falling back to raw column names.
    std::vector<std::string> features;
    std::uint64_t seed = 42;

    /// baseline1: aggregated, all raw. baseline2: per user, all raw.
    /// baseline3: per user, top half of raw by importance. ihope: per user,
    /// label scores. custom: aggregated explicit list (fill `features`).
    static PipelineSpec preset(PipelineKind kind, std::uint64_t seed = 42);
    /// Throws InvalidConfig when a preset kind is combined with other settings.
    void validate() const;
};

struct PipelineOptions {
    FeatureConfig feature_config = default_feature_config();
    LabelMap label_map = default_label_map();
    MlpConfig mlp;  // input_dim and seed are set per unit
    ForestConfig label_forest;  // mode forced to regression
    ForestConfig ranking_forest;
    ForestConfig attribution_forest;
    std::size_t jobs = 1;
};

/// Models of one training unit (the pooled population or one user).
struct UnitArtifacts {
    std::string unit_id;
    MlpModel mlp;
    MinMaxScaler input_scaler;
    std::optional<UserLabelModel> label_model;
    /// Label-score importances of a classification forest on (scores, category).
    std::vector<double> label_importance;
};

struct PipelineResult {
    PipelineSpec spec;
    std::vector<std::string> input_features;
    /// Test predictions of the best fold.
    EvaluationReport report;
    std::vector<double> fold_accuracies;
    std::size_t best_fold = 0;
    std::optional<ThresholdTable> thresholds;
    std::vector<UnitArtifacts> artifacts;  // best fold

    [[nodiscard]] double mean_fold_accuracy() const;
};

/// Datasets must be gap-free (post fill_missing) and fully labeled. Folds run
/// in order; units within a fold run on up to options.jobs threads.
PipelineResult run_pipeline(std::span<const UserDataset> datasets, const RawSchema &raw_schema, const PipelineSpec &spec,
                            const PipelineOptions &options = {});

/// Aggregated MLP on exactly two named features with an 80/20 holdout.
PipelineResult motivation_probe(std::span<const UserDataset> datasets, const RawSchema &raw_schema,
                                const std::vector<std::string> &features, const PipelineOptions &options = {},
                                std::uint64_t seed = 42);

std::string report_to_json_text(const PipelineResult &result);
/// Long format: section,key,class,value.
void write_report_csv(std::ostream &out, const PipelineResult &result);

}  // namespace ihope
