#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ihope {

enum class ForestMode { Classification, Regression };

struct FeaturesPerSplit {
    enum class Kind { Sqrt, All, Count };
    Kind kind = Kind::Sqrt;
    std::size_t count = 0;  // used when kind == Count

    /// Number of candidate features drawn per node out of p, at least 1.
    [[nodiscard]] std::size_t resolve(std::size_t p) const;

    static FeaturesPerSplit sqrt() { return {Kind::Sqrt, 0}; }
    static FeaturesPerSplit all() { return {Kind::All, 0}; }
    static FeaturesPerSplit fixed(std::size_t n) { return {Kind::Count, n}; }
};

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 10;
    std::size_t min_samples_split = 2;
    FeaturesPerSplit features_per_split = FeaturesPerSplit::sqrt();
    ForestMode mode = ForestMode::Classification;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig.
    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    /// Leaf payload: class counts (classification) or {mean} (regression).
    std::vector<double> value;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    [[nodiscard]] const TreeNode &leaf_for(std::span<const double> x) const;
    [[nodiscard]] std::size_t depth() const;
};

struct ForestModel {
    ForestConfig config;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;  // 0 in regression mode
    std::vector<DecisionTree> trees;
    /// Non-negative, sums to 1. Uniform when `degenerate` is set.
    std::vector<double> importances;
    /// Set when the target was constant or no tree found a useful split.
    bool degenerate = false;
    std::string training_digest;
};

/// Bootstrap CART forest. Classification targets are class ids 0..K-1 stored
/// as doubles. Throws EmptyData, LengthMismatch, ArityMismatch, InvalidConfig.
ForestModel fit_forest(std::span<const std::vector<double>> X, std::span<const double> y, const ForestConfig &config);

/// Majority vote over trees (ties to the lowest class) or mean of tree
/// outputs, returned as a double in both modes. Throws ArityMismatch.
double predict(const ForestModel &model, std::span<const double> x);
int predict_class(const ForestModel &model, std::span<const double> x);

inline const std::vector<double> &importances(const ForestModel &model) { return model.importances; }

std::string forest_to_json_text(const ForestModel &model);
ForestModel forest_from_json_text(std::string_view text);

}  // namespace ihope
