#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ihope/experiments.hpp"
#include "ihope/labels.hpp"

namespace ihope {

/// Rows x columns grid of importances; columns are user ids in sorted order.
struct ImportanceTable {
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // values[row][column]

    /// Mean of each row across columns.
    [[nodiscard]] std::vector<double> row_means() const;
    void write_csv(std::ostream &out) const;
    [[nodiscard]] std::string to_json_text() const;
};

struct UserLabelModelRef {
    std::string user_id;
    const UserLabelModel *model = nullptr;
};

/// Per-user label-forest importances of one label's features. Throws EmptyData.
ImportanceTable export_importance_heatmap(std::span<const UserLabelModelRef> users, InteractionLabel label);

struct UserScoreImportance {
    std::string user_id;
    std::vector<double> importances;  // one per label, in label order
};

/// 5 x n_users table of label-score importances. Throws EmptyData or ArityMismatch.
ImportanceTable export_label_importance(std::span<const UserScoreImportance> users);

/// Both exports built from the best fold of an ihope run. Throw EmptyData
/// when the run carries no label models.
ImportanceTable importance_heatmap_of(const PipelineResult &result, InteractionLabel label);
ImportanceTable label_importance_of(const PipelineResult &result);

struct ThresholdHistogram {
    std::string feature;
    double threshold = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;

    [[nodiscard]] double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
};

/// Equal-width histogram over [min, max] of every thresholded feature, in
/// schema order. The maximum falls in the last bin.
std::vector<ThresholdHistogram> export_thresholds(const ThresholdTable &thresholds,
                                                  std::span<const std::vector<double>> rows,
                                                  std::span<const std::string> names, std::size_t bins = 30);
/// feature,bin,lo,hi,count,threshold
void write_histograms_csv(std::ostream &out, std::span<const ThresholdHistogram> histograms);

}  // namespace ihope
