#pragma once

#include "ihope/dataset.hpp"
#include "ihope/features.hpp"
#include "ihope/labels.hpp"

namespace ihope {

/// The 45 screened daily behavioral columns (durations in hours, counts
/// dimensionless).
RawSchema default_raw_schema();

/// Six context unlock ratios, the consolidated call ratio and 28 passthrough
/// columns: 35 engineered features.
FeatureConfig default_feature_config();

/// Label-to-feature assignment with per-(label, feature) directions.
LabelMap default_label_map();

}  // namespace ihope
