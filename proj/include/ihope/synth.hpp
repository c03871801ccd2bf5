#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ihope/dataset.hpp"
#include "ihope/labels.hpp"

namespace ihope {

struct SynthConfig {
    std::size_t n_users = 20;
    std::size_t records_per_user = 200;
    double signal_strength = 0.9;
    double heterogeneity = 0.5;
    double label_noise = 0.1;
    double missing_rate = 0.0;
    std::uint64_t seed = 42;
    /// A PHQ-4 score is attached every this many days.
    std::size_t label_every_days = 1;
    std::string start_date = "2019-09-02";

    /// Throws InvalidConfig.
    void validate() const;
};

/// How one synthetic user's behavior is wired. Feature names refer to the
/// default engineered schema.
struct Persona {
    std::string user_id;
    /// One distinct feature per label that follows that label's daily latent.
    std::array<std::string, kNumLabels> anchors;
    /// Labels whose latents set PHQ-4, with weights 2 and 1.
    std::array<InteractionLabel, 2> drivers{InteractionLabel::Sleep, InteractionLabel::PhoneTime};
    /// +1 when a positive latent of the driver means a healthier category,
    /// -1 when the relation is reversed for this user.
    std::array<int, 2> polarity{1, 1};
    /// Every feature following each label's latent: the anchor plus extras.
    std::array<std::vector<std::string>, kNumLabels> active;
    /// Active features of the two driving labels.
    std::vector<std::string> phq_drivers;
    /// Active features (of any label) that sit in each label's feature list.
    std::array<std::vector<std::string>, kNumLabels> label_drivers;
    /// Shared baseline pattern of the inactive features.
    std::size_t archetype = 0;
    /// Constant offset sign (+1 / -1) of every inactive feature.
    std::map<std::string, int> offsets;
};

struct GroundTruth {
    SynthConfig config;
    std::vector<Persona> personas;
    std::map<std::string, double> centers;  // engineered feature -> typical value
    std::map<std::string, double> spreads;
};

/// Deterministic in the config (seed included).
GroundTruth ground_truth(const SynthConfig &config);
std::string ground_truth_to_json_text(const GroundTruth &truth);

/// Users sorted by id, records by date; raw columns follow default_raw_schema().
std::vector<UserDataset> generate(const SynthConfig &config);
std::vector<DailyRecord> generate_records(const SynthConfig &config);

/// Typical value of a raw column of default_raw_schema(). Throws UnknownFeature.
double raw_center(std::string_view raw_feature);

}  // namespace ihope
