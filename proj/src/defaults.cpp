#include "ihope/defaults.hpp"

#include <array>
#include <string>

namespace ihope {

namespace {

constexpr std::array<const char *, 6> kUnlockContexts{"home", "own_dorm", "study", "others_dorm", "social", "overall"};

}  // namespace

RawSchema default_raw_schema() {
    std::vector<RawFeature> f;
    for (const char *ctx : kUnlockContexts) {
        f.push_back({std::string("unlock_num_") + ctx, "count"});
        f.push_back({std::string("unlock_dur_") + ctx, "hours"});
    }
    f.push_back({"call_in_num", "count"});
    f.push_back({"call_out_num", "count"});
    f.push_back({"call_in_dur", "hours"});
    f.push_back({"call_out_dur", "hours"});
    for (const char *name : {"act_biking", "act_walking", "act_running", "act_still"}) f.push_back({name, "hours"});
    f.push_back({"footsteps", "count"});
    for (const char *name : {"loc_home", "loc_own_dorm", "loc_others_dorm", "loc_study", "loc_social", "loc_leisure",
                             "loc_workout", "loc_food"}) {
        f.push_back({name, "hours"});
    }
    for (const char *name : {"conv_total", "conv_home", "conv_own_dorm", "conv_others_dorm", "conv_social", "conv_study"}) {
        f.push_back({name, "hours"});
    }
    for (const char *name : {"voice_home", "voice_own_dorm", "voice_others_dorm", "voice_study", "voice_social", "voice_total"}) {
        f.push_back({name, "hours"});
    }
    f.push_back({"sleep_duration", "hours"});
    f.push_back({"phone_night", "hours"});
    f.push_back({"sms_count", "count"});
    f.push_back({"health_fitness", "hours"});
    return RawSchema(std::move(f));
}

FeatureConfig default_feature_config() {
    FeatureConfig config;
    config.schema_id = "ihope-default-35";
    for (const char *ctx : kUnlockContexts) {
        config.ratios.push_back({std::string("unlock_ratio_") + ctx,
                                 {std::string("unlock_num_") + ctx},
                                 {std::string("unlock_dur_") + ctx},
                                 0.0});
    }
    config.ratios.push_back({"call_ratio", {"call_in_num", "call_out_num"}, {"call_in_dur", "call_out_dur"}, 0.0});
    // voice_total is left out: it duplicates the per-location voice columns.
    config.passthrough = {"act_biking",      "act_walking",    "act_running",  "act_still",        "footsteps",
                          "loc_home",        "loc_own_dorm",   "loc_others_dorm", "loc_study",     "loc_social",
                          "loc_leisure",     "loc_workout",    "loc_food",     "conv_total",       "conv_home",
                          "conv_own_dorm",   "conv_others_dorm", "conv_social", "conv_study",      "voice_home",
                          "voice_own_dorm",  "voice_others_dorm", "voice_study", "voice_social",   "sleep_duration",
                          "phone_night",     "sms_count",      "health_fitness"};
    return config;
}

LabelMap default_label_map() {
    constexpr auto up = Direction::Above;
    constexpr auto down = Direction::Below;
    LabelMap map;
    map[InteractionLabel::Leisure] = {
        {"act_biking", up},       {"act_walking", down},     {"act_running", up},       {"footsteps", up},
        {"conv_total", up},       {"call_ratio", up},        {"voice_others_dorm", up}, {"conv_others_dorm", up},
        {"conv_social", up},      {"loc_leisure", up},       {"loc_workout", up},       {"unlock_ratio_home", up},
        {"unlock_ratio_others_dorm", up}, {"health_fitness", up},
    };
    map[InteractionLabel::MeTime] = {
        {"act_biking", up},     {"footsteps", up},      {"act_running", up},     {"act_walking", up},
        {"act_still", up},      {"loc_study", up},      {"loc_home", up},        {"conv_home", up},
        {"voice_own_dorm", up}, {"conv_own_dorm", up},  {"loc_own_dorm", up},    {"loc_workout", up},
        {"unlock_ratio_own_dorm", up}, {"unlock_ratio_study", up},
    };
    map[InteractionLabel::PhoneTime] = {
        {"conv_total", up},          {"sms_count", up},          {"voice_home", up},
        {"voice_social", up},        {"voice_own_dorm", up},     {"conv_home", up},
        {"unlock_ratio_home", up},   {"unlock_ratio_others_dorm", up}, {"unlock_ratio_own_dorm", up},
        {"unlock_ratio_social", up}, {"unlock_ratio_study", up}, {"unlock_ratio_overall", up},
        {"call_ratio", up},          {"phone_night", up},
    };
    map[InteractionLabel::Sleep] = {
        {"sleep_duration", up},
        {"loc_own_dorm", up},
        {"act_still", up},
        {"conv_home", down},
    };
    map[InteractionLabel::SocialTime] = {
        {"footsteps", up},     {"act_walking", up},      {"act_biking", up},        {"act_running", up},
        {"loc_workout", up},   {"loc_study", up},        {"loc_food", up},          {"voice_study", up},
        {"conv_study", up},    {"loc_others_dorm", up},  {"conv_others_dorm", up},  {"conv_social", up},
        {"loc_leisure", up},   {"loc_social", up},       {"unlock_ratio_others_dorm", up}, {"call_ratio", up},
    };
    return map;
}

}  // namespace ihope
