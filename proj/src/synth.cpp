#include "ihope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "json.hpp"

#include "ihope/defaults.hpp"
#include "ihope/error.hpp"
#include "ihope/features.hpp"
#include "ihope/random.hpp"

namespace ihope {

namespace {

struct RawCenter {
    const char *name;
    double center;
};

constexpr RawCenter kRawCenters[] = {
    {"unlock_num_home", 15.0},        {"unlock_dur_home", 1.0},        {"unlock_num_own_dorm", 25.0},
    {"unlock_dur_own_dorm", 1.8},     {"unlock_num_study", 12.0},      {"unlock_dur_study", 0.8},
    {"unlock_num_others_dorm", 5.0},  {"unlock_dur_others_dorm", 0.4}, {"unlock_num_social", 8.0},
    {"unlock_dur_social", 0.6},       {"unlock_num_overall", 70.0},    {"unlock_dur_overall", 5.0},
    {"call_in_num", 2.0},             {"call_out_num", 2.0},           {"call_in_dur", 0.15},
    {"call_out_dur", 0.15},           {"act_biking", 0.3},             {"act_walking", 3.0},
    {"act_running", 0.4},             {"act_still", 7.5},              {"footsteps", 6000.0},
    {"loc_home", 2.0},                {"loc_own_dorm", 12.9},          {"loc_others_dorm", 1.0},
    {"loc_study", 3.0},               {"loc_social", 1.5},             {"loc_leisure", 1.0},
    {"loc_workout", 0.7},             {"loc_food", 1.2},               {"conv_total", 2.5},
    {"conv_home", 0.1},               {"conv_own_dorm", 0.8},          {"conv_others_dorm", 0.4},
    {"conv_social", 0.6},             {"conv_study", 0.5},             {"voice_home", 0.3},
    {"voice_own_dorm", 0.6},          {"voice_others_dorm", 0.25},     {"voice_study", 0.4},
    {"voice_social", 0.5},            {"voice_total", 2.05},           {"sleep_duration", 7.0},
    {"phone_night", 0.7},             {"sms_count", 20.0},             {"health_fitness", 0.5},
};

constexpr double kSpreadFraction = 0.25;
// Daily deviations, in spreads, are sign * (kMinSwing + kSwingScale * |N(0, 1)|)
// for active and inactive features alike.
constexpr double kMinSwing = 0.5;
constexpr double kSwingScale = 0.5;
constexpr double kOperandNoise = 0.15;
constexpr std::size_t kArchetypes = 4;

// Default wiring used when a persona is not perturbed.
const std::array<const char *, kNumLabels> kDefaultAnchors{"act_walking", "conv_own_dorm", "unlock_ratio_own_dorm",
                                                           "sleep_duration", "loc_study"};

std::array<int, 2> category_bits(int category) {
    const int v = 3 - category;
    return {(v >> 1) & 1, v & 1};
}

Direction direction_in(const LabelMap &map, InteractionLabel label, const std::string &feature) {
    for (const auto &lf : map[label]) {
        if (lf.feature == feature) return lf.direction;
    }
    return Direction::Above;
}

std::pair<int, int> category_range(int category) {
    switch (category) {
        case 0: return {0, 3};
        case 1: return {4, 6};
        case 2: return {7, 9};
        default: return {10, 12};
    }
}

}  // namespace

void SynthConfig::validate() const {
    auto rate = [](double v, const char *name) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidConfig, fmt::format("{} must be in [0, 1], got {}", name, v));
    };
    rate(signal_strength, "signal_strength");
    rate(heterogeneity, "heterogeneity");
    rate(label_noise, "label_noise");
    rate(missing_rate, "missing_rate");
    if (n_users < 1) throw Error(ErrorCode::InvalidConfig, "n_users must be >= 1");
    if (records_per_user < 1) throw Error(ErrorCode::InvalidConfig, "records_per_user must be >= 1");
    if (label_every_days < 1) throw Error(ErrorCode::InvalidConfig, "label_every_days must be >= 1");
    (void)parse_date(start_date);
}

double raw_center(std::string_view raw_feature) {
    for (const auto &rc : kRawCenters) {
        if (raw_feature == rc.name) return rc.center;
    }
    throw Error(ErrorCode::UnknownFeature, fmt::format("no synthetic center for '{}'", raw_feature));
}

GroundTruth ground_truth(const SynthConfig &config) {
    config.validate();
    const FeatureConfig fc = default_feature_config();
    const LabelMap map = default_label_map();
    const double h = config.heterogeneity;

    GroundTruth truth;
    truth.config = config;
    for (const auto &r : fc.ratios) {
        double num = 0.0;
        double den = 0.0;
        for (const auto &n : r.numerator_features) num += raw_center(n);
        for (const auto &d : r.denominator_features) den += raw_center(d);
        truth.centers[r.name] = num / den;
    }
    for (const auto &p : fc.passthrough) truth.centers[p] = raw_center(p);
    for (const auto &[name, c] : truth.centers) truth.spreads[name] = kSpreadFraction * c;

    const int width = static_cast<int>(std::to_string(config.n_users).size());
    for (std::size_t u = 0; u < config.n_users; ++u) {
        Rng rng(derive_seed(config.seed, "synth.persona", u));
        Persona p;
        p.user_id = fmt::format("u{:0{}}", u + 1, std::max(2, width));
        p.archetype = u % kArchetypes;

        std::array<std::size_t, 2> extras{1, 0};
        bool perturbed = false;
        if (bernoulli(rng, h)) {
            perturbed = true;
            std::vector<InteractionLabel> labels(kAllLabels.begin(), kAllLabels.end());
            shuffle(labels, rng);
            p.drivers = {labels[0], labels[1]};
            do {
                extras = {uniform_index(rng, 3), uniform_index(rng, 3)};
            } while (extras[0] + extras[1] == 0);
            for (int &pol : p.polarity) pol = bernoulli(rng, 0.5) ? 1 : -1;
        }

        // A feature may follow label A only if no other driving label lists
        // it, so each driving label's features carry that label alone.
        auto in_list = [&](InteractionLabel label, const std::string &f) {
            const auto &list = map[label];
            return std::any_of(list.begin(), list.end(), [&](const LabelFeature &lf) { return lf.feature == f; });
        };
        std::set<std::string> used;
        auto pool_for = [&](InteractionLabel label) {
            std::vector<std::string> pool;
            for (const auto &lf : map[label]) {
                if (used.count(lf.feature) != 0) continue;
                bool clash = false;
                for (InteractionLabel d : p.drivers) clash = clash || (d != label && in_list(d, lf.feature));
                if (!clash) pool.push_back(lf.feature);
            }
            return pool;
        };

        std::vector<InteractionLabel> order{p.drivers[0], p.drivers[1]};
        for (InteractionLabel label : kAllLabels) {
            if (label != p.drivers[0] && label != p.drivers[1]) order.push_back(label);
        }
        for (InteractionLabel label : order) {
            const auto pool = pool_for(label);
            if (pool.empty()) throw Error(ErrorCode::InvalidConfig, fmt::format("no free feature for {}", to_string(label)));
            std::string choice = kDefaultAnchors[index_of(label)];
            if (bernoulli(rng, h) || std::find(pool.begin(), pool.end(), choice) == pool.end()) {
                choice = pool[uniform_index(rng, pool.size())];
            }
            used.insert(choice);
            p.anchors[index_of(label)] = choice;
            p.active[index_of(label)].push_back(choice);
        }

        for (std::size_t d = 0; d < 2; ++d) {
            const InteractionLabel label = p.drivers[d];
            auto pool = pool_for(label);
            // Unperturbed personas take the next listed feature.
            if (perturbed) shuffle(pool, rng);
            for (std::size_t e = 0; e < extras[d] && e < pool.size(); ++e) {
                used.insert(pool[e]);
                p.active[index_of(label)].push_back(pool[e]);
            }
        }
        for (InteractionLabel label : p.drivers) {
            for (const auto &f : p.active[index_of(label)]) p.phq_drivers.push_back(f);
        }
        for (InteractionLabel label : kAllLabels) {
            for (const auto &lf : map[label]) {
                if (used.count(lf.feature) != 0) p.label_drivers[index_of(label)].push_back(lf.feature);
            }
        }
        truth.personas.push_back(std::move(p));
    }

    // Users share offset patterns through a few archetypes; each feature is
    // high for half of them so its population mean stays near the center.
    std::size_t fi = 0;
    for (const auto &[name, c] : truth.centers) {
        std::array<int, kArchetypes> signs{};
        for (std::size_t a = 0; a < kArchetypes; ++a) signs[a] = a % 2 == 0 ? 1 : -1;
        Rng rng(derive_seed(config.seed, "synth.offsets", fi++));
        shuffle(std::span<int>(signs), rng);
        for (auto &p : truth.personas) {
            bool is_active = false;
            for (const auto &list : p.active) {
                is_active = is_active || std::find(list.begin(), list.end(), name) != list.end();
            }
            if (!is_active) p.offsets[name] = signs[p.archetype];
        }
    }
    return truth;
}

std::string ground_truth_to_json_text(const GroundTruth &truth) {
    using nlohmann::ordered_json;
    ordered_json j;
    const auto &c = truth.config;
    j["format"] = "ihope.ground_truth";
    j["version"] = 1;
    j["config"] = {{"n_users", c.n_users},         {"records_per_user", c.records_per_user},
                   {"signal_strength", c.signal_strength}, {"heterogeneity", c.heterogeneity},
                   {"label_noise", c.label_noise}, {"missing_rate", c.missing_rate},
                   {"seed", c.seed},               {"label_every_days", c.label_every_days},
                   {"start_date", c.start_date}};
    ordered_json users = ordered_json::array();
    for (const auto &p : truth.personas) {
        ordered_json u;
        u["user_id"] = p.user_id;
        u["archetype"] = p.archetype;
        ordered_json anchors = ordered_json::object();
        ordered_json active = ordered_json::object();
        ordered_json drivers_by_label = ordered_json::object();
        for (InteractionLabel label : kAllLabels) {
            const std::string key(to_string(label));
            anchors[key] = p.anchors[index_of(label)];
            active[key] = p.active[index_of(label)];
            drivers_by_label[key] = p.label_drivers[index_of(label)];
        }
        u["anchors"] = anchors;
        u["phq_labels"] = {{{"label", to_string(p.drivers[0])}, {"weight", 2}, {"polarity", p.polarity[0]}},
                           {{"label", to_string(p.drivers[1])}, {"weight", 1}, {"polarity", p.polarity[1]}}};
        u["phq_drivers"] = p.phq_drivers;
        u["active"] = active;
        u["label_drivers"] = drivers_by_label;
        users.push_back(std::move(u));
    }
    j["users"] = std::move(users);
    ordered_json features = ordered_json::object();
    for (const auto &[name, center] : truth.centers) {
        features[name] = {{"center", center}, {"spread", truth.spreads.at(name)}};
    }
    j["features"] = std::move(features);
    return j.dump(2) + "\n";
}

std::vector<UserDataset> generate(const SynthConfig &config) {
    const GroundTruth truth = ground_truth(config);
    const RawSchema raw = default_raw_schema();
    const FeatureConfig fc = default_feature_config();
    const LabelMap map = default_label_map();
    const Date start = parse_date(config.start_date);
    const std::size_t n = config.records_per_user;
    const double s = config.signal_strength;

    std::vector<UserDataset> out;
    out.reserve(truth.personas.size());
    for (std::size_t u = 0; u < truth.personas.size(); ++u) {
        const Persona &p = truth.personas[u];
        Rng rng(derive_seed(config.seed, "synth.days", u));
        Rng miss_rng(derive_seed(config.seed, "synth.missing", u));

        // Which label drives each active feature, and in which direction.
        std::map<std::string, std::pair<std::size_t, double>> driven;
        for (InteractionLabel label : kAllLabels) {
            for (const auto &f : p.active[index_of(label)]) {
                const double dir = direction_in(map, label, f) == Direction::Above ? 1.0 : -1.0;
                driven[f] = {index_of(label), dir};
            }
        }

        std::vector<int> planted(n);
        for (std::size_t i = 0; i < n; ++i) planted[i] = static_cast<int>(i % kNumCategories);
        shuffle(planted, rng);

        UserDataset ds;
        ds.user_id = p.user_id;
        ds.records.reserve(n);
        std::map<std::string, double> e;
        for (std::size_t day = 0; day < n; ++day) {
            const auto bits = category_bits(planted[day]);
            std::array<double, kNumLabels> z{};
            for (InteractionLabel label : kAllLabels) {
                const std::size_t li = index_of(label);
                double sign;
                if (label == p.drivers[0]) {
                    sign = (bits[0] ? 1.0 : -1.0) * p.polarity[0];
                } else if (label == p.drivers[1]) {
                    sign = (bits[1] ? 1.0 : -1.0) * p.polarity[1];
                } else {
                    sign = bernoulli(rng, 0.5) ? 1.0 : -1.0;
                }
                z[li] = sign * (kMinSwing + kSwingScale * std::abs(standard_normal(rng)));
            }

            const double u_score = s * (planted[day] - 1.5) + (1.0 - s) * standard_normal(rng);
            const int category = (u_score > -1.0) + (u_score > 0.0) + (u_score > 1.0);
            const auto [lo, hi] = category_range(category);
            int score = lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
            if (bernoulli(rng, config.label_noise)) score += bernoulli(rng, 0.5) ? 1 : -1;
            score = std::clamp(score, 0, 12);

            for (const auto &[name, center] : truth.centers) {
                const double spread = truth.spreads.at(name);
                double v;
                if (auto it = driven.find(name); it != driven.end()) {
                    v = center + it->second.second * spread * z[it->second.first];
                } else {
                    v = center + p.offsets.at(name) * spread * (kMinSwing + kSwingScale * std::abs(standard_normal(rng)));
                }
                e[name] = std::max(v, 0.0);
            }

            DailyRecord rec;
            rec.user_id = p.user_id;
            rec.date = start + std::chrono::days(static_cast<int>(day));
            rec.raw.assign(raw.size(), 0.0);
            for (const auto &name : fc.passthrough) rec.raw[raw.index_of(name)] = e.at(name);
            for (const auto &r : fc.ratios) {
                double den_total = 0.0;
                for (const auto &d : r.denominator_features) {
                    const double c = raw_center(d);
                    const double v = std::max(c * (1.0 + kOperandNoise * standard_normal(rng)), 0.05 * c);
                    rec.raw[raw.index_of(d)] = v;
                    den_total += v;
                }
                std::vector<double> w;
                double w_total = 0.0;
                for (const auto &nf : r.numerator_features) {
                    w.push_back(raw_center(nf) * std::max(1.0 + kOperandNoise * standard_normal(rng), 0.05));
                    w_total += w.back();
                }
                const double num_total = e.at(r.name) * den_total;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    rec.raw[raw.index_of(r.numerator_features[k])] = num_total * w[k] / w_total;
                }
            }
            double voice = 0.0;
            for (const char *name : {"voice_home", "voice_own_dorm", "voice_others_dorm", "voice_study", "voice_social"}) {
                voice += rec.raw[raw.index_of(name)];
            }
            rec.raw[raw.index_of("voice_total")] = voice;

            for (double &v : rec.raw) {
                if (bernoulli(miss_rng, config.missing_rate)) v = kMissing;
            }
            if (day % config.label_every_days == 0) rec.phq4 = score;
            ds.records.push_back(std::move(rec));
        }
        out.push_back(std::move(ds));
    }
    return out;
}

std::vector<DailyRecord> generate_records(const SynthConfig &config) {
    std::vector<DailyRecord> out;
    for (auto &ds : generate(config)) {
        for (auto &r : ds.records) out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ihope
