#include "ihope/labels.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ihope/error.hpp"
#include "ihope/random.hpp"
#include "json.hpp"

namespace ihope {

std::string_view to_string(InteractionLabel label) noexcept {
    switch (label) {
        case InteractionLabel::Leisure: return "Leisure";
        case InteractionLabel::MeTime: return "MeTime";
        case InteractionLabel::PhoneTime: return "PhoneTime";
        case InteractionLabel::Sleep: return "Sleep";
        case InteractionLabel::SocialTime: return "SocialTime";
    }
    return "?";
}

InteractionLabel label_from_string(std::string_view name) {
    for (auto label : kAllLabels) {
        if (to_string(label) == name) return label;
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown interaction label '{}'", name));
}

void LabelMap::validate() const {
    for (auto label : kAllLabels) {
        const auto &list = (*this)[label];
        if (list.empty()) throw Error(ErrorCode::InvalidConfig, fmt::format("label {} has no features", to_string(label)));
        std::set<std::string> seen;
        for (const auto &f : list) {
            if (!seen.insert(f.feature).second) {
                throw Error(ErrorCode::InvalidConfig, fmt::format("label {} lists '{}' twice", to_string(label), f.feature));
            }
        }
    }
}

LabelMap label_map_from_json_text(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        LabelMap map;
        for (auto label : kAllLabels) {
            const auto key = std::string(to_string(label));
            if (!doc.contains(key)) throw Error(ErrorCode::InvalidConfig, fmt::format("label map lacks '{}'", key));
            for (const auto &item : doc.at(key)) {
                const auto dir = item.at("direction").get<std::string>();
                if (dir != "above" && dir != "below") {
                    throw Error(ErrorCode::InvalidConfig, fmt::format("direction must be 'above' or 'below', got '{}'", dir));
                }
                map[label].push_back({item.at("feature").get<std::string>(), dir == "above" ? Direction::Above : Direction::Below});
            }
        }
        map.validate();
        return map;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ParseError, fmt::format("label map: {}", e.what()));
    }
}

LabelMap load_label_map(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open label map {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return label_map_from_json_text(buffer.str());
}

std::string label_map_to_json_text(const LabelMap &map) {
    nlohmann::ordered_json doc;
    for (auto label : kAllLabels) {
        nlohmann::ordered_json list = nlohmann::ordered_json::array();
        for (const auto &f : map[label]) {
            list.push_back({{"feature", f.feature}, {"direction", f.direction == Direction::Above ? "above" : "below"}});
        }
        doc[std::string(to_string(label))] = list;
    }
    return doc.dump(2) + "\n";
}

BoundLabelMap::BoundLabelMap(const LabelMap &map, const FeatureSchema &schema, bool require_coverage) : schema_(schema) {
    map.validate();
    std::vector<bool> covered(schema.size(), false);
    for (auto label : kAllLabels) {
        for (const auto &f : map[label]) {
            const std::size_t idx = schema.index_of(f.feature);
            covered[idx] = true;
            entries_[index_of(label)].push_back({f.feature, idx, f.direction});
        }
    }
    if (require_coverage) {
        for (std::size_t i = 0; i < covered.size(); ++i) {
            if (!covered[i]) {
                throw Error(ErrorCode::InvalidConfig, fmt::format("feature '{}' belongs to no interaction label", schema.names[i]));
            }
        }
    }
}

std::vector<std::size_t> BoundLabelMap::indices(InteractionLabel label) const {
    std::vector<std::size_t> out;
    for (const auto &e : entries(label)) out.push_back(e.index);
    return out;
}

std::vector<std::string> BoundLabelMap::names(InteractionLabel label) const {
    std::vector<std::string> out;
    for (const auto &e : entries(label)) out.push_back(e.feature);
    return out;
}

double ThresholdTable::at(std::string_view feature) const {
    auto it = means_.find(std::string(feature));
    if (it == means_.end()) throw Error(ErrorCode::MissingThreshold, fmt::format("no threshold for '{}'", feature));
    return it->second;
}

ThresholdTable compute_thresholds(std::span<const std::vector<double>> train_rows, const BoundLabelMap &map) {
    if (train_rows.empty()) throw Error(ErrorCode::EmptyData, "thresholds need at least one training row");
    std::map<std::string, std::size_t> mapped;
    for (auto label : kAllLabels) {
        for (const auto &e : map.entries(label)) mapped.emplace(e.feature, e.index);
    }
    ThresholdTable table;
    for (const auto &[name, idx] : mapped) {
        double sum = 0.0;
        for (const auto &row : train_rows) sum += row.at(idx);
        table.set(name, sum / static_cast<double>(train_rows.size()));
    }
    return table;
}

std::vector<bool> passing_features(std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map,
                                   const ThresholdTable &thresholds) {
    const auto &entries = map.entries(label);
    std::vector<bool> out(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto &e = entries[i];
        if (e.index >= vector.size()) throw Error(ErrorCode::ArityMismatch, "vector shorter than the bound schema");
        out[i] = passes(vector[e.index], thresholds.at(e.feature), e.direction);
    }
    return out;
}

int init_score(std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map,
               const ThresholdTable &thresholds) {
    const auto pass = passing_features(vector, label, map, thresholds);
    return static_cast<int>(std::count(pass.begin(), pass.end(), true));
}

ForestModel fit_label_forest(std::span<const std::vector<double>> label_rows, std::span<const int> init_scores,
                             ForestConfig config) {
    std::vector<double> y(init_scores.begin(), init_scores.end());
    config.mode = ForestMode::Regression;
    return fit_forest(label_rows, y, config);
}

double nwfi(double importance, double normalized_value) noexcept {
    return importance * std::clamp(normalized_value, 0.0, 1.0);
}

std::vector<double> compute_nwfi(std::span<const double> importances, const MinMaxScaler &scaler,
                                 std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map) {
    const auto &entries = map.entries(label);
    if (importances.size() != entries.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("{} importances for {} features of {}", importances.size(), entries.size(), to_string(label)));
    }
    std::vector<double> out(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::size_t j = entries[i].index;
        out[i] = nwfi(importances[i], scaler.transform(j, vector[j]));
    }
    return out;
}

double final_score(std::span<const double> vector, InteractionLabel label, const BoundLabelMap &map,
                   const ThresholdTable &thresholds, std::span<const double> nwfi_weights) {
    const auto pass = passing_features(vector, label, map, thresholds);
    if (nwfi_weights.size() != pass.size()) throw Error(ErrorCode::LengthMismatch, "one impact weight per label feature expected");
    double score = 0.0;
    for (std::size_t i = 0; i < pass.size(); ++i) {
        if (pass[i]) score += nwfi_weights[i];
    }
    return score;
}

LabelScores score_all(std::span<const double> vector, const LabelScorer &scorer) {
    LabelScores scores;
    for (auto label : kAllLabels) {
        const auto weights = compute_nwfi(scorer.importances[index_of(label)], scorer.scaler, vector, label, scorer.map);
        scores[label] = final_score(vector, label, scorer.map, scorer.thresholds, weights);
    }
    return scores;
}

UserLabelModel fit_user_label_model(std::span<const std::vector<double>> train_rows, const BoundLabelMap &map,
                                    const ThresholdTable &thresholds, const ForestConfig &forest_config,
                                    std::uint64_t seed) {
    if (train_rows.empty()) throw Error(ErrorCode::EmptyData, "label model needs training rows");
    UserLabelModel model;
    model.scorer.map = map;
    model.scorer.thresholds = thresholds;
    model.scorer.scaler = MinMaxScaler::fit(train_rows);
    for (auto label : kAllLabels) {
        const auto cols = map.indices(label);
        std::vector<std::vector<double>> restricted;
        std::vector<int> scores;
        restricted.reserve(train_rows.size());
        scores.reserve(train_rows.size());
        for (const auto &row : train_rows) {
            std::vector<double> r;
            r.reserve(cols.size());
            for (std::size_t c : cols) r.push_back(row[c]);
            restricted.push_back(std::move(r));
            scores.push_back(init_score(row, label, map, thresholds));
        }
        ForestConfig config = forest_config;
        config.seed = derive_seed(seed, "labels.forest", index_of(label));
        auto &forest = model.forests[index_of(label)];
        forest = fit_label_forest(restricted, scores, config);
        model.degenerate[index_of(label)] = forest.degenerate;
        model.scorer.importances[index_of(label)] = forest.importances;
    }
    return model;
}

}  // namespace ihope
