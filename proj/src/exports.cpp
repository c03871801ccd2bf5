#include "ihope/exports.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "ihope/error.hpp"
#include "json.hpp"

namespace ihope {

std::vector<double> ImportanceTable::row_means() const {
    std::vector<double> means;
    means.reserve(values.size());
    for (const auto &row : values) {
        means.push_back(row.empty() ? 0.0 : std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
    }
    return means;
}

void ImportanceTable::write_csv(std::ostream &out) const {
    out << "feature";
    for (const auto &c : columns) out << ',' << c;
    out << ",mean\n";
    const auto means = row_means();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << rows[r];
        for (double v : values[r]) out << ',' << fmt::format("{}", v);
        out << ',' << fmt::format("{}", means[r]) << '\n';
    }
}

std::string ImportanceTable::to_json_text() const {
    nlohmann::ordered_json j;
    j["rows"] = rows;
    j["columns"] = columns;
    j["values"] = values;
    j["row_means"] = row_means();
    return j.dump(2) + "\n";
}

namespace {

template <typename T>
std::vector<const T *> sorted_by_user(std::span<const T> users) {
    std::vector<const T *> out;
    for (const auto &u : users) out.push_back(&u);
    std::stable_sort(out.begin(), out.end(), [](const T *a, const T *b) { return a->user_id < b->user_id; });
    return out;
}

}  // namespace

ImportanceTable export_importance_heatmap(std::span<const UserLabelModelRef> users, InteractionLabel label) {
    if (users.empty()) throw Error(ErrorCode::EmptyData, "no user label models to export");
    ImportanceTable t;
    const auto order = sorted_by_user(users);
    t.rows = order.front()->model->scorer.map.names(label);
    t.values.assign(t.rows.size(), {});
    for (const auto *u : order) {
        const auto &imp = u->model->forests[index_of(label)].importances;
        if (imp.size() != t.rows.size()) {
            throw Error(ErrorCode::ArityMismatch, fmt::format("user {}: {} importances for {} features", u->user_id,
                                                              imp.size(), t.rows.size()));
        }
        t.columns.push_back(u->user_id);
        for (std::size_t r = 0; r < imp.size(); ++r) t.values[r].push_back(imp[r]);
    }
    return t;
}

ImportanceTable export_label_importance(std::span<const UserScoreImportance> users) {
    if (users.empty()) throw Error(ErrorCode::EmptyData, "no label importances to export");
    ImportanceTable t;
    for (auto l : kAllLabels) t.rows.emplace_back(to_string(l));
    t.values.assign(kNumLabels, {});
    for (const auto *u : sorted_by_user(users)) {
        if (u->importances.size() != kNumLabels) {
            throw Error(ErrorCode::ArityMismatch,
                        fmt::format("user {}: expected {} label importances, got {}", u->user_id, kNumLabels, u->importances.size()));
        }
        t.columns.push_back(u->user_id);
        for (std::size_t r = 0; r < kNumLabels; ++r) t.values[r].push_back(u->importances[r]);
    }
    return t;
}

ImportanceTable importance_heatmap_of(const PipelineResult &result, InteractionLabel label) {
    std::vector<UserLabelModelRef> refs;
    for (const auto &a : result.artifacts) {
        if (a.label_model) refs.push_back({a.unit_id, &*a.label_model});
    }
    return export_importance_heatmap(refs, label);
}

ImportanceTable label_importance_of(const PipelineResult &result) {
    std::vector<UserScoreImportance> users;
    for (const auto &a : result.artifacts) {
        if (!a.label_importance.empty()) users.push_back({a.unit_id, a.label_importance});
    }
    return export_label_importance(users);
}

std::vector<ThresholdHistogram> export_thresholds(const ThresholdTable &thresholds,
                                                  std::span<const std::vector<double>> rows,
                                                  std::span<const std::string> names, std::size_t bins) {
    if (bins == 0) throw Error(ErrorCode::InvalidConfig, "histogram needs at least one bin");
    if (rows.empty()) throw Error(ErrorCode::EmptyData, "no rows to histogram");
    std::vector<ThresholdHistogram> out;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (!thresholds.contains(names[j])) continue;
        ThresholdHistogram h;
        h.feature = names[j];
        h.threshold = thresholds.at(names[j]);
        h.lo = rows.front()[j];
        h.hi = rows.front()[j];
        for (const auto &r : rows) {
            h.lo = std::min(h.lo, r[j]);
            h.hi = std::max(h.hi, r[j]);
        }
        h.counts.assign(bins, 0);
        const double width = (h.hi - h.lo) / static_cast<double>(bins);
        for (const auto &r : rows) {
            std::size_t b = 0;
            if (width > 0.0) b = std::min(bins - 1, static_cast<std::size_t>((r[j] - h.lo) / width));
            ++h.counts[b];
        }
        out.push_back(std::move(h));
    }
    return out;
}

void write_histograms_csv(std::ostream &out, std::span<const ThresholdHistogram> histograms) {
    out << "feature,bin,lo,hi,count,threshold\n";
    for (const auto &h : histograms) {
        const double w = h.bin_width();
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            out << fmt::format("{},{},{},{},{},{}\n", h.feature, b, h.lo + w * static_cast<double>(b),
                               b + 1 == h.counts.size() ? h.hi : h.lo + w * static_cast<double>(b + 1), h.counts[b],
                               h.threshold);
        }
    }
}

}  // namespace ihope
