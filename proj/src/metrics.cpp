#include "ihope/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ihope/error.hpp"

namespace ihope {

double EvaluationReport::macro_f1() const {
    double sum = 0.0;
    for (const auto &m : per_class) sum += m.f1;
    return sum / static_cast<double>(kNumCategories);
}

EvaluationReport evaluate(std::span<const Phq4Category> predictions, std::span<const Phq4Category> truths) {
    if (predictions.size() != truths.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("{} predictions for {} truths", predictions.size(), truths.size()));
    }
    if (truths.empty()) throw Error(ErrorCode::EmptyData, "nothing to evaluate");

    EvaluationReport r;
    r.n_test = truths.size();
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const std::size_t t = index_of(truths[i]);
        const std::size_t p = index_of(predictions[i]);
        ++r.confusion_counts[t][p];
        if (t == p) ++r.n_correct;
    }
    r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_test);

    for (std::size_t c = 0; c < kNumCategories; ++c) {
        auto &m = r.per_class[c];
        const std::size_t tp = r.confusion_counts[c][c];
        for (std::size_t k = 0; k < kNumCategories; ++k) {
            m.support += r.confusion_counts[c][k];
            m.predicted += r.confusion_counts[k][c];
        }
        m.precision_undefined = m.predicted == 0;
        m.recall_undefined = m.support == 0;
        m.precision = m.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(m.predicted);
        m.recall = m.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(m.support);
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        if (m.support > 0) {
            for (std::size_t k = 0; k < kNumCategories; ++k) {
                r.confusion[c][k] = static_cast<double>(r.confusion_counts[c][k]) / static_cast<double>(m.support);
            }
        }
    }

    double weighted = 0.0;
    for (std::size_t c = 0; c < kNumCategories; ++c) {
        weighted += r.confusion[c][c] * static_cast<double>(r.per_class[c].support) / static_cast<double>(r.n_test);
    }
    if (std::abs(weighted - r.accuracy) > 1e-9) {
        throw Error(ErrorCode::DegenerateInput,
                    fmt::format("confusion-weighted accuracy {} disagrees with count {}", weighted, r.accuracy));
    }
    return r;
}

}  // namespace ihope
