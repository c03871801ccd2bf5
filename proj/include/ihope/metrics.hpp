#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ihope/dataset.hpp"

namespace ihope {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // true instances
    std::size_t predicted = 0;
    bool precision_undefined = false;  // never predicted
    bool recall_undefined = false;  // absent from the truths
};

struct UserBreakdown {
    std::string user_id;
    std::size_t n_test = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0;
};

using ConfusionCounts = std::array<std::array<std::size_t, kNumCategories>, kNumCategories>;
using ConfusionMatrix = std::array<std::array<double, kNumCategories>, kNumCategories>;

struct EvaluationReport {
    std::array<ClassMetrics, kNumCategories> per_class{};
    double accuracy = 0.0;
    std::size_t n_test = 0;
    std::size_t n_correct = 0;
    ConfusionCounts confusion_counts{};  // rows = true class
    /// Row-normalized; rows of absent classes stay zero.
    ConfusionMatrix confusion{};
    std::vector<UserBreakdown> per_user;
    [[nodiscard]] double macro_f1() const;
};

/// Throws LengthMismatch or EmptyData. Also checks that the prevalence-
/// weighted confusion diagonal reproduces the direct accuracy count.
EvaluationReport evaluate(std::span<const Phq4Category> predictions, std::span<const Phq4Category> truths);

}  // namespace ihope
