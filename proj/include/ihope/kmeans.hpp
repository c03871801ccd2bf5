#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ihope {

struct KMeansResult {
    std::vector<std::size_t> assignments;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    /// Inertia after every assignment step of the winning restart.
    std::vector<double> inertia_history;
    std::size_t restart = 0;
};

/// Best-of-restarts Lloyd iterations from k-means++ seeds. Throws
/// TooFewRecords when there are fewer points than clusters.
KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::size_t restarts, std::uint64_t seed,
                    std::size_t max_iterations = 300);

/// Mean silhouette coefficient; singletons contribute 0. Throws
/// SilhouetteUndefined unless 2 <= clusters < n.
double silhouette_score(std::span<const std::vector<double>> points, std::span<const std::size_t> assignments,
                        std::size_t k);

struct KMeansValidation {
    KMeansResult clustering;
    double silhouette = 0.0;

    /// Soft check on the label count: clusters are better than random.
    [[nodiscard]] bool passed() const noexcept { return silhouette > 0.0; }
};

KMeansValidation kmeans_validate(std::span<const std::vector<double>> points, std::size_t k, std::size_t restarts,
                                 std::uint64_t seed);

}  // namespace ihope
