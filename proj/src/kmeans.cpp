#include "ihope/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ihope/error.hpp"
#include "ihope/random.hpp"

namespace ihope {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

std::vector<std::vector<double>> plus_plus_seeds(std::span<const std::vector<double>> points, std::size_t k, Rng &rng) {
    std::vector<std::vector<double>> centers;
    centers.push_back(points[uniform_index(rng, points.size())]);
    std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], centers.back()));
            total += nearest[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = uniform01(rng) * total;
            for (pick = 0; pick + 1 < points.size(); ++pick) {
                target -= nearest[pick];
                if (target < 0.0) break;
            }
        } else {
            pick = uniform_index(rng, points.size());
        }
        centers.push_back(points[pick]);
    }
    return centers;
}

KMeansResult lloyd(std::span<const std::vector<double>> points, std::vector<std::vector<double>> centroids,
                   std::size_t max_iterations) {
    const std::size_t k = centroids.size();
    const std::size_t dim = points.front().size();
    KMeansResult result;
    result.assignments.assign(points.size(), k);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best = 0;
            double best_d = squared_distance(points[i], centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = squared_distance(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (result.assignments[i] != best) changed = true;
            result.assignments[i] = best;
            inertia += best_d;
        }
        result.inertia_history.push_back(inertia);
        result.inertia = inertia;
        if (!changed) break;
        // Empty clusters keep their previous centroid.
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto &s = sums[result.assignments[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
            ++counts[result.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
    }
    result.centroids = std::move(centroids);
    return result;
}

}  // namespace

KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::size_t restarts, std::uint64_t seed,
                    std::size_t max_iterations) {
    if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    if (points.size() < k) throw Error(ErrorCode::TooFewRecords, fmt::format("k-means with k = {} on {} points", k, points.size()));
    for (const auto &p : points) {
        if (p.size() != points.front().size()) throw Error(ErrorCode::ArityMismatch, "points of unequal dimension");
    }
    restarts = std::max<std::size_t>(restarts, 1);
    KMeansResult best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, "kmeans.restart", r));
        auto result = lloyd(points, plus_plus_seeds(points, k, rng), max_iterations);
        result.restart = r;
        if (r == 0 || result.inertia < best.inertia) best = std::move(result);
    }
    return best;
}

double silhouette_score(std::span<const std::vector<double>> points, std::span<const std::size_t> assignments,
                        std::size_t k) {
    const std::size_t n = points.size();
    if (assignments.size() != n) throw Error(ErrorCode::LengthMismatch, "one assignment per point expected");
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) {
        if (a >= k) throw Error(ErrorCode::OutOfRange, "assignment beyond cluster count");
        ++sizes[a];
    }
    const auto used = static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](auto s) { return s > 0; }));
    if (used < 2 || used >= n) {
        throw Error(ErrorCode::SilhouetteUndefined, fmt::format("silhouette needs 2 <= clusters < n, got {} of {}", used, n));
    }
    double total = 0.0;
    std::vector<double> dist_sum(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) dist_sum[assignments[j]] += std::sqrt(squared_distance(points[i], points[j]));
        }
        const std::size_t own = assignments[i];
        if (sizes[own] <= 1) continue;
        const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own && sizes[c] > 0) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

KMeansValidation kmeans_validate(std::span<const std::vector<double>> points, std::size_t k, std::size_t restarts,
                                 std::uint64_t seed) {
    KMeansValidation v;
    v.clustering = kmeans(points, k, restarts, seed);
    v.silhouette = silhouette_score(points, v.clustering.assignments, k);
    return v;
}

}  // namespace ihope
