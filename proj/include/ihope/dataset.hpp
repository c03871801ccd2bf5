#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ihope {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD; throws MalformedValue on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date date);

enum class Phq4Category : int { Normal = 0, Mild = 1, Moderate = 2, Severe = 3 };

inline constexpr std::size_t kNumCategories = 4;
inline constexpr std::array<Phq4Category, kNumCategories> kAllCategories{
    Phq4Category::Normal, Phq4Category::Mild, Phq4Category::Moderate, Phq4Category::Severe};

std::string_view to_string(Phq4Category category) noexcept;

constexpr std::size_t index_of(Phq4Category category) noexcept { return static_cast<std::size_t>(category); }

/// 0-3 Normal, 4-6 Mild, 7-9 Moderate, 10-12 Severe. Throws OutOfRange otherwise.
Phq4Category categorize_phq4(int score);

struct RawFeature {
    std::string name;
    std::string unit;
};

/// Ordered list of raw input columns. Column order fixes the layout of
/// DailyRecord::raw.
class RawSchema {
public:
    RawSchema() = default;
    explicit RawSchema(std::vector<RawFeature> features);

    [[nodiscard]] std::size_t size() const noexcept { return features_.size(); }
    [[nodiscard]] const std::vector<RawFeature> &features() const noexcept { return features_; }
    [[nodiscard]] std::vector<std::string> names() const;
    /// Throws UnknownFeature.
    [[nodiscard]] std::size_t index_of(std::string_view name) const;
    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;

private:
    std::vector<RawFeature> features_;
};

/// Accepts a JSON array of either strings or {"name": ..., "unit": ...} objects.
RawSchema load_raw_schema(const std::filesystem::path &path);
RawSchema raw_schema_from_json_text(std::string_view text);
std::string raw_schema_to_json_text(const RawSchema &schema);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct DailyRecord {
    std::string user_id;
    Date date{};
    /// Aligned with RawSchema order; NaN marks a missing cell until fill_missing runs.
    std::vector<double> raw;
    std::optional<int> phq4;

    [[nodiscard]] bool is_missing(std::size_t feature) const { return std::isnan(raw[feature]); }
    [[nodiscard]] bool has_missing() const;
    [[nodiscard]] bool labeled() const noexcept { return phq4.has_value(); }
    /// Requires labeled().
    [[nodiscard]] Phq4Category category() const { return categorize_phq4(*phq4); }
};

/// CSV with header `user_id,date[,phq4],<features...>`. Columns not in the
/// schema are ignored; an empty cell is recorded as missing.
std::vector<DailyRecord> parse_records(const std::filesystem::path &path, const RawSchema &schema);
std::vector<DailyRecord> parse_records(std::istream &in, const RawSchema &schema, std::string_view source = "<stream>");
void write_records(std::ostream &out, std::span<const DailyRecord> records, const RawSchema &schema);

/// Gives each record the PHQ-4 score of the nearest labeled record of the
/// same user within +/- window_days (ties go to the earlier date). Records
/// with no label in reach are dropped.
std::vector<DailyRecord> align_labels(std::span<const DailyRecord> records, int window_days);

enum class FillPolicy { Zero, PerFeatureMean };

std::vector<DailyRecord> fill_missing(std::vector<DailyRecord> records, FillPolicy policy);

/// Per-feature min-max scaling. Constant features map to 0; values outside
/// the fitted range are not clipped.
class MinMaxScaler {
public:
    MinMaxScaler() = default;
    MinMaxScaler(std::vector<double> min, std::vector<double> max);

    /// Rows must be non-empty and of equal width.
    static MinMaxScaler fit(std::span<const std::vector<double>> rows);

    [[nodiscard]] std::size_t width() const noexcept { return min_.size(); }
    [[nodiscard]] double min(std::size_t j) const { return min_[j]; }
    [[nodiscard]] double max(std::size_t j) const { return max_[j]; }
    [[nodiscard]] double transform(std::size_t j, double value) const;
    [[nodiscard]] std::vector<double> transform(std::span<const double> row) const;
    [[nodiscard]] std::vector<std::vector<double>> transform(std::span<const std::vector<double>> rows) const;

private:
    std::vector<double> min_;
    std::vector<double> max_;
};

MinMaxScaler fit_scaler(std::span<const DailyRecord> train_records);
std::vector<DailyRecord> apply_scaler(const MinMaxScaler &scaler, std::vector<DailyRecord> records);

struct UserDataset {
    std::string user_id;
    std::vector<DailyRecord> records;  // ascending date
    std::optional<MinMaxScaler> scaler;

    [[nodiscard]] std::size_t labeled_count() const;
};

/// Partitions records by user (sorted by user_id) and sorts each user's
/// records by date. Throws DuplicateUserDate.
std::vector<UserDataset> group_by_user(std::vector<DailyRecord> records);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

/// Random holdout over indices [0, n). |test| = round(test_fraction * n),
/// kept within [1, n - 1]. Throws TooFewRecords for n < 2.
Split split_holdout(std::size_t n, double test_fraction, std::uint64_t seed);

/// k folds over [0, n); the first n % k folds hold one extra index.
std::vector<Split> kfold(std::size_t n, std::size_t k, std::uint64_t seed);

/// Returns train_indices followed by with-replacement draws from each
/// minority class until every present class matches the majority count.
/// labels is indexed by record index.
std::vector<std::size_t> oversample(std::span<const std::size_t> train_indices, std::span<const Phq4Category> labels,
                                    std::uint64_t seed);

std::vector<UserDataset> filter_users(std::vector<UserDataset> datasets, std::size_t min_points);

using ClassCounts = std::array<std::size_t, kNumCategories>;

ClassCounts class_distribution(std::span<const DailyRecord> records);

}  // namespace ihope
