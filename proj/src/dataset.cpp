#include "ihope/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "csv.hpp"
#include "ihope/error.hpp"
#include "ihope/random.hpp"
#include "json.hpp"

namespace ihope {

namespace {

bool parse_int(std::string_view text, int &out) {
    const auto *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

bool parse_double(std::string_view text, double &out) {
    // from_chars for double is available in libstdc++ 11.
    const auto *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

Date parse_date(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
        !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d)) {
        throw Error(ErrorCode::MalformedValue, fmt::format("invalid date '{}'", text));
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw Error(ErrorCode::MalformedValue, fmt::format("invalid date '{}'", text));
    return Date{ymd};
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

std::string_view to_string(Phq4Category category) noexcept {
    switch (category) {
        case Phq4Category::Normal: return "Normal";
        case Phq4Category::Mild: return "Mild";
        case Phq4Category::Moderate: return "Moderate";
        case Phq4Category::Severe: return "Severe";
    }
    return "?";
}

Phq4Category categorize_phq4(int score) {
    if (score < 0 || score > 12) throw Error(ErrorCode::OutOfRange, fmt::format("PHQ-4 score {} outside [0, 12]", score));
    if (score <= 3) return Phq4Category::Normal;
    if (score <= 6) return Phq4Category::Mild;
    if (score <= 9) return Phq4Category::Moderate;
    return Phq4Category::Severe;
}

// ---------------------------------------------------------------------------
// Schema

RawSchema::RawSchema(std::vector<RawFeature> features) : features_(std::move(features)) {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (features_[i].name == features_[j].name) {
                throw Error(ErrorCode::InvalidConfig, fmt::format("duplicate feature '{}' in schema", features_[i].name));
            }
        }
    }
}

std::vector<std::string> RawSchema::names() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto &f : features_) out.push_back(f.name);
    return out;
}

std::optional<std::size_t> RawSchema::find(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t RawSchema::index_of(std::string_view name) const {
    if (auto idx = find(name)) return *idx;
    throw Error(ErrorCode::UnknownFeature, fmt::format("feature '{}' not in raw schema", name));
}

RawSchema raw_schema_from_json_text(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ParseError, fmt::format("schema: {}", e.what()));
    }
    if (!doc.is_array()) throw Error(ErrorCode::ParseError, "schema: expected a JSON array");
    std::vector<RawFeature> features;
    for (const auto &item : doc) {
        if (item.is_string()) {
            features.push_back({item.get<std::string>(), ""});
        } else if (item.is_object() && item.contains("name")) {
            features.push_back({item.at("name").get<std::string>(), item.value("unit", std::string{})});
        } else {
            throw Error(ErrorCode::ParseError, "schema: entries must be strings or objects with a name");
        }
    }
    return RawSchema(std::move(features));
}

RawSchema load_raw_schema(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open schema {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return raw_schema_from_json_text(buffer.str());
}

std::string raw_schema_to_json_text(const RawSchema &schema) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto &f : schema.features()) doc.push_back({{"name", f.name}, {"unit", f.unit}});
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Records

bool DailyRecord::has_missing() const {
    return std::any_of(raw.begin(), raw.end(), [](double v) { return std::isnan(v); });
}

std::vector<DailyRecord> parse_records(std::istream &in, const RawSchema &schema, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, fmt::format("{}: empty file, no header", source));
    const auto header = detail::split_csv_line(line);
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    const auto user_col = column("user_id");
    const auto date_col = column("date");
    if (!user_col) throw Error(ErrorCode::MissingColumn, fmt::format("{}: no 'user_id' column", source));
    if (!date_col) throw Error(ErrorCode::MissingColumn, fmt::format("{}: no 'date' column", source));
    const auto phq_col = column("phq4");
    std::vector<std::size_t> feature_cols;
    feature_cols.reserve(schema.size());
    for (const auto &f : schema.features()) {
        auto c = column(f.name);
        if (!c) throw Error(ErrorCode::MissingColumn, fmt::format("{}: no column for feature '{}'", source, f.name));
        feature_cols.push_back(*c);
    }

    std::vector<DailyRecord> records;
    std::map<std::pair<std::string, Date>, std::size_t> seen;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::MalformedValue,
                        fmt::format("{}: row {} has {} cells, header has {}", source, row, cells.size(), header.size()));
        }
        DailyRecord rec;
        rec.user_id = cells[*user_col];
        if (rec.user_id.empty()) throw Error(ErrorCode::MalformedValue, fmt::format("{}: row {}: empty user_id", source, row));
        try {
            rec.date = parse_date(cells[*date_col]);
        } catch (const Error &) {
            throw Error(ErrorCode::MalformedValue,
                        fmt::format("{}: row {}, column 'date': invalid date '{}'", source, row, cells[*date_col]));
        }
        if (phq_col && !cells[*phq_col].empty()) {
            int score = 0;
            if (!parse_int(cells[*phq_col], score)) {
                throw Error(ErrorCode::MalformedValue,
                            fmt::format("{}: row {}, column 'phq4': not an integer '{}'", source, row, cells[*phq_col]));
            }
            if (score < 0 || score > 12) {
                throw Error(ErrorCode::OutOfRange,
                            fmt::format("{}: row {}, column 'phq4': score {} outside [0, 12]", source, row, score));
            }
            rec.phq4 = score;
        }
        rec.raw.resize(schema.size(), kMissing);
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const std::string &cell = cells[feature_cols[j]];
            if (cell.empty()) continue;
            double v = 0.0;
            if (!parse_double(cell, v) || !std::isfinite(v) || v < 0.0) {
                throw Error(ErrorCode::MalformedValue, fmt::format("{}: row {}, column '{}': expected a finite value >= 0, got '{}'",
                                                                   source, row, schema.features()[j].name, cell));
            }
            rec.raw[j] = v;
        }
        auto [it, inserted] = seen.emplace(std::make_pair(rec.user_id, rec.date), row);
        if (!inserted) {
            throw Error(ErrorCode::DuplicateUserDate, fmt::format("{}: row {} repeats ({}, {}) first seen on row {}", source, row,
                                                                  rec.user_id, format_date(rec.date), it->second));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<DailyRecord> parse_records(const std::filesystem::path &path, const RawSchema &schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
    return parse_records(in, schema, path.string());
}

void write_records(std::ostream &out, std::span<const DailyRecord> records, const RawSchema &schema) {
    out << "user_id,date,phq4";
    for (const auto &f : schema.features()) out << ',' << f.name;
    out << '\n';
    for (const auto &rec : records) {
        out << rec.user_id << ',' << format_date(rec.date) << ',';
        if (rec.phq4) out << *rec.phq4;
        for (double v : rec.raw) {
            out << ',';
            if (!std::isnan(v)) out << fmt::format("{}", v);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Cleaning

std::vector<DailyRecord> align_labels(std::span<const DailyRecord> records, int window_days) {
    if (window_days < 0) throw Error(ErrorCode::InvalidConfig, "window_days must be >= 0");
    // Labeled anchors per user, sorted by date.
    std::map<std::string, std::vector<std::pair<Date, int>>> anchors;
    for (const auto &r : records) {
        if (r.phq4) anchors[r.user_id].emplace_back(r.date, *r.phq4);
    }
    for (auto &[user, list] : anchors) std::sort(list.begin(), list.end());

    std::vector<DailyRecord> out;
    for (const auto &r : records) {
        auto it = anchors.find(r.user_id);
        if (it == anchors.end()) continue;
        const auto &list = it->second;
        auto upper = std::lower_bound(list.begin(), list.end(), r.date,
                                      [](const std::pair<Date, int> &a, Date d) { return a.first < d; });
        std::optional<int> best;
        long best_distance = window_days + 1L;
        // Candidate on or after the date, then the closest one before it; the
        // earlier candidate wins ties.
        if (upper != list.end()) {
            const long dist = (upper->first - r.date).count();
            if (dist <= window_days) {
                best = upper->second;
                best_distance = dist;
            }
        }
        if (upper != list.begin()) {
            const auto &prev = *std::prev(upper);
            const long dist = (r.date - prev.first).count();
            if (dist <= window_days && dist <= best_distance) best = prev.second;
        }
        if (!best) continue;
        DailyRecord copy = r;
        copy.phq4 = best;
        out.push_back(std::move(copy));
    }
    return out;
}

std::vector<DailyRecord> fill_missing(std::vector<DailyRecord> records, FillPolicy policy) {
    if (records.empty()) return records;
    const std::size_t width = records.front().raw.size();
    std::vector<double> fill(width, 0.0);
    if (policy == FillPolicy::PerFeatureMean) {
        for (std::size_t j = 0; j < width; ++j) {
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto &r : records) {
                if (!std::isnan(r.raw[j])) {
                    sum += r.raw[j];
                    ++count;
                }
            }
            if (count == 0) throw Error(ErrorCode::EmptyFeature, fmt::format("feature column {} has no observed value", j));
            fill[j] = sum / static_cast<double>(count);
        }
    }
    for (auto &r : records) {
        for (std::size_t j = 0; j < width; ++j) {
            if (std::isnan(r.raw[j])) r.raw[j] = fill[j];
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Scaling

MinMaxScaler::MinMaxScaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw Error(ErrorCode::LengthMismatch, "scaler min/max widths differ");
}

MinMaxScaler MinMaxScaler::fit(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyData, "cannot fit a scaler on zero rows");
    std::vector<double> lo = rows.front();
    std::vector<double> hi = rows.front();
    for (const auto &row : rows) {
        if (row.size() != lo.size()) throw Error(ErrorCode::ArityMismatch, "rows of unequal width");
        for (std::size_t j = 0; j < row.size(); ++j) {
            lo[j] = std::min(lo[j], row[j]);
            hi[j] = std::max(hi[j], row[j]);
        }
    }
    return MinMaxScaler(std::move(lo), std::move(hi));
}

double MinMaxScaler::transform(std::size_t j, double value) const {
    const double range = max_[j] - min_[j];
    if (!(range > 0.0)) return 0.0;
    return (value - min_[j]) / range;
}

std::vector<double> MinMaxScaler::transform(std::span<const double> row) const {
    if (row.size() != min_.size()) throw Error(ErrorCode::ArityMismatch, "row width differs from scaler width");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = transform(j, row[j]);
    return out;
}

std::vector<std::vector<double>> MinMaxScaler::transform(std::span<const std::vector<double>> rows) const {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto &row : rows) out.push_back(transform(row));
    return out;
}

MinMaxScaler fit_scaler(std::span<const DailyRecord> train_records) {
    std::vector<std::vector<double>> rows;
    rows.reserve(train_records.size());
    for (const auto &r : train_records) rows.push_back(r.raw);
    return MinMaxScaler::fit(rows);
}

std::vector<DailyRecord> apply_scaler(const MinMaxScaler &scaler, std::vector<DailyRecord> records) {
    for (auto &r : records) r.raw = scaler.transform(r.raw);
    return records;
}

// ---------------------------------------------------------------------------
// Grouping, splitting, balancing

std::size_t UserDataset::labeled_count() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto &r) { return r.labeled(); }));
}

std::vector<UserDataset> group_by_user(std::vector<DailyRecord> records) {
    std::map<std::string, std::vector<DailyRecord>> by_user;
    for (auto &r : records) by_user[r.user_id].push_back(std::move(r));
    std::vector<UserDataset> out;
    out.reserve(by_user.size());
    for (auto &[user, list] : by_user) {
        std::stable_sort(list.begin(), list.end(), [](const auto &a, const auto &b) { return a.date < b.date; });
        for (std::size_t i = 1; i < list.size(); ++i) {
            if (list[i].date == list[i - 1].date) {
                throw Error(ErrorCode::DuplicateUserDate,
                            fmt::format("user '{}' has two records on {}", user, format_date(list[i].date)));
            }
        }
        out.push_back(UserDataset{user, std::move(list), std::nullopt});
    }
    return out;
}

Split split_holdout(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(ErrorCode::InvalidConfig, "test_fraction must lie in (0, 1)");
    if (n < 2) throw Error(ErrorCode::TooFewRecords, fmt::format("holdout split needs >= 2 records, got {}", n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(order, rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    Split split;
    split.seed = seed;
    split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

std::vector<Split> kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::InvalidConfig, "kfold needs k >= 2");
    if (n < k) throw Error(ErrorCode::TooFewRecords, fmt::format("kfold with k = {} needs >= {} records, got {}", k, k, n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(order, rng);
    std::vector<Split> folds(k);
    std::size_t begin = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        auto &split = folds[f];
        split.seed = seed;
        split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                          order.begin() + static_cast<std::ptrdiff_t>(begin + size));
        split.train.reserve(n - size);
        split.train.insert(split.train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(begin));
        split.train.insert(split.train.end(), order.begin() + static_cast<std::ptrdiff_t>(begin + size), order.end());
        std::sort(split.test.begin(), split.test.end());
        std::sort(split.train.begin(), split.train.end());
        begin += size;
    }
    return folds;
}

std::vector<std::size_t> oversample(std::span<const std::size_t> train_indices, std::span<const Phq4Category> labels,
                                    std::uint64_t seed) {
    std::array<std::vector<std::size_t>, kNumCategories> by_class;
    for (std::size_t idx : train_indices) {
        if (idx >= labels.size()) throw Error(ErrorCode::OutOfRange, "oversample: index beyond label array");
        by_class[index_of(labels[idx])].push_back(idx);
    }
    std::size_t majority = 0;
    for (const auto &members : by_class) majority = std::max(majority, members.size());

    std::vector<std::size_t> out(train_indices.begin(), train_indices.end());
    Rng rng(seed);
    for (const auto &members : by_class) {
        if (members.empty()) continue;
        for (std::size_t i = members.size(); i < majority; ++i) out.push_back(members[uniform_index(rng, members.size())]);
    }
    return out;
}

std::vector<UserDataset> filter_users(std::vector<UserDataset> datasets, std::size_t min_points) {
    std::vector<UserDataset> out;
    for (auto &ds : datasets) {
        if (ds.labeled_count() >= min_points) out.push_back(std::move(ds));
    }
    return out;
}

ClassCounts class_distribution(std::span<const DailyRecord> records) {
    ClassCounts counts{};
    for (const auto &r : records) {
        if (r.phq4) ++counts[index_of(r.category())];
    }
    return counts;
}

}  // namespace ihope
