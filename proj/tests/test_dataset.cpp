#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ihope/dataset.hpp"
#include "ihope/random.hpp"
#include "test_util.hpp"

using namespace ihope;
using ihope::test::make_record;

namespace {

RawSchema two_feature_schema() { return RawSchema({{"sleep_duration", "hours"}, {"footsteps", "count"}}); }

std::vector<DailyRecord> parse_text(const std::string &text, const RawSchema &schema) {
    std::istringstream in(text);
    return parse_records(in, schema, "test.csv");
}

}  // namespace

TEST(Phq4, TableBoundaries) {
    EXPECT_EQ(categorize_phq4(0), Phq4Category::Normal);
    EXPECT_EQ(categorize_phq4(3), Phq4Category::Normal);
    EXPECT_EQ(categorize_phq4(4), Phq4Category::Mild);
    EXPECT_EQ(categorize_phq4(6), Phq4Category::Mild);
    EXPECT_EQ(categorize_phq4(7), Phq4Category::Moderate);
    EXPECT_EQ(categorize_phq4(9), Phq4Category::Moderate);
    EXPECT_EQ(categorize_phq4(10), Phq4Category::Severe);
    EXPECT_EQ(categorize_phq4(12), Phq4Category::Severe);
}

TEST(Phq4, OutOfRangeRejected) {
    EXPECT_IHOPE_ERROR(categorize_phq4(-1), ErrorCode::OutOfRange);
    EXPECT_IHOPE_ERROR(categorize_phq4(13), ErrorCode::OutOfRange);
}

TEST(Phq4, MonotoneAndTotal) {
    for (int s = 1; s <= 12; ++s) EXPECT_LE(index_of(categorize_phq4(s - 1)), index_of(categorize_phq4(s)));
}

TEST(Dates, RoundTrip) {
    EXPECT_EQ(format_date(parse_date("2019-01-07")), "2019-01-07");
    EXPECT_EQ(parse_date("2019-03-01") - parse_date("2019-02-28"), std::chrono::days(1));
    EXPECT_IHOPE_ERROR(parse_date("2019-02-30"), ErrorCode::MalformedValue);
    EXPECT_IHOPE_ERROR(parse_date("07/01/2019"), ErrorCode::MalformedValue);
}

TEST(ParseRecords, DirectFieldMapping) {
    const auto recs = parse_text("user_id,date,phq4,sleep_duration,footsteps\nu1,2019-01-07,3,0.5,1200\n", two_feature_schema());
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].user_id, "u1");
    EXPECT_EQ(format_date(recs[0].date), "2019-01-07");
    EXPECT_EQ(recs[0].phq4, 3);
    EXPECT_DOUBLE_EQ(recs[0].raw[0], 0.5);
    EXPECT_DOUBLE_EQ(recs[0].raw[1], 1200.0);
}

TEST(ParseRecords, ColumnOrderFollowsSchemaAndExtrasIgnored) {
    const auto recs =
        parse_text("footsteps,user_id,extra,date,sleep_duration\n900,u2,zzz,2019-01-08,7.5\n", two_feature_schema());
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_FALSE(recs[0].labeled());
    EXPECT_DOUBLE_EQ(recs[0].raw[0], 7.5);
    EXPECT_DOUBLE_EQ(recs[0].raw[1], 900.0);
}

TEST(ParseRecords, EmptyCellIsMissingNotZero) {
    const auto recs = parse_text("user_id,date,phq4,sleep_duration,footsteps\nu1,2019-01-07,,,5\n", two_feature_schema());
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_FALSE(recs[0].labeled());
    EXPECT_TRUE(recs[0].is_missing(0));
    EXPECT_FALSE(recs[0].is_missing(1));
}

TEST(ParseRecords, MissingColumn) {
    EXPECT_IHOPE_ERROR(parse_text("user_id,date,phq4,footsteps\nu1,2019-01-07,3,5\n", two_feature_schema()),
                       ErrorCode::MissingColumn);
}

TEST(ParseRecords, MalformedValueNamesRowAndColumn) {
    try {
        parse_text("user_id,date,phq4,sleep_duration,footsteps\nu1,2019-01-07,3,abc,5\n", two_feature_schema());
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedValue);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("sleep_duration"), std::string::npos) << msg;
        EXPECT_NE(msg.find('2'), std::string::npos) << msg;
    }
    EXPECT_IHOPE_ERROR(parse_text("user_id,date,phq4,sleep_duration,footsteps\nu1,2019-01-07,3,-1,5\n", two_feature_schema()),
                       ErrorCode::MalformedValue);
    EXPECT_IHOPE_ERROR(parse_text("user_id,date,phq4,sleep_duration,footsteps\nu1,2019-01-07,13,1,5\n", two_feature_schema()),
                       ErrorCode::OutOfRange);
}

TEST(ParseRecords, DuplicateUserDate) {
    EXPECT_IHOPE_ERROR(parse_text("user_id,date,sleep_duration,footsteps\nu1,2019-01-07,1,2\nu1,2019-01-07,3,4\n",
                                  two_feature_schema()),
                       ErrorCode::DuplicateUserDate);
}

TEST(ParseRecords, WriteThenParseRoundTrips) {
    const auto schema = two_feature_schema();
    std::vector<DailyRecord> recs{make_record("a", "2019-01-01", {0.1, 3.0}, 4),
                                  make_record("a", "2019-01-02", {kMissing, 1.0 / 3.0}),
                                  make_record("b", "2019-01-01", {7.25, 0.0}, 12)};
    std::ostringstream out;
    write_records(out, recs, schema);
    const auto back = parse_text(out.str(), schema);
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].user_id, recs[i].user_id);
        EXPECT_EQ(back[i].date, recs[i].date);
        EXPECT_EQ(back[i].phq4, recs[i].phq4);
        for (std::size_t j = 0; j < 2; ++j) {
            if (recs[i].is_missing(j)) {
                EXPECT_TRUE(back[i].is_missing(j));
            } else {
                EXPECT_EQ(back[i].raw[j], recs[i].raw[j]);
            }
        }
    }
}

TEST(RawSchemaJson, AcceptsStringsAndObjects) {
    const auto s = raw_schema_from_json_text(R"(["a", {"name": "b", "unit": "hours"}])");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.features()[1].unit, "hours");
    EXPECT_EQ(s.index_of("b"), 1u);
    EXPECT_IHOPE_ERROR(s.index_of("c"), ErrorCode::UnknownFeature);
    const auto again = raw_schema_from_json_text(raw_schema_to_json_text(s));
    EXPECT_EQ(again.names(), s.names());
}

TEST(AlignLabels, NearestWithinWindow) {
    std::vector<DailyRecord> recs{make_record("u", "2019-01-03", {1}, 5), make_record("u", "2019-01-05", {2})};
    const auto out = align_labels(recs, 7);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[1].phq4, 5);
}

TEST(AlignLabels, TieGoesToEarlier) {
    std::vector<DailyRecord> recs{make_record("u", "2019-01-03", {1}, 2), make_record("u", "2019-01-05", {2}),
                                  make_record("u", "2019-01-07", {3}, 11)};
    const auto out = align_labels(recs, 7);
    const auto it = std::find_if(out.begin(), out.end(), [](const DailyRecord &r) { return format_date(r.date) == "2019-01-05"; });
    ASSERT_NE(it, out.end());
    EXPECT_EQ(it->phq4, 2);
}

TEST(AlignLabels, OutOfWindowDroppedAndUsersIsolated) {
    std::vector<DailyRecord> recs{make_record("u", "2019-01-01", {1}, 2), make_record("u", "2019-01-20", {2}),
                                  make_record("v", "2019-01-02", {3})};
    const auto out = align_labels(recs, 7);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].user_id, "u");
    EXPECT_IHOPE_ERROR(align_labels(recs, -1), ErrorCode::InvalidConfig);
}

TEST(AlignLabels, NeverBorrowsAcrossUsersOrWindow) {
    Rng rng(5);
    std::vector<DailyRecord> recs;
    for (int u = 0; u < 4; ++u) {
        for (int d = 0; d < 40; ++d) {
            std::optional<int> label;
            if (bernoulli(rng, 0.15)) label = static_cast<int>(uniform_index(rng, 13));
            recs.push_back(make_record("u" + std::to_string(u), format_date(parse_date("2019-01-01") + std::chrono::days(d)),
                                       {0.0}, label));
        }
    }
    const int window = 3;
    const auto out = align_labels(recs, window);
    for (const auto &r : out) {
        bool found = false;
        for (const auto &src : recs) {
            if (src.user_id == r.user_id && src.phq4 == r.phq4 && std::abs((src.date - r.date).count()) <= window) found = true;
        }
        EXPECT_TRUE(found) << r.user_id << " " << format_date(r.date);
    }
}

TEST(FillMissing, ZeroAndMean) {
    std::vector<DailyRecord> recs{make_record("u", "2019-01-01", {2.0, kMissing}),
                                  make_record("u", "2019-01-02", {kMissing, 1.0}),
                                  make_record("u", "2019-01-03", {4.0, 1.0})};
    const auto zero = fill_missing(recs, FillPolicy::Zero);
    EXPECT_EQ(zero[1].raw[0], 0.0);
    EXPECT_EQ(zero[0].raw[1], 0.0);
    const auto mean = fill_missing(recs, FillPolicy::PerFeatureMean);
    EXPECT_DOUBLE_EQ(mean[1].raw[0], 3.0);
    EXPECT_DOUBLE_EQ(mean[0].raw[1], 1.0);
    for (const auto &r : mean) EXPECT_FALSE(r.has_missing());
}

TEST(FillMissing, FeatureNeverObserved) {
    std::vector<DailyRecord> recs{make_record("u", "2019-01-01", {kMissing, 1.0}), make_record("u", "2019-01-02", {kMissing, 2.0})};
    EXPECT_IHOPE_ERROR(fill_missing(recs, FillPolicy::PerFeatureMean), ErrorCode::EmptyFeature);
    EXPECT_NO_THROW(fill_missing(recs, FillPolicy::Zero));
}

TEST(Scaler, MinMaxDefinition) {
    const std::vector<std::vector<double>> rows{{0.0, 5.0}, {2.0, 5.0}, {4.0, 5.0}};
    const auto s = MinMaxScaler::fit(rows);
    EXPECT_DOUBLE_EQ(s.transform(0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(s.transform(0, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(s.transform(0, 4.0), 1.0);
    EXPECT_DOUBLE_EQ(s.transform(1, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(s.transform(0, 6.0), 1.5);
}

TEST(Scaler, TrainingDataSpansUnitInterval) {
    Rng rng(11);
    std::vector<DailyRecord> recs;
    for (int i = 0; i < 30; ++i) {
        recs.push_back(make_record("u", format_date(parse_date("2019-01-01") + std::chrono::days(i)),
                                   {uniform(rng, 2, 9), 3.0, 100 * uniform01(rng)}));
    }
    const auto scaled = apply_scaler(fit_scaler(recs), recs);
    for (std::size_t j : {0u, 2u}) {
        double lo = 1e9;
        double hi = -1e9;
        for (const auto &r : scaled) {
            lo = std::min(lo, r.raw[j]);
            hi = std::max(hi, r.raw[j]);
        }
        EXPECT_DOUBLE_EQ(lo, 0.0);
        EXPECT_DOUBLE_EQ(hi, 1.0);
    }
    for (const auto &r : scaled) EXPECT_EQ(r.raw[1], 0.0);
}

TEST(GroupByUser, SortsUsersAndDates) {
    std::vector<DailyRecord> recs{make_record("b", "2019-01-02", {1}), make_record("a", "2019-01-03", {1}, 1),
                                  make_record("b", "2019-01-01", {1}, 2)};
    const auto users = group_by_user(recs);
    ASSERT_EQ(users.size(), 2u);
    EXPECT_EQ(users[0].user_id, "a");
    EXPECT_EQ(users[1].user_id, "b");
    EXPECT_LT(users[1].records[0].date, users[1].records[1].date);
    EXPECT_EQ(users[1].labeled_count(), 1u);
    recs.push_back(make_record("a", "2019-01-03", {2}));
    EXPECT_IHOPE_ERROR(group_by_user(recs), ErrorCode::DuplicateUserDate);
}

TEST(SplitHoldout, CardinalityAndDeterminism) {
    const auto s = split_holdout(10, 0.2, 7);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.test.size(), 2u);
    const auto again = split_holdout(10, 0.2, 7);
    EXPECT_EQ(s.train, again.train);
    EXPECT_EQ(s.test, again.test);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 10u);
    EXPECT_IHOPE_ERROR(split_holdout(1, 0.2, 7), ErrorCode::TooFewRecords);
}

TEST(KFold, SizesAndPartition) {
    const auto even = kfold(10, 5, 3);
    for (const auto &f : even) EXPECT_EQ(f.test.size(), 2u);
    const auto odd = kfold(11, 5, 3);
    std::vector<std::size_t> sizes;
    for (const auto &f : odd) sizes.push_back(f.test.size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
    std::multiset<std::size_t> seen;
    for (const auto &f : odd) {
        seen.insert(f.test.begin(), f.test.end());
        EXPECT_EQ(f.train.size() + f.test.size(), 11u);
        for (std::size_t t : f.test) EXPECT_EQ(std::count(f.train.begin(), f.train.end(), t), 0);
    }
    EXPECT_EQ(seen.size(), 11u);
    EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 11u);
    EXPECT_IHOPE_ERROR(kfold(3, 5, 1), ErrorCode::TooFewRecords);
}

TEST(Oversample, BalancesToMajority) {
    std::vector<Phq4Category> labels(10, Phq4Category::Normal);
    labels[8] = labels[9] = Phq4Category::Mild;
    std::vector<std::size_t> train(10);
    std::iota(train.begin(), train.end(), 0);
    const auto out = oversample(train, labels, 1);
    std::array<std::size_t, 4> counts{};
    for (std::size_t i : out) ++counts[index_of(labels[i])];
    EXPECT_EQ(counts[0], 8u);
    EXPECT_EQ(counts[1], 8u);
    EXPECT_EQ(counts[2], 0u);
}

TEST(Oversample, BalancedAndSingleClassUnchanged) {
    std::vector<Phq4Category> labels;
    for (int c = 0; c < 4; ++c) labels.insert(labels.end(), 4, static_cast<Phq4Category>(c));
    std::vector<std::size_t> train(labels.size());
    std::iota(train.begin(), train.end(), 0);
    EXPECT_EQ(oversample(train, labels, 2), train);
    std::vector<Phq4Category> one(5, Phq4Category::Severe);
    std::vector<std::size_t> idx{0, 1, 2, 3, 4};
    EXPECT_EQ(oversample(idx, one, 2), idx);
}

TEST(Oversample, DrawsOnlyFromTrainingIndices) {
    Rng rng(3);
    std::vector<Phq4Category> labels(200);
    for (auto &l : labels) l = static_cast<Phq4Category>(uniform_index(rng, 4));
    const auto split = split_holdout(labels.size(), 0.25, 9);
    const auto out = oversample(split.train, labels, 4);
    const std::set<std::size_t> train(split.train.begin(), split.train.end());
    for (std::size_t i : out) EXPECT_EQ(train.count(i), 1u);
    EXPECT_EQ(out, oversample(split.train, labels, 4));
}

TEST(FilterUsers, Boundary) {
    std::vector<UserDataset> users(3);
    for (std::size_t k = 0; k < 3; ++k) {
        users[k].user_id = "u" + std::to_string(k);
        const std::size_t n = 158 + k;  // 158, 159, 160
        for (std::size_t d = 0; d < n; ++d) {
            users[k].records.push_back(make_record(users[k].user_id, format_date(parse_date("2019-01-01") + std::chrono::days(d)), {0}, 1));
        }
    }
    const auto kept = filter_users(users, 160);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].user_id, "u2");
    EXPECT_EQ(filter_users(users, 0).size(), 3u);
}

TEST(ClassDistribution, CountsLabeledOnly) {
    std::vector<DailyRecord> recs{make_record("u", "2019-01-01", {0}, 2), make_record("u", "2019-01-02", {0}, 5),
                                  make_record("u", "2019-01-03", {0}, 5), make_record("u", "2019-01-04", {0}, 11),
                                  make_record("u", "2019-01-05", {0})};
    EXPECT_EQ(class_distribution(recs), (ClassCounts{1, 2, 0, 1}));
    EXPECT_EQ(class_distribution({}), (ClassCounts{0, 0, 0, 0}));
}
