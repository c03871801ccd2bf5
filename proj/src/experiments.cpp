#include "ihope/experiments.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "ihope/error.hpp"
#include "ihope/parallel.hpp"
#include "ihope/random.hpp"
#include "json.hpp"

namespace ihope {

std::string_view to_string(PipelineKind kind) noexcept {
    switch (kind) {
        case PipelineKind::Baseline1: return "baseline1";
        case PipelineKind::Baseline2: return "baseline2";
        case PipelineKind::Baseline3: return "baseline3";
        case PipelineKind::IHope: return "ihope";
        case PipelineKind::Custom: return "custom";
    }
    return "?";
}

std::string_view to_string(FeaturePolicy policy) noexcept {
    switch (policy) {
        case FeaturePolicy::AllRaw: return "all_raw";
        case FeaturePolicy::TopFraction: return "top_fraction";
        case FeaturePolicy::Engineered: return "engineered";
        case FeaturePolicy::LabelScores: return "label_scores";
        case FeaturePolicy::Explicit: return "explicit";
    }
    return "?";
}

std::string_view to_string(Personalization p) noexcept {
    return p == Personalization::Aggregated ? "aggregated" : "per_user";
}

PipelineKind pipeline_kind_from_string(std::string_view name) {
    for (auto k : {PipelineKind::Baseline1, PipelineKind::Baseline2, PipelineKind::Baseline3, PipelineKind::IHope,
                   PipelineKind::Custom}) {
        if (name == to_string(k)) return k;
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown pipeline spec '{}'", name));
}

PipelineSpec PipelineSpec::preset(PipelineKind kind, std::uint64_t seed) {
    PipelineSpec s;
    s.kind = kind;
    s.seed = seed;
    switch (kind) {
        case PipelineKind::Baseline1:
            s.feature_policy = FeaturePolicy::AllRaw;
            s.personalization = Personalization::Aggregated;
            break;
        case PipelineKind::Baseline2:
            s.feature_policy = FeaturePolicy::AllRaw;
            s.personalization = Personalization::PerUser;
            break;
        case PipelineKind::Baseline3:
            s.feature_policy = FeaturePolicy::TopFraction;
            s.personalization = Personalization::PerUser;
            break;
        case PipelineKind::IHope:
            s.feature_policy = FeaturePolicy::LabelScores;
            s.personalization = Personalization::PerUser;
            break;
        case PipelineKind::Custom:
            s.feature_policy = FeaturePolicy::Explicit;
            s.personalization = Personalization::Aggregated;
            break;
    }
    return s;
}

void PipelineSpec::validate() const {
    auto expect = [&](FeaturePolicy policy, Personalization p) {
        if (feature_policy != policy || personalization != p) {
            throw Error(ErrorCode::InvalidConfig,
                        fmt::format("{} requires {} + {}", to_string(kind), to_string(p), to_string(policy)));
        }
    };
    switch (kind) {
        case PipelineKind::Baseline1: expect(FeaturePolicy::AllRaw, Personalization::Aggregated); break;
        case PipelineKind::Baseline2: expect(FeaturePolicy::AllRaw, Personalization::PerUser); break;
        case PipelineKind::Baseline3:
            expect(FeaturePolicy::TopFraction, Personalization::PerUser);
            if (top_fraction != 0.5) throw Error(ErrorCode::InvalidConfig, "baseline3 keeps the top 0.5 of features");
            break;
        case PipelineKind::IHope: expect(FeaturePolicy::LabelScores, Personalization::PerUser); break;
        case PipelineKind::Custom: break;
    }
    if (feature_policy == FeaturePolicy::Explicit && features.empty()) {
        throw Error(ErrorCode::InvalidConfig, "explicit feature policy needs a feature list");
    }
    if (feature_policy == FeaturePolicy::TopFraction && !(top_fraction > 0.0 && top_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "top_fraction must lie in (0, 1]");
    }
    if (cv.kind == CvScheme::Kind::KFold && cv.folds < 2) throw Error(ErrorCode::InvalidConfig, "kfold needs >= 2 folds");
    if (cv.kind == CvScheme::Kind::Holdout && !(cv.test_fraction > 0.0 && cv.test_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "holdout test_fraction must lie in (0, 1)");
    }
}

double PipelineResult::mean_fold_accuracy() const {
    if (fold_accuracies.empty()) return 0.0;
    return std::accumulate(fold_accuracies.begin(), fold_accuracies.end(), 0.0) /
           static_cast<double>(fold_accuracies.size());
}

namespace {

struct Unit {
    std::string id;
    std::vector<std::vector<double>> raw;
    std::vector<std::vector<double>> eng;
    std::vector<Phq4Category> y;
    std::vector<Split> splits;
};

// A model input column: engineered (true) or raw (false) source plus index.
struct Column {
    bool engineered = false;
    std::size_t index = 0;
};

struct UnitOutcome {
    std::vector<Phq4Category> predictions;
    std::vector<Phq4Category> truths;
    UnitArtifacts artifacts;
};

std::vector<double> pick(const Unit &unit, std::size_t row, std::span<const Column> cols) {
    std::vector<double> out;
    out.reserve(cols.size());
    for (const auto &c : cols) out.push_back(c.engineered ? unit.eng[row][c.index] : unit.raw[row][c.index]);
    return out;
}

std::vector<Unit> build_units(std::span<const UserDataset> datasets, const RawSchema &raw_schema,
                              const FeatureEngineer &engineer, const PipelineSpec &spec) {
    std::vector<Unit> users;
    for (const auto &ds : datasets) {
        Unit u;
        u.id = ds.user_id;
        for (const auto &rec : ds.records) {
            if (rec.raw.size() != raw_schema.size()) {
                throw Error(ErrorCode::ArityMismatch, fmt::format("user {}: record width {} != schema width {}", ds.user_id,
                                                                  rec.raw.size(), raw_schema.size()));
            }
            if (!rec.labeled()) {
                throw Error(ErrorCode::EmptyData,
                            fmt::format("user {}: unlabeled record on {}", ds.user_id, format_date(rec.date)));
            }
            u.raw.push_back(rec.raw);
            u.eng.push_back(engineer(rec).values);
            u.y.push_back(rec.category());
        }
        users.push_back(std::move(u));
    }
    if (users.empty()) throw Error(ErrorCode::EmptyData, "no datasets");
    if (spec.personalization == Personalization::PerUser) return users;

    Unit pooled;
    pooled.id = "all";
    for (auto &u : users) {
        for (std::size_t i = 0; i < u.y.size(); ++i) {
            pooled.raw.push_back(std::move(u.raw[i]));
            pooled.eng.push_back(std::move(u.eng[i]));
            pooled.y.push_back(u.y[i]);
        }
    }
    return {std::move(pooled)};
}

void assign_splits(std::vector<Unit> &units, const PipelineSpec &spec) {
    for (auto &u : units) {
        const std::uint64_t seed = derive_seed(spec.seed, "pipeline.split", fnv1a64(u.id));
        if (spec.cv.kind == CvScheme::Kind::KFold) {
            u.splits = kfold(u.y.size(), spec.cv.folds, seed);
        } else {
            u.splits = {split_holdout(u.y.size(), spec.cv.test_fraction, seed)};
        }
    }
}

std::vector<Column> resolve_explicit(const std::vector<std::string> &names, const FeatureSchema &eng,
                                     const RawSchema &raw) {
    std::vector<Column> cols;
    for (const auto &n : names) {
        if (auto e = eng.find(n)) {
            cols.push_back({true, *e});
        } else if (auto r = raw.find(n)) {
            cols.push_back({false, *r});
        } else {
            throw Error(ErrorCode::UnknownFeature, fmt::format("feature '{}' is neither engineered nor raw", n));
        }
    }
    return cols;
}

UnitOutcome run_unit(const Unit &unit, std::size_t fold, const PipelineSpec &spec, const PipelineOptions &options,
                     std::span<const Column> cols, const BoundLabelMap *bound, const ThresholdTable *thresholds) {
    const Split &split = unit.splits[fold];
    const std::uint64_t unit_key = fnv1a64(unit.id);
    UnitOutcome out;
    out.artifacts.unit_id = unit.id;

    // Model inputs for every record of the unit, indexed like unit.y.
    std::vector<std::vector<double>> inputs(unit.y.size());
    if (spec.feature_policy == FeaturePolicy::LabelScores) {
        std::vector<std::vector<double>> train_rows;
        train_rows.reserve(split.train.size());
        for (std::size_t i : split.train) train_rows.push_back(unit.eng[i]);
        ForestConfig fc = options.label_forest;
        fc.mode = ForestMode::Regression;
        auto model = fit_user_label_model(train_rows, *bound, *thresholds, fc,
                                          derive_seed(spec.seed, "pipeline.labels", unit_key, fold));
        for (std::size_t i : split.train) inputs[i] = score_all(unit.eng[i], model.scorer).as_vector();
        for (std::size_t i : split.test) inputs[i] = score_all(unit.eng[i], model.scorer).as_vector();

        std::vector<std::vector<double>> score_rows;
        std::vector<double> targets;
        for (std::size_t i : split.train) {
            score_rows.push_back(inputs[i]);
            targets.push_back(static_cast<double>(index_of(unit.y[i])));
        }
        ForestConfig ac = options.attribution_forest;
        ac.mode = ForestMode::Classification;
        ac.seed = derive_seed(spec.seed, "pipeline.attribution", unit_key, fold);
        out.artifacts.label_importance = fit_forest(score_rows, targets, ac).importances;
        out.artifacts.label_model = std::move(model);
    } else {
        for (std::size_t i : split.train) inputs[i] = pick(unit, i, cols);
        for (std::size_t i : split.test) inputs[i] = pick(unit, i, cols);
    }

    std::vector<std::vector<double>> train_inputs;
    for (std::size_t i : split.train) train_inputs.push_back(inputs[i]);
    out.artifacts.input_scaler = MinMaxScaler::fit(train_inputs);
    const auto &scaler = out.artifacts.input_scaler;

    const auto balanced = oversample(split.train, unit.y, derive_seed(spec.seed, "pipeline.oversample", unit_key, fold));
    std::vector<std::vector<double>> x;
    std::vector<Phq4Category> y;
    x.reserve(balanced.size());
    y.reserve(balanced.size());
    for (std::size_t i : balanced) {
        x.push_back(scaler.transform(inputs[i]));
        y.push_back(unit.y[i]);
    }

    MlpConfig mc = options.mlp;
    mc.input_dim = inputs[split.train.front()].size();
    mc.seed = derive_seed(spec.seed, "pipeline.mlp", unit_key, fold);
    out.artifacts.mlp = train(x, y, mc);

    for (std::size_t i : split.test) {
        out.predictions.push_back(predict_category(out.artifacts.mlp, scaler.transform(inputs[i])));
        out.truths.push_back(unit.y[i]);
    }
    return out;
}

}  // namespace

PipelineResult run_pipeline(std::span<const UserDataset> datasets, const RawSchema &raw_schema, const PipelineSpec &spec,
                            const PipelineOptions &options) {
    spec.validate();
    options.feature_config.validate();
    const FeatureEngineer engineer(options.feature_config, raw_schema);
    std::vector<Unit> units = build_units(datasets, raw_schema, engineer, spec);
    assign_splits(units, spec);

    PipelineResult result;
    result.spec = spec;

    std::optional<BoundLabelMap> bound;
    std::vector<Column> fixed_cols;
    switch (spec.feature_policy) {
        case FeaturePolicy::AllRaw:
            for (std::size_t j = 0; j < raw_schema.size(); ++j) fixed_cols.push_back({false, j});
            result.input_features = raw_schema.names();
            break;
        case FeaturePolicy::Engineered:
            for (std::size_t j = 0; j < engineer.schema().size(); ++j) fixed_cols.push_back({true, j});
            result.input_features = engineer.schema().names;
            break;
        case FeaturePolicy::Explicit:
            fixed_cols = resolve_explicit(spec.features, engineer.schema(), raw_schema);
            result.input_features = spec.features;
            break;
        case FeaturePolicy::LabelScores:
            bound.emplace(options.label_map, engineer.schema());
            for (auto l : kAllLabels) result.input_features.emplace_back(to_string(l));
            break;
        case FeaturePolicy::TopFraction: break;  // chosen per fold
    }

    const std::size_t n_folds = spec.cv.n_folds();
    double best_accuracy = -1.0;
    for (std::size_t fold = 0; fold < n_folds; ++fold) {
        std::vector<Column> cols = fixed_cols;
        std::vector<std::string> fold_features;
        std::optional<ThresholdTable> thresholds;

        if (spec.feature_policy == FeaturePolicy::LabelScores) {
            std::vector<std::vector<double>> pooled;
            for (const auto &u : units) {
                for (std::size_t i : u.splits[fold].train) pooled.push_back(u.eng[i]);
            }
            thresholds = compute_thresholds(pooled, *bound);
        } else if (spec.feature_policy == FeaturePolicy::TopFraction) {
            std::vector<std::vector<double>> pooled;
            std::vector<Phq4Category> labels;
            for (const auto &u : units) {
                for (std::size_t i : u.splits[fold].train) {
                    pooled.push_back(u.raw[i]);
                    labels.push_back(u.y[i]);
                }
            }
            ForestConfig rc = options.ranking_forest;
            rc.seed = derive_seed(spec.seed, "pipeline.ranking", fold);
            const auto names = raw_schema.names();
            const auto ranking = rank_global_importance(pooled, labels, names, rc);
            fold_features = select_top_fraction(ranking, spec.top_fraction);
            cols.clear();
            for (const auto &n : fold_features) cols.push_back({false, raw_schema.index_of(n)});
        }

        std::vector<UnitOutcome> outcomes(units.size());
        parallel_for(units.size(), options.jobs, [&](std::size_t k) {
            outcomes[k] = run_unit(units[k], fold, spec, options, cols, bound ? &*bound : nullptr,
                                   thresholds ? &*thresholds : nullptr);
        });

        std::vector<Phq4Category> preds;
        std::vector<Phq4Category> truths;
        std::vector<UserBreakdown> per_user;
        for (const auto &o : outcomes) {
            preds.insert(preds.end(), o.predictions.begin(), o.predictions.end());
            truths.insert(truths.end(), o.truths.begin(), o.truths.end());
            if (spec.personalization == Personalization::PerUser) {
                UserBreakdown b;
                b.user_id = o.artifacts.unit_id;
                b.n_test = o.truths.size();
                for (std::size_t i = 0; i < o.truths.size(); ++i) b.n_correct += o.predictions[i] == o.truths[i];
                b.accuracy = b.n_test ? static_cast<double>(b.n_correct) / static_cast<double>(b.n_test) : 0.0;
                per_user.push_back(std::move(b));
            }
        }
        EvaluationReport report = evaluate(preds, truths);
        report.per_user = std::move(per_user);
        result.fold_accuracies.push_back(report.accuracy);

        // Strictly better only: ties keep the lowest fold index.
        if (report.accuracy > best_accuracy) {
            best_accuracy = report.accuracy;
            result.best_fold = fold;
            result.report = std::move(report);
            result.thresholds = std::move(thresholds);
            result.artifacts.clear();
            for (auto &o : outcomes) result.artifacts.push_back(std::move(o.artifacts));
            if (spec.feature_policy == FeaturePolicy::TopFraction) result.input_features = fold_features;
        }
    }
    return result;
}

PipelineResult motivation_probe(std::span<const UserDataset> datasets, const RawSchema &raw_schema,
                                const std::vector<std::string> &features, const PipelineOptions &options,
                                std::uint64_t seed) {
    if (features.size() != 2) {
        throw Error(ErrorCode::InvalidConfig, fmt::format("the probe takes exactly 2 features, got {}", features.size()));
    }
    PipelineSpec spec = PipelineSpec::preset(PipelineKind::Custom, seed);
    spec.features = features;
    spec.cv.kind = CvScheme::Kind::Holdout;
    spec.cv.test_fraction = 0.2;
    return run_pipeline(datasets, raw_schema, spec, options);
}

std::string report_to_json_text(const PipelineResult &result) {
    using nlohmann::ordered_json;
    const auto &spec = result.spec;
    const auto &r = result.report;
    ordered_json j;
    j["format"] = "ihope.report";
    j["version"] = 1;
    ordered_json s;
    s["kind"] = to_string(spec.kind);
    s["feature_policy"] = to_string(spec.feature_policy);
    s["personalization"] = to_string(spec.personalization);
    if (spec.cv.kind == CvScheme::Kind::KFold) {
        s["cv"] = {{"kind", "kfold"}, {"folds", spec.cv.folds}};
    } else {
        s["cv"] = {{"kind", "holdout"}, {"test_fraction", spec.cv.test_fraction}};
    }
    if (spec.feature_policy == FeaturePolicy::TopFraction) s["top_fraction"] = spec.top_fraction;
    if (!spec.features.empty()) s["features"] = spec.features;
    s["seed"] = spec.seed;
    j["spec"] = std::move(s);
    j["input_features"] = result.input_features;
    j["accuracy"] = r.accuracy;
    j["macro_f1"] = r.macro_f1();
    j["n_test"] = r.n_test;
    j["n_correct"] = r.n_correct;
    ordered_json classes = ordered_json::array();
    for (auto c : kAllCategories) {
        const auto &m = r.per_class[index_of(c)];
        classes.push_back({{"category", to_string(c)},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"predicted", m.predicted},
                           {"precision_undefined", m.precision_undefined},
                           {"recall_undefined", m.recall_undefined}});
    }
    j["per_class"] = std::move(classes);
    j["confusion_counts"] = r.confusion_counts;
    j["confusion"] = r.confusion;
    if (!r.per_user.empty()) {
        ordered_json users = ordered_json::array();
        for (const auto &u : r.per_user) {
            users.push_back({{"user_id", u.user_id}, {"n_test", u.n_test}, {"n_correct", u.n_correct}, {"accuracy", u.accuracy}});
        }
        j["per_user"] = std::move(users);
    }
    j["cv"] = {{"fold_accuracies", result.fold_accuracies},
               {"best_fold", result.best_fold},
               {"mean_accuracy", result.mean_fold_accuracy()}};
    return j.dump(2) + "\n";
}

void write_report_csv(std::ostream &out, const PipelineResult &result) {
    const auto &r = result.report;
    out << "section,key,class,value\n";
    out << fmt::format("overall,accuracy,,{}\n", r.accuracy);
    out << fmt::format("overall,macro_f1,,{}\n", r.macro_f1());
    out << fmt::format("overall,n_test,,{}\n", r.n_test);
    out << fmt::format("overall,cv_mean_accuracy,,{}\n", result.mean_fold_accuracy());
    for (auto c : kAllCategories) {
        const auto &m = r.per_class[index_of(c)];
        const auto name = to_string(c);
        out << fmt::format("class,precision,{},{}\n", name, m.precision);
        out << fmt::format("class,recall,{},{}\n", name, m.recall);
        out << fmt::format("class,f1,{},{}\n", name, m.f1);
        out << fmt::format("class,support,{},{}\n", name, m.support);
    }
    for (auto t : kAllCategories) {
        for (auto p : kAllCategories) {
            out << fmt::format("confusion,{},{},{}\n", to_string(p), to_string(t), r.confusion[index_of(t)][index_of(p)]);
        }
    }
    for (const auto &u : r.per_user) out << fmt::format("user,accuracy,{},{}\n", u.user_id, u.accuracy);
}

}  // namespace ihope
